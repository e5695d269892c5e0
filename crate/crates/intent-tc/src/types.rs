//! Shared domain primitives: addresses, port ranges, priorities, clock times.

use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TypeError {
    #[error("invalid IPv4 CIDR `{0}`")]
    InvalidCidr(String),
    #[error("invalid port range: low {0} > high {1}")]
    InvertedPortRange(u16, u16),
    #[error("invalid time of day `{0}` (expected HH:MM, 24h clock)")]
    InvalidTime(String),
}

/// Two-level traffic priority. The queue twin, profile, sub-intents and
/// critic all share this band notion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Priority {
    High,
    Low,
}

impl fmt::Display for Priority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Priority::High => write!(f, "high"),
            Priority::Low => write!(f, "low"),
        }
    }
}

impl FromStr for Priority {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "high" => Ok(Priority::High),
            "low" => Ok(Priority::Low),
            other => Err(format!("unknown priority `{other}`")),
        }
    }
}

/// Transport protocol selector used by profile entries and match directives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Tcp,
    Udp,
    Any,
}

impl Protocol {
    /// IP protocol number for a u32 `match ip protocol` selector.
    /// `Any` has no number and produces no protocol match.
    pub fn number(self) -> Option<u8> {
        match self {
            Protocol::Tcp => Some(6),
            Protocol::Udp => Some(17),
            Protocol::Any => None,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Protocol::Tcp => write!(f, "tcp"),
            Protocol::Udp => write!(f, "udp"),
            Protocol::Any => write!(f, "any"),
        }
    }
}

impl FromStr for Protocol {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tcp" => Ok(Protocol::Tcp),
            "udp" => Ok(Protocol::Udp),
            "any" => Ok(Protocol::Any),
            other => Err(format!("unknown protocol `{other}`")),
        }
    }
}

/// IPv4 network in CIDR notation. The host bits are kept as written, so
/// `10.1.1.5/24` and `10.1.1.0/24` are distinct values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ipv4Cidr {
    pub addr: Ipv4Addr,
    pub prefix_len: u8,
}

impl Ipv4Cidr {
    pub fn new(addr: Ipv4Addr, prefix_len: u8) -> Result<Self, TypeError> {
        if prefix_len > 32 {
            return Err(TypeError::InvalidCidr(format!("{addr}/{prefix_len}")));
        }
        Ok(Self { addr, prefix_len })
    }

    /// True when this network lies entirely within one of the RFC 1918
    /// private blocks (10/8, 172.16/12, 192.168/16).
    pub fn is_rfc1918(&self) -> bool {
        let bits = u32::from(self.addr);
        let within = |block: u32, len: u8| {
            self.prefix_len >= len && (bits >> (32 - len)) == (block >> (32 - len))
        };
        within(u32::from(Ipv4Addr::new(10, 0, 0, 0)), 8)
            || within(u32::from(Ipv4Addr::new(172, 16, 0, 0)), 12)
            || within(u32::from(Ipv4Addr::new(192, 168, 0, 0)), 16)
    }

    /// Catch-all selector (`0.0.0.0/0`).
    pub fn is_unrestricted(&self) -> bool {
        self.prefix_len == 0
    }
}

impl fmt::Display for Ipv4Cidr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.addr, self.prefix_len)
    }
}

impl FromStr for Ipv4Cidr {
    type Err = TypeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TypeError::InvalidCidr(s.to_string());
        let (addr_part, len_part) = match s.split_once('/') {
            Some((a, l)) => (a, Some(l)),
            None => (s, None),
        };
        let addr: Ipv4Addr = addr_part.parse().map_err(|_| bad())?;
        let prefix_len = match len_part {
            Some(l) => l.parse::<u8>().map_err(|_| bad())?,
            None => 32,
        };
        Ipv4Cidr::new(addr, prefix_len)
    }
}

impl Serialize for Ipv4Cidr {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Ipv4Cidr {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Inclusive destination-port range, serialized as a `[low, high]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PortRange(pub u16, pub u16);

impl PortRange {
    pub fn new(low: u16, high: u16) -> Result<Self, TypeError> {
        if low > high {
            return Err(TypeError::InvertedPortRange(low, high));
        }
        Ok(Self(low, high))
    }

    pub fn single(port: u16) -> Self {
        Self(port, port)
    }

    pub fn low(&self) -> u16 {
        self.0
    }

    pub fn high(&self) -> u16 {
        self.1
    }

    pub fn is_single(&self) -> bool {
        self.0 == self.1
    }

    /// A `(value, mask)` pair for a u32 `match ip dport` selector.
    ///
    /// Exact for single ports (mask `0xffff`) and for aligned power-of-two
    /// ranges (e.g. RTP 16384-32767 -> `16384 0xc000`). Ranges that a single
    /// mask cannot express degrade to the base port with a full mask.
    pub fn u32_match(&self) -> (u16, u16) {
        if self.is_single() {
            return (self.0, 0xffff);
        }
        let size = (self.1 - self.0) as u32 + 1;
        if size.is_power_of_two() && (self.0 as u32) % size == 0 {
            let mask = (!(size - 1) & 0xffff) as u16;
            (self.0, mask)
        } else {
            (self.0, 0xffff)
        }
    }
}

impl fmt::Display for PortRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_single() {
            write!(f, "{}", self.0)
        } else {
            write!(f, "{}-{}", self.0, self.1)
        }
    }
}

/// Wall-clock time of day (24h). Windows may wrap midnight, so ordering of
/// start/end is not constrained here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeOfDay {
    pub hour: u8,
    pub minute: u8,
}

impl TimeOfDay {
    pub fn new(hour: u8, minute: u8) -> Result<Self, TypeError> {
        if hour > 23 || minute > 59 {
            return Err(TypeError::InvalidTime(format!("{hour}:{minute:02}")));
        }
        Ok(Self { hour, minute })
    }
}

impl fmt::Display for TimeOfDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}", self.hour, self.minute)
    }
}

impl FromStr for TimeOfDay {
    type Err = TypeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TypeError::InvalidTime(s.to_string());
        let (h, m) = s.trim().split_once(':').ok_or_else(bad)?;
        let hour: u8 = h.parse().map_err(|_| bad())?;
        let minute: u8 = m.parse().map_err(|_| bad())?;
        TimeOfDay::new(hour, minute)
    }
}

impl Serialize for TimeOfDay {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for TimeOfDay {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Round to `sig` significant figures. Used when freezing simulator metrics
/// into semantic-model thresholds.
pub fn round_sig(value: f64, sig: u32) -> f64 {
    if value == 0.0 || !value.is_finite() {
        return value;
    }
    let magnitude = value.abs().log10().floor();
    let factor = 10f64.powf(sig as f64 - 1.0 - magnitude);
    (value * factor).round() / factor
}

/// Shortest decimal representation of a float, e.g. `0.142` not `0.14200`.
/// Rust's `Display` for f64 already produces the shortest round-trippable
/// form; this exists to give the convention a name at call sites.
pub fn fmt_num(value: f64) -> String {
    format!("{value}")
}
