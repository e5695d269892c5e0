//! AST for the supported `tc` subset and its canonical text form.
//!
//! The subset covers htb hierarchies, netem delay/loss, fifo leaves and u32
//! classifiers. Serialization is canonical: one statement per line, fixed
//! token order, lowercase hex masks, filter matches ordered src, dst,
//! dport, sport, protocol, and a trailing newline when non-empty.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::types::{Ipv4Cidr, TimeOfDay};

/// Qdisc or class identifier, `major:minor` with both parts hexadecimal.
/// `1:` (no minor) and `1:0` name the same node but round-trip as written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Handle {
    pub major: u16,
    pub minor: Option<u16>,
}

impl Handle {
    /// Bare qdisc handle `major:`.
    pub fn qdisc(major: u16) -> Self {
        Self { major, minor: None }
    }

    /// Class handle `major:minor`.
    pub fn class(major: u16, minor: u16) -> Self {
        Self { major, minor: Some(minor) }
    }

    /// True when this handle names the given node regardless of whether the
    /// minor was written out (`1:` matches `1:0` and vice versa).
    pub fn same_node(&self, other: &Handle) -> bool {
        self.major == other.major && self.minor.unwrap_or(0) == other.minor.unwrap_or(0)
    }
}

impl fmt::Display for Handle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.minor {
            Some(minor) => write!(f, "{:x}:{:x}", self.major, minor),
            None => write!(f, "{:x}:", self.major),
        }
    }
}

impl FromStr for Handle {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("invalid handle `{s}`");
        let (major, minor) = s.split_once(':').ok_or_else(bad)?;
        let major = u16::from_str_radix(major, 16).map_err(|_| bad())?;
        let minor = if minor.is_empty() {
            None
        } else {
            Some(u16::from_str_radix(minor, 16).map_err(|_| bad())?)
        };
        Ok(Handle { major, minor })
    }
}

/// Attachment point of a qdisc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parent {
    Root,
    Node(Handle),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RateUnit {
    Kbit,
    Mbit,
}

impl fmt::Display for RateUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateUnit::Kbit => write!(f, "kbit"),
            RateUnit::Mbit => write!(f, "mbit"),
        }
    }
}

/// Bandwidth figure that remembers how it was written, so `1mbit` and
/// `1000kbit` stay textually distinct while comparing equal numerically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rate {
    pub value: u64,
    pub unit: RateUnit,
}

impl Rate {
    pub fn from_kbit(kbit: u64) -> Self {
        Self { value: kbit, unit: RateUnit::Kbit }
    }

    pub fn kbit(&self) -> u64 {
        match self.unit {
            RateUnit::Kbit => self.value,
            RateUnit::Mbit => self.value * 1000,
        }
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.value, self.unit)
    }
}

impl FromStr for Rate {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("invalid rate `{s}`");
        let lower = s.to_ascii_lowercase();
        let (digits, unit) = if let Some(d) = lower.strip_suffix("kbit") {
            (d, RateUnit::Kbit)
        } else if let Some(d) = lower.strip_suffix("mbit") {
            (d, RateUnit::Mbit)
        } else {
            return Err(bad());
        };
        let value: u64 = digits.parse().map_err(|_| bad())?;
        Ok(Rate { value, unit })
    }
}

/// Packet-loss percentage stored in tenths of a percent, so `2.8%` is
/// exactly 28 and no float comparison is ever needed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LossPct(pub u32);

impl LossPct {
    /// Nearest representable loss for a fractional percentage.
    pub fn from_percent(pct: f64) -> Self {
        Self((pct * 10.0).round().max(0.0) as u32)
    }

    pub fn percent(&self) -> f64 {
        self.0 as f64 / 10.0
    }
}

impl fmt::Display for LossPct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 10 == 0 {
            write!(f, "{}%", self.0 / 10)
        } else {
            write!(f, "{}.{}%", self.0 / 10, self.0 % 10)
        }
    }
}

impl FromStr for LossPct {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("invalid loss `{s}`");
        let digits = s.strip_suffix('%').ok_or_else(bad)?;
        let pct: f64 = digits.parse().map_err(|_| bad())?;
        if !pct.is_finite() || pct < 0.0 {
            return Err(bad());
        }
        Ok(LossPct::from_percent(pct))
    }
}

/// Queueing discipline with its parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QdiscKind {
    Htb { default: Option<u16> },
    Netem { delay_ms: Option<u64>, loss: Option<LossPct> },
    Bfifo { limit_bytes: u64 },
    Pfifo { limit_packets: Option<u32> },
}

impl fmt::Display for QdiscKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QdiscKind::Htb { default } => {
                write!(f, "htb")?;
                if let Some(minor) = default {
                    write!(f, " default {minor:x}")?;
                }
                Ok(())
            }
            QdiscKind::Netem { delay_ms, loss } => {
                write!(f, "netem")?;
                if let Some(ms) = delay_ms {
                    write!(f, " delay {ms}ms")?;
                }
                if let Some(loss) = loss {
                    write!(f, " loss {loss}")?;
                }
                Ok(())
            }
            QdiscKind::Bfifo { limit_bytes } => write!(f, "bfifo limit {limit_bytes}b"),
            QdiscKind::Pfifo { limit_packets } => {
                write!(f, "pfifo")?;
                if let Some(n) = limit_packets {
                    write!(f, " limit {n}")?;
                }
                Ok(())
            }
        }
    }
}

/// One u32 classifier selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum U32Match {
    SrcIp(Ipv4Cidr),
    DstIp(Ipv4Cidr),
    Dport { port: u16, mask: u16 },
    Sport { port: u16, mask: u16 },
    Protocol { number: u8, mask: u8 },
}

impl U32Match {
    /// Canonical ordering rank within a filter line.
    pub fn rank(&self) -> u8 {
        match self {
            U32Match::SrcIp(_) => 0,
            U32Match::DstIp(_) => 1,
            U32Match::Dport { .. } => 2,
            U32Match::Sport { .. } => 3,
            U32Match::Protocol { .. } => 4,
        }
    }

    /// True for selectors that match every packet, like `src 0.0.0.0/0`.
    pub fn is_unrestricted(&self) -> bool {
        match self {
            U32Match::SrcIp(c) | U32Match::DstIp(c) => c.is_unrestricted(),
            U32Match::Dport { mask, .. } | U32Match::Sport { mask, .. } => *mask == 0,
            U32Match::Protocol { mask, .. } => *mask == 0,
        }
    }
}

impl fmt::Display for U32Match {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            U32Match::SrcIp(cidr) => write!(f, "match ip src {cidr}"),
            U32Match::DstIp(cidr) => write!(f, "match ip dst {cidr}"),
            U32Match::Dport { port, mask } => write!(f, "match ip dport {port} 0x{mask:04x}"),
            U32Match::Sport { port, mask } => write!(f, "match ip sport {port} 0x{mask:04x}"),
            U32Match::Protocol { number, mask } => {
                write!(f, "match ip protocol {number} 0x{mask:02x}")
            }
        }
    }
}

/// One `tc ... add` statement. Tokens the parser did not recognize are kept
/// verbatim in `extras` and re-emitted at the end of the line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TcStatement {
    QdiscAdd {
        dev: String,
        parent: Parent,
        handle: Handle,
        kind: QdiscKind,
        extras: Vec<String>,
    },
    ClassAdd {
        dev: String,
        parent: Handle,
        classid: Handle,
        rate: Rate,
        ceil: Option<Rate>,
        extras: Vec<String>,
    },
    FilterAdd {
        dev: String,
        parent: Handle,
        protocol: String,
        prio: u32,
        matches: Vec<U32Match>,
        flowid: Handle,
        extras: Vec<String>,
    },
}

impl TcStatement {
    pub fn dev(&self) -> &str {
        match self {
            TcStatement::QdiscAdd { dev, .. }
            | TcStatement::ClassAdd { dev, .. }
            | TcStatement::FilterAdd { dev, .. } => dev,
        }
    }

    pub fn set_dev(&mut self, name: &str) {
        match self {
            TcStatement::QdiscAdd { dev, .. }
            | TcStatement::ClassAdd { dev, .. }
            | TcStatement::FilterAdd { dev, .. } => *dev = name.to_string(),
        }
    }
}

fn push_extras(line: &mut String, extras: &[String]) {
    for extra in extras {
        line.push(' ');
        line.push_str(extra);
    }
}

impl fmt::Display for TcStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TcStatement::QdiscAdd { dev, parent, handle, kind, extras } => {
                let mut line = format!("tc qdisc add dev {dev} ");
                match parent {
                    Parent::Root => line.push_str("root"),
                    Parent::Node(h) => line.push_str(&format!("parent {h}")),
                }
                line.push_str(&format!(" handle {handle} {kind}"));
                push_extras(&mut line, extras);
                f.write_str(&line)
            }
            TcStatement::ClassAdd { dev, parent, classid, rate, ceil, extras } => {
                let mut line =
                    format!("tc class add dev {dev} parent {parent} classid {classid} htb rate {rate}");
                if let Some(ceil) = ceil {
                    line.push_str(&format!(" ceil {ceil}"));
                }
                push_extras(&mut line, extras);
                f.write_str(&line)
            }
            TcStatement::FilterAdd { dev, parent, protocol, prio, matches, flowid, extras } => {
                let mut line = format!(
                    "tc filter add dev {dev} protocol {protocol} parent {parent} prio {prio} u32"
                );
                let mut ordered: Vec<&U32Match> = matches.iter().collect();
                ordered.sort_by_key(|m| m.rank());
                for m in ordered {
                    line.push_str(&format!(" {m}"));
                }
                line.push_str(&format!(" flowid {flowid}"));
                push_extras(&mut line, extras);
                f.write_str(&line)
            }
        }
    }
}

/// Comment attached to the script. `position` is the index of the statement
/// the comment precedes; `statements.len()` places it after the last one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub kind: AnnotationKind,
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnnotationKind {
    /// Enforcement window, rendered `# enforce from HH:MM to HH:MM`. The
    /// window may wrap midnight.
    TimeWindow { start: TimeOfDay, end: TimeOfDay },
    /// Any other comment, kept verbatim.
    Note(String),
}

impl Annotation {
    pub fn line(&self) -> String {
        match &self.kind {
            AnnotationKind::TimeWindow { start, end } => {
                format!("# enforce from {start} to {end}")
            }
            AnnotationKind::Note(text) if text.is_empty() => "#".to_string(),
            AnnotationKind::Note(text) => format!("# {text}"),
        }
    }
}

/// A parsed `tc` script: ordered statements plus the comments between them.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TcConfig {
    pub statements: Vec<TcStatement>,
    pub annotations: Vec<Annotation>,
}

impl TcConfig {
    /// Device all statements apply to, when there is at least one
    /// statement. The parser rejects scripts that mix devices.
    pub fn device(&self) -> Option<&str> {
        self.statements.first().map(|s| s.dev())
    }

    /// First enforcement-window annotation, if any.
    pub fn window(&self) -> Option<(TimeOfDay, TimeOfDay)> {
        self.annotations.iter().find_map(|a| match a.kind {
            AnnotationKind::TimeWindow { start, end } => Some((start, end)),
            AnnotationKind::Note(_) => None,
        })
    }

    /// Canonical text form. Statements keep their order; annotations are
    /// interleaved at their recorded positions.
    pub fn to_script(&self) -> String {
        let n = self.statements.len();
        let mut buckets: Vec<Vec<&Annotation>> = vec![Vec::new(); n + 1];
        for a in &self.annotations {
            buckets[a.position.min(n)].push(a);
        }
        let mut out = String::new();
        for (i, stmt) in self.statements.iter().enumerate() {
            for a in &buckets[i] {
                out.push_str(&a.line());
                out.push('\n');
            }
            out.push_str(&stmt.to_string());
            out.push('\n');
        }
        for a in &buckets[n] {
            out.push_str(&a.line());
            out.push('\n');
        }
        out
    }

    /// Semantic units carried by this configuration; see
    /// [`super::semantic_units`].
    pub fn semantic_units(&self) -> BTreeSet<String> {
        super::units::semantic_units(self)
    }
}

impl fmt::Display for Parent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parent::Root => write!(f, "root"),
            Parent::Node(h) => write!(f, "{h}"),
        }
    }
}

impl fmt::Display for TcConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_script())
    }
}
