//! The canonical sub-intent language: a small, closed grammar sitting
//! between a natural-language intent and a `tc` configuration.
//!
//! Four statement forms, one per line:
//!
//! ```text
//! avg_wait_high <= 0.142s
//! assign_priority(voice, high)
//! match(voice, 10.1.4.0/24, 16384-32767, udp)
//! window(20:00, 01:00)
//! ```
//!
//! Extraction ([`parse_subintents`]) is total: lines that are not valid
//! statements become warnings, never errors, because the input is model
//! output and the critic decides what to do with a thin harvest.

pub mod hints;

use std::fmt;
use std::sync::OnceLock;

use regex::Regex;

use crate::types::{fmt_num, Ipv4Cidr, PortRange, Priority, Protocol, TimeOfDay};

/// Quantities a bound may constrain. The first four are certified by the
/// queue twin; bandwidth is realized as an htb rate or ceil.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    AvgWaitHigh,
    AvgWaitLow,
    DropRateHigh,
    DropRateLow,
    Bandwidth,
}

impl Metric {
    pub const MODEL_METRICS: [Metric; 4] =
        [Metric::AvgWaitHigh, Metric::AvgWaitLow, Metric::DropRateHigh, Metric::DropRateLow];

    pub fn name(self) -> &'static str {
        match self {
            Metric::AvgWaitHigh => "avg_wait_high",
            Metric::AvgWaitLow => "avg_wait_low",
            Metric::DropRateHigh => "drop_rate_high",
            Metric::DropRateLow => "drop_rate_low",
            Metric::Bandwidth => "bandwidth",
        }
    }

    pub fn is_wait(self) -> bool {
        matches!(self, Metric::AvgWaitHigh | Metric::AvgWaitLow)
    }

    pub fn is_drop(self) -> bool {
        matches!(self, Metric::DropRateHigh | Metric::DropRateLow)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundOp {
    Le,
    Ge,
}

impl fmt::Display for BoundOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundOp::Le => write!(f, "<="),
            BoundOp::Ge => write!(f, ">="),
        }
    }
}

/// Unit a bound was written in. `Millis` and `Ratio` are accepted on input
/// but are not canonical; the critic normalizes them to `Seconds` and
/// `Percent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundUnit {
    Seconds,
    Millis,
    Percent,
    Ratio,
    Kbit,
    Mbit,
}

impl fmt::Display for BoundUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundUnit::Seconds => write!(f, "s"),
            BoundUnit::Millis => write!(f, "ms"),
            BoundUnit::Percent => write!(f, "%"),
            BoundUnit::Ratio => Ok(()),
            BoundUnit::Kbit => write!(f, "kbit"),
            BoundUnit::Mbit => write!(f, "mbit"),
        }
    }
}

/// One declarative sub-intent.
#[derive(Debug, Clone, PartialEq)]
pub enum SubIntent {
    /// `<metric> <= <value><unit>` (or `>=` for bandwidth floors).
    MetricBound { metric: Metric, op: BoundOp, value: f64, unit: BoundUnit },
    /// `assign_priority(<class>, <high|low>)`
    PriorityDirective { class: String, level: Priority },
    /// `match(<class>, <cidr>, <ports>, <proto>)`; unspecified fields are
    /// written `*`.
    MatchDirective {
        class: String,
        cidr: Option<Ipv4Cidr>,
        ports: Option<PortRange>,
        protocol: Option<Protocol>,
    },
    /// `window(<HH:MM>, <HH:MM>)`; may wrap midnight.
    TimeWindow { start: TimeOfDay, end: TimeOfDay },
}

impl SubIntent {
    /// Grouping rank used by the canonical ordering: bounds, priorities,
    /// matches, then the window.
    pub fn category_rank(&self) -> u8 {
        match self {
            SubIntent::MetricBound { .. } => 0,
            SubIntent::PriorityDirective { .. } => 1,
            SubIntent::MatchDirective { .. } => 2,
            SubIntent::TimeWindow { .. } => 3,
        }
    }
}

impl fmt::Display for SubIntent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubIntent::MetricBound { metric, op, value, unit } => {
                write!(f, "{metric} {op} {}{unit}", fmt_num(*value))
            }
            SubIntent::PriorityDirective { class, level } => {
                write!(f, "assign_priority({class}, {level})")
            }
            SubIntent::MatchDirective { class, cidr, ports, protocol } => {
                write!(f, "match({class}, ")?;
                match cidr {
                    Some(c) => write!(f, "{c}, ")?,
                    None => write!(f, "*, ")?,
                }
                match ports {
                    Some(p) => write!(f, "{p}, ")?,
                    None => write!(f, "*, ")?,
                }
                match protocol {
                    Some(p) => write!(f, "{p})"),
                    None => write!(f, "*)"),
                }
            }
            SubIntent::TimeWindow { start, end } => write!(f, "window({start}, {end})"),
        }
    }
}

/// Extraction result: the parsed statements in input order plus warnings
/// for everything that was skipped.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SubIntentSet {
    pub items: Vec<SubIntent>,
    pub source_intent: String,
    pub warnings: Vec<String>,
}

impl SubIntentSet {
    pub fn to_text(&self) -> String {
        serialize_subintents(&self.items)
    }
}

fn bound_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?i)^(avg_wait_high|avg_wait_low|drop_rate_high|drop_rate_low|bandwidth)\s*(<=|>=|≤|≥)\s*([0-9]*\.?[0-9]+)\s*(ms|s|%|kbit|mbit|kbps|mbps)?$",
        )
        .unwrap()
    })
}

fn priority_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)^assign_priority\(\s*([a-z0-9_]+)\s*,\s*(high|low)\s*\)$").unwrap()
    })
}

fn match_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)^match\(\s*([a-z0-9_]+)\s*,\s*([^,]+?)\s*,\s*([^,]+?)\s*,\s*([^)]+?)\s*\)$")
            .unwrap()
    })
}

fn window_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)^window\(\s*(\d{1,2}:\d{2})\s*,\s*(\d{1,2}:\d{2})\s*\)$").unwrap()
    })
}

/// Parse a single statement line. Returns `None` when the line is not a
/// valid statement of the grammar.
pub fn parse_line(line: &str) -> Option<SubIntent> {
    let line = line.trim();
    if let Some(caps) = bound_regex().captures(line) {
        let metric = match caps[1].to_ascii_lowercase().as_str() {
            "avg_wait_high" => Metric::AvgWaitHigh,
            "avg_wait_low" => Metric::AvgWaitLow,
            "drop_rate_high" => Metric::DropRateHigh,
            "drop_rate_low" => Metric::DropRateLow,
            _ => Metric::Bandwidth,
        };
        let op = match &caps[2] {
            "<=" | "≤" => BoundOp::Le,
            _ => BoundOp::Ge,
        };
        let value: f64 = caps[3].parse().ok()?;
        let unit = match caps.get(4).map(|m| m.as_str().to_ascii_lowercase()) {
            Some(u) => match u.as_str() {
                "s" => BoundUnit::Seconds,
                "ms" => BoundUnit::Millis,
                "%" => BoundUnit::Percent,
                "kbit" | "kbps" => BoundUnit::Kbit,
                _ => BoundUnit::Mbit,
            },
            None => BoundUnit::Ratio,
        };
        return Some(SubIntent::MetricBound { metric, op, value, unit });
    }
    if let Some(caps) = priority_regex().captures(line) {
        return Some(SubIntent::PriorityDirective {
            class: caps[1].to_ascii_lowercase(),
            level: caps[2].to_ascii_lowercase().parse().ok()?,
        });
    }
    if let Some(caps) = match_regex().captures(line) {
        let star = |s: &str| s == "*";
        let cidr = if star(&caps[2]) { None } else { Some(caps[2].parse().ok()?) };
        let ports = if star(&caps[3]) {
            None
        } else {
            let field = &caps[3];
            let (lo, hi) = match field.split_once('-') {
                Some((lo, hi)) => (lo.trim().parse().ok()?, hi.trim().parse().ok()?),
                None => {
                    let p: u16 = field.trim().parse().ok()?;
                    (p, p)
                }
            };
            Some(PortRange::new(lo, hi).ok()?)
        };
        let proto_field = caps[4].to_ascii_lowercase();
        let protocol = match proto_field.as_str() {
            "*" | "any" => None,
            other => Some(other.parse().ok()?),
        };
        return Some(SubIntent::MatchDirective {
            class: caps[1].to_ascii_lowercase(),
            cidr,
            ports,
            protocol,
        });
    }
    if let Some(caps) = window_regex().captures(line) {
        let start = caps[1].parse().ok()?;
        let end = caps[2].parse().ok()?;
        return Some(SubIntent::TimeWindow { start, end });
    }
    None
}

/// Extract sub-intents from free-form model output. Total: every line
/// either yields a statement or a warning. Exact duplicates collapse with a
/// warning. List markers and trailing punctuation are tolerated.
pub fn parse_subintents(text: &str) -> SubIntentSet {
    let mut set = SubIntentSet::default();
    let mut seen: Vec<String> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let mut line = raw.trim();
        for marker in ["- ", "* ", "• "] {
            if let Some(rest) = line.strip_prefix(marker) {
                line = rest.trim();
                break;
            }
        }
        let line = line.trim_end_matches(['.', ',', ';']).trim();
        if line.is_empty() {
            continue;
        }
        match parse_line(line) {
            Some(item) => {
                let rendered = item.to_string();
                if seen.contains(&rendered) {
                    set.warnings.push(format!("line {}: duplicate `{rendered}` dropped", idx + 1));
                } else {
                    seen.push(rendered);
                    set.items.push(item);
                }
            }
            None => {
                set.warnings.push(format!("line {}: not a sub-intent statement: `{line}`", idx + 1));
            }
        }
    }
    set
}

/// Canonical text form: statements grouped by category (bounds, priorities,
/// matches, window) and sorted within each group, one per line with a
/// trailing newline when non-empty.
pub fn serialize_subintents(items: &[SubIntent]) -> String {
    let mut lines: Vec<(u8, String)> =
        items.iter().map(|i| (i.category_rank(), i.to_string())).collect();
    lines.sort();
    let mut out = String::new();
    for (_, line) in lines {
        out.push_str(&line);
        out.push('\n');
    }
    out
}
