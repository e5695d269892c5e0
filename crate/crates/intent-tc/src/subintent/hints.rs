//! Deterministic heuristics for reading quantities out of intent prose:
//! class mentions, priority cues, time windows, bandwidth and latency
//! figures. The mock language model and the benchmark reference builder
//! share these so that a clean mock run reproduces the references exactly.

use std::sync::OnceLock;

use regex::Regex;

use super::{BoundOp, BoundUnit, Metric, SubIntent};
use crate::traffic_profile::{profile_filter, ProfileEntry, TrafficProfile};
use crate::types::{round_sig, Priority, Protocol, TimeOfDay};

/// Lowercase alphanumeric word sequence, positions preserved.
fn tokens(text: &str) -> Vec<String> {
    let mut words = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
        } else if !current.is_empty() {
            words.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        words.push(current);
    }
    words
}

/// Classes of the built-in profile whose keywords appear in the intent, in
/// profile order.
pub fn lexicon_classes(intent: &str) -> Vec<String> {
    let profile = TrafficProfile::default_profile();
    match profile_filter(&profile, intent) {
        Ok(entries) => entries.iter().map(|e| e.class.clone()).collect(),
        Err(_) => Vec::new(),
    }
}

/// Words that turn `high`/`low` into a metric qualifier rather than a
/// priority cue, as in "low latency" or "high bandwidth".
fn qualifies_metric(word: &str) -> bool {
    matches!(word, "latency" | "delay" | "lag" | "jitter" | "bandwidth" | "throughput" | "load")
}

/// Priority of the class whose trigger words are given, judged from cue
/// words near the first mention. `A over B` ranks A high and B low.
pub fn infer_priority(intent: &str, triggers: &[String]) -> Option<Priority> {
    let words = tokens(intent);
    let mention = words.iter().position(|w| triggers.iter().any(|t| t == w))?;
    if let Some(over) = words.iter().position(|w| w == "over") {
        if mention < over && over - mention <= 3 {
            return Some(Priority::High);
        }
        if mention > over && mention - over <= 3 {
            return Some(Priority::Low);
        }
    }
    let lo = mention.saturating_sub(3);
    let hi = (mention + 4).min(words.len());
    for i in lo..hi {
        let word = words[i].as_str();
        let next = words.get(i + 1).map(String::as_str).unwrap_or("");
        match word {
            "prioritize" | "prioritise" | "prioritized" | "critical" | "urgent" | "important"
            | "prefer" | "favor" | "guarantee" | "guaranteed" | "first" => {
                return Some(Priority::High)
            }
            "high" | "highest" | "top" if !qualifies_metric(next) => return Some(Priority::High),
            "deprioritize" | "deprioritise" | "background" | "secondary" | "throttle"
            | "yield" => return Some(Priority::Low),
            "low" | "lower" | "lowest" if !qualifies_metric(next) => return Some(Priority::Low),
            _ => {}
        }
    }
    None
}

fn clock_range_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?i)\b(?:from|between)\s+(\d{1,2}(?::\d{2})?)\s*(am|pm)?\s+(?:to|until|till|and)\s+(\d{1,2}(?::\d{2})?)\s*(am|pm)?\b",
        )
        .unwrap()
    })
}

fn bare_range_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(\d{1,2}:\d{2})\s*(?:-|–|to)\s*(\d{1,2}:\d{2})").unwrap()
    })
}

fn clock_part(figure: &str, ampm: Option<&str>) -> Option<TimeOfDay> {
    let (h, m) = match figure.split_once(':') {
        Some((h, m)) => (h, m),
        None => (figure, "0"),
    };
    let mut hour: u8 = h.parse().ok()?;
    let minute: u8 = m.parse().ok()?;
    match ampm.map(str::to_ascii_lowercase).as_deref() {
        Some("am") => {
            if hour == 12 {
                hour = 0;
            }
        }
        Some("pm") => {
            if hour != 12 {
                hour = hour.checked_add(12)?;
            }
        }
        _ => {}
    }
    TimeOfDay::new(hour, minute).ok()
}

const NAMED_WINDOWS: &[(&str, (u8, u8), (u8, u8))] = &[
    ("overnight", (22, 0), (6, 0)),
    ("at night", (22, 0), (6, 0)),
    ("during the night", (22, 0), (6, 0)),
    ("evening", (18, 0), (23, 0)),
    ("business hours", (9, 0), (17, 0)),
    ("working hours", (9, 0), (17, 0)),
    ("office hours", (9, 0), (17, 0)),
    ("school hours", (8, 0), (15, 0)),
];

/// Enforcement window mentioned in the intent: explicit clock ranges
/// (24h or am/pm) or one of a few named periods. A range without either a
/// colon or an am/pm marker is ignored so figures like "between 2 and 5
/// Mbps" are not mistaken for times.
pub fn infer_window(intent: &str) -> Option<(TimeOfDay, TimeOfDay)> {
    if let Some(caps) = clock_range_regex().captures(intent) {
        let suffix1 = caps.get(2).map(|m| m.as_str());
        let suffix2 = caps.get(4).map(|m| m.as_str());
        let clocklike =
            caps[1].contains(':') || caps[3].contains(':') || suffix1.is_some() || suffix2.is_some();
        if clocklike {
            if let (Some(start), Some(end)) =
                (clock_part(&caps[1], suffix1), clock_part(&caps[3], suffix2))
            {
                return Some((start, end));
            }
        }
    }
    if let Some(caps) = bare_range_regex().captures(intent) {
        if let (Some(start), Some(end)) = (clock_part(&caps[1], None), clock_part(&caps[2], None)) {
            return Some((start, end));
        }
    }
    let lower = intent.to_lowercase();
    for (phrase, (sh, sm), (eh, em)) in NAMED_WINDOWS {
        if lower.contains(phrase) {
            return Some((
                TimeOfDay::new(*sh, *sm).unwrap(),
                TimeOfDay::new(*eh, *em).unwrap(),
            ));
        }
    }
    None
}

fn bandwidth_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\b(\d+(?:\.\d+)?)\s*(kbit/s|kbit|kbps|kb/s|mbit/s|mbit|mbps|mb/s)").unwrap()
    })
}

/// Bandwidth bound mentioned in the intent. Cap phrasing ("limit to",
/// "at most") yields a `<=` bound, anything else a `>=` guarantee.
pub fn infer_bandwidth(intent: &str) -> Option<SubIntent> {
    let caps = bandwidth_regex().captures(intent)?;
    let value: f64 = caps[1].parse().ok()?;
    let unit = if caps[2].to_ascii_lowercase().starts_with('k') {
        BoundUnit::Kbit
    } else {
        BoundUnit::Mbit
    };
    let before = tokens(&intent[..caps.get(1).unwrap().start()]);
    let cap_cue = before
        .iter()
        .rev()
        .take(4)
        .any(|w| matches!(w.as_str(), "cap" | "capped" | "limit" | "limited" | "most" | "max" | "maximum" | "under" | "below" | "exceed"));
    let op = if cap_cue { BoundOp::Le } else { BoundOp::Ge };
    Some(SubIntent::MetricBound { metric: Metric::Bandwidth, op, value, unit })
}

fn latency_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\b(\d+(?:\.\d+)?)\s*(ms\b|milliseconds?\b|s\b|seconds?\b)").unwrap()
    })
}

fn latency_cue(intent: &str) -> bool {
    let lower = intent.to_lowercase();
    ["latency", "delay", "lag", "response", "jitter", "real-time", "realtime"]
        .iter()
        .any(|cue| lower.contains(cue))
}

/// Latency figure in seconds, when the intent both talks about delay and
/// names a duration.
pub fn infer_latency_seconds(intent: &str) -> Option<f64> {
    if !latency_cue(intent) {
        return None;
    }
    let caps = latency_regex().captures(intent)?;
    let value: f64 = caps[1].parse().ok()?;
    if caps[2].to_ascii_lowercase().starts_with('m') {
        Some(value / 1000.0)
    } else {
        Some(value)
    }
}

fn loss_cue(intent: &str) -> bool {
    let lower = intent.to_lowercase();
    ["loss", "drop", "reliab"].iter().any(|cue| lower.contains(cue))
}

fn percent_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(\d+(?:\.\d+)?)\s*%").unwrap())
}

/// Loss figure in percent, when the intent talks about drops or loss.
pub fn infer_loss_percent(intent: &str) -> Option<f64> {
    if !loss_cue(intent) {
        return None;
    }
    percent_regex().captures(intent).and_then(|caps| caps[1].parse().ok())
}

/// Bound statement for a certified model threshold. Wait metrics keep the
/// model's seconds; drop fractions are shown as percent.
pub fn threshold_bound(metric: Metric, model_value: f64) -> SubIntent {
    if metric.is_drop() {
        SubIntent::MetricBound {
            metric,
            op: BoundOp::Le,
            value: round_sig(model_value * 100.0, 9),
            unit: BoundUnit::Percent,
        }
    } else {
        SubIntent::MetricBound {
            metric,
            op: BoundOp::Le,
            value: model_value,
            unit: BoundUnit::Seconds,
        }
    }
}

/// Draft the full sub-intent set for an intent: certified bounds when the
/// caller has them (else figures read from the prose), one priority and one
/// match directive per known class, and the window if any.
pub fn draft_subintents(
    intent: &str,
    entries: &[&ProfileEntry],
    threshold_bounds: &[SubIntent],
) -> Vec<SubIntent> {
    let mut items: Vec<SubIntent> = Vec::new();
    if threshold_bounds.is_empty() {
        if let Some(secs) = infer_latency_seconds(intent) {
            items.push(SubIntent::MetricBound {
                metric: Metric::AvgWaitHigh,
                op: BoundOp::Le,
                value: secs,
                unit: BoundUnit::Seconds,
            });
        } else if latency_cue(intent) {
            items.push(SubIntent::MetricBound {
                metric: Metric::AvgWaitHigh,
                op: BoundOp::Le,
                value: 0.13,
                unit: BoundUnit::Seconds,
            });
        }
        if let Some(pct) = infer_loss_percent(intent) {
            items.push(SubIntent::MetricBound {
                metric: Metric::DropRateLow,
                op: BoundOp::Le,
                value: pct,
                unit: BoundUnit::Percent,
            });
        } else if loss_cue(intent) {
            items.push(SubIntent::MetricBound {
                metric: Metric::DropRateLow,
                op: BoundOp::Le,
                value: 5.0,
                unit: BoundUnit::Percent,
            });
        }
    } else {
        items.extend(threshold_bounds.iter().cloned());
    }
    if let Some(bw) = infer_bandwidth(intent) {
        items.push(bw);
    }

    let classes: Vec<ProfileEntry> = if entries.is_empty() {
        let profile = TrafficProfile::default_profile();
        lexicon_classes(intent)
            .iter()
            .filter_map(|name| profile.entry(name).cloned())
            .collect()
    } else {
        entries.iter().map(|e| (*e).clone()).collect()
    };
    for entry in &classes {
        let level = infer_priority(intent, &entry.keywords).unwrap_or(entry.priority);
        items.push(SubIntent::PriorityDirective { class: entry.class.clone(), level });
    }
    for entry in &classes {
        let protocol = match entry.protocol {
            Protocol::Any => None,
            p => Some(p),
        };
        items.push(SubIntent::MatchDirective {
            class: entry.class.clone(),
            cidr: Some(entry.subnet),
            ports: Some(entry.dst_ports),
            protocol,
        });
    }
    if let Some((start, end)) = infer_window(intent) {
        items.push(SubIntent::TimeWindow { start, end });
    }
    items
}
