//! Traffic profile: the site-specific table mapping traffic classes to
//! networks, ports, protocols and default priorities, plus the keyword
//! matching that selects which classes an intent talks about.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{Ipv4Cidr, PortRange, Priority, Protocol};

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("failed to read profile: {0}")]
    Io(#[from] std::io::Error),
    #[error("profile is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("intent text is empty")]
    EmptyIntent,
}

/// One traffic class the site knows how to classify.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileEntry {
    pub class: String,
    pub subnet: Ipv4Cidr,
    pub dst_ports: PortRange,
    pub protocol: Protocol,
    pub priority: Priority,
    pub keywords: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrafficProfile {
    pub entries: Vec<ProfileEntry>,
}

#[derive(Serialize, Deserialize)]
struct RawEntry {
    class: String,
    subnet: String,
    dst_ports: [u16; 2],
    protocol: String,
    priority: String,
    keywords: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct RawProfile {
    entries: Vec<RawEntry>,
}

impl TrafficProfile {
    /// Built-in profile covering the classes the default deployment talks
    /// about. Sites override it with their own JSON file.
    pub fn default_profile() -> Self {
        let entry = |class: &str,
                     subnet: &str,
                     lo: u16,
                     hi: u16,
                     protocol: Protocol,
                     priority: Priority,
                     keywords: &[&str]| ProfileEntry {
            class: class.to_string(),
            subnet: subnet.parse().unwrap(),
            dst_ports: PortRange::new(lo, hi).unwrap(),
            protocol,
            priority,
            keywords: keywords.iter().map(|k| k.to_string()).collect(),
        };
        TrafficProfile {
            entries: vec![
                entry(
                    "industrial_robotics",
                    "10.1.1.0/24",
                    502,
                    502,
                    Protocol::Tcp,
                    Priority::High,
                    &["robotics", "robot", "robots", "industrial", "modbus", "plc", "factory", "machinery", "actuator"],
                ),
                entry(
                    "telemetry",
                    "10.1.2.0/24",
                    8000,
                    8100,
                    Protocol::Tcp,
                    Priority::Low,
                    &["telemetry", "sensor", "sensors", "metrics", "logging", "readings", "monitoring"],
                ),
                entry(
                    "iot_alerts",
                    "10.1.3.0/24",
                    30000,
                    50000,
                    Protocol::Udp,
                    Priority::High,
                    &["iot", "alert", "alerts", "alarm", "alarms", "emergency", "fire", "smoke", "intrusion"],
                ),
                entry(
                    "voice",
                    "10.1.4.0/24",
                    16384,
                    32767,
                    Protocol::Udp,
                    Priority::High,
                    &["voice", "voip", "call", "calls", "rtp", "sip", "telephony"],
                ),
                entry(
                    "video",
                    "10.1.5.0/24",
                    554,
                    554,
                    Protocol::Tcp,
                    Priority::High,
                    &["video", "streaming", "stream", "webinar", "cctv", "camera", "cameras"],
                ),
                entry(
                    "elearning",
                    "10.1.6.0/24",
                    443,
                    443,
                    Protocol::Tcp,
                    Priority::High,
                    &["elearning", "learning", "lecture", "lectures", "classroom", "course", "exam", "exams"],
                ),
                entry(
                    "gaming",
                    "10.1.7.0/24",
                    27000,
                    27031,
                    Protocol::Udp,
                    Priority::Low,
                    &["gaming", "game", "games", "esports"],
                ),
            ],
        }
    }

    pub fn from_path(path: &Path) -> Result<Self, ProfileError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// Parse and validate a profile. Violations name the offending field,
    /// e.g. `entries[3].dst_ports`.
    pub fn from_json_str(json: &str) -> Result<Self, ProfileError> {
        let raw: RawProfile = serde_json::from_str(json)?;
        let invalid = |path: String, message: String| ProfileError::Invalid { path, message };
        let mut entries = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, raw_entry) in raw.entries.iter().enumerate() {
            let at = |field: &str| format!("entries[{i}].{field}");
            let class = raw_entry.class.to_ascii_lowercase();
            if class.is_empty() || !class.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(invalid(
                    at("class"),
                    format!("class name `{}` must be alphanumeric/underscore", raw_entry.class),
                ));
            }
            if !seen.insert(class.clone()) {
                return Err(invalid(at("class"), format!("duplicate class `{class}`")));
            }
            let subnet: Ipv4Cidr = raw_entry
                .subnet
                .parse()
                .map_err(|e| invalid(at("subnet"), format!("{e}")))?;
            let [lo, hi] = raw_entry.dst_ports;
            let dst_ports =
                PortRange::new(lo, hi).map_err(|e| invalid(at("dst_ports"), format!("{e}")))?;
            let protocol: Protocol =
                raw_entry.protocol.parse().map_err(|e| invalid(at("protocol"), e))?;
            let priority: Priority =
                raw_entry.priority.parse().map_err(|e| invalid(at("priority"), e))?;
            if raw_entry.keywords.is_empty() {
                return Err(invalid(at("keywords"), "must not be empty".to_string()));
            }
            let mut keywords = Vec::new();
            for (k, keyword) in raw_entry.keywords.iter().enumerate() {
                let lower = keyword.to_ascii_lowercase();
                if lower.is_empty() || !lower.chars().all(|c| c.is_ascii_alphanumeric()) {
                    return Err(invalid(
                        format!("entries[{i}].keywords[{k}]"),
                        format!("keyword `{keyword}` must be a single alphanumeric word"),
                    ));
                }
                keywords.push(lower);
            }
            entries.push(ProfileEntry { class, subnet, dst_ports, protocol, priority, keywords });
        }
        Ok(TrafficProfile { entries })
    }

    pub fn to_json_string(&self) -> String {
        let raw = RawProfile {
            entries: self
                .entries
                .iter()
                .map(|e| RawEntry {
                    class: e.class.clone(),
                    subnet: e.subnet.to_string(),
                    dst_ports: [e.dst_ports.low(), e.dst_ports.high()],
                    protocol: e.protocol.to_string(),
                    priority: e.priority.to_string(),
                    keywords: e.keywords.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("profile serializes")
    }

    pub fn entry(&self, class: &str) -> Option<&ProfileEntry> {
        self.entries.iter().find(|e| e.class == class)
    }
}

const STOP_WORDS: &[&str] = &[
    "a", "about", "all", "an", "and", "any", "are", "as", "at", "be", "been", "but", "by", "can",
    "do", "does", "down", "during", "ensure", "for", "from", "get", "give", "has", "have", "if",
    "in", "into", "is", "it", "its", "keep", "make", "may", "more", "most", "must", "need",
    "needs", "no", "not", "of", "on", "or", "our", "out", "over", "set", "should", "so", "some",
    "than", "that", "the", "their", "them", "then", "there", "these", "they", "this", "to",
    "traffic", "under", "up", "use", "we", "when", "while", "will", "with", "would",
];

/// Keyword set of an intent: lowercase maximal alphanumeric runs minus stop
/// words. Empty or all-whitespace input is an error; an intent made only of
/// stop words yields an empty set.
pub fn keywords(intent: &str) -> Result<BTreeSet<String>, ProfileError> {
    if intent.trim().is_empty() {
        return Err(ProfileError::EmptyIntent);
    }
    let mut out = BTreeSet::new();
    let mut current = String::new();
    for ch in intent.chars() {
        if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
        } else if !current.is_empty() {
            if !STOP_WORDS.contains(&current.as_str()) {
                out.insert(std::mem::take(&mut current));
            } else {
                current.clear();
            }
        }
    }
    if !current.is_empty() && !STOP_WORDS.contains(&current.as_str()) {
        out.insert(current);
    }
    Ok(out)
}

/// Entries whose keyword lists intersect the intent's keywords, in profile
/// order.
pub fn profile_filter<'a>(
    profile: &'a TrafficProfile,
    intent: &str,
) -> Result<Vec<&'a ProfileEntry>, ProfileError> {
    let intent_keywords = keywords(intent)?;
    Ok(profile
        .entries
        .iter()
        .filter(|e| e.keywords.iter().any(|k| intent_keywords.contains(k.as_str())))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keywords_drop_stop_words() {
        let set = keywords("Prioritize voice traffic for the support team during peak hours")
            .unwrap();
        assert!(set.contains("voice"));
        assert!(set.contains("prioritize"));
        assert!(!set.contains("for"));
        assert!(!set.contains("during"));
        assert!(!set.contains("the"));
        assert!(!set.contains("traffic"));
    }

    #[test]
    fn empty_intent_is_an_error() {
        assert!(matches!(keywords("   "), Err(ProfileError::EmptyIntent)));
        // All stop words is fine, just an empty set.
        assert!(keywords("for the during").unwrap().is_empty());
    }

    #[test]
    fn filter_returns_entries_in_profile_order() {
        let profile = TrafficProfile::default_profile();
        let hits =
            profile_filter(&profile, "route sensor telemetry below the voice calls").unwrap();
        let classes: Vec<&str> = hits.iter().map(|e| e.class.as_str()).collect();
        assert_eq!(classes, vec!["telemetry", "voice"]);
    }

    #[test]
    fn filter_misses_yield_empty() {
        let profile = TrafficProfile::default_profile();
        assert!(profile_filter(&profile, "reticulate the splines").unwrap().is_empty());
    }

    #[test]
    fn profile_round_trips_through_json() {
        let profile = TrafficProfile::default_profile();
        let json = profile.to_json_string();
        let back = TrafficProfile::from_json_str(&json).unwrap();
        assert_eq!(profile, back);
    }

    #[test]
    fn validation_reports_field_paths() {
        let json = r#"{"entries": [
            {"class": "voice", "subnet": "10.1.4.0/24", "dst_ports": [16384, 32767],
             "protocol": "udp", "priority": "high", "keywords": ["voice"]},
            {"class": "broken", "subnet": "10.1.9.0/24", "dst_ports": [9000, 8000],
             "protocol": "tcp", "priority": "low", "keywords": ["x"]}
        ]}"#;
        let err = TrafficProfile::from_json_str(json).unwrap_err();
        assert!(err.to_string().starts_with("entries[1].dst_ports"), "got: {err}");
    }

    #[test]
    fn duplicate_classes_are_rejected() {
        let json = r#"{"entries": [
            {"class": "voice", "subnet": "10.1.4.0/24", "dst_ports": [1, 2],
             "protocol": "udp", "priority": "high", "keywords": ["voice"]},
            {"class": "voice", "subnet": "10.1.5.0/24", "dst_ports": [1, 2],
             "protocol": "udp", "priority": "high", "keywords": ["voip"]}
        ]}"#;
        let err = TrafficProfile::from_json_str(json).unwrap_err();
        assert!(err.to_string().contains("duplicate class"));
    }

    #[test]
    fn default_entries_pin_expected_values() {
        let profile = TrafficProfile::default_profile();
        let voice = profile.entry("voice").unwrap();
        assert_eq!(voice.subnet.to_string(), "10.1.4.0/24");
        assert_eq!(voice.dst_ports, PortRange::new(16384, 32767).unwrap());
        assert_eq!(voice.protocol, Protocol::Udp);
        let robots = profile.entry("industrial_robotics").unwrap();
        assert_eq!(robots.dst_ports, PortRange::single(502));
        assert_eq!(robots.priority, Priority::High);
    }
}
