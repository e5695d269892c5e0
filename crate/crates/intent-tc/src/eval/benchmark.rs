//! Benchmark datasets: the case format, a handwritten 20-case mini set,
//! and a seeded template generator for larger runs.
//!
//! References are what a faultless run produces against the bundled
//! reference model: drafted sub-intents certified by the critic, realized
//! into a canonical script for eth0. Every reference parses and lints
//! clean by construction.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::critic::{synthesize_config, Critic};
use crate::queue_twin::SemanticModel;
use crate::subintent::{hints, SubIntentSet};
use crate::traffic_profile::{profile_filter, TrafficProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    PriorityFairness,
    Latency,
    Bandwidth,
    TimeLoad,
    DropRate,
}

impl Objective {
    pub const ALL: [Objective; 5] = [
        Objective::PriorityFairness,
        Objective::Latency,
        Objective::Bandwidth,
        Objective::TimeLoad,
        Objective::DropRate,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Objective::PriorityFairness => "priority_fairness",
            Objective::Latency => "latency",
            Objective::Bandwidth => "bandwidth",
            Objective::TimeLoad => "time_load",
            Objective::DropRate => "drop_rate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCase {
    pub id: String,
    pub intent: String,
    pub objective: Objective,
    pub traffic_type: String,
    pub time_sensitive: bool,
    pub multi_objective: bool,
    pub ref_subintents: String,
    pub ref_config: String,
}

/// The bundled model references are certified against.
pub fn reference_model() -> SemanticModel {
    SemanticModel::from_json_str(include_str!("../../assets/semantic_model_voice.json"))
        .expect("bundled model is valid")
}

/// Reference sub-intents and config for one intent.
pub fn reference_for(intent: &str) -> Result<(String, String), EvalError> {
    let profile = TrafficProfile::default_profile();
    let critic = Critic::new(reference_model(), profile.clone());
    build_reference(&critic, &profile, intent)
}

fn build_reference(
    critic: &Critic,
    profile: &TrafficProfile,
    intent: &str,
) -> Result<(String, String), EvalError> {
    let fail = |msg: String| EvalError::Reference(intent.to_string(), msg);
    let selected = profile_filter(profile, intent).map_err(|e| fail(e.to_string()))?;
    let draft = hints::draft_subintents(intent, &selected, &critic.model().threshold_bounds());
    let set = SubIntentSet {
        items: draft,
        source_intent: intent.to_string(),
        warnings: Vec::new(),
    };
    let (fixed, _) = critic.fix_subs(&set).map_err(|e| fail(e.to_string()))?;
    // Realize from the canonical serialization, not the draft order, so a
    // clean pipeline run reproduces the reference byte for byte.
    let canonical = fixed.to_text();
    let items = crate::subintent::parse_subintents(&canonical).items;
    let config = synthesize_config(&items, "eth0", Some(critic.model()));
    Ok((canonical, config.to_script()))
}

struct MiniSpec {
    intent: &'static str,
    objective: Objective,
    traffic_type: &'static str,
    time_sensitive: bool,
    multi_objective: bool,
}

// 6/5/4/3/2 across objectives, 9 time-sensitive, 6 multi-objective.
const MINI: &[MiniSpec] = &[
    MiniSpec {
        intent: "Prioritize IoT alarm notifications over routine sensor telemetry between 22:00 and 06:00. Also keep queuing delay in check.",
        objective: Objective::PriorityFairness,
        traffic_type: "iot_alerts",
        time_sensitive: true,
        multi_objective: true,
    },
    MiniSpec {
        intent: "Prioritize voice calls over game sessions whenever the link gets busy.",
        objective: Objective::PriorityFairness,
        traffic_type: "voice",
        time_sensitive: false,
        multi_objective: false,
    },
    MiniSpec {
        intent: "Give video streaming top priority on the warehouse network.",
        objective: Objective::PriorityFairness,
        traffic_type: "video",
        time_sensitive: false,
        multi_objective: false,
    },
    MiniSpec {
        intent: "Industrial robot control traffic is critical and must come first during business hours.",
        objective: Objective::PriorityFairness,
        traffic_type: "industrial_robotics",
        time_sensitive: true,
        multi_objective: false,
    },
    MiniSpec {
        intent: "Favor live lecture sessions over anything else when students are connected.",
        objective: Objective::PriorityFairness,
        traffic_type: "elearning",
        time_sensitive: false,
        multi_objective: false,
    },
    MiniSpec {
        intent: "Game sessions should stay in the background behind everything else. Packet loss elsewhere must stay negligible.",
        objective: Objective::PriorityFairness,
        traffic_type: "gaming",
        time_sensitive: false,
        multi_objective: true,
    },
    MiniSpec {
        intent: "Keep response times under 150 ms for voice calls from 20:00 to 01:00.",
        objective: Objective::Latency,
        traffic_type: "voice",
        time_sensitive: true,
        multi_objective: false,
    },
    MiniSpec {
        intent: "Modbus commands to the factory machinery must see queuing delay below 80 ms.",
        objective: Objective::Latency,
        traffic_type: "industrial_robotics",
        time_sensitive: false,
        multi_objective: false,
    },
    MiniSpec {
        intent: "Smoke and intrusion alarms need near real-time delivery. Also cap bulk transfers at 2 mbit.",
        objective: Objective::Latency,
        traffic_type: "iot_alerts",
        time_sensitive: false,
        multi_objective: true,
    },
    MiniSpec {
        intent: "Live camera streams must stay responsive overnight, with delay held under 200 ms.",
        objective: Objective::Latency,
        traffic_type: "video",
        time_sensitive: true,
        multi_objective: false,
    },
    MiniSpec {
        intent: "Esports matches demand low lag, keep it under 50 ms.",
        objective: Objective::Latency,
        traffic_type: "gaming",
        time_sensitive: false,
        multi_objective: false,
    },
    MiniSpec {
        intent: "Cap video streaming at 4 mbit during business hours.",
        objective: Objective::Bandwidth,
        traffic_type: "video",
        time_sensitive: true,
        multi_objective: false,
    },
    MiniSpec {
        intent: "Game downloads must never exceed 2 mbit on the shop floor. Queuing delay for everyone else must stay in check.",
        objective: Objective::Bandwidth,
        traffic_type: "gaming",
        time_sensitive: false,
        multi_objective: true,
    },
    MiniSpec {
        intent: "Reserve at least 8 mbit for online exam sessions.",
        objective: Objective::Bandwidth,
        traffic_type: "elearning",
        time_sensitive: false,
        multi_objective: false,
    },
    MiniSpec {
        intent: "Sensor telemetry uploads are capped at 1 mbit. Keep queuing delay in check as well.",
        objective: Objective::Bandwidth,
        traffic_type: "telemetry",
        time_sensitive: false,
        multi_objective: true,
    },
    MiniSpec {
        intent: "During the evening, voice calls take precedence on the branch line.",
        objective: Objective::TimeLoad,
        traffic_type: "voice",
        time_sensitive: true,
        multi_objective: false,
    },
    MiniSpec {
        intent: "Throttle sensor telemetry between 09:00 and 17:00 so interactive use stays smooth.",
        objective: Objective::TimeLoad,
        traffic_type: "telemetry",
        time_sensitive: true,
        multi_objective: false,
    },
    MiniSpec {
        intent: "From 22:00 to 06:00, fire and smoke alerts own the uplink. Keep packet loss negligible too.",
        objective: Objective::TimeLoad,
        traffic_type: "iot_alerts",
        time_sensitive: true,
        multi_objective: true,
    },
    MiniSpec {
        intent: "Actuator commands to the PLC must not suffer packet drops under load.",
        objective: Objective::DropRate,
        traffic_type: "industrial_robotics",
        time_sensitive: false,
        multi_objective: false,
    },
    MiniSpec {
        intent: "Keep packet loss for sensor readings below 2% overnight.",
        objective: Objective::DropRate,
        traffic_type: "telemetry",
        time_sensitive: true,
        multi_objective: false,
    },
];

/// The shipped 20-case set with handwritten intents.
pub fn mini_benchmark() -> Vec<BenchmarkCase> {
    let profile = TrafficProfile::default_profile();
    let critic = Critic::new(reference_model(), profile.clone());
    MINI.iter()
        .enumerate()
        .map(|(i, spec)| {
            // The table is static; a reference that fails to build is a bug.
            let (subs, config) =
                build_reference(&critic, &profile, spec.intent).expect("mini reference builds");
            BenchmarkCase {
                id: format!("mini-{:03}", i + 1),
                intent: spec.intent.to_string(),
                objective: spec.objective,
                traffic_type: spec.traffic_type.to_string(),
                time_sensitive: spec.time_sensitive,
                multi_objective: spec.multi_objective,
                ref_subintents: subs,
                ref_config: config,
            }
        })
        .collect()
}

pub fn save_benchmark(cases: &[BenchmarkCase], path: &Path) -> Result<(), EvalError> {
    let mut json = serde_json::to_string_pretty(cases)?;
    json.push('\n');
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_benchmark(path: &Path) -> Result<Vec<BenchmarkCase>, EvalError> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

// Template material for the generator. Class phrases only contain keywords
// of their own profile class; weights skew toward the common traffic types.
const CLASS_PHRASES: &[(&str, &str, u32)] = &[
    ("iot_alerts", "IoT alarm notifications", 43),
    ("video", "video streaming", 19),
    ("telemetry", "sensor telemetry", 11),
    ("elearning", "online exam sessions", 9),
    ("voice", "voice calls", 8),
    ("industrial_robotics", "industrial robot control", 6),
    ("gaming", "game sessions", 4),
];

const OBJECTIVE_WEIGHTS: [(Objective, u32); 5] = [
    (Objective::PriorityFairness, 28),
    (Objective::Latency, 24),
    (Objective::Bandwidth, 22),
    (Objective::TimeLoad, 15),
    (Objective::DropRate, 11),
];

const PRIORITY_TEMPLATES: &[&str] = &[
    "Prioritize {p} over {q} whenever the link saturates.",
    "Prioritize {p} over everything else on this segment.",
    "Always prefer {p} when the uplink is congested.",
    "Urgent {p} must be served ahead of bulk transfers.",
    "Guarantee {p} the first claim on the queue.",
];

const LATENCY_TEMPLATES: &[&str] = &[
    "Keep response times under {ms} ms for {p}.",
    "Hold queuing delay below {ms} ms for {p}.",
    "{p} needs lag kept under {ms} ms.",
    "Real-time behavior matters for {p}, keep latency in check.",
    "Queue lag for {p} must stay below {ms} ms.",
];

const BANDWIDTH_TEMPLATES: &[&str] = &[
    "Keep {p} capped at {n} mbit on the branch uplink.",
    "{p} must never exceed {n} mbit.",
    "Guarantee at least {n} mbit for {p}.",
    "Reserve {n} mbit of uplink for {p}.",
    "Limit {p} to at most {n} mbit.",
];

const TIME_TEMPLATES: &[&str] = &[
    "During business hours, give {p} the fast lane.",
    "Prioritize {p} between {t1} and {t2}.",
    "From {t1} to {t2}, {p} owns the uplink.",
    "Throttle {p} overnight so the backup window stays clear.",
    "During the evening, {p} takes precedence on the branch line.",
];

const DROP_TEMPLATES: &[&str] = &[
    "Keep packet loss for {p} under {pct}%.",
    "{p} must not see drops above {pct}%.",
    "Losses on {p} need to stay below {pct}%.",
    "{p} should ride out congestion without packet drops.",
];

const WINDOW_SUFFIXES: &[&str] = &[
    "Enforce this between 20:00 and 23:30.",
    "Apply this from 06:00 to 09:00.",
    "This matters most during business hours.",
    "Do this overnight.",
    "Apply this during the evening.",
];

const MS_FIGURES: &[&str] = &["50", "80", "100", "120", "150", "200"];
const MBIT_FIGURES: &[&str] = &["1", "2", "4", "5", "8", "10"];
const PCT_FIGURES: &[&str] = &["0.5", "1", "2", "3", "5"];
const TIME_PAIRS: &[(&str, &str)] = &[
    ("07:00", "09:00"),
    ("09:00", "17:00"),
    ("18:00", "22:00"),
    ("20:00", "23:30"),
    ("22:00", "06:00"),
];

const SECONDARY_LATENCY: &str = "Also keep queuing delay in check.";
const SECONDARY_LOSS: &str = "Packet loss must stay negligible as well.";
const SECONDARY_CAP: &str = "Also cap bulk transfers at {n} mbit.";

/// Largest-remainder apportionment of `n` over integer weights.
fn apportion(n: usize, weights: &[u32]) -> Vec<usize> {
    let total: u64 = weights.iter().map(|w| u64::from(*w)).sum();
    let mut out: Vec<usize> =
        weights.iter().map(|w| ((n as u64 * u64::from(*w)) / total) as usize).collect();
    let assigned: usize = out.iter().sum();
    let mut rem: Vec<(u64, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, w)| ((n as u64 * u64::from(*w)) % total, i))
        .collect();
    rem.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for slot in rem.iter().take(n - assigned) {
        out[slot.1] += 1;
    }
    out
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, options: &'a [T]) -> &'a T {
    &options[rng.random_range(0..options.len())]
}

fn pick_class(rng: &mut ChaCha8Rng) -> &'static (&'static str, &'static str, u32) {
    let total: u32 = CLASS_PHRASES.iter().map(|c| c.2).sum();
    let mut roll = rng.random_range(0..total);
    for class in CLASS_PHRASES {
        if roll < class.2 {
            return class;
        }
        roll -= class.2;
    }
    unreachable!("weights are positive")
}

fn sentence_case(mut s: String) -> String {
    if let Some((idx, ch)) = s.char_indices().find(|(_, c)| c.is_alphabetic()) {
        if ch.is_lowercase() {
            s.replace_range(idx..idx + ch.len_utf8(), &ch.to_uppercase().to_string());
        }
    }
    s
}

struct DraftCase {
    objective: Objective,
    traffic_type: String,
    text: String,
    time_sensitive: bool,
    multi_objective: bool,
}

fn compose(objective: Objective, rng: &mut ChaCha8Rng) -> DraftCase {
    let primary = pick_class(rng);
    let template = match objective {
        Objective::PriorityFairness => pick(rng, PRIORITY_TEMPLATES),
        Objective::Latency => pick(rng, LATENCY_TEMPLATES),
        Objective::Bandwidth => pick(rng, BANDWIDTH_TEMPLATES),
        Objective::TimeLoad => pick(rng, TIME_TEMPLATES),
        Objective::DropRate => pick(rng, DROP_TEMPLATES),
    };
    let mut text = template.replace("{p}", primary.1);
    if template.contains("{q}") {
        let mut secondary = pick_class(rng);
        while secondary.0 == primary.0 {
            secondary = pick_class(rng);
        }
        text = text.replace("{q}", secondary.1);
    }
    if template.contains("{ms}") {
        text = text.replace("{ms}", pick(rng, MS_FIGURES));
    }
    if template.contains("{n}") {
        text = text.replace("{n}", pick(rng, MBIT_FIGURES));
    }
    if template.contains("{pct}") {
        text = text.replace("{pct}", pick(rng, PCT_FIGURES));
    }
    if template.contains("{t1}") {
        let (t1, t2) = pick(rng, TIME_PAIRS);
        text = text.replace("{t1}", t1).replace("{t2}", t2);
    }
    DraftCase {
        objective,
        traffic_type: primary.0.to_string(),
        text: sentence_case(text),
        time_sensitive: objective == Objective::TimeLoad,
        multi_objective: false,
    }
}

/// Template-based dataset with the target tag proportions: objectives
/// 28/24/22/15/11, about 47% time-sensitive, about 28% multi-objective.
pub fn generate_benchmark(n: usize, seed: u64) -> Result<Vec<BenchmarkCase>, EvalError> {
    if n < 5 {
        return Err(EvalError::BenchmarkTooSmall(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<u32> = OBJECTIVE_WEIGHTS.iter().map(|(_, w)| *w).collect();
    let counts = apportion(n, &weights);

    let mut drafts: Vec<DraftCase> = Vec::new();
    for ((objective, _), count) in OBJECTIVE_WEIGHTS.iter().zip(&counts) {
        for _ in 0..*count {
            drafts.push(compose(*objective, &mut rng));
        }
    }

    let target_ts = (n as f64 * 0.47).round() as usize;
    let have_ts = drafts.iter().filter(|d| d.time_sensitive).count();
    if target_ts > have_ts {
        let mut candidates: Vec<usize> = (0..drafts.len())
            .filter(|&i| !drafts[i].time_sensitive)
            .collect();
        candidates.shuffle(&mut rng);
        for &i in candidates.iter().take(target_ts - have_ts) {
            let suffix = *pick(&mut rng, WINDOW_SUFFIXES);
            drafts[i].text.push(' ');
            drafts[i].text.push_str(suffix);
            drafts[i].time_sensitive = true;
        }
    }

    let target_multi = (n as f64 * 0.28).round() as usize;
    let mut candidates: Vec<usize> = (0..drafts.len()).collect();
    candidates.shuffle(&mut rng);
    for &i in candidates.iter().take(target_multi) {
        let clause = match drafts[i].objective {
            Objective::Bandwidth => *pick(&mut rng, &[SECONDARY_LATENCY, SECONDARY_LOSS]),
            Objective::Latency => *pick(&mut rng, &[SECONDARY_LOSS, SECONDARY_CAP]),
            Objective::DropRate => *pick(&mut rng, &[SECONDARY_LATENCY, SECONDARY_CAP]),
            _ => *pick(&mut rng, &[SECONDARY_LATENCY, SECONDARY_LOSS, SECONDARY_CAP]),
        };
        let clause = clause.replace("{n}", pick(&mut rng, MBIT_FIGURES));
        drafts[i].text.push(' ');
        drafts[i].text.push_str(&clause);
        drafts[i].multi_objective = true;
    }

    drafts.shuffle(&mut rng);

    let profile = TrafficProfile::default_profile();
    let critic = Critic::new(reference_model(), profile.clone());
    let width = if n >= 1000 { 4 } else { 3 };
    drafts
        .into_iter()
        .enumerate()
        .map(|(i, draft)| {
            let (subs, config) = build_reference(&critic, &profile, &draft.text)?;
            Ok(BenchmarkCase {
                id: format!("case-{:0width$}", i + 1),
                intent: draft.text,
                objective: draft.objective,
                traffic_type: draft.traffic_type,
                time_sensitive: draft.time_sensitive,
                multi_objective: draft.multi_objective,
                ref_subintents: subs,
                ref_config: config,
            })
        })
        .collect()
}
