//! Deterministic rule-based critic.
//!
//! Two review stages mirror the two generation stages: `fix_subs` repairs a
//! sub-intent set against the semantic model and traffic profile (rules
//! d1..d6), and `fix_tc` repairs a `tc` configuration against the repaired
//! sub-intents (rules c1..c7). Both are pure functions of their inputs:
//! same input, same output, byte for byte. `lint_*` runs the same rules on
//! a scratch copy and only reports.
//!
//! Fixing is idempotent (a second pass changes nothing) and sound (linting
//! a fixed artifact reports nothing).

mod subs_rules;
mod tc_rules;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::queue_twin::SemanticModel;
use crate::subintent::{serialize_subintents, BoundOp, BoundUnit, Metric, SubIntent, SubIntentSet};
use crate::tc_lang::{
    Handle, LossPct, Parent, QdiscKind, Rate, RateUnit, TcConfig, TcStatement, U32Match,
};
use crate::traffic_profile::TrafficProfile;
use crate::types::{Priority, TimeOfDay};

#[derive(Debug, Error)]
pub enum CriticError {
    #[error("no valid sub-intents remain after review ({dropped} dropped)")]
    NoValidSubIntents { dropped: usize },
    #[error("cannot determine target device: configuration names none and no default is set")]
    NoDevice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    /// The artifact contradicts something certified; the only fix is
    /// removal or replacement.
    Error,
    /// Repairable in place.
    Fixable,
}

/// One rule finding. In `fix_*` runs the described fix has been applied;
/// in `lint_*` runs `fix_applied` is false.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule_id: String,
    pub severity: Severity,
    pub location: String,
    pub message: String,
    pub fix_applied: bool,
}

/// Outcome of one review: every finding, plus SHA-256 digests of the
/// canonical input and output texts so runs can be compared at a glance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticReport {
    pub violations: Vec<Violation>,
    pub corrections: usize,
    pub input_hash: String,
    pub output_hash: String,
}

impl CriticReport {
    pub fn fired_rules(&self) -> BTreeSet<String> {
        self.violations.iter().map(|v| v.rule_id.clone()).collect()
    }
}

/// Every rule with a one-line summary, in execution order per stage.
pub const RULES: &[(&str, &str)] = &[
    ("d1", "normalize bound units to seconds and percent"),
    ("d2", "tighten bounds looser than the certified thresholds"),
    ("d3", "complete missing priorities and matches from the profile"),
    ("d4", "collapse conflicting duplicates, keeping the first"),
    ("d5", "reject bounds the twin cannot certify"),
    ("d6", "drop degenerate time windows"),
    ("c1", "enforce the root htb qdisc and both band classes"),
    ("c2", "strip prio options from htb classes"),
    ("c3", "keep high-band filter priorities ahead of low-band ones"),
    ("c4", "raise ceil to at least rate"),
    ("c5", "pin band netem delay and loss to certified values"),
    ("c6", "make filters realize the match directives"),
    ("c7", "align the enforcement window annotation"),
];

/// Which rules run. All rules are on by default; individual rules can be
/// switched off (for example `c2` when a site wants class prio options
/// preserved).
#[derive(Debug, Clone, Default)]
pub struct RuleRegistry {
    disabled: BTreeSet<String>,
}

impl RuleRegistry {
    pub fn all_enabled() -> Self {
        Self::default()
    }

    pub fn disable(&mut self, rule_id: &str) -> &mut Self {
        self.disabled.insert(rule_id.to_string());
        self
    }

    pub fn enable(&mut self, rule_id: &str) -> &mut Self {
        self.disabled.remove(rule_id);
        self
    }

    pub fn is_enabled(&self, rule_id: &str) -> bool {
        !self.disabled.contains(rule_id)
    }
}

pub(crate) struct RuleCtx<'a> {
    registry: &'a RuleRegistry,
    pub violations: Vec<Violation>,
    fixing: bool,
}

impl<'a> RuleCtx<'a> {
    fn new(registry: &'a RuleRegistry, fixing: bool) -> Self {
        Self { registry, violations: Vec::new(), fixing }
    }

    /// Record a finding. Returns true when the fix should be applied
    /// (always, unless the rule is disabled).
    pub fn fire(
        &mut self,
        rule_id: &str,
        severity: Severity,
        location: impl Into<String>,
        message: impl Into<String>,
    ) -> bool {
        if !self.registry.is_enabled(rule_id) {
            return false;
        }
        self.violations.push(Violation {
            rule_id: rule_id.to_string(),
            severity,
            location: location.into(),
            message: message.into(),
            fix_applied: self.fixing,
        });
        true
    }
}

fn digest(text: &str) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    format!("{:x}", hasher.finalize())
}

pub struct Critic {
    registry: RuleRegistry,
    model: SemanticModel,
    profile: TrafficProfile,
    default_device: Option<String>,
}

impl Critic {
    pub fn new(model: SemanticModel, profile: TrafficProfile) -> Self {
        Critic {
            registry: RuleRegistry::all_enabled(),
            model,
            profile,
            default_device: Some("eth0".to_string()),
        }
    }

    pub fn with_registry(mut self, registry: RuleRegistry) -> Self {
        self.registry = registry;
        self
    }

    pub fn with_default_device(mut self, device: Option<String>) -> Self {
        self.default_device = device;
        self
    }

    pub fn model(&self) -> &SemanticModel {
        &self.model
    }

    /// Repair a sub-intent set. Errors only when nothing certifiable is
    /// left afterwards.
    pub fn fix_subs(
        &self,
        input: &SubIntentSet,
    ) -> Result<(SubIntentSet, CriticReport), CriticError> {
        let input_text = serialize_subintents(&input.items);
        let mut items = input.items.clone();
        let mut warnings = input.warnings.clone();
        let mut ctx = RuleCtx::new(&self.registry, true);
        subs_rules::apply(&mut items, &mut warnings, &self.model, &self.profile, &mut ctx);
        if items.is_empty() {
            return Err(CriticError::NoValidSubIntents { dropped: input.items.len() });
        }
        let output = SubIntentSet {
            items,
            source_intent: input.source_intent.clone(),
            warnings,
        };
        let corrections = ctx.violations.iter().filter(|v| v.fix_applied).count();
        let report = CriticReport {
            violations: ctx.violations,
            corrections,
            input_hash: digest(&input_text),
            output_hash: digest(&output.to_text()),
        };
        Ok((output, report))
    }

    /// Report sub-intent findings without changing the input.
    pub fn lint_subs(&self, input: &SubIntentSet) -> Vec<Violation> {
        let mut items = input.items.clone();
        let mut warnings = Vec::new();
        let mut ctx = RuleCtx::new(&self.registry, false);
        subs_rules::apply(&mut items, &mut warnings, &self.model, &self.profile, &mut ctx);
        ctx.violations
    }

    /// Repair a configuration against the (already repaired) sub-intents.
    pub fn fix_tc(
        &self,
        input: &TcConfig,
        subs: &[SubIntent],
    ) -> Result<(TcConfig, CriticReport), CriticError> {
        let device = match input.device() {
            Some(dev) => dev.to_string(),
            None => self.default_device.clone().ok_or(CriticError::NoDevice)?,
        };
        let input_text = input.to_script();
        let mut config = input.clone();
        let mut ctx = RuleCtx::new(&self.registry, true);
        tc_rules::apply(&mut config, subs, Some(&self.model), &device, &mut ctx);
        let corrections = ctx.violations.iter().filter(|v| v.fix_applied).count();
        let report = CriticReport {
            violations: ctx.violations,
            corrections,
            input_hash: digest(&input_text),
            output_hash: digest(&config.to_script()),
        };
        Ok((config, report))
    }

    /// Report configuration findings without changing the input.
    pub fn lint_tc(&self, input: &TcConfig, subs: &[SubIntent]) -> Vec<Violation> {
        let device = match input.device() {
            Some(dev) => dev.to_string(),
            None => match &self.default_device {
                Some(dev) => dev.clone(),
                None => return Vec::new(),
            },
        };
        let mut config = input.clone();
        let mut ctx = RuleCtx::new(&self.registry, false);
        tc_rules::apply(&mut config, subs, Some(&self.model), &device, &mut ctx);
        ctx.violations
    }
}

/// The concrete shape the sub-intents call for: rates, netem values,
/// filters and window, all derived deterministically.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Realization {
    pub major: u16,
    pub high_rate: Rate,
    pub high_ceil: Option<Rate>,
    pub low_rate: Rate,
    pub low_ceil: Option<Rate>,
    /// (delay_ms, loss) per band; fields absent when neither a bound nor a
    /// model threshold provides them.
    pub netem_high: (Option<u64>, Option<LossPct>),
    pub netem_low: (Option<u64>, Option<LossPct>),
    pub filters: Vec<ExpectedFilter>,
    pub window: Option<(TimeOfDay, TimeOfDay)>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ExpectedFilter {
    pub class: String,
    pub prio: u32,
    pub flowid: Handle,
    pub matches: Vec<U32Match>,
}

fn rate_from_bound(value: f64, unit: BoundUnit) -> Rate {
    let (value, unit) = match unit {
        BoundUnit::Mbit if value.fract() != 0.0 => (value * 1000.0, RateUnit::Kbit),
        BoundUnit::Mbit => (value, RateUnit::Mbit),
        _ => (value, RateUnit::Kbit),
    };
    Rate { value: value.round().max(0.0) as u64, unit }
}

fn delay_ms_from_bound(value: f64, unit: BoundUnit) -> u64 {
    let seconds = match unit {
        BoundUnit::Millis => value / 1000.0,
        _ => value,
    };
    (seconds * 1000.0).round().max(0.0) as u64
}

fn loss_from_bound(value: f64, unit: BoundUnit) -> LossPct {
    match unit {
        BoundUnit::Ratio => LossPct::from_percent(value * 100.0),
        _ => LossPct::from_percent(value),
    }
}

pub(crate) fn realize(
    subs: &[SubIntent],
    model: Option<&SemanticModel>,
    major: u16,
) -> Realization {
    let default_rate = Rate { value: 1, unit: RateUnit::Mbit };
    let mut real = Realization {
        major,
        high_rate: default_rate,
        high_ceil: None,
        low_rate: default_rate,
        low_ceil: None,
        netem_high: (None, None),
        netem_low: (None, None),
        filters: Vec::new(),
        window: None,
    };

    // Model thresholds seed the netem values; explicit bounds override.
    if let Some(model) = model {
        let ms = |name: &str| model.threshold(name).map(|s| (s * 1000.0).round() as u64);
        let loss = |name: &str| model.threshold(name).map(|f| LossPct::from_percent(f * 100.0));
        real.netem_high = (ms(Metric::AvgWaitHigh.name()), loss(Metric::DropRateHigh.name()));
        real.netem_low = (ms(Metric::AvgWaitLow.name()), loss(Metric::DropRateLow.name()));
    }

    let mut priorities: Vec<(String, Priority)> = Vec::new();
    for item in subs {
        match item {
            SubIntent::MetricBound { metric, op, value, unit } => match (metric, op) {
                (Metric::AvgWaitHigh, BoundOp::Le) => {
                    real.netem_high.0 = Some(delay_ms_from_bound(*value, *unit));
                }
                (Metric::AvgWaitLow, BoundOp::Le) => {
                    real.netem_low.0 = Some(delay_ms_from_bound(*value, *unit));
                }
                (Metric::DropRateHigh, BoundOp::Le) => {
                    real.netem_high.1 = Some(loss_from_bound(*value, *unit));
                }
                (Metric::DropRateLow, BoundOp::Le) => {
                    real.netem_low.1 = Some(loss_from_bound(*value, *unit));
                }
                (Metric::Bandwidth, BoundOp::Ge) => {
                    real.high_rate = rate_from_bound(*value, *unit);
                }
                (Metric::Bandwidth, BoundOp::Le) => {
                    real.low_ceil = Some(rate_from_bound(*value, *unit));
                }
                _ => {}
            },
            SubIntent::PriorityDirective { class, level } => {
                if !priorities.iter().any(|(c, _)| c == class) {
                    priorities.push((class.clone(), *level));
                }
            }
            SubIntent::TimeWindow { start, end } => {
                if real.window.is_none() {
                    real.window = Some((*start, *end));
                }
            }
            SubIntent::MatchDirective { .. } => {}
        }
    }

    for item in subs {
        if let SubIntent::MatchDirective { class, cidr, ports, protocol } = item {
            let Some(cidr) = cidr else { continue };
            let level = priorities
                .iter()
                .find(|(c, _)| c == class)
                .map(|(_, l)| *l)
                .unwrap_or(Priority::High);
            let (prio, minor) = match level {
                Priority::High => (1, 1),
                Priority::Low => (2, 2),
            };
            let mut matches = vec![U32Match::SrcIp(*cidr)];
            if let Some(ports) = ports {
                let (port, mask) = ports.u32_match();
                matches.push(U32Match::Dport { port, mask });
            }
            if let Some(protocol) = protocol {
                if let Some(number) = protocol.number() {
                    matches.push(U32Match::Protocol { number, mask: 0xff });
                }
            }
            real.filters.push(ExpectedFilter {
                class: class.clone(),
                prio,
                flowid: Handle::class(major, minor),
                matches,
            });
        }
    }
    real
}

/// Build a full configuration from scratch for the given sub-intents.
/// This is the canonical realization: the critic's repair of an empty
/// configuration, shared with the mock model's generator.
pub fn synthesize_config(
    subs: &[SubIntent],
    device: &str,
    model: Option<&SemanticModel>,
) -> TcConfig {
    let mut config = TcConfig::default();
    let registry = RuleRegistry::all_enabled();
    let mut ctx = RuleCtx::new(&registry, true);
    tc_rules::apply(&mut config, subs, model, device, &mut ctx);
    config
}

pub(crate) fn band_statement_templates(
    real: &Realization,
    device: &str,
) -> (TcStatement, TcStatement, TcStatement) {
    let root = TcStatement::QdiscAdd {
        dev: device.to_string(),
        parent: Parent::Root,
        handle: Handle::qdisc(real.major),
        kind: QdiscKind::Htb { default: Some(2) },
        extras: Vec::new(),
    };
    let high = TcStatement::ClassAdd {
        dev: device.to_string(),
        parent: Handle::qdisc(real.major),
        classid: Handle::class(real.major, 1),
        rate: real.high_rate,
        ceil: real.high_ceil,
        extras: Vec::new(),
    };
    let low = TcStatement::ClassAdd {
        dev: device.to_string(),
        parent: Handle::qdisc(real.major),
        classid: Handle::class(real.major, 2),
        rate: real.low_rate,
        ceil: real.low_ceil,
        extras: Vec::new(),
    };
    (root, high, low)
}
