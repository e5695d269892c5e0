//! Sub-intent rules d1..d6. Rules see the items in input order and edit
//! them in place; the canonical serializer reorders later.

use super::{RuleCtx, Severity};
use crate::queue_twin::SemanticModel;
use crate::subintent::{BoundOp, BoundUnit, Metric, SubIntent};
use crate::traffic_profile::TrafficProfile;
use crate::types::round_sig;

pub(crate) fn apply(
    items: &mut Vec<SubIntent>,
    warnings: &mut Vec<String>,
    model: &SemanticModel,
    profile: &TrafficProfile,
    ctx: &mut RuleCtx,
) {
    normalize_units(items, ctx);
    clamp_to_thresholds(items, model, ctx);
    complete_from_profile(items, warnings, profile, ctx);
    collapse_duplicates(items, ctx);
    reject_infeasible(items, model, ctx);
    drop_degenerate_windows(items, ctx);
}

fn loc(i: usize) -> String {
    format!("items[{i}]")
}

fn push_once(warnings: &mut Vec<String>, message: String) {
    if !warnings.contains(&message) {
        warnings.push(message);
    }
}

/// The certified threshold in the same unit a bound is compared in:
/// seconds for waits, percent for drops.
fn comparable_threshold(model: &SemanticModel, metric: Metric) -> Option<f64> {
    let raw = model.threshold(metric.name())?;
    Some(if metric.is_drop() { round_sig(raw * 100.0, 9) } else { raw })
}

fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// True when the bound's unit belongs to its metric: seconds on waits,
/// percent on drops, kbit/mbit on bandwidth.
fn unit_fits(metric: Metric, unit: BoundUnit) -> bool {
    match metric {
        m if m.is_wait() => matches!(unit, BoundUnit::Seconds),
        m if m.is_drop() => matches!(unit, BoundUnit::Percent),
        _ => matches!(unit, BoundUnit::Kbit | BoundUnit::Mbit),
    }
}

// d1
fn normalize_units(items: &mut [SubIntent], ctx: &mut RuleCtx) {
    for (i, item) in items.iter_mut().enumerate() {
        let SubIntent::MetricBound { metric, value, unit, .. } = item else { continue };
        match unit {
            BoundUnit::Millis => {
                let seconds = *value / 1000.0;
                if ctx.fire(
                    "d1",
                    Severity::Fixable,
                    loc(i),
                    format!("normalized {value}ms to {seconds}s"),
                ) {
                    *value = seconds;
                    *unit = BoundUnit::Seconds;
                }
            }
            BoundUnit::Ratio if metric.is_drop() => {
                let percent = round_sig(*value * 100.0, 9);
                if ctx.fire(
                    "d1",
                    Severity::Fixable,
                    loc(i),
                    format!("normalized ratio {value} to {percent}%"),
                ) {
                    *value = percent;
                    *unit = BoundUnit::Percent;
                }
            }
            BoundUnit::Ratio if metric.is_wait() => {
                if ctx.fire(
                    "d1",
                    Severity::Fixable,
                    loc(i),
                    format!("bare {value} on {metric} read as seconds"),
                ) {
                    *unit = BoundUnit::Seconds;
                }
            }
            BoundUnit::Ratio => {
                // Bare bandwidth figures are read as kbit.
                if ctx.fire(
                    "d1",
                    Severity::Fixable,
                    loc(i),
                    format!("bare {value} on {metric} read as kbit"),
                ) {
                    *unit = BoundUnit::Kbit;
                }
            }
            _ => {}
        }
    }
}

// d2
fn clamp_to_thresholds(items: &mut [SubIntent], model: &SemanticModel, ctx: &mut RuleCtx) {
    for (i, item) in items.iter_mut().enumerate() {
        let SubIntent::MetricBound { metric, op, value, unit } = item else { continue };
        if !Metric::MODEL_METRICS.contains(metric) || *op != BoundOp::Le {
            continue;
        }
        if !unit_fits(*metric, *unit) {
            continue; // d5 rejects these
        }
        let Some(threshold) = comparable_threshold(model, *metric) else { continue };
        if *value > threshold && !approx_eq(*value, threshold) {
            if ctx.fire(
                "d2",
                Severity::Fixable,
                loc(i),
                format!(
                    "{metric} <= {value}{unit} is looser than the certified {threshold}{unit}; tightened"
                ),
            ) {
                *value = threshold;
            }
        }
    }
}

// d3
fn complete_from_profile(
    items: &mut Vec<SubIntent>,
    warnings: &mut Vec<String>,
    profile: &TrafficProfile,
    ctx: &mut RuleCtx,
) {
    let mut with_priority: Vec<String> = Vec::new();
    let mut with_match: Vec<String> = Vec::new();
    for item in items.iter() {
        match item {
            SubIntent::PriorityDirective { class, .. } => with_priority.push(class.clone()),
            SubIntent::MatchDirective { class, .. } => with_match.push(class.clone()),
            _ => {}
        }
    }

    // Fill wildcard fields of known classes first.
    for (i, item) in items.iter_mut().enumerate() {
        let SubIntent::MatchDirective { class, cidr, ports, protocol } = item else { continue };
        let Some(entry) = profile.entry(class) else {
            if cidr.is_none() {
                push_once(warnings, format!(
                    "class `{class}` is not in the profile; its match stays unrestricted and no filter will be generated"
                ));
            }
            continue;
        };
        let mut filled = Vec::new();
        if cidr.is_none() {
            filled.push("subnet");
        }
        if ports.is_none() {
            filled.push("ports");
        }
        if protocol.is_none() && entry.protocol.number().is_some() {
            filled.push("protocol");
        }
        if filled.is_empty() {
            continue;
        }
        if ctx.fire(
            "d3",
            Severity::Fixable,
            loc(i),
            format!("filled {} for `{class}` from the profile", filled.join("/")),
        ) {
            if cidr.is_none() {
                *cidr = Some(entry.subnet);
            }
            if ports.is_none() {
                *ports = Some(entry.dst_ports);
            }
            if protocol.is_none() && entry.protocol.number().is_some() {
                *protocol = Some(entry.protocol);
            }
        }
    }

    for class in &with_match {
        if with_priority.contains(class) {
            continue;
        }
        let level =
            profile.entry(class).map(|e| e.priority).unwrap_or(crate::types::Priority::High);
        if ctx.fire(
            "d3",
            Severity::Fixable,
            "items",
            format!("class `{class}` had a match but no priority; assigned {level}"),
        ) {
            items.push(SubIntent::PriorityDirective { class: class.clone(), level });
        }
    }

    for class in &with_priority {
        if with_match.contains(class) {
            continue;
        }
        let Some(entry) = profile.entry(class) else {
            push_once(warnings, format!(
                "class `{class}` is not in the profile; no filter will be generated for it"
            ));
            continue;
        };
        if ctx.fire(
            "d3",
            Severity::Fixable,
            "items",
            format!("class `{class}` had a priority but no match; added one from the profile"),
        ) {
            items.push(SubIntent::MatchDirective {
                class: class.clone(),
                cidr: Some(entry.subnet),
                ports: Some(entry.dst_ports),
                protocol: match entry.protocol.number() {
                    Some(_) => Some(entry.protocol),
                    None => None,
                },
            });
        }
    }
}

fn duplicate_key(item: &SubIntent) -> String {
    match item {
        // A floor and a cap on bandwidth coexist; only same-direction
        // bounds conflict.
        SubIntent::MetricBound { metric, op, .. } => format!("bound:{metric}:{op}"),
        SubIntent::PriorityDirective { class, .. } => format!("priority:{class}"),
        SubIntent::MatchDirective { class, .. } => format!("match:{class}"),
        SubIntent::TimeWindow { .. } => "window".to_string(),
    }
}

// d4
fn collapse_duplicates(items: &mut Vec<SubIntent>, ctx: &mut RuleCtx) {
    let mut seen: Vec<String> = Vec::new();
    let mut kept = Vec::with_capacity(items.len());
    for (i, item) in items.drain(..).enumerate() {
        let key = duplicate_key(&item);
        if seen.contains(&key) {
            if ctx.fire(
                "d4",
                Severity::Fixable,
                loc(i),
                format!("`{item}` conflicts with an earlier statement for {key}; kept the first"),
            ) {
                continue;
            }
        }
        seen.push(key);
        kept.push(item);
    }
    *items = kept;
}

// d5
fn reject_infeasible(items: &mut Vec<SubIntent>, model: &SemanticModel, ctx: &mut RuleCtx) {
    let mut kept = Vec::with_capacity(items.len());
    for (i, item) in items.drain(..).enumerate() {
        let reason = match &item {
            SubIntent::MetricBound { metric, op, value, unit } => {
                if !unit_fits(*metric, *unit) {
                    Some(format!("unit `{unit}` does not fit {metric}"))
                } else if Metric::MODEL_METRICS.contains(metric) {
                    if *op == BoundOp::Ge {
                        Some(format!("a lower bound on {metric} cannot be enforced"))
                    } else {
                        match comparable_threshold(model, *metric) {
                            Some(threshold)
                                if *value < threshold && !approx_eq(*value, threshold) =>
                            {
                                Some(format!(
                                    "{metric} <= {value}{unit} is tighter than the certified {threshold}{unit}"
                                ))
                            }
                            _ => None,
                        }
                    }
                } else if *value <= 0.0 {
                    Some("bandwidth bound must be positive".to_string())
                } else {
                    None
                }
            }
            _ => None,
        };
        match reason {
            Some(reason) => {
                if ctx.fire("d5", Severity::Error, loc(i), format!("rejected `{item}`: {reason}")) {
                    continue;
                }
                kept.push(item);
            }
            None => kept.push(item),
        }
    }
    *items = kept;
}

// d6
fn drop_degenerate_windows(items: &mut Vec<SubIntent>, ctx: &mut RuleCtx) {
    let mut kept = Vec::with_capacity(items.len());
    for (i, item) in items.drain(..).enumerate() {
        if let SubIntent::TimeWindow { start, end } = &item {
            if start == end {
                if ctx.fire(
                    "d6",
                    Severity::Fixable,
                    loc(i),
                    format!("window({start}, {end}) starts and ends at the same time; dropped"),
                ) {
                    continue;
                }
            }
        }
        kept.push(item);
    }
    *items = kept;
}

#[cfg(test)]
mod tests {
    use super::super::{Critic, RuleRegistry};
    use crate::queue_twin::{QueueMetrics, QueueParams, SemanticModel, Threshold};
    use crate::subintent::parse_subintents;
    use crate::traffic_profile::TrafficProfile;

    /// Model with hand-picked thresholds so expectations are readable.
    fn fixed_model() -> SemanticModel {
        let threshold = |metric: &str, value: f64, unit: &str| Threshold {
            metric: metric.to_string(),
            op: "<=".to_string(),
            value,
            unit: unit.to_string(),
        };
        SemanticModel {
            params: QueueParams::default(),
            metrics: QueueMetrics {
                avg_wait_high: 0.142,
                avg_wait_low: 0.355,
                drop_rate_high: 0.004,
                drop_rate_low: 0.028,
                u_actual: 0.9,
                avg_queue_len_high: 0.85,
                avg_queue_len_low: 4.26,
                offered_high: 1000,
                offered_low: 1000,
                served_high: 996,
                served_low: 972,
                dropped_high: 4,
                dropped_low: 28,
                residual_high: 0,
                residual_low: 0,
            },
            thresholds: vec![
                threshold("avg_wait_high", 0.142, "s"),
                threshold("avg_wait_low", 0.355, "s"),
                threshold("drop_rate_high", 0.004, "ratio"),
                threshold("drop_rate_low", 0.028, "ratio"),
            ],
            provenance: "fixed for tests".to_string(),
        }
    }

    fn critic() -> Critic {
        Critic::new(fixed_model(), TrafficProfile::default_profile())
    }

    #[test]
    fn d1_normalizes_ms_and_ratio() {
        let subs =
            parse_subintents("avg_wait_high <= 500ms\ndrop_rate_low <= 0.05\nassign_priority(voice, high)\n");
        let (fixed, report) = critic().fix_subs(&subs).unwrap();
        assert!(report.fired_rules().contains("d1"));
        let text = fixed.to_text();
        // d1 rewrites the units, then d2 tightens both to the thresholds.
        assert!(text.contains("avg_wait_high <= 0.142s"), "{text}");
        assert!(text.contains("drop_rate_low <= 2.8%"), "{text}");
    }

    #[test]
    fn d2_tightens_loose_bounds() {
        let subs = parse_subintents("avg_wait_high <= 0.5s\ndrop_rate_high <= 2%\n");
        let (fixed, report) = critic().fix_subs(&subs).unwrap();
        assert_eq!(report.fired_rules(), ["d2".to_string()].into_iter().collect());
        assert_eq!(fixed.to_text(), "avg_wait_high <= 0.142s\ndrop_rate_high <= 0.4%\n");
    }

    #[test]
    fn d3_completes_both_directions() {
        let subs = parse_subintents("match(voice, 10.1.4.0/24, 16384-32767, udp)\nassign_priority(telemetry, low)\n");
        let (fixed, report) = critic().fix_subs(&subs).unwrap();
        assert!(report.fired_rules().contains("d3"));
        let text = fixed.to_text();
        assert!(text.contains("assign_priority(voice, high)"), "{text}");
        assert!(text.contains("match(telemetry, 10.1.2.0/24, 8000-8100, tcp)"), "{text}");
    }

    #[test]
    fn d3_unknown_class_is_a_warning_not_a_violation() {
        let subs = parse_subintents("assign_priority(mystery, high)\n");
        let (fixed, report) = critic().fix_subs(&subs).unwrap();
        assert!(report.violations.is_empty());
        assert!(fixed.warnings.iter().any(|w| w.contains("mystery")));
    }

    #[test]
    fn d4_keeps_the_first_of_conflicting_statements() {
        let subs = parse_subintents("avg_wait_high <= 0.2s\navg_wait_high <= 0.3s\n");
        let (fixed, report) = critic().fix_subs(&subs).unwrap();
        assert!(report.fired_rules().contains("d4"));
        assert_eq!(fixed.to_text(), "avg_wait_high <= 0.142s\n");

        let subs = parse_subintents("window(20:00, 01:00)\nwindow(08:00, 10:00)\n");
        let (fixed, report) = critic().fix_subs(&subs).unwrap();
        assert!(report.fired_rules().contains("d4"));
        assert_eq!(fixed.to_text(), "window(20:00, 01:00)\n");
    }

    #[test]
    fn d5_rejects_uncertifiable_bounds() {
        let subs = parse_subintents("avg_wait_high <= 0.05s\nassign_priority(voice, high)\n");
        let (fixed, report) = critic().fix_subs(&subs).unwrap();
        assert!(report.fired_rules().contains("d5"));
        assert!(!fixed.to_text().contains("avg_wait_high"));

        let subs = parse_subintents("avg_wait_high >= 0.2s\nassign_priority(voice, high)\n");
        let (_, report) = critic().fix_subs(&subs).unwrap();
        assert!(report.fired_rules().contains("d5"));

        let subs = parse_subintents("avg_wait_high <= 5%\nassign_priority(voice, high)\n");
        let (_, report) = critic().fix_subs(&subs).unwrap();
        assert!(report.fired_rules().contains("d5"));
    }

    #[test]
    fn d6_drops_degenerate_windows() {
        let subs = parse_subintents("window(09:00, 09:00)\nassign_priority(voice, high)\n");
        let (fixed, report) = critic().fix_subs(&subs).unwrap();
        assert!(report.fired_rules().contains("d6"));
        assert!(!fixed.to_text().contains("window"));
    }

    #[test]
    fn fixes_are_idempotent_and_lint_clean() {
        let subs = parse_subintents(
            "avg_wait_high <= 900ms\ndrop_rate_high <= 0.02\nmatch(voice, *, *, *)\nwindow(20:00, 01:00)\n",
        );
        let c = critic();
        let (fixed, _) = c.fix_subs(&subs).unwrap();
        let (fixed_again, report) = c.fix_subs(&fixed).unwrap();
        assert_eq!(fixed.items, fixed_again.items);
        assert!(report.violations.is_empty(), "{:?}", report.violations);
        assert!(c.lint_subs(&fixed).is_empty());
    }

    #[test]
    fn disabled_rules_do_not_fire() {
        let mut registry = RuleRegistry::all_enabled();
        registry.disable("d2");
        let c = critic().with_registry(registry);
        let subs = parse_subintents("avg_wait_high <= 0.5s\n");
        let (fixed, report) = c.fix_subs(&subs).unwrap();
        assert!(report.violations.is_empty());
        assert_eq!(fixed.to_text(), "avg_wait_high <= 0.5s\n");
    }
}
