//! Configuration rules c1..c7. Each rule edits the statement list in
//! place; annotation positions are shifted alongside every insert and
//! removal so comments stay attached to the statements they precede.
//!
//! Execution order is c1, c2, c4, c5, c6, c3, c7: the hierarchy must
//! exist before leaves are pinned, filters must be settled before their
//! priorities are compared, and the window annotation is aligned last so
//! it lands after the final statement.

use super::{band_statement_templates, realize, Realization, RuleCtx, Severity};
use crate::queue_twin::SemanticModel;
use crate::subintent::SubIntent;
use crate::tc_lang::{
    Annotation, AnnotationKind, Handle, Parent, QdiscKind, TcConfig, TcStatement, U32Match,
};
use crate::types::Ipv4Cidr;

pub(crate) fn apply(
    config: &mut TcConfig,
    subs: &[SubIntent],
    model: Option<&SemanticModel>,
    device: &str,
    ctx: &mut RuleCtx,
) {
    let major = config
        .statements
        .iter()
        .find_map(|s| match s {
            TcStatement::QdiscAdd { parent: Parent::Root, handle, .. } => Some(handle.major),
            _ => None,
        })
        .unwrap_or(1);
    let real = realize(subs, model, major);

    enforce_hierarchy(config, &real, device, ctx); // c1
    strip_class_prio(config, ctx); // c2
    raise_low_ceils(config, ctx); // c4
    pin_band_netems(config, &real, device, ctx); // c5
    realize_filters(config, &real, device, ctx); // c6
    order_band_prios(config, &real, ctx); // c3
    align_window(config, &real, ctx); // c7
}

fn loc(i: usize) -> String {
    format!("statements[{i}]")
}

fn aloc(i: usize) -> String {
    format!("annotations[{i}]")
}

/// Insert keeping comments in front of the statement they preceded; a
/// trailing comment stays trailing when appending at the end.
fn insert_stmt(config: &mut TcConfig, idx: usize, stmt: TcStatement) {
    for a in &mut config.annotations {
        if a.position >= idx {
            a.position += 1;
        }
    }
    config.statements.insert(idx, stmt);
}

/// Remove; a comment in front of the removed statement now precedes its
/// successor.
fn remove_stmt(config: &mut TcConfig, idx: usize) {
    for a in &mut config.annotations {
        if a.position > idx {
            a.position -= 1;
        }
    }
    config.statements.remove(idx);
}

fn first_filter_idx(config: &TcConfig) -> Option<usize> {
    config.statements.iter().position(|s| matches!(s, TcStatement::FilterAdd { .. }))
}

// c1
fn enforce_hierarchy(config: &mut TcConfig, real: &Realization, device: &str, ctx: &mut RuleCtx) {
    let (root_tpl, high_tpl, low_tpl) = band_statement_templates(real, device);
    let major = real.major;
    let high_id = Handle::class(major, 1);
    let low_id = Handle::class(major, 2);

    // One root, two band classes; everything else structural goes.
    let mut seen_root = false;
    let mut seen_high = false;
    let mut seen_low = false;
    let mut removals: Vec<usize> = Vec::new();
    for (i, stmt) in config.statements.iter().enumerate() {
        match stmt {
            TcStatement::QdiscAdd { parent: Parent::Root, .. } => {
                if seen_root {
                    if ctx.fire("c1", Severity::Fixable, loc(i), "duplicate root qdisc removed") {
                        removals.push(i);
                    }
                } else {
                    seen_root = true;
                }
            }
            TcStatement::QdiscAdd { parent: Parent::Node(_), kind, .. } => {
                if matches!(kind, QdiscKind::Htb { .. })
                    && ctx.fire(
                        "c1",
                        Severity::Fixable,
                        loc(i),
                        "htb belongs at the root only; removed",
                    )
                {
                    removals.push(i);
                }
            }
            TcStatement::ClassAdd { classid, .. } => {
                if *classid == high_id && !seen_high {
                    seen_high = true;
                } else if *classid == low_id && !seen_low {
                    seen_low = true;
                } else if ctx.fire(
                    "c1",
                    Severity::Fixable,
                    loc(i),
                    format!("class {classid} is outside the two-band hierarchy; removed"),
                ) {
                    removals.push(i);
                }
            }
            TcStatement::FilterAdd { .. } => {}
        }
    }
    for i in removals.into_iter().rev() {
        remove_stmt(config, i);
    }

    // Root shape: htb, default to the low band, bare handle.
    let root_idx =
        first_filter_like(config, |s| matches!(s, TcStatement::QdiscAdd { parent: Parent::Root, .. }));
    if let Some(i) = root_idx {
        if let TcStatement::QdiscAdd { handle, kind, .. } = &mut config.statements[i] {
            if handle.minor.is_some()
                && ctx.fire(
                    "c1",
                    Severity::Fixable,
                    loc(i),
                    "root handle carries a minor; cleared",
                )
            {
                handle.minor = None;
            }
            if !matches!(kind, QdiscKind::Htb { default: Some(2) })
                && ctx.fire(
                    "c1",
                    Severity::Fixable,
                    loc(i),
                    "root must be htb defaulting to the low band; rewritten",
                )
            {
                *kind = QdiscKind::Htb { default: Some(2) };
            }
        }
    }
    let root_idx = match root_idx {
        Some(i) => Some(i),
        None => {
            if ctx.fire("c1", Severity::Fixable, "statements", "no root qdisc; htb root added") {
                insert_stmt(config, 0, root_tpl);
                Some(0)
            } else {
                None
            }
        }
    };

    // Band class parents must point at the root node.
    for i in 0..config.statements.len() {
        let TcStatement::ClassAdd { parent, classid, .. } = &mut config.statements[i] else {
            continue;
        };
        let classid = *classid;
        if (classid == high_id || classid == low_id)
            && *parent != Handle::qdisc(major)
            && ctx.fire(
                "c1",
                Severity::Fixable,
                loc(i),
                format!("class {classid} reparented under the root"),
            )
        {
            *parent = Handle::qdisc(major);
        }
    }

    // Missing bands are synthesized right under the root.
    let have = |config: &TcConfig, id: Handle| {
        config
            .statements
            .iter()
            .any(|s| matches!(s, TcStatement::ClassAdd { classid, .. } if *classid == id))
    };
    if let Some(r) = root_idx {
        if !have(config, high_id)
            && ctx.fire("c1", Severity::Fixable, "statements", "high band class missing; added")
        {
            insert_stmt(config, r + 1, high_tpl);
        }
        if !have(config, low_id)
            && ctx.fire("c1", Severity::Fixable, "statements", "low band class missing; added")
        {
            let after_high = config
                .statements
                .iter()
                .position(|s| matches!(s, TcStatement::ClassAdd { classid, .. } if *classid == high_id))
                .map(|i| i + 1)
                .unwrap_or(r + 1);
            insert_stmt(config, after_high, low_tpl);
        }
    }
}

fn first_filter_like(config: &TcConfig, pred: impl Fn(&TcStatement) -> bool) -> Option<usize> {
    config.statements.iter().position(pred)
}

// c2
fn strip_class_prio(config: &mut TcConfig, ctx: &mut RuleCtx) {
    for (i, stmt) in config.statements.iter_mut().enumerate() {
        let TcStatement::ClassAdd { extras, .. } = stmt else { continue };
        while let Some(pos) = extras.iter().position(|t| t == "prio") {
            let value = extras.get(pos + 1).cloned();
            let takes_value = value.as_deref().is_some_and(|v| v.parse::<u32>().is_ok());
            let message = if takes_value {
                format!(
                    "class prio {} bypasses the htb bands; removed",
                    value.as_deref().unwrap_or_default()
                )
            } else {
                "dangling class prio option removed".to_string()
            };
            if !ctx.fire("c2", Severity::Fixable, loc(i), message) {
                break;
            }
            extras.remove(pos);
            if takes_value {
                extras.remove(pos);
            }
        }
    }
}

// c4
fn raise_low_ceils(config: &mut TcConfig, ctx: &mut RuleCtx) {
    for (i, stmt) in config.statements.iter_mut().enumerate() {
        let TcStatement::ClassAdd { rate, ceil, .. } = stmt else { continue };
        if let Some(c) = ceil {
            if c.kbit() < rate.kbit()
                && ctx.fire(
                    "c4",
                    Severity::Fixable,
                    loc(i),
                    format!("ceil {c} below rate {rate}; raised to the rate"),
                )
            {
                *ceil = Some(*rate);
            }
        }
    }
}

// c5
fn pin_band_netems(config: &mut TcConfig, real: &Realization, device: &str, ctx: &mut RuleCtx) {
    let major = real.major;
    let bands = [(1u16, real.netem_high), (2u16, real.netem_low)];
    let band_of = |p: &Handle| bands.iter().position(|(m, _)| p.same_node(&Handle::class(major, *m)));

    // First netem per band survives; every other leaf qdisc goes.
    let mut claimed = [false, false];
    let mut removals: Vec<usize> = Vec::new();
    for (i, stmt) in config.statements.iter().enumerate() {
        let TcStatement::QdiscAdd { parent: Parent::Node(p), kind, .. } = stmt else { continue };
        if matches!(kind, QdiscKind::Htb { .. }) {
            continue; // c1 already handled these
        }
        match band_of(p) {
            Some(b) if matches!(kind, QdiscKind::Netem { .. }) && !claimed[b] => claimed[b] = true,
            Some(_) if matches!(kind, QdiscKind::Netem { .. }) => {
                if ctx.fire("c5", Severity::Fixable, loc(i), "duplicate band netem removed") {
                    removals.push(i);
                }
            }
            Some(_) => {
                if ctx.fire(
                    "c5",
                    Severity::Fixable,
                    loc(i),
                    "band leaf must be a netem qdisc; removed",
                ) {
                    removals.push(i);
                }
            }
            None => {
                if ctx.fire(
                    "c5",
                    Severity::Fixable,
                    loc(i),
                    format!("qdisc attached at {p} outside the band classes; removed"),
                ) {
                    removals.push(i);
                }
            }
        }
    }
    for i in removals.into_iter().rev() {
        remove_stmt(config, i);
    }

    for (minor, (exp_delay, exp_loss)) in bands {
        let class_node = Handle::class(major, minor);
        let expected_handle = Handle::qdisc(minor << 4);
        let pos = config.statements.iter().position(|s| {
            matches!(s, TcStatement::QdiscAdd { parent: Parent::Node(p), kind: QdiscKind::Netem { .. }, .. }
                if p.same_node(&class_node))
        });
        match pos {
            Some(i) => {
                let TcStatement::QdiscAdd { handle, kind, .. } = &mut config.statements[i] else {
                    continue;
                };
                if *handle != expected_handle
                    && ctx.fire(
                        "c5",
                        Severity::Fixable,
                        loc(i),
                        format!("netem handle {handle} normalized to {expected_handle}"),
                    )
                {
                    *handle = expected_handle;
                }
                let QdiscKind::Netem { delay_ms, loss } = kind else { continue };
                let mut drift = Vec::new();
                if let Some(d) = exp_delay {
                    if *delay_ms != Some(d) {
                        drift.push(format!("delay {d}ms"));
                    }
                }
                if let Some(l) = exp_loss {
                    if *loss != Some(l) {
                        drift.push(format!("loss {l}"));
                    }
                }
                if !drift.is_empty()
                    && ctx.fire(
                        "c5",
                        Severity::Fixable,
                        loc(i),
                        format!("netem pinned to certified {}", drift.join(", ")),
                    )
                {
                    if exp_delay.is_some() {
                        *delay_ms = exp_delay;
                    }
                    if exp_loss.is_some() {
                        *loss = exp_loss;
                    }
                }
            }
            None => {
                if (exp_delay.is_some() || exp_loss.is_some())
                    && ctx.fire(
                        "c5",
                        Severity::Fixable,
                        "statements",
                        format!("netem for band {class_node} missing; added"),
                    )
                {
                    let at = first_filter_idx(config).unwrap_or(config.statements.len());
                    insert_stmt(
                        config,
                        at,
                        TcStatement::QdiscAdd {
                            dev: device.to_string(),
                            parent: Parent::Node(class_node),
                            handle: expected_handle,
                            kind: QdiscKind::Netem { delay_ms: exp_delay, loss: exp_loss },
                            extras: Vec::new(),
                        },
                    );
                }
            }
        }
    }
}

fn src_of(matches: &[U32Match]) -> Option<Ipv4Cidr> {
    matches.iter().find_map(|m| match m {
        U32Match::SrcIp(c) => Some(*c),
        _ => None,
    })
}

fn canonical_matches(matches: &[U32Match]) -> Vec<String> {
    let mut v: Vec<String> = matches.iter().map(|m| m.to_string()).collect();
    v.sort();
    v
}

fn is_catch_all(matches: &[U32Match]) -> bool {
    matches.iter().all(U32Match::is_unrestricted)
}

// c6
fn realize_filters(config: &mut TcConfig, real: &Realization, device: &str, ctx: &mut RuleCtx) {
    if real.filters.is_empty() {
        // No directives: the author's filters are not contradicted.
        return;
    }
    let expected_parent = Handle::class(real.major, 0);

    let filter_indices: Vec<usize> = config
        .statements
        .iter()
        .enumerate()
        .filter(|(_, s)| matches!(s, TcStatement::FilterAdd { .. }))
        .map(|(i, _)| i)
        .collect();

    // Each directive claims the first filter on its source network.
    let mut claims: Vec<Option<usize>> = vec![None; real.filters.len()];
    let mut taken: Vec<usize> = Vec::new();
    for (e, exp) in real.filters.iter().enumerate() {
        let want = src_of(&exp.matches);
        for &i in &filter_indices {
            if taken.contains(&i) {
                continue;
            }
            let TcStatement::FilterAdd { matches, .. } = &config.statements[i] else { continue };
            if src_of(matches) == want {
                claims[e] = Some(i);
                taken.push(i);
                break;
            }
        }
    }

    for (e, exp) in real.filters.iter().enumerate() {
        let Some(i) = claims[e] else { continue };
        let TcStatement::FilterAdd { parent, protocol, matches, flowid, .. } =
            &mut config.statements[i]
        else {
            continue;
        };
        let mut drift = Vec::new();
        if canonical_matches(matches) != canonical_matches(&exp.matches) {
            drift.push("selectors");
        }
        if *flowid != exp.flowid {
            drift.push("flowid");
        }
        if !parent.same_node(&expected_parent) {
            drift.push("parent");
        }
        if protocol != "ip" {
            drift.push("protocol");
        }
        if !drift.is_empty()
            && ctx.fire(
                "c6",
                Severity::Fixable,
                loc(i),
                format!("filter for `{}` corrected: {}", exp.class, drift.join(", ")),
            )
        {
            *matches = exp.matches.clone();
            *flowid = exp.flowid;
            if !parent.same_node(&expected_parent) {
                *parent = expected_parent;
            }
            *protocol = "ip".to_string();
        }
    }

    // Unclaimed filters either shadow the bands (catch-alls) or serve no
    // directive; both go.
    let mut removals: Vec<usize> = Vec::new();
    for &i in &filter_indices {
        if taken.contains(&i) {
            continue;
        }
        let TcStatement::FilterAdd { matches, .. } = &config.statements[i] else { continue };
        let message = if is_catch_all(matches) {
            "redundant catch-all filter removed"
        } else {
            "filter serves no match directive; removed"
        };
        if ctx.fire("c6", Severity::Fixable, loc(i), message) {
            removals.push(i);
        }
    }
    for i in removals.into_iter().rev() {
        remove_stmt(config, i);
    }

    for (e, exp) in real.filters.iter().enumerate() {
        if claims[e].is_some() {
            continue;
        }
        if ctx.fire(
            "c6",
            Severity::Fixable,
            "statements",
            format!("filter for `{}` missing; added", exp.class),
        ) {
            let at = config.statements.len();
            insert_stmt(
                config,
                at,
                TcStatement::FilterAdd {
                    dev: device.to_string(),
                    parent: expected_parent,
                    protocol: "ip".to_string(),
                    prio: exp.prio,
                    matches: exp.matches.clone(),
                    flowid: exp.flowid,
                    extras: Vec::new(),
                },
            );
        }
    }
}

// c3, after c6 so repaired filters are judged too
fn order_band_prios(config: &mut TcConfig, real: &Realization, ctx: &mut RuleCtx) {
    let high_id = Handle::class(real.major, 1);
    let low_id = Handle::class(real.major, 2);
    let mut high_prios = Vec::new();
    let mut low_prios = Vec::new();
    for stmt in &config.statements {
        if let TcStatement::FilterAdd { flowid, prio, .. } = stmt {
            if *flowid == high_id {
                high_prios.push(*prio);
            } else if *flowid == low_id {
                low_prios.push(*prio);
            }
        }
    }
    let broken = high_prios.iter().any(|h| low_prios.iter().any(|l| h >= l));
    if broken
        && ctx.fire(
            "c3",
            Severity::Fixable,
            "statements",
            "low-band filters outrank high-band ones; priorities reassigned",
        )
    {
        for stmt in &mut config.statements {
            if let TcStatement::FilterAdd { flowid, prio, .. } = stmt {
                if *flowid == high_id {
                    *prio = 1;
                } else if *flowid == low_id {
                    *prio = 2;
                }
            }
        }
    }
}

// c7
fn align_window(config: &mut TcConfig, real: &Realization, ctx: &mut RuleCtx) {
    let windows: Vec<usize> = config
        .annotations
        .iter()
        .enumerate()
        .filter(|(_, a)| matches!(a.kind, AnnotationKind::TimeWindow { .. }))
        .map(|(i, _)| i)
        .collect();

    match real.window {
        Some((s, e)) => {
            if let Some(&i) = windows.first() {
                let current = match &config.annotations[i].kind {
                    AnnotationKind::TimeWindow { start, end } => (*start, *end),
                    AnnotationKind::Note(_) => return,
                };
                if current != (s, e)
                    && ctx.fire(
                        "c7",
                        Severity::Fixable,
                        aloc(i),
                        format!("enforcement window rewritten to {s}-{e}"),
                    )
                {
                    config.annotations[i].kind = AnnotationKind::TimeWindow { start: s, end: e };
                }
            } else if ctx.fire(
                "c7",
                Severity::Fixable,
                "annotations",
                format!("enforcement window {s}-{e} added"),
            ) {
                config.annotations.push(Annotation {
                    kind: AnnotationKind::TimeWindow { start: s, end: e },
                    position: config.statements.len(),
                });
            }
            for &i in windows.iter().skip(1).rev() {
                if ctx.fire("c7", Severity::Fixable, aloc(i), "duplicate enforcement window removed")
                {
                    config.annotations.remove(i);
                }
            }
        }
        None => {
            for &i in windows.iter().rev() {
                if ctx.fire(
                    "c7",
                    Severity::Fixable,
                    aloc(i),
                    "no window directive; enforcement comment removed",
                ) {
                    config.annotations.remove(i);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::critic::{Critic, RuleRegistry};
    use crate::queue_twin::{QueueMetrics, QueueParams, SemanticModel, Threshold};
    use crate::subintent::parse_subintents;
    use crate::tc_lang::parse_script;
    use crate::traffic_profile::TrafficProfile;

    fn voice_model() -> SemanticModel {
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

    fn voice_critic() -> Critic {
        Critic::new(voice_model(), TrafficProfile::default_profile())
    }

    const RAW: &str = "\
tc qdisc add dev eth0 root handle 1: htb default 2
tc class add dev eth0 parent 1: classid 1:1 htb rate 1mbit prio 0
tc class add dev eth0 parent 1: classid 1:2 htb rate 1mbit prio 2
tc qdisc add dev eth0 parent 1:1 handle 10: netem delay 120ms loss 2%
tc filter add dev eth0 protocol ip parent 1:0 prio 1 u32 match ip src 10.1.4.0/24 match ip dport 16384 0xffff flowid 1:1
tc filter add dev eth0 protocol ip parent 1:0 prio 2 u32 match ip src 0.0.0.0/0 flowid 1:2
# enforce from 20:00 to 01:00
";

    const CORRECTED: &str = "\
tc qdisc add dev eth0 root handle 1: htb default 2
tc class add dev eth0 parent 1: classid 1:1 htb rate 1mbit
tc class add dev eth0 parent 1: classid 1:2 htb rate 1mbit
tc qdisc add dev eth0 parent 1:1 handle 10: netem delay 142ms loss 0.4%
tc qdisc add dev eth0 parent 1:2 handle 20: netem delay 355ms loss 2.8%
tc filter add dev eth0 protocol ip parent 1:0 prio 1 u32 match ip src 10.1.4.0/24 match ip dport 16384 0xc000 match ip protocol 17 0xff flowid 1:1
# enforce from 20:00 to 01:00
";

    fn voice_subs() -> Vec<crate::subintent::SubIntent> {
        parse_subintents(
            "avg_wait_high <= 0.142s\ndrop_rate_high <= 0.4%\nassign_priority(voice, high)\nmatch(voice, 10.1.4.0/24, 16384-32767, udp)\nwindow(20:00, 01:00)\n",
        )
        .items
    }

    #[test]
    fn flawed_draft_is_repaired_to_the_reference() {
        let critic = voice_critic();
        let subs = voice_subs();
        let raw = parse_script(RAW).unwrap();
        let (fixed, report) = critic.fix_tc(&raw, &subs).unwrap();
        assert_eq!(fixed.to_script(), CORRECTED);
        let fired = report.fired_rules();
        assert_eq!(
            fired,
            ["c2", "c5", "c6"].into_iter().map(str::to_string).collect(),
            "{:#?}",
            report.violations
        );
    }

    #[test]
    fn repair_is_idempotent_and_lint_clean() {
        let critic = voice_critic();
        let subs = voice_subs();
        let raw = parse_script(RAW).unwrap();
        let (fixed, _) = critic.fix_tc(&raw, &subs).unwrap();
        let (again, report) = critic.fix_tc(&fixed, &subs).unwrap();
        assert_eq!(again.to_script(), fixed.to_script());
        assert!(report.violations.is_empty(), "{:#?}", report.violations);
        assert!(critic.lint_tc(&fixed, &subs).is_empty());
    }

    #[test]
    fn lint_reports_without_mutating() {
        let critic = voice_critic();
        let subs = voice_subs();
        let raw = parse_script(RAW).unwrap();
        let violations = critic.lint_tc(&raw, &subs);
        assert!(!violations.is_empty());
        assert!(violations.iter().all(|v| !v.fix_applied));
    }

    #[test]
    fn structural_wreck_is_rebuilt() {
        let critic = voice_critic();
        let subs = voice_subs();
        let wreck = parse_script(
            "\
tc qdisc add dev eth0 parent 9:9 handle 30: netem delay 10ms
tc class add dev eth0 parent 1: classid 1:7 htb rate 9mbit
tc filter add dev eth0 protocol ip parent 1:0 prio 5 u32 match ip src 10.9.9.0/24 flowid 1:7
# enforce from 08:00 to 09:00
# enforce from 10:00 to 11:00
",
        )
        .unwrap();
        let (fixed, report) = critic.fix_tc(&wreck, &subs).unwrap();
        let fired = report.fired_rules();
        for rule in ["c1", "c5", "c6", "c7"] {
            assert!(fired.contains(rule), "missing {rule} in {fired:?}");
        }
        assert!(critic.lint_tc(&fixed, &subs).is_empty(), "{}", fixed.to_script());
        let script = fixed.to_script();
        assert!(script.contains("root handle 1: htb default 2"), "{script}");
        assert!(script.contains("# enforce from 20:00 to 01:00"), "{script}");
        assert!(!script.contains("10.9.9.0/24"), "{script}");
    }

    #[test]
    fn ceil_below_rate_is_raised() {
        let critic = voice_critic();
        let subs = voice_subs();
        let config = parse_script(
            "\
tc qdisc add dev eth0 root handle 1: htb default 2
tc class add dev eth0 parent 1: classid 1:1 htb rate 5mbit ceil 2mbit
tc class add dev eth0 parent 1: classid 1:2 htb rate 1mbit
",
        )
        .unwrap();
        let (fixed, report) = critic.fix_tc(&config, &subs).unwrap();
        assert!(report.fired_rules().contains("c4"));
        assert!(fixed.to_script().contains("rate 5mbit ceil 5mbit"));
    }

    #[test]
    fn inverted_filter_prios_are_reassigned() {
        let critic = voice_critic();
        let subs = parse_subintents(
            "assign_priority(voice, high)\nmatch(voice, 10.1.4.0/24, 16384-32767, udp)\nassign_priority(gaming, low)\nmatch(gaming, 10.1.7.0/24, 27000-27031, udp)\n",
        )
        .items;
        let config = parse_script(
            "\
tc qdisc add dev eth0 root handle 1: htb default 2
tc class add dev eth0 parent 1: classid 1:1 htb rate 1mbit
tc class add dev eth0 parent 1: classid 1:2 htb rate 1mbit
tc filter add dev eth0 protocol ip parent 1:0 prio 7 u32 match ip src 10.1.4.0/24 match ip dport 16384 0xc000 match ip protocol 17 0xff flowid 1:1
tc filter add dev eth0 protocol ip parent 1:0 prio 3 u32 match ip src 10.1.7.0/24 match ip dport 27000 0xffff match ip protocol 17 0xff flowid 1:2
",
        )
        .unwrap();
        let (fixed, report) = critic.fix_tc(&config, &subs).unwrap();
        assert!(report.fired_rules().contains("c3"), "{:#?}", report.violations);
        let script = fixed.to_script();
        assert!(script.contains("prio 1 u32 match ip src 10.1.4.0/24"), "{script}");
        assert!(script.contains("prio 2 u32 match ip src 10.1.7.0/24"), "{script}");
        assert!(critic.lint_tc(&fixed, &subs).is_empty());
    }

    #[test]
    fn disabling_a_rule_keeps_the_artifact() {
        let mut registry = RuleRegistry::all_enabled();
        registry.disable("c2");
        let critic = voice_critic().with_registry(registry);
        let subs = voice_subs();
        let raw = parse_script(RAW).unwrap();
        let (fixed, report) = critic.fix_tc(&raw, &subs).unwrap();
        assert!(!report.fired_rules().contains("c2"));
        assert!(fixed.to_script().contains("prio 0"));
    }

    #[test]
    fn filters_survive_when_no_directives_exist() {
        let critic = voice_critic();
        let subs = parse_subintents("avg_wait_high <= 0.142s\n").items;
        let config = parse_script(
            "\
tc qdisc add dev eth0 root handle 1: htb default 2
tc class add dev eth0 parent 1: classid 1:1 htb rate 1mbit
tc class add dev eth0 parent 1: classid 1:2 htb rate 1mbit
tc filter add dev eth0 protocol ip parent 1:0 prio 2 u32 match ip src 0.0.0.0/0 flowid 1:2
",
        )
        .unwrap();
        let (fixed, _) = critic.fix_tc(&config, &subs).unwrap();
        assert!(fixed.to_script().contains("0.0.0.0/0"));
        assert!(critic.lint_tc(&fixed, &subs).is_empty());
    }
}
