//! Deterministic stand-in for a remote model.
//!
//! The mock reads everything it knows from the prompt itself: the traffic
//! profile block, the semantic-model block, the exemplars and the trailing
//! cue line. The same prompt therefore always yields the same completion,
//! with no network and no state.
//!
//! Test harnesses steer it with marker lines of the form
//! `[MOCK:flaw=name,name]` or `[MOCK:flaws=graded]` appended to the prompt.
//! Markers are stripped before the prompt is interpreted and never echoed.
//! `graded` scales answer quality with the prompting strategy visible in the
//! prompt; named flaws plant specific defects for the critic to find.

use super::GatewayError;
use crate::critic::synthesize_config;
use crate::prompting::parse_profile_line;
use crate::subintent::{self, hints, parse_subintents, serialize_subintents};
use crate::tc_lang::{
    AnnotationKind, Handle, LossPct, Parent, QdiscKind, TcConfig, TcStatement, U32Match,
};
use crate::traffic_profile::{profile_filter, TrafficProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Flaw {
    /// Answer quality follows the strategy visible in the prompt.
    Graded,
    /// Leak scheduler priorities into the htb class statements.
    HtbClassPrio,
    /// Plausible but uncertified delay/loss figures on the high band.
    WrongThreshold,
    /// Drop every protocol selector.
    MissingUdpMatch,
    /// Exact-match masks on ranged destination ports.
    BadPortMask,
    /// A trailing match-all filter no directive asked for.
    RedundantCatchall,
}

impl Flaw {
    fn parse(name: &str) -> Result<Flaw, GatewayError> {
        match name {
            "graded" => Ok(Flaw::Graded),
            "htb-class-prio" => Ok(Flaw::HtbClassPrio),
            "wrong-threshold" => Ok(Flaw::WrongThreshold),
            "missing-udp-match" => Ok(Flaw::MissingUdpMatch),
            "bad-port-mask" => Ok(Flaw::BadPortMask),
            "redundant-catchall" => Ok(Flaw::RedundantCatchall),
            _ => Err(GatewayError::Mock(format!("unknown flaw `{name}`"))),
        }
    }
}

pub(crate) fn complete(prompt: &str) -> Result<String, GatewayError> {
    let (cleaned, flaws) = strip_markers(prompt)?;
    let trimmed = cleaned.trim_end();
    if trimmed.ends_with("Configuration:") {
        config_completion(&cleaned, &flaws)
    } else if trimmed.ends_with("Sub-intents:") {
        subintent_completion(&cleaned)
    } else {
        Err(GatewayError::Mock(
            "prompt does not end with a Sub-intents: or Configuration: cue".to_string(),
        ))
    }
}

/// Remove `[MOCK:...]` lines and collect the flaws they request.
fn strip_markers(prompt: &str) -> Result<(String, Vec<Flaw>), GatewayError> {
    let mut flaws = Vec::new();
    let mut kept = String::new();
    for line in prompt.lines() {
        let trimmed = line.trim();
        if let Some(body) = trimmed.strip_prefix("[MOCK:").and_then(|r| r.strip_suffix(']')) {
            let (key, names) = body
                .split_once('=')
                .ok_or_else(|| GatewayError::Mock(format!("bad marker `{trimmed}`")))?;
            if key != "flaw" && key != "flaws" {
                return Err(GatewayError::Mock(format!("bad marker key `{key}`")));
            }
            for name in names.split(',') {
                flaws.push(Flaw::parse(name.trim())?);
            }
            continue;
        }
        kept.push_str(line);
        kept.push('\n');
    }
    Ok((kept, flaws))
}

/// Lines of the `- ` list that follows the given header line.
fn block_lines<'a>(prompt: &'a str, header: &str) -> Vec<&'a str> {
    let mut out = Vec::new();
    let mut in_block = false;
    for line in prompt.lines() {
        if line.trim_end() == header {
            in_block = true;
            out.clear();
            continue;
        }
        if in_block {
            if line.trim_start().starts_with("- ") {
                out.push(line);
            } else {
                in_block = false;
            }
        }
    }
    out
}

/// Stage 1: draft sub-intents for the last `Intent:` line, using only the
/// profile and threshold bounds the prompt carries.
fn subintent_completion(prompt: &str) -> Result<String, GatewayError> {
    let intent = prompt
        .lines()
        .rev()
        .find_map(|line| line.strip_prefix("Intent: "))
        .ok_or_else(|| GatewayError::Mock("stage-1 prompt has no Intent line".to_string()))?;
    let entries = block_lines(prompt, "Traffic profile:")
        .into_iter()
        .filter_map(parse_profile_line)
        .collect();
    let bounds: Vec<_> = block_lines(prompt, "Semantic model:")
        .into_iter()
        .filter_map(|line| line.trim().strip_prefix("- "))
        .filter_map(subintent::parse_line)
        .collect();
    let profile = TrafficProfile { entries };
    let selected =
        profile_filter(&profile, intent).map_err(|e| GatewayError::Mock(e.to_string()))?;
    let items = hints::draft_subintents(intent, &selected, &bounds);
    Ok(serialize_subintents(&items))
}

/// Stage 2: realize the sub-intent block before the trailing cue, then
/// apply whatever defects the markers requested.
fn config_completion(prompt: &str, flaws: &[Flaw]) -> Result<String, GatewayError> {
    let cue = "Sub-intents:\n";
    let pos = prompt
        .rfind(cue)
        .ok_or_else(|| GatewayError::Mock("stage-2 prompt has no Sub-intents block".to_string()))?;
    let tail = prompt[pos + cue.len()..].trim_end();
    let subs_text = tail.strip_suffix("Configuration:").ok_or_else(|| {
        GatewayError::Mock("stage-2 prompt has no trailing Configuration cue".to_string())
    })?;
    let device = prompt
        .lines()
        .find_map(|line| line.strip_prefix("Device: "))
        .unwrap_or("eth0")
        .trim();

    let set = parse_subintents(subs_text);
    let mut config = synthesize_config(&set.items, device, None);
    for flaw in flaws {
        match flaw {
            Flaw::Graded => apply_graded(&mut config, graded_level(prompt)),
            named => apply_flaw(&mut config, *named, device),
        }
    }
    Ok(config.to_script())
}

/// How much context the prompt gives away: 2 with the semantic-model block,
/// 1 with at least one exemplar, 0 bare.
fn graded_level(prompt: &str) -> u8 {
    if prompt.contains("Semantic model:") {
        2
    } else if prompt.contains("Example 1:") {
        1
    } else {
        0
    }
}

fn apply_graded(config: &mut TcConfig, level: u8) {
    match level {
        // Bare prompt: hierarchy and addressing come out, impairment
        // modeling, schedules and protocol selectors do not.
        0 => {
            let netems: Vec<usize> = config
                .statements
                .iter()
                .enumerate()
                .filter(|(_, s)| {
                    matches!(s, TcStatement::QdiscAdd { kind: QdiscKind::Netem { .. }, .. })
                })
                .map(|(i, _)| i)
                .collect();
            for idx in netems.into_iter().rev() {
                remove_at(config, idx);
            }
            config
                .annotations
                .retain(|a| !matches!(a.kind, AnnotationKind::TimeWindow { .. }));
            for stmt in &mut config.statements {
                if let TcStatement::FilterAdd { matches, .. } = stmt {
                    matches.retain(|m| !matches!(m, U32Match::Protocol { .. }));
                }
            }
        }
        // One exemplar: right shape, folklore delay and loss figures.
        1 => {
            for stmt in &mut config.statements {
                if let TcStatement::QdiscAdd {
                    parent: Parent::Node(p),
                    kind: QdiscKind::Netem { delay_ms, loss },
                    ..
                } = stmt
                {
                    let (d, l) = if p.minor == Some(1) { (120, 2.0) } else { (400, 5.0) };
                    *delay_ms = Some(d);
                    *loss = Some(LossPct::from_percent(l));
                }
            }
        }
        _ => {}
    }
}

fn apply_flaw(config: &mut TcConfig, flaw: Flaw, device: &str) {
    match flaw {
        Flaw::Graded => {}
        Flaw::HtbClassPrio => {
            for stmt in &mut config.statements {
                if let TcStatement::ClassAdd { classid, extras, .. } = stmt {
                    let band = if classid.minor == Some(1) { "0" } else { "2" };
                    extras.push("prio".to_string());
                    extras.push(band.to_string());
                }
            }
        }
        Flaw::WrongThreshold => {
            let mut low_band = Vec::new();
            for (i, stmt) in config.statements.iter_mut().enumerate() {
                if let TcStatement::QdiscAdd {
                    parent: Parent::Node(p),
                    kind: QdiscKind::Netem { delay_ms, loss },
                    ..
                } = stmt
                {
                    if p.minor == Some(1) {
                        *delay_ms = Some(120);
                        *loss = Some(LossPct::from_percent(2.0));
                    } else {
                        low_band.push(i);
                    }
                }
            }
            for idx in low_band.into_iter().rev() {
                remove_at(config, idx);
            }
        }
        Flaw::MissingUdpMatch => {
            for stmt in &mut config.statements {
                if let TcStatement::FilterAdd { matches, .. } = stmt {
                    matches.retain(|m| !matches!(m, U32Match::Protocol { .. }));
                }
            }
        }
        Flaw::BadPortMask => {
            for stmt in &mut config.statements {
                if let TcStatement::FilterAdd { matches, .. } = stmt {
                    for m in matches {
                        if let U32Match::Dport { mask, .. } = m {
                            *mask = 0xffff;
                        }
                    }
                }
            }
        }
        Flaw::RedundantCatchall => {
            let major = config
                .statements
                .iter()
                .find_map(|s| match s {
                    TcStatement::QdiscAdd { parent: Parent::Root, handle, .. } => {
                        Some(handle.major)
                    }
                    _ => None,
                })
                .unwrap_or(1);
            let idx = config.statements.len();
            insert_at(
                config,
                idx,
                TcStatement::FilterAdd {
                    dev: device.to_string(),
                    parent: Handle::class(major, 0),
                    protocol: "ip".to_string(),
                    prio: 2,
                    matches: vec![U32Match::SrcIp("0.0.0.0/0".parse().unwrap())],
                    flowid: Handle::class(major, 2),
                    extras: Vec::new(),
                },
            );
        }
    }
}

// Editing helpers that keep annotation anchors aligned. Appending at
// `statements.len()` leaves trailing comments trailing.
fn insert_at(config: &mut TcConfig, idx: usize, stmt: TcStatement) {
    for a in &mut config.annotations {
        if a.position >= idx {
            a.position += 1;
        }
    }
    config.statements.insert(idx, stmt);
}

fn remove_at(config: &mut TcConfig, idx: usize) {
    for a in &mut config.annotations {
        if a.position > idx {
            a.position -= 1;
        }
    }
    config.statements.remove(idx);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompting::{PromptAssets, PromptStrategy};
    use crate::queue_twin::{build_semantic_model, QueueParams};

    const VOICE_SUBS: &str = "\
avg_wait_high <= 0.142s
drop_rate_high <= 0.4%
assign_priority(voice, high)
match(voice, 10.1.4.0/24, 16384-32767, udp)
window(20:00, 01:00)
";

    // The flawed completion the repair examples are built around.
    const FLAWED: &str = "\
tc qdisc add dev eth0 root handle 1: htb default 2
tc class add dev eth0 parent 1: classid 1:1 htb rate 1mbit prio 0
tc class add dev eth0 parent 1: classid 1:2 htb rate 1mbit prio 2
tc qdisc add dev eth0 parent 1:1 handle 10: netem delay 120ms loss 2%
tc filter add dev eth0 protocol ip parent 1:0 prio 1 u32 match ip src 10.1.4.0/24 match ip dport 16384 0xffff flowid 1:1
tc filter add dev eth0 protocol ip parent 1:0 prio 2 u32 match ip src 0.0.0.0/0 flowid 1:2
# enforce from 20:00 to 01:00
";

    fn test_model() -> crate::queue_twin::SemanticModel {
        let params = QueueParams { horizon: 600.0, ..QueueParams::default() };
        build_semantic_model(&params).unwrap()
    }

    #[test]
    fn named_flaws_reproduce_the_repair_fixture() {
        let prompt = format!(
            "Device: eth0\n\nSub-intents:\n{VOICE_SUBS}Configuration:\n\
             [MOCK:flaw=htb-class-prio,wrong-threshold,missing-udp-match,bad-port-mask,redundant-catchall]\n"
        );
        let out = complete(&prompt).unwrap();
        assert_eq!(out, FLAWED);
    }

    #[test]
    fn clean_stage_two_matches_direct_synthesis() {
        let assets = PromptAssets::builtin();
        let prompt = assets
            .config_prompt(VOICE_SUBS, "wlan1", PromptStrategy::TwoShot, None)
            .unwrap();
        let out = complete(&prompt).unwrap();
        let items = parse_subintents(VOICE_SUBS).items;
        assert_eq!(out, synthesize_config(&items, "wlan1", None).to_script());
        assert!(out.contains("dev wlan1"));
    }

    #[test]
    fn graded_quality_tracks_the_strategy() {
        let assets = PromptAssets::builtin();
        let model = test_model();
        let subs = "\
avg_wait_high <= 0.142s
avg_wait_low <= 0.355s
drop_rate_high <= 0.4%
drop_rate_low <= 2.8%
assign_priority(voice, high)
match(voice, 10.1.4.0/24, 16384-32767, udp)
window(20:00, 01:00)
";
        let mut outputs = Vec::new();
        for strategy in
            [PromptStrategy::ZeroShot, PromptStrategy::OneShot, PromptStrategy::TwoShotAqm]
        {
            let model_arg = strategy.includes_model().then_some(&model);
            let prompt = assets.config_prompt(subs, "eth0", strategy, model_arg).unwrap();
            outputs.push(complete(&format!("{prompt}[MOCK:flaws=graded]\n")).unwrap());
        }
        // Bare prompt: no impairments, no schedule, no protocol selector.
        assert!(!outputs[0].contains("netem"));
        assert!(!outputs[0].contains("# enforce"));
        assert!(!outputs[0].contains("protocol 17"));
        // One exemplar: shape present, figures off.
        assert!(outputs[1].contains("netem delay 120ms loss 2%"));
        assert!(outputs[1].contains("netem delay 400ms loss 5%"));
        assert!(outputs[1].contains("# enforce from 20:00 to 01:00"));
        // Full context: identical to the clean realization.
        let items = parse_subintents(subs).items;
        assert_eq!(outputs[2], synthesize_config(&items, "eth0", None).to_script());
    }

    #[test]
    fn stage_one_drafts_from_the_prompt_alone() {
        let assets = PromptAssets::builtin();
        let profile = TrafficProfile::default_profile();
        let intent = "Prioritize voice calls on the branch link every evening \
                      from 20:00 to 01:00 so conversations stay smooth.";
        let prompt = assets
            .subintent_prompt(intent, &profile, PromptStrategy::TwoShot, None)
            .unwrap();
        let first = complete(&prompt).unwrap();
        let second = complete(&prompt).unwrap();
        assert_eq!(first, second);
        let set = parse_subintents(&first);
        assert!(set.warnings.is_empty(), "warnings: {:?}", set.warnings);
        assert!(first.contains("assign_priority(voice, high)"));
        assert!(first.contains("match(voice, 10.1.4.0/24, 16384-32767, udp)"));
        assert!(first.contains("window(20:00, 01:00)"));
    }

    #[test]
    fn stage_one_echoes_model_bounds_verbatim() {
        let assets = PromptAssets::builtin();
        let profile = TrafficProfile::default_profile();
        let model = test_model();
        let prompt = assets
            .subintent_prompt(
                "Keep voice traffic within certified limits.",
                &profile,
                PromptStrategy::TwoShotAqm,
                Some(&model),
            )
            .unwrap();
        let out = complete(&prompt).unwrap();
        for bound in model.threshold_bounds() {
            assert!(out.contains(&bound.to_string()), "missing {bound} in {out}");
        }
    }

    #[test]
    fn markers_never_leak_into_output() {
        let assets = PromptAssets::builtin();
        let profile = TrafficProfile::default_profile();
        let prompt = assets
            .subintent_prompt("Protect gaming sessions.", &profile, PromptStrategy::ZeroShot, None)
            .unwrap();
        let out = complete(&format!("{prompt}[MOCK:flaws=graded]\n")).unwrap();
        assert!(!out.contains("[MOCK"));
    }

    #[test]
    fn junk_prompts_and_unknown_flaws_are_rejected() {
        assert!(matches!(complete("what time is it?"), Err(GatewayError::Mock(_))));
        let prompt = "Sub-intents:\nbandwidth <= 1mbit\nConfiguration:\n[MOCK:flaw=banana]\n";
        assert!(matches!(complete(prompt), Err(GatewayError::Mock(_))));
    }
}
