//! Replay the voice case study: a flawed two-stage draft is repaired into
//! the certified configuration by the rule-based critic.

use intent_tc::critic::Critic;
use intent_tc::eval::reference_model;
use intent_tc::subintent::parse_subintents;
use intent_tc::tc_lang::parse_script;
use intent_tc::traffic_profile::TrafficProfile;

const RAW_SUBINTENTS: &str = include_str!("../assets/case_study/raw_subintents.txt");
const RAW_CONFIG: &str = include_str!("../assets/case_study/raw_config.tc");
const CORRECTED_CONFIG: &str = include_str!("../assets/case_study/corrected_config.tc");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let critic = Critic::new(reference_model(), TrafficProfile::default_profile());

    // Stage-1 repair: the draft's thresholds are looser than what the
    // queue twin certified, so the critic tightens them.
    let parsed = parse_subintents(RAW_SUBINTENTS);
    let (subs, report) = critic.fix_subs(&parsed)?;
    println!("sub-intent repair ({} corrections):", report.corrections);
    for violation in &report.violations {
        println!("  [{}] {}", violation.rule_id, violation.message);
    }
    print!("{}", subs.to_text());
    println!();

    // Stage-2 repair: wrong netem figures, spurious class prio options, a
    // broken port mask, a missing protocol selector, a catch-all filter.
    let raw = parse_script(RAW_CONFIG)?;
    let (fixed, report) = critic.fix_tc(&raw, &subs.items)?;
    println!("config repair ({} corrections):", report.corrections);
    for violation in &report.violations {
        println!("  [{}] {} at {}", violation.rule_id, violation.message, violation.location);
    }
    println!();
    print!("{}", fixed.to_script());
    println!();

    assert_eq!(fixed.to_script(), CORRECTED_CONFIG);
    assert!(critic.lint_tc(&fixed, &subs.items).is_empty());

    // Running the critic again changes nothing.
    let (again, report) = critic.fix_tc(&fixed, &subs.items)?;
    assert_eq!(again, fixed);
    assert!(report.violations.is_empty());
    println!("repair matches the certified reference and is idempotent");
    Ok(())
}
