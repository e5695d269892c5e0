//! Assemble the two-stage prompts at each strategy level.

use intent_tc::eval::reference_model;
use intent_tc::prompting::{PromptAssets, PromptStrategy};
use intent_tc::traffic_profile::{profile_filter, TrafficProfile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let assets = PromptAssets::builtin();
    let profile = TrafficProfile::default_profile();
    let model = reference_model();
    let intent = "Prioritize voice calls over game sessions during the evening.";

    // The stage-one prompt only carries the profile classes the intent
    // actually mentions.
    let selected = profile_filter(&profile, intent)?;
    let filtered = TrafficProfile { entries: selected.into_iter().cloned().collect() };

    for strategy in PromptStrategy::ALL {
        let prompt = assets.subintent_prompt(intent, &filtered, strategy, Some(&model))?;
        println!(
            "{:<13} stage-1 {:>5} chars, {} exemplars, model block: {}",
            strategy.name(),
            prompt.len(),
            strategy.exemplar_count(),
            if strategy.includes_model() { "yes" } else { "no" }
        );
    }
    println!();

    let subintents = "\
avg_wait_high <= 0.142s
assign_priority(voice, high)
match(voice, 10.1.4.0/24, 16384-32767, udp)
";
    let prompt = assets.config_prompt(subintents, "eth0", PromptStrategy::TwoShotAqm, Some(&model))?;
    println!("two-shot-aqm stage-2 prompt:");
    println!("----------------------------------------");
    print!("{prompt}");
    println!("----------------------------------------");
    Ok(())
}
