//! Drive both pipeline stages through the deterministic mock backend,
//! then inject a failure marker and watch the output degrade.

use intent_tc::eval::reference_model;
use intent_tc::lm_gateway::LmGateway;
use intent_tc::prompting::{PromptAssets, PromptStrategy};
use intent_tc::traffic_profile::{profile_filter, TrafficProfile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gateway = LmGateway::mock();
    let assets = PromptAssets::builtin();
    let profile = TrafficProfile::default_profile();
    let model = reference_model();
    let strategy = PromptStrategy::TwoShotAqm;

    let intent = "Keep voice calls responsive from 20:00 to 01:00 on the branch link.";
    let selected = profile_filter(&profile, intent)?;
    let filtered = TrafficProfile { entries: selected.into_iter().cloned().collect() };

    // Stage 1: intent to sub-intents. The mock reads the profile and
    // model blocks back out of the prompt, so the same prompt always
    // yields the same completion.
    let stage1 = assets.subintent_prompt(intent, &filtered, strategy, Some(&model))?;
    let subintents = gateway.complete(&stage1)?;
    println!("stage-1 completion:");
    print!("{subintents}");
    println!();

    // Stage 2: sub-intents to configuration.
    let stage2 = assets.config_prompt(&subintents, "eth0", strategy, Some(&model))?;
    let config = gateway.complete(&stage2)?;
    println!("stage-2 completion:");
    print!("{config}");
    println!();

    // A trailing marker line makes the mock emit a known flaw. Markers
    // never leak into completions; the critic exists to catch exactly
    // this sort of output.
    let flawed_prompt = format!("{stage2}[MOCK:flaws=wrong-threshold,missing-udp-match]\n");
    let flawed = gateway.complete(&flawed_prompt)?;
    println!("with injected flaws:");
    print!("{flawed}");
    println!();
    println!("flawed output differs: {}", flawed != config);
    Ok(())
}
