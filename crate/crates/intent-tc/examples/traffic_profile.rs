//! Match intents against the traffic profile by keyword overlap.

use intent_tc::prompting::profile_line;
use intent_tc::traffic_profile::{keywords, profile_filter, TrafficProfile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let profile = TrafficProfile::default_profile();
    println!("profile has {} classes", profile.entries.len());
    println!();

    let intents = [
        "Prioritize voice calls over game sessions whenever the link gets busy.",
        "Smoke and intrusion alarms need near real-time delivery.",
        "Keep the coffee machine off the guest network.",
    ];

    for intent in intents {
        println!("intent: {intent}");
        // Matching is exact on lowercased keywords, stop words removed.
        // No stemming: "streams" does not match the "stream" keyword.
        let mut terms: Vec<String> = keywords(intent)?.into_iter().collect();
        terms.sort();
        println!("  keywords: {}", terms.join(" "));
        let selected = profile_filter(&profile, intent)?;
        if selected.is_empty() {
            println!("  no classes matched");
        }
        for entry in selected {
            println!("  {}", profile_line(entry));
        }
        println!();
    }
    Ok(())
}
