//! The declarative layer between prose and scripts: parse canonical
//! sub-intents, and draft them straight from an intent with the built-in
//! keyword heuristics.

use intent_tc::eval::reference_model;
use intent_tc::subintent::{hints, parse_subintents, serialize_subintents};
use intent_tc::traffic_profile::{profile_filter, TrafficProfile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Round trip: canonical lines parse into typed statements and print
    // back in category order (bounds, priorities, matches, window).
    let text = "\
window(20:00, 01:00)
assign_priority(voice, high)
avg_wait_high <= 142ms
this line is not a statement
match(voice, 10.1.4.0/24, 16384-32767, udp)
";
    let set = parse_subintents(text);
    println!("parsed {} statements, {} warnings", set.items.len(), set.warnings.len());
    for warning in &set.warnings {
        println!("  warning: {warning}");
    }
    print!("{}", serialize_subintents(&set.items));
    println!();

    // Drafting from prose: profile filter picks the classes, the hint
    // lexicons read figures, priorities and windows out of the wording.
    let intent =
        "Prioritize voice calls over sensor telemetry every evening from 20:00 to 01:00, \
         keep latency under 150 ms.";
    let profile = TrafficProfile::default_profile();
    let selected = profile_filter(&profile, intent)?;
    println!("intent: {intent}");

    let drafted = hints::draft_subintents(intent, &selected, &[]);
    println!("drafted without a model:");
    print!("{}", serialize_subintents(&drafted));
    println!();

    // With certified bounds in hand the draft echoes them instead of
    // trusting figures from the prose.
    let model = reference_model();
    let drafted = hints::draft_subintents(intent, &selected, &model.threshold_bounds());
    println!("drafted against the reference model:");
    print!("{}", serialize_subintents(&drafted));
    Ok(())
}
