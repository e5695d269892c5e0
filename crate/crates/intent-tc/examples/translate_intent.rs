//! Full pipeline: intents in, certified artifacts on disk.

use intent_tc::pipeline::{run_pipeline, IntentJob, PipelineConfig};
use intent_tc::prompting::PromptStrategy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = tempfile::tempdir()?;
    let config = PipelineConfig {
        strategy: PromptStrategy::TwoShotAqm,
        output_dir: out.path().to_path_buf(),
        runs: 1,
        ..PipelineConfig::default()
    };

    let jobs = vec![
        IntentJob::new(
            "voice-evening",
            "Prioritize voice calls over sensor telemetry every evening from 20:00 to 01:00.",
        ),
        IntentJob::new("robots", "Keep latency under 120 ms for industrial robot traffic."),
        IntentJob::new("exams", "Reserve at least 8 mbit for online exam sessions."),
    ];

    let outcome = run_pipeline(&config, &jobs)?;
    for case in &outcome.cases {
        match &case.outcomes[0] {
            Ok(artifacts) => {
                println!("== {} ==", case.id);
                println!("{}", case.intent);
                print!("{}", artifacts.subintents);
                println!();
                print!("{}", artifacts.config);
                println!(
                    "({} sub-intent corrections, {} config corrections)",
                    artifacts.subintent_report.corrections, artifacts.config_report.corrections
                );
                println!();
            }
            Err(message) => println!("== {} == failed: {message}", case.id),
        }
    }

    // Every artifact is also on disk, one directory per intent.
    let mut files: Vec<String> = std::fs::read_dir(out.path().join("voice-evening"))?
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    files.sort();
    println!("files for voice-evening: {}", files.join(", "));
    Ok(())
}
