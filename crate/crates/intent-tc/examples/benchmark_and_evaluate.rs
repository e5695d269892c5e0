//! Generate a benchmark, run the pipeline over it at two strategy levels,
//! and score both raw and corrected output against the references.
//!
//! The graded mock flaw makes completion quality track the strategy, so
//! raw scores climb from zero-shot to two-shot-aqm while the critic holds
//! corrected output at the reference.

use intent_tc::eval::{evaluate_run, mini_benchmark, CaseOutput, MockEmbedder};
use intent_tc::pipeline::{run_pipeline, IntentJob, PipelineConfig};
use intent_tc::prompting::PromptStrategy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cases = mini_benchmark();
    println!("benchmark: {} cases", cases.len());
    let jobs: Vec<IntentJob> =
        cases.iter().map(|c| IntentJob::new(c.id.clone(), c.intent.clone())).collect();

    let embedder = MockEmbedder::new();
    for strategy in [PromptStrategy::ZeroShot, PromptStrategy::TwoShotAqm] {
        let out = tempfile::tempdir()?;
        let config = PipelineConfig {
            strategy,
            output_dir: out.path().to_path_buf(),
            mock_flaws: Some("graded".to_string()),
            ..PipelineConfig::default()
        };
        let outcome = run_pipeline(&config, &jobs)?;
        assert!(outcome.ok(), "{:?}", outcome.errors());

        let raw: Vec<Vec<CaseOutput>> = vec![outcome.raw_outputs_for_run(0)];
        let corrected: Vec<Vec<CaseOutput>> = vec![outcome.outputs_for_run(0)];
        let raw_report = evaluate_run(&cases, &raw, &embedder, strategy.name(), "mock")?;
        let fixed_report = evaluate_run(&cases, &corrected, &embedder, strategy.name(), "mock")?;
        println!(
            "{:<13} raw coverage {:.3}  corrected coverage {:.3}",
            strategy.name(),
            raw_report.stage2.coverage.mean,
            fixed_report.stage2.coverage.mean,
        );
    }
    println!();

    // The full report carries mean and sample SD for every metric.
    let out = tempfile::tempdir()?;
    let config = PipelineConfig {
        strategy: PromptStrategy::TwoShotAqm,
        output_dir: out.path().to_path_buf(),
        runs: 3,
        ..PipelineConfig::default()
    };
    let outcome = run_pipeline(&config, &jobs)?;
    let runs: Vec<Vec<CaseOutput>> =
        (0..outcome.runs).map(|r| outcome.outputs_for_run(r)).collect();
    let report = evaluate_run(&cases, &runs, &embedder, "two-shot-aqm", "mock")?;
    print!("{}", report.render_table());
    Ok(())
}
