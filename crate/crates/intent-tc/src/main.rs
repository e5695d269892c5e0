//! Thin command-line front end over the library. Each subcommand maps to
//! one library entry point; all real logic lives in `intent_tc`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use intent_tc::critic::{synthesize_config, Critic, CriticReport};
use intent_tc::eval::{
    evaluate_run, generate_benchmark, load_benchmark, mini_benchmark, reference_model,
    save_benchmark, BenchmarkCase, CaseOutput, MockEmbedder, Objective,
};
use intent_tc::lm_gateway::Backend;
use intent_tc::pipeline::{run_pipeline, IntentJob, PipelineConfig};
use intent_tc::prompting::{profile_line, PromptStrategy};
use intent_tc::queue_twin::{build_semantic_model, QueueParams, SemanticModel};
use intent_tc::subintent::parse_subintents;
use intent_tc::tc_lang::parse_script;
use intent_tc::traffic_profile::{profile_filter, TrafficProfile};

#[derive(Parser)]
#[command(name = "intent-tc", version, about = "Translate traffic-shaping intents into validated tc scripts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the queue twin and print the resulting semantic model
    Simulate(SimulateArgs),
    /// Show which traffic classes an intent selects
    Profile(ProfileArgs),
    /// Translate intents end to end, leaving artifacts on disk
    Translate(TranslateArgs),
    /// Repair existing sub-intents (and optionally a script) with the critic
    Critique(CritiqueArgs),
    /// Generate a benchmark dataset with references
    Benchmark(BenchmarkArgs),
    /// Score a strategy against a benchmark and print the report table
    Evaluate(EvaluateArgs),
}

/// Flags shared by the pipeline-driving subcommands. A `--config` file is
/// loaded first; every explicit flag then overrides it.
#[derive(Args)]
struct PipelineArgs {
    /// Pipeline configuration file (JSON)
    #[arg(long)]
    config: Option<PathBuf>,
    /// zero, one, two or two-aqm
    #[arg(long)]
    strategy: Option<PromptStrategy>,
    /// mock or remote
    #[arg(long)]
    backend: Option<Backend>,
    #[arg(long)]
    seed: Option<u64>,
    /// Repetitions per intent
    #[arg(long)]
    runs: Option<usize>,
    /// Network interface the scripts target
    #[arg(long)]
    device: Option<String>,
    /// Directory the artifacts land in
    #[arg(long)]
    out: Option<PathBuf>,
    /// Semantic-model JSON replacing the built-in reference model
    #[arg(long)]
    semantic_model: Option<PathBuf>,
    /// Traffic-profile JSON replacing the built-in profile
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Directory with prompt preambles and exemplars
    #[arg(long)]
    prompts: Option<PathBuf>,
    /// Worker threads
    #[arg(long)]
    parallelism: Option<usize>,
    /// Mock-only failure injection, e.g. graded or wrong-threshold
    #[arg(long)]
    flaws: Option<String>,
}

impl PipelineArgs {
    fn build(&self) -> Result<PipelineConfig, String> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::from_path(path).map_err(|e| e.to_string())?,
            None => PipelineConfig::default(),
        };
        if let Some(strategy) = self.strategy {
            config.strategy = strategy;
        }
        if let Some(backend) = self.backend {
            config.model.backend = backend;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
            config.model.seed = seed;
        }
        if let Some(runs) = self.runs {
            config.runs = runs;
        }
        if let Some(device) = &self.device {
            config.device = device.clone();
        }
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        if self.semantic_model.is_some() {
            config.semantic_model = self.semantic_model.clone();
        }
        if self.profile.is_some() {
            config.profile = self.profile.clone();
        }
        if self.prompts.is_some() {
            config.prompts = self.prompts.clone();
        }
        if let Some(parallelism) = self.parallelism {
            config.parallelism = parallelism;
        }
        if self.flaws.is_some() {
            config.mock_flaws = self.flaws.clone();
        }
        Ok(config)
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Queue parameters file (JSON); defaults to the reference parameters
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Simulated seconds
    #[arg(long)]
    horizon: Option<f64>,
    /// Also write the semantic model to this file
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProfileArgs {
    /// Intent text to match against the profile
    #[arg(long)]
    intent: String,
    /// Traffic-profile JSON replacing the built-in profile
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Emit the selected entries as JSON
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct TranslateArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Intent text; repeat for a batch
    #[arg(long = "intent")]
    intents: Vec<String>,
    /// JSON file with a list of intent strings or {id, intent} objects
    #[arg(long = "intents")]
    intents_file: Option<PathBuf>,
}

#[derive(Args)]
struct CritiqueArgs {
    /// File with one canonical sub-intent per line
    #[arg(long)]
    subintents: PathBuf,
    /// tc script to repair against the sub-intents
    #[arg(long)]
    config: Option<PathBuf>,
    /// Synthesize the certified script when no --config is given
    #[arg(long)]
    synthesize: bool,
    #[arg(long, default_value = "eth0")]
    device: String,
    /// Semantic-model JSON replacing the built-in reference model
    #[arg(long)]
    semantic_model: Option<PathBuf>,
    /// Traffic-profile JSON replacing the built-in profile
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Also write corrected artifacts into this directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Emit the handwritten 20-case set instead of generating
    #[arg(long)]
    mini: bool,
    /// Number of generated cases
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (JSON)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Benchmark JSON produced by the benchmark subcommand
    #[arg(long)]
    benchmark: PathBuf,
    /// Score raw model output instead of critic-corrected output
    #[arg(long)]
    raw: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate_cmd(args),
        Command::Profile(args) => profile_cmd(args),
        Command::Translate(args) => translate_cmd(args),
        Command::Critique(args) => critique_cmd(args),
        Command::Benchmark(args) => benchmark_cmd(args),
        Command::Evaluate(args) => evaluate_cmd(args),
    };
    match result {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn simulate_cmd(args: SimulateArgs) -> Result<ExitCode, String> {
    let mut params = match &args.params {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
            serde_json::from_str::<QueueParams>(&text).map_err(|e| e.to_string())?
        }
        None => QueueParams::default(),
    };
    if let Some(seed) = args.seed {
        params.seed = seed;
    }
    if let Some(horizon) = args.horizon {
        params.horizon = horizon;
    }
    let model = build_semantic_model(&params).map_err(|e| e.to_string())?;
    println!("{}", model.to_json_string());
    if let Some(path) = &args.out {
        std::fs::write(path, format!("{}\n", model.to_json_string()))
            .map_err(|e| e.to_string())?;
        eprintln!("wrote semantic model to {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn load_profile(path: &Option<PathBuf>) -> Result<TrafficProfile, String> {
    match path {
        Some(p) => TrafficProfile::from_path(p).map_err(|e| e.to_string()),
        None => Ok(TrafficProfile::default_profile()),
    }
}

fn load_model(path: &Option<PathBuf>) -> Result<SemanticModel, String> {
    match path {
        Some(p) => SemanticModel::from_path(p).map_err(|e| e.to_string()),
        None => Ok(reference_model()),
    }
}

fn profile_cmd(args: ProfileArgs) -> Result<ExitCode, String> {
    let profile = load_profile(&args.profile)?;
    let selected = profile_filter(&profile, &args.intent).map_err(|e| e.to_string())?;
    if args.json {
        let subset =
            TrafficProfile { entries: selected.iter().map(|e| (*e).clone()).collect() };
        println!("{}", subset.to_json_string());
    } else if selected.is_empty() {
        println!("no traffic classes matched");
    } else {
        for entry in &selected {
            println!("{}", profile_line(entry));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn translate_jobs(args: &TranslateArgs) -> Result<Vec<IntentJob>, String> {
    let mut jobs: Vec<IntentJob> = Vec::new();
    if let Some(path) = &args.intents_file {
        let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
        match serde_json::from_str::<Vec<IntentJob>>(&text) {
            Ok(list) => jobs.extend(list),
            Err(_) => {
                let list: Vec<String> = serde_json::from_str(&text)
                    .map_err(|e| format!("{}: expected a JSON list of strings or {{id, intent}} objects: {e}", path.display()))?;
                jobs.extend(
                    list.into_iter()
                        .enumerate()
                        .map(|(i, intent)| IntentJob::new(format!("intent-{:03}", i + 1), intent)),
                );
            }
        }
    }
    for intent in &args.intents {
        jobs.push(IntentJob::new(format!("intent-{:03}", jobs.len() + 1), intent.clone()));
    }
    if jobs.is_empty() {
        return Err("no intents given (use --intent or --intents)".to_string());
    }
    Ok(jobs)
}

fn translate_cmd(args: TranslateArgs) -> Result<ExitCode, String> {
    let config = args.pipeline.build()?;
    let jobs = translate_jobs(&args)?;
    let outcome = run_pipeline(&config, &jobs).map_err(|e| e.to_string())?;
    for case in &outcome.cases {
        if case.outcomes.iter().all(Result::is_ok) {
            println!("ok   {}", case.id);
        }
    }
    for (id, run, message) in outcome.errors() {
        if outcome.runs == 1 {
            eprintln!("fail {id}: {message}");
        } else {
            eprintln!("fail {id} run {run}: {message}");
        }
    }
    println!(
        "{} intents, {} errors, artifacts under {}",
        outcome.cases.len(),
        outcome.errors().len(),
        config.output_dir.display()
    );
    Ok(if outcome.ok() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

#[derive(serde::Serialize)]
struct CritiqueDoc {
    subintents: String,
    subintent_report: CriticReport,
    config: Option<String>,
    config_report: Option<CriticReport>,
}

fn critique_cmd(args: CritiqueArgs) -> Result<ExitCode, String> {
    let model = load_model(&args.semantic_model)?;
    let profile = load_profile(&args.profile)?;
    let critic = Critic::new(model, profile).with_default_device(Some(args.device.clone()));

    let text = std::fs::read_to_string(&args.subintents).map_err(|e| e.to_string())?;
    let parsed = parse_subintents(&text);
    let (fixed, subintent_report) = critic.fix_subs(&parsed).map_err(|e| e.to_string())?;
    let subintents = fixed.to_text();

    let (config, config_report) = if let Some(path) = &args.config {
        let script = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
        let parsed = parse_script(&script).map_err(|e| e.to_string())?;
        let (corrected, report) =
            critic.fix_tc(&parsed, &fixed.items).map_err(|e| e.to_string())?;
        (Some(corrected.to_script()), Some(report))
    } else if args.synthesize {
        let synthesized = synthesize_config(&fixed.items, &args.device, Some(critic.model()));
        let (corrected, report) =
            critic.fix_tc(&synthesized, &fixed.items).map_err(|e| e.to_string())?;
        (Some(corrected.to_script()), Some(report))
    } else {
        (None, None)
    };

    let doc = CritiqueDoc { subintents, subintent_report, config, config_report };
    println!("{}", serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())?);

    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
        std::fs::write(dir.join("subintents.txt"), &doc.subintents).map_err(|e| e.to_string())?;
        if let Some(config) = &doc.config {
            std::fs::write(dir.join("config.tc"), config).map_err(|e| e.to_string())?;
        }
        let report = serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())?;
        std::fs::write(dir.join("report.json"), format!("{report}\n"))
            .map_err(|e| e.to_string())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn benchmark_cmd(args: BenchmarkArgs) -> Result<ExitCode, String> {
    let cases = if args.mini {
        mini_benchmark()
    } else {
        generate_benchmark(args.count, args.seed).map_err(|e| e.to_string())?
    };
    save_benchmark(&cases, &args.out).map_err(|e| e.to_string())?;
    let histogram: Vec<String> = Objective::ALL
        .iter()
        .map(|o| {
            let count = cases.iter().filter(|c| c.objective == *o).count();
            format!("{} {count}", o.label())
        })
        .collect();
    let time_sensitive = cases.iter().filter(|c| c.time_sensitive).count();
    let multi = cases.iter().filter(|c| c.multi_objective).count();
    println!(
        "wrote {} cases to {} ({}; time-sensitive {time_sensitive}, multi-objective {multi})",
        cases.len(),
        args.out.display(),
        histogram.join(", ")
    );
    Ok(ExitCode::SUCCESS)
}

fn evaluate_cmd(args: EvaluateArgs) -> Result<ExitCode, String> {
    let config = args.pipeline.build()?;
    let cases: Vec<BenchmarkCase> = load_benchmark(&args.benchmark).map_err(|e| e.to_string())?;
    let jobs: Vec<IntentJob> =
        cases.iter().map(|c| IntentJob::new(c.id.clone(), c.intent.clone())).collect();
    let outcome = run_pipeline(&config, &jobs).map_err(|e| e.to_string())?;
    for (id, run, message) in outcome.errors() {
        eprintln!("fail {id} run {run}: {message}");
    }
    let runs: Vec<Vec<CaseOutput>> = (0..outcome.runs)
        .map(|r| if args.raw { outcome.raw_outputs_for_run(r) } else { outcome.outputs_for_run(r) })
        .collect();
    let embedder = MockEmbedder::new();
    let report = evaluate_run(
        &cases,
        &runs,
        &embedder,
        config.strategy.name(),
        &config.model.model_name,
    )
    .map_err(|e| e.to_string())?;

    std::fs::create_dir_all(&config.output_dir).map_err(|e| e.to_string())?;
    std::fs::write(
        config.output_dir.join("eval_report.json"),
        format!("{}\n", report.to_json_string()),
    )
    .map_err(|e| e.to_string())?;
    let table = report.render_table();
    std::fs::write(config.output_dir.join("eval_report.txt"), &table)
        .map_err(|e| e.to_string())?;
    print!("{table}");
    Ok(ExitCode::SUCCESS)
}
