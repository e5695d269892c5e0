//! End-to-end orchestration: intent in, certified artifacts on disk.
//!
//! Each intent runs the two-stage chain (profile filter, stage-one prompt,
//! completion, sub-intent parse, critic pass, stage-two prompt, completion,
//! script parse, critic pass) and leaves raw plus corrected artifacts under
//! its own directory. A failing intent is recorded and skipped; it never
//! aborts the batch. Bad top-level configuration does abort.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::critic::{Critic, CriticReport};
use crate::eval::CaseOutput;
use crate::lm_gateway::{Backend, LmGateway, ModelConfig};
use crate::prompting::{PromptAssets, PromptError, PromptStrategy};
use crate::queue_twin::{QueueError, SemanticModel};
use crate::subintent::parse_subintents;
use crate::tc_lang::parse_script;
use crate::traffic_profile::{profile_filter, ProfileError, TrafficProfile};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("runs must be at least 1")]
    NoRuns,
    #[error("no intents to run")]
    NoJobs,
    #[error("duplicate intent id `{0}`")]
    DuplicateId(String),
    #[error("intent id `{0}` is not usable as a directory name")]
    BadId(String),
    #[error(transparent)]
    Queue(#[from] QueueError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Everything a batch needs. `semantic_model`, `profile` and `prompts` are
/// file overrides; unset means the built-in assets.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub device: String,
    pub semantic_model: Option<PathBuf>,
    pub profile: Option<PathBuf>,
    pub prompts: Option<PathBuf>,
    pub strategy: PromptStrategy,
    pub model: ModelConfig,
    pub output_dir: PathBuf,
    pub runs: usize,
    pub seed: u64,
    pub parallelism: usize,
    /// Extra failure-injection marker for the mock backend, e.g.
    /// `graded` or `htb-class-prio,missing-udp-match`.
    pub mock_flaws: Option<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            device: "eth0".to_string(),
            semantic_model: None,
            profile: None,
            prompts: None,
            strategy: PromptStrategy::TwoShotAqm,
            model: ModelConfig::default(),
            output_dir: PathBuf::from("out"),
            runs: 1,
            seed: 0,
            parallelism: 4,
            mock_flaws: None,
        }
    }
}

impl PipelineConfig {
    pub fn from_path(path: &Path) -> Result<Self, PipelineError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentJob {
    pub id: String,
    pub intent: String,
}

impl IntentJob {
    pub fn new(id: impl Into<String>, intent: impl Into<String>) -> Self {
        IntentJob { id: id.into(), intent: intent.into() }
    }
}

/// Raw and corrected texts for one completed run of one intent.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub raw_subintents: String,
    pub subintents: String,
    pub subintent_report: CriticReport,
    pub raw_config: String,
    pub config: String,
    pub config_report: CriticReport,
}

#[derive(Debug, Clone)]
pub struct CaseResult {
    pub id: String,
    pub intent: String,
    /// One entry per run, in run order. Errors are carried as messages.
    pub outcomes: Vec<Result<RunArtifacts, String>>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub cases: Vec<CaseResult>,
    pub runs: usize,
}

impl PipelineOutcome {
    pub fn ok(&self) -> bool {
        self.cases.iter().all(|c| c.outcomes.iter().all(Result::is_ok))
    }

    pub fn errors(&self) -> Vec<(String, usize, String)> {
        let mut out = Vec::new();
        for case in &self.cases {
            for (i, outcome) in case.outcomes.iter().enumerate() {
                if let Err(msg) = outcome {
                    out.push((case.id.clone(), i + 1, msg.clone()));
                }
            }
        }
        out
    }

    /// Corrected outputs of run `run` (0-based), skipping failed cases.
    pub fn outputs_for_run(&self, run: usize) -> Vec<CaseOutput> {
        self.collect(run, |a| (a.subintents.clone(), a.config.clone()))
    }

    /// Raw model outputs of run `run` (0-based), before any critic pass.
    pub fn raw_outputs_for_run(&self, run: usize) -> Vec<CaseOutput> {
        self.collect(run, |a| (a.raw_subintents.clone(), a.raw_config.clone()))
    }

    fn collect(&self, run: usize, f: impl Fn(&RunArtifacts) -> (String, String)) -> Vec<CaseOutput> {
        self.cases
            .iter()
            .filter_map(|case| {
                case.outcomes.get(run).and_then(|o| o.as_ref().ok()).map(|a| {
                    let (subintents, config) = f(a);
                    CaseOutput { id: case.id.clone(), subintents, config }
                })
            })
            .collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SubIntentRecord {
    intent: String,
    items: Vec<String>,
    warnings: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CaseReport {
    subintents: CriticReport,
    config: CriticReport,
}

struct Ctx {
    critic: Critic,
    gateway: LmGateway,
    assets: PromptAssets,
    profile: TrafficProfile,
    device: String,
    strategy: PromptStrategy,
    runs: usize,
    output_dir: PathBuf,
    marker: Option<String>,
}

fn id_is_safe(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

/// Same-directory temp file then rename, so readers never see a torn write.
fn write_atomic(dir: &Path, name: &str, contents: &str) -> std::io::Result<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, dir.join(name))
}

fn run_once(ctx: &Ctx, job: &IntentJob, run: usize) -> Result<RunArtifacts, String> {
    let dir = if ctx.runs == 1 {
        ctx.output_dir.join(&job.id)
    } else {
        ctx.output_dir.join(&job.id).join(format!("run-{run:03}"))
    };
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;

    let selected = profile_filter(&ctx.profile, &job.intent).map_err(|e| e.to_string())?;
    let filtered =
        TrafficProfile { entries: selected.into_iter().cloned().collect() };
    let model = Some(ctx.critic.model());

    let mut stage1 = ctx
        .assets
        .subintent_prompt(&job.intent, &filtered, ctx.strategy, model)
        .map_err(|e| e.to_string())?;
    if let Some(marker) = &ctx.marker {
        stage1.push_str(marker);
    }
    let raw_subintents = ctx.gateway.complete(&stage1).map_err(|e| e.to_string())?;
    let parsed = parse_subintents(&raw_subintents);
    let (fixed, subintent_report) = ctx.critic.fix_subs(&parsed).map_err(|e| e.to_string())?;
    let subintents = fixed.to_text();

    let mut stage2 = ctx
        .assets
        .config_prompt(&subintents, &ctx.device, ctx.strategy, model)
        .map_err(|e| e.to_string())?;
    if let Some(marker) = &ctx.marker {
        stage2.push_str(marker);
    }
    let raw_config = ctx.gateway.complete(&stage2).map_err(|e| e.to_string())?;
    let config = parse_script(&raw_config).map_err(|e| e.to_string())?;
    let (fixed_config, config_report) =
        ctx.critic.fix_tc(&config, &fixed.items).map_err(|e| e.to_string())?;
    let config_text = fixed_config.to_script();

    let record = SubIntentRecord {
        intent: job.intent.clone(),
        items: fixed.items.iter().map(ToString::to_string).collect(),
        warnings: parsed.warnings.clone(),
    };
    let report = CaseReport { subintents: subintent_report.clone(), config: config_report.clone() };
    let write = |name: &str, contents: &str| {
        write_atomic(&dir, name, contents).map_err(|e| e.to_string())
    };
    write("raw_subintents.txt", &raw_subintents)?;
    write(
        "subintents.json",
        &format!("{}\n", serde_json::to_string_pretty(&record).map_err(|e| e.to_string())?),
    )?;
    write("raw_config.tc", &raw_config)?;
    write("config.tc", &config_text)?;
    write(
        "report.json",
        &format!("{}\n", serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?),
    )?;

    Ok(RunArtifacts {
        raw_subintents,
        subintents,
        subintent_report,
        raw_config,
        config: config_text,
        config_report,
    })
}

fn process_case(ctx: &Ctx, job: &IntentJob) -> CaseResult {
    let outcomes = (1..=ctx.runs)
        .map(|run| {
            run_once(ctx, job, run).map_err(|msg| {
                let dir = if ctx.runs == 1 {
                    ctx.output_dir.join(&job.id)
                } else {
                    ctx.output_dir.join(&job.id).join(format!("run-{run:03}"))
                };
                if dir.is_dir() {
                    let _ = write_atomic(&dir, "error.txt", &format!("{msg}\n"));
                }
                msg
            })
        })
        .collect();
    CaseResult { id: job.id.clone(), intent: job.intent.clone(), outcomes }
}

pub fn run_pipeline(
    config: &PipelineConfig,
    jobs: &[IntentJob],
) -> Result<PipelineOutcome, PipelineError> {
    if config.runs == 0 {
        return Err(PipelineError::NoRuns);
    }
    if jobs.is_empty() {
        return Err(PipelineError::NoJobs);
    }
    let mut seen = std::collections::BTreeSet::new();
    for job in jobs {
        if !id_is_safe(&job.id) {
            return Err(PipelineError::BadId(job.id.clone()));
        }
        if !seen.insert(job.id.as_str()) {
            return Err(PipelineError::DuplicateId(job.id.clone()));
        }
    }

    let model = match &config.semantic_model {
        Some(path) => SemanticModel::from_path(path)?,
        None => crate::eval::reference_model(),
    };
    let profile = match &config.profile {
        Some(path) => TrafficProfile::from_path(path)?,
        None => TrafficProfile::default_profile(),
    };
    let assets = match &config.prompts {
        Some(dir) => PromptAssets::from_dir(dir)?,
        None => PromptAssets::builtin(),
    };
    let mut model_config = config.model.clone();
    if model_config.seed == 0 {
        model_config.seed = config.seed;
    }
    let marker = match (&model_config.backend, &config.mock_flaws) {
        (Backend::Mock, Some(flaws)) if !flaws.trim().is_empty() => {
            Some(format!("[MOCK:flaws={}]\n", flaws.trim()))
        }
        _ => None,
    };
    std::fs::create_dir_all(&config.output_dir)?;

    let ctx = Ctx {
        critic: Critic::new(model, profile.clone())
            .with_default_device(Some(config.device.clone())),
        gateway: LmGateway::new(model_config),
        assets,
        profile,
        device: config.device.clone(),
        strategy: config.strategy,
        runs: config.runs,
        output_dir: config.output_dir.clone(),
        marker,
    };

    let workers = config.parallelism.clamp(1, jobs.len());
    let slots: Mutex<Vec<Option<CaseResult>>> = Mutex::new(vec![None; jobs.len()]);
    std::thread::scope(|scope| {
        for stripe in 0..workers {
            let ctx = &ctx;
            let slots = &slots;
            scope.spawn(move || {
                let mut i = stripe;
                while i < jobs.len() {
                    let result = process_case(ctx, &jobs[i]);
                    slots.lock().expect("result lock")[i] = Some(result);
                    i += workers;
                }
            });
        }
    });
    let cases = slots
        .into_inner()
        .expect("result lock")
        .into_iter()
        .map(|slot| slot.expect("every job processed"))
        .collect();
    Ok(PipelineOutcome { cases, runs: config.runs })
}
