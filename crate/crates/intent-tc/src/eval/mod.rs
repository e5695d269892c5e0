//! Scoring of generated sub-intents and configurations against references:
//! sequence metrics (ROUGE-L, normalized edit distance), token-set metrics,
//! semantic-unit coverage, embedding cosine similarity, and mean/SD
//! aggregation across repeated runs.

pub mod benchmark;

pub use benchmark::{
    generate_benchmark, load_benchmark, mini_benchmark, reference_model, save_benchmark,
    BenchmarkCase, Objective,
};

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tc_lang::parse_script;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("reference unit set is empty")]
    EmptyReference,
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("embedding dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("run {run} has no output for case `{case}`")]
    MissingOutput { case: String, run: usize },
    #[error("no runs to evaluate")]
    NoRuns,
    #[error("reference config for case `{case}` does not parse: {message}")]
    BadReference { case: String, message: String },
    #[error("benchmark needs at least 5 cases, got {0}")]
    BenchmarkTooSmall(usize),
    #[error("building reference for `{0}`: {1}")]
    Reference(String, String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Lowercased tokens split on whitespace, with punctuation trimmed from the
/// edges but kept inside, so figures like `120ms`, `0.4%`, `20:00` and
/// `10.1.4.0/24` stay whole.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for raw in text.split_whitespace() {
        let token = raw.trim_matches(|c: char| {
            matches!(c, '.' | ',' | ';' | '!' | '?' | '"' | '\'' | '(' | ')' | '[' | ']' | '{' | '}')
        });
        if !token.is_empty() {
            out.push(token.to_lowercase());
        }
    }
    out
}

fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// LCS-based F1: precision against the generated length, recall against the
/// reference length. 0 when either side is empty or nothing is shared.
pub fn rouge_l_f1<T: PartialEq>(gen: &[T], refr: &[T]) -> f64 {
    if gen.is_empty() || refr.is_empty() {
        return 0.0;
    }
    let lcs = lcs_len(gen, refr) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let p = lcs / gen.len() as f64;
    let r = lcs / refr.len() as f64;
    2.0 * p * r / (p + r)
}

/// Set precision/recall/F1 over distinct tokens.
pub fn token_prf<T: Ord>(gen: &[T], refr: &[T]) -> (f64, f64, f64) {
    let gen_set: BTreeSet<&T> = gen.iter().collect();
    let ref_set: BTreeSet<&T> = refr.iter().collect();
    let shared = gen_set.intersection(&ref_set).count() as f64;
    let p = if gen_set.is_empty() { 0.0 } else { shared / gen_set.len() as f64 };
    let r = if ref_set.is_empty() { 0.0 } else { shared / ref_set.len() as f64 };
    let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f1)
}

fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Levenshtein distance divided by the longer length; 0 when both empty.
pub fn ned<T: PartialEq>(gen: &[T], refr: &[T]) -> f64 {
    let longest = gen.len().max(refr.len());
    if longest == 0 {
        return 0.0;
    }
    levenshtein(gen, refr) as f64 / longest as f64
}

/// Fraction of reference units present in the generated set. The reference
/// must be non-empty; extra generated units neither help nor hurt.
pub fn semantic_unit_coverage<S: AsRef<str>>(gen: &[S], refr: &[S]) -> Result<f64, EvalError> {
    let ref_set: BTreeSet<&str> = refr.iter().map(AsRef::as_ref).collect();
    if ref_set.is_empty() {
        return Err(EvalError::EmptyReference);
    }
    let gen_set: BTreeSet<&str> = gen.iter().map(AsRef::as_ref).collect();
    Ok(gen_set.intersection(&ref_set).count() as f64 / ref_set.len() as f64)
}

/// Text-to-vector provider. Scores are only comparable between reports
/// produced with the same provider.
pub trait Embedder {
    fn id(&self) -> &str;
    fn embed(&self, text: &str) -> Result<Vec<f64>, EvalError>;
}

/// Hashed bag-of-words vectors: deterministic, offline, and good enough to
/// rank near-identical texts above unrelated ones.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockEmbedder;

impl MockEmbedder {
    pub const DIMS: usize = 512;

    pub fn new() -> Self {
        MockEmbedder
    }
}

fn fnv1a(token: &str) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for byte in token.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

impl Embedder for MockEmbedder {
    fn id(&self) -> &str {
        "mock-bow-512"
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, EvalError> {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return Err(EvalError::EmptyText);
        }
        let mut vector = vec![0.0; Self::DIMS];
        for token in &tokens {
            vector[(fnv1a(token) % Self::DIMS as u64) as usize] += 1.0;
        }
        Ok(vector)
    }
}

/// Cosine of the two embeddings, clamped to [0, 1] for reporting.
pub fn semantic_similarity(
    gen: &str,
    refr: &str,
    embedder: &dyn Embedder,
) -> Result<f64, EvalError> {
    let a = embedder.embed(gen)?;
    let b = embedder.embed(refr)?;
    if a.len() != b.len() {
        return Err(EvalError::DimensionMismatch(a.len(), b.len()));
    }
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let norm_a = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let norm_b = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm_a == 0.0 || norm_b == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (norm_a * norm_b)).clamp(0.0, 1.0))
}

/// One case's texts from one run, matched to a [`BenchmarkCase`] by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseOutput {
    pub id: String,
    pub subintents: String,
    pub config: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageOneScores {
    pub similarity: f64,
    pub rouge_l_f1: f64,
    pub token_precision: f64,
    pub token_recall: f64,
    pub token_f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageTwoScores {
    pub coverage: f64,
    pub token_precision: f64,
    pub token_recall: f64,
    pub token_f1: f64,
    pub ned: f64,
}

/// Per-case scores, averaged across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseScores {
    pub id: String,
    pub stage1: StageOneScores,
    pub stage2: StageTwoScores,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageOneSummary {
    pub similarity: MetricSummary,
    pub rouge_l_f1: MetricSummary,
    pub token_precision: MetricSummary,
    pub token_recall: MetricSummary,
    pub token_f1: MetricSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageTwoSummary {
    pub coverage: MetricSummary,
    pub token_precision: MetricSummary,
    pub token_recall: MetricSummary,
    pub token_f1: MetricSummary,
    pub ned: MetricSummary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub strategy: String,
    pub model: String,
    pub embedder: String,
    pub runs: usize,
    pub cases: usize,
    /// False for a single run: SD is undefined and shown as 0.
    pub sd_defined: bool,
    pub per_case: Vec<CaseScores>,
    pub stage1: StageOneSummary,
    pub stage2: StageTwoSummary,
    pub notes: Vec<String>,
}

impl EvalReport {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text two-column table of the aggregate scores.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "strategy {} | model {} | embedder {} | runs {} | cases {}",
            self.strategy, self.model, self.embedder, self.runs, self.cases
        );
        let _ = writeln!(out, "{:<32} {:>8} {:>8}", "metric", "mean", "sd");
        let mut row = |name: &str, m: &MetricSummary| {
            let _ = writeln!(out, "{:<32} {:>8.3} {:>8.3}", name, m.mean, m.sd);
        };
        row("sub-intent similarity", &self.stage1.similarity);
        row("sub-intent rouge-l f1", &self.stage1.rouge_l_f1);
        row("sub-intent token precision", &self.stage1.token_precision);
        row("sub-intent token recall", &self.stage1.token_recall);
        row("sub-intent token f1", &self.stage1.token_f1);
        row("config unit coverage", &self.stage2.coverage);
        row("config token precision", &self.stage2.token_precision);
        row("config token recall", &self.stage2.token_recall);
        row("config token f1", &self.stage2.token_f1);
        row("config ned", &self.stage2.ned);
        for note in &self.notes {
            let _ = writeln!(out, "note: {note}");
        }
        out
    }
}

// Index layout of the flat per-case score array used during aggregation.
const SIM: usize = 0;
const ROUGE: usize = 1;
const S1P: usize = 2;
const S1R: usize = 3;
const S1F: usize = 4;
const COV: usize = 5;
const S2P: usize = 6;
const S2R: usize = 7;
const S2F: usize = 8;
const NED: usize = 9;
const METRICS: usize = 10;

struct RefData<'a> {
    subs_text: &'a str,
    subs_tokens: Vec<String>,
    units: Vec<String>,
    config_tokens: Vec<String>,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    var.sqrt()
}

fn score_case(
    out: &CaseOutput,
    refd: &RefData,
    run: usize,
    embedder: &dyn Embedder,
    notes: &mut Vec<String>,
) -> Result<[f64; METRICS], EvalError> {
    let mut scores = [0.0; METRICS];

    scores[SIM] = match semantic_similarity(&out.subintents, refd.subs_text, embedder) {
        Ok(v) => v,
        Err(EvalError::EmptyText) => {
            notes.push(format!("case {} run {run}: empty sub-intent text, similarity 0", out.id));
            0.0
        }
        Err(e) => return Err(e),
    };
    let gen_subs_tokens = tokenize(&out.subintents);
    scores[ROUGE] = rouge_l_f1(&gen_subs_tokens, &refd.subs_tokens);
    (scores[S1P], scores[S1R], scores[S1F]) = token_prf(&gen_subs_tokens, &refd.subs_tokens);

    let gen_units: Vec<String> = match parse_script(&out.config) {
        Ok(config) => config.semantic_units().into_iter().collect(),
        Err(e) => {
            notes.push(format!("case {} run {run}: config does not parse ({e}), no units credited", out.id));
            Vec::new()
        }
    };
    scores[COV] = semantic_unit_coverage(&gen_units, &refd.units)?;
    let gen_config_tokens = tokenize(&out.config);
    (scores[S2P], scores[S2R], scores[S2F]) = token_prf(&gen_config_tokens, &refd.config_tokens);
    scores[NED] = ned(&gen_config_tokens, &refd.config_tokens);
    Ok(scores)
}

/// Score every run of every case and aggregate. Per-run values are case
/// means; the report carries their mean and sample SD (n-1) across runs.
pub fn evaluate_run(
    cases: &[BenchmarkCase],
    runs: &[Vec<CaseOutput>],
    embedder: &dyn Embedder,
    strategy: &str,
    model: &str,
) -> Result<EvalReport, EvalError> {
    if runs.is_empty() {
        return Err(EvalError::NoRuns);
    }
    let mut notes = Vec::new();
    let mut refs = Vec::new();
    for case in cases {
        let config = parse_script(&case.ref_config).map_err(|e| EvalError::BadReference {
            case: case.id.clone(),
            message: e.to_string(),
        })?;
        refs.push(RefData {
            subs_text: &case.ref_subintents,
            subs_tokens: tokenize(&case.ref_subintents),
            units: config.semantic_units().into_iter().collect(),
            config_tokens: tokenize(&case.ref_config),
        });
    }

    let mut case_sums = vec![[0.0; METRICS]; cases.len()];
    let mut run_means: Vec<[f64; METRICS]> = Vec::new();
    for (run_idx, outputs) in runs.iter().enumerate() {
        let mut run_sum = [0.0; METRICS];
        for (ci, case) in cases.iter().enumerate() {
            let out = outputs.iter().find(|o| o.id == case.id).ok_or_else(|| {
                EvalError::MissingOutput { case: case.id.clone(), run: run_idx + 1 }
            })?;
            let scores = score_case(out, &refs[ci], run_idx + 1, embedder, &mut notes)?;
            for k in 0..METRICS {
                case_sums[ci][k] += scores[k];
                run_sum[k] += scores[k];
            }
        }
        let denom = cases.len().max(1) as f64;
        run_means.push(run_sum.map(|s| s / denom));
    }

    let per_case = cases
        .iter()
        .zip(&case_sums)
        .map(|(case, sums)| {
            let avg = sums.map(|s| s / runs.len() as f64);
            CaseScores {
                id: case.id.clone(),
                stage1: StageOneScores {
                    similarity: avg[SIM],
                    rouge_l_f1: avg[ROUGE],
                    token_precision: avg[S1P],
                    token_recall: avg[S1R],
                    token_f1: avg[S1F],
                },
                stage2: StageTwoScores {
                    coverage: avg[COV],
                    token_precision: avg[S2P],
                    token_recall: avg[S2R],
                    token_f1: avg[S2F],
                    ned: avg[NED],
                },
            }
        })
        .collect();

    let summary = |k: usize| {
        let series: Vec<f64> = run_means.iter().map(|m| m[k]).collect();
        MetricSummary { mean: mean(&series), sd: sample_sd(&series) }
    };
    let sd_defined = runs.len() > 1;
    if !sd_defined {
        notes.push("single run: sd undefined, reported as 0".to_string());
    }
    Ok(EvalReport {
        strategy: strategy.to_string(),
        model: model.to_string(),
        embedder: embedder.id().to_string(),
        runs: runs.len(),
        cases: cases.len(),
        sd_defined,
        per_case,
        stage1: StageOneSummary {
            similarity: summary(SIM),
            rouge_l_f1: summary(ROUGE),
            token_precision: summary(S1P),
            token_recall: summary(S1R),
            token_f1: summary(S1F),
        },
        stage2: StageTwoSummary {
            coverage: summary(COV),
            token_precision: summary(S2P),
            token_recall: summary(S2R),
            token_f1: summary(S2F),
            ned: summary(NED),
        },
        notes,
    })
}
