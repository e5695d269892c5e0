//! Prompt construction for both generation stages.
//!
//! Prompts are plain text with labelled blocks: `Traffic profile:`,
//! `Semantic model:`, `Example N:`, and the final `Intent:`/`Sub-intents:`
//! or `Sub-intents:`/`Configuration:` cue. The mock backend re-parses these
//! blocks, so the formats here and in [`crate::lm_gateway::mock`] move
//! together.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::queue_twin::SemanticModel;
use crate::traffic_profile::{ProfileEntry, TrafficProfile};
use crate::types::{PortRange, Priority, Protocol};

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("{strategy} needs {needed} exemplars, assets provide {have}")]
    NotEnoughExemplars { strategy: String, needed: usize, have: usize },
    #[error("{0} includes the semantic model, but none was supplied")]
    ModelRequired(String),
    #[error("reading prompt assets: {0}")]
    Io(#[from] std::io::Error),
    #[error("exemplars.json: {0}")]
    Json(#[from] serde_json::Error),
}

/// How much scaffolding a prompt carries. `TwoShotAqm` adds the certified
/// model thresholds on top of both exemplars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptStrategy {
    ZeroShot,
    OneShot,
    TwoShot,
    TwoShotAqm,
}

impl PromptStrategy {
    pub const ALL: [PromptStrategy; 4] = [
        PromptStrategy::ZeroShot,
        PromptStrategy::OneShot,
        PromptStrategy::TwoShot,
        PromptStrategy::TwoShotAqm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PromptStrategy::ZeroShot => "zero-shot",
            PromptStrategy::OneShot => "one-shot",
            PromptStrategy::TwoShot => "two-shot",
            PromptStrategy::TwoShotAqm => "two-shot-aqm",
        }
    }

    pub fn exemplar_count(self) -> usize {
        match self {
            PromptStrategy::ZeroShot => 0,
            PromptStrategy::OneShot => 1,
            PromptStrategy::TwoShot | PromptStrategy::TwoShotAqm => 2,
        }
    }

    pub fn includes_model(self) -> bool {
        matches!(self, PromptStrategy::TwoShotAqm)
    }
}

impl std::fmt::Display for PromptStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PromptStrategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "zero" | "zero-shot" => Ok(PromptStrategy::ZeroShot),
            "one" | "one-shot" => Ok(PromptStrategy::OneShot),
            "two" | "two-shot" => Ok(PromptStrategy::TwoShot),
            "two-aqm" | "two-shot-aqm" | "aqm" => Ok(PromptStrategy::TwoShotAqm),
            other => Err(format!(
                "unknown strategy `{other}` (expected zero, one, two or two-aqm)"
            )),
        }
    }
}

/// One worked example: an intent, its sub-intents in canonical form, and
/// the configuration realizing them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exemplar {
    pub intent: String,
    pub subintents: String,
    pub config: String,
}

/// Preambles and exemplars the prompts are assembled from. The built-in
/// set is compiled in; `from_dir` swaps in site-specific files.
#[derive(Debug, Clone)]
pub struct PromptAssets {
    pub subintent_preamble: String,
    pub config_preamble: String,
    pub exemplars: Vec<Exemplar>,
}

impl PromptAssets {
    pub fn builtin() -> Self {
        PromptAssets {
            subintent_preamble: include_str!("../assets/prompts/subintent_preamble.txt")
                .to_string(),
            config_preamble: include_str!("../assets/prompts/config_preamble.txt").to_string(),
            exemplars: serde_json::from_str(include_str!("../assets/prompts/exemplars.json"))
                .expect("built-in exemplars parse"),
        }
    }

    /// Load `subintent_preamble.txt`, `config_preamble.txt` and
    /// `exemplars.json` from a directory.
    pub fn from_dir(dir: &Path) -> Result<Self, PromptError> {
        Ok(PromptAssets {
            subintent_preamble: fs::read_to_string(dir.join("subintent_preamble.txt"))?,
            config_preamble: fs::read_to_string(dir.join("config_preamble.txt"))?,
            exemplars: serde_json::from_str(&fs::read_to_string(dir.join("exemplars.json"))?)?,
        })
    }

    fn exemplars_for(&self, strategy: PromptStrategy) -> Result<&[Exemplar], PromptError> {
        let needed = strategy.exemplar_count();
        if self.exemplars.len() < needed {
            return Err(PromptError::NotEnoughExemplars {
                strategy: strategy.name().to_string(),
                needed,
                have: self.exemplars.len(),
            });
        }
        Ok(&self.exemplars[..needed])
    }

    fn model_block_for(
        &self,
        strategy: PromptStrategy,
        model: Option<&SemanticModel>,
    ) -> Result<Option<String>, PromptError> {
        if !strategy.includes_model() {
            return Ok(None);
        }
        let model =
            model.ok_or_else(|| PromptError::ModelRequired(strategy.name().to_string()))?;
        Ok(Some(model_block(model)))
    }

    /// Stage-one prompt: intent in, sub-intents out.
    pub fn subintent_prompt(
        &self,
        intent: &str,
        profile: &TrafficProfile,
        strategy: PromptStrategy,
        model: Option<&SemanticModel>,
    ) -> Result<String, PromptError> {
        let exemplars = self.exemplars_for(strategy)?;
        let model_block = self.model_block_for(strategy, model)?;
        let mut prompt = String::new();
        prompt.push_str(&self.subintent_preamble);
        prompt.push('\n');
        prompt.push_str(&profile_block(profile));
        prompt.push('\n');
        if let Some(block) = model_block {
            prompt.push_str(&block);
            prompt.push('\n');
        }
        for (i, ex) in exemplars.iter().enumerate() {
            prompt.push_str(&format!(
                "Example {}:\nIntent: {}\nSub-intents:\n{}",
                i + 1,
                ex.intent.trim(),
                block_text(&ex.subintents)
            ));
            prompt.push('\n');
        }
        prompt.push_str(&format!("Intent: {}\nSub-intents:\n", intent.trim()));
        Ok(prompt)
    }

    /// Stage-two prompt: sub-intents in, configuration out for `device`.
    pub fn config_prompt(
        &self,
        subintents: &str,
        device: &str,
        strategy: PromptStrategy,
        model: Option<&SemanticModel>,
    ) -> Result<String, PromptError> {
        let exemplars = self.exemplars_for(strategy)?;
        let model_block = self.model_block_for(strategy, model)?;
        let mut prompt = String::new();
        prompt.push_str(&self.config_preamble);
        prompt.push('\n');
        prompt.push_str(&format!("Device: {device}\n"));
        prompt.push('\n');
        if let Some(block) = model_block {
            prompt.push_str(&block);
            prompt.push('\n');
        }
        for (i, ex) in exemplars.iter().enumerate() {
            prompt.push_str(&format!(
                "Example {}:\nSub-intents:\n{}Configuration:\n{}",
                i + 1,
                block_text(&ex.subintents),
                block_text(&ex.config)
            ));
            prompt.push('\n');
        }
        prompt.push_str(&format!("Sub-intents:\n{}Configuration:\n", block_text(subintents)));
        Ok(prompt)
    }
}

/// Text of a multi-line block, newline-terminated when non-empty.
fn block_text(text: &str) -> String {
    if text.is_empty() || text.ends_with('\n') {
        text.to_string()
    } else {
        format!("{text}\n")
    }
}

/// `Semantic model:` block listing the certified thresholds as bound
/// statements.
pub fn model_block(model: &SemanticModel) -> String {
    let mut out = String::from("Semantic model:\n");
    for bound in model.threshold_bounds() {
        out.push_str(&format!("- {bound}\n"));
    }
    out
}

/// `Traffic profile:` block, one line per entry.
pub fn profile_block(profile: &TrafficProfile) -> String {
    let mut out = String::from("Traffic profile:\n");
    for entry in &profile.entries {
        out.push_str(&profile_line(entry));
    }
    out
}

pub fn profile_line(entry: &ProfileEntry) -> String {
    format!(
        "- {}: subnet {}, ports {}, protocol {}, priority {}, keywords {}\n",
        entry.class,
        entry.subnet,
        entry.dst_ports,
        entry.protocol,
        entry.priority,
        entry.keywords.join(" ")
    )
}

/// Inverse of [`profile_line`]; the mock backend reconstructs the profile
/// the prompt was built from.
pub(crate) fn parse_profile_line(line: &str) -> Option<ProfileEntry> {
    let rest = line.trim().strip_prefix("- ")?;
    let (class, fields) = rest.split_once(':')?;
    let mut subnet = None;
    let mut ports = None;
    let mut protocol = None;
    let mut priority = None;
    let mut keywords = Vec::new();
    for field in fields.split(", ") {
        let field = field.trim();
        if let Some(v) = field.strip_prefix("subnet ") {
            subnet = v.parse().ok();
        } else if let Some(v) = field.strip_prefix("ports ") {
            ports = parse_ports(v);
        } else if let Some(v) = field.strip_prefix("protocol ") {
            protocol = v.parse::<Protocol>().ok();
        } else if let Some(v) = field.strip_prefix("priority ") {
            priority = v.parse::<Priority>().ok();
        } else if let Some(v) = field.strip_prefix("keywords ") {
            keywords = v.split_whitespace().map(str::to_string).collect();
        }
    }
    Some(ProfileEntry {
        class: class.trim().to_string(),
        subnet: subnet?,
        dst_ports: ports?,
        protocol: protocol?,
        priority: priority?,
        keywords,
    })
}

fn parse_ports(text: &str) -> Option<PortRange> {
    match text.split_once('-') {
        Some((lo, hi)) => PortRange::new(lo.trim().parse().ok()?, hi.trim().parse().ok()?).ok(),
        None => {
            let p: u16 = text.trim().parse().ok()?;
            PortRange::new(p, p).ok()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critic::synthesize_config;
    use crate::queue_twin::{build_semantic_model, QueueParams};
    use crate::subintent::{parse_subintents, serialize_subintents};

    fn model() -> SemanticModel {
        build_semantic_model(&QueueParams { horizon: 600.0, ..QueueParams::default() }).unwrap()
    }

    #[test]
    fn builtin_assets_load() {
        let assets = PromptAssets::builtin();
        assert_eq!(assets.exemplars.len(), 2);
        assert!(!assets.subintent_preamble.is_empty());
        assert!(assets.config_preamble.contains("five constraint categories"));
    }

    /// Each exemplar's configuration is exactly what the critic would
    /// build from its sub-intents, and the sub-intent text is canonical.
    #[test]
    fn exemplars_are_fixpoints() {
        for ex in PromptAssets::builtin().exemplars {
            let set = parse_subintents(&ex.subintents);
            assert!(set.warnings.is_empty(), "{:?}", set.warnings);
            assert_eq!(serialize_subintents(&set.items), ex.subintents);
            let config = synthesize_config(&set.items, "eth0", None);
            assert_eq!(config.to_script(), ex.config, "exemplar `{}`", ex.intent);
        }
    }

    #[test]
    fn strategy_names_round_trip() {
        for strategy in PromptStrategy::ALL {
            assert_eq!(strategy.name().parse::<PromptStrategy>().unwrap(), strategy);
        }
        assert_eq!("two-aqm".parse::<PromptStrategy>().unwrap(), PromptStrategy::TwoShotAqm);
        assert!("three".parse::<PromptStrategy>().is_err());
    }

    #[test]
    fn prompts_grow_with_strategy() {
        let assets = PromptAssets::builtin();
        let profile = TrafficProfile::default_profile();
        let model = model();
        let intent = "prioritize voice calls in the evening";
        let mut sub_sizes = Vec::new();
        let mut cfg_sizes = Vec::new();
        for strategy in PromptStrategy::ALL {
            let sub = assets
                .subintent_prompt(intent, &profile, strategy, Some(&model))
                .unwrap();
            let cfg = assets
                .config_prompt("assign_priority(voice, high)\n", "eth0", strategy, Some(&model))
                .unwrap();
            sub_sizes.push(sub.len());
            cfg_sizes.push(cfg.len());
        }
        assert!(sub_sizes.windows(2).all(|w| w[0] < w[1]), "{sub_sizes:?}");
        assert!(cfg_sizes.windows(2).all(|w| w[0] < w[1]), "{cfg_sizes:?}");
    }

    #[test]
    fn blocks_appear_per_strategy() {
        let assets = PromptAssets::builtin();
        let profile = TrafficProfile::default_profile();
        let model = model();
        let zero = assets
            .subintent_prompt("x", &profile, PromptStrategy::ZeroShot, None)
            .unwrap();
        assert!(!zero.contains("Example 1:"));
        assert!(!zero.contains("Semantic model:"));
        assert!(zero.trim_end().ends_with("Sub-intents:"));
        let one = assets
            .subintent_prompt("x", &profile, PromptStrategy::OneShot, None)
            .unwrap();
        assert!(one.contains("Example 1:") && !one.contains("Example 2:"));
        let aqm = assets
            .subintent_prompt("x", &profile, PromptStrategy::TwoShotAqm, Some(&model))
            .unwrap();
        assert!(aqm.contains("Example 2:") && aqm.contains("Semantic model:"));
        let cfg = assets
            .config_prompt("window(20:00, 01:00)\n", "wlan1", PromptStrategy::ZeroShot, None)
            .unwrap();
        assert!(cfg.contains("Device: wlan1"));
        assert!(cfg.trim_end().ends_with("Configuration:"));
    }

    #[test]
    fn aqm_without_model_is_an_error() {
        let assets = PromptAssets::builtin();
        let profile = TrafficProfile::default_profile();
        let err = assets
            .subintent_prompt("x", &profile, PromptStrategy::TwoShotAqm, None)
            .unwrap_err();
        assert!(matches!(err, PromptError::ModelRequired(_)));
    }

    #[test]
    fn profile_lines_round_trip() {
        for entry in &TrafficProfile::default_profile().entries {
            let line = profile_line(entry);
            let parsed = parse_profile_line(&line).unwrap();
            assert_eq!(&parsed, entry, "{line}");
        }
        assert!(parse_profile_line("- broken").is_none());
    }

    #[test]
    fn assets_load_from_directory() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("subintent_preamble.txt"), "sub preamble\n").unwrap();
        std::fs::write(dir.path().join("config_preamble.txt"), "cfg preamble\n").unwrap();
        std::fs::write(
            dir.path().join("exemplars.json"),
            r#"[{"intent":"i","subintents":"s\n","config":"c\n"}]"#,
        )
        .unwrap();
        let assets = PromptAssets::from_dir(dir.path()).unwrap();
        assert_eq!(assets.exemplars.len(), 1);
        assert!(matches!(
            assets.exemplars_for(PromptStrategy::TwoShot),
            Err(PromptError::NotEnoughExemplars { .. })
        ));
        assert!(assets
            .subintent_prompt("x", &TrafficProfile::default_profile(), PromptStrategy::OneShot, None)
            .is_ok());
    }
}
