//! Layered run configuration: built-in defaults, then a TOML file (or the
//! `config` field of a previous run manifest), then command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use draftkit::corpus::CorpusFilterConfig;
use draftkit::lm::LmConfig;
use draftkit::metrics::EvalConfig;
use draftkit::noising::{BeamNoiseConfig, NoiseConfig, DEFAULT_SEED};
use draftkit::quality::WorkerCriteria;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QualityConfig {
    pub alpha: f64,
    /// Stopword list file; the bundled English list when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stopwords: Option<PathBuf>,
    pub workers: WorkerCriteria,
}

impl Default for QualityConfig {
    fn default() -> Self {
        Self {
            alpha: 0.4,
            stopwords: None,
            workers: WorkerCriteria::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub top_k: usize,
    pub epsilon: f64,
    pub repetition_window: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            top_k: 20,
            epsilon: 0.5,
            repetition_window: draftkit::metrics::DEFAULT_REPETITION_WINDOW,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub corpus: CorpusFilterConfig,
    pub lm: LmConfig,
    pub noise: NoiseConfig,
    pub beam: BeamNoiseConfig,
    pub quality: QualityConfig,
    pub eval: EvalConfig,
    pub analysis: AnalysisConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            corpus: CorpusFilterConfig::default(),
            lm: LmConfig::default(),
            noise: NoiseConfig::default(),
            beam: BeamNoiseConfig::default(),
            quality: QualityConfig::default(),
            eval: EvalConfig::default(),
            analysis: AnalysisConfig::default(),
        }
    }
}

impl Config {
    /// Reads a TOML config, or the resolved config of a JSON run manifest.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        if path.extension().is_some_and(|e| e == "json") {
            #[derive(Deserialize)]
            struct ManifestConfig {
                config: Config,
            }
            let m: ManifestConfig =
                serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))?;
            return Ok(m.config);
        }
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Propagates the global seed into every seeded section.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.noise.seed = seed;
        self.beam.seed = seed;
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.corpus.validate()?;
        self.noise.validate()?;
        self.beam.validate()?;
        if self.lm.order == 0 {
            bail!("lm.order must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.quality.alpha) {
            bail!("quality.alpha {} outside [0, 1]", self.quality.alpha);
        }
        if self.analysis.top_k == 0 {
            bail!("analysis.top_k must be at least 1");
        }
        if !(self.analysis.epsilon > 0.0) {
            bail!("analysis.epsilon must be positive");
        }
        if self.analysis.repetition_window == 0 || self.eval.repetition_window == 0 {
            bail!("repetition_window must be at least 1");
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let c = Config::default();
        let back: Config = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c: Config = toml::from_str("[noise]\ndelete_p = 0.2\n").unwrap();
        assert_eq!(c.noise.delete_p, 0.2);
        assert_eq!(c.noise.replace_p, 0.1);
        assert_eq!(c.quality.alpha, 0.4);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<Config>("[noise]\ndelete_prob = 0.2\n").is_err());
    }
}
