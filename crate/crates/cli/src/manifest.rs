use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::Serialize;

use crate::config::Config;

pub const SCHEMA_VERSION: u32 = 1;

/// Record of one run, written next to its primary output as
/// `<output>.manifest.json`. Passing it back through `--config` replays the
/// same configuration.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub schema_version: u32,
    pub subcommand: &'a str,
    pub version: &'static str,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    pub config: &'a Config,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub duration_secs: f64,
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

pub struct RunRecorder<'a> {
    pub subcommand: &'a str,
    pub config: &'a Config,
    pub jobs: Option<usize>,
    started: Instant,
}

impl<'a> RunRecorder<'a> {
    pub fn start(subcommand: &'a str, config: &'a Config, jobs: Option<usize>) -> Self {
        Self {
            subcommand,
            config,
            jobs,
            started: Instant::now(),
        }
    }

    pub fn finish(self, inputs: &[&Path], outputs: &[&Path]) -> anyhow::Result<()> {
        let Some(primary) = outputs.first() else {
            return Ok(());
        };
        let m = RunManifest {
            schema_version: SCHEMA_VERSION,
            subcommand: self.subcommand,
            version: env!("CARGO_PKG_VERSION"),
            seed: self.config.seed,
            jobs: self.jobs,
            config: self.config,
            inputs: inputs.iter().map(|p| p.to_path_buf()).collect(),
            outputs: outputs.iter().map(|p| p.to_path_buf()).collect(),
            duration_secs: self.started.elapsed().as_secs_f64(),
        };
        let path = manifest_path(primary);
        let json = serde_json::to_string_pretty(&m)?;
        std::fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))
    }
}
