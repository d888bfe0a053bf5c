//! Run manifests and atomic file writes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::{CliError, CliResult, RunContext};

/// Record of one command invocation: argv, the fully resolved config,
/// the effective master seed, component versions, produced files, and
/// phase timings. It lives in its own `<out>.manifest.toml` so the data
/// outputs stay byte-comparable across reruns; re-executing the embedded
/// `[config]` under `master_seed` reproduces them.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    pub outputs: Vec<String>,
    pub versions: BTreeMap<String, String>,
    pub timings_ms: BTreeMap<String, u64>,
    pub config: toml::Value,
}

impl RunManifest {
    pub fn new(
        ctx: &RunContext,
        master_seed: Option<u64>,
        config: &impl Serialize,
        outputs: &[PathBuf],
        timings_ms: BTreeMap<String, u64>,
    ) -> CliResult<Self> {
        let config = toml::Value::try_from(config)
            .map_err(|e| CliError::runtime(format!("cannot encode the resolved config: {e}")))?;
        let mut versions = BTreeMap::new();
        versions.insert("clutterlab-cli".to_string(), env!("CARGO_PKG_VERSION").to_string());
        versions.insert("clutterlab-core".to_string(), clutterlab_core::VERSION.to_string());
        Ok(RunManifest {
            command: ctx.argv.clone(),
            master_seed,
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            versions,
            timings_ms,
            config,
        })
    }

    /// Writes `<primary_out>.manifest.toml` atomically and returns its
    /// path.
    pub fn write_beside(&self, primary_out: &Path) -> CliResult<PathBuf> {
        let path = manifest_path(primary_out);
        let text = toml::to_string_pretty(self)
            .map_err(|e| CliError::runtime(format!("cannot encode the manifest: {e}")))?;
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}

/// `<out>.manifest.toml` for any output path.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.toml");
    out.with_file_name(name)
}

/// Writes through a sibling temp file and renames it into place, so a
/// reader never sees a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let mut tmp_name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path)
        .map_err(|e| CliError::runtime(format!("cannot move {} into place: {e}", tmp.display())))
}

/// Wall-clock stopwatch feeding the manifest's `timings_ms`.
pub struct Timings {
    started: Instant,
    last: Instant,
    phases: BTreeMap<String, u64>,
}

impl Timings {
    #[allow(clippy::new_without_default)]
    pub fn new() -> Self {
        let now = Instant::now();
        Timings {
            started: now,
            last: now,
            phases: BTreeMap::new(),
        }
    }

    /// Closes the phase that ran since the previous mark.
    pub fn mark(&mut self, phase: &str) {
        let now = Instant::now();
        let ms = now.duration_since(self.last).as_millis() as u64;
        *self.phases.entry(phase.to_string()).or_insert(0) += ms;
        self.last = now;
    }

    pub fn finish(mut self) -> BTreeMap<String, u64> {
        let total = self.started.elapsed().as_millis() as u64;
        self.phases.insert("total".to_string(), total);
        self.phases
    }
}
