use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use uemr::catalogue::SourceDigest;
use uemr::config::RunConfig;

use crate::{CliError, CliResult, Ctx};

/// Every stored result carries the configuration and seeds that produced it.
#[derive(Debug, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema_version: u32,
    pub tool_version: String,
    pub analysis: String,
    pub master_seed: u64,
    /// Seed of this analysis' resampling streams.
    pub seed: u64,
    pub sources: Vec<SourceDigest>,
    pub config: RunConfig,
    pub result: T,
}

impl<T> Envelope<T> {
    pub fn new(ctx: &Ctx, analysis: &str, sources: &[SourceDigest], result: T) -> Self {
        Envelope {
            schema_version: uemr::SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            analysis: analysis.to_string(),
            master_seed: ctx.cfg.stats.seed,
            seed: ctx.cfg.resampling(analysis).seed,
            sources: sources.to_vec(),
            config: ctx.cfg.clone(),
            result,
        }
    }
}

pub fn reports_dir(out: &Path) -> PathBuf {
    out.join("reports")
}

pub fn tables_dir(out: &Path) -> PathBuf {
    out.join("tables")
}

pub fn catalogue_dir(out: &Path) -> PathBuf {
    out.join("catalogue")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(CliError::analysis)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn write_envelope<T: Serialize>(ctx: &Ctx, name: &str, sources: &[SourceDigest], result: &T) -> CliResult<()> {
    let path = reports_dir(&ctx.out).join(format!("{name}.json"));
    write_json(&path, &Envelope::new(ctx, name, sources, result))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, String> {
    let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_slice(&bytes).map_err(|e| format!("{}: {e}", path.display()))
}
