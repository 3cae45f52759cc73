//! Experiment driver for the MP-AMP solvers: TOML-configured runs, built-in
//! presets, deterministic CSV artifacts.

pub mod config;
pub mod csvio;
pub mod presets;
pub mod runner;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{Algorithm, Diagnostic, ExperimentConfig};
pub use runner::{run_config, RunArtifacts};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("invalid config:\n{}", format_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),

    #[error(transparent)]
    Core(#[from] mpamp_core::Error),
}

fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| format!("  {d}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Load a config from a file path or a built-in preset name.
pub fn load_config(source: &str) -> Result<ExperimentConfig, CliError> {
    let path = Path::new(source);
    let text = if path.exists() {
        std::fs::read_to_string(path)?
    } else if let Some(preset) = presets::find(source) {
        preset.toml.to_string()
    } else {
        return Err(CliError::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("no such config file or preset: {source}"),
        )));
    };
    Ok(ExperimentConfig::parse(&text)?)
}

/// Output directory precedence: explicit flag, then `MPAMP_OUT_DIR`, then
/// the config's `output_dir`, then the current directory.
pub fn resolve_out_dir(flag: Option<&str>, cfg: &ExperimentConfig) -> PathBuf {
    if let Some(dir) = flag {
        return PathBuf::from(dir);
    }
    if let Ok(dir) = std::env::var("MPAMP_OUT_DIR") {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    PathBuf::from(cfg.output_dir.clone().unwrap_or_else(|| ".".into()))
}
