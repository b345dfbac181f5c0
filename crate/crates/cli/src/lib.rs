//! `skmlab`: config-driven batch runs of the sparse K-means fits and consistency experiments.
//!
//! Every subcommand reads one JSON config, writes one or more CSV tables plus a JSON
//! summary embedding the resolved config and seed, and maps failures to exit codes
//! (2 config, 3 data, 4 failed exact check).

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

use std::path::{Path, PathBuf};

pub use commands::Command;
pub use config::Config;
pub use error::{CliError, Result};

/// Output directory: `SKMLAB_OUT`, then `--out`, then `output.dir`, then `skmlab-out`.
pub fn output_dir(env: Option<&str>, flag: Option<&Path>, cfg: &Config) -> PathBuf {
    if let Some(e) = env.filter(|e| !e.is_empty()) {
        return PathBuf::from(e);
    }
    if let Some(f) = flag {
        return f.to_path_buf();
    }
    cfg.output.dir.as_deref().map_or_else(|| PathBuf::from("skmlab-out"), |d| cfg.resolve_path(d))
}

/// Load the config, run `command`, and return the written files.
pub fn run(command: Command, config: &Path, seed: Option<u64>, out: Option<&Path>) -> Result<Vec<PathBuf>> {
    let cfg = Config::load(config)?;
    let env = std::env::var("SKMLAB_OUT").ok();
    let dir = output_dir(env.as_deref(), out, &cfg);
    commands::run(command, &cfg, seed, &dir)
}
