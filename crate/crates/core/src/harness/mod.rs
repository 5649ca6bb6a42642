//! Configuration, orchestration and persistence of the experiment commands.

mod checks;
mod commands;
mod config;
mod manifest;

pub use checks::*;
pub use commands::*;
pub use config::{ExperimentConfig, RecoverPath};
pub use manifest::{sha256_file, unix_now, RunManifest, MANIFEST_NAME};
