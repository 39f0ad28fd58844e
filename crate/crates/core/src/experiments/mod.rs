//! Seeded experiment pipeline: configuration, synthetic test machines and
//! the commands that write reports.

pub mod commands;
pub mod config;
pub mod fixtures;
pub mod manifest;
pub mod testbed;

pub use commands::{
    cmd_aslr_demo, cmd_attack, cmd_classify, cmd_profile, cmd_report, reference_page_classes, AslrRow, AttackOutput,
    AttackSummary, BitRow, ClassRow, DensityRow, ProfileOutput, Report, Verdict,
};
pub use config::{attack_preset, reference_presets, ConfigPreset, ExperimentConfig};
pub use manifest::{sha256_hex, Manifest, MANIFEST};
pub use testbed::{build_testbed, Testbed};

use std::path::Path;

use thiserror::Error;

use crate::attacker::AttackError;
use crate::dram::DramError;
use crate::machine::MachineError;
use crate::memos::MemError;
use crate::profiler::ProfilerError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("csv: {0}")]
    Csv(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("missing input: {0}")]
    Missing(String),
    #[error("no usable page for congruence class {0}")]
    InsufficientPages(usize),
    #[error(transparent)]
    Dram(#[from] DramError),
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error(transparent)]
    Mem(#[from] MemError),
    #[error(transparent)]
    Profiler(#[from] ProfilerError),
    #[error(transparent)]
    Attack(#[from] AttackError),
}

impl ExperimentError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        ExperimentError::Io { path: path.display().to_string(), message: e.to_string() }
    }
}
