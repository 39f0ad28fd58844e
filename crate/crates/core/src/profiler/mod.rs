//! Offline memory profiling: bank and row discovery through the row-conflict
//! oracle, per-offset flip statistics over repeated hammering, page
//! classification and re-profiling with a resident key.

pub mod classify;
pub mod convergence;
pub mod discovery;
pub mod profile;
pub mod resident;
pub mod store;
pub mod sweep;

pub use classify::{classify, PageClass, DELTA_MIN, SIGMA_MAX_UNSTABLE};
pub use convergence::{convergence_stats, separation, ConvergencePoint, Rate};
pub use discovery::{build_windows, find_adjacent_rows, find_same_bank_chunks, full_rows};
pub use profile::{profile_window, OffsetCounts, PageProfile, PageTrace, ProfileConfig, PROFILE_FILLS};
pub use resident::{profile_with_resident_victim, ResidentCounts, Suitability};
pub use store::{read_profiles, write_profiles, ProfileRecord};
pub use sweep::{sweep, Sweep};

use thiserror::Error;

use crate::machine::MachineError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfilerError {
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error("chunk spans {found} banks, {needed} needed")]
    TooFewBanks { found: usize, needed: usize },
    #[error("invalid profiling config: {0}")]
    BadConfig(String),
    #[error("profile store: {0}")]
    Store(String),
}
