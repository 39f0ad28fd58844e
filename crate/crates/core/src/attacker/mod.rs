//! The online attack. Everything here goes through [`AttackerView`]: page
//! handles, the row-conflict oracle, hammering and handshake outcomes.
//!
//! [`AttackerView`]: crate::machine::AttackerView

pub mod decode;
pub mod placement;
pub mod probe;
pub mod reclaim;
pub mod recover;

pub use crate::memos::infer_bit_location as infer_bit_location_under_aslr;
pub use decode::{decode, BitEstimate, F_MIN};
pub use placement::{
    control_placement, key_bit_placement, massage_key_to_page, Placement, CONGRUENCE_CLASSES, SLOT_BITS,
};
pub use probe::{probe_bit, run_trials, FaultDetector, Phase, ProbeTarget, TrialRecord};
pub use reclaim::{reclaim_flippy_page, ReclaimState, Reclaimed};
pub use recover::{
    probe_congruent_pair, recover_key, select_candidates, AttackParams, Candidate, PageOutcome, RecoveredKey,
};

use thiserror::Error;

use crate::machine::MachineError;
use crate::profiler::ProfilerError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttackError {
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error(transparent)]
    Profiler(#[from] ProfilerError),
    #[error("reclaim gave up after {rounds} rounds with a buffer of {buffer} pages")]
    ReclaimExhausted { rounds: u32, buffer: usize },
    #[error("{0}")]
    Unsupported(String),
}
