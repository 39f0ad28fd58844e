//! OS memory layer: page allocation through a FILO page-frame cache,
//! per-process virtual mappings, heap placement and stack ASLR.

pub mod allocator;
pub mod aslr;
pub mod cache;
pub mod heap;

pub use allocator::{Allocator, AllocatorConfig, TraceEvent, TraceOp};
pub use aslr::{infer_bit_location, location_trials, AslrPolicy, AslrTrialStats};
pub use cache::{PageFrameCache, DEFAULT_CACHE_CAPACITY};
pub use heap::{place_heap_object, round_up16, HeapPlacement, HEAP_ALIGN};

use std::fmt;
use thiserror::Error;

/// Process identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pid(pub u32);

/// Attacker-visible page handle: a virtual page of one process. Carries no
/// physical information.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VPage {
    pub pid: Pid,
    pub vpn: u64,
}

impl fmt::Display for VPage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}:{:05x}", self.pid.0, self.vpn)
    }
}

impl std::str::FromStr for VPage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("bad page handle {s:?}");
        let (pid, vpn) = s.strip_prefix('p').and_then(|r| r.split_once(':')).ok_or_else(bad)?;
        Ok(VPage {
            pid: Pid(pid.parse().map_err(|_| bad())?),
            vpn: u64::from_str_radix(vpn, 16).map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MemError {
    #[error("out of memory: requested {requested} pages, {available} free")]
    OutOfMemory { requested: usize, available: usize },
    #[error("allocation of zero pages")]
    ZeroPages,
    #[error("page {0} is not mapped")]
    NotMapped(VPage),
    #[error("page {0} belongs to another process")]
    ForeignPage(VPage),
    #[error("variable size {0} must be a positive multiple of 16")]
    BadVariableSize(usize),
}
