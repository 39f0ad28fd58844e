//! Deterministic Rowhammer fault-injection simulator and behavioral
//! bit-probing attack framework.
//!
//! The crate is organised the way the attack itself is staged:
//!
//! - [`dram`]: DRAM geometry, XOR bank mapping, a sparse cell store and the
//!   stochastic, direction-stable flip response to hammering.
//! - [`memos`]: the OS memory layer the attack manipulates (FILO page-frame
//!   cache, per-process mappings, heap alignment, stack ASLR).
//! - [`machine`]: one simulated host wiring DRAM, allocator and processes
//!   together, with a strict split between the unprivileged attacker view
//!   and the privileged audit view.
//! - [`profiler`]: offline discovery of banks and adjacent rows, per-offset
//!   flip statistics, page classification and victim-resident re-profiling.
//! - [`victim`]: a TLS-1.3-shaped signing server with verify-after-sign and
//!   configurable observation channels and countermeasures.
//! - [`attacker`]: page reclaiming, key massaging, per-bit probing, binomial
//!   decoding and full key assembly.
//! - [`experiments`]: config loading, seeded experiment commands and
//!   CSV/report emission used by the `hammerprobe` binary.

pub mod attacker;
pub mod dram;
pub mod experiments;
pub mod machine;
pub mod memos;
pub mod profiler;
pub mod rng;
pub mod victim;

pub use machine::{AttackerView, Machine, PrivilegedView, VPage};
