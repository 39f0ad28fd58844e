//! Synthetic DRAM: geometry and address mapping, the directional flip model,
//! a sparse cell store and the hammering session.

pub mod geometry;
pub mod hammer;
pub mod model;
pub mod serial;
pub mod store;
pub mod synth;

pub use geometry::{AddressMapping, DramAddr, DramGeometry, Frame, PhysAddr, PAGE_BITS, PAGE_BYTES, ROW_BITS, ROW_BYTES};
pub use hammer::{tile_windows, BankWindow, Dram, FlipEvent, HammerConfig, HammerContext, DEFAULT_ACTIVATIONS};
pub use model::{BankCurve, FillPattern, FlipCell, FlipDirection, FlipModel};
pub use store::{CellStore, PagePattern};
pub use synth::{synthesize_dram, ClassMix, PageKind, SynthesisParams, SynthesisReport, VictimSlot};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DramError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("address {0:#x} outside simulated memory")]
    AddressOutOfRange(u64),
    #[error("invalid DRAM coordinates {0:?}")]
    InvalidCoordinates(DramAddr),
    #[error("address {0:#x} is not page aligned")]
    Unaligned(u64),
    #[error("access of {len} bytes at offset {offset} overruns the page")]
    PageOverrun { offset: usize, len: usize },
    #[error("flip model has no response for pattern {0}")]
    UnknownPattern(FillPattern),
    #[error("invalid flip cell: {0}")]
    InvalidCell(String),
    #[error("invalid hammer config: {0}")]
    InvalidHammerConfig(String),
    #[error("attacker and victim rows overlap at bank {bank}, row {row}")]
    OverlappingRows { bank: u32, row: u32 },
    #[error("density needs {target:.1} flippy pages but only {pages} pages are profiled")]
    InfeasibleDensity { target: f64, pages: usize },
    #[error("parse error: {0}")]
    Parse(String),
}
