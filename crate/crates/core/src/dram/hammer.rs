use std::collections::HashSet;

use rand::{Rng, SeedableRng};

use super::geometry::{DramGeometry, Frame, PhysAddr};
use super::model::{FillPattern, FlipDirection, FlipModel};
use super::store::{CellStore, PagePattern};
use super::DramError;
use crate::rng::SimRng;

/// Default activation count of one hammering session.
pub const DEFAULT_ACTIVATIONS: u64 = 500_000;

/// Attacker and victim rows of one bank inside an attack window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BankWindow {
    pub bank: u32,
    pub attacker_rows: Vec<u32>,
    pub victim_rows: Vec<u32>,
}

impl BankWindow {
    /// `A V A V ... A` starting at `first_row` with `r` attacker rows.
    pub fn alternating(bank: u32, first_row: u32, r: u32) -> Self {
        Self {
            bank,
            attacker_rows: (0..r).map(|i| first_row + 2 * i).collect(),
            victim_rows: (0..r.saturating_sub(1)).map(|i| first_row + 2 * i + 1).collect(),
        }
    }
}

/// One hammering session description.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HammerConfig {
    /// Attacker rows per bank (`R`).
    pub n_attacker_rows: u32,
    /// Banks hammered simultaneously (`B`).
    pub n_banks: u32,
    pub activations: u64,
    pub attacker_fill: FillPattern,
    pub window_layout: Vec<BankWindow>,
}

impl HammerConfig {
    /// Alternating layout over `banks`, all starting at `first_row`.
    pub fn alternating(banks: &[u32], first_row: u32, r: u32, fill: FillPattern) -> Self {
        Self {
            n_attacker_rows: r,
            n_banks: banks.len() as u32,
            activations: DEFAULT_ACTIVATIONS,
            attacker_fill: fill,
            window_layout: banks.iter().map(|&b| BankWindow::alternating(b, first_row, r)).collect(),
        }
    }

    pub fn with_fill(&self, fill: FillPattern) -> Self {
        Self { attacker_fill: fill, ..self.clone() }
    }

    pub fn validate(&self, geometry: &DramGeometry) -> Result<(), DramError> {
        let bad = |m: String| Err(DramError::InvalidHammerConfig(m));
        if self.n_attacker_rows < 2 {
            return bad(format!("need at least 2 attacker rows, got {}", self.n_attacker_rows));
        }
        if self.n_banks == 0 || self.n_banks > geometry.n_banks() {
            return bad(format!("bank count {} outside 1..={}", self.n_banks, geometry.n_banks()));
        }
        if self.activations == 0 {
            return bad("activations must be > 0".into());
        }
        if self.window_layout.len() != self.n_banks as usize {
            return bad(format!(
                "layout covers {} banks, config says {}",
                self.window_layout.len(),
                self.n_banks
            ));
        }
        let mut banks = HashSet::new();
        for w in &self.window_layout {
            if !banks.insert(w.bank) || w.bank >= geometry.n_banks() {
                return bad(format!("bank {} repeated or out of range", w.bank));
            }
            if w.attacker_rows.len() != self.n_attacker_rows as usize {
                return bad(format!(
                    "bank {} has {} attacker rows, expected {}",
                    w.bank,
                    w.attacker_rows.len(),
                    self.n_attacker_rows
                ));
            }
            let attackers: HashSet<u32> = w.attacker_rows.iter().copied().collect();
            for &row in w.attacker_rows.iter().chain(&w.victim_rows) {
                if row >= geometry.rows_per_bank() {
                    return bad(format!("row {row} outside bank {}", w.bank));
                }
            }
            if let Some(row) = w.victim_rows.iter().find(|r| attackers.contains(r)) {
                return Err(DramError::OverlappingRows { bank: w.bank, row: *row });
            }
        }
        Ok(())
    }
}

/// Tile rows `[first_row, first_row + n_rows)` with alternating windows of
/// `r` attacker rows. Banks are taken in consecutive groups of `b`; windows
/// are ordered by row block, then bank group. Partial blocks and groups are
/// dropped.
pub fn tile_windows(banks: &[u32], first_row: u32, n_rows: u32, r: u32, b: u32, fill: FillPattern) -> Vec<HammerConfig> {
    if r < 2 || b == 0 {
        return Vec::new();
    }
    let height = 2 * r - 1;
    let mut out = Vec::new();
    for block in 0..n_rows / height {
        for group in banks.chunks_exact(b as usize) {
            out.push(HammerConfig::alternating(group, first_row + block * height, r, fill));
        }
    }
    out
}

/// Rows needed so that [`tile_windows`] yields at least `n_windows` windows.
pub fn rows_for_windows(n_banks: u32, r: u32, b: u32, n_windows: usize) -> u32 {
    let per_block = (n_banks / b).max(1) as usize;
    (n_windows.div_ceil(per_block) as u32) * (2 * r - 1)
}

impl HammerConfig {
    /// Victim page slots covered by this window.
    pub fn victim_slots(&self) -> impl Iterator<Item = super::synth::VictimSlot> + '_ {
        self.window_layout.iter().flat_map(|w| {
            w.victim_rows
                .iter()
                .flat_map(move |&row| (0..2).map(move |page_half| super::synth::VictimSlot { bank: w.bank, row, page_half }))
        })
    }
}

/// One observed bit flip.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlipEvent {
    /// Base address of the flipped page.
    pub addr: PhysAddr,
    /// Bit offset within the page (`0..32768`).
    pub bit_offset: u16,
    pub direction: FlipDirection,
    pub iteration: u32,
}

/// Per-call context for [`Dram::hammer`].
pub struct HammerContext<'a> {
    pub iteration: u32,
    /// Frames currently touched by a running process.
    pub resident: &'a dyn Fn(Frame) -> bool,
}

impl HammerContext<'_> {
    pub fn offline(iteration: u32) -> HammerContext<'static> {
        HammerContext { iteration, resident: &|_| false }
    }
}

/// The simulated module: geometry, flip ground truth, contents and the
/// session RNG seeded from the model.
#[derive(Clone, Debug)]
pub struct Dram {
    pub geometry: DramGeometry,
    pub model: FlipModel,
    pub store: CellStore,
    rng: SimRng,
}

impl Dram {
    pub fn new(geometry: DramGeometry, model: FlipModel) -> Self {
        let store = CellStore::new(geometry.n_frames());
        let rng = SimRng::seed_from_u64(model.rng_seed);
        Self { geometry, model, store, rng }
    }

    /// Write aggressor data and run one hammering session.
    ///
    /// Every model cell in a victim row whose stored value equals its source
    /// value flips with its effective probability; flips are applied to the
    /// store and returned in (layout bank, victim row, bit) order.
    pub fn hammer(&mut self, cfg: &HammerConfig, ctx: &HammerContext<'_>) -> Result<Vec<FlipEvent>, DramError> {
        cfg.validate(&self.geometry)?;
        self.session(cfg, cfg.attacker_fill, ctx)
    }

    /// [`hammer`](Self::hammer) with `fill` in place of the configured
    /// aggressor data, for a config that has already been validated.
    pub(crate) fn session(
        &mut self,
        cfg: &HammerConfig,
        attacker_fill: FillPattern,
        ctx: &HammerContext<'_>,
    ) -> Result<Vec<FlipEvent>, DramError> {
        let pattern_idx = self.model.pattern_index(attacker_fill)?;
        let fill = match attacker_fill {
            FillPattern::AllOnes => PagePattern::Uniform(0xFF),
            FillPattern::AllZeros => PagePattern::Uniform(0),
            FillPattern::Block(k) => PagePattern::Block(k),
        };
        for w in &cfg.window_layout {
            for &row in &w.attacker_rows {
                for half in 0..2 {
                    let f = self.geometry.frame_of(w.bank, row, half)?;
                    self.store.fill(f, fill)?;
                }
            }
        }
        let mut events = Vec::new();
        for w in &cfg.window_layout {
            for &row in &w.victim_rows {
                let frames = [
                    self.geometry.frame_of(w.bank, row, 0)?,
                    self.geometry.frame_of(w.bank, row, 1)?,
                ];
                for cell in self.model.cells_in_row(w.bank, row) {
                    let frame = frames[cell.page_half() as usize];
                    let bit = cell.page_bit() as usize;
                    if self.store.bit(frame, bit) != cell.direction.source_value() {
                        continue;
                    }
                    let p = self.model.effective_prob(cell, pattern_idx, cfg.n_banks, (ctx.resident)(frame));
                    if p > 0.0 && self.rng.random::<f64>() < p {
                        self.store.toggle_bit(frame, bit);
                        events.push(FlipEvent {
                            addr: PhysAddr::from_frame(frame),
                            bit_offset: bit as u16,
                            direction: cell.direction,
                            iteration: ctx.iteration,
                        });
                    }
                }
            }
        }
        Ok(events)
    }
}
