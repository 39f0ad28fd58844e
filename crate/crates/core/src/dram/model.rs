use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::geometry::{PAGE_BITS, ROW_BITS};
use super::DramError;

/// Direction a cell flips in. Each cell has exactly one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FlipDirection {
    OneToZero,
    ZeroToOne,
}

impl FlipDirection {
    /// Value the cell must hold for the flip to be possible.
    pub fn source_value(self) -> bool {
        matches!(self, FlipDirection::OneToZero)
    }

    /// Value the cell holds after flipping.
    pub fn sink_value(self) -> bool {
        !self.source_value()
    }

    pub fn reversed(self) -> Self {
        match self {
            FlipDirection::OneToZero => FlipDirection::ZeroToOne,
            FlipDirection::ZeroToOne => FlipDirection::OneToZero,
        }
    }

    pub fn from_source(source: bool) -> Self {
        if source {
            FlipDirection::OneToZero
        } else {
            FlipDirection::ZeroToOne
        }
    }
}

impl fmt::Display for FlipDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FlipDirection::OneToZero => "1->0",
            FlipDirection::ZeroToOne => "0->1",
        })
    }
}

impl FromStr for FlipDirection {
    type Err = DramError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "1->0" | "10" => Ok(FlipDirection::OneToZero),
            "0->1" | "01" => Ok(FlipDirection::ZeroToOne),
            _ => Err(DramError::Parse(format!("bad flip direction {s:?}"))),
        }
    }
}

/// Aggressor data pattern written to the attacker rows before hammering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FillPattern {
    AllOnes,
    AllZeros,
    /// Alternating runs of `k` one-bits and `k` zero-bits.
    Block(u32),
}

impl fmt::Display for FillPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FillPattern::AllOnes => f.write_str("ones"),
            FillPattern::AllZeros => f.write_str("zeros"),
            FillPattern::Block(k) => write!(f, "block{k}"),
        }
    }
}

impl FromStr for FillPattern {
    type Err = DramError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ones" => Ok(FillPattern::AllOnes),
            "zeros" => Ok(FillPattern::AllZeros),
            _ => s
                .strip_prefix("block")
                .and_then(|k| k.parse().ok())
                .filter(|&k: &u32| k > 0)
                .map(FillPattern::Block)
                .ok_or_else(|| DramError::Parse(format!("bad fill pattern {s:?}"))),
        }
    }
}

/// One flippy cell of the synthetic module.
#[derive(Clone, Debug, PartialEq)]
pub struct FlipCell {
    pub bank: u32,
    pub row: u32,
    /// Bit index within the 8 KiB row (`0..65536`).
    pub row_bit: u32,
    pub direction: FlipDirection,
    /// Flip probability for one hammering session.
    pub base_prob: f64,
    /// Multiplier applied while the cell's page is owned by a running
    /// process that keeps touching it (its accesses recharge the row).
    pub resident_factor: f64,
    /// Per-pattern multipliers, aligned with [`FlipModel::patterns`].
    pub multipliers: Vec<f64>,
}

impl FlipCell {
    pub fn page_half(&self) -> u32 {
        self.row_bit / PAGE_BITS as u32
    }

    pub fn page_bit(&self) -> u32 {
        self.row_bit % PAGE_BITS as u32
    }
}

/// Optional concave per-bank effectiveness curve: flips grow with the number
/// of simultaneously hammered banks up to `peak`, then collapse to `drop`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BankCurve {
    pub peak: u32,
    pub drop: f64,
}

impl BankCurve {
    pub fn factor(&self, banks: u32) -> f64 {
        if banks <= self.peak {
            (banks as f64 / self.peak as f64).sqrt()
        } else {
            self.drop
        }
    }
}

/// Ground truth of the synthetic module: which cells flip, in which
/// direction, and how likely under each aggressor pattern. Cells absent from
/// the model never flip.
#[derive(Clone, Debug, PartialEq)]
pub struct FlipModel {
    patterns: Vec<FillPattern>,
    rows: BTreeMap<(u32, u32), Vec<FlipCell>>,
    pub rng_seed: u64,
    pub bank_curve: Option<BankCurve>,
}

impl FlipModel {
    /// Empty model responding to all-ones and all-zeros aggressors.
    pub fn new(rng_seed: u64) -> Self {
        Self::with_patterns(vec![FillPattern::AllOnes, FillPattern::AllZeros], rng_seed)
    }

    pub fn with_patterns(patterns: Vec<FillPattern>, rng_seed: u64) -> Self {
        Self { patterns, rows: BTreeMap::new(), rng_seed, bank_curve: None }
    }

    pub fn patterns(&self) -> &[FillPattern] {
        &self.patterns
    }

    pub fn pattern_index(&self, p: FillPattern) -> Result<usize, DramError> {
        self.patterns
            .iter()
            .position(|&q| q == p)
            .ok_or(DramError::UnknownPattern(p))
    }

    /// Insert a cell with multiplier 1 for every known pattern.
    pub fn add_uniform_cell(
        &mut self,
        bank: u32,
        row: u32,
        row_bit: u32,
        direction: FlipDirection,
        base_prob: f64,
    ) -> Result<(), DramError> {
        let n = self.patterns.len();
        self.add_cell(FlipCell {
            bank,
            row,
            row_bit,
            direction,
            base_prob,
            resident_factor: 1.0,
            multipliers: vec![1.0; n],
        })
    }

    /// Insert or replace a cell. Cells stay sorted by row bit.
    pub fn add_cell(&mut self, cell: FlipCell) -> Result<(), DramError> {
        if cell.row_bit as usize >= ROW_BITS {
            return Err(DramError::InvalidCell(format!("row bit {} out of range", cell.row_bit)));
        }
        if cell.multipliers.len() != self.patterns.len() {
            return Err(DramError::InvalidCell(format!(
                "cell has {} multipliers, model knows {} patterns",
                cell.multipliers.len(),
                self.patterns.len()
            )));
        }
        let finite_nonneg = |x: f64| x.is_finite() && x >= 0.0;
        if !(finite_nonneg(cell.base_prob) && cell.base_prob <= 1.0)
            || !finite_nonneg(cell.resident_factor)
            || !cell.multipliers.iter().all(|&m| finite_nonneg(m))
        {
            return Err(DramError::InvalidCell("probabilities must be finite and non-negative".into()));
        }
        let row = self.rows.entry((cell.bank, cell.row)).or_default();
        match row.binary_search_by_key(&cell.row_bit, |c| c.row_bit) {
            Ok(i) => row[i] = cell,
            Err(i) => row.insert(i, cell),
        }
        Ok(())
    }

    pub fn cells_in_row(&self, bank: u32, row: u32) -> &[FlipCell] {
        self.rows.get(&(bank, row)).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn cell(&self, bank: u32, row: u32, row_bit: u32) -> Option<&FlipCell> {
        let cells = self.cells_in_row(bank, row);
        cells
            .binary_search_by_key(&row_bit, |c| c.row_bit)
            .ok()
            .map(|i| &cells[i])
    }

    pub fn cells(&self) -> impl Iterator<Item = &FlipCell> {
        self.rows.values().flatten()
    }

    pub fn n_cells(&self) -> usize {
        self.rows.values().map(Vec::len).sum()
    }

    /// Effective per-session flip probability, clamped to `[0, 1]`.
    pub fn effective_prob(&self, cell: &FlipCell, pattern_idx: usize, banks: u32, resident: bool) -> f64 {
        let mut p = cell.base_prob * cell.multipliers[pattern_idx];
        if let Some(curve) = &self.bank_curve {
            p *= curve.factor(banks);
        }
        if resident {
            p *= cell.resident_factor;
        }
        p.clamp(0.0, 1.0)
    }
}
