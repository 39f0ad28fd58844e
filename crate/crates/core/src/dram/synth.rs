//! Synthetic flip-model generation calibrated to per-MiB flippy-page
//! densities and reliable/unstable/unusable class mixes.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::geometry::{DramGeometry, PAGE_BITS, PAGE_BYTES};
use super::model::{FillPattern, FlipCell, FlipDirection, FlipModel};
use super::DramError;
use crate::rng::SimRng;

/// Physical victim page that profiling will cover.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VictimSlot {
    pub bank: u32,
    pub row: u32,
    pub page_half: u32,
}

/// Target fractions of observed flippy pages per class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMix {
    pub reliable: f64,
    pub unstable: f64,
    pub unusable: f64,
}

impl ClassMix {
    pub fn from_counts(reliable: u64, unstable: u64, unusable: u64) -> Self {
        let t = (reliable + unstable + unusable).max(1) as f64;
        Self { reliable: reliable as f64 / t, unstable: unstable as f64 / t, unusable: unusable as f64 / t }
    }
}

impl Default for ClassMix {
    fn default() -> Self {
        Self::from_counts(685, 2076, 26_324)
    }
}

/// Ground-truth page archetype produced by the synthesiser.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PageKind {
    Reliable,
    Unstable,
    /// A few cells, each expected to flip only a handful of times.
    UnusableSparse,
    /// Many cells with a large total flip count.
    UnusableNoisy,
}

pub const PAGE_KINDS: [PageKind; 4] =
    [PageKind::Reliable, PageKind::Unstable, PageKind::UnusableSparse, PageKind::UnusableNoisy];

/// Synthesis knobs. Expected counts are over `iterations` profiling
/// iterations; a cell with expected count `e` gets session probability
/// `e / iterations`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisParams {
    pub density_per_mib: f64,
    pub class_mix: ClassMix,
    /// Fraction of unusable pages that are noisy rather than sparse.
    pub noisy_unusable_share: f64,
    pub iterations: u32,
    pub reliable_delta: (f64, f64),
    /// Upper bound of sigma / delta for reliable pages.
    pub reliable_noise_ratio: f64,
    /// Fraction of reliable pages with no noise cells at all.
    pub reliable_clean_share: f64,
    pub unstable_delta: (f64, f64),
    pub unstable_sigma_max: f64,
    pub sparse_cell_count: (f64, f64),
    pub noisy_delta: (f64, f64),
    pub noisy_sigma: (f64, f64),
    /// Fraction of cells that stop flipping while their page is in use.
    pub resident_dead_share: f64,
    pub resident_factor: (f64, f64),
    /// Extra aggressor block sizes the model responds to.
    pub block_sizes: Vec<u32>,
}

impl Default for SynthesisParams {
    fn default() -> Self {
        Self {
            density_per_mib: 85.44,
            class_mix: ClassMix::default(),
            noisy_unusable_share: 0.4,
            iterations: 200,
            reliable_delta: (20.0, 120.0),
            reliable_noise_ratio: 0.45,
            reliable_clean_share: 0.45,
            unstable_delta: (15.0, 22.0),
            unstable_sigma_max: 62.0,
            sparse_cell_count: (0.3, 2.5),
            noisy_delta: (20.0, 60.0),
            noisy_sigma: (150.0, 700.0),
            resident_dead_share: 0.15,
            resident_factor: (0.3, 1.0),
            block_sizes: Vec::new(),
        }
    }
}

/// One synthesised flippy page.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthPage {
    pub slot: VictimSlot,
    pub kind: PageKind,
    pub target_bit: u32,
    /// Probability the page shows at least one flip during profiling.
    pub p_observed: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisReport {
    pub area_mib: f64,
    pub target_pages: f64,
    pub pages: Vec<SynthPage>,
}

impl SynthesisReport {
    pub fn expected_observed(&self, kind: PageKind) -> f64 {
        self.pages.iter().filter(|p| p.kind == kind).map(|p| p.p_observed).sum()
    }
}

fn uniform(rng: &mut SimRng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

struct CellSpec {
    expected: f64,
}

fn page_cells(kind: PageKind, p: &SynthesisParams, rng: &mut SimRng) -> Vec<CellSpec> {
    let mut cells = Vec::new();
    let split = |cells: &mut Vec<CellSpec>, total: f64, n: usize| {
        for _ in 0..n {
            cells.push(CellSpec { expected: total / n as f64 });
        }
    };
    match kind {
        PageKind::Reliable => {
            let delta = uniform(rng, p.reliable_delta);
            cells.push(CellSpec { expected: delta });
            if rng.random::<f64>() >= p.reliable_clean_share {
                let sigma = uniform(rng, (1.0, p.reliable_noise_ratio * delta));
                let n = rng.random_range(1..=3);
                split(&mut cells, sigma, n);
            }
        }
        PageKind::Unstable => {
            let delta = uniform(rng, p.unstable_delta);
            cells.push(CellSpec { expected: delta });
            let sigma = uniform(rng, ((2.2 * delta).min(p.unstable_sigma_max), p.unstable_sigma_max));
            let n = (sigma / (0.45 * delta)).ceil() as usize;
            split(&mut cells, sigma, n.max(2));
        }
        PageKind::UnusableSparse => {
            for _ in 0..rng.random_range(1..=3) {
                cells.push(CellSpec { expected: uniform(rng, p.sparse_cell_count) });
            }
        }
        PageKind::UnusableNoisy => {
            let delta = uniform(rng, p.noisy_delta);
            cells.push(CellSpec { expected: delta });
            let sigma = uniform(rng, p.noisy_sigma);
            let n = (sigma / (0.45 * delta)).ceil() as usize;
            split(&mut cells, sigma, n.max(2));
        }
    }
    cells
}

/// Probability that a cell with session probability `q` flips at least once
/// over `iterations` profiling iterations of random data with one all-ones
/// and one all-zeros session each.
pub fn observation_prob(qs: impl IntoIterator<Item = f64>, iterations: u32) -> f64 {
    let log_none: f64 = qs
        .into_iter()
        .map(|q| (0.5 + 0.5 * (1.0 - q) * (1.0 - q)).ln() * iterations as f64)
        .sum();
    1.0 - log_none.exp()
}

/// Generate a flip model whose flippy pages, when profiled over `slots`,
/// realise `params.density_per_mib` and `params.class_mix`.
pub fn synthesize_dram(
    geometry: &DramGeometry,
    slots: &[VictimSlot],
    params: &SynthesisParams,
    seed: u64,
) -> Result<(FlipModel, SynthesisReport), DramError> {
    let area_mib = slots.len() as f64 * PAGE_BYTES as f64 / (1024.0 * 1024.0);
    let target = params.density_per_mib * area_mib;
    if !(params.density_per_mib >= 0.0) || target > slots.len() as f64 {
        return Err(DramError::InfeasibleDensity { target, pages: slots.len() });
    }
    for s in slots {
        geometry.frame_of(s.bank, s.row, s.page_half)?;
    }
    let mut rng = SimRng::from_seed(crate::rng::derive_seed(seed, "synthesis"));
    let mut patterns = vec![FillPattern::AllOnes, FillPattern::AllZeros];
    patterns.extend(params.block_sizes.iter().map(|&k| FillPattern::Block(k)));
    let mut model = FlipModel::with_patterns(patterns, crate::rng::derive_u64(seed, "model-rng"));

    let mix = params.class_mix;
    let quota = |kind: PageKind| {
        target
            * match kind {
                PageKind::Reliable => mix.reliable,
                PageKind::Unstable => mix.unstable,
                PageKind::UnusableSparse => mix.unusable * (1.0 - params.noisy_unusable_share),
                PageKind::UnusableNoisy => mix.unusable * params.noisy_unusable_share,
            }
    };
    let mut expected = [0.0f64; 4];
    let mut order: Vec<usize> = (0..slots.len()).collect();
    order.shuffle(&mut rng);
    let mut pages = Vec::new();
    let mut next = order.into_iter();
    loop {
        let (ki, deficit) = PAGE_KINDS
            .iter()
            .enumerate()
            .map(|(i, &k)| (i, quota(k) - expected[i]))
            .fold((0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
        if deficit < 0.5 {
            break;
        }
        let Some(si) = next.next() else {
            return Err(DramError::InfeasibleDensity { target, pages: slots.len() });
        };
        let slot = slots[si];
        let kind = PAGE_KINDS[ki];
        let specs = page_cells(kind, params, &mut rng);
        let mut used = HashSet::new();
        let mut target_bit = 0;
        let mut qs = Vec::with_capacity(specs.len());
        for (i, spec) in specs.iter().enumerate() {
            let bit = loop {
                let b = rng.random_range(0..PAGE_BITS as u32);
                if used.insert(b) {
                    break b;
                }
            };
            if i == 0 {
                target_bit = bit;
            }
            let q = (spec.expected / params.iterations as f64).clamp(0.0, 1.0);
            qs.push(q);
            let direction = if rng.random::<bool>() { FlipDirection::OneToZero } else { FlipDirection::ZeroToOne };
            let resident_factor = if rng.random::<f64>() < params.resident_dead_share {
                0.0
            } else {
                uniform(&mut rng, params.resident_factor)
            };
            let mut multipliers = vec![1.0, 1.0];
            for _ in &params.block_sizes {
                multipliers.push(if rng.random::<f64>() < 0.3 { 0.0 } else { rng.random_range(0.2..1.5) });
            }
            model.add_cell(FlipCell {
                bank: slot.bank,
                row: slot.row,
                row_bit: slot.page_half * PAGE_BITS as u32 + bit,
                direction,
                base_prob: q,
                resident_factor,
                multipliers,
            })?;
        }
        let p_observed = observation_prob(qs, params.iterations);
        expected[ki] += p_observed;
        pages.push(SynthPage { slot, kind, target_bit, p_observed });
    }
    Ok((model, SynthesisReport { area_mib, target_pages: target, pages }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slots(n_rows: u32) -> (DramGeometry, Vec<VictimSlot>) {
        let g = DramGeometry::new(8, n_rows).unwrap();
        let s = (0..8)
            .flat_map(|bank| {
                (0..n_rows).flat_map(move |row| (0..2).map(move |h| VictimSlot { bank, row, page_half: h }))
            })
            .collect();
        (g, s)
    }

    #[test]
    fn zero_density_gives_empty_model() {
        let (g, s) = slots(32);
        let p = SynthesisParams { density_per_mib: 0.0, ..Default::default() };
        let (m, r) = synthesize_dram(&g, &s, &p, 1).unwrap();
        assert_eq!(m.n_cells(), 0);
        assert!(r.pages.is_empty());
    }

    #[test]
    fn infeasible_density_rejected() {
        let (g, s) = slots(4);
        let p = SynthesisParams { density_per_mib: 300.0, ..Default::default() };
        assert!(matches!(synthesize_dram(&g, &s, &p, 1), Err(DramError::InfeasibleDensity { .. })));
    }

    #[test]
    fn expected_observed_matches_target() {
        let (g, s) = slots(256);
        let p = SynthesisParams::default();
        let (_, r) = synthesize_dram(&g, &s, &p, 5).unwrap();
        let total: f64 = PAGE_KINDS.iter().map(|&k| r.expected_observed(k)).sum();
        assert!((total - r.target_pages).abs() / r.target_pages < 0.01, "{total} vs {}", r.target_pages);
    }

    #[test]
    fn reference_density_over_paper_area() {
        // 85.44 flippy pages per MiB over 340.38 MiB
        let target = 85.44f64 * 340.38;
        assert_eq!(target.round() as u64, 29_082);
        assert!((target - 29_085.0).abs() / 29_085.0 < 0.001);
    }

    #[test]
    fn observation_probability_limits() {
        assert_eq!(observation_prob([0.0], 200), 0.0);
        assert!((observation_prob([1.0], 200) - 1.0).abs() < 1e-12);
        let one = observation_prob([0.01], 1);
        assert!((one - (0.5 - 0.5 * 0.99f64 * 0.99)).abs() < 1e-12);
    }
}
