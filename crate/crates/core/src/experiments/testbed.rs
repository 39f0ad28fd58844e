//! Building a synthetic machine whose profiled region is exactly the
//! attacker's first allocation.

use super::config::{ConfigPreset, DramSection};
use super::ExperimentError;
use crate::dram::{
    hammer::rows_for_windows, synthesize_dram, tile_windows, Dram, DramGeometry, FillPattern, SynthesisParams,
    SynthesisReport, VictimSlot, PAGE_BYTES,
};
use crate::machine::{Machine, MachineConfig};
use crate::memos::VPage;
use crate::rng::{derive_u64, streams};
use crate::victim::{SecretKey, VictimConfig};

pub struct Testbed {
    pub machine: Machine,
    /// The attacker's chunk covering the profiled region.
    pub chunk: Vec<VPage>,
    pub report: SynthesisReport,
    pub first_row: u32,
    pub n_rows: u32,
}

/// Rows and victim slots needed to profile `area_mib` under `preset`.
pub fn region(dram: &DramSection, preset: &ConfigPreset, area_mib: f64, first_row: u32) -> (u32, Vec<VictimSlot>) {
    let (r, b) = (preset.r, preset.b);
    let pages = (area_mib * (1 << 20) as f64 / PAGE_BYTES as f64).round() as usize;
    let per_window = (b * (r - 1) * 2) as usize;
    let n_rows = rows_for_windows(dram.n_banks, r, b, pages.div_ceil(per_window).max(1));
    let banks: Vec<u32> = (0..dram.n_banks).collect();
    let slots = tile_windows(&banks, first_row, n_rows, r, b, FillPattern::AllOnes)
        .iter()
        .flat_map(|w| w.victim_slots().collect::<Vec<_>>())
        .collect();
    (n_rows, slots)
}

#[allow(clippy::too_many_arguments)]
pub fn build_testbed(
    dram: &DramSection,
    preset: &ConfigPreset,
    area_mib: f64,
    synth: &SynthesisParams,
    machine: &MachineConfig,
    victim: &VictimConfig,
    key: SecretKey,
    seed: u64,
) -> Result<Testbed, ExperimentError> {
    if preset.r < 2 || preset.b == 0 || preset.b > dram.n_banks {
        return Err(ExperimentError::Config(format!("preset ({}, {}) does not fit {} banks", preset.r, preset.b, dram.n_banks)));
    }
    let per_row = 2 * dram.n_banks as usize;
    let bg = machine.background.pages;
    if bg % per_row != 0 {
        return Err(ExperimentError::Config(format!("machine.background.pages must be a multiple of {per_row}")));
    }
    let first_row = (bg / per_row) as u32;
    let (n_rows, slots) = region(dram, preset, area_mib, first_row);
    let geometry = DramGeometry::new(dram.n_banks, first_row + n_rows + dram.spare_rows)?;
    let params = SynthesisParams {
        density_per_mib: preset.density_per_mib,
        class_mix: preset.class_mix,
        ..synth.clone()
    };
    let (model, report) = synthesize_dram(&geometry, &slots, &params, derive_u64(seed, streams::DRAM_SYNTHESIS))?;
    let mut m = Machine::new(Dram::new(geometry, model), *machine, *victim, key, derive_u64(seed, "machine"))?;
    let chunk = m.attacker().alloc(n_rows as usize * per_row)?;
    Ok(Testbed { machine: m, chunk, report, first_row, n_rows })
}
