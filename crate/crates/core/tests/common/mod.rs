//! Small hand-built machines shared by the integration tests.
#![allow(dead_code)]

use hammerprobe::dram::{
    tile_windows, Dram, DramAddr, DramGeometry, FillPattern, FlipDirection, FlipModel, VictimSlot, PAGE_BITS,
};
use hammerprobe::experiments::ExperimentConfig;
use hammerprobe::machine::{BackgroundConfig, MachineConfig, WindowId};
use hammerprobe::profiler::{build_windows, find_same_bank_chunks};
use hammerprobe::rng::substream;
use hammerprobe::victim::{SecretKey, VictimConfig};
use hammerprobe::{Machine, VPage};

pub const RIG_BANKS: u32 = 4;
pub const RIG_ROWS: u32 = 64;
/// Rows the attacker holds from boot: two windows of `r = 2` per bank.
pub const RIG_HELD_ROWS: u32 = 6;

/// A machine with one flippy cell in the first victim row of the first
/// single-bank window, armed and ready.
pub struct Rig {
    pub machine: Machine,
    pub window: WindowId,
    /// Attacker page sitting on the flippy cell.
    pub page: VPage,
    pub slot: VictimSlot,
    pub chunk: Vec<VPage>,
}

pub fn quiet_machine() -> MachineConfig {
    MachineConfig { background: BackgroundConfig { pages: 0, max_churn: 0 }, ..MachineConfig::default() }
}

pub fn rig_slot() -> VictimSlot {
    let banks: Vec<u32> = (0..RIG_BANKS).collect();
    let windows = tile_windows(&banks, 0, RIG_HELD_ROWS, 2, 1, FillPattern::AllOnes);
    let slot = windows[0].victim_slots().next().unwrap();
    slot
}

pub fn rig_with_model(model: FlipModel, machine: MachineConfig, victim: VictimConfig, seed: u64) -> Rig {
    let geometry = DramGeometry::new(RIG_BANKS, RIG_ROWS).unwrap();
    let key = SecretKey::random(&mut substream(seed, "key"));
    let mut m = Machine::new(Dram::new(geometry, model), machine, victim, key, seed).unwrap();
    let slot = rig_slot();
    let (chunk, windows) = {
        let mut view = m.attacker();
        let chunk = view.alloc((RIG_HELD_ROWS * 2 * RIG_BANKS) as usize).unwrap();
        let groups = find_same_bank_chunks(&mut view, &chunk).unwrap();
        (chunk.clone(), build_windows(&mut view, &groups, 2, 1).unwrap())
    };
    let want = DramAddr { bank: slot.bank, row: slot.row, page_half: slot.page_half, byte_offset: 0 };
    let (w, page) = {
        let pv = m.privileged();
        windows
            .iter()
            .find_map(|w| w.victim_pages().find(|&p| pv.dram_addr(p) == Some(want)).map(|p| (w.clone(), p)))
            .expect("rig slot not covered by any window")
    };
    let window = m.attacker().arm_window(&w).unwrap();
    Rig { machine: m, window, page, slot, chunk }
}

/// One cell with the same probability under every aggressor fill.
pub fn single_cell_rig(prob: f64, dir: FlipDirection, page_bit: u16, seed: u64, victim: VictimConfig) -> Rig {
    let slot = rig_slot();
    let mut model = FlipModel::new(seed);
    model
        .add_uniform_cell(slot.bank, slot.row, slot.page_half * PAGE_BITS as u32 + page_bit as u32, dir, prob)
        .unwrap();
    rig_with_model(model, quiet_machine(), victim, seed)
}

pub fn attack_config(seed: u64) -> ExperimentConfig {
    ExperimentConfig { seed, ..ExperimentConfig::default() }
}
