//! Reclaiming, massaging and probing on small hand-built machines.

mod common;

use hammerprobe::attacker::{
    decode, key_bit_placement, massage_key_to_page, probe_bit, reclaim_flippy_page, FaultDetector, ProbeTarget,
    ReclaimState, F_MIN,
};
use hammerprobe::dram::FlipDirection;
use hammerprobe::victim::VictimConfig;

use common::single_cell_rig;

fn reclaim_state(rig: &common::Rig, offset: u16, d: FlipDirection, p: f64) -> ReclaimState {
    ReclaimState {
        window: rig.window,
        target_offset: offset,
        direction: d,
        budget: ReclaimState::budget_for(p),
        initial_buffer: 4,
        growth: 2,
        max_buffer: 64,
    }
}

#[test]
fn certain_flip_reclaims_on_the_first_round() {
    let mut rig = single_cell_rig(1.0, FlipDirection::ZeroToOne, 100, 3, VictimConfig::default());
    let frame = rig.machine.privileged().virt_to_phys(rig.page);
    let s = reclaim_state(&rig, 100, FlipDirection::ZeroToOne, 1.0);
    let mut view = rig.machine.attacker();
    view.free(&[rig.page]).unwrap();
    let r = reclaim_flippy_page(&mut view, &s).unwrap();
    assert_eq!((r.rounds, r.growth_steps), (1, 0));
    assert_eq!(rig.machine.privileged().virt_to_phys(r.page), frame);
}

/// Rounds to success are geometric with mean `1 / p`.
#[test]
fn reclaim_rounds_are_geometric() {
    let p = 0.3;
    let runs = 500;
    let mut total = 0u64;
    for seed in 0..runs {
        let mut rig = single_cell_rig(p, FlipDirection::OneToZero, 5000, seed, VictimConfig::default());
        let s = ReclaimState { budget: 10_000, ..reclaim_state(&rig, 5000, FlipDirection::OneToZero, p) };
        let mut view = rig.machine.attacker();
        view.free(&[rig.page]).unwrap();
        total += reclaim_flippy_page(&mut view, &s).unwrap().rounds as u64;
    }
    let mean = total as f64 / runs as f64;
    let se = ((1.0 - p) / (p * p) / runs as f64).sqrt();
    assert!((mean - 1.0 / p).abs() < 4.0 * se, "mean {mean:.3} vs {:.3}", 1.0 / p);
}

#[test]
fn reclaim_gives_up_when_the_page_is_gone() {
    let mut rig = single_cell_rig(0.0, FlipDirection::OneToZero, 5000, 1, VictimConfig::default());
    let s = ReclaimState { max_buffer: 8, ..reclaim_state(&rig, 5000, FlipDirection::OneToZero, 0.5) };
    let mut view = rig.machine.attacker();
    view.free(&[rig.page]).unwrap();
    assert!(reclaim_flippy_page(&mut view, &s).is_err());
}

/// Freeing the page right before the victim starts puts the key on it.
#[test]
fn massage_places_the_key_in_every_run() {
    for seed in 0..500 {
        let mut rig = single_cell_rig(0.1, FlipDirection::ZeroToOne, 2218, seed, VictimConfig::default());
        let frame = rig.machine.privileged().virt_to_phys(rig.page).unwrap();
        let malloc = (seed as usize % 200) * 16;
        massage_key_to_page(&mut rig.machine.attacker(), rig.page, malloc).unwrap();
        let (f, off) = rig.machine.privileged().victim_key_location().unwrap();
        assert_eq!(f, frame, "seed {seed}");
        assert_eq!(off, 0x10 + malloc);
    }
}

#[test]
fn interfering_allocation_misses() {
    let mut rig = single_cell_rig(0.1, FlipDirection::ZeroToOne, 2218, 9, VictimConfig::default());
    let frame = rig.machine.privileged().virt_to_phys(rig.page).unwrap();
    let mut view = rig.machine.attacker();
    view.free(&[rig.page]).unwrap();
    view.alloc(1).unwrap();
    view.launch_victim(0).unwrap();
    assert_ne!(rig.machine.privileged().victim_key_location().unwrap().0, frame);
}

/// One bit probed end to end through the error-code channel.
#[test]
fn single_bit_probe_reads_the_key() {
    for seed in 0..20 {
        let d = if seed % 2 == 0 { FlipDirection::ZeroToOne } else { FlipDirection::OneToZero };
        let offset = 3000 + seed as u16 * 11;
        let mut rig = single_cell_rig(0.3, d, offset, 100 + seed, VictimConfig::default());
        let truth = rig.machine.privileged().victim_key();
        let mut view = rig.machine.attacker();
        let detector = FaultDetector::calibrate(&mut view, 8).unwrap();
        let pl = key_bit_placement(offset, view.victim_config().heap_base, 0).unwrap();
        let target = ProbeTarget { label: rig.page, window: rig.window, direction: d };
        let mut transcript = Vec::new();
        let est = probe_bit(&mut view, &target, rig.page, pl, 0, 0.3, 200, F_MIN, &detector, &mut transcript).unwrap();
        assert_eq!(est.value, Some(truth.bit(pl.ctx_bit)), "seed {seed}: {est:?}");
        assert_eq!(transcript.len(), 400);
    }
}

/// Reported probe outcomes for two profiled pages.
#[test]
fn reported_probe_outcomes_decode() {
    let up = FlipDirection::ZeroToOne;
    let down = FlipDirection::OneToZero;
    let p = 17.0 / 200.0;
    assert_eq!(decode(0, 6, 400, up, p, F_MIN).value, Some(false));
    let zero = decode(128, 0, 400, up, p, F_MIN);
    assert_eq!(zero.value, Some(true));
    assert!(zero.confidence > 0.99);
    assert_eq!(decode(128, 6, 400, down, 14.0 / 200.0, F_MIN).value, Some(true));
}
