//! Bank and row discovery checked against the privileged address mapping.

use std::collections::{BTreeMap, BTreeSet};

use hammerprobe::dram::{tile_windows, FillPattern};
use hammerprobe::experiments::config::DramSection;
use hammerprobe::experiments::{attack_preset, build_testbed, ConfigPreset, ExperimentConfig, Testbed};
use hammerprobe::profiler::{build_windows, find_adjacent_rows, find_same_bank_chunks};
use hammerprobe::victim::SecretKey;

fn testbed(preset: &ConfigPreset, area: f64, seed: u64) -> Testbed {
    let cfg = ExperimentConfig::default();
    build_testbed(&DramSection::default(), preset, area, &cfg.synthesis, &cfg.machine, &cfg.victim, SecretKey([7; 32]), seed)
        .unwrap()
}

#[test]
fn bank_groups_match_the_mapping() {
    for seed in 0..3 {
        let mut tb = testbed(&attack_preset(), 2.0, seed);
        let groups = find_same_bank_chunks(&mut tb.machine.attacker(), &tb.chunk).unwrap();
        let pv = tb.machine.privileged();
        let mut truth: BTreeMap<u32, BTreeSet<_>> = BTreeMap::new();
        for &p in &tb.chunk {
            truth.entry(pv.dram_addr(p).unwrap().bank).or_default().insert(p);
        }
        let found: BTreeSet<BTreeSet<_>> = groups.iter().map(|g| g.iter().copied().collect()).collect();
        let expected: BTreeSet<BTreeSet<_>> = truth.into_values().collect();
        assert_eq!(found, expected, "seed {seed}");
    }
}

#[test]
fn windows_match_the_tiling() {
    let dram = DramSection::default();
    for preset in [attack_preset(), ConfigPreset { r: 12, ..attack_preset() }, ConfigPreset { b: 4, ..attack_preset() }] {
        let mut tb = testbed(&preset, 3.0, 1);
        let windows = {
            let mut view = tb.machine.attacker();
            let groups = find_same_bank_chunks(&mut view, &tb.chunk).unwrap();
            build_windows(&mut view, &groups, preset.r, preset.b).unwrap()
        };
        let pv = tb.machine.privileged();
        let seen: Vec<Vec<(u32, Vec<u32>, Vec<u32>)>> = windows
            .iter()
            .map(|w| {
                w.banks
                    .iter()
                    .map(|b| {
                        let rows = |pairs: &[[hammerprobe::VPage; 2]]| -> Vec<u32> {
                            pairs.iter().map(|p| pv.dram_addr(p[0]).unwrap().row).collect()
                        };
                        (pv.dram_addr(b.attacker_rows[0][0]).unwrap().bank, rows(&b.attacker_rows), rows(&b.victim_rows))
                    })
                    .collect()
            })
            .collect();
        let banks: Vec<u32> = (0..dram.n_banks).collect();
        let tiled: Vec<Vec<(u32, Vec<u32>, Vec<u32>)>> =
            tile_windows(&banks, tb.first_row, tb.n_rows, preset.r, preset.b, FillPattern::AllOnes)
                .into_iter()
                .map(|c| c.window_layout.into_iter().map(|w| (w.bank, w.attacker_rows, w.victim_rows)).collect())
                .collect();
        let norm = |mut v: Vec<Vec<(u32, Vec<u32>, Vec<u32>)>>| {
            for w in &mut v {
                w.sort();
            }
            v.sort();
            v
        };
        assert_eq!(norm(seen), norm(tiled), "r={} b={}", preset.r, preset.b);
    }
}

#[test]
fn adjacent_runs() {
    assert_eq!(find_adjacent_rows(&[9, 3, 4, 5, 7, 8, 4]), vec![3..=5, 7..=9]);
    assert!(find_adjacent_rows(&[]).is_empty());
}
