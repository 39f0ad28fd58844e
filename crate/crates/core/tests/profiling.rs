//! Profiling statistics, classification fixtures and the profile commands.

mod common;

use statrs::distribution::{Binomial, DiscreteCDF};

use hammerprobe::dram::{FlipDirection, PagePattern};
use hammerprobe::experiments::fixtures::{CLASS_COUNTS, FLIPPY_DENSITY, PROFILED_PAGES};
use hammerprobe::experiments::{cmd_classify, cmd_profile, reference_presets, ExperimentConfig};
use hammerprobe::profiler::{classify, profile_window, PageClass, ProfileConfig, DELTA_MIN};
use hammerprobe::rng::substream;

use common::single_cell_rig;

/// Flips at a cell with session probability `p` follow a binomial over the
/// sessions in which the random data held the source value.
#[test]
fn profile_counts_follow_the_binomial_oracle() {
    let p = 0.085;
    let offset = 2218u16;
    let runs = 200;
    let mut inside = 0;
    for seed in 0..runs {
        let mut rig = single_cell_rig(p, FlipDirection::ZeroToOne, offset, seed, Default::default());
        let mut view = rig.machine.attacker();
        let mut traces = Vec::new();
        let mut rng = substream(seed, "oracle");
        let prof = profile_window(
            &mut view,
            rig.window,
            &[rig.page],
            ProfileConfig { r: 2, b: 1 },
            200,
            &mut rng,
            Some(&mut traces),
        )
        .unwrap();
        let opportunities = traces[0]
            .seeds
            .iter()
            .filter(|&&s| !PagePattern::Random(s).bit(offset as usize))
            .count() as u64
            * 2;
        let flips = prof[0].counts.get(&offset).map_or(0, |c| c.zero_to_one);
        assert!(prof[0].counts.keys().all(|&o| o == offset), "only the model cell may flip");
        let d = Binomial::new(p, opportunities).unwrap();
        let lo = (0..=opportunities).find(|&k| d.cdf(k) > 0.005).unwrap();
        let hi = (0..=opportunities).find(|&k| d.cdf(k) >= 0.995).unwrap();
        inside += (lo..=hi).contains(&(flips as u64)) as u32;
    }
    assert!(inside as f64 >= 0.97 * runs as f64, "{inside}/{runs} inside the 99% interval");
}

#[test]
fn reference_rows_classify() {
    let classes: Vec<PageClass> = PROFILED_PAGES.iter().map(|r| classify(r.delta, r.sigma, false)).collect();
    let by_addr = |a: u64| classes[PROFILED_PAGES.iter().position(|r| r.addr == a).unwrap()];
    assert_eq!(by_addr(0x2c0046000), PageClass::Reliable);
    assert_eq!(by_addr(0x1cd7fc000), PageClass::Reliable);
    assert_eq!(by_addr(0x2c1c8c000), PageClass::Unusable);
    assert_eq!(by_addr(0x2c1d10000), PageClass::Unusable);
    assert_eq!(classes.iter().filter(|&&c| c == PageClass::Reliable).count(), 7);
    assert!(PROFILED_PAGES.iter().all(|r| r.delta >= DELTA_MIN));
}

/// The full default profile run: every configuration's density within 10%
/// of its target and the (15, 7) class counts within 15%.
#[test]
fn default_profile_matches_the_density_and_class_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig { seed: 1, ..ExperimentConfig::default() };
    let out = cmd_profile(&cfg, dir.path(), false).unwrap();
    assert_eq!(out.density.len(), FLIPPY_DENSITY.len());
    for (row, &(r, b, area, pages)) in out.density.iter().zip(&FLIPPY_DENSITY) {
        assert_eq!((row.r, row.b), (r, b));
        let target = pages as f64 / area;
        let rel = (row.flippy_per_mib - target).abs() / target;
        assert!(rel <= 0.10, "({r}, {b}): {:.2}/MiB vs {target:.2}", row.flippy_per_mib);
    }
    let classes = cmd_classify(dir.path()).unwrap();
    let row = classes.iter().find(|c| c.config == "r15_b7").unwrap();
    let (_, _, reliable, unstable, unusable) = CLASS_COUNTS[0];
    for (got, want) in [(row.reliable, reliable), (row.unstable, unstable), (row.unusable, unusable)] {
        let rel = (got as f64 - want as f64).abs() / want as f64;
        assert!(rel <= 0.15, "{row:?} vs {:?}", CLASS_COUNTS[0]);
    }
}

#[test]
fn zero_density_gives_an_empty_store() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.profiling.presets = reference_presets().into_iter().take(1).collect();
    cfg.profiling.presets[0].density_per_mib = 0.0;
    cfg.profiling.area_scale = 0.01;
    let out = cmd_profile(&cfg, dir.path(), false).unwrap();
    assert_eq!(out.density[0].flippy_pages, 0);
    let rows = cmd_classify(dir.path()).unwrap();
    assert_eq!((rows[0].reliable, rows[0].unstable, rows[0].unusable), (0, 0, 0));
}

#[test]
fn profile_reruns_are_byte_identical() {
    let mut cfg = ExperimentConfig::default();
    cfg.profiling.area_scale = 0.02;
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    cmd_profile(&cfg, a.path(), false).unwrap();
    cmd_profile(&cfg, b.path(), false).unwrap();
    for p in &cfg.profiling.presets {
        let name = format!("profiles_{}.csv", p.label());
        assert_eq!(std::fs::read(a.path().join(&name)).unwrap(), std::fs::read(b.path().join(&name)).unwrap());
    }
}

#[test]
fn classify_without_stores_fails() {
    let dir = tempfile::tempdir().unwrap();
    assert!(cmd_classify(dir.path()).is_err());
}
