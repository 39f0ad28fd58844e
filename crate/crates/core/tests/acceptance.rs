//! The ten acceptance criteria, one PASS/FAIL line each.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete, DiscreteCDF};

use hammerprobe::attacker::{key_bit_placement, reclaim_flippy_page, ReclaimState, CONGRUENCE_CLASSES, SLOT_BITS};
use hammerprobe::dram::{
    Dram, DramGeometry, FillPattern, FlipDirection, FlipModel, HammerConfig, HammerContext, PAGE_BITS, PAGE_BYTES,
};
use hammerprobe::experiments::config::DramSection;
use hammerprobe::experiments::{
    attack_preset, build_testbed, cmd_aslr_demo, cmd_attack, reference_page_classes, AttackOutput, ConfigPreset,
    ExperimentConfig,
};
use hammerprobe::memos::{place_heap_object, round_up16, HEAP_ALIGN};
use hammerprobe::profiler::{build_windows, convergence_stats, find_same_bank_chunks, profile_window, PageClass};
use hammerprobe::rng::substream;
use hammerprobe::victim::{ChannelMode, SecretKey, CTX_BYTES, KEY_BITS};

use common::{attack_config, single_cell_rig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn attack(cfg: &ExperimentConfig, dir: &Path) -> (AttackOutput, Duration) {
    let t = Instant::now();
    let out = cmd_attack(cfg, dir, true).unwrap_or_else(|e| panic!("attack seed {}: {e}", cfg.seed));
    (out, t.elapsed())
}

fn values(o: &AttackOutput) -> Vec<Option<bool>> {
    o.recovered.bits.iter().map(|b| b.value).collect()
}

const ATTACK_SEEDS: std::ops::RangeInclusive<u64> = 1..=20;
const CHANNEL_SEEDS: std::ops::RangeInclusive<u64> = 1..=10;

/// Runs shared between the recovery, channel and determinism criteria.
struct BaseRuns {
    runs: Vec<(u64, AttackOutput, Duration)>,
    first_dir: tempfile::TempDir,
}

fn base_runs() -> BaseRuns {
    let first_dir = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for seed in ATTACK_SEEDS {
        let tmp;
        let dir = if seed == *ATTACK_SEEDS.start() {
            first_dir.path()
        } else {
            tmp = tempfile::tempdir().unwrap();
            tmp.path()
        };
        let (o, t) = attack(&attack_config(seed), dir);
        runs.push((seed, o, t));
    }
    BaseRuns { runs, first_dir }
}

fn c1_recovery(base: &BaseRuns) -> Outcome {
    let mut bad = Vec::new();
    let mut slowest = Duration::ZERO;
    for (seed, o, t) in &base.runs {
        slowest = slowest.max(*t);
        let right = o.truth.map(|k| o.recovered.accuracy(&k)).unwrap_or(0.0);
        if o.summary.decoded != KEY_BITS || right < 1.0 || *t > Duration::from_secs(60) {
            bad.push(format!("seed {seed}: {} decoded, accuracy {right:.4}, {t:.1?}", o.summary.decoded));
        }
    }
    let pages: Vec<usize> = base.runs.iter().map(|(_, o, _)| o.summary.pages_used).collect();
    outcome(
        bad.is_empty(),
        format!(
            "{}/{} seeds with 256/256 correct bits, slowest {slowest:.1?}, pages used {}..={}{}",
            base.runs.len() - bad.len(),
            base.runs.len(),
            pages.iter().min().unwrap(),
            pages.iter().max().unwrap(),
            if bad.is_empty() { String::new() } else { format!("; failing: {}", bad.join("; ")) }
        ),
    )
}

fn c2_classification() -> Outcome {
    let classes = reference_page_classes();
    let count = |c| classes.iter().filter(|&&x| x == c).count();
    let (r, u, n) = (count(PageClass::Reliable), count(PageClass::Unstable), count(PageClass::Unusable));
    let expected: Vec<PageClass> = [[PageClass::Reliable; 7].as_slice(), [PageClass::Unusable; 3].as_slice()].concat();
    outcome(classes == expected, format!("{r} Reliable / {u} Unstable / {n} Unusable"))
}

/// Flip count of one cell over `rounds` hammer sessions, restoring the
/// source value before each.
fn cell_flips(p: f64, rounds: u32, seed: u64) -> u64 {
    let mut model = FlipModel::new(seed);
    model.add_uniform_cell(0, 1, 77, FlipDirection::OneToZero, p).unwrap();
    let mut dram = Dram::new(DramGeometry::new(1, 4).unwrap(), model);
    let frame = dram.geometry.frame_of(0, 1, 0).unwrap();
    let cfg = HammerConfig::alternating(&[0], 0, 2, FillPattern::AllOnes);
    let mut n = 0;
    for i in 0..rounds {
        dram.store.set_bit(frame, 77, true).unwrap();
        n += dram.hammer(&cfg, &HammerContext::offline(i)).unwrap().len() as u64;
    }
    n
}

/// Central interval holding at least `level` of the binomial mass.
fn exact_interval(d: &Binomial, n: u64, level: f64) -> (u64, u64) {
    let tail = (1.0 - level) / 2.0;
    let lo = (0..=n).find(|&k| d.cdf(k) > tail).unwrap();
    let hi = (0..=n).find(|&k| d.cdf(k) >= 1.0 - tail).unwrap();
    (lo, hi)
}

/// Chi-square goodness-of-fit p-value of `counts` against `d`, pooling
/// neighbouring values until each bin expects at least five observations.
fn gof_p_value(counts: &[u64], d: &Binomial, n: u64) -> f64 {
    let total = counts.len() as f64;
    let mut observed = vec![0u64; n as usize + 1];
    for &c in counts {
        observed[c as usize] += 1;
    }
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for k in 0..=n {
        o += observed[k as usize] as f64;
        e += d.pmf(k) * total;
        if e >= 5.0 {
            bins.push((o, e));
            (o, e) = (0.0, 0.0);
        }
    }
    if let Some(last) = bins.last_mut() {
        last.0 += o;
        last.1 += e;
    }
    let stat: f64 = bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = (bins.len() - 1) as f64;
    1.0 - ChiSquared::new(df).unwrap().cdf(stat)
}

fn c3_binomial() -> Outcome {
    let t = Instant::now();
    let rounds = 200u32;
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [0.05, 0.085, 0.5] {
        let d = Binomial::new(p, rounds as u64).unwrap();
        let (lo, hi) = exact_interval(&d, rounds as u64, 0.99);
        let counts: Vec<u64> = (0..1000).map(|s| cell_flips(p, rounds, s)).collect();
        let inside = counts.iter().filter(|&&c| (lo..=hi).contains(&c)).count();
        let pv = gof_p_value(&counts, &d, rounds as u64);
        ok &= (lo..=hi).contains(&counts[0]) && inside as f64 >= 0.98 * counts.len() as f64 && pv >= 0.01;
        parts.push(format!("p={p}: seed 0 count {} in [{lo}, {hi}], {inside}/1000 inside, GoF p={pv:.3}", counts[0]));
    }
    let elapsed = t.elapsed();
    ok &= elapsed <= Duration::from_secs(30);
    outcome(ok, format!("{}; {elapsed:.1?}", parts.join("; ")))
}

/// Separation at 200 iterations of the first Reliable page of a small
/// all-reliable module.
fn reliable_separation(seed: u64) -> Option<f64> {
    let preset = ConfigPreset {
        class_mix: hammerprobe::dram::ClassMix { reliable: 1.0, unstable: 0.0, unusable: 0.0 },
        ..attack_preset()
    };
    let cfg = ExperimentConfig::default();
    let mut tb = build_testbed(
        &DramSection::default(),
        &preset,
        1.0,
        &cfg.synthesis,
        &cfg.machine,
        &cfg.victim,
        SecretKey([0; 32]),
        seed,
    )
    .unwrap();
    let mut view = tb.machine.attacker();
    let groups = find_same_bank_chunks(&mut view, &tb.chunk).unwrap();
    let windows = build_windows(&mut view, &groups, preset.r, preset.b).unwrap();
    let mut rng = substream(seed, "convergence");
    for w in windows {
        let id = view.arm_window(&w).unwrap();
        let victims: Vec<_> = w.victim_pages().collect();
        let mut traces = Vec::new();
        let profiles =
            profile_window(&mut view, id, &victims, preset.profile_config(), 200, &mut rng, Some(&mut traces)).unwrap();
        if let Some((p, t)) = profiles.iter().zip(&traces).find(|(p, _)| p.class() == PageClass::Reliable) {
            return convergence_stats(p, t).last().map(|c| c.separation);
        }
    }
    None
}

fn c4_separation() -> Outcome {
    let seps: Vec<f64> = (0..100).map(|s| reliable_separation(s).unwrap_or(f64::NAN)).collect();
    let good = seps.iter().filter(|&&s| s >= 3.0).count();
    let finite: Vec<f64> = seps.iter().copied().filter(|s| s.is_finite()).collect();
    let min = finite.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        good >= 95,
        format!("separation >= 3 in {good}/100 seeds ({} unbounded, lowest finite {min:.2})", 100 - finite.len()),
    )
}

fn c5_reclaim() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [0.05, 0.1, 0.3] {
        let budget = ReclaimState::budget_for(p);
        let mut wins = 0;
        for seed in 0..1000 {
            let mut rig = single_cell_rig(p, FlipDirection::ZeroToOne, 4321, seed, Default::default());
            let frame = rig.machine.privileged().virt_to_phys(rig.page);
            let mut view = rig.machine.attacker();
            view.free(&[rig.page]).unwrap();
            let s = ReclaimState {
                window: rig.window,
                target_offset: 4321,
                direction: FlipDirection::ZeroToOne,
                budget,
                initial_buffer: 4,
                growth: 2,
                max_buffer: 4,
            };
            if let Ok(r) = reclaim_flippy_page(&mut view, &s) {
                wins += (r.growth_steps == 0 && rig.machine.privileged().virt_to_phys(r.page) == frame) as usize;
            }
        }
        ok &= wins >= 990;
        parts.push(format!("p={p} budget {budget}: {wins}/1000"));
    }
    let (mut traces, mut after_growth) = (0, 0);
    for seed in 0..100u64 {
        let depth = 1 + (seed % 12) as usize;
        let initial = 1 + (seed as usize / 12) % depth;
        let p = [1.0, 0.5, 0.2, 0.05][seed as usize % 4];
        let mut rig = single_cell_rig(p, FlipDirection::OneToZero, 999, 1000 + seed, Default::default());
        let mut view = rig.machine.attacker();
        let cover = view.alloc(depth).unwrap();
        view.free(&[rig.page]).unwrap();
        view.free(&cover).unwrap();
        let s = ReclaimState {
            window: rig.window,
            target_offset: 999,
            direction: FlipDirection::OneToZero,
            budget: ReclaimState::budget_for(p),
            initial_buffer: initial,
            growth: 2,
            max_buffer: 64,
        };
        traces += 1;
        if matches!(reclaim_flippy_page(&mut view, &s), Ok(r) if r.growth_steps >= 1) {
            after_growth += 1;
        }
    }
    ok &= after_growth == traces;
    parts.push(format!("page below buffer: success after growth in {after_growth}/{traces} traces"));
    outcome(ok, parts.join("; "))
}

fn c6_aslr() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.aslr.sizes = vec![16, 32, 64];
    cfg.aslr.trials = 2000;
    let rows = cmd_aslr_demo(&cfg, dir.path()).unwrap();
    let ok = rows.iter().all(|r| (r.frequency - 16.0 / r.n as f64).abs() <= 0.05);
    let parts: Vec<String> = rows.iter().map(|r| format!("n={}: {:.3} vs {:.3}", r.n, r.frequency, 16.0 / r.n as f64)).collect();
    outcome(ok && rows.len() == 3, parts.join(", "))
}

fn c7_malloc_shift() -> Outcome {
    let base = 0x10;
    let starts: BTreeSet<usize> =
        (0..PAGE_BYTES).step_by(HEAP_ALIGN).map(|s| place_heap_object(base, s, CTX_BYTES).offset).collect();
    let every_slot = starts.len() == PAGE_BYTES / HEAP_ALIGN && starts.iter().all(|o| o % HEAP_ALIGN == 0);
    let mut covered = vec![false; KEY_BITS];
    let mut classes = BTreeSet::new();
    let mut consistent = true;
    for t in 0..PAGE_BITS as u16 {
        let pair = [key_bit_placement(t, base, 0), key_bit_placement(t, base, 1)];
        for p in pair.iter().flatten() {
            let at = place_heap_object(base, p.malloc_size, CTX_BYTES);
            consistent &= at.page_index == 0 && at.offset as u32 * 8 + p.ctx_bit as u32 == t as u32;
        }
        if let [Some(a), Some(b)] = pair {
            consistent &= b.ctx_bit == a.ctx_bit + SLOT_BITS && a.offset >= round_up16(base);
            covered[a.ctx_bit] = true;
            covered[b.ctx_bit] = true;
            classes.insert(t as usize % SLOT_BITS);
        }
    }
    let all_bits = covered.iter().all(|&c| c);
    outcome(
        every_slot && consistent && all_bits && classes.len() == CONGRUENCE_CLASSES,
        format!(
            "{} distinct start offsets; {} congruence classes with both shifts, {}/256 bits reachable with one page per class",
            starts.len(),
            classes.len(),
            covered.iter().filter(|&&c| c).count()
        ),
    )
}

fn c8_channels(base: &BaseRuns) -> Outcome {
    let mut mismatches = Vec::new();
    for seed in CHANNEL_SEEDS {
        let (_, reference, _) = base.runs.iter().find(|(s, _, _)| *s == seed).unwrap();
        for mode in [ChannelMode::SilentRetry, ChannelMode::ReleaseFaultySignature] {
            let mut cfg = attack_config(seed);
            cfg.victim.channel_mode = mode;
            let dir = tempfile::tempdir().unwrap();
            let (o, _) = attack(&cfg, dir.path());
            if values(&o) != values(reference) {
                mismatches.push(format!("seed {seed} {mode:?}"));
            }
        }
    }
    let mut not_blank = Vec::new();
    for seed in CHANNEL_SEEDS {
        let mut cfg = attack_config(seed);
        cfg.victim.countermeasures.dual_sign_constant_time = true;
        let dir = tempfile::tempdir().unwrap();
        let (o, _) = attack(&cfg, dir.path());
        if o.recovered.decoded() != 0 {
            not_blank.push(format!("seed {seed}: {} decoded", o.recovered.decoded()));
        }
    }
    let ok = mismatches.is_empty() && not_blank.is_empty();
    outcome(
        ok,
        format!(
            "3 channel modes agree on {}/10 seeds; dual-sign all-inconclusive on {}/10{}",
            10 - mismatches.len().min(10),
            10 - not_blank.len(),
            if ok { String::new() } else { format!("; {}", [mismatches, not_blank].concat().join("; ")) }
        ),
    )
}

fn c9_blinding() -> Outcome {
    let mut accs = Vec::new();
    for seed in ATTACK_SEEDS {
        let mut cfg = attack_config(seed);
        cfg.victim.countermeasures.key_blinding = true;
        let dir = tempfile::tempdir().unwrap();
        let (o, _) = attack(&cfg, dir.path());
        accs.push(o.recovered.accuracy(&o.truth.unwrap()));
    }
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    let lo = accs.iter().copied().fold(1.0, f64::min);
    let hi = accs.iter().copied().fold(0.0, f64::max);
    outcome(
        (0.4..=0.6).contains(&mean),
        format!("per-bit accuracy {mean:.3} over {} seeds (per seed {lo:.3}..={hi:.3})", accs.len()),
    )
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn c10_determinism(base: &BaseRuns) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    attack(&attack_config(*ATTACK_SEEDS.start()), dir.path());
    let (a, b) = (csv_files(base.first_dir.path()), csv_files(dir.path()));
    let names: Vec<&str> = a.iter().map(|(n, _)| n.as_str()).collect();
    outcome(!a.is_empty() && a == b, format!("{} identical across two runs", names.join(", ")))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: usize, o: Outcome| {
        println!("criterion {n:2}: {} - {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += !o.pass as usize;
    };
    report(2, c2_classification());
    report(3, c3_binomial());
    report(4, c4_separation());
    report(5, c5_reclaim());
    report(6, c6_aslr());
    report(7, c7_malloc_shift());
    let base = base_runs();
    report(1, c1_recovery(&base));
    report(8, c8_channels(&base));
    report(9, c9_blinding());
    report(10, c10_determinism(&base));
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
