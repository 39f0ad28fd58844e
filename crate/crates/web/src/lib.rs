//! Browser bindings: profile a small synthetic module, run the ASLR Monte
//! Carlo and explore the bit decoder. Every export takes plain numbers and
//! returns JSON.

use serde::Serialize;
use statrs::distribution::{Binomial, DiscreteCDF};
use wasm_bindgen::prelude::*;

use hammerprobe::attacker::decode;
use hammerprobe::dram::{ClassMix, FlipDirection};
use hammerprobe::experiments::config::DramSection;
use hammerprobe::experiments::{attack_preset, build_testbed, ConfigPreset, ExperimentConfig};
use hammerprobe::memos::{location_trials, AslrPolicy};
use hammerprobe::profiler::{build_windows, convergence_stats, find_same_bank_chunks, profile_window};
use hammerprobe::rng::substream;
use hammerprobe::victim::SecretKey;

#[derive(Serialize)]
pub struct PageRow {
    pub page: String,
    pub target_offset: Option<u16>,
    pub direction: Option<String>,
    pub delta: u32,
    pub sigma: u32,
    pub class: String,
}

#[derive(Serialize)]
pub struct CurvePoint {
    pub iteration: u32,
    pub target_rate: f64,
    pub other_rate: f64,
    /// `None` stands for an unbounded separation.
    pub separation: Option<f64>,
}

#[derive(Serialize)]
pub struct ProfileDemo {
    pub pages_profiled: usize,
    pub flippy: Vec<PageRow>,
    /// Convergence of the page with the largest delta.
    pub curve: Vec<CurvePoint>,
}

/// Synthesize one (15, 7) window's worth of DRAM with the given share of
/// reliable pages, profile it and trace the strongest page.
pub fn profile_demo(seed: u64, iterations: u32, reliable_share: f64) -> Result<ProfileDemo, String> {
    let r = reliable_share.clamp(0.0, 1.0);
    let preset = ConfigPreset {
        area_mib: 0.5,
        class_mix: ClassMix { reliable: r, unstable: (1.0 - r) / 2.0, unusable: (1.0 - r) / 2.0 },
        ..attack_preset()
    };
    let cfg = ExperimentConfig::default();
    let mut tb = build_testbed(
        &DramSection::default(),
        &preset,
        preset.area_mib,
        &cfg.synthesis,
        &cfg.machine,
        &cfg.victim,
        SecretKey([0; 32]),
        seed,
    )
    .map_err(|e| e.to_string())?;
    let mut view = tb.machine.attacker();
    let groups = find_same_bank_chunks(&mut view, &tb.chunk).map_err(|e| e.to_string())?;
    let windows = build_windows(&mut view, &groups, preset.r, preset.b).map_err(|e| e.to_string())?;
    let mut rng = substream(seed, "web-profile");
    let (mut profiles, mut traces) = (Vec::new(), Vec::new());
    for w in windows {
        let id = view.arm_window(&w).map_err(|e| e.to_string())?;
        let victims: Vec<_> = w.victim_pages().collect();
        let mut t = Vec::new();
        let p = profile_window(&mut view, id, &victims, preset.profile_config(), iterations.max(1), &mut rng, Some(&mut t))
            .map_err(|e| e.to_string())?;
        profiles.extend(p);
        traces.extend(t);
    }
    let best = profiles.iter().enumerate().filter(|(_, p)| p.is_flippy()).max_by_key(|(_, p)| p.delta()).map(|(i, _)| i);
    let curve = best
        .map(|i| {
            convergence_stats(&profiles[i], &traces[i])
                .into_iter()
                .map(|c| CurvePoint {
                    iteration: c.iteration,
                    target_rate: c.target.mean(),
                    other_rate: c.other.mean(),
                    separation: c.separation.is_finite().then_some(c.separation),
                })
                .collect()
        })
        .unwrap_or_default();
    let flippy = profiles
        .iter()
        .filter(|p| p.is_flippy())
        .map(|p| PageRow {
            page: p.page.to_string(),
            target_offset: p.target_offset(),
            direction: p.direction().map(|d| d.to_string()),
            delta: p.delta(),
            sigma: p.sigma(),
            class: format!("{:?}", p.class()),
        })
        .collect();
    Ok(ProfileDemo { pages_profiled: profiles.len(), flippy, curve })
}

#[derive(Serialize)]
pub struct AslrDemo {
    pub n: usize,
    pub trials: usize,
    pub frequency: f64,
    pub analytic: f64,
    pub mean_candidates: f64,
}

pub fn aslr_demo(n: usize, trials: usize, seed: u64) -> Result<AslrDemo, String> {
    let s = location_trials(&AslrPolicy::default(), n, trials.max(1), &mut substream(seed, "web-aslr"))
        .map_err(|e| e.to_string())?;
    Ok(AslrDemo { n, trials: s.trials, frequency: s.frequency(), analytic: s.analytic(), mean_candidates: s.mean_candidates })
}

#[derive(Serialize)]
pub struct DecodeDemo {
    pub value: Option<u8>,
    pub confidence: f64,
    /// Chance of at least `f_min` faults if the bit holds the source value.
    pub detection: f64,
}

/// Decode `failures` out of `trials` for a cell flipping `0->1` (`up`) or
/// `1->0` at per-trial rate `p_hat`.
pub fn decode_demo(failures: u32, trials: u32, up: bool, p_hat: f64, f_min: u32) -> DecodeDemo {
    let d = if up { FlipDirection::ZeroToOne } else { FlipDirection::OneToZero };
    let e = decode(0, failures.min(trials), trials, d, p_hat, f_min);
    let detection = match (f_min, Binomial::new(p_hat.clamp(0.0, 1.0), trials as u64)) {
        (0, _) => 1.0,
        (f, Ok(b)) => b.sf(f as u64 - 1),
        (_, Err(_)) => 0.0,
    };
    DecodeDemo { value: e.value.map(u8::from), confidence: e.confidence, detection }
}

fn json<T: Serialize>(r: Result<T, String>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| format!("{{\"error\":\"{e}\"}}")),
        Err(e) => serde_json::json!({ "error": e }).to_string(),
    }
}

#[wasm_bindgen(js_name = profileDemo)]
pub fn profile_demo_js(seed: u32, iterations: u32, reliable_share: f64) -> String {
    json(profile_demo(seed as u64, iterations.min(1000), reliable_share))
}

#[wasm_bindgen(js_name = aslrDemo)]
pub fn aslr_demo_js(n: u32, trials: u32, seed: u32) -> String {
    json(aslr_demo(n as usize, trials.min(200_000) as usize, seed as u64))
}

#[wasm_bindgen(js_name = decodeDemo)]
pub fn decode_demo_js(failures: u32, trials: u32, up: bool, p_hat: f64, f_min: u32) -> String {
    json(Ok(decode_demo(failures, trials, up, p_hat, f_min)))
}
