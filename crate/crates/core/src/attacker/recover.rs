//! Whole-key recovery over profiled pages.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::decode::{BitEstimate, F_MIN};
use super::placement::{control_placement, key_bit_placement, Placement, CONGRUENCE_CLASSES, SLOT_BITS};
use super::probe::{probe_bit, run_trials, FaultDetector, Phase, ProbeTarget, TrialRecord};
use super::reclaim::{reclaim_flippy_page, ReclaimState};
use super::AttackError;
use crate::dram::FlipDirection;
use crate::machine::{AttackerView, CostCounters, WindowId};
use crate::memos::VPage;
use crate::profiler::{profile_with_resident_victim, PageClass, PageProfile, Suitability};
use crate::victim::{SecretKey, KEY_BITS};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackParams {
    /// Trials per fill pattern and probed bit.
    pub trials: u32,
    pub f_min: u32,
    pub resident_iterations: u32,
    /// Resident flip rate below which a page is not used.
    pub min_resident_rate: f64,
    /// Trial cap per fill for the control probe.
    pub control_trials: u32,
    pub control_min_failures: u32,
    /// Consecutive failed controls after which the attack gives up.
    pub max_control_failures: u32,
    /// Pages probed per congruence class before giving up on it.
    pub pages_per_class: u32,
    pub reclaim_initial_buffer: usize,
    pub reclaim_growth: usize,
    pub reclaim_max_buffer: usize,
    pub calibration_handshakes: u32,
}

impl Default for AttackParams {
    fn default() -> Self {
        Self {
            trials: 200,
            f_min: F_MIN,
            resident_iterations: 200,
            min_resident_rate: 0.035,
            control_trials: 200,
            control_min_failures: 3,
            max_control_failures: 8,
            pages_per_class: 4,
            reclaim_initial_buffer: 4,
            reclaim_growth: 2,
            reclaim_max_buffer: 512,
            calibration_handshakes: 8,
        }
    }
}

/// A profiled page the attack may use.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub page: VPage,
    pub window: WindowId,
    pub target_offset: u16,
    pub direction: FlipDirection,
    pub delta: u32,
    pub iterations: u32,
    pub class: PageClass,
    /// Placements for bits `k` and `k + 128`.
    pub placements: [Placement; 2],
    pub control: Placement,
}

impl Candidate {
    pub fn congruence_class(&self) -> usize {
        self.target_offset as usize % SLOT_BITS
    }

    /// Offline per-session flip probability at the source value.
    pub fn offline_rate(&self) -> f64 {
        self.delta as f64 / self.iterations.max(1) as f64
    }

    /// Offline profile as `0->1:17` or `1->0:14`.
    pub fn offline_label(&self) -> String {
        format!("{}:{}", self.direction, self.delta)
    }
}

/// Usable pages grouped by congruence class, best first. A page qualifies
/// when it is reliable or unstable, both congruent placements and a control
/// placement exist, and no other flippy offset lies under any of them.
pub fn select_candidates(
    profiles: &[PageProfile],
    page_window: &HashMap<VPage, WindowId>,
    heap_base: usize,
    public: &[u8],
) -> Vec<Vec<Candidate>> {
    let mut classes: Vec<Vec<Candidate>> = vec![Vec::new(); CONGRUENCE_CLASSES];
    for p in profiles {
        let class = p.class();
        let (Some(t), Some(d), Some(&window)) = (p.target_offset(), p.direction(), page_window.get(&p.page)) else {
            continue;
        };
        if class == PageClass::Unusable {
            continue;
        }
        let (Some(a), Some(b), Some(c)) = (
            key_bit_placement(t, heap_base, 0),
            key_bit_placement(t, heap_base, 1),
            control_placement(t, heap_base, public, d.source_value()),
        ) else {
            continue;
        };
        let clean = [a, b, c].iter().all(|pl| {
            let (lo, hi) = pl.span();
            p.others_in(lo, hi) == 0
        });
        if !clean {
            continue;
        }
        let cand = Candidate {
            page: p.page,
            window,
            target_offset: t,
            direction: d,
            delta: p.delta(),
            iterations: p.iterations,
            class,
            placements: [a, b],
            control: c,
        };
        classes[cand.congruence_class()].push(cand);
    }
    for c in classes.iter_mut() {
        c.sort_by(|x, y| x.class.cmp(&y.class).then(y.delta.cmp(&x.delta)).then(x.page.cmp(&y.page)));
    }
    classes
}

/// Outcome of working one page.
#[derive(Clone, Debug, PartialEq)]
pub enum PageOutcome {
    /// Resident re-profile showed the page unsuitable or too slow.
    Unsuitable(Suitability),
    /// The control probe never faulted: the key is not where it should be.
    ControlFailed { failures: u32 },
    /// The page was lost to a failed reclaim.
    Lost,
    Probed { suitability: Suitability, estimates: Vec<BitEstimate> },
}

/// Everything the attack learned about the key.
#[derive(Clone, Debug, PartialEq)]
pub struct RecoveredKey {
    pub bits: Vec<BitEstimate>,
    /// Page each bit was finally read from.
    pub sources: Vec<Option<Candidate>>,
    pub pages_examined: usize,
    pub pages_used: usize,
    pub aborted: bool,
    pub counters: CostCounters,
    pub total_us: u64,
}

impl RecoveredKey {
    pub fn decoded(&self) -> usize {
        self.bits.iter().filter(|b| b.is_conclusive()).count()
    }

    pub fn complete(&self) -> bool {
        self.decoded() == KEY_BITS
    }

    pub fn key(&self) -> Option<SecretKey> {
        let mut k = SecretKey([0; 32]);
        for b in &self.bits {
            k.set_bit(b.bit, b.value?);
        }
        Some(k)
    }

    /// Decoded bits per simulated hour.
    pub fn bits_per_hour(&self) -> f64 {
        if self.total_us == 0 {
            0.0
        } else {
            self.decoded() as f64 * 3.6e9 / self.total_us as f64
        }
    }

    /// Fraction of all key bits decoded correctly; inconclusive bits count
    /// as wrong. Needs the true key, so only audits can call it.
    pub fn accuracy(&self, truth: &SecretKey) -> f64 {
        let right = self.bits.iter().filter(|b| b.value == Some(truth.bit(b.bit))).count();
        right as f64 / KEY_BITS as f64
    }
}

/// Re-profile with the attacker's own copy, reclaim, run the control probe,
/// then probe the bits flagged in `need` (bit `k`, bit `k + 128`).
pub fn probe_congruent_pair(
    view: &mut AttackerView<'_>,
    cand: &Candidate,
    need: [bool; 2],
    params: &AttackParams,
    detector: &FaultDetector,
    transcript: &mut Vec<TrialRecord>,
) -> Result<PageOutcome, AttackError> {
    let d = cand.direction;
    let ctx_bit = cand.placements[0].ctx_bit;
    view.free(&[cand.page])?;
    view.launch_copy(cand.placements[0].malloc_size, SecretKey([0; 32]))?;
    let w = cand.window;
    let public = view.victim_public_key();
    let source = profile_with_resident_victim(view, w, ctx_bit, d.source_value(), &public, params.resident_iterations)?;
    let sink = profile_with_resident_victim(view, w, ctx_bit, d.sink_value(), &public, params.resident_iterations)?;
    view.stop_copy()?;
    let suitability = Suitability { direction: d, source, sink };
    if !suitability.suitable() || source.rate() < params.min_resident_rate {
        return Ok(PageOutcome::Unsuitable(suitability));
    }
    let reclaim = ReclaimState {
        window: w,
        target_offset: cand.target_offset,
        direction: d,
        budget: ReclaimState::budget_for(cand.offline_rate()),
        initial_buffer: params.reclaim_initial_buffer,
        growth: params.reclaim_growth,
        max_buffer: params.reclaim_max_buffer,
    };
    let Some(mut page) = try_reclaim(view, &reclaim)? else {
        return Ok(PageOutcome::Lost);
    };
    let target = ProbeTarget { label: cand.page, window: w, direction: d };
    let (failures, _) = run_trials(
        view,
        &target,
        page,
        cand.control,
        0,
        Phase::Control,
        params.control_trials,
        Some(params.control_min_failures),
        detector,
        transcript,
    )?;
    if failures < params.control_min_failures {
        return Ok(PageOutcome::ControlFailed { failures });
    }
    let mut estimates = Vec::new();
    let shifts: Vec<usize> = (0..2).filter(|&s| need[s]).collect();
    for (i, &shift) in shifts.iter().enumerate() {
        match try_reclaim(view, &reclaim)? {
            Some(p) => page = p,
            None if i == 0 => return Ok(PageOutcome::Lost),
            None => break,
        }
        let pl = cand.placements[shift];
        let est = probe_bit(view, &target, page, pl, shift, source.rate(), params.trials, params.f_min, detector, transcript)?;
        estimates.push(est);
    }
    Ok(PageOutcome::Probed { suitability, estimates })
}

fn try_reclaim(view: &mut AttackerView<'_>, s: &ReclaimState) -> Result<Option<VPage>, AttackError> {
    match reclaim_flippy_page(view, s) {
        Ok(r) => Ok(Some(r.page)),
        Err(AttackError::ReclaimExhausted { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Recover the victim key bit by bit, one congruence class at a time.
/// Inconclusive bits are retried on further pages of their class.
pub fn recover_key(
    view: &mut AttackerView<'_>,
    classes: &[Vec<Candidate>],
    params: &AttackParams,
    transcript: &mut Vec<TrialRecord>,
) -> Result<RecoveredKey, AttackError> {
    if view.victim_config().key_storage != crate::victim::KeyStorage::Heap {
        return Err(AttackError::Unsupported("key recovery needs a heap-allocated key".into()));
    }
    let start = view.counters();
    let detector = FaultDetector::calibrate(view, params.calibration_handshakes)?;
    let mut bits: Vec<BitEstimate> = (0..KEY_BITS).map(BitEstimate::unprobed).collect();
    let mut sources: Vec<Option<Candidate>> = vec![None; KEY_BITS];
    let (mut examined, mut used, mut control_failures, mut aborted) = (0, 0, 0, false);
    'classes: for (k, cands) in classes.iter().enumerate().take(CONGRUENCE_CLASSES) {
        let mut probed_pages = 0;
        for cand in cands {
            let need = [!bits[k].is_conclusive(), !bits[k + SLOT_BITS].is_conclusive()];
            if !need[0] && !need[1] || probed_pages >= params.pages_per_class {
                break;
            }
            examined += 1;
            match probe_congruent_pair(view, cand, need, params, &detector, transcript)? {
                PageOutcome::Unsuitable(_) | PageOutcome::Lost => {}
                PageOutcome::ControlFailed { .. } => {
                    probed_pages += 1;
                    control_failures += 1;
                    if control_failures >= params.max_control_failures {
                        aborted = true;
                        break 'classes;
                    }
                }
                PageOutcome::Probed { estimates, .. } => {
                    probed_pages += 1;
                    used += 1;
                    control_failures = 0;
                    for e in estimates {
                        if e.is_conclusive() || bits[e.bit].trials == 0 {
                            bits[e.bit] = e;
                            sources[e.bit] = Some(*cand);
                        }
                    }
                }
            }
        }
    }
    if aborted {
        bits = (0..KEY_BITS).map(BitEstimate::unprobed).collect();
        sources = vec![None; KEY_BITS];
    }
    let counters = view.counters().since(&start);
    let total_us = counters.total_us(&view.costs());
    Ok(RecoveredKey { bits, sources, pages_examined: examined, pages_used: used, aborted, counters, total_us })
}
