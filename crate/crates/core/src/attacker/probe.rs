//! Online probing: hammer, connect, watch for a visible fault.

use serde::Serialize;

use super::decode::{decode, BitEstimate};
use super::placement::{massage_key_to_page, Placement};
use super::AttackError;
use crate::dram::{FillPattern, FlipDirection};
use crate::machine::{AttackerView, WindowId};
use crate::memos::VPage;
use crate::profiler::PROFILE_FILLS;
use crate::victim::{HandshakeOutcome, HandshakeStatus};

/// Classifies handshake outcomes as faulty from what a client sees.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FaultDetector {
    /// Highest latency of a clean handshake.
    pub baseline_latency: u32,
}

impl FaultDetector {
    /// Measure clean handshakes with the victim at its default placement.
    pub fn calibrate(view: &mut AttackerView<'_>, handshakes: u32) -> Result<Self, AttackError> {
        view.launch_victim(0)?;
        let mut baseline = 0;
        for _ in 0..handshakes.max(1) {
            baseline = baseline.max(view.connect()?.latency);
        }
        view.stop_victim()?;
        Ok(Self { baseline_latency: baseline })
    }

    /// An error, a dropped connection, a slow handshake or a signature that
    /// fails verification.
    pub fn is_fault(&self, o: &HandshakeOutcome) -> bool {
        o.status != HandshakeStatus::Established || o.latency > self.baseline_latency || !o.verified_ok
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Control,
    Probe,
}

/// One row of the attack transcript.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrialRecord {
    pub page: String,
    pub phase: Phase,
    pub ctx_bit: usize,
    /// Heap slots the key was moved down by.
    pub shift: usize,
    pub fill: String,
    pub trial: u32,
    pub fault: bool,
    pub failures: u32,
}

/// What a probe run is aimed at.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProbeTarget {
    /// Stable label of the page for the transcript.
    pub label: VPage,
    pub window: WindowId,
    pub direction: FlipDirection,
}

/// Run up to `trials` trials per profiling fill with the victim started at
/// `placement` on `page`, stopping early once `stop_at` faults are seen.
/// Returns `(faults, trials)`; the victim is stopped afterwards.
#[allow(clippy::too_many_arguments)]
pub fn run_trials(
    view: &mut AttackerView<'_>,
    target: &ProbeTarget,
    page: VPage,
    placement: Placement,
    shift: usize,
    phase: Phase,
    trials: u32,
    stop_at: Option<u32>,
    detector: &FaultDetector,
    transcript: &mut Vec<TrialRecord>,
) -> Result<(u32, u32), AttackError> {
    massage_key_to_page(view, page, placement.malloc_size)?;
    let (mut failures, mut n) = (0u32, 0u32);
    'fills: for fill in PROFILE_FILLS {
        for trial in 0..trials {
            if stop_at.is_some_and(|s| failures >= s) {
                break 'fills;
            }
            let fault = hammer_and_connect(view, target.window, fill, detector)?;
            failures += fault as u32;
            n += 1;
            transcript.push(TrialRecord {
                page: target.label.to_string(),
                phase,
                ctx_bit: placement.ctx_bit,
                shift,
                fill: fill.to_string(),
                trial,
                fault,
                failures,
            });
        }
    }
    view.stop_victim()?;
    Ok((failures, n))
}

fn hammer_and_connect(
    view: &mut AttackerView<'_>,
    window: WindowId,
    fill: FillPattern,
    detector: &FaultDetector,
) -> Result<bool, AttackError> {
    view.hammer(window, fill)?;
    Ok(detector.is_fault(&view.connect()?))
}

/// Probe the secret bit that `placement` puts on the target offset:
/// `trials` all-ones trials, then `trials` all-zeros trials, decoded
/// together.
#[allow(clippy::too_many_arguments)]
pub fn probe_bit(
    view: &mut AttackerView<'_>,
    target: &ProbeTarget,
    page: VPage,
    placement: Placement,
    shift: usize,
    p_hat: f64,
    trials: u32,
    f_min: u32,
    detector: &FaultDetector,
    transcript: &mut Vec<TrialRecord>,
) -> Result<BitEstimate, AttackError> {
    let (f, n) = run_trials(view, target, page, placement, shift, Phase::Probe, trials, None, detector, transcript)?;
    Ok(decode(placement.ctx_bit, f, n, target.direction, p_hat, f_min))
}
