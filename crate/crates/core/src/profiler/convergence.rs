//! Running flip-rate estimates of the target offset against the page's other
//! flippy offsets.
//!
//! A cell can only flip when it holds its source value, so rates are taken
//! over opportunities: sessions in which the random data put the source
//! value at that offset.

use super::profile::{PageProfile, PageTrace, PROFILE_FILLS};
use crate::dram::PagePattern;

/// Binomial rate estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Rate {
    pub successes: u64,
    pub trials: u64,
}

impl Rate {
    pub fn mean(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }

    /// Variance of the mean, `p(1-p)/m`.
    pub fn variance(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            let p = self.mean();
            p * (1.0 - p) / self.trials as f64
        }
    }
}

/// `(mean_t - mean_o) / sqrt(var_t + var_o)`; infinite when both variances
/// vanish and the means differ, zero when they agree.
pub fn separation(target: Rate, other: Rate) -> f64 {
    let diff = target.mean() - other.mean();
    let sd = (target.variance() + other.variance()).sqrt();
    if sd == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        }
    } else {
        diff / sd
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergencePoint {
    /// Iterations included, starting at 1.
    pub iteration: u32,
    pub target: Rate,
    pub other: Rate,
    pub separation: f64,
}

/// One point per iteration of a traced profiling run. The other-offset rate
/// pools every flippy offset of the final profile except the target.
pub fn convergence_stats(profile: &PageProfile, trace: &PageTrace) -> Vec<ConvergencePoint> {
    let Some(target) = profile.target_offset() else {
        return Vec::new();
    };
    let offsets: Vec<(u16, bool)> =
        profile.counts.iter().map(|(&o, c)| (o, c.direction().source_value())).collect();
    let sessions = PROFILE_FILLS.len() as u64;
    let mut flips = trace.flips.iter().peekable();
    let (mut t, mut o) = (Rate::default(), Rate::default());
    let mut out = Vec::with_capacity(trace.seeds.len());
    for (it, &seed) in trace.seeds.iter().enumerate() {
        let data = PagePattern::Random(seed);
        for &(off, source) in &offsets {
            if data.bit(off as usize) == source {
                if off == target {
                    t.trials += sessions;
                } else {
                    o.trials += sessions;
                }
            }
        }
        while let Some(&&(fi, _, off, _)) = flips.peek() {
            if fi as usize != it {
                break;
            }
            flips.next();
            if off == target {
                t.successes += 1;
            } else {
                o.successes += 1;
            }
        }
        out.push(ConvergencePoint { iteration: it as u32 + 1, target: t, other: o, separation: separation(t, o) });
    }
    out
}
