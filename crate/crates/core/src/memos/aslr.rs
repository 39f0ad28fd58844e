use rand::Rng;

use super::MemError;
use crate::dram::PAGE_BYTES;

/// Stack ASLR: the in-page offset moves in 16-byte steps, the low 4 bits of
/// the address never change.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AslrPolicy {
    pub enabled: bool,
    /// In-page offset used when ASLR is off; its low 4 bits are kept when on.
    pub base: usize,
}

pub const STACK_GRANULARITY: usize = 16;

impl Default for AslrPolicy {
    fn default() -> Self {
        Self { enabled: true, base: 0x8 }
    }
}

impl AslrPolicy {
    /// In-page start offset of a stack variable for one run, uniform over
    /// the 16-byte slots where the variable still fits in the page.
    pub fn place_stack_var<R: Rng + ?Sized>(&self, var_size: usize, rng: &mut R) -> usize {
        if !self.enabled {
            return self.base % PAGE_BYTES;
        }
        let low = self.base % STACK_GRANULARITY;
        let slots = (PAGE_BYTES.saturating_sub(var_size + low) / STACK_GRANULARITY + 1).max(1);
        low + STACK_GRANULARITY * rng.random_range(0..slots)
    }
}

/// Byte positions within an `n`-byte variable that are consistent with a
/// flip observed at `page_offset`, given the fixed low address bits.
pub fn infer_bit_location(n: usize, page_offset: usize, low_bits: usize) -> Result<Vec<usize>, MemError> {
    if n < STACK_GRANULARITY || n % STACK_GRANULARITY != 0 {
        return Err(MemError::BadVariableSize(n));
    }
    let residue = (page_offset + STACK_GRANULARITY - low_bits % STACK_GRANULARITY) % STACK_GRANULARITY;
    Ok((residue..n).step_by(STACK_GRANULARITY).collect())
}

/// Outcome of a location-inference Monte Carlo run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AslrTrialStats {
    pub n: usize,
    pub trials: usize,
    pub identified: usize,
    pub mean_candidates: f64,
}

impl AslrTrialStats {
    pub fn frequency(&self) -> f64 {
        self.identified as f64 / self.trials as f64
    }

    pub fn analytic(&self) -> f64 {
        STACK_GRANULARITY as f64 / self.n as f64
    }
}

/// Place an `n`-byte variable, flip a uniformly chosen byte of it, infer the
/// candidate positions from the page offset and pick one uniformly. A trial
/// identifies the location when the pick is the true position.
pub fn location_trials<R: Rng + ?Sized>(
    policy: &AslrPolicy,
    n: usize,
    trials: usize,
    rng: &mut R,
) -> Result<AslrTrialStats, MemError> {
    infer_bit_location(n, 0, 0)?;
    let mut identified = 0;
    let mut total = 0usize;
    for _ in 0..trials {
        let start = policy.place_stack_var(n, rng);
        let pos = rng.random_range(0..n);
        let observed = (start + pos) % PAGE_BYTES;
        let cands = infer_bit_location(n, observed, policy.base)?;
        total += cands.len();
        if cands[rng.random_range(0..cands.len())] == pos {
            identified += 1;
        }
    }
    Ok(AslrTrialStats { n, trials, identified, mean_candidates: total as f64 / trials.max(1) as f64 })
}
