use crate::dram::FlipDirection;

/// Failures needed to read a bit as the flip source value.
pub const F_MIN: u32 = 3;

/// Decoded value of one key bit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BitEstimate {
    pub bit: usize,
    pub failures: u32,
    pub trials: u32,
    /// Direction of the probing cell; `None` if the bit was never probed.
    pub direction: Option<FlipDirection>,
    /// Per-trial flip rate of the probing cell with the key resident.
    pub p_hat: f64,
    pub value: Option<bool>,
    pub confidence: f64,
}

impl BitEstimate {
    pub fn unprobed(bit: usize) -> Self {
        Self { bit, failures: 0, trials: 0, direction: None, p_hat: 0.0, value: None, confidence: 0.0 }
    }

    pub fn is_conclusive(&self) -> bool {
        self.value.is_some()
    }
}

/// Read a bit from `failures` faults over `trials` probes of a cell with
/// flip direction `d` and rate `p_hat`.
///
/// At least `f_min` faults give the source value: the cell can only flip
/// from it. No fault gives the sink value with confidence
/// `1 - (1 - p_hat)^trials`. Anything in between is inconclusive.
pub fn decode(bit: usize, failures: u32, trials: u32, d: FlipDirection, p_hat: f64, f_min: u32) -> BitEstimate {
    let (value, confidence) = if failures >= f_min {
        (Some(d.source_value()), 1.0)
    } else if failures == 0 {
        (Some(d.sink_value()), 1.0 - (1.0 - p_hat.clamp(0.0, 1.0)).powi(trials as i32))
    } else {
        (None, 0.0)
    };
    BitEstimate { bit, failures, trials, direction: Some(d), p_hat, value, confidence }
}
