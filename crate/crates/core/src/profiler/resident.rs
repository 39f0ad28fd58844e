//! Re-profiling a target offset while the attacker's own copy of the victim
//! holds its key on the page.

use super::ProfilerError;
use crate::dram::FlipDirection;
use crate::machine::{AttackerView, WindowId};
use crate::profiler::profile::PROFILE_FILLS;
use crate::victim::{CTX_BYTES, KEY_BYTES, PUBLIC_BYTES};

/// Flips seen over a resident re-profile.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ResidentCounts {
    pub stored: bool,
    /// Flips of the probed context bit.
    pub flips: u32,
    /// Flips anywhere else in the key context.
    pub stray: u32,
    pub sessions: u32,
}

impl ResidentCounts {
    pub fn rate(&self) -> f64 {
        if self.sessions == 0 {
            0.0
        } else {
            self.flips as f64 / self.sessions as f64
        }
    }
}

/// Source-side and sink-side counts of one probe offset.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Suitability {
    pub direction: FlipDirection,
    pub source: ResidentCounts,
    pub sink: ResidentCounts,
}

impl Suitability {
    /// Flips when the stored bit is the source value, none at the sink value
    /// and none elsewhere in the context.
    pub fn suitable(&self) -> bool {
        self.source.flips > 0 && self.sink.flips == 0 && self.source.stray == 0 && self.sink.stray == 0
    }
}

/// Context image for one iteration: the secret part alternates between all
/// zeros and all ones so cells of both directions are exercised, the public
/// part is the real public key, and `ctx_bit` holds `value`.
fn context_image(iteration: u32, public: &[u8; PUBLIC_BYTES], ctx_bit: usize, value: bool) -> [u8; CTX_BYTES] {
    let mut image = [0u8; CTX_BYTES];
    image[..KEY_BYTES].fill(if iteration % 2 == 0 { 0x00 } else { 0xFF });
    image[KEY_BYTES..].copy_from_slice(public);
    let mask = 1 << (ctx_bit % 8);
    image[ctx_bit / 8] = if value { image[ctx_bit / 8] | mask } else { image[ctx_bit / 8] & !mask };
    image
}

/// Hammer `iterations` times with each profiling fill while the running
/// copy stores `key_bit_value` at context bit `ctx_bit`. Every change in the
/// context is counted and undone.
pub fn profile_with_resident_victim(
    view: &mut AttackerView<'_>,
    window: WindowId,
    ctx_bit: usize,
    key_bit_value: bool,
    public: &[u8; PUBLIC_BYTES],
    iterations: u32,
) -> Result<ResidentCounts, ProfilerError> {
    let mut counts = ResidentCounts { stored: key_bit_value, ..Default::default() };
    for it in 0..iterations {
        let image = context_image(it, public, ctx_bit, key_bit_value);
        for fill in PROFILE_FILLS {
            view.set_copy_context(&image)?;
            view.hammer(window, fill)?;
            let now = view.copy_context()?;
            for (i, (a, b)) in image.iter().zip(&now).enumerate() {
                let mut diff = a ^ b;
                while diff != 0 {
                    let bit = i * 8 + diff.trailing_zeros() as usize;
                    diff &= diff - 1;
                    if bit == ctx_bit {
                        counts.flips += 1;
                    } else {
                        counts.stray += 1;
                    }
                }
            }
            counts.sessions += 1;
        }
    }
    Ok(counts)
}
