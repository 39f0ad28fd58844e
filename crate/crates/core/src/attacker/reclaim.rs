//! Getting a flippy page back after a process that used it has exited.

use super::AttackError;
use crate::dram::{FillPattern, FlipDirection, PagePattern};
use crate::machine::{AttackerView, WindowId};
use crate::memos::VPage;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReclaimState {
    pub window: WindowId,
    /// Page-relative bit offset of the target cell.
    pub target_offset: u16,
    pub direction: FlipDirection,
    /// Hammer rounds per buffer size.
    pub budget: u32,
    pub initial_buffer: usize,
    pub growth: usize,
    pub max_buffer: usize,
}

impl ReclaimState {
    /// Budget of `ceil(5 / p)` rounds for a per-round flip probability `p`.
    pub fn budget_for(p: f64) -> u32 {
        (5.0 / p.max(1e-3)).ceil() as u32
    }
}

/// How a successful reclaim went.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Reclaimed {
    pub page: VPage,
    pub rounds: u32,
    pub growth_steps: u32,
    pub buffer: usize,
}

/// Allocate a buffer, fill it with the target's source value and hammer
/// until a page flips at the target offset; grow the buffer when the budget
/// runs out. Every other buffer page is freed again.
pub fn reclaim_flippy_page(view: &mut AttackerView<'_>, s: &ReclaimState) -> Result<Reclaimed, AttackError> {
    let fill = PagePattern::Uniform(if s.direction.source_value() { 0xFF } else { 0x00 });
    let mut buffer: Vec<VPage> = Vec::new();
    let mut want = s.initial_buffer.max(1);
    let mut rounds = 0;
    let mut growth_steps = 0;
    loop {
        let fresh = view.alloc(want - buffer.len())?;
        for &p in &fresh {
            view.write_pattern(p, fill)?;
        }
        buffer.extend(fresh);
        for _ in 0..s.budget {
            rounds += 1;
            view.hammer(s.window, FillPattern::AllOnes)?;
            let mut hit = None;
            for &p in &buffer {
                let flipped = view.diff(p, fill)?;
                if flipped.is_empty() {
                    continue;
                }
                if hit.is_none() && flipped.contains(&s.target_offset) {
                    hit = Some(p);
                }
                view.write_pattern(p, fill)?;
            }
            if let Some(page) = hit {
                let rest: Vec<VPage> = buffer.iter().copied().filter(|&p| p != page).collect();
                if !rest.is_empty() {
                    view.free(&rest)?;
                }
                return Ok(Reclaimed { page, rounds, growth_steps, buffer: buffer.len() });
            }
        }
        if want >= s.max_buffer {
            view.free(&buffer)?;
            return Err(AttackError::ReclaimExhausted { rounds, buffer: buffer.len() });
        }
        want = (want * s.growth.max(2)).min(s.max_buffer);
        growth_steps += 1;
    }
}
