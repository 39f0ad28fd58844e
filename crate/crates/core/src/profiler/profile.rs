use std::collections::BTreeMap;

use rand::Rng;

use super::classify::{classify, PageClass};
use super::ProfilerError;
use crate::dram::{FillPattern, FlipDirection, PagePattern};
use crate::machine::{AttackerView, WindowId};
use crate::memos::VPage;
use crate::rng::SimRng;

/// Flip counts at one bit offset.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OffsetCounts {
    pub zero_to_one: u32,
    pub one_to_zero: u32,
}

impl OffsetCounts {
    pub fn total(&self) -> u32 {
        self.zero_to_one + self.one_to_zero
    }

    /// Direction with the larger count (ties go to 0->1).
    pub fn direction(&self) -> FlipDirection {
        if self.one_to_zero > self.zero_to_one {
            FlipDirection::OneToZero
        } else {
            FlipDirection::ZeroToOne
        }
    }

    pub fn add(&mut self, d: FlipDirection) {
        match d {
            FlipDirection::ZeroToOne => self.zero_to_one += 1,
            FlipDirection::OneToZero => self.one_to_zero += 1,
        }
    }
}

/// Hammering configuration a profile was taken under.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ProfileConfig {
    pub r: u32,
    pub b: u32,
}

/// Per-offset directional flip counts of one page. Both sub-passes of an
/// iteration are counted, so an offset can gain up to two counts per
/// iteration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PageProfile {
    pub page: VPage,
    pub config: ProfileConfig,
    pub iterations: u32,
    pub counts: BTreeMap<u16, OffsetCounts>,
}

impl PageProfile {
    pub fn new(page: VPage, config: ProfileConfig, iterations: u32) -> Self {
        Self { page, config, iterations, counts: BTreeMap::new() }
    }

    pub fn record(&mut self, offset: u16, d: FlipDirection) {
        self.counts.entry(offset).or_default().add(d);
    }

    /// Offset with the largest count, lowest offset on ties.
    pub fn target(&self) -> Option<(u16, OffsetCounts)> {
        self.counts
            .iter()
            .fold(None, |best: Option<(u16, OffsetCounts)>, (&o, &c)| match best {
                Some((_, b)) if b.total() >= c.total() => best,
                _ => Some((o, c)),
            })
    }

    pub fn target_offset(&self) -> Option<u16> {
        self.target().map(|t| t.0)
    }

    pub fn direction(&self) -> Option<FlipDirection> {
        self.target().map(|t| t.1.direction())
    }

    pub fn delta(&self) -> u32 {
        self.target().map_or(0, |t| t.1.total())
    }

    pub fn total(&self) -> u32 {
        self.counts.values().map(OffsetCounts::total).sum()
    }

    pub fn sigma(&self) -> u32 {
        self.total() - self.delta()
    }

    /// Another offset reaches the target count.
    pub fn tied(&self) -> bool {
        let d = self.delta();
        d > 0 && self.counts.values().filter(|c| c.total() == d).count() > 1
    }

    pub fn is_flippy(&self) -> bool {
        !self.counts.is_empty()
    }

    pub fn class(&self) -> PageClass {
        classify(self.delta(), self.sigma(), self.tied())
    }

    /// Flippy offsets other than the target within `[lo, hi)`.
    pub fn others_in(&self, lo: u32, hi: u32) -> usize {
        let t = self.target_offset();
        self.counts.keys().filter(|&&o| Some(o) != t && (lo..hi).contains(&(o as u32))).count()
    }
}

/// Per-session record kept when tracing a profiling run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PageTrace {
    /// Random-data seed written in each iteration.
    pub seeds: Vec<u64>,
    /// `(iteration, pass, offset, direction)` of every observed flip.
    pub flips: Vec<(u32, u8, u16, FlipDirection)>,
}

pub const PROFILE_FILLS: [FillPattern; 2] = [FillPattern::AllOnes, FillPattern::AllZeros];

/// Profile every victim page of an armed window.
///
/// Each iteration writes fresh random data to the victim pages, hammers with
/// all-ones aggressors, records and restores, then hammers with all-zeros
/// aggressors over the same data and records again.
pub fn profile_window(
    view: &mut AttackerView<'_>,
    window: WindowId,
    victims: &[VPage],
    config: ProfileConfig,
    iterations: u32,
    rng: &mut SimRng,
    mut traces: Option<&mut Vec<PageTrace>>,
) -> Result<Vec<PageProfile>, ProfilerError> {
    let mut profiles: Vec<PageProfile> = victims.iter().map(|&p| PageProfile::new(p, config, iterations)).collect();
    if let Some(t) = traces.as_deref_mut() {
        *t = vec![PageTrace::default(); victims.len()];
    }
    let mut seeds = vec![0u64; victims.len()];
    for it in 0..iterations {
        for (i, &p) in victims.iter().enumerate() {
            seeds[i] = rng.random();
            view.write_pattern(p, PagePattern::Random(seeds[i]))?;
        }
        if let Some(t) = traces.as_deref_mut() {
            for (tr, &s) in t.iter_mut().zip(&seeds) {
                tr.seeds.push(s);
            }
        }
        for (pass, fill) in PROFILE_FILLS.into_iter().enumerate() {
            view.hammer(window, fill)?;
            for (i, &p) in victims.iter().enumerate() {
                let pattern = PagePattern::Random(seeds[i]);
                let flipped = view.diff(p, pattern)?;
                if flipped.is_empty() {
                    continue;
                }
                for &off in &flipped {
                    let d = FlipDirection::from_source(pattern.bit(off as usize));
                    profiles[i].record(off, d);
                    if let Some(t) = traces.as_deref_mut() {
                        t[i].flips.push((it, pass as u8, off, d));
                    }
                }
                view.write_pattern(p, pattern)?;
            }
        }
    }
    Ok(profiles)
}
