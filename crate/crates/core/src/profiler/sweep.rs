use std::collections::HashMap;

use super::discovery::{build_windows, find_same_bank_chunks};
use super::profile::{profile_window, PageProfile, ProfileConfig};
use super::ProfilerError;
use crate::machine::{AttackWindow, AttackerView, WindowId};
use crate::memos::VPage;
use crate::rng::SimRng;

/// Result of profiling a whole chunk.
#[derive(Clone, Debug)]
pub struct Sweep {
    pub windows: Vec<(WindowId, AttackWindow)>,
    /// Every victim page of every window, in window order.
    pub profiles: Vec<PageProfile>,
    pub page_window: HashMap<VPage, WindowId>,
}

impl Sweep {
    pub fn flippy(&self) -> impl Iterator<Item = &PageProfile> {
        self.profiles.iter().filter(|p| p.is_flippy())
    }
}

/// Discover banks and rows in `chunk`, arm every window and profile it.
pub fn sweep(
    view: &mut AttackerView<'_>,
    chunk: &[VPage],
    config: ProfileConfig,
    iterations: u32,
    rng: &mut SimRng,
) -> Result<Sweep, ProfilerError> {
    let groups = find_same_bank_chunks(view, chunk)?;
    let windows = build_windows(view, &groups, config.r, config.b)?;
    let mut out = Sweep { windows: Vec::new(), profiles: Vec::new(), page_window: HashMap::new() };
    for w in windows {
        let id = view.arm_window(&w)?;
        let victims: Vec<VPage> = w.victim_pages().collect();
        out.profiles.extend(profile_window(view, id, &victims, config, iterations, rng, None)?);
        out.page_window.extend(victims.iter().map(|&p| (p, id)));
        out.windows.push((id, w));
    }
    Ok(out)
}
