use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rustc_hash::FxHashMap;

use super::cache::{PageFrameCache, DEFAULT_CACHE_CAPACITY};
use super::{MemError, Pid, VPage};
use crate::dram::Frame;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AllocatorConfig {
    pub cache_capacity: usize,
    /// Zero frame contents when they are freed.
    pub clear_on_free: bool,
}

impl Default for AllocatorConfig {
    fn default() -> Self {
        Self { cache_capacity: DEFAULT_CACHE_CAPACITY, clear_on_free: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceOp {
    Alloc,
    Free,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    pub op: TraceOp,
    pub page: VPage,
    pub frame: Frame,
}

impl TraceEvent {
    /// One log line; the frame column only in privileged mode.
    pub fn render(&self, privileged: bool) -> String {
        let op = match self.op {
            TraceOp::Alloc => "alloc",
            TraceOp::Free => "free",
        };
        if privileged {
            format!("{op} pid={} vpage={:#x} frame={:#x}", self.page.pid.0, self.page.vpn, self.frame)
        } else {
            format!("{op} pid={} vpage={:#x}", self.page.pid.0, self.page.vpn)
        }
    }
}

/// Page allocator: FILO page-frame cache in front of an ordered free pool.
#[derive(Clone)]
pub struct Allocator {
    config: AllocatorConfig,
    cache: PageFrameCache,
    pool: BTreeSet<Frame>,
    mappings: FxHashMap<Pid, BTreeMap<u64, Frame>>,
    owners: FxHashMap<Frame, VPage>,
    next_vpn: FxHashMap<Pid, u64>,
    trace: Vec<TraceEvent>,
    tracing: bool,
}

impl fmt::Debug for Allocator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Allocator")
            .field("cached", &self.cache.len())
            .field("pool", &self.pool.len())
            .field("mapped", &self.owners.len())
            .finish()
    }
}

impl Allocator {
    /// Allocator over frames `0..n_frames`, all initially in the pool.
    pub fn new(n_frames: u64, config: AllocatorConfig) -> Self {
        Self::with_frames(0..n_frames, config)
    }

    pub fn with_frames(frames: impl IntoIterator<Item = Frame>, config: AllocatorConfig) -> Self {
        Self {
            config,
            cache: PageFrameCache::new(config.cache_capacity),
            pool: frames.into_iter().collect(),
            mappings: FxHashMap::default(),
            owners: FxHashMap::default(),
            next_vpn: FxHashMap::default(),
            trace: Vec::new(),
            tracing: false,
        }
    }

    pub fn config(&self) -> AllocatorConfig {
        self.config
    }

    pub fn set_tracing(&mut self, on: bool) {
        self.tracing = on;
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    pub fn cache(&self) -> &PageFrameCache {
        &self.cache
    }

    pub fn free_frames(&self) -> usize {
        self.cache.len() + self.pool.len()
    }

    fn take_frame(&mut self) -> Option<Frame> {
        self.cache.pop().or_else(|| self.pool.pop_first())
    }

    /// Allocate `n` pages for `pid`: cache first (most recent first), then
    /// the pool in ascending frame order.
    pub fn alloc_pages(&mut self, pid: Pid, n: usize) -> Result<Vec<VPage>, MemError> {
        if n == 0 {
            return Err(MemError::ZeroPages);
        }
        if self.free_frames() < n {
            return Err(MemError::OutOfMemory { requested: n, available: self.free_frames() });
        }
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let frame = self.take_frame().expect("checked above");
            let vpn = self.next_vpn.entry(pid).or_insert(0);
            let page = VPage { pid, vpn: *vpn };
            *vpn += 1;
            self.mappings.entry(pid).or_default().insert(page.vpn, frame);
            self.owners.insert(frame, page);
            if self.tracing {
                self.trace.push(TraceEvent { op: TraceOp::Alloc, page, frame });
            }
            out.push(page);
        }
        Ok(out)
    }

    /// Free pages in the given order. Returns the freed frames in that
    /// order; clearing contents is the caller's job when
    /// [`AllocatorConfig::clear_on_free`] is set.
    pub fn free_pages(&mut self, pid: Pid, pages: &[VPage]) -> Result<Vec<Frame>, MemError> {
        for (i, p) in pages.iter().enumerate() {
            if p.pid != pid {
                return Err(MemError::ForeignPage(*p));
            }
            if pages[..i].contains(p) || self.translate(*p).is_none() {
                return Err(MemError::NotMapped(*p));
            }
        }
        let mut frames = Vec::with_capacity(pages.len());
        for &page in pages {
            let frame = self.mappings.get_mut(&pid).and_then(|m| m.remove(&page.vpn)).expect("validated");
            self.owners.remove(&frame);
            if let Some(spilled) = self.cache.push(frame) {
                self.pool.insert(spilled);
            }
            if self.tracing {
                self.trace.push(TraceEvent { op: TraceOp::Free, page, frame });
            }
            frames.push(frame);
        }
        Ok(frames)
    }

    /// Privileged: physical frame behind a virtual page.
    pub fn translate(&self, page: VPage) -> Option<Frame> {
        self.mappings.get(&page.pid)?.get(&page.vpn).copied()
    }

    /// Privileged: owner of a frame.
    pub fn owner(&self, frame: Frame) -> Option<VPage> {
        self.owners.get(&frame).copied()
    }

    pub fn pages_of(&self, pid: Pid) -> Vec<VPage> {
        self.mappings
            .get(&pid)
            .map(|m| m.keys().map(|&vpn| VPage { pid, vpn }).collect())
            .unwrap_or_default()
    }
}
