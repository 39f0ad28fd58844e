use std::collections::{HashSet, VecDeque};

use crate::dram::Frame;

/// Default number of frames held by the page-frame cache.
pub const DEFAULT_CACHE_CAPACITY: usize = 512;

/// FILO store of recently freed frames. When full, pushing evicts the
/// oldest frame, which the caller returns to the free pool.
#[derive(Clone, Debug)]
pub struct PageFrameCache {
    stack: VecDeque<Frame>,
    members: HashSet<Frame>,
    capacity: usize,
}

impl PageFrameCache {
    pub fn new(capacity: usize) -> Self {
        Self { stack: VecDeque::new(), members: HashSet::new(), capacity: capacity.max(1) }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.stack.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stack.is_empty()
    }

    pub fn contains(&self, f: Frame) -> bool {
        self.members.contains(&f)
    }

    /// Push a freed frame. Returns the evicted oldest frame if over capacity.
    ///
    /// Panics if the frame is already cached; the allocator guarantees it
    /// never is.
    pub fn push(&mut self, f: Frame) -> Option<Frame> {
        assert!(self.members.insert(f), "frame {f} cached twice");
        self.stack.push_back(f);
        if self.stack.len() > self.capacity {
            let old = self.stack.pop_front().expect("non-empty");
            self.members.remove(&old);
            Some(old)
        } else {
            None
        }
    }

    /// Most recently pushed frame.
    pub fn pop(&mut self) -> Option<Frame> {
        let f = self.stack.pop_back()?;
        self.members.remove(&f);
        Some(f)
    }

    /// Frames from most to least recent.
    pub fn iter(&self) -> impl Iterator<Item = Frame> + '_ {
        self.stack.iter().rev().copied()
    }
}
