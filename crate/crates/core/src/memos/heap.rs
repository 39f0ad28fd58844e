use crate::dram::PAGE_BYTES;

/// Heap allocations are aligned to 16 bytes.
pub const HEAP_ALIGN: usize = 16;

pub fn round_up16(n: usize) -> usize {
    n.div_ceil(HEAP_ALIGN) * HEAP_ALIGN
}

/// Where a heap object lands relative to the heap's first page.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HeapPlacement {
    /// Pages past the heap's first page.
    pub page_index: usize,
    /// Byte offset within that page.
    pub offset: usize,
}

/// Place an object after an attacker-sized allocation. `base` is the heap's
/// first free byte within its first page.
///
/// The object's size does not affect where it starts; callers check that it
/// fits in the page.
pub fn place_heap_object(base: usize, attacker_controlled_size: usize, _object_size: usize) -> HeapPlacement {
    let start = round_up16(base) + round_up16(attacker_controlled_size);
    HeapPlacement { page_index: start / PAGE_BYTES, offset: start % PAGE_BYTES }
}
