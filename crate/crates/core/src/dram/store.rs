//! Sparse physical cell store.
//!
//! Most simulated pages hold either a uniform byte, a counter-based random
//! pattern, or a block pattern, plus a handful of flipped bits. Those are
//! kept symbolically; a page is materialised into a dense buffer only when
//! it receives arbitrary byte writes.

use rustc_hash::FxHashMap;

use super::geometry::{Frame, PAGE_BITS, PAGE_BYTES};
use super::DramError;
use crate::rng::splitmix64;

/// Symbolic page contents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PagePattern {
    Uniform(u8),
    /// Pseudo-random bytes derived from a seed; random-access.
    Random(u64),
    /// Alternating runs of `k` one-bits and `k` zero-bits.
    Block(u32),
}

impl PagePattern {
    pub fn byte(&self, i: usize) -> u8 {
        match *self {
            PagePattern::Uniform(v) => v,
            PagePattern::Random(seed) => {
                let word = splitmix64(seed ^ ((i as u64 >> 3).wrapping_mul(0xA24B_AED4_963E_E407)));
                (word >> ((i & 7) * 8)) as u8
            }
            PagePattern::Block(k) => {
                let k = k.max(1) as usize;
                (0..8).fold(0u8, |acc, j| {
                    let bit = ((i * 8 + j) / k) % 2 == 0;
                    acc | ((bit as u8) << j)
                })
            }
        }
    }

    pub fn bit(&self, b: usize) -> bool {
        (self.byte(b / 8) >> (b % 8)) & 1 == 1
    }

    pub fn materialize(&self) -> Box<[u8; PAGE_BYTES]> {
        let mut page = Box::new([0u8; PAGE_BYTES]);
        for (i, byte) in page.iter_mut().enumerate() {
            *byte = self.byte(i);
        }
        page
    }
}

#[derive(Clone, Debug)]
enum PageData {
    Pattern { pattern: PagePattern, flipped: Vec<u16> },
    Dense(Box<[u8; PAGE_BYTES]>),
}

impl PageData {
    fn bit(&self, b: usize) -> bool {
        match self {
            PageData::Pattern { pattern, flipped } => {
                pattern.bit(b) ^ flipped.binary_search(&(b as u16)).is_ok()
            }
            PageData::Dense(d) => (d[b / 8] >> (b % 8)) & 1 == 1,
        }
    }

    fn toggle(&mut self, b: usize) {
        match self {
            PageData::Pattern { flipped, .. } => match flipped.binary_search(&(b as u16)) {
                Ok(i) => {
                    flipped.remove(i);
                }
                Err(i) => flipped.insert(i, b as u16),
            },
            PageData::Dense(d) => d[b / 8] ^= 1 << (b % 8),
        }
    }

    fn dense(&mut self) -> &mut [u8; PAGE_BYTES] {
        if let PageData::Pattern { pattern, flipped } = self {
            let mut d = pattern.materialize();
            for &b in flipped.iter() {
                d[b as usize / 8] ^= 1 << (b % 8);
            }
            *self = PageData::Dense(d);
        }
        match self {
            PageData::Dense(d) => d,
            PageData::Pattern { .. } => unreachable!(),
        }
    }
}

/// Contents of every physical frame. Untouched frames read as zeros.
#[derive(Clone, Debug)]
pub struct CellStore {
    n_frames: u64,
    pages: FxHashMap<Frame, PageData>,
}

impl CellStore {
    pub fn new(n_frames: u64) -> Self {
        Self { n_frames, pages: FxHashMap::default() }
    }

    pub fn n_frames(&self) -> u64 {
        self.n_frames
    }

    fn check(&self, frame: Frame) -> Result<(), DramError> {
        if frame >= self.n_frames {
            Err(DramError::AddressOutOfRange(frame * PAGE_BYTES as u64))
        } else {
            Ok(())
        }
    }

    fn page_mut(&mut self, frame: Frame) -> &mut PageData {
        self.pages
            .entry(frame)
            .or_insert(PageData::Pattern { pattern: PagePattern::Uniform(0), flipped: Vec::new() })
    }

    /// Overwrite a whole page with a symbolic pattern.
    pub fn fill(&mut self, frame: Frame, pattern: PagePattern) -> Result<(), DramError> {
        self.check(frame)?;
        if pattern == PagePattern::Uniform(0) {
            self.pages.remove(&frame);
        } else {
            self.pages.insert(frame, PageData::Pattern { pattern, flipped: Vec::new() });
        }
        Ok(())
    }

    pub fn write_bytes(&mut self, frame: Frame, offset: usize, bytes: &[u8]) -> Result<(), DramError> {
        self.check(frame)?;
        if offset + bytes.len() > PAGE_BYTES {
            return Err(DramError::PageOverrun { offset, len: bytes.len() });
        }
        self.page_mut(frame).dense()[offset..offset + bytes.len()].copy_from_slice(bytes);
        Ok(())
    }

    pub fn read_bytes(&self, frame: Frame, offset: usize, len: usize) -> Result<Vec<u8>, DramError> {
        self.check(frame)?;
        if offset + len > PAGE_BYTES {
            return Err(DramError::PageOverrun { offset, len });
        }
        Ok(match self.pages.get(&frame) {
            None => vec![0; len],
            Some(PageData::Dense(d)) => d[offset..offset + len].to_vec(),
            Some(p) => (offset..offset + len)
                .map(|i| (0..8).fold(0u8, |acc, j| acc | ((p.bit(i * 8 + j) as u8) << j)))
                .collect(),
        })
    }

    pub fn read_page(&self, frame: Frame) -> Result<Vec<u8>, DramError> {
        self.read_bytes(frame, 0, PAGE_BYTES)
    }

    pub fn write_page(&mut self, frame: Frame, data: &[u8]) -> Result<(), DramError> {
        if data.len() != PAGE_BYTES {
            return Err(DramError::PageOverrun { offset: 0, len: data.len() });
        }
        self.write_bytes(frame, 0, data)
    }

    pub fn bit(&self, frame: Frame, page_bit: usize) -> bool {
        debug_assert!(page_bit < PAGE_BITS);
        self.pages.get(&frame).is_some_and(|p| p.bit(page_bit))
    }

    pub fn set_bit(&mut self, frame: Frame, page_bit: usize, value: bool) -> Result<(), DramError> {
        self.check(frame)?;
        if self.bit(frame, page_bit) != value {
            self.page_mut(frame).toggle(page_bit);
        }
        Ok(())
    }

    pub fn toggle_bit(&mut self, frame: Frame, page_bit: usize) {
        self.page_mut(frame).toggle(page_bit);
    }

    /// Bit offsets at which the frame differs from `pattern`, ascending.
    pub fn diff(&self, frame: Frame, pattern: PagePattern) -> Vec<u16> {
        match self.pages.get(&frame) {
            Some(PageData::Pattern { pattern: p, flipped }) if *p == pattern => flipped.clone(),
            None if pattern == PagePattern::Uniform(0) => Vec::new(),
            other => {
                let data = match other {
                    None => PageData::Pattern { pattern: PagePattern::Uniform(0), flipped: vec![] },
                    Some(d) => d.clone(),
                };
                (0..PAGE_BITS)
                    .filter(|&b| data.bit(b) != pattern.bit(b))
                    .map(|b| b as u16)
                    .collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn write_then_read_roundtrip() {
        let mut s = CellStore::new(4);
        let data: Vec<u8> = (0..PAGE_BYTES).map(|i| (i * 7) as u8).collect();
        s.write_page(2, &data).unwrap();
        assert_eq!(s.read_page(2).unwrap(), data);
        assert_eq!(s.read_page(1).unwrap(), vec![0; PAGE_BYTES]);
    }

    #[test]
    fn symbolic_and_dense_views_agree() {
        let mut s = CellStore::new(2);
        let pat = PagePattern::Random(99);
        s.fill(0, pat).unwrap();
        s.toggle_bit(0, 12345);
        let bytes = s.read_page(0).unwrap();
        let mut expect = pat.materialize();
        expect[12345 / 8] ^= 1 << (12345 % 8);
        assert_eq!(&bytes[..], &expect[..]);
        assert_eq!(s.diff(0, pat), vec![12345]);
        // materialise through a byte write; diff must still find the flip
        s.write_bytes(0, 0, &[expect[0]]).unwrap();
        assert_eq!(s.diff(0, pat), vec![12345]);
    }

    #[test]
    fn block_pattern_bits() {
        let p = PagePattern::Block(4);
        let bits: Vec<bool> = (0..12).map(|b| p.bit(b)).collect();
        assert_eq!(
            bits,
            [true, true, true, true, false, false, false, false, true, true, true, true]
        );
        assert_eq!(PagePattern::Block(8).byte(0), 0xFF);
        assert_eq!(PagePattern::Block(8).byte(1), 0x00);
    }

    #[test]
    fn random_pages_without_hammering_are_stable() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut s = CellStore::new(1000);
        let mut written = Vec::new();
        for f in 0..1000u64 {
            let mut page = vec![0u8; PAGE_BYTES];
            rng.fill(&mut page[..]);
            s.write_page(f, &page).unwrap();
            written.push(page);
        }
        for (f, page) in written.iter().enumerate() {
            assert_eq!(&s.read_page(f as u64).unwrap(), page);
        }
    }

    #[test]
    fn overrun_rejected() {
        let mut s = CellStore::new(1);
        assert!(s.write_bytes(0, 4090, &[0; 8]).is_err());
        assert!(s.write_bytes(1, 0, &[0]).is_err());
    }
}
