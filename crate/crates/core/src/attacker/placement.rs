//! Choosing malloc sizes that put a chosen key-context bit on a target
//! offset, and handing the target page to the victim.

use super::AttackError;
use crate::dram::PAGE_BYTES;
use crate::machine::AttackerView;
use crate::memos::{round_up16, VPage, HEAP_ALIGN};
use crate::victim::{CTX_BYTES, KEY_BITS};

/// Context bits covered by one 16-byte heap slot.
pub const SLOT_BITS: usize = HEAP_ALIGN * 8;
/// Key bits a page can probe: `k` and `k + 128` share a page offset modulo
/// one slot.
pub const CONGRUENCE_CLASSES: usize = KEY_BITS / 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Placement {
    /// Byte offset of the key context in its page.
    pub offset: usize,
    pub malloc_size: usize,
    /// Context bit that lands on the target offset.
    pub ctx_bit: usize,
}

impl Placement {
    /// Page bits `[start, end)` spanned by the context.
    pub fn span(&self) -> (u32, u32) {
        let start = (self.offset * 8) as u32;
        (start, start + (CTX_BYTES * 8) as u32)
    }
}

fn place_at(target_offset: u16, heap_base: usize, ctx_bit: usize) -> Option<Placement> {
    let t = target_offset as usize;
    let base = round_up16(heap_base);
    if t < ctx_bit || (t - ctx_bit) % SLOT_BITS != 0 {
        return None;
    }
    let offset = (t - ctx_bit) / 8;
    (offset >= base && offset + CTX_BYTES <= PAGE_BYTES).then(|| Placement { offset, malloc_size: offset - base, ctx_bit })
}

/// Placement putting secret bit `t mod 128 + 128 * shift` on offset `t`.
pub fn key_bit_placement(target_offset: u16, heap_base: usize, shift: usize) -> Option<Placement> {
    let bit = target_offset as usize % SLOT_BITS + SLOT_BITS * shift;
    (bit < KEY_BITS).then(|| place_at(target_offset, heap_base, bit)).flatten()
}

/// Placement putting a public-key bit that holds `value` on offset `t`.
pub fn control_placement(target_offset: u16, heap_base: usize, public: &[u8], value: bool) -> Option<Placement> {
    let first = KEY_BITS + target_offset as usize % SLOT_BITS;
    (first..CTX_BYTES * 8).step_by(SLOT_BITS).find_map(|j| {
        let pk = j - KEY_BITS;
        let bit = (public[pk / 8] >> (pk % 8)) & 1 == 1;
        if bit == value {
            place_at(target_offset, heap_base, j)
        } else {
            None
        }
    })
}

/// Free the target page and start the victim right away, so the FILO cache
/// hands the page to the key allocation. Placement is confirmed only
/// behaviourally, by later probes.
pub fn massage_key_to_page(view: &mut AttackerView<'_>, page: VPage, malloc_size: usize) -> Result<(), AttackError> {
    view.free(&[page])?;
    view.launch_victim(malloc_size)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn congruent_pair_is_one_slot_apart() {
        let a = key_bit_placement(2218, 0x10, 0).unwrap();
        let b = key_bit_placement(2218, 0x10, 1).unwrap();
        assert_eq!(a.ctx_bit, 2218 % 128);
        assert_eq!(b.ctx_bit, a.ctx_bit + 128);
        assert_eq!(a.offset - b.offset, 16);
        assert_eq!(a.offset * 8 + a.ctx_bit, 2218);
        assert_eq!(b.offset * 8 + b.ctx_bit, 2218);
        assert!(key_bit_placement(2218, 0x10, 2).is_none());
    }

    #[test]
    fn bounds() {
        // too close to the heap base for the shifted copy
        assert!(key_bit_placement(130, 0x10, 0).is_some());
        assert!(key_bit_placement(130, 0x10, 1).is_none());
        // the context must end inside the page
        assert!(key_bit_placement(32767, 0x10, 0).is_none());
    }

    #[test]
    fn control_lands_on_matching_public_bit() {
        let mut pk = [0u8; 64];
        pk[17] = 0xFF;
        let p = control_placement(5000, 0x10, &pk, true).unwrap();
        assert_eq!(p.offset * 8 + p.ctx_bit, 5000);
        let j = p.ctx_bit - KEY_BITS;
        assert_eq!(j / 8, 17);
        assert!(control_placement(5000, 0x10, &[0u8; 64], true).is_none());
    }
}
