use super::DramError;

/// Bytes per OS page.
pub const PAGE_BYTES: usize = 4096;
/// Bits per OS page.
pub const PAGE_BITS: usize = PAGE_BYTES * 8;
/// Bytes per DRAM row: two 4 KiB pages.
pub const ROW_BYTES: usize = 2 * PAGE_BYTES;
/// Bits per DRAM row.
pub const ROW_BITS: usize = ROW_BYTES * 8;

const COLUMN_BITS: u32 = 13;
const PAGE_SHIFT: u32 = 12;

/// Physical frame number (physical address >> 12).
pub type Frame = u64;

/// A physical byte address in simulated memory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PhysAddr(pub u64);

impl PhysAddr {
    pub fn frame(self) -> Frame {
        self.0 >> PAGE_SHIFT
    }

    pub fn from_frame(frame: Frame) -> Self {
        PhysAddr(frame << PAGE_SHIFT)
    }

    pub fn page_offset(self) -> usize {
        (self.0 as usize) & (PAGE_BYTES - 1)
    }
}

impl std::fmt::Display for PhysAddr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:x}", self.0)
    }
}

/// Decoded DRAM coordinates of a physical address.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DramAddr {
    pub bank: u32,
    pub row: u32,
    /// Which 4 KiB half of the row.
    pub page_half: u32,
    pub byte_offset: u32,
}

/// Configurable XOR bank mapping: bank bit `i` is the parity of
/// `address & bank_fns[i]`, the row is `address >> row_shift`, and the low 13
/// bits address a byte within the 8 KiB row.
///
/// Every function must contain exactly one bit of the bank field
/// `[13, row_shift)`, namely bit `13 + i`, which makes the mapping invertible.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AddressMapping {
    bank_fns: Vec<u64>,
    row_shift: u32,
}

impl AddressMapping {
    /// Default scheme: `log2(n_banks)` bank bits, each the XOR of one bank-field
    /// bit and the matching low row bit.
    pub fn xor_default(n_banks: u32) -> Result<Self, DramError> {
        if n_banks == 0 || !n_banks.is_power_of_two() {
            return Err(DramError::InvalidGeometry(format!(
                "bank count {n_banks} must be a power of two"
            )));
        }
        let k = n_banks.trailing_zeros();
        let row_shift = COLUMN_BITS + k;
        let fns = (0..k)
            .map(|i| (1u64 << (COLUMN_BITS + i)) | (1u64 << (row_shift + i)))
            .collect();
        Self::new(fns, row_shift)
    }

    pub fn new(bank_fns: Vec<u64>, row_shift: u32) -> Result<Self, DramError> {
        let k = bank_fns.len() as u32;
        if row_shift != COLUMN_BITS + k {
            return Err(DramError::InvalidGeometry(format!(
                "row shift {row_shift} must equal 13 + number of bank functions ({k})"
            )));
        }
        let field = ((1u64 << k) - 1) << COLUMN_BITS;
        for (i, f) in bank_fns.iter().enumerate() {
            if f & field != 1u64 << (COLUMN_BITS + i as u32) {
                return Err(DramError::InvalidGeometry(format!(
                    "bank function {i} ({f:#x}) must select exactly bit {} of the bank field",
                    COLUMN_BITS + i as u32
                )));
            }
        }
        Ok(Self { bank_fns, row_shift })
    }

    pub fn bank_fns(&self) -> &[u64] {
        &self.bank_fns
    }

    pub fn n_banks(&self) -> u32 {
        1 << self.bank_fns.len()
    }

    fn decode(&self, addr: u64) -> DramAddr {
        let bank = self
            .bank_fns
            .iter()
            .enumerate()
            .fold(0u32, |acc, (i, f)| acc | (((addr & f).count_ones() & 1) << i));
        DramAddr {
            bank,
            row: (addr >> self.row_shift) as u32,
            page_half: ((addr >> PAGE_SHIFT) & 1) as u32,
            byte_offset: (addr as u32) & (PAGE_BYTES as u32 - 1),
        }
    }

    fn encode(&self, a: &DramAddr) -> u64 {
        let mut addr = ((a.row as u64) << self.row_shift)
            | ((a.page_half as u64) << PAGE_SHIFT)
            | a.byte_offset as u64;
        for (i, f) in self.bank_fns.iter().enumerate() {
            let field_bit = 1u64 << (COLUMN_BITS + i as u32);
            let parity = (addr & f & !field_bit).count_ones() & 1;
            if parity ^ ((a.bank >> i) & 1) == 1 {
                addr |= field_bit;
            }
        }
        addr
    }
}

/// DRAM geometry of one simulated module.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DramGeometry {
    rows_per_bank: u32,
    mapping: AddressMapping,
}

impl DramGeometry {
    pub fn new(n_banks: u32, rows_per_bank: u32) -> Result<Self, DramError> {
        Self::with_mapping(AddressMapping::xor_default(n_banks)?, rows_per_bank)
    }

    pub fn with_mapping(mapping: AddressMapping, rows_per_bank: u32) -> Result<Self, DramError> {
        if rows_per_bank == 0 {
            return Err(DramError::InvalidGeometry("rows_per_bank must be >= 1".into()));
        }
        Ok(Self { rows_per_bank, mapping })
    }

    pub fn n_banks(&self) -> u32 {
        self.mapping.n_banks()
    }

    pub fn rows_per_bank(&self) -> u32 {
        self.rows_per_bank
    }

    pub fn row_bytes(&self) -> usize {
        ROW_BYTES
    }

    pub fn page_bits(&self) -> usize {
        PAGE_BITS
    }

    pub fn mapping(&self) -> &AddressMapping {
        &self.mapping
    }

    pub fn size_bytes(&self) -> u64 {
        self.n_banks() as u64 * self.rows_per_bank as u64 * ROW_BYTES as u64
    }

    pub fn n_frames(&self) -> u64 {
        self.size_bytes() / PAGE_BYTES as u64
    }

    /// Decode a physical address into (bank, row, page half, byte offset).
    pub fn map_address(&self, addr: PhysAddr) -> Result<DramAddr, DramError> {
        if addr.0 >= self.size_bytes() {
            return Err(DramError::AddressOutOfRange(addr.0));
        }
        Ok(self.mapping.decode(addr.0))
    }

    /// Inverse of [`map_address`](Self::map_address).
    pub fn encode(&self, a: &DramAddr) -> Result<PhysAddr, DramError> {
        if a.bank >= self.n_banks()
            || a.row >= self.rows_per_bank
            || a.page_half > 1
            || a.byte_offset as usize >= PAGE_BYTES
        {
            return Err(DramError::InvalidCoordinates(*a));
        }
        Ok(PhysAddr(self.mapping.encode(a)))
    }

    /// Frame holding the given half of a row.
    pub fn frame_of(&self, bank: u32, row: u32, page_half: u32) -> Result<Frame, DramError> {
        self.encode(&DramAddr { bank, row, page_half, byte_offset: 0 })
            .map(PhysAddr::frame)
    }
}
