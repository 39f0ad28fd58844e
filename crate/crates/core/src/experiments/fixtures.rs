//! Published measurements used as reference values.

/// A profiled page: physical address, target bit offset, delta and sigma.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PageRow {
    pub addr: u64,
    pub offset: u16,
    pub delta: u32,
    pub sigma: u32,
}

pub const PROFILED_PAGES: [PageRow; 10] = [
    PageRow { addr: 0x2c0046000, offset: 2218, delta: 116, sigma: 0 },
    PageRow { addr: 0x2bfa62000, offset: 7210, delta: 73, sigma: 0 },
    PageRow { addr: 0x1ca224000, offset: 522, delta: 45, sigma: 0 },
    PageRow { addr: 0x1e7598000, offset: 11347, delta: 49, sigma: 17 },
    PageRow { addr: 0x135dd0000, offset: 7201, delta: 62, sigma: 18 },
    PageRow { addr: 0x1cd7fc000, offset: 981, delta: 41, sigma: 37 },
    PageRow { addr: 0x2c0ae1000, offset: 26034, delta: 42, sigma: 28 },
    PageRow { addr: 0x2c1c8c000, offset: 1349, delta: 80, sigma: 605 },
    PageRow { addr: 0x2c1d12000, offset: 9049, delta: 172, sigma: 1153 },
    PageRow { addr: 0x2c1d10000, offset: 16076, delta: 154, sigma: 2861 },
];

/// Flippy pages per hammering configuration: `(r, b, area_mb, pages)`.
pub const FLIPPY_DENSITY: [(u32, u32, f64, u64); 4] =
    [(15, 7, 340.38, 29_085), (15, 5, 296.25, 27_270), (15, 4, 46.50, 4788), (12, 7, 32.70, 2827)];

/// Page classes per configuration: `(r, b, reliable, unstable, unusable)`.
pub const CLASS_COUNTS: [(u32, u32, u64, u64, u64); 4] =
    [(15, 7, 685, 2076, 26_324), (15, 5, 218, 570, 26_482), (15, 4, 24, 56, 4708), (12, 7, 33, 128, 2666)];
