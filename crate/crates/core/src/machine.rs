//! One simulated host: DRAM, allocator, the victim server, the attacker's
//! own copy of it and a background process.
//!
//! The attacker drives the machine only through [`AttackerView`], which
//! hands out virtual page handles and behavioural observations. Physical
//! frames, the flip model and the victim's key are reachable only through
//! [`PrivilegedView`], which exists for audits and tests.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dram::{
    BankWindow, DramAddr, DramError, FillPattern, Frame, HammerConfig, HammerContext, PagePattern, DEFAULT_ACTIVATIONS,
};
use crate::memos::{Allocator, AllocatorConfig, MemError, Pid, TraceEvent};
use crate::rng::{derive_u64, SimRng};
use crate::victim::{
    HandshakeOutcome, KeyReloadPolicy, SecretKey, VictimConfig, VictimError, VictimProcess, CTX_BYTES, PUBLIC_BYTES,
};

pub use crate::dram::Dram;
pub use crate::memos::VPage;

pub const ATTACKER: Pid = Pid(1);
pub const VICTIM: Pid = Pid(2);
pub const COPY: Pid = Pid(3);
pub const BACKGROUND: Pid = Pid(4);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SysError {
    #[error(transparent)]
    Mem(#[from] MemError),
    #[error(transparent)]
    Dram(#[from] DramError),
}

/// DRAM plus allocator: the state shared by every process.
#[derive(Clone, Debug)]
pub struct System {
    pub dram: Dram,
    pub alloc: Allocator,
}

impl System {
    pub fn new(dram: Dram, config: AllocatorConfig) -> Self {
        let alloc = Allocator::new(dram.geometry.n_frames(), config);
        Self { dram, alloc }
    }

    pub fn alloc(&mut self, pid: Pid, n: usize) -> Result<Vec<VPage>, SysError> {
        Ok(self.alloc.alloc_pages(pid, n)?)
    }

    pub fn free(&mut self, pid: Pid, pages: &[VPage]) -> Result<(), SysError> {
        let frames = self.alloc.free_pages(pid, pages)?;
        if self.alloc.config().clear_on_free {
            for f in frames {
                self.dram.store.fill(f, PagePattern::Uniform(0))?;
            }
        }
        Ok(())
    }

    pub fn frame(&self, page: VPage) -> Result<Frame, SysError> {
        self.alloc.translate(page).ok_or(SysError::Mem(MemError::NotMapped(page)))
    }

    pub fn write(&mut self, page: VPage, offset: usize, bytes: &[u8]) -> Result<(), SysError> {
        let f = self.frame(page)?;
        Ok(self.dram.store.write_bytes(f, offset, bytes)?)
    }

    pub fn read(&self, page: VPage, offset: usize, len: usize) -> Result<Vec<u8>, SysError> {
        let f = self.frame(page)?;
        Ok(self.dram.store.read_bytes(f, offset, len)?)
    }
}

/// Simulated cost of each attacker-visible action, in microseconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TickCosts {
    /// One hammering session (500K activations per aggressor).
    pub hammer_session_us: u64,
    pub handshake_us: u64,
    /// Victim or copy process (re)load.
    pub process_start_us: u64,
    /// Reading one page back to look for flips.
    pub page_scan_us: u64,
}

impl Default for TickCosts {
    fn default() -> Self {
        Self { hammer_session_us: 32_000, handshake_us: 3_000, process_start_us: 15_000, page_scan_us: 10 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostCounters {
    pub hammer_sessions: u64,
    pub handshakes: u64,
    pub process_starts: u64,
    pub page_scans: u64,
}

impl CostCounters {
    pub fn total_us(&self, c: &TickCosts) -> u64 {
        self.hammer_sessions * c.hammer_session_us
            + self.handshakes * c.handshake_us
            + self.process_starts * c.process_start_us
            + self.page_scans * c.page_scan_us
    }

    pub fn since(&self, earlier: &CostCounters) -> CostCounters {
        CostCounters {
            hammer_sessions: self.hammer_sessions - earlier.hammer_sessions,
            handshakes: self.handshakes - earlier.handshakes,
            process_starts: self.process_starts - earlier.process_starts,
            page_scans: self.page_scans - earlier.page_scans,
        }
    }
}

/// Unrelated process whose allocations perturb the page-frame cache each
/// time the victim or the copy exits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackgroundConfig {
    /// Pages held from boot; taken from the lowest frames.
    pub pages: usize,
    /// Upper bound of pages freed per exit event.
    pub max_churn: usize,
}

impl Default for BackgroundConfig {
    fn default() -> Self {
        Self { pages: 128, max_churn: 24 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MachineConfig {
    pub cache_capacity: usize,
    pub clear_on_free: bool,
    pub costs: TickCosts,
    pub background: BackgroundConfig,
    /// Probability that the row-conflict oracle reports a spurious conflict.
    pub oracle_false_positive: f64,
}

impl Default for MachineConfig {
    fn default() -> Self {
        Self {
            cache_capacity: crate::memos::DEFAULT_CACHE_CAPACITY,
            clear_on_free: false,
            costs: TickCosts::default(),
            background: BackgroundConfig::default(),
            oracle_false_positive: 0.0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MachineError {
    #[error(transparent)]
    System(#[from] SysError),
    #[error(transparent)]
    Victim(#[from] VictimError),
    #[error("page {0} is not owned by the attacker")]
    NotOwned(VPage),
    #[error("invalid attack window: {0}")]
    BadWindow(String),
    #[error("unknown window handle {0}")]
    UnknownWindow(usize),
    #[error("{0} is not running")]
    NotRunning(&'static str),
    #[error("{0} is already running")]
    AlreadyRunning(&'static str),
}

impl From<MemError> for MachineError {
    fn from(e: MemError) -> Self {
        MachineError::System(e.into())
    }
}

impl From<DramError> for MachineError {
    fn from(e: DramError) -> Self {
        MachineError::System(e.into())
    }
}

/// Row-conflict oracle answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Latency {
    Fast,
    /// Same bank, different row.
    Slow,
}

/// Attacker-side description of an attack window: for each bank, the
/// attacker rows and the victim rows in between, each row given by its two
/// page halves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttackWindow {
    pub banks: Vec<WindowBank>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowBank {
    pub attacker_rows: Vec<[VPage; 2]>,
    pub victim_rows: Vec<[VPage; 2]>,
}

impl AttackWindow {
    pub fn n_attacker_rows(&self) -> usize {
        self.banks.first().map_or(0, |b| b.attacker_rows.len())
    }

    pub fn victim_pages(&self) -> impl Iterator<Item = VPage> + '_ {
        self.banks.iter().flat_map(|b| b.victim_rows.iter().flatten().copied())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct WindowId(pub usize);

/// The whole simulated host.
#[derive(Clone, Debug)]
pub struct Machine {
    sys: System,
    cfg: MachineConfig,
    victim_cfg: VictimConfig,
    victim_key: SecretKey,
    victim: Option<VictimProcess>,
    copy: Option<VictimProcess>,
    /// Armed windows with the frames of their attacker rows.
    windows: Vec<(HammerConfig, Vec<Frame>)>,
    background: Vec<VPage>,
    seed: u64,
    launches: u64,
    rng_background: SimRng,
    rng_oracle: SimRng,
    counters: CostCounters,
    sessions: u32,
}

impl Machine {
    pub fn new(
        dram: Dram,
        cfg: MachineConfig,
        victim_cfg: VictimConfig,
        victim_key: SecretKey,
        seed: u64,
    ) -> Result<Self, MachineError> {
        let mut sys =
            System::new(dram, AllocatorConfig { cache_capacity: cfg.cache_capacity, clear_on_free: cfg.clear_on_free });
        let background =
            if cfg.background.pages > 0 { sys.alloc(BACKGROUND, cfg.background.pages)? } else { Vec::new() };
        Ok(Self {
            sys,
            cfg,
            victim_cfg,
            victim_key,
            victim: None,
            copy: None,
            windows: Vec::new(),
            background,
            seed,
            launches: 0,
            rng_background: crate::rng::substream(seed, crate::rng::streams::BACKGROUND),
            rng_oracle: crate::rng::substream(seed, "oracle"),
            counters: CostCounters::default(),
            sessions: 0,
        })
    }

    pub fn attacker(&mut self) -> AttackerView<'_> {
        AttackerView { m: self }
    }

    pub fn privileged(&mut self) -> PrivilegedView<'_> {
        PrivilegedView { m: self }
    }

    pub fn config(&self) -> &MachineConfig {
        &self.cfg
    }

    pub fn victim_config(&self) -> &VictimConfig {
        &self.victim_cfg
    }

    fn churn(&mut self) -> Result<(), MachineError> {
        let max = self.cfg.background.max_churn.min(self.background.len());
        if max == 0 {
            return Ok(());
        }
        let k = self.rng_background.random_range(0..=max);
        self.background.shuffle(&mut self.rng_background);
        let freed: Vec<VPage> = self.background.split_off(self.background.len() - k);
        self.sys.free(BACKGROUND, &freed)?;
        let j = self.rng_background.random_range(0..=k);
        if j > 0 {
            let again = self.sys.alloc(BACKGROUND, j)?;
            self.background.extend(again);
        }
        Ok(())
    }

    fn process_rng(&mut self) -> SimRng {
        self.launches += 1;
        SimRng::seed_from_u64(derive_u64(self.seed, &format!("{}-{}", crate::rng::streams::VICTIM, self.launches)))
    }
}

fn check_owned(sys: &System, page: VPage) -> Result<Frame, MachineError> {
    if page.pid != ATTACKER {
        return Err(MachineError::NotOwned(page));
    }
    sys.frame(page).map_err(|_| MachineError::NotOwned(page))
}

/// Everything an unprivileged attacker can do.
pub struct AttackerView<'a> {
    m: &'a mut Machine,
}

impl AttackerView<'_> {
    pub fn alloc(&mut self, n: usize) -> Result<Vec<VPage>, MachineError> {
        Ok(self.m.sys.alloc(ATTACKER, n)?)
    }

    pub fn free(&mut self, pages: &[VPage]) -> Result<(), MachineError> {
        Ok(self.m.sys.free(ATTACKER, pages)?)
    }

    pub fn write_pattern(&mut self, page: VPage, pattern: PagePattern) -> Result<(), MachineError> {
        let f = check_owned(&self.m.sys, page)?;
        Ok(self.m.sys.dram.store.fill(f, pattern)?)
    }

    pub fn write_bytes(&mut self, page: VPage, offset: usize, bytes: &[u8]) -> Result<(), MachineError> {
        check_owned(&self.m.sys, page)?;
        Ok(self.m.sys.write(page, offset, bytes)?)
    }

    pub fn read(&mut self, page: VPage, offset: usize, len: usize) -> Result<Vec<u8>, MachineError> {
        check_owned(&self.m.sys, page)?;
        self.m.counters.page_scans += 1;
        Ok(self.m.sys.read(page, offset, len)?)
    }

    /// Bit offsets where the page differs from `pattern`.
    pub fn diff(&mut self, page: VPage, pattern: PagePattern) -> Result<Vec<u16>, MachineError> {
        let f = check_owned(&self.m.sys, page)?;
        self.m.counters.page_scans += 1;
        Ok(self.m.sys.dram.store.diff(f, pattern))
    }

    /// Row-conflict timing between two of the attacker's pages.
    pub fn latency(&mut self, a: VPage, b: VPage) -> Result<Latency, MachineError> {
        let da = self.dram_addr(a)?;
        let db = self.dram_addr(b)?;
        if da.bank == db.bank && da.row != db.row {
            return Ok(Latency::Slow);
        }
        let fp = self.m.cfg.oracle_false_positive;
        if fp > 0.0 && self.m.rng_oracle.random::<f64>() < fp {
            return Ok(Latency::Slow);
        }
        Ok(Latency::Fast)
    }

    /// Row number of a page, as revealed by the mapping functions.
    pub fn row_index(&mut self, page: VPage) -> Result<u32, MachineError> {
        Ok(self.dram_addr(page)?.row)
    }

    fn dram_addr(&self, page: VPage) -> Result<DramAddr, MachineError> {
        let f = check_owned(&self.m.sys, page)?;
        Ok(self.m.sys.dram.geometry.map_address(crate::dram::PhysAddr::from_frame(f))?)
    }

    /// Register a window for hammering. The window keeps pointing at the
    /// same DRAM rows even if victim-row pages are later freed.
    pub fn arm_window(&mut self, w: &AttackWindow) -> Result<WindowId, MachineError> {
        let r = w.n_attacker_rows();
        if w.banks.is_empty() || w.banks.iter().any(|b| b.attacker_rows.len() != r) {
            return Err(MachineError::BadWindow("every bank needs the same number of attacker rows".into()));
        }
        let mut layout = Vec::with_capacity(w.banks.len());
        for b in &w.banks {
            let rows = |pairs: &[[VPage; 2]]| -> Result<(u32, Vec<u32>), MachineError> {
                let mut bank = None;
                let mut out = Vec::with_capacity(pairs.len());
                for pair in pairs {
                    let a0 = self.dram_addr(pair[0])?;
                    let a1 = self.dram_addr(pair[1])?;
                    if (a0.bank, a0.row) != (a1.bank, a1.row) || a0.page_half == a1.page_half {
                        return Err(MachineError::BadWindow(format!("{} and {} are not one row", pair[0], pair[1])));
                    }
                    if *bank.get_or_insert(a0.bank) != a0.bank {
                        return Err(MachineError::BadWindow("rows span several banks".into()));
                    }
                    out.push(a0.row);
                }
                Ok((bank.unwrap_or(0), out))
            };
            let (bank, attacker_rows) = rows(&b.attacker_rows)?;
            let (vbank, victim_rows) = rows(&b.victim_rows)?;
            if !b.victim_rows.is_empty() && vbank != bank {
                return Err(MachineError::BadWindow("victim rows in another bank".into()));
            }
            layout.push(BankWindow { bank, attacker_rows, victim_rows });
        }
        let cfg = HammerConfig {
            n_attacker_rows: r as u32,
            n_banks: layout.len() as u32,
            activations: DEFAULT_ACTIVATIONS,
            attacker_fill: FillPattern::AllOnes,
            window_layout: layout,
        };
        let geom = &self.m.sys.dram.geometry;
        cfg.validate(geom)?;
        let mut frames = Vec::new();
        for bw in &cfg.window_layout {
            for &row in &bw.attacker_rows {
                frames.push(geom.frame_of(bw.bank, row, 0)?);
                frames.push(geom.frame_of(bw.bank, row, 1)?);
            }
        }
        self.m.windows.push((cfg, frames));
        Ok(WindowId(self.m.windows.len() - 1))
    }

    /// One hammering session on an armed window.
    pub fn hammer(&mut self, w: WindowId, fill: FillPattern) -> Result<(), MachineError> {
        let m = &mut *self.m;
        let (cfg, frames) = m.windows.get(w.0).ok_or(MachineError::UnknownWindow(w.0))?;
        if let Some(f) = frames.iter().find(|&&f| !matches!(m.sys.alloc.owner(f), Some(p) if p.pid == ATTACKER)) {
            return Err(MachineError::BadWindow(format!("attacker frame {f:#x} released")));
        }
        let alloc = &m.sys.alloc;
        let resident = |f: Frame| matches!(alloc.owner(f), Some(p) if p.pid == VICTIM || p.pid == COPY);
        let ctx = HammerContext { iteration: m.sessions, resident: &resident };
        m.sys.dram.session(cfg, fill, &ctx)?;
        m.sessions += 1;
        m.counters.hammer_sessions += 1;
        Ok(())
    }

    /// Start the victim server; its malloc size is attacker-influenced.
    pub fn launch_victim(&mut self, malloc_size: usize) -> Result<(), MachineError> {
        if self.m.victim.is_some() {
            return Err(MachineError::AlreadyRunning("victim"));
        }
        let cfg = VictimConfig { attacker_controlled_malloc_size: malloc_size, ..self.m.victim_cfg };
        let rng = self.m.process_rng();
        let v = VictimProcess::start(&mut self.m.sys, VICTIM, cfg, self.m.victim_key, rng)?;
        self.m.counters.process_starts += 1;
        self.m.victim = Some(v);
        Ok(())
    }

    pub fn stop_victim(&mut self) -> Result<(), MachineError> {
        let mut v = self.m.victim.take().ok_or(MachineError::NotRunning("victim"))?;
        v.release(&mut self.m.sys)?;
        self.m.churn()
    }

    /// Connect to the victim and complete (or fail) one handshake.
    pub fn connect(&mut self) -> Result<HandshakeOutcome, MachineError> {
        let m = &mut *self.m;
        let v = m.victim.as_mut().ok_or(MachineError::NotRunning("victim"))?;
        let out = v.handle_handshake(&mut m.sys)?;
        m.counters.handshakes += 1;
        if v.after_connection(&mut m.sys)? {
            m.counters.process_starts += 1;
        }
        Ok(out)
    }

    /// Start the attacker's own copy of the server binary with a chosen key.
    pub fn launch_copy(&mut self, malloc_size: usize, key: SecretKey) -> Result<(), MachineError> {
        if self.m.copy.is_some() {
            return Err(MachineError::AlreadyRunning("copy"));
        }
        let cfg = VictimConfig {
            attacker_controlled_malloc_size: malloc_size,
            key_reload_policy: KeyReloadPolicy::Persistent,
            ..self.m.victim_cfg.unpatched()
        };
        let rng = self.m.process_rng();
        let c = VictimProcess::start(&mut self.m.sys, COPY, cfg, key, rng)?;
        self.m.counters.process_starts += 1;
        self.m.copy = Some(c);
        Ok(())
    }

    /// Bit `i` of the copy's in-memory key context.
    pub fn copy_bit(&mut self, i: usize) -> Result<bool, MachineError> {
        let c = self.m.copy.as_ref().ok_or(MachineError::NotRunning("copy"))?;
        Ok(c.context_bit(&self.m.sys, i)?)
    }

    pub fn set_copy_bit(&mut self, i: usize, v: bool) -> Result<(), MachineError> {
        let m = &mut *self.m;
        let c = m.copy.as_mut().ok_or(MachineError::NotRunning("copy"))?;
        Ok(c.set_context_bit(&mut m.sys, i, v)?)
    }

    /// The copy's whole key context.
    pub fn copy_context(&mut self) -> Result<Vec<u8>, MachineError> {
        let c = self.m.copy.as_ref().ok_or(MachineError::NotRunning("copy"))?;
        Ok(c.context(&self.m.sys)?)
    }

    pub fn set_copy_context(&mut self, ctx: &[u8; CTX_BYTES]) -> Result<(), MachineError> {
        let m = &mut *self.m;
        let c = m.copy.as_mut().ok_or(MachineError::NotRunning("copy"))?;
        Ok(c.set_context(&mut m.sys, ctx)?)
    }

    pub fn stop_copy(&mut self) -> Result<(), MachineError> {
        let mut c = self.m.copy.take().ok_or(MachineError::NotRunning("copy"))?;
        c.release(&mut self.m.sys)?;
        self.m.churn()
    }

    pub fn counters(&self) -> CostCounters {
        self.m.counters
    }

    pub fn costs(&self) -> TickCosts {
        self.m.cfg.costs
    }

    /// Simulated time spent so far, in microseconds.
    pub fn now_us(&self) -> u64 {
        self.m.counters.total_us(&self.m.cfg.costs)
    }

    /// The victim binary's configuration is public.
    pub fn victim_config(&self) -> VictimConfig {
        self.m.victim_cfg
    }

    /// The victim's certified public key.
    pub fn victim_public_key(&self) -> [u8; PUBLIC_BYTES] {
        self.m.victim_key.public()
    }
}

/// Ground-truth access for audits and tests. Never used by attack code.
pub struct PrivilegedView<'a> {
    m: &'a mut Machine,
}

impl PrivilegedView<'_> {
    pub fn virt_to_phys(&self, page: VPage) -> Option<Frame> {
        self.m.sys.alloc.translate(page)
    }

    pub fn dram_addr(&self, page: VPage) -> Option<DramAddr> {
        let f = self.virt_to_phys(page)?;
        self.m.sys.dram.geometry.map_address(crate::dram::PhysAddr::from_frame(f)).ok()
    }

    pub fn victim_key(&self) -> SecretKey {
        self.m.victim_key
    }

    /// Victim key page frame and in-page offset, if running.
    pub fn victim_key_location(&self) -> Option<(Frame, usize)> {
        let (p, off) = self.m.victim.as_ref()?.key_location()?;
        Some((self.virt_to_phys(p)?, off))
    }

    pub fn copy_key_location(&self) -> Option<(Frame, usize)> {
        let (p, off) = self.m.copy.as_ref()?.key_location()?;
        Some((self.virt_to_phys(p)?, off))
    }

    pub fn system(&mut self) -> &mut System {
        &mut self.m.sys
    }

    pub fn window(&self, w: WindowId) -> Option<&HammerConfig> {
        self.m.windows.get(w.0).map(|(c, _)| c)
    }

    pub fn trace(&self) -> &[TraceEvent] {
        self.m.sys.alloc.trace()
    }

    pub fn cached_frames(&self) -> Vec<Frame> {
        self.m.sys.alloc.cache().iter().collect()
    }

    pub fn background_frames(&self) -> HashSet<Frame> {
        self.m.background.iter().filter_map(|&p| self.virt_to_phys(p)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dram::{DramGeometry, FlipModel};

    fn machine(bg: usize) -> Machine {
        let g = DramGeometry::new(8, 64).unwrap();
        let dram = Dram::new(g, FlipModel::new(1));
        let cfg = MachineConfig { background: BackgroundConfig { pages: bg, max_churn: 0 }, ..Default::default() };
        Machine::new(dram, cfg, VictimConfig::default(), SecretKey([0x5a; 32]), 9).unwrap()
    }

    #[test]
    fn attacker_cannot_touch_foreign_pages() {
        let mut m = machine(16);
        let mut a = m.attacker();
        let p = a.alloc(1).unwrap()[0];
        let foreign = VPage { pid: VICTIM, vpn: 0 };
        assert!(matches!(a.read(foreign, 0, 1), Err(MachineError::NotOwned(_))));
        a.free(&[p]).unwrap();
        assert!(a.read(p, 0, 1).is_err());
    }

    #[test]
    fn freed_page_hosts_victim_key() {
        let mut m = machine(16);
        let pages = m.attacker().alloc(4).unwrap();
        let target = m.privileged().virt_to_phys(pages[2]);
        let mut a = m.attacker();
        a.free(&pages[2..3]).unwrap();
        a.launch_victim(0).unwrap();
        assert_eq!(m.privileged().victim_key_location().map(|x| x.0), target);
    }

    #[test]
    fn clean_handshakes_succeed() {
        let mut m = machine(16);
        let mut a = m.attacker();
        a.launch_victim(0).unwrap();
        for _ in 0..200 {
            let o = a.connect().unwrap();
            assert_eq!(o.status, crate::victim::HandshakeStatus::Established);
            assert!(o.verified_ok);
        }
    }

    #[test]
    fn clear_on_free_zeroes_frames() {
        let g = DramGeometry::new(8, 64).unwrap();
        let cfg = MachineConfig { clear_on_free: true, ..Default::default() };
        let mut m = Machine::new(Dram::new(g, FlipModel::new(1)), cfg, VictimConfig::default(), SecretKey([1; 32]), 1)
            .unwrap();
        let mut a = m.attacker();
        let p = a.alloc(1).unwrap()[0];
        a.write_bytes(p, 0, &[0xAB; 16]).unwrap();
        a.free(&[p]).unwrap();
        let q = a.alloc(1).unwrap()[0];
        assert_eq!(a.read(q, 0, 16).unwrap(), vec![0; 16]);
    }

    #[test]
    fn latency_oracle_matches_mapping() {
        let mut m = machine(0);
        let mut a = m.attacker();
        let pages = a.alloc(64).unwrap();
        for &x in &pages[..20] {
            for &y in &pages[..20] {
                let lat = a.latency(x, y).unwrap();
                let (dx, dy) = (m.privileged().dram_addr(x).unwrap(), m.privileged().dram_addr(y).unwrap());
                a = m.attacker();
                assert_eq!(lat == Latency::Slow, dx.bank == dy.bank && dx.row != dy.row);
            }
        }
    }
}
