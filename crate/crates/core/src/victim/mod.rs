//! Signing server shaped like a TLS 1.3 handshake. The key context lives in
//! simulated memory, so hammering can corrupt it between loads; a
//! verify-after-sign check then turns a fault into something the client
//! can see.

pub mod config;
pub mod handshake;
pub mod signature;

pub use config::{ChannelMode, Countermeasures, KeyReloadPolicy, KeyStorage, VictimConfig};
pub use handshake::{
    message_log_csv, message_sequence, Direction, HandshakeOutcome, HandshakeStatus, MessageKind, MessageRecord,
};
pub use signature::{transcript, SecretKey, SignatureStub, CTX_BYTES, KEY_BITS, KEY_BYTES, PUBLIC_BYTES};

use rand::Rng;
use thiserror::Error;

use crate::dram::PAGE_BYTES;
use crate::machine::{SysError, System};
use crate::memos::{place_heap_object, Pid, VPage};
use crate::rng::SimRng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VictimError {
    #[error("key context at offset {offset} (+{len} bytes) does not fit in one page")]
    PlacementFailure { offset: usize, len: usize },
    #[error("victim is not loaded")]
    NotLoaded,
    #[error(transparent)]
    System(#[from] SysError),
}

#[derive(Clone, Debug)]
struct Loaded {
    /// Allocation order: key page, then mask page, then second copy.
    pages: Vec<VPage>,
    offset: usize,
    mask: Option<[u8; KEY_BYTES]>,
}

impl Loaded {
    fn mask_page(&self) -> Option<VPage> {
        self.mask.map(|_| self.pages[1])
    }
}

/// One running signing process.
#[derive(Clone, Debug)]
pub struct VictimProcess {
    pid: Pid,
    cfg: VictimConfig,
    key: SecretKey,
    rng: SimRng,
    loaded: Option<Loaded>,
    connections: u64,
    loads: u64,
}

impl VictimProcess {
    /// Allocate the key pages and load the key.
    pub fn start(sys: &mut System, pid: Pid, cfg: VictimConfig, key: SecretKey, rng: SimRng) -> Result<Self, VictimError> {
        let mut v = Self { pid, cfg, key, rng, loaded: None, connections: 0, loads: 0 };
        v.load(sys)?;
        Ok(v)
    }

    pub fn config(&self) -> &VictimConfig {
        &self.cfg
    }

    pub fn pid(&self) -> Pid {
        self.pid
    }

    pub fn loads(&self) -> u64 {
        self.loads
    }

    pub fn connections(&self) -> u64 {
        self.connections
    }

    /// Privileged: the canonical key.
    pub fn key(&self) -> &SecretKey {
        &self.key
    }

    pub fn pages(&self) -> &[VPage] {
        self.loaded.as_ref().map(|l| l.pages.as_slice()).unwrap_or(&[])
    }

    /// Privileged: key page and in-page byte offset of the key context.
    pub fn key_location(&self) -> Option<(VPage, usize)> {
        self.loaded.as_ref().map(|l| (l.pages[0], l.offset))
    }

    fn key_offset(&mut self) -> Result<usize, VictimError> {
        let offset = match self.cfg.key_storage {
            KeyStorage::Heap => {
                let p = place_heap_object(self.cfg.heap_base, self.cfg.attacker_controlled_malloc_size, CTX_BYTES);
                if p.page_index != 0 {
                    return Err(VictimError::PlacementFailure { offset: p.offset + p.page_index * PAGE_BYTES, len: CTX_BYTES });
                }
                p.offset
            }
            KeyStorage::Stack => self.cfg.aslr().place_stack_var(CTX_BYTES, &mut self.rng),
        };
        if offset + CTX_BYTES > PAGE_BYTES {
            return Err(VictimError::PlacementFailure { offset, len: CTX_BYTES });
        }
        Ok(offset)
    }

    fn load(&mut self, sys: &mut System) -> Result<(), VictimError> {
        let offset = self.key_offset()?;
        let cm = self.cfg.countermeasures;
        let n = 1 + cm.key_blinding as usize + cm.dual_sign_constant_time as usize;
        let pages = sys.alloc(self.pid, n)?;
        let mask = cm.key_blinding.then(|| {
            let mut m = [0u8; KEY_BYTES];
            self.rng.fill(&mut m);
            m
        });
        let l = Loaded { pages, offset, mask };
        let resident = self.resident_context(&l);
        sys.write(l.pages[0], offset, &resident)?;
        if let (Some(mp), Some(m)) = (l.mask_page(), mask) {
            sys.write(mp, 0, &m)?;
        }
        if cm.dual_sign_constant_time {
            sys.write(*l.pages.last().expect("non-empty"), offset, &resident)?;
        }
        self.loaded = Some(l);
        self.loads += 1;
        Ok(())
    }

    fn resident_context(&self, l: &Loaded) -> [u8; CTX_BYTES] {
        let mut ctx = self.key.context();
        if let Some(m) = l.mask {
            for (c, k) in ctx.iter_mut().zip(m) {
                *c ^= k;
            }
        }
        ctx
    }

    /// Key context as the signing code sees it, from the copy on `page`.
    fn read_context(&self, sys: &System, l: &Loaded, page: VPage) -> Result<Vec<u8>, VictimError> {
        let mut ctx = sys.read(page, l.offset, CTX_BYTES)?;
        if let Some(mp) = l.mask_page() {
            let m = sys.read(mp, 0, KEY_BYTES)?;
            for (c, k) in ctx.iter_mut().zip(m) {
                *c ^= k;
            }
        }
        Ok(ctx)
    }

    /// Serve one connection.
    pub fn handle_handshake(&mut self, sys: &mut System) -> Result<HandshakeOutcome, VictimError> {
        let l = self.loaded.clone().ok_or(VictimError::NotLoaded)?;
        let conn = self.connections;
        self.connections += 1;
        let t = transcript(conn);
        let base = self.cfg.base_latency;
        let primary = SignatureStub::sign(&self.read_context(sys, &l, l.pages[0])?, &t);
        let mut ok = primary.verify(&self.key, &t);
        let mut sig = primary;
        if self.cfg.countermeasures.dual_sign_constant_time {
            let second = SignatureStub::sign(&self.read_context(sys, &l, *l.pages.last().expect("non-empty"))?, &t);
            if !ok && second.verify(&self.key, &t) {
                sig = second;
                ok = true;
            }
        }
        let established = |signature: SignatureStub, latency: u32, verified_ok: bool| HandshakeOutcome {
            status: HandshakeStatus::Established,
            latency,
            signature: Some(signature),
            verified_ok,
        };
        if ok {
            return Ok(established(sig, base, true));
        }
        if !self.cfg.verify_after_sign {
            return Ok(established(sig, base, false));
        }
        Ok(match self.cfg.channel_mode {
            ChannelMode::ErrorCode => HandshakeOutcome {
                status: if self.cfg.countermeasures.suppress_error_codes {
                    HandshakeStatus::ConnectionDropped
                } else {
                    HandshakeStatus::TerminatedWithError(self.cfg.error_code)
                },
                latency: base,
                signature: None,
                verified_ok: false,
            },
            ChannelMode::SilentRetry => {
                let resident = self.resident_context(&l);
                sys.write(l.pages[0], l.offset, &resident)?;
                let sig = SignatureStub::sign(&self.key.context(), &t);
                established(sig, base + self.cfg.retry_cost, true)
            }
            ChannelMode::ReleaseFaultySignature => established(sig, base, false),
        })
    }

    /// Apply the reload policy after a connection. Returns whether the key
    /// was reloaded.
    pub fn after_connection(&mut self, sys: &mut System) -> Result<bool, VictimError> {
        match self.cfg.key_reload_policy {
            KeyReloadPolicy::PerConnection => {
                self.release_and_restart(sys)?;
                Ok(true)
            }
            KeyReloadPolicy::Persistent => Ok(false),
        }
    }

    /// Wipe the key context and free the pages, last-allocated first, so the
    /// key page is the most recent entry in the page-frame cache.
    pub fn release(&mut self, sys: &mut System) -> Result<(), VictimError> {
        let Some(l) = self.loaded.take() else {
            return Ok(());
        };
        sys.write(l.pages[0], l.offset, &[0; CTX_BYTES])?;
        if let Some(mp) = l.mask_page() {
            sys.write(mp, 0, &[0; KEY_BYTES])?;
        }
        if self.cfg.countermeasures.dual_sign_constant_time {
            sys.write(*l.pages.last().expect("non-empty"), l.offset, &[0; CTX_BYTES])?;
        }
        let rev: Vec<VPage> = l.pages.iter().rev().copied().collect();
        sys.free(self.pid, &rev)?;
        Ok(())
    }

    pub fn release_and_restart(&mut self, sys: &mut System) -> Result<(), VictimError> {
        self.release(sys)?;
        self.load(sys)
    }

    /// Bit `i` of the resident key context (attacker's own copy only).
    pub fn context_bit(&self, sys: &System, i: usize) -> Result<bool, VictimError> {
        let l = self.loaded.as_ref().ok_or(VictimError::NotLoaded)?;
        let b = sys.read(l.pages[0], l.offset + i / 8, 1)?[0];
        Ok((b >> (i % 8)) & 1 == 1)
    }

    /// The whole resident key context (attacker's own copy only).
    pub fn context(&self, sys: &System) -> Result<Vec<u8>, VictimError> {
        let l = self.loaded.as_ref().ok_or(VictimError::NotLoaded)?;
        Ok(sys.read(l.pages[0], l.offset, CTX_BYTES)?)
    }

    pub fn set_context(&mut self, sys: &mut System, ctx: &[u8; CTX_BYTES]) -> Result<(), VictimError> {
        let l = self.loaded.as_ref().ok_or(VictimError::NotLoaded)?;
        sys.write(l.pages[0], l.offset, ctx)?;
        Ok(())
    }

    pub fn set_context_bit(&mut self, sys: &mut System, i: usize, v: bool) -> Result<(), VictimError> {
        let l = self.loaded.as_ref().ok_or(VictimError::NotLoaded)?;
        let mut b = sys.read(l.pages[0], l.offset + i / 8, 1)?[0];
        b = (b & !(1 << (i % 8))) | ((v as u8) << (i % 8));
        sys.write(l.pages[0], l.offset + i / 8, &[b])?;
        Ok(())
    }
}
