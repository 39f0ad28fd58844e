use rand::Rng;
use sha2::{Digest, Sha256};

pub const KEY_BYTES: usize = 32;
pub const KEY_BITS: usize = KEY_BYTES * 8;
pub const PUBLIC_BYTES: usize = 64;
/// In-memory key context: secret scalar followed by the public point.
pub const CTX_BYTES: usize = KEY_BYTES + PUBLIC_BYTES;

/// 256-bit signing secret. Bit `i` is bit `i % 8` of byte `i / 8`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SecretKey(pub [u8; KEY_BYTES]);

impl std::fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SecretKey(..)")
    }
}

impl SecretKey {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut k = [0u8; KEY_BYTES];
        rng.fill(&mut k);
        Self(k)
    }

    pub fn bit(&self, i: usize) -> bool {
        (self.0[i / 8] >> (i % 8)) & 1 == 1
    }

    pub fn set_bit(&mut self, i: usize, v: bool) {
        if v {
            self.0[i / 8] |= 1 << (i % 8);
        } else {
            self.0[i / 8] &= !(1 << (i % 8));
        }
    }

    pub fn public(&self) -> [u8; PUBLIC_BYTES] {
        derive_public(&self.0)
    }

    /// Key context bytes as laid out in memory.
    pub fn context(&self) -> [u8; CTX_BYTES] {
        let mut ctx = [0u8; CTX_BYTES];
        ctx[..KEY_BYTES].copy_from_slice(&self.0);
        ctx[KEY_BYTES..].copy_from_slice(&self.public());
        ctx
    }
}

/// Stand-in for scalar multiplication: a fixed one-way map.
pub fn derive_public(secret: &[u8]) -> [u8; PUBLIC_BYTES] {
    let mut out = [0u8; PUBLIC_BYTES];
    for (i, half) in out.chunks_mut(32).enumerate() {
        let mut h = Sha256::new();
        h.update(b"public");
        h.update([i as u8]);
        h.update(secret);
        half.copy_from_slice(&h.finalize());
    }
    out
}

/// Transcript bytes for connection `n`.
pub fn transcript(n: u64) -> Vec<u8> {
    let mut t = b"ClientHello|KeyShare|ServerHello|KeyShare|".to_vec();
    t.extend_from_slice(&n.to_le_bytes());
    t
}

/// Keyed digest over the key context as read at signing time and the
/// transcript.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SignatureStub(pub [u8; 32]);

impl SignatureStub {
    pub fn sign(ctx_read: &[u8], transcript: &[u8]) -> Self {
        let mut h = Sha256::new();
        h.update(b"sign");
        h.update(ctx_read);
        h.update(transcript);
        Self(h.finalize().into())
    }

    /// Public verification against the certified key.
    pub fn verify(&self, certified: &SecretKey, transcript: &[u8]) -> bool {
        *self == Self::sign(&certified.context(), transcript)
    }
}
