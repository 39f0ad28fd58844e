use serde::{Deserialize, Serialize};

use crate::memos::AslrPolicy;

/// How a signing fault becomes visible to the client.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelMode {
    /// Abort the handshake with a fixed error code.
    ErrorCode,
    /// Reload the key and re-sign; the retry shows up as latency.
    SilentRetry,
    /// Send the faulty signature anyway; the client's verification fails.
    ReleaseFaultySignature,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Countermeasures {
    /// Replace error codes with a generic connection drop.
    pub suppress_error_codes: bool,
    /// Sign with two key copies and send the first one that verifies, in
    /// constant time.
    pub dual_sign_constant_time: bool,
    /// Keep the secret masked in memory; the mask lives on another page and
    /// is refreshed on every load.
    pub key_blinding: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyReloadPolicy {
    /// Release and reload the key around every handshake.
    PerConnection,
    /// Load once, keep the same pages until stopped.
    Persistent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyStorage {
    /// Key context allocated on the heap after an attacker-sized buffer.
    Heap,
    /// Key context on the stack at an ASLR-randomised offset.
    Stack,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct VictimConfig {
    pub verify_after_sign: bool,
    pub channel_mode: ChannelMode,
    pub countermeasures: Countermeasures,
    /// Size of the attacker-influenced allocation made before the key.
    pub attacker_controlled_malloc_size: usize,
    pub key_reload_policy: KeyReloadPolicy,
    pub key_storage: KeyStorage,
    /// First free heap byte in the heap's first page.
    pub heap_base: usize,
    pub aslr_enabled: bool,
    /// In-page stack offset; low 4 bits survive ASLR.
    pub stack_base: usize,
    /// Latency of a clean handshake, in ticks.
    pub base_latency: u32,
    /// Extra latency of a silent re-sign, in ticks.
    pub retry_cost: u32,
    pub error_code: u16,
}

impl Default for VictimConfig {
    fn default() -> Self {
        Self {
            verify_after_sign: true,
            channel_mode: ChannelMode::ErrorCode,
            countermeasures: Countermeasures::default(),
            attacker_controlled_malloc_size: 0,
            key_reload_policy: KeyReloadPolicy::PerConnection,
            key_storage: KeyStorage::Heap,
            heap_base: 0x10,
            aslr_enabled: true,
            stack_base: 0x8,
            base_latency: 1,
            retry_cost: 1,
            error_code: 0x0133,
        }
    }
}

impl VictimConfig {
    /// The attacker's own copy: same binary, no countermeasures.
    pub fn unpatched(&self) -> Self {
        Self { countermeasures: Countermeasures::default(), verify_after_sign: true, ..*self }
    }

    pub fn aslr(&self) -> AslrPolicy {
        AslrPolicy { enabled: self.aslr_enabled, base: self.stack_base }
    }
}
