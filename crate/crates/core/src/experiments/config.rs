use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::attacker::AttackParams;
use crate::dram::{ClassMix, SynthesisParams};
use crate::machine::MachineConfig;
use crate::profiler::ProfileConfig;
use crate::victim::VictimConfig;

/// One hammering configuration with the area it is profiled over and the
/// flippy-page density and class mix its synthetic module is built for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigPreset {
    pub r: u32,
    pub b: u32,
    pub area_mib: f64,
    pub density_per_mib: f64,
    pub class_mix: ClassMix,
}

impl ConfigPreset {
    fn new(r: u32, b: u32, area_mib: f64, density_per_mib: f64, counts: (u64, u64, u64)) -> Self {
        Self { r, b, area_mib, density_per_mib, class_mix: ClassMix::from_counts(counts.0, counts.1, counts.2) }
    }

    pub fn profile_config(&self) -> ProfileConfig {
        ProfileConfig { r: self.r, b: self.b }
    }

    pub fn label(&self) -> String {
        format!("r{}_b{}", self.r, self.b)
    }
}

/// The four measured hammering configurations.
pub fn reference_presets() -> Vec<ConfigPreset> {
    vec![
        ConfigPreset::new(15, 7, 340.38, 85.44, (685, 2076, 26_324)),
        ConfigPreset::new(15, 5, 296.25, 92.05, (218, 570, 26_482)),
        ConfigPreset::new(15, 4, 46.50, 102.96, (24, 56, 4708)),
        ConfigPreset::new(12, 7, 32.70, 86.45, (33, 128, 2666)),
    ]
}

/// Module used by the online attack: the (15, 7) density over a smaller
/// area, with enough reliable pages to cover every congruence class.
pub fn attack_preset() -> ConfigPreset {
    ConfigPreset { r: 15, b: 7, area_mib: 64.0, density_per_mib: 85.44, class_mix: ClassMix { reliable: 0.6, unstable: 0.15, unusable: 0.25 } }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DramSection {
    pub n_banks: u32,
    /// Rows per bank above the profiled region, for the victim, the copy
    /// and reclaim buffers.
    pub spare_rows: u32,
}

impl Default for DramSection {
    fn default() -> Self {
        Self { n_banks: 8, spare_rows: 256 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfilingSection {
    pub iterations: u32,
    /// Multiplies every preset's area; below 1 for quick runs.
    pub area_scale: f64,
    pub presets: Vec<ConfigPreset>,
}

impl Default for ProfilingSection {
    fn default() -> Self {
        Self { iterations: 200, area_scale: 1.0, presets: reference_presets() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackSection {
    pub preset: ConfigPreset,
    pub params: AttackParams,
}

impl Default for AttackSection {
    fn default() -> Self {
        Self { preset: attack_preset(), params: AttackParams::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AslrSection {
    pub sizes: Vec<usize>,
    pub trials: usize,
}

impl Default for AslrSection {
    fn default() -> Self {
        Self { sizes: vec![16, 32, 64], trials: 2000 }
    }
}

/// Everything a run depends on. Same config, same outputs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub dram: DramSection,
    /// Synthesis knobs; density and class mix come from each preset.
    pub synthesis: SynthesisParams,
    pub profiling: ProfilingSection,
    pub attack: AttackSection,
    pub aslr: AslrSection,
    pub victim: VictimConfig,
    pub machine: MachineConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }
}
