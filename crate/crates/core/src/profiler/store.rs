//! CSV profile store: one record per profiled page.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::classify::PageClass;
use super::profile::{OffsetCounts, PageProfile, ProfileConfig};
use super::ProfilerError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub page: String,
    /// Physical address, filled in privileged runs only.
    pub phys: String,
    pub r: u32,
    pub b: u32,
    pub pattern: String,
    pub iterations: u32,
    pub target_offset: Option<u16>,
    pub delta: u32,
    pub sigma: u32,
    pub class: String,
    /// `offset:zero_to_one:one_to_zero` entries separated by `;`.
    pub counts: String,
}

pub const PROFILE_PATTERN: &str = "ones+zeros";

impl ProfileRecord {
    pub fn from_profile(p: &PageProfile, phys: Option<u64>) -> Self {
        let counts = p
            .counts
            .iter()
            .map(|(o, c)| format!("{o}:{}:{}", c.zero_to_one, c.one_to_zero))
            .collect::<Vec<_>>()
            .join(";");
        Self {
            page: p.page.to_string(),
            phys: phys.map(|a| format!("{a:x}")).unwrap_or_default(),
            r: p.config.r,
            b: p.config.b,
            pattern: PROFILE_PATTERN.into(),
            iterations: p.iterations,
            target_offset: p.target_offset(),
            delta: p.delta(),
            sigma: p.sigma(),
            class: p.class().to_string(),
            counts,
        }
    }

    /// Rebuild the profile, checking the derived columns against the counts.
    pub fn to_profile(&self) -> Result<PageProfile, ProfilerError> {
        let bad = |m: String| ProfilerError::Store(format!("{}: {m}", self.page));
        let page = self.page.parse().map_err(bad)?;
        let mut counts = BTreeMap::new();
        for entry in self.counts.split(';').filter(|e| !e.is_empty()) {
            let f: Vec<&str> = entry.split(':').collect();
            let n = |i: usize| f.get(i).and_then(|v| v.parse::<u32>().ok());
            match (f.len(), f[0].parse::<u16>(), n(1), n(2)) {
                (3, Ok(o), Some(z), Some(w)) => {
                    counts.insert(o, OffsetCounts { zero_to_one: z, one_to_zero: w });
                }
                _ => return Err(bad(format!("bad count entry {entry:?}"))),
            }
        }
        let p = PageProfile { page, config: ProfileConfig { r: self.r, b: self.b }, iterations: self.iterations, counts };
        let class: PageClass = self.class.parse().map_err(bad)?;
        if p.delta() != self.delta || p.sigma() != self.sigma || p.target_offset() != self.target_offset || p.class() != class
        {
            return Err(bad("derived columns disagree with counts".into()));
        }
        Ok(p)
    }
}

pub fn write_profiles<W: Write>(w: W, records: &[ProfileRecord]) -> Result<(), ProfilerError> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(r).map_err(|e| ProfilerError::Store(e.to_string()))?;
    }
    out.flush().map_err(|e| ProfilerError::Store(e.to_string()))
}

pub fn read_profiles<R: Read>(r: R) -> Result<Vec<ProfileRecord>, ProfilerError> {
    csv::Reader::from_reader(r)
        .deserialize()
        .collect::<Result<Vec<ProfileRecord>, _>>()
        .map_err(|e| ProfilerError::Store(e.to_string()))
}
