//! Bank and adjacent-row discovery from the attacker's side, using only the
//! row-conflict oracle and row numbers.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use super::ProfilerError;
use crate::machine::{AttackWindow, AttackerView, Latency, WindowBank};
use crate::memos::VPage;

const PROBES_PER_GROUP: usize = 3;

/// Group pages by bank. A page joins the first group holding a page it
/// conflicts with; groups that conflict with each other are merged at the
/// end, which catches pages that first met their bank only in their own row.
/// Groups are ordered by their first page in `pages`.
pub fn find_same_bank_chunks(view: &mut AttackerView<'_>, pages: &[VPage]) -> Result<Vec<Vec<VPage>>, ProfilerError> {
    let mut groups: Vec<Vec<VPage>> = Vec::new();
    'page: for &p in pages {
        for g in groups.iter_mut() {
            for &q in g.iter().take(PROBES_PER_GROUP) {
                if view.latency(p, q)? == Latency::Slow {
                    g.push(p);
                    continue 'page;
                }
            }
        }
        groups.push(vec![p]);
    }
    let mut merged: Vec<Vec<VPage>> = Vec::new();
    'group: for g in groups {
        for m in merged.iter_mut() {
            for &a in g.iter().take(PROBES_PER_GROUP) {
                for &b in m.iter().take(PROBES_PER_GROUP) {
                    if view.latency(a, b)? == Latency::Slow {
                        m.extend(g);
                        continue 'group;
                    }
                }
            }
        }
        merged.push(g);
    }
    let order: BTreeMap<VPage, usize> = pages.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    for m in merged.iter_mut() {
        m.sort_by_key(|p| order[p]);
    }
    merged.sort_by_key(|m| order[&m[0]]);
    Ok(merged)
}

/// Maximal runs of consecutive row numbers.
pub fn find_adjacent_rows(rows: &[u32]) -> Vec<RangeInclusive<u32>> {
    let mut sorted = rows.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut runs = Vec::new();
    let mut iter = sorted.into_iter();
    let Some(first) = iter.next() else {
        return runs;
    };
    let (mut lo, mut hi) = (first, first);
    for r in iter {
        if r == hi + 1 {
            hi = r;
        } else {
            runs.push(lo..=hi);
            lo = r;
            hi = r;
        }
    }
    runs.push(lo..=hi);
    runs
}

/// Rows of one bank group for which both page halves are held.
pub fn full_rows(view: &mut AttackerView<'_>, group: &[VPage]) -> Result<BTreeMap<u32, [VPage; 2]>, ProfilerError> {
    let mut partial: BTreeMap<u32, Vec<VPage>> = BTreeMap::new();
    for &p in group {
        partial.entry(view.row_index(p)?).or_default().push(p);
    }
    Ok(partial.into_iter().filter(|(_, v)| v.len() == 2).map(|(r, v)| (r, [v[0], v[1]])).collect())
}

/// Alternating windows with `r` attacker rows over consecutive groups of
/// `b` banks. Each group of banks is cut to the rows all of them hold, and
/// each adjacent run is tiled from its start; leftovers are dropped.
/// Windows are ordered by starting row, then bank group.
pub fn build_windows(
    view: &mut AttackerView<'_>,
    groups: &[Vec<VPage>],
    r: u32,
    b: u32,
) -> Result<Vec<AttackWindow>, ProfilerError> {
    if r < 2 || b == 0 {
        return Err(ProfilerError::BadConfig(format!("need r >= 2 and b >= 1, got ({r}, {b})")));
    }
    if groups.len() < b as usize {
        return Err(ProfilerError::TooFewBanks { found: groups.len(), needed: b as usize });
    }
    let rows: Vec<BTreeMap<u32, [VPage; 2]>> =
        groups.iter().map(|g| full_rows(view, g)).collect::<Result<_, _>>()?;
    let height = 2 * r - 1;
    let mut out = Vec::new();
    for (gi, chunk) in rows.chunks_exact(b as usize).enumerate() {
        let common: Vec<u32> =
            chunk[0].keys().copied().filter(|row| chunk.iter().all(|m| m.contains_key(row))).collect();
        for run in find_adjacent_rows(&common) {
            let mut start = *run.start();
            while start + height - 1 <= *run.end() {
                let banks = chunk
                    .iter()
                    .map(|m| WindowBank {
                        attacker_rows: (0..r).map(|i| m[&(start + 2 * i)]).collect(),
                        victim_rows: (0..r - 1).map(|i| m[&(start + 2 * i + 1)]).collect(),
                    })
                    .collect();
                out.push((start, gi, AttackWindow { banks }));
                start += height;
            }
        }
    }
    out.sort_by_key(|(s, g, _)| (*s, *g));
    Ok(out.into_iter().map(|(_, _, w)| w).collect())
}
