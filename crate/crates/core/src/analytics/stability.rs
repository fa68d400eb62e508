//! Size, membership similarity and cumulative fluxes of each community
//! relative to its anchor window.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dyncomm::Timelines;
use crate::ingest::UserId;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilitySeries {
    pub community: u32,
    /// Window the series is measured against. Entry `i` of every vector
    /// belongs to window `anchor_window + i`.
    pub anchor_window: usize,
    /// True when the community is empty in window 0 and the series starts at
    /// its first non-empty window instead.
    pub late_anchor: bool,
    pub relative_size: Vec<f64>,
    pub jaccard: Vec<f64>,
    pub influx: Vec<usize>,
    pub outflux: Vec<usize>,
}

/// Series for every community. With `require_first_window`, a community absent
/// from window 0 is an error instead of being anchored late.
pub fn stability_metrics(timelines: &Timelines, require_first_window: bool) -> Result<Vec<StabilitySeries>> {
    let mut out = Vec::new();
    for (&k, mem) in &timelines.members {
        let Some(anchor) = mem.iter().position(|m| !m.is_empty()) else {
            continue;
        };
        if anchor > 0 && require_first_window {
            return Err(Error::EmptyAnchor(k));
        }
        out.push(series(k, &mem[anchor..], anchor));
    }
    Ok(out)
}

fn series(community: u32, mem: &[BTreeSet<UserId>], anchor_window: usize) -> StabilitySeries {
    let base = &mem[0];
    let base_size = base.len() as f64;
    let mut joined: BTreeSet<UserId> = BTreeSet::new();
    let mut left: BTreeSet<UserId> = BTreeSet::new();
    let mut s = StabilitySeries {
        community,
        anchor_window,
        late_anchor: anchor_window > 0,
        relative_size: Vec::with_capacity(mem.len()),
        jaccard: Vec::with_capacity(mem.len()),
        influx: Vec::with_capacity(mem.len()),
        outflux: Vec::with_capacity(mem.len()),
    };
    for (i, cur) in mem.iter().enumerate() {
        if i > 0 {
            let prev = &mem[i - 1];
            joined.extend(cur.difference(prev));
            left.extend(prev.difference(cur));
        }
        let inter = cur.intersection(base).count();
        let union = cur.len() + base.len() - inter;
        s.relative_size.push(cur.len() as f64 / base_size);
        s.jaccard.push(if union == 0 { 1.0 } else { inter as f64 / union as f64 });
        s.influx.push(joined.len());
        s.outflux.push(left.len());
    }
    s
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use std::collections::BTreeMap;

    pub(crate) fn timelines(series: &[(u32, Vec<Vec<UserId>>)]) -> Timelines {
        let n = series.iter().map(|(_, m)| m.len()).max().unwrap_or(0);
        let members: BTreeMap<u32, Vec<BTreeSet<UserId>>> = series
            .iter()
            .map(|(k, m)| (*k, m.iter().map(|w| w.iter().copied().collect()).collect()))
            .collect();
        Timelines { n_windows: n, members, top: Vec::new() }
    }

    #[test]
    fn constant_membership() {
        let t = timelines(&[(0, vec![vec![1, 2, 3]; 4])]);
        let s = &stability_metrics(&t, true).unwrap()[0];
        assert_eq!(s.relative_size, vec![1.0; 4]);
        assert_eq!(s.jaccard, vec![1.0; 4]);
        assert_eq!(s.influx, vec![0; 4]);
        assert_eq!(s.outflux, vec![0; 4]);
    }

    #[test]
    fn one_swap() {
        let t = timelines(&[(0, vec![vec![1, 2], vec![2, 3]])]);
        let s = &stability_metrics(&t, true).unwrap()[0];
        assert_eq!(s.relative_size, vec![1.0, 1.0]);
        assert_eq!(s.jaccard, vec![1.0, 1.0 / 3.0]);
        assert_eq!((s.influx[1], s.outflux[1]), (1, 1));
    }

    #[test]
    fn late_anchor_or_error() {
        let t = timelines(&[(4, vec![vec![], vec![1], vec![1, 2]])]);
        assert!(matches!(stability_metrics(&t, true), Err(Error::EmptyAnchor(4))));
        let s = &stability_metrics(&t, false).unwrap()[0];
        assert!(s.late_anchor);
        assert_eq!(s.anchor_window, 1);
        assert_eq!(s.relative_size, vec![1.0, 2.0]);
    }

    #[test]
    fn rejoining_users_count_once() {
        let t = timelines(&[(0, vec![vec![1, 2], vec![1], vec![1, 2], vec![1]])]);
        let s = &stability_metrics(&t, true).unwrap()[0];
        assert_eq!(s.influx, vec![0, 0, 1, 1]);
        assert_eq!(s.outflux, vec![0, 1, 1, 1]);
    }
}
