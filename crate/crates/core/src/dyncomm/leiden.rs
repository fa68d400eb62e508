//! Leiden-style optimizer over node-slices: fast local moving, refinement into
//! well-connected subcommunities, and aggregation of the refined partition.
//!
//! Gains are kept unnormalized (multiplied by `2μ`). Moving an isolated node
//! `v` into community `c` changes the quality by
//! `2·w(v, c) − 2·Σ_s (γ / 2m_s)·k_vs·K_cs`.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::graph::SupraGraph;
use super::{DynamicPartition, ResolutionConfig, SliceAssignment};
use crate::multiplex::MultiplexNetwork;
use crate::{Error, Result};

/// Relative gain (in units of `2μ`) a move must beat.
const MOVE_TOLERANCE: f64 = 1e-13;
/// A pass improving quality by less than this ends the optimization.
const CONVERGENCE: f64 = 1e-10;

struct Partition {
    membership: Vec<u32>,
    /// Per-layer community strengths, `slot * n_layers + layer`.
    comm_k: Vec<f64>,
    size: Vec<usize>,
    free: Vec<u32>,
    n_layers: usize,
}

impl Partition {
    /// `membership` ids must be below `g.n()`.
    fn new(g: &SupraGraph, membership: Vec<u32>) -> Self {
        let n = g.n();
        let n_layers = g.n_layers();
        let mut comm_k = vec![0.0; n * n_layers];
        let mut size = vec![0usize; n];
        for v in 0..n {
            let c = membership[v] as usize;
            size[c] += 1;
            for &(s, k) in &g.strength[v] {
                comm_k[c * n_layers + s as usize] += k;
            }
        }
        let free = (0..n as u32).rev().filter(|&c| size[c as usize] == 0).collect();
        Partition {
            membership,
            comm_k,
            size,
            free,
            n_layers,
        }
    }

    fn null(&self, g: &SupraGraph, v: usize, c: u32) -> f64 {
        let row = c as usize * self.n_layers;
        g.strength[v]
            .iter()
            .map(|&(s, k)| g.layer_scale[s as usize] * k * self.comm_k[row + s as usize])
            .sum()
    }

    fn remove(&mut self, g: &SupraGraph, v: usize) {
        let c = self.membership[v] as usize;
        self.size[c] -= 1;
        for &(s, k) in &g.strength[v] {
            self.comm_k[c * self.n_layers + s as usize] -= k;
        }
    }

    fn insert(&mut self, g: &SupraGraph, v: usize, c: u32) {
        self.membership[v] = c;
        self.size[c as usize] += 1;
        for &(s, k) in &g.strength[v] {
            self.comm_k[c as usize * self.n_layers + s as usize] += k;
        }
    }
}

/// Queue-based local moving. Returns whether any node changed community.
fn move_nodes_fast(g: &SupraGraph, part: &mut Partition, rng: &mut ChaCha8Rng) -> bool {
    let n = g.n();
    let tol = MOVE_TOLERANCE * g.total.max(f64::MIN_POSITIVE);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut queue: VecDeque<usize> = order.into();
    let mut queued = vec![true; n];
    let mut neigh_w = vec![0.0f64; n];
    let mut marked = vec![false; n];
    let mut neigh: Vec<u32> = Vec::new();
    let mut changed = false;

    while let Some(v) = queue.pop_front() {
        queued[v] = false;
        let current = part.membership[v];
        for (t, w) in g.neighbors(v) {
            let c = part.membership[t as usize];
            if !marked[c as usize] {
                marked[c as usize] = true;
                neigh.push(c);
            }
            neigh_w[c as usize] += w;
        }
        part.remove(g, v);
        let gain = |part: &Partition, c: u32| 2.0 * neigh_w[c as usize] - 2.0 * part.null(g, v, c);
        let mut best = current;
        let mut best_gain = gain(part, current);
        for &c in &neigh {
            if c != current {
                let gc = gain(part, c);
                if gc > best_gain + tol {
                    best = c;
                    best_gain = gc;
                }
            }
        }
        if part.size[current as usize] > 0 && 0.0 > best_gain + tol {
            best = *part.free.last().expect("a node that leaves a shared community frees no slot, so one is spare");
        }
        if part.free.last() == Some(&best) {
            part.free.pop();
        }
        part.insert(g, v, best);
        if part.size[current as usize] == 0 {
            part.free.push(current);
        }
        if best != current {
            changed = true;
            for (t, _) in g.neighbors(v) {
                let t = t as usize;
                if !queued[t] && part.membership[t] != best {
                    queued[t] = true;
                    queue.push_back(t);
                }
            }
        }
        for &c in &neigh {
            neigh_w[c as usize] = 0.0;
            marked[c as usize] = false;
        }
        neigh.clear();
    }
    changed
}

/// Splits every community of `part` into well-connected subcommunities by
/// greedy merging of singletons. Returns compact refined ids and their count.
fn refine(g: &SupraGraph, part: &Partition, rng: &mut ChaCha8Rng) -> (Vec<u32>, usize) {
    let n = g.n();
    let layers = part.n_layers;
    let mut refined: Vec<u32> = (0..n as u32).collect();
    let mut ref_part = Partition::new(g, refined.clone());
    let mut external = vec![0.0f64; n];
    for v in 0..n {
        let c = part.membership[v];
        external[v] = g
            .neighbors(v)
            .filter(|&(t, _)| part.membership[t as usize] == c)
            .map(|(_, w)| w)
            .sum();
    }
    // Σ_s scale_s a_s (K_Cs − a_s) for a sub-block with strengths `a` inside parent `c`
    let cross_null = |a: &dyn Fn(usize) -> f64, c: u32| -> f64 {
        (0..layers)
            .map(|s| {
                let x = a(s);
                g.layer_scale[s] * x * (part.comm_k[c as usize * layers + s] - x)
            })
            .sum()
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut neigh_w = vec![0.0f64; n];
    let mut marked = vec![false; n];
    let mut neigh: Vec<u32> = Vec::new();
    let mut dense_v = vec![0.0f64; layers];
    for v in order {
        let r_v = refined[v];
        if ref_part.size[r_v as usize] != 1 {
            continue;
        }
        let c = part.membership[v];
        for &(s, k) in &g.strength[v] {
            dense_v[s as usize] = k;
        }
        let v_connected = external[v] >= cross_null(&|s| dense_v[s], c);
        if v_connected {
            for (t, w) in g.neighbors(v) {
                let t = t as usize;
                if part.membership[t] != c {
                    continue;
                }
                let r = refined[t];
                if r == r_v {
                    continue;
                }
                if !marked[r as usize] {
                    marked[r as usize] = true;
                    neigh.push(r);
                }
                neigh_w[r as usize] += w;
            }
            let mut best: Option<(u32, f64)> = None;
            for &r in &neigh {
                let row = r as usize * layers;
                let connected = external[r as usize]
                    >= cross_null(&|s| ref_part.comm_k[row + s], c);
                if !connected {
                    continue;
                }
                let gain = 2.0 * neigh_w[r as usize] - 2.0 * ref_part.null(g, v, r);
                if gain >= 0.0 && best.is_none_or(|(_, b)| gain > b) {
                    best = Some((r, gain));
                }
            }
            if let Some((r, _)) = best {
                ref_part.remove(g, v);
                ref_part.insert(g, v, r);
                refined[v] = r;
                external[r as usize] += external[v] - 2.0 * neigh_w[r as usize];
            }
            for &r in &neigh {
                neigh_w[r as usize] = 0.0;
                marked[r as usize] = false;
            }
            neigh.clear();
        }
        for &(s, _) in &g.strength[v] {
            dense_v[s as usize] = 0.0;
        }
    }
    compact(&refined)
}

/// Renumbers ids to `0..k` in order of first appearance.
fn compact(membership: &[u32]) -> (Vec<u32>, usize) {
    let mut map: Vec<u32> = vec![u32::MAX; membership.iter().map(|&c| c as usize + 1).max().unwrap_or(0)];
    let mut next = 0u32;
    let out = membership
        .iter()
        .map(|&c| {
            if map[c as usize] == u32::MAX {
                map[c as usize] = next;
                next += 1;
            }
            map[c as usize]
        })
        .collect();
    (out, next as usize)
}

/// One Leiden iteration on `base` starting from `start`. Returns the new base
/// membership.
fn leiden_iteration(base: &SupraGraph, start: &[u32], rng: &mut ChaCha8Rng) -> Vec<u32> {
    let (start, _) = compact(start);
    let mut to_level: Vec<u32> = (0..base.n() as u32).collect();
    let mut level: Option<SupraGraph> = None;
    let mut part = Partition::new(base, start);
    loop {
        let g = level.as_ref().unwrap_or(base);
        move_nodes_fast(g, &mut part, rng);
        let (coarse, n_comm) = compact(&part.membership);
        if n_comm == g.n() {
            break;
        }
        let (mut refined, mut n_refined) = refine(g, &part, rng);
        if n_refined == g.n() {
            refined = coarse.clone();
            n_refined = n_comm;
        }
        let mut next_start = vec![0u32; n_refined];
        for v in 0..g.n() {
            next_start[refined[v] as usize] = coarse[v];
        }
        for x in to_level.iter_mut() {
            *x = refined[*x as usize];
        }
        let agg = g.aggregate(&refined, n_refined);
        part = Partition::new(&agg, next_start);
        level = Some(agg);
    }
    to_level.iter().map(|&x| part.membership[x as usize]).collect()
}

/// Gives each connected component of a community its own id.
fn split_disconnected(g: &SupraGraph, membership: &mut [u32]) -> bool {
    let n = g.n();
    let mut next = membership.iter().map(|&c| c + 1).max().unwrap_or(0);
    let mut seen_comm = vec![false; next as usize];
    let mut visited = vec![false; n];
    let mut stack = Vec::new();
    let mut changed = false;
    for s in 0..n {
        if visited[s] {
            continue;
        }
        let c = membership[s];
        let label = if seen_comm[c as usize] {
            changed = true;
            next += 1;
            next - 1
        } else {
            seen_comm[c as usize] = true;
            c
        };
        visited[s] = true;
        stack.push(s);
        while let Some(v) = stack.pop() {
            membership[v] = label;
            for (t, _) in g.neighbors(v) {
                let t = t as usize;
                if !visited[t] && membership[t] == c {
                    visited[t] = true;
                    stack.push(t);
                }
            }
        }
    }
    changed
}

/// Optimizes multislice modularity over the node-slices of `network`.
///
/// Networks of at most eight node-slices are solved exactly. Otherwise the
/// result is a local optimum under single node-slice moves, every
/// community is connected through intra-layer edges and couplings, and the
/// recorded pass qualities never decrease. Output is a pure function of
/// `(network, config)`.
pub fn leiden_partition(network: &MultiplexNetwork, config: &ResolutionConfig) -> Result<DynamicPartition> {
    if !(config.gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be > 0, got {}", config.gamma)));
    }
    if config.max_passes == 0 {
        return Err(Error::InvalidParameter("max_passes must be >= 1".into()));
    }
    if (config.omega - network.omega).abs() > 0.0 {
        return Err(Error::InvalidParameter(format!(
            "config omega {} differs from the network's coupling strength {}",
            config.omega, network.omega
        )));
    }
    if network.n_slices() == 0 {
        return Err(Error::Empty("network"));
    }
    let g = SupraGraph::from_multiplex(network, config.gamma);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut membership: Vec<u32> = (0..g.n() as u32).collect();
    let mut q = g.quality(&membership);
    let mut passes = vec![q];

    for _ in 0..config.max_passes {
        let candidate = leiden_iteration(&g, &membership, &mut rng);
        let q_new = g.quality(&candidate);
        if q_new < q {
            break;
        }
        membership = candidate;
        let gain = q_new - q;
        q = q_new;
        passes.push(q);
        if gain < CONVERGENCE {
            break;
        }
    }

    // Slice-level polish: aggregate moves can leave single-slice improvements
    // and local moves can disconnect a community.
    loop {
        let mut part = Partition::new(&g, compact(&membership).0);
        let moved = move_nodes_fast(&g, &mut part, &mut rng);
        membership = part.membership;
        let split = split_disconnected(&g, &mut membership);
        let q_new = g.quality(&membership);
        if moved || split {
            q = q.max(q_new);
            passes.push(q_new);
        }
        if !(moved || split) {
            break;
        }
    }

    if g.n() <= EXACT_LIMIT {
        if let Some((best, q_best)) = exhaustive_optimum(&g) {
            if q_best > q + 1e-12 {
                membership = best;
                passes.push(q_best);
            }
        }
    }

    let membership = relabel_by_size(&membership);
    let quality = g.quality(&membership);
    let n_communities = membership.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
    let assignments = network
        .slices()
        .zip(&membership)
        .map(|((layer, user), &community)| SliceAssignment {
            window: network.window_of(layer),
            user,
            community,
        })
        .collect();
    Ok(DynamicPartition {
        assignments,
        n_communities,
        quality,
        pass_qualities: passes,
    })
}

/// Supra-graphs up to this many node-slices are also solved by enumeration.
const EXACT_LIMIT: usize = 8;

/// Best partition over all set partitions, enumerated as restricted growth
/// strings; the first maximum wins.
fn exhaustive_optimum(g: &SupraGraph) -> Option<(Vec<u32>, f64)> {
    fn rec(g: &SupraGraph, cur: &mut Vec<u32>, max: u32, best: &mut Option<(Vec<u32>, f64)>) {
        if cur.len() == g.n() {
            let q = g.quality(cur);
            if best.as_ref().is_none_or(|(_, b)| q > *b) {
                *best = Some((cur.clone(), q));
            }
            return;
        }
        for c in 0..=max {
            cur.push(c);
            rec(g, cur, if c == max { max + 1 } else { max }, best);
            cur.pop();
        }
    }
    let mut best = None;
    rec(g, &mut Vec::with_capacity(g.n()), 0, &mut best);
    best
}

/// Ids by descending slice count, ties by first slice.
fn relabel_by_size(membership: &[u32]) -> Vec<u32> {
    let (compacted, k) = compact(membership);
    let mut size = vec![0usize; k];
    for &c in &compacted {
        size[c as usize] += 1;
    }
    // compact() numbers by first appearance, so the id itself is the tie-break
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| size[b].cmp(&size[a]).then(a.cmp(&b)));
    let mut rank = vec![0u32; k];
    for (r, &c) in order.iter().enumerate() {
        rank[c] = r as u32;
    }
    compacted.iter().map(|&c| rank[c as usize]).collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::multiplex::assemble_multiplex;
    use crate::simnet::{Edge, LayerGraph};

    pub(crate) fn clique_layer(window: usize, groups: &[&[u32]], w: f64) -> LayerGraph {
        let mut edges = Vec::new();
        for g in groups {
            for (i, &u) in g.iter().enumerate() {
                for &v in &g[i + 1..] {
                    edges.push(Edge { u, v, weight: w });
                }
            }
        }
        LayerGraph::from_edges(window, edges)
    }

    #[test]
    fn two_cliques_over_two_layers() {
        let a: &[u32] = &[0, 1, 2, 3, 4];
        let b: &[u32] = &[5, 6, 7, 8, 9];
        let layers = vec![clique_layer(0, &[a, b], 1.0), clique_layer(1, &[a, b], 1.0)];
        let net = assemble_multiplex(layers, 1.0).unwrap();
        let p = leiden_partition(&net, &ResolutionConfig::default()).unwrap();
        assert_eq!(p.n_communities, 2);
        for w in 0..2 {
            for &u in a {
                assert_eq!(p.get(u, w), p.get(0, 0));
            }
            for &u in b {
                assert_eq!(p.get(u, w), p.get(5, 0));
            }
        }
        assert_ne!(p.get(0, 0), p.get(5, 0));
    }

    #[test]
    fn passes_never_decrease() {
        let layers = vec![
            clique_layer(0, &[&[0, 1, 2, 3], &[3, 4, 5, 6], &[7, 8, 9]], 0.5),
            clique_layer(1, &[&[0, 1, 2], &[2, 4, 5, 6, 7], &[8, 9, 10]], 0.7),
        ];
        let net = assemble_multiplex(layers, 0.3).unwrap();
        let p = leiden_partition(&net, &ResolutionConfig { omega: 0.3, ..Default::default() }).unwrap();
        for w in p.pass_qualities.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "{:?}", p.pass_qualities);
        }
        assert!((p.quality - p.pass_qualities.last().copied().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn rejects_mismatched_omega_and_bad_gamma() {
        let net = assemble_multiplex(vec![clique_layer(0, &[&[0, 1, 2]], 1.0)], 1.0).unwrap();
        let cfg = ResolutionConfig { omega: 0.5, ..Default::default() };
        assert!(leiden_partition(&net, &cfg).is_err());
        let cfg = ResolutionConfig { gamma: 0.0, ..Default::default() };
        assert!(leiden_partition(&net, &cfg).is_err());
        let cfg = ResolutionConfig { max_passes: 0, ..Default::default() };
        assert!(leiden_partition(&net, &cfg).is_err());
    }

    #[test]
    fn split_separates_components() {
        let layers = vec![clique_layer(0, &[&[0, 1], &[2, 3]], 1.0)];
        let net = assemble_multiplex(layers, 1.0).unwrap();
        let g = SupraGraph::from_multiplex(&net, 1.0);
        let mut m = vec![0, 0, 0, 0];
        assert!(split_disconnected(&g, &mut m));
        assert_eq!(m[0], m[1]);
        assert_eq!(m[2], m[3]);
        assert_ne!(m[0], m[2]);
        assert!(!split_disconnected(&g, &mut m));
    }

    #[test]
    fn relabel_orders_by_size() {
        assert_eq!(relabel_by_size(&[7, 3, 3, 9, 3, 9]), vec![2, 0, 0, 1, 0, 1]);
    }
}
