//! Per-window user similarity layers.
//!
//! Each active user becomes a TF-IDF vector over the original tweets it
//! retweeted in the window (`idf = ln(|U| / df)`, no smoothing), users are
//! linked by the cosine of their vectors, and the resulting layer is pruned
//! to its disparity-filter backbone.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;

use crate::ingest::{RetweetEvent, UserId};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub u: UserId,
    pub v: UserId,
    pub weight: f64,
}

/// Weighted undirected graph of one window. Each pair is stored once with
/// `u < v`; edges are sorted by `(u, v)` and `nodes` ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerGraph {
    pub window_index: usize,
    pub nodes: Vec<UserId>,
    pub edges: Vec<Edge>,
}

impl LayerGraph {
    /// Builds a layer whose node set is exactly the edge endpoints.
    pub fn from_edges(window_index: usize, mut edges: Vec<Edge>) -> Self {
        for e in &mut edges {
            if e.u > e.v {
                std::mem::swap(&mut e.u, &mut e.v);
            }
        }
        edges.sort_by_key(|e| (e.u, e.v));
        let nodes: BTreeSet<UserId> = edges.iter().flat_map(|e| [e.u, e.v]).collect();
        LayerGraph {
            window_index,
            nodes: nodes.into_iter().collect(),
            edges,
        }
    }

    pub fn position(&self, user: UserId) -> Option<usize> {
        self.nodes.binary_search(&user).ok()
    }

    pub fn contains(&self, user: UserId) -> bool {
        self.position(user).is_some()
    }

    /// Local adjacency lists indexed by node position.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            let (a, b) = (self.pos(e.u), self.pos(e.v));
            adj[a].push((b, e.weight));
            adj[b].push((a, e.weight));
        }
        adj
    }

    /// `(degree, strength)` per node position.
    pub fn degree_strength(&self) -> (Vec<usize>, Vec<f64>) {
        let mut degree = vec![0usize; self.nodes.len()];
        let mut strength = vec![0.0f64; self.nodes.len()];
        for e in &self.edges {
            for x in [self.pos(e.u), self.pos(e.v)] {
                degree[x] += 1;
                strength[x] += e.weight;
            }
        }
        (degree, strength)
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    fn pos(&self, user: UserId) -> usize {
        self.position(user).expect("edge endpoint is a layer node")
    }
}

/// Sparse TF-IDF vector of one user in one window. `entries` are
/// `(term, weight)` sorted by term index into [`WindowVectors::terms`].
#[derive(Clone, Debug, PartialEq)]
pub struct UserVector {
    pub user: UserId,
    pub entries: Vec<(u32, f64)>,
    pub norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindowVectors {
    /// Original tweet ids, indexed by term.
    pub terms: Vec<String>,
    /// One vector per active user, ascending by user.
    pub vectors: Vec<UserVector>,
}

pub fn build_user_vectors<'a>(events: impl IntoIterator<Item = (UserId, &'a RetweetEvent)>) -> WindowVectors {
    let mut term_index: HashMap<&'a str, u32> = HashMap::new();
    let mut terms: Vec<String> = Vec::new();
    let mut tf: BTreeMap<UserId, BTreeMap<u32, u32>> = BTreeMap::new();
    for (user, event) in events {
        let t = *term_index
            .entry(event.original_tweet_id.as_str())
            .or_insert_with(|| {
                terms.push(event.original_tweet_id.clone());
                (terms.len() - 1) as u32
            });
        *tf.entry(user).or_default().entry(t).or_default() += 1;
    }
    let mut df = vec![0u32; terms.len()];
    for counts in tf.values() {
        for &t in counts.keys() {
            df[t as usize] += 1;
        }
    }
    let n_users = tf.len() as f64;
    let idf: Vec<f64> = df.iter().map(|&d| (n_users / f64::from(d)).ln()).collect();
    let vectors = tf
        .into_iter()
        .map(|(user, counts)| {
            let entries: Vec<(u32, f64)> = counts
                .into_iter()
                .map(|(t, c)| (t, f64::from(c) * idf[t as usize]))
                .collect();
            let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
            UserVector { user, entries, norm }
        })
        .collect();
    WindowVectors { terms, vectors }
}

/// Cosine-similarity layer. Pairs are linked only through terms with positive
/// weight in both vectors; every active user is a node.
pub fn build_similarity_layer(vectors: &WindowVectors, window_index: usize) -> LayerGraph {
    let vs = &vectors.vectors;
    let mut postings: Vec<Vec<(usize, f64)>> = vec![Vec::new(); vectors.terms.len()];
    for (i, v) in vs.iter().enumerate() {
        for &(t, w) in &v.entries {
            if w > 0.0 {
                postings[t as usize].push((i, w));
            }
        }
    }
    let rows: Vec<Vec<Edge>> = (0..vs.len())
        .into_par_iter()
        .map_init(
            || (vec![0.0f64; vs.len()], Vec::<usize>::new()),
            |(acc, touched), i| {
                let a = &vs[i];
                for &(t, wa) in &a.entries {
                    if wa <= 0.0 {
                        continue;
                    }
                    for &(j, wb) in &postings[t as usize] {
                        if j > i {
                            if acc[j] == 0.0 {
                                touched.push(j);
                            }
                            acc[j] += wa * wb;
                        }
                    }
                }
                touched.sort_unstable();
                let mut row = Vec::with_capacity(touched.len());
                for &j in touched.iter() {
                    let dot = acc[j];
                    acc[j] = 0.0;
                    let cos = (dot / (a.norm * vs[j].norm)).min(1.0);
                    if cos > 0.0 {
                        row.push(Edge {
                            u: a.user,
                            v: vs[j].user,
                            weight: cos,
                        });
                    }
                }
                touched.clear();
                row
            },
        )
        .collect();
    LayerGraph {
        window_index,
        nodes: vs.iter().map(|v| v.user).collect(),
        edges: rows.into_iter().flatten().collect(),
    }
}

/// Disparity-filter significance of an edge seen from an endpoint of degree
/// `k` and strength `s`.
pub fn edge_significance(weight: f64, strength: f64, degree: usize) -> f64 {
    (1.0 - weight / strength).max(0.0).powi(degree as i32 - 1)
}

/// Keeps an edge when its significance from some endpoint of degree >= 2 is
/// below `alpha`, or when both endpoints have degree 1. Nodes left without
/// edges are dropped.
pub fn disparity_backbone(graph: &LayerGraph, alpha: f64) -> Result<LayerGraph> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be in (0, 1), got {alpha}"
        )));
    }
    let (degree, strength) = graph.degree_strength();
    let significant = |x: usize, w: f64| degree[x] >= 2 && edge_significance(w, strength[x], degree[x]) < alpha;
    let kept = graph
        .edges
        .iter()
        .filter(|e| {
            let (a, b) = (graph.pos(e.u), graph.pos(e.v));
            (degree[a] == 1 && degree[b] == 1) || significant(a, e.weight) || significant(b, e.weight)
        })
        .copied()
        .collect();
    Ok(LayerGraph::from_edges(graph.window_index, kept))
}

/// Sums pair weights over all layers into one static graph over the union of
/// nodes. Weights may exceed 1. Carries the first layer's window index.
pub fn aggregate_static_network(layers: &[LayerGraph]) -> Result<LayerGraph> {
    let first = layers.first().ok_or(Error::NoLayers)?;
    let mut weights: BTreeMap<(UserId, UserId), f64> = BTreeMap::new();
    let mut nodes: BTreeSet<UserId> = BTreeSet::new();
    for layer in layers {
        nodes.extend(layer.nodes.iter().copied());
        for e in &layer.edges {
            *weights.entry((e.u, e.v)).or_default() += e.weight;
        }
    }
    Ok(LayerGraph {
        window_index: first.window_index,
        nodes: nodes.into_iter().collect(),
        edges: weights
            .into_iter()
            .map(|((u, v), weight)| Edge { u, v, weight })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn events(rows: &[(UserId, &str)]) -> Vec<(UserId, RetweetEvent)> {
        rows.iter()
            .map(|&(u, t)| (u, RetweetEvent::new(format!("u{u}"), "", t, 0, Vec::<String>::new())))
            .collect()
    }

    fn vectors(rows: &[(UserId, &str)]) -> WindowVectors {
        let ev = events(rows);
        build_user_vectors(ev.iter().map(|(u, e)| (*u, e)))
    }

    fn weight_of(v: &UserVector, terms: &[String], term: &str) -> f64 {
        let t = terms.iter().position(|x| x == term).unwrap() as u32;
        v.entries.iter().find(|e| e.0 == t).map(|e| e.1).unwrap_or(0.0)
    }

    #[test]
    fn tweet_retweeted_by_everyone_has_zero_idf() {
        let wv = vectors(&[(0, "viral"), (1, "viral"), (2, "viral"), (2, "rare")]);
        for v in &wv.vectors {
            assert_eq!(weight_of(v, &wv.terms, "viral"), 0.0);
        }
        assert_eq!(wv.vectors[0].norm, 0.0);
        let layer = build_similarity_layer(&wv, 0);
        assert!(layer.edges.is_empty());
        assert_eq!(layer.nodes, vec![0, 1, 2]);
    }

    #[test]
    fn two_user_idf_by_hand() {
        let wv = vectors(&[(0, "a"), (0, "b"), (1, "b")]);
        assert_abs_diff_eq!(weight_of(&wv.vectors[0], &wv.terms, "a"), 2f64.ln(), epsilon = 1e-15);
        assert_eq!(weight_of(&wv.vectors[0], &wv.terms, "b"), 0.0);
        assert_eq!(weight_of(&wv.vectors[1], &wv.terms, "b"), 0.0);
    }

    #[test]
    fn repeated_retweets_raise_tf() {
        let wv = vectors(&[(0, "a"), (0, "a"), (1, "b")]);
        assert_abs_diff_eq!(weight_of(&wv.vectors[0], &wv.terms, "a"), 2.0 * 2f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn norms_match_entries() {
        let wv = vectors(&[(0, "a"), (0, "b"), (1, "b"), (1, "c"), (2, "c"), (2, "c"), (3, "d")]);
        for v in &wv.vectors {
            let n = v.entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
            assert_abs_diff_eq!(v.norm, n, epsilon = 1e-9);
            assert!(v.entries.iter().all(|e| e.1 >= 0.0));
        }
    }

    #[test]
    fn viral_weight_is_non_increasing_in_df() {
        // tf fixed at 1, |U| fixed at 10, df grows from 1 to 10
        let mut last = f64::INFINITY;
        for df in 1..=10u32 {
            let mut rows: Vec<(UserId, String)> = (0..10).map(|u| (u, format!("own{u}"))).collect();
            for u in 0..df {
                rows.push((u, "t".to_string()));
            }
            let rows: Vec<(UserId, &str)> = rows.iter().map(|(u, s)| (*u, s.as_str())).collect();
            let wv = vectors(&rows);
            let w = weight_of(&wv.vectors[0], &wv.terms, "t");
            assert!(w <= last);
            last = w;
        }
        assert_eq!(last, 0.0);
    }

    #[test]
    fn identical_vectors_have_unit_weight() {
        let wv = vectors(&[(0, "a"), (0, "b"), (1, "a"), (1, "b"), (2, "c")]);
        let layer = build_similarity_layer(&wv, 3);
        assert_eq!(layer.window_index, 3);
        assert_eq!(layer.edges.len(), 1);
        assert_eq!(layer.edges[0].weight, 1.0);
    }

    #[test]
    fn disjoint_sets_have_no_edge() {
        let wv = vectors(&[(0, "a"), (1, "b"), (2, "c")]);
        assert!(build_similarity_layer(&wv, 0).edges.is_empty());
    }

    #[test]
    fn half_overlap_cosine() {
        let wv = WindowVectors {
            terms: vec!["x".into(), "y".into(), "z".into()],
            vectors: vec![
                UserVector { user: 0, entries: vec![(0, 1.0), (1, 1.0)], norm: 2f64.sqrt() },
                UserVector { user: 1, entries: vec![(1, 1.0), (2, 1.0)], norm: 2f64.sqrt() },
            ],
        };
        let layer = build_similarity_layer(&wv, 0);
        assert_abs_diff_eq!(layer.edges[0].weight, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn dyad_survives_backbone() {
        let g = LayerGraph::from_edges(0, vec![Edge { u: 0, v: 1, weight: 0.01 }]);
        let b = disparity_backbone(&g, 0.05).unwrap();
        assert_eq!(b.edges.len(), 1);
    }

    #[test]
    fn equal_star_fails_from_hub() {
        let edges = (1..=10).map(|v| Edge { u: 0, v, weight: 0.3 }).collect();
        let g = LayerGraph::from_edges(0, edges);
        let (deg, st) = g.degree_strength();
        assert_abs_diff_eq!(edge_significance(0.3, st[0], deg[0]), 0.9f64.powi(9), epsilon = 1e-12);
        assert!(0.9f64.powi(9) > 0.05);
        let b = disparity_backbone(&g, 0.05).unwrap();
        assert!(b.edges.is_empty());
        assert!(b.nodes.is_empty());
    }

    #[test]
    fn bad_alpha_rejected() {
        let g = LayerGraph::from_edges(0, vec![]);
        assert!(disparity_backbone(&g, 0.0).is_err());
        assert!(disparity_backbone(&g, 1.0).is_err());
    }

    #[test]
    fn aggregate_identity_and_sum() {
        let a = LayerGraph::from_edges(4, vec![Edge { u: 0, v: 1, weight: 0.2 }, Edge { u: 1, v: 2, weight: 0.7 }]);
        assert_eq!(aggregate_static_network(std::slice::from_ref(&a)).unwrap(), a);
        let b = LayerGraph::from_edges(5, vec![Edge { u: 0, v: 1, weight: 0.3 }]);
        let c = LayerGraph::from_edges(9, vec![Edge { u: 0, v: 1, weight: 0.5 }, Edge { u: 3, v: 4, weight: 1.0 }]);
        let agg = aggregate_static_network(&[a, b, c]).unwrap();
        assert_abs_diff_eq!(agg.edges[0].weight, 1.0, epsilon = 1e-12);
        assert_eq!(agg.nodes, vec![0, 1, 2, 3, 4]);
        assert!(aggregate_static_network(&[]).is_err());
    }

    fn random_graph(rng: &mut ChaCha8Rng, n: u32, p: f64) -> LayerGraph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.random::<f64>() < p {
                    edges.push(Edge { u, v, weight: rng.random_range(0.01..=1.0) });
                }
            }
        }
        LayerGraph::from_edges(0, edges)
    }

    #[test]
    fn aggregate_degree_dominates_layer_degree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let layers: Vec<LayerGraph> = (0..6).map(|_| random_graph(&mut rng, 25, 0.15)).collect();
        let agg = aggregate_static_network(&layers).unwrap();
        let (agg_deg, _) = agg.degree_strength();
        for layer in &layers {
            let (deg, _) = layer.degree_strength();
            for (i, &u) in layer.nodes.iter().enumerate() {
                assert!(agg_deg[agg.position(u).unwrap()] >= deg[i]);
            }
        }
    }

    proptest! {
        #[test]
        fn cosine_weights_in_unit_interval(rows in proptest::collection::vec((0u32..12, 0u32..15), 1..80)) {
            let names: Vec<String> = rows.iter().map(|r| format!("t{}", r.1)).collect();
            let rows: Vec<(UserId, &str)> = rows.iter().zip(&names).map(|(r, n)| (r.0, n.as_str())).collect();
            let wv = vectors(&rows);
            let layer = build_similarity_layer(&wv, 0);
            for e in &layer.edges {
                prop_assert!(e.u < e.v);
                prop_assert!(e.weight > 0.0 && e.weight <= 1.0 + 1e-9);
                // symmetric by construction: recompute from the other side
                let a = wv.vectors.iter().find(|v| v.user == e.u).unwrap();
                let b = wv.vectors.iter().find(|v| v.user == e.v).unwrap();
                let ma: HashMap<u32, f64> = a.entries.iter().copied().collect();
                let dot: f64 = b.entries.iter().map(|(t, w)| w * ma.get(t).unwrap_or(&0.0)).sum();
                prop_assert!((dot / (a.norm * b.norm) - e.weight).abs() < 1e-9);
            }
        }

        #[test]
        fn backbone_is_monotone_subgraph(seed in 0u64..500, a1 in 0.01f64..0.5, a2 in 0.01f64..0.5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_graph(&mut rng, 20, 0.25);
            let (lo, hi) = if a1 < a2 { (a1, a2) } else { (a2, a1) };
            let small = disparity_backbone(&g, lo).unwrap();
            let big = disparity_backbone(&g, hi).unwrap();
            for e in &big.edges {
                prop_assert!(g.edges.contains(e));
            }
            for e in &small.edges {
                prop_assert!(big.edges.contains(e));
            }
            prop_assert!(big.nodes.iter().all(|n| g.nodes.contains(n)));
        }
    }
}
