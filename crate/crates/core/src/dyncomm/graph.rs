//! Flattened node-slice graph that the optimizer works on.
//!
//! Intra-layer edges and couplings share one CSR adjacency. Only intra-layer
//! weight enters the per-layer strengths used by the null model; couplings
//! count toward the total `2μ` only.

use crate::multiplex::MultiplexNetwork;

#[derive(Clone, Debug)]
pub(crate) struct SupraGraph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
    /// Sum of `A_ij` over ordered pairs inside each (aggregate) node.
    pub self_weight: Vec<f64>,
    /// Sparse per-layer intra-layer strength of each node, sorted by layer.
    pub strength: Vec<Vec<(u32, f64)>>,
    /// `γ / 2m_s` per layer, zero for layers without edges.
    pub layer_scale: Vec<f64>,
    /// `2m_s` per layer.
    pub layer_total: Vec<f64>,
    pub gamma: f64,
    /// `2μ`.
    pub total: f64,
}

impl SupraGraph {
    pub fn from_multiplex(net: &MultiplexNetwork, gamma: f64) -> Self {
        let n = net.n_slices();
        let mut edges: Vec<(u32, u32, f64)> = Vec::new();
        for (l, layer) in net.layers.iter().enumerate() {
            let base = net.layer_offset(l);
            for e in &layer.edges {
                let a = layer.position(e.u).expect("endpoint in layer");
                let b = layer.position(e.v).expect("endpoint in layer");
                edges.push(((base + a) as u32, (base + b) as u32, e.weight));
            }
        }
        let mut coupling_total = 0.0;
        if net.omega > 0.0 {
            for c in &net.couplings {
                let a = net.slice_id(c.layer, c.user).expect("coupled slice exists");
                let b = net.slice_id(c.next_layer(), c.user).expect("coupled slice exists");
                edges.push((a as u32, b as u32, net.omega));
                coupling_total += 2.0 * net.omega;
            }
        }
        let mut g = SupraGraph::from_edge_list(n, &edges);
        // strengths from the CSR rows so that quality sums see identical terms
        let mut strength: Vec<Vec<(u32, f64)>> = Vec::with_capacity(n);
        let mut layer_total = Vec::with_capacity(net.n_layers());
        for l in 0..net.n_layers() {
            let lo = net.layer_offset(l);
            let hi = lo + net.layers[l].nodes.len();
            let mut two_m = 0.0;
            for v in lo..hi {
                let k: f64 = g
                    .neighbors(v)
                    .filter(|&(t, _)| (lo..hi).contains(&(t as usize)))
                    .map(|(_, w)| w)
                    .sum();
                two_m += k;
                strength.push(vec![(l as u32, k)]);
            }
            layer_total.push(two_m);
        }
        g.self_weight = vec![0.0; n];
        g.strength = strength;
        g.layer_scale = layer_total.iter().map(|&t| if t > 0.0 { gamma / t } else { 0.0 }).collect();
        g.total = layer_total.iter().sum::<f64>() + coupling_total;
        g.layer_total = layer_total;
        g.gamma = gamma;
        g
    }

    /// Symmetric CSR from undirected `(a, b, w)` with `a != b`. Parallel edges
    /// are merged.
    fn from_edge_list(n: usize, edges: &[(u32, u32, f64)]) -> Self {
        let mut degree = vec![0usize; n];
        for &(a, b, _) in edges {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0u32; offsets[n]];
        let mut weights = vec![0.0f64; offsets[n]];
        for &(a, b, w) in edges {
            for (x, y) in [(a, b), (b, a)] {
                let slot = fill[x as usize];
                targets[slot] = y;
                weights[slot] = w;
                fill[x as usize] += 1;
            }
        }
        let mut g = SupraGraph {
            offsets,
            targets,
            weights,
            self_weight: Vec::new(),
            strength: Vec::new(),
            layer_scale: Vec::new(),
            layer_total: Vec::new(),
            gamma: 0.0,
            total: 0.0,
        };
        g.sort_and_merge();
        g
    }

    fn sort_and_merge(&mut self) {
        let n = self.n();
        let mut offsets = vec![0usize; n + 1];
        let mut targets = Vec::with_capacity(self.targets.len());
        let mut weights = Vec::with_capacity(self.weights.len());
        let mut row: Vec<(u32, f64)> = Vec::new();
        for v in 0..n {
            row.clear();
            row.extend(self.neighbors(v));
            row.sort_by_key(|&(t, _)| t);
            for &(t, w) in &row {
                match targets.last() {
                    Some(&last) if targets.len() > offsets[v] && last == t => {
                        *weights.last_mut().expect("parallel edge") += w;
                    }
                    _ => {
                        targets.push(t);
                        weights.push(w);
                    }
                }
            }
            offsets[v + 1] = targets.len();
        }
        self.offsets = offsets;
        self.targets = targets;
        self.weights = weights;
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (u32, f64)> + '_ {
        let r = self.offsets[v]..self.offsets[v + 1];
        self.targets[r.clone()].iter().copied().zip(self.weights[r].iter().copied())
    }

    pub fn n_layers(&self) -> usize {
        self.layer_scale.len()
    }

    /// Unnormalized quality `Σ_c [I_c − Σ_s scale_s K_cs²]`.
    pub fn raw_quality(&self, membership: &[u32]) -> f64 {
        let n_comm = membership.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
        let layers = self.n_layers();
        let mut internal = 0.0;
        let mut k = vec![0.0f64; n_comm * layers];
        for v in 0..self.n() {
            let c = membership[v];
            let row: f64 = self
                .neighbors(v)
                .filter(|&(t, _)| membership[t as usize] == c)
                .map(|(_, w)| w)
                .sum();
            internal += self.self_weight[v] + row;
            for &(s, kv) in &self.strength[v] {
                k[c as usize * layers + s as usize] += kv;
            }
        }
        let null: f64 = k
            .chunks(layers.max(1))
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|&(s, _)| self.layer_total[s] > 0.0)
                    .map(|(s, &x)| self.gamma * x * (x / self.layer_total[s]))
                    .sum::<f64>()
            })
            .sum();
        internal - null
    }

    pub fn quality(&self, membership: &[u32]) -> f64 {
        if self.total > 0.0 {
            self.raw_quality(membership) / self.total
        } else {
            0.0
        }
    }

    /// Collapses each community of `membership` (ids `0..n_comm`) into one node.
    pub fn aggregate(&self, membership: &[u32], n_comm: usize) -> SupraGraph {
        let mut self_weight = vec![0.0; n_comm];
        let mut strength: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n_comm];
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_comm];
        for v in 0..self.n() {
            members[membership[v] as usize].push(v);
        }
        let mut edges: Vec<(u32, u32, f64)> = Vec::new();
        let mut acc = vec![0.0f64; n_comm];
        let mut touched: Vec<usize> = Vec::new();
        let mut dense = vec![0.0f64; self.n_layers()];
        let mut seen = vec![false; self.n_layers()];
        let mut layers_touched: Vec<usize> = Vec::new();
        for (c, vs) in members.iter().enumerate() {
            for &v in vs {
                self_weight[c] += self.self_weight[v];
                for (t, w) in self.neighbors(v) {
                    let d = membership[t as usize] as usize;
                    if d == c {
                        self_weight[c] += w;
                    } else if d > c {
                        if acc[d] == 0.0 {
                            touched.push(d);
                        }
                        acc[d] += w;
                    }
                }
                for &(s, k) in &self.strength[v] {
                    if !seen[s as usize] {
                        seen[s as usize] = true;
                        layers_touched.push(s as usize);
                    }
                    dense[s as usize] += k;
                }
            }
            touched.sort_unstable();
            for &d in &touched {
                edges.push((c as u32, d as u32, acc[d]));
                acc[d] = 0.0;
            }
            touched.clear();
            layers_touched.sort_unstable();
            strength[c] = layers_touched.iter().map(|&s| (s as u32, dense[s])).collect();
            for &s in &layers_touched {
                dense[s] = 0.0;
                seen[s] = false;
            }
            layers_touched.clear();
        }
        let mut g = SupraGraph::from_edge_list(n_comm, &edges);
        g.self_weight = self_weight;
        g.strength = strength;
        g.layer_scale = self.layer_scale.clone();
        g.layer_total = self.layer_total.clone();
        g.gamma = self.gamma;
        g.total = self.total;
        g
    }
}
