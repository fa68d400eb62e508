//! Temporal multiplex: ordered layers plus identity couplings between the
//! same user's node-slices in adjacent layers.

use crate::ingest::UserId;
use crate::simnet::LayerGraph;
use crate::{Error, Result};

/// Inter-layer edge `(user, layer, layer + 1)` of strength `omega`. Layers are
/// positions in [`MultiplexNetwork::layers`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Coupling {
    pub user: UserId,
    pub layer: usize,
}

impl Coupling {
    pub fn next_layer(&self) -> usize {
        self.layer + 1
    }
}

#[derive(Clone, Debug)]
pub struct MultiplexNetwork {
    pub layers: Vec<LayerGraph>,
    pub omega: f64,
    pub couplings: Vec<Coupling>,
    slice_offsets: Vec<usize>,
}

impl MultiplexNetwork {
    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn n_slices(&self) -> usize {
        *self.slice_offsets.last().expect("offsets are never empty")
    }

    /// Dense node-slice id of `user` in layer position `layer`.
    pub fn slice_id(&self, layer: usize, user: UserId) -> Option<usize> {
        let pos = self.layers.get(layer)?.position(user)?;
        Some(self.slice_offsets[layer] + pos)
    }

    /// `(layer position, user)` of a node-slice id.
    pub fn slice(&self, id: usize) -> (usize, UserId) {
        let layer = self.slice_offsets.partition_point(|&o| o <= id) - 1;
        (layer, self.layers[layer].nodes[id - self.slice_offsets[layer]])
    }

    pub fn layer_offset(&self, layer: usize) -> usize {
        self.slice_offsets[layer]
    }

    /// All node-slices in id order: layer-major, users ascending.
    pub fn slices(&self) -> impl Iterator<Item = (usize, UserId)> + '_ {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(l, g)| g.nodes.iter().map(move |&u| (l, u)))
    }

    pub fn window_of(&self, layer: usize) -> usize {
        self.layers[layer].window_index
    }
}

/// Stacks `layers` (ordered by window) and couples every user present in two
/// adjacent layers.
pub fn assemble_multiplex(layers: Vec<LayerGraph>, omega: f64) -> Result<MultiplexNetwork> {
    if layers.is_empty() {
        return Err(Error::NoLayers);
    }
    if !(omega >= 0.0 && omega.is_finite()) {
        return Err(Error::InvalidParameter(format!("omega must be >= 0, got {omega}")));
    }
    if layers.windows(2).any(|w| w[0].window_index >= w[1].window_index) {
        return Err(Error::InvalidParameter("layers must be ordered by window index".into()));
    }
    let mut couplings = Vec::new();
    for (l, pair) in layers.windows(2).enumerate() {
        let (a, b) = (&pair[0].nodes, &pair[1].nodes);
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    couplings.push(Coupling { user: a[i], layer: l });
                    i += 1;
                    j += 1;
                }
            }
        }
    }
    let mut slice_offsets = Vec::with_capacity(layers.len() + 1);
    let mut acc = 0;
    slice_offsets.push(0);
    for g in &layers {
        acc += g.nodes.len();
        slice_offsets.push(acc);
    }
    Ok(MultiplexNetwork {
        layers,
        omega,
        couplings,
        slice_offsets,
    })
}
