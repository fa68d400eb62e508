use std::collections::HashMap;

use super::graph::SupraGraph;
use super::DynamicPartition;
use crate::multiplex::MultiplexNetwork;
use crate::{Error, Result};

/// Multislice modularity of `partition` on `network` at resolution `gamma`.
/// Community ids may be arbitrary; every node-slice must be assigned.
pub fn multislice_modularity(network: &MultiplexNetwork, partition: &DynamicPartition, gamma: f64) -> Result<f64> {
    let mut ids: HashMap<u32, u32> = HashMap::new();
    let mut membership = Vec::with_capacity(network.n_slices());
    for (layer, user) in network.slices() {
        let window = network.window_of(layer);
        let c = partition.get(user, window).ok_or_else(|| Error::MissingSlice {
            user: user.to_string(),
            window,
        })?;
        let next = ids.len() as u32;
        membership.push(*ids.entry(c).or_insert(next));
    }
    Ok(multislice_modularity_of(network, &membership, gamma))
}

/// Same as [`multislice_modularity`] for a membership vector in node-slice id
/// order (see [`MultiplexNetwork::slices`]).
pub fn multislice_modularity_of(network: &MultiplexNetwork, membership: &[u32], gamma: f64) -> f64 {
    assert_eq!(membership.len(), network.n_slices(), "membership must cover every node-slice");
    let (dense, _) = {
        let mut map: HashMap<u32, u32> = HashMap::new();
        let v: Vec<u32> = membership
            .iter()
            .map(|&c| {
                let next = map.len() as u32;
                *map.entry(c).or_insert(next)
            })
            .collect();
        (v, map.len())
    };
    SupraGraph::from_multiplex(network, gamma).quality(&dense)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyncomm::leiden::tests::clique_layer;
    use crate::dyncomm::{DynamicPartition, SliceAssignment};
    use crate::multiplex::assemble_multiplex;
    use crate::simnet::{Edge, LayerGraph};
    use approx::assert_abs_diff_eq;

    #[test]
    fn all_in_one_single_layer_is_zero() {
        let layer = LayerGraph::from_edges(
            0,
            vec![
                Edge { u: 0, v: 1, weight: 0.3 },
                Edge { u: 1, v: 2, weight: 0.9 },
                Edge { u: 0, v: 3, weight: 0.4 },
            ],
        );
        let net = assemble_multiplex(vec![layer], 1.0).unwrap();
        assert_eq!(multislice_modularity_of(&net, &[0, 0, 0, 0], 1.0), 0.0);
    }

    #[test]
    fn singleton_three_node_layer_by_hand() {
        // path 0 -1- 1 -2- 2 : k = (1, 3, 2), 2m = 6
        let layer = LayerGraph::from_edges(
            0,
            vec![Edge { u: 0, v: 1, weight: 1.0 }, Edge { u: 1, v: 2, weight: 2.0 }],
        );
        let net = assemble_multiplex(vec![layer], 0.0).unwrap();
        let expected = -(1.0f64 / 36.0 + 9.0 / 36.0 + 4.0 / 36.0);
        assert_abs_diff_eq!(multislice_modularity_of(&net, &[0, 1, 2], 1.0), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(multislice_modularity_of(&net, &[0, 1, 2], 2.0), 2.0 * expected, epsilon = 1e-15);
    }

    #[test]
    fn two_triangles_by_hand() {
        let net = assemble_multiplex(vec![clique_layer(0, &[&[0, 1, 2], &[3, 4, 5]], 1.0)], 1.0).unwrap();
        // each triangle: internal 6 of 12, K = 6 → 1/2 − 2·(1/2)² = 0.5
        assert_abs_diff_eq!(multislice_modularity_of(&net, &[0, 0, 0, 1, 1, 1], 1.0), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn relabeling_is_invariant_and_missing_slices_error() {
        let net = assemble_multiplex(
            vec![clique_layer(0, &[&[0, 1, 2]], 1.0), clique_layer(1, &[&[1, 2, 3]], 1.0)],
            0.5,
        )
        .unwrap();
        let a = multislice_modularity_of(&net, &[0, 0, 1, 1, 2, 2], 1.0);
        let b = multislice_modularity_of(&net, &[9, 9, 4, 4, 7, 7], 1.0);
        assert_eq!(a, b);
        let partial = DynamicPartition::from_assignments(
            vec![SliceAssignment { window: 0, user: 0, community: 0 }],
            0.0,
        );
        assert!(matches!(multislice_modularity(&net, &partial, 1.0), Err(Error::MissingSlice { .. })));
    }
}
