//! Deterministic comparison strategy.

use crate::error::Result;
use crate::layered::instance::{LayerPos, LayeredTree};

/// At every layer move to the node with the shortest root path revealed so
/// far (ties: smallest index). Returns the visited indices and the total
/// distance travelled.
pub fn baseline_greedy(instance: &LayeredTree) -> Result<(Vec<usize>, u64)> {
    instance.validate()?;
    let dist = instance.root_distances();
    let mut path = vec![0usize];
    let mut cost = 0;
    for i in 1..instance.layers.len() {
        let next = (0..dist[i].len()).min_by_key(|&v| (dist[i][v], v)).expect("layers are nonempty");
        cost += instance.distance(LayerPos { layer: i - 1, index: path[i - 1] }, LayerPos { layer: i, index: next });
        path.push(next);
    }
    Ok((path, cost))
}
