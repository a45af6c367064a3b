//! Seeded generators for scripts and layered instances.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::script::{apply_topology, AdversaryScript, ScriptStep};
use crate::layered::instance::{LayerNode, LayeredTree};
use crate::tree::EvolvingTree;

/// Relative frequencies of the step kinds in random scripts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptMix {
    pub grow: f64,
    pub fork: f64,
    pub delete: f64,
    pub max_fork: usize,
    pub min_duration: f64,
    pub max_duration: f64,
}

impl Default for ScriptMix {
    fn default() -> Self {
        Self { grow: 0.5, fork: 0.25, delete: 0.25, max_fork: 3, min_duration: 0.1, max_duration: 2.0 }
    }
}

/// Random script with `ε = 1` and the default mix.
pub fn gen_random_script(k: u32, n_steps: usize, seed: u64) -> Result<AdversaryScript> {
    gen_random_script_with(k, 1.0, n_steps, seed, &ScriptMix::default())
}

pub fn gen_random_script_with(k: u32, epsilon: f64, n_steps: usize, seed: u64, mix: &ScriptMix) -> Result<AdversaryScript> {
    if mix.max_fork < 2 || !(mix.min_duration > 0.0 && mix.max_duration >= mix.min_duration) {
        return Err(Error::InvalidParameter("script mix needs max_fork ≥ 2 and 0 < min_duration ≤ max_duration".into()));
    }
    if [mix.grow, mix.fork, mix.delete].iter().any(|w| !(*w >= 0.0)) || mix.grow <= 0.0 {
        return Err(Error::InvalidParameter("step weights must be nonnegative with a positive grow weight".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tree = EvolvingTree::new(k, epsilon)?;
    let mut script = AdversaryScript::new(k, epsilon);
    for _ in 0..n_steps {
        let leaves = tree.leaves();
        let forkable: Vec<_> = leaves.iter().copied().filter(|&l| tree.depth(l) < k).collect();
        let deletable: Vec<_> = leaves.iter().copied().filter(|&l| l != tree.top()).collect();
        let weights = [
            mix.grow,
            if forkable.is_empty() { 0.0 } else { mix.fork },
            if deletable.is_empty() { 0.0 } else { mix.delete },
        ];
        let total: f64 = weights.iter().sum();
        let mut pick = rng.gen::<f64>() * total;
        let mut kind = 0;
        while kind < 2 && pick >= weights[kind] {
            pick -= weights[kind];
            kind += 1;
        }
        let step = match kind {
            0 => ScriptStep::Grow {
                leaf: *leaves.choose(&mut rng).expect("a tree always has a leaf"),
                duration: rng.gen_range(mix.min_duration..=mix.max_duration),
            },
            1 => ScriptStep::Fork {
                leaf: *forkable.choose(&mut rng).expect("checked nonempty"),
                q: rng.gen_range(2..=mix.max_fork),
            },
            _ => ScriptStep::Delete { leaf: *deletable.choose(&mut rng).expect("checked nonempty") },
        };
        apply_topology(&mut tree, &step)?;
        script.steps.push(step);
    }
    Ok(script)
}

/// `k` disjoint paths from `a`. Path `i` carries `lengths[i]` unit edges
/// followed by zero-weight padding up to a common layer count; the target
/// `b` hangs off the last node of the shortest path.
pub fn gen_lost_cow(k: usize, lengths: &[u64]) -> Result<LayeredTree> {
    if k < 2 || lengths.len() != k || lengths.contains(&0) {
        return Err(Error::InvalidParameter(format!("lost cow needs k ≥ 2 positive lengths, got {lengths:?}")));
    }
    let depth = *lengths.iter().max().expect("nonempty") as usize;
    let best = (0..k).min_by_key(|&i| (lengths[i], i)).expect("nonempty");
    let mut layers = vec![vec![LayerNode::root()]];
    for layer in 1..=depth {
        let nodes = (0..k)
            .map(|i| LayerNode {
                parent: Some(if layer == 1 { 0 } else { i }),
                weight: u64::from(layer as u64 <= lengths[i]),
            })
            .collect();
        layers.push(nodes);
    }
    layers.push(vec![LayerNode { parent: Some(best), weight: 0 }]);
    LayeredTree::new(layers)
}

/// Random complete layered tree with `n_layers` layers after the root, width
/// at most `k`, and each edge of weight 1 with probability `unit_edge_prob`.
/// One node per layer is kept alive so the target stays reachable.
pub fn gen_random_layered_tree(k: usize, n_layers: usize, unit_edge_prob: f64, seed: u64) -> Result<LayeredTree> {
    if k < 2 || n_layers == 0 || !(0.0..=1.0).contains(&unit_edge_prob) {
        return Err(Error::InvalidParameter("need k ≥ 2, at least one layer and a probability".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = vec![vec![LayerNode::root()]];
    for layer in 1..=n_layers {
        let prev = layers[layer - 1].len();
        let nodes: Vec<LayerNode> = if layer == n_layers {
            vec![LayerNode { parent: Some(rng.gen_range(0..prev)), weight: u64::from(rng.gen_bool(unit_edge_prob)) }]
        } else {
            let width = rng.gen_range(1..=k);
            let mut parents: Vec<usize> = (0..width).map(|_| rng.gen_range(0..prev)).collect();
            parents.sort_unstable();
            parents
                .into_iter()
                .map(|p| LayerNode { parent: Some(p), weight: u64::from(rng.gen_bool(unit_edge_prob)) })
                .collect()
        };
        layers.push(nodes);
    }
    LayeredTree::new(layers)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scripts_are_deterministic_and_valid() {
        let a = gen_random_script(4, 80, 11).unwrap();
        let b = gen_random_script(4, 80, 11).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
        assert!(gen_random_script(3, 0, 1).unwrap().is_empty());
        let kinds: std::collections::BTreeSet<_> = a.steps.iter().map(|s| s.kind_name()).collect();
        assert_eq!(kinds.len(), 3);
    }

    #[test]
    fn lost_cow_shape() {
        let g = gen_lost_cow(2, &[1, 4]).unwrap();
        assert_eq!(g.width(), 2);
        assert_eq!(g.opt_path().unwrap().0, 1);
        let g = gen_lost_cow(3, &[5, 5, 5]).unwrap();
        assert_eq!(g.opt_path().unwrap().0, 5);
        assert_eq!(g.width(), 3);
    }

    #[test]
    fn random_layered_trees() {
        let a = gen_random_layered_tree(4, 12, 0.4, 5).unwrap();
        assert_eq!(a, gen_random_layered_tree(4, 12, 0.4, 5).unwrap());
        assert!(a.width() <= 4);
        assert!(a.opt_path().is_ok());
    }
}
