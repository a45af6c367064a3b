//! Driving the evolving tree game from a layered instance.
//!
//! The evolving tree is kept homeomorphic to the layered subtree spanned by a
//! virtual parent of `a` and the current layer: the root stands for that
//! virtual parent, leaves stand for the nodes of the current layer, and every
//! tree edge has the weight of the layered path it replaces.

use serde::{Deserialize, Serialize};

use crate::dynamics::game::{Game, GameTrace, StepDetail};
use crate::dynamics::integrate::IntegratorConfig;
use crate::error::{Error, Result};
use crate::harness::script::ScriptStep;
use crate::layered::instance::{LayerPos, LayeredTree};
use crate::layered::transport::{transport_plan, LayerDistribution, TransportPlan};
use crate::tree::NodeId;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraverseConfig {
    pub epsilon: f64,
    pub integrator: IntegratorConfig,
}

impl Default for TraverseConfig {
    fn default() -> Self {
        Self { epsilon: 1.0, integrator: IntegratorConfig::default() }
    }
}

/// The fractional strategy on a layered instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerTrace {
    pub k: usize,
    pub instance: LayeredTree,
    /// `P_i` for every layer.
    pub distributions: Vec<LayerDistribution>,
    /// `plans[i]` couples layer `i` with layer `i + 1`.
    pub plans: Vec<TransportPlan>,
    /// Sum of the optimal transport costs between consecutive layers.
    pub layered_cost: f64,
    pub game: GameTrace,
}

impl LayerTrace {
    /// Service plus movement paid in the evolving tree game.
    pub fn evolving_cost(&self) -> f64 {
        self.game.total_cost()
    }
}

/// Run the fractional algorithm on a binary instance with at most one unit
/// edge per gap. Per layer: delete the tree leaves of childless nodes, fork
/// the leaves of two-child nodes, relabel the leaves of one-child nodes, then
/// grow the leaf of the unit edge, if any, for one time unit.
pub fn traverse(instance: &LayeredTree, k: usize, cfg: &TraverseConfig) -> Result<LayerTrace> {
    instance.validate()?;
    if !instance.is_unit_weighted() || !instance.is_binary() || instance.max_unit_edges_per_gap() > 1 {
        return Err(Error::InvalidInstance(
            "traverse needs a binary unit-weight instance with at most one unit edge per gap".into(),
        ));
    }
    if instance.width() > k {
        return Err(Error::InvalidInstance(format!("width {} exceeds k = {k}", instance.width())));
    }
    let depth_bound = u32::try_from(k).map_err(|_| Error::InvalidParameter("k is too large".into()))?;
    let mut game = Game::new(depth_bound, cfg.epsilon, cfg.integrator.clone())?;
    let root_dist = instance.root_distances();

    let mut leaf_of = vec![NodeId::INITIAL_TOP];
    let mut distributions = vec![LayerDistribution(vec![1.0])];
    let mut plans = Vec::new();
    let mut layered_cost = 0.0;

    for i in 0..instance.depth() {
        let next = &instance.layers[i + 1];
        let kids: Vec<Vec<usize>> = (0..leaf_of.len()).map(|u| instance.children(i, u)).collect();
        let mut next_leaf = vec![NodeId::ROOT; next.len()];
        for (u, c) in kids.iter().enumerate() {
            if c.is_empty() {
                game.apply(ScriptStep::Delete { leaf: leaf_of[u] })?;
            }
        }
        for (u, c) in kids.iter().enumerate() {
            if c.len() == 2 {
                let rec = game.apply(ScriptStep::Fork { leaf: leaf_of[u], q: 2 })?;
                let StepDetail::Fork { children, .. } = &rec.detail else {
                    return Err(Error::Internal("fork produced no children".into()));
                };
                next_leaf[c[0]] = children[0];
                next_leaf[c[1]] = children[1];
            }
        }
        for (u, c) in kids.iter().enumerate() {
            if c.len() == 1 {
                next_leaf[c[0]] = leaf_of[u];
            }
        }
        if let Some(v) = next.iter().position(|n| n.weight > 0) {
            game.apply(ScriptStep::Grow { leaf: next_leaf[v], duration: next[v].weight as f64 })?;
        }
        leaf_of = next_leaf;
        check_homeomorphism(&game, &leaf_of, &root_dist[i + 1], i + 1)?;

        let p = LayerDistribution(leaf_of.iter().map(|&l| game.state().mass(l)).collect());
        let dist: Vec<Vec<f64>> = (0..distributions[i].0.len())
            .map(|u| {
                (0..next.len())
                    .map(|v| {
                        instance.distance(LayerPos { layer: i, index: u }, LayerPos { layer: i + 1, index: v }) as f64
                    })
                    .collect()
            })
            .collect();
        let plan = transport_plan(&distributions[i], &p, &dist)?;
        layered_cost += plan.cost;
        plans.push(plan);
        distributions.push(p);
    }
    Ok(LayerTrace { k, instance: instance.clone(), distributions, plans, layered_cost, game: game.finish() })
}

fn check_homeomorphism(game: &Game, leaf_of: &[NodeId], root_dist: &[u64], layer: usize) -> Result<()> {
    let tree = game.tree();
    let mut leaves = tree.leaves();
    let mut mapped = leaf_of.to_vec();
    leaves.sort_unstable();
    mapped.sort_unstable();
    if leaves != mapped {
        return Err(Error::Internal(format!("layer {layer}: tree leaves do not match the layer")));
    }
    for (v, &l) in leaf_of.iter().enumerate() {
        if tree.root_distance(l) != root_dist[v] as f64 {
            return Err(Error::Internal(format!(
                "layer {layer}: leaf {l} is at distance {} but node {v} is at {}",
                tree.root_distance(l),
                root_dist[v]
            )));
        }
    }
    Ok(())
}
