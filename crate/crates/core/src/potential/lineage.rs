//! Offline reconstruction of the optimal play `y` from a finished script.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::script::{apply_topology, AdversaryScript, ScriptStep};
use crate::potential::value::PathIndicator;
use crate::tree::{EvolvingTree, NodeId};

/// The pure strategy that sits on the lineage of the final optimal leaf.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalPlay {
    /// Lightest leaf of the final tree (ties: smallest id).
    pub leaf: NodeId,
    /// Its root distance, the offline optimum.
    pub opt: f64,
    /// `y` at the start of each step; the last entry is `y` on the final tree.
    pub per_step: Vec<PathIndicator>,
}

impl OptimalPlay {
    pub fn before(&self, index: usize) -> &PathIndicator {
        &self.per_step[index]
    }

    pub fn after(&self, index: usize) -> &PathIndicator {
        &self.per_step[index + 1]
    }
}

/// Replay the topology of `script` and trace the final optimal leaf back
/// through the forks that created it. At each step `y` marks the root path of
/// the lineage member that is a leaf at that moment.
pub fn lineage_y(script: &AdversaryScript) -> Result<OptimalPlay> {
    let mut tree = EvolvingTree::new(script.k, script.epsilon)?;
    let mut trees = vec![tree.clone()];
    let mut origin: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    for (i, step) in script.steps.iter().enumerate() {
        if let ScriptStep::Fork { leaf, .. } = *step {
            let first = tree.id_bound() as u32;
            apply_topology(&mut tree, step).map_err(|e| Error::Input(format!("step {i}: {e}")))?;
            for id in first..tree.id_bound() as u32 {
                origin.insert(NodeId(id), leaf);
            }
        } else {
            apply_topology(&mut tree, step).map_err(|e| Error::Input(format!("step {i}: {e}")))?;
        }
        trees.push(tree.clone());
    }
    let (leaf, opt) = tree.opt_leaf();

    let mut chain = vec![(leaf, tree.creation_step(leaf))];
    let mut cur = leaf;
    while let Some(&p) = origin.get(&cur) {
        let created = trees
            .iter()
            .rev()
            .find(|t| t.contains(p))
            .map(|t| t.creation_step(p))
            .ok_or_else(|| Error::Internal(format!("lineage member {p} never existed")))?;
        chain.push((p, created));
        cur = p;
    }

    let per_step = trees
        .iter()
        .map(|t| {
            let j = t.current_step();
            let rep = chain
                .iter()
                .filter(|(_, c)| *c < j)
                .max_by_key(|(_, c)| *c)
                .map(|(u, _)| *u)
                .ok_or_else(|| Error::Internal(format!("no lineage member alive at step {j}")))?;
            if !t.contains(rep) || !t.is_leaf(rep) {
                return Err(Error::Internal(format!("lineage member {rep} is not a leaf at step {j}")));
            }
            Ok(PathIndicator::to_leaf(t, rep))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OptimalPlay { leaf, opt, per_step })
}
