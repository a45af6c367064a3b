//! Adversary scripts: replayable sequences of game steps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{EvolvingTree, NodeId};

/// One adversary step. Leaves are referenced by creation-order id, which is
/// stable across deletions, so scripts can be written down in advance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScriptStep {
    Grow { leaf: NodeId, duration: f64 },
    Fork { leaf: NodeId, q: usize },
    Delete { leaf: NodeId },
}

impl ScriptStep {
    pub fn leaf(&self) -> NodeId {
        match *self {
            ScriptStep::Grow { leaf, .. } | ScriptStep::Fork { leaf, .. } | ScriptStep::Delete { leaf } => leaf,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ScriptStep::Grow { .. } => "grow",
            ScriptStep::Fork { .. } => "fork",
            ScriptStep::Delete { .. } => "delete",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversaryScript {
    pub k: u32,
    pub epsilon: f64,
    pub steps: Vec<ScriptStep>,
}

impl AdversaryScript {
    pub fn new(k: u32, epsilon: f64) -> Self {
        Self { k, epsilon, steps: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Check the script by replaying its topology; returns the final tree.
    pub fn validate(&self) -> Result<EvolvingTree> {
        let mut tree = EvolvingTree::new(self.k, self.epsilon)?;
        for (i, step) in self.steps.iter().enumerate() {
            apply_topology(&mut tree, step).map_err(|e| Error::Input(format!("step {i}: {e}")))?;
        }
        Ok(tree)
    }
}

/// Apply only the topological effect of a step.
pub(crate) fn apply_topology(tree: &mut EvolvingTree, step: &ScriptStep) -> Result<()> {
    match *step {
        ScriptStep::Grow { leaf, duration } => {
            if !(duration > 0.0 && duration.is_finite()) {
                return Err(Error::RejectedStep(format!("growth duration must be positive, got {duration}")));
            }
            tree.grow(leaf, duration)
        }
        ScriptStep::Fork { leaf, q } => tree.fork(leaf, q).map(drop),
        ScriptStep::Delete { leaf } => tree.delete_leaf(leaf).map(drop),
    }
}
