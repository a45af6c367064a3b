//! The algorithm's fractional position: a point `x` of the polytope `K(T)`.
//!
//! `x_u` is the probability mass in the subtree below `u`. The root value
//! `x_r = 1` is implicit and never stored.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{DeleteOutcome, EvolvingTree, Merge, NodeId};

/// Values in `(−NEGATIVE_CLAMP, 0)` are rounding noise and are clamped to zero.
pub const NEGATIVE_CLAMP: f64 = 1e-12;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FractionalState {
    mass: BTreeMap<NodeId, f64>,
}

/// One way a state can fail to lie in the polytope.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Missing(NodeId),
    Extra(NodeId),
    Negative { node: NodeId, value: f64 },
    /// Children of `node` do not sum to its value. For the root the value is 1.
    Conservation { node: NodeId, value: f64, children_sum: f64 },
}

impl FractionalState {
    /// All mass on `c_r`; only valid for a fresh two-node tree.
    pub fn init(tree: &EvolvingTree) -> Result<Self> {
        if tree.len() != 2 {
            return Err(Error::ProtocolViolation(
                "the initial state is only defined on a fresh two-node tree".into(),
            ));
        }
        Ok(Self { mass: BTreeMap::from([(tree.top(), 1.0)]) })
    }

    pub fn from_map(mass: BTreeMap<NodeId, f64>) -> Self {
        Self { mass }
    }

    pub fn get(&self, u: NodeId) -> Option<f64> {
        if u == NodeId::ROOT {
            return Some(1.0);
        }
        self.mass.get(&u).copied()
    }

    /// Mass of `u`; panics if `u` has no coordinate.
    pub fn mass(&self, u: NodeId) -> f64 {
        self.get(u).unwrap_or_else(|| panic!("no coordinate for {u}"))
    }

    pub fn set(&mut self, u: NodeId, value: f64) {
        self.mass.insert(u, value);
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.mass.iter().map(|(&u, &v)| (u, v))
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// Every way this state fails to lie in `K(tree)` at tolerance `tol`.
    pub fn validate(&self, tree: &EvolvingTree, tol: f64) -> Vec<Violation> {
        let mut out = Vec::new();
        for &u in self.mass.keys() {
            if u == NodeId::ROOT || !tree.contains(u) {
                out.push(Violation::Extra(u));
            }
        }
        for u in tree.non_root_ids() {
            match self.mass.get(&u) {
                None => out.push(Violation::Missing(u)),
                Some(&v) if v < -tol || !v.is_finite() => out.push(Violation::Negative { node: u, value: v }),
                _ => {}
            }
        }
        for u in tree.preorder() {
            let children = tree.children(u);
            if children.is_empty() {
                continue;
            }
            let Some(value) = self.get(u) else { continue };
            let children_sum: f64 = children.iter().filter_map(|&c| self.get(c)).sum();
            if (children_sum - value).abs() > tol {
                out.push(Violation::Conservation { node: u, value, children_sum });
            }
        }
        out
    }

    /// Largest `|Σ_children x_v − x_u|` over internal nodes, root included.
    pub fn conservation_residual(&self, tree: &EvolvingTree) -> f64 {
        tree.preorder()
            .into_iter()
            .filter(|&u| !tree.children(u).is_empty())
            .map(|u| {
                let s: f64 = tree.children(u).iter().map(|&c| self.mass(c)).sum();
                (s - self.mass(u)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Fork update: each new child receives an equal share of the old leaf's mass.
    pub fn apply_fork(&mut self, leaf: NodeId, children: &[NodeId]) {
        let share = self.mass(leaf) / children.len() as f64;
        for &c in children {
            self.mass.insert(c, share);
        }
    }

    /// Drop the coordinate of a deleted leaf, which must already be empty.
    pub fn remove_leaf(&mut self, leaf: NodeId, tol: f64) -> Result<()> {
        let v = self.mass(leaf);
        if v > tol {
            return Err(Error::ProtocolViolation(format!(
                "{leaf} still carries mass {v:e}; drain it before deleting"
            )));
        }
        self.mass.remove(&leaf);
        Ok(())
    }

    /// Drop the coordinate of a smoothed-away node; the survivor keeps its own value.
    pub fn remove_merged(&mut self, merge: &Merge) {
        self.mass.remove(&merge.removed);
    }

    /// Projection onto the polytope of the tree after a delete step.
    pub fn project_after_delete(&mut self, outcome: &DeleteOutcome, tol: f64) -> Result<()> {
        self.remove_leaf(outcome.deleted, tol)?;
        if let Some(m) = &outcome.merged {
            self.remove_merged(m);
        }
        Ok(())
    }

    /// Clamp rounding noise and rescale children top-down so every internal
    /// node's children sum to it exactly. Returns the largest residual seen
    /// before the repair.
    pub fn repair(&mut self, tree: &EvolvingTree) -> Result<f64> {
        let mut dense = vec![0.0; tree.id_bound()];
        dense[0] = 1.0;
        for (u, v) in self.iter() {
            dense[u.index()] = v;
        }
        let order = tree.preorder();
        let children: Vec<Vec<usize>> =
            order.iter().map(|&u| tree.children(u).iter().map(|c| c.index()).collect()).collect();
        let ids: Vec<usize> = order.iter().map(|u| u.index()).collect();
        let residual = repair_dense(&ids, &children, &mut dense)?;
        for (u, v) in self.mass.iter_mut() {
            *v = dense[u.index()];
        }
        Ok(residual)
    }
}

/// Repair on dense storage indexed by id. `ids` is a preorder of live nodes,
/// `children[i]` lists the ids under `ids[i]`.
pub(crate) fn repair_dense(
    ids: &[usize],
    children: &[Vec<usize>],
    x: &mut [f64],
) -> Result<f64> {
    let mut residual: f64 = 0.0;
    for (i, &u) in ids.iter().enumerate() {
        let kids = &children[i];
        if kids.is_empty() {
            continue;
        }
        let mut sum = 0.0;
        for &c in kids {
            let v = x[c];
            if v < 0.0 {
                if v < -NEGATIVE_CLAMP {
                    return Err(Error::IntegrationFailure(format!(
                        "coordinate n{c} went negative ({v:e})"
                    )));
                }
                x[c] = 0.0;
            }
            sum += x[c];
        }
        let target = if i == 0 { 1.0 } else { x[u] };
        residual = residual.max((sum - target).abs());
        if sum > 0.0 {
            let scale = target / sum;
            for &c in kids {
                x[c] *= scale;
            }
        } else {
            let share = target / kids.len() as f64;
            for &c in kids {
                x[c] = share;
            }
        }
    }
    x[ids[0]] = 1.0;
    Ok(residual)
}

/// Movement cost `Σ_u w_u·|x_old_u − x_new_u|` between two states on `tree`.
pub fn movement_cost(tree: &EvolvingTree, old: &FractionalState, new: &FractionalState) -> Result<f64> {
    if old.len() != new.len() || old.mass.keys().ne(new.mass.keys()) {
        return Err(Error::TopologyMismatch("states cover different node sets".into()));
    }
    let mut total = 0.0;
    for (u, a) in old.iter() {
        if !tree.contains(u) {
            return Err(Error::TopologyMismatch(format!("{u} is not in the tree")));
        }
        total += tree.weight(u) * (a - new.mass(u)).abs();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star_state() -> (EvolvingTree, FractionalState, NodeId, NodeId) {
        let mut t = EvolvingTree::new(3, 1.0).unwrap();
        let mut x = FractionalState::init(&t).unwrap();
        let kids = t.fork(t.top(), 2).unwrap();
        x.apply_fork(t.top(), &kids);
        (t, x, kids[0], kids[1])
    }

    #[test]
    fn init_is_valid_and_only_on_fresh_trees() {
        let t = EvolvingTree::new(3, 1.0).unwrap();
        let x = FractionalState::init(&t).unwrap();
        assert_eq!(x.mass(t.top()), 1.0);
        assert!(x.validate(&t, 1e-9).is_empty());

        let (t, ..) = star_state();
        assert!(matches!(FractionalState::init(&t), Err(Error::ProtocolViolation(_))));
    }

    #[test]
    fn validate_flags_conservation_and_sign() {
        let (t, mut x, a, b) = star_state();
        assert!(x.validate(&t, 1e-9).is_empty());
        x.set(a, 0.501);
        let v = x.validate(&t, 1e-9);
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::Conservation { .. }));

        x.set(a, 1.01);
        x.set(b, -0.01);
        let v = x.validate(&t, 1e-9);
        assert_eq!(v, vec![Violation::Negative { node: b, value: -0.01 }]);
    }

    #[test]
    fn fork_splits_mass() {
        let (mut t, mut x, a, b) = star_state();
        x.set(a, 0.6);
        x.set(b, 0.4);
        let kids = t.fork(a, 2).unwrap();
        x.apply_fork(a, &kids);
        assert_eq!(x.mass(kids[0]), 0.3);
        assert_eq!(x.mass(kids[1]), 0.3);
        assert!(x.validate(&t, 1e-12).is_empty());

        let kids = t.fork(b, 3).unwrap();
        x.set(b, 0.0);
        x.set(a, 1.0);
        x.apply_fork(b, &kids);
        assert!(kids.iter().all(|&c| x.mass(c) == 0.0));
    }

    #[test]
    fn projection_after_delete() {
        let (mut t, mut x, a, b) = star_state();
        x.set(a, 0.2);
        x.set(b, 0.8);
        let before = x.clone();
        let out = t.delete_leaf(a).unwrap();
        assert!(matches!(
            before.clone().project_after_delete(&out, 1e-10),
            Err(Error::ProtocolViolation(_))
        ));
        x.set(a, 0.0);
        x.set(b, 1.0);
        x.project_after_delete(&out, 1e-10).unwrap();
        assert_eq!(x.len(), 1);
        assert_eq!(x.mass(b), 1.0, "survivor keeps its value");
        assert!(x.validate(&t, 1e-12).is_empty());
    }

    #[test]
    fn movement_cost_formula() {
        let mut t = EvolvingTree::new(3, 1.0).unwrap();
        let x0 = FractionalState::init(&t).unwrap();
        let kids = t.fork(t.top(), 2).unwrap();
        let (a, b) = (kids[0], kids[1]);
        t.grow(a, 1.0).unwrap();
        t.grow(b, 2.0).unwrap();
        let mut old = x0.clone();
        old.apply_fork(t.top(), &kids);
        let mut new = old.clone();
        new.set(a, 0.25);
        new.set(b, 0.75);
        assert!((movement_cost(&t, &old, &new).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(movement_cost(&t, &old, &old).unwrap(), 0.0);

        let mut zero = EvolvingTree::new(3, 1.0).unwrap();
        zero.fork(zero.top(), 2).unwrap();
        assert_eq!(movement_cost(&zero, &old, &new).unwrap(), 0.0);

        let short = FractionalState::from_map(BTreeMap::from([(a, 1.0)]));
        assert!(matches!(movement_cost(&t, &old, &short), Err(Error::TopologyMismatch(_))));
    }

    #[test]
    fn repair_rescales_and_clamps() {
        let (t, mut x, a, b) = star_state();
        x.set(a, 0.5 + 1e-7);
        x.set(b, -1e-13);
        let residual = x.repair(&t).unwrap();
        assert!(residual > 0.0);
        assert_eq!(x.mass(b), 0.0);
        assert_eq!(x.mass(a), 1.0);
        assert!(x.validate(&t, 1e-15).is_empty());

        x.set(b, -1e-3);
        assert!(matches!(x.repair(&t), Err(Error::IntegrationFailure(_))));
    }
}
