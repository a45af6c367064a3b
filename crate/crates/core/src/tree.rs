//! The evolving rooted tree on which the game is played.
//!
//! The root `r` always has exactly one child `c_r` (the *top* node). Every
//! other internal node has at least two children, and the combinatorial depth
//! of every node is bounded by `k`. The adversary mutates the tree by growing
//! leaf edges, forking leaves, and deleting leaves; a deletion that leaves a
//! parent with a single child smooths the parent away by merging its two
//! incident edges.
//!
//! Node storage is index based. Ids are handed out in creation order and are
//! never reused, so an id in a trace or script refers to the same node for
//! the whole game.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible value of the `ε·2^(−j)` slack term. Beyond this the
/// revised weight of a zero-weight edge would drift into subnormal range.
const MIN_SLACK: f64 = 1e-280;

/// Stable node identifier; equal to the node's creation-order index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    /// The root `r`.
    pub const ROOT: NodeId = NodeId(0);
    /// The initial child of the root. The top node may change after merges.
    pub const INITIAL_TOP: NodeId = NodeId(1);

    pub const fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Node {
    parent: Option<NodeId>,
    children: Vec<NodeId>,
    weight: f64,
    created: u64,
    depth: u32,
}

/// A merge performed while smoothing the tree after a deletion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Merge {
    /// The degree-2 node that disappeared.
    pub removed: NodeId,
    /// Its only remaining child, which now hangs off the removed node's parent.
    pub survivor: NodeId,
}

/// Result of [`EvolvingTree::delete_leaf`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeleteOutcome {
    pub deleted: NodeId,
    pub merged: Option<Merge>,
}

/// Revised edge weights `w̃_u` for every non-root node.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RevisedWeights(pub BTreeMap<NodeId, f64>);

impl RevisedWeights {
    pub fn get(&self, u: NodeId) -> Option<f64> {
        self.0.get(&u).copied()
    }
}

/// Shift parameters `δ_u`: a fixed interior point of the polytope.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ShiftVector(pub BTreeMap<NodeId, f64>);

impl ShiftVector {
    pub fn get(&self, u: NodeId) -> Option<f64> {
        self.0.get(&u).copied()
    }
}

/// Rooted, weighted, degree-2-free tree of depth at most `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct EvolvingTree {
    nodes: Vec<Option<Node>>,
    top: NodeId,
    k: u32,
    epsilon: f64,
    step: u64,
    d_max: u32,
}

impl EvolvingTree {
    /// The two-node tree `r - c_r` joined by a zero-weight edge, at step 1.
    pub fn new(k: u32, epsilon: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!("depth bound k must be at least 2, got {k}")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive and finite, got {epsilon}")));
        }
        let root = Node { parent: None, children: vec![NodeId::INITIAL_TOP], weight: 0.0, created: 0, depth: 0 };
        let top = Node { parent: Some(NodeId::ROOT), children: Vec::new(), weight: 0.0, created: 0, depth: 1 };
        Ok(Self {
            nodes: vec![Some(root), Some(top)],
            top: NodeId::INITIAL_TOP,
            k,
            epsilon,
            step: 1,
            d_max: 1,
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Number of the adversary step about to be played (starts at 1).
    pub fn current_step(&self) -> u64 {
        self.step
    }

    /// Largest node degree observed at any point of the game so far.
    pub fn d_max(&self) -> u32 {
        self.d_max
    }

    pub fn root(&self) -> NodeId {
        NodeId::ROOT
    }

    /// The current child `c_r` of the root.
    pub fn top(&self) -> NodeId {
        self.top
    }

    /// Number of ids issued so far; every live id is below this.
    pub fn id_bound(&self) -> usize {
        self.nodes.len()
    }

    /// Number of live nodes, including the root.
    pub fn len(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, u: NodeId) -> bool {
        matches!(self.nodes.get(u.index()), Some(Some(_)))
    }

    fn node(&self, u: NodeId) -> &Node {
        self.nodes
            .get(u.index())
            .and_then(Option::as_ref)
            .unwrap_or_else(|| panic!("node {u} is not in the tree"))
    }

    fn node_mut(&mut self, u: NodeId) -> &mut Node {
        self.nodes
            .get_mut(u.index())
            .and_then(Option::as_mut)
            .unwrap_or_else(|| panic!("node {u} is not in the tree"))
    }

    fn require(&self, u: NodeId) -> Result<()> {
        if self.contains(u) {
            Ok(())
        } else {
            Err(Error::InvalidNode(u, "not in the tree".into()))
        }
    }

    // Accessors below panic on ids that are not live, like slice indexing.

    pub fn parent(&self, u: NodeId) -> Option<NodeId> {
        self.node(u).parent
    }

    pub fn children(&self, u: NodeId) -> &[NodeId] {
        &self.node(u).children
    }

    /// True weight `w_u` of the edge from `u` to its parent.
    pub fn weight(&self, u: NodeId) -> f64 {
        self.node(u).weight
    }

    /// Step `j_u` in which `u` was created (0 for the initial nodes).
    pub fn creation_step(&self, u: NodeId) -> u64 {
        self.node(u).created
    }

    /// Combinatorial depth `h_u`.
    pub fn depth(&self, u: NodeId) -> u32 {
        self.node(u).depth
    }

    pub fn degree(&self, u: NodeId) -> u32 {
        let n = self.node(u);
        n.children.len() as u32 + u32::from(n.parent.is_some())
    }

    pub fn is_leaf(&self, u: NodeId) -> bool {
        u != NodeId::ROOT && self.node(u).children.is_empty()
    }

    /// Live ids in preorder (parents before children), root first.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![NodeId::ROOT];
        while let Some(u) = stack.pop() {
            out.push(u);
            stack.extend(self.children(u).iter().rev().copied());
        }
        out
    }

    /// Live non-root ids in increasing order.
    pub fn non_root_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, n)| n.is_some())
            .map(|(i, _)| NodeId(i as u32))
    }

    /// Leaves in increasing id order.
    pub fn leaves(&self) -> Vec<NodeId> {
        self.non_root_ids().filter(|&u| self.is_leaf(u)).collect()
    }

    /// Ancestors of `u` from `u` itself up to (excluding) the root.
    pub fn path_to_root(&self, u: NodeId) -> Vec<NodeId> {
        let mut path = Vec::new();
        let mut cur = Some(u);
        while let Some(v) = cur {
            if v == NodeId::ROOT {
                break;
            }
            path.push(v);
            cur = self.parent(v);
        }
        path
    }

    /// Sum of true weights along the path from the root to `u`.
    pub fn root_distance(&self, u: NodeId) -> f64 {
        self.path_to_root(u).iter().map(|&v| self.weight(v)).sum()
    }

    /// Leaf with the lightest root path; ties go to the smallest id.
    pub fn opt_leaf(&self) -> (NodeId, f64) {
        let mut best = (self.top, f64::INFINITY);
        for leaf in self.leaves() {
            let d = self.root_distance(leaf);
            if d < best.1 {
                best = (leaf, d);
            }
        }
        best
    }

    /// Minimum root-to-leaf distance under the true weights.
    pub fn opt_distance(&self) -> f64 {
        self.opt_leaf().1
    }

    /// The `ε·2^(−j)` slack term for creation step `j`.
    pub fn slack_term(&self, created: u64) -> f64 {
        self.epsilon * (-(created as f64)).exp2()
    }

    /// The depth factor `(2k−1)/(2k−h)`, which lies in `[1, 2)` for `1 ≤ h ≤ k`.
    pub fn depth_factor(&self, depth: u32) -> f64 {
        let two_k = 2.0 * f64::from(self.k);
        (two_k - 1.0) / (two_k - f64::from(depth))
    }

    /// Revised weight `(2k−1)/(2k−h_u) · (w_u + ε·2^(−j_u))`.
    pub fn revised_weight(&self, u: NodeId) -> Result<f64> {
        self.require(u)?;
        if u == NodeId::ROOT {
            return Err(Error::InvalidNode(u, "the root has no edge weight".into()));
        }
        let n = self.node(u);
        Ok(self.depth_factor(n.depth) * (n.weight + self.slack_term(n.created)))
    }

    /// Rate `w̃'_u` at which the revised weight grows while `w_u` grows at unit rate.
    pub fn revised_growth_rate(&self, u: NodeId) -> f64 {
        self.depth_factor(self.depth(u))
    }

    pub fn revised_weights(&self) -> RevisedWeights {
        RevisedWeights(
            self.non_root_ids()
                .map(|u| (u, self.revised_weight(u).expect("live non-root node")))
                .collect(),
        )
    }

    /// Shift parameters: `δ_{c_r} = 1` and each child takes an equal share of its parent.
    pub fn shift_vector(&self) -> ShiftVector {
        let mut out = BTreeMap::new();
        for u in self.preorder().into_iter().skip(1) {
            let value = if u == self.top {
                1.0
            } else {
                let p = self.parent(u).expect("non-root node has a parent");
                out[&p] / self.children(p).len() as f64
            };
            out.insert(u, value);
        }
        ShiftVector(out)
    }

    fn advance_step(&mut self) -> Result<()> {
        let next = self.step + 1;
        if self.slack_term(next) < MIN_SLACK {
            return Err(Error::RejectedStep(format!(
                "step budget exhausted: epsilon * 2^-{next} underflows the revised weights"
            )));
        }
        self.step = next;
        Ok(())
    }

    fn check_step_budget(&self) -> Result<()> {
        if self.slack_term(self.step + 1) < MIN_SLACK {
            return Err(Error::RejectedStep(format!(
                "step budget exhausted at step {}",
                self.step
            )));
        }
        Ok(())
    }

    fn require_leaf(&self, leaf: NodeId) -> Result<()> {
        if !self.contains(leaf) {
            return Err(Error::RejectedStep(format!("{leaf} is not in the tree")));
        }
        if !self.is_leaf(leaf) {
            return Err(Error::RejectedStep(format!("{leaf} is not a leaf")));
        }
        Ok(())
    }

    /// Increase the weight of a leaf edge without touching the step counter.
    pub fn add_weight(&mut self, leaf: NodeId, amount: f64) -> Result<()> {
        self.require_leaf(leaf)?;
        if !(amount >= 0.0 && amount.is_finite()) {
            return Err(Error::RejectedStep(format!("weight increase must be nonnegative, got {amount}")));
        }
        self.node_mut(leaf).weight += amount;
        Ok(())
    }

    /// A continuous step in one shot: `w_leaf += duration`, then the step counter advances.
    pub fn grow(&mut self, leaf: NodeId, duration: f64) -> Result<()> {
        self.check_step_budget()?;
        self.add_weight(leaf, duration)?;
        self.advance_step()
    }

    /// Advance the step counter after a step assembled from the lower-level
    /// mutations ([`EvolvingTree::add_weight`], [`EvolvingTree::detach_leaf`],
    /// [`EvolvingTree::smooth`]).
    pub fn end_step(&mut self) -> Result<()> {
        self.advance_step()
    }

    /// Fail early if the next step would exhaust the step budget.
    pub fn ensure_step_available(&self) -> Result<()> {
        self.check_step_budget()
    }

    /// Attach `q ≥ 2` zero-weight children to a leaf of depth `< k`.
    ///
    /// The new nodes are stamped with the current step, which then advances.
    pub fn fork(&mut self, leaf: NodeId, q: usize) -> Result<Vec<NodeId>> {
        self.require_leaf(leaf)?;
        if q < 2 {
            return Err(Error::RejectedStep(format!("fork needs at least 2 children, got {q}")));
        }
        let depth = self.depth(leaf);
        if depth >= self.k {
            return Err(Error::RejectedStep(format!(
                "cannot fork {leaf} at depth {depth}: depth bound is {}",
                self.k
            )));
        }
        self.check_step_budget()?;
        let start = self.nodes.len() as u32;
        let ids: Vec<NodeId> = (start..start + q as u32).map(NodeId).collect();
        for _ in 0..q {
            self.nodes.push(Some(Node {
                parent: Some(leaf),
                children: Vec::new(),
                weight: 0.0,
                created: self.step,
                depth: depth + 1,
            }));
        }
        self.node_mut(leaf).children = ids.clone();
        self.d_max = self.d_max.max(q as u32 + 1);
        self.advance_step()?;
        Ok(ids)
    }

    /// Remove a leaf (not `c_r`) and its edge. Returns the parent if it is left
    /// with a single child and therefore has to be smoothed.
    ///
    /// Does not advance the step counter; see [`EvolvingTree::delete_leaf`].
    pub fn detach_leaf(&mut self, leaf: NodeId) -> Result<Option<NodeId>> {
        self.require_leaf(leaf)?;
        if leaf == self.top {
            return Err(Error::RejectedStep(format!("cannot delete the top node {leaf}")));
        }
        self.check_step_budget()?;
        let parent = self.parent(leaf).expect("non-top leaf has a parent");
        self.node_mut(parent).children.retain(|&c| c != leaf);
        self.nodes[leaf.index()] = None;
        if parent != NodeId::ROOT && self.children(parent).len() == 1 {
            Ok(Some(parent))
        } else {
            Ok(None)
        }
    }

    /// Merge the two edges around a non-root node that has exactly one child.
    ///
    /// The survivor keeps its own creation step; the removed node's `2^(−j)`
    /// slack term disappears with it. Depths in the survivor's subtree drop by one.
    pub fn smooth(&mut self, v: NodeId) -> Result<Merge> {
        self.require(v)?;
        if v == NodeId::ROOT || self.children(v).len() != 1 {
            return Err(Error::Internal(format!("{v} is not a degree-2 node")));
        }
        let survivor = self.children(v)[0];
        let grand = self.parent(v).expect("non-root node has a parent");
        let removed = self.nodes[v.index()].take().expect("checked above");

        let slot = self
            .node_mut(grand)
            .children
            .iter_mut()
            .find(|c| **c == v)
            .expect("parent lists its child");
        *slot = survivor;
        {
            let s = self.node_mut(survivor);
            s.parent = Some(grand);
            s.weight += removed.weight;
        }
        let mut stack = vec![survivor];
        while let Some(u) = stack.pop() {
            let n = self.node_mut(u);
            n.depth -= 1;
            stack.extend(n.children.iter().copied());
        }
        if self.top == v {
            self.top = survivor;
        }
        Ok(Merge { removed: v, survivor })
    }

    /// Delete step: detach the leaf, smooth its parent if needed, advance the step.
    pub fn delete_leaf(&mut self, leaf: NodeId) -> Result<DeleteOutcome> {
        let merge_at = self.detach_leaf(leaf)?;
        let merged = merge_at.map(|v| self.smooth(v)).transpose()?;
        self.advance_step()?;
        Ok(DeleteOutcome { deleted: leaf, merged })
    }

    /// Verify the structural invariants; used by tests and after replaying snapshots.
    pub fn check_invariants(&self) -> Result<()> {
        self.check_structure(false)
    }

    fn check_structure(&self, allow_unary: bool) -> Result<()> {
        let bad = |msg: String| Err(Error::Internal(msg));
        let root = self.node(NodeId::ROOT);
        if root.children.len() != 1 || root.children[0] != self.top {
            return bad(format!("root must have exactly the top node {} as child", self.top));
        }
        let mut seen = 0usize;
        for u in self.preorder() {
            seen += 1;
            let n = self.node(u);
            for &c in &n.children {
                if !self.contains(c) || self.parent(c) != Some(u) {
                    return bad(format!("parent link of {c} is broken"));
                }
                if self.depth(c) != n.depth + 1 {
                    return bad(format!("depth of {c} is inconsistent"));
                }
            }
            if u == NodeId::ROOT {
                continue;
            }
            if n.depth > self.k {
                return bad(format!("{u} exceeds the depth bound"));
            }
            if n.children.len() == 1 && !allow_unary {
                return bad(format!("{u} has exactly one child"));
            }
            if !(n.weight >= 0.0 && n.weight.is_finite()) {
                return bad(format!("{u} has invalid weight {}", n.weight));
            }
            if self.degree(u) > self.d_max {
                return bad(format!("{u} has degree above the recorded maximum"));
            }
        }
        if seen != self.len() {
            return bad("unreachable nodes in storage".into());
        }
        Ok(())
    }

    pub fn snapshot(&self) -> TreeSnapshot {
        fn build(tree: &EvolvingTree, u: NodeId) -> SnapshotNode {
            SnapshotNode {
                id: u,
                weight: tree.weight(u),
                creation_step: tree.creation_step(u),
                children: tree.children(u).iter().map(|&c| build(tree, c)).collect(),
            }
        }
        TreeSnapshot {
            k: self.k,
            epsilon: self.epsilon,
            step: self.step,
            d_max: self.d_max,
            next_id: self.nodes.len() as u32,
            root: build(self, NodeId::ROOT),
        }
    }

    pub fn from_snapshot(snap: &TreeSnapshot) -> Result<Self> {
        Self::load(snap, false)
    }

    /// Like [`EvolvingTree::from_snapshot`], but accepts the intermediate tree
    /// of a delete step, where the parent of the removed leaf may still have a
    /// single child.
    pub fn from_detached_snapshot(snap: &TreeSnapshot) -> Result<Self> {
        Self::load(snap, true)
    }

    fn load(snap: &TreeSnapshot, allow_unary: bool) -> Result<Self> {
        if snap.root.id != NodeId::ROOT || snap.root.children.len() != 1 {
            return Err(Error::Input("snapshot root must be node 0 with a single child".into()));
        }
        let mut nodes: Vec<Option<Node>> = vec![None; snap.next_id as usize];
        let mut stack = vec![(&snap.root, None::<NodeId>, 0u32)];
        while let Some((sn, parent, depth)) = stack.pop() {
            let slot = nodes
                .get_mut(sn.id.index())
                .ok_or_else(|| Error::Input(format!("id {} is beyond next_id", sn.id)))?;
            if slot.is_some() {
                return Err(Error::Input(format!("duplicate id {}", sn.id)));
            }
            *slot = Some(Node {
                parent,
                children: sn.children.iter().map(|c| c.id).collect(),
                weight: sn.weight,
                created: sn.creation_step,
                depth,
            });
            for c in &sn.children {
                stack.push((c, Some(sn.id), depth + 1));
            }
        }
        let tree = Self {
            nodes,
            top: snap.root.children[0].id,
            k: snap.k,
            epsilon: snap.epsilon,
            step: snap.step,
            d_max: snap.d_max,
        };
        tree.check_structure(allow_unary).map_err(|e| Error::Input(format!("snapshot violates tree invariants: {e}")))?;
        Ok(tree)
    }
}

/// Nested, serializable form of an [`EvolvingTree`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeSnapshot {
    pub k: u32,
    pub epsilon: f64,
    pub step: u64,
    pub d_max: u32,
    pub next_id: u32,
    pub root: SnapshotNode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotNode {
    pub id: NodeId,
    pub weight: f64,
    pub creation_step: u64,
    pub children: Vec<SnapshotNode>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star() -> (EvolvingTree, NodeId, NodeId) {
        let mut t = EvolvingTree::new(3, 1.0).unwrap();
        let kids = t.fork(t.top(), 2).unwrap();
        (t, kids[0], kids[1])
    }

    #[test]
    fn fresh_tree() {
        let t = EvolvingTree::new(3, 1.0).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.depth(t.top()), 1);
        assert_eq!(t.current_step(), 1);
        assert_eq!(t.revised_weight(t.top()).unwrap(), 1.0);
        assert_eq!(t.opt_distance(), 0.0);
        t.check_invariants().unwrap();

        let t = EvolvingTree::new(2, 0.5).unwrap();
        assert_eq!(t.revised_weight(t.top()).unwrap(), 0.5);
    }

    #[test]
    fn bad_parameters() {
        assert!(matches!(EvolvingTree::new(1, 1.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(EvolvingTree::new(3, 0.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(EvolvingTree::new(3, f64::NAN), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn fork_makes_leaves_and_halves_shift() {
        let (t, a, b) = star();
        assert_eq!(t.depth(a), 2);
        assert_eq!(t.depth(b), 2);
        assert_eq!(t.creation_step(a), 1);
        assert_eq!(t.current_step(), 2);
        let delta = t.shift_vector();
        assert_eq!(delta.get(a), Some(0.5));
        assert_eq!(delta.get(b), Some(0.5));
        assert_eq!(t.d_max(), 3);
        t.check_invariants().unwrap();
    }

    #[test]
    fn fork_rejections() {
        let mut t = EvolvingTree::new(2, 1.0).unwrap();
        let kids = t.fork(t.top(), 2).unwrap();
        assert!(matches!(t.fork(kids[0], 2), Err(Error::RejectedStep(_))), "depth bound");
        assert!(matches!(t.fork(t.top(), 2), Err(Error::RejectedStep(_))), "not a leaf");
        let mut t = EvolvingTree::new(3, 1.0).unwrap();
        assert!(matches!(t.fork(t.top(), 1), Err(Error::RejectedStep(_))));
    }

    #[test]
    fn fork_degree_tracking() {
        let (mut t, a, _) = star();
        t.fork(a, 3).unwrap();
        assert_eq!(t.degree(a), 4);
        assert!(t.d_max() >= 4);
    }

    #[test]
    fn revised_weight_substitution() {
        // k=2, h=2, w=1, j=3, eps=1 -> (3/2)(1 + 1/8)
        let mut t = EvolvingTree::new(2, 1.0).unwrap();
        t.grow(t.top(), 0.0).unwrap();
        t.grow(t.top(), 0.0).unwrap();
        assert_eq!(t.current_step(), 3);
        let kids = t.fork(t.top(), 2).unwrap();
        t.add_weight(kids[0], 1.0).unwrap();
        assert_eq!(t.creation_step(kids[0]), 3);
        assert!((t.revised_weight(kids[0]).unwrap() - 1.6875).abs() < 1e-15);
        assert!(matches!(t.revised_weight(NodeId::ROOT), Err(Error::InvalidNode(..))));
    }

    #[test]
    fn delete_with_merge_adds_weights() {
        let mut t2 = EvolvingTree::new(3, 1.0).unwrap();
        t2.grow(t2.top(), 1.0).unwrap();
        let kids = t2.fork(t2.top(), 2).unwrap();
        t2.grow(kids[1], 2.0).unwrap();
        let out = t2.delete_leaf(kids[0]).unwrap();
        assert_eq!(out.merged, Some(Merge { removed: NodeId::INITIAL_TOP, survivor: kids[1] }));
        assert_eq!(t2.top(), kids[1]);
        assert_eq!(t2.weight(kids[1]), 3.0);
        assert_eq!(t2.depth(kids[1]), 1);
        assert_eq!(t2.creation_step(kids[1]), 2, "survivor keeps its creation step");
        t2.check_invariants().unwrap();

        let (mut t, a, b) = star();
        let out = t.delete_leaf(a).unwrap();
        assert!(out.merged.is_some());
        assert_eq!(t.leaves(), vec![b]);
    }

    #[test]
    fn delete_without_merge() {
        let mut t = EvolvingTree::new(3, 1.0).unwrap();
        let kids = t.fork(t.top(), 3).unwrap();
        let out = t.delete_leaf(kids[1]).unwrap();
        assert_eq!(out.merged, None);
        assert_eq!(t.degree(t.top()), 3);
        let delta = t.shift_vector();
        assert_eq!(delta.get(kids[0]), Some(0.5), "divisor drops from 3 to 2");
        t.check_invariants().unwrap();
    }

    #[test]
    fn delete_rejections() {
        let (mut t, _, _) = star();
        assert!(matches!(t.delete_leaf(t.top()), Err(Error::RejectedStep(_))));
        let mut t = EvolvingTree::new(3, 1.0).unwrap();
        assert!(matches!(t.delete_leaf(t.top()), Err(Error::RejectedStep(_))));
    }

    #[test]
    fn opt_distance_min_path() {
        let mut t = EvolvingTree::new(3, 1.0).unwrap();
        t.grow(t.top(), 1.0).unwrap();
        let kids = t.fork(t.top(), 2).unwrap();
        t.grow(kids[0], 2.0).unwrap();
        t.grow(kids[1], 5.0).unwrap();
        assert_eq!(t.opt_leaf(), (kids[0], 3.0));
    }

    #[test]
    fn full_binary_shift() {
        let mut t = EvolvingTree::new(4, 1.0).unwrap();
        let mut frontier = vec![t.top()];
        for _ in 0..3 {
            let mut next = Vec::new();
            for u in frontier {
                next.extend(t.fork(u, 2).unwrap());
            }
            frontier = next;
        }
        let delta = t.shift_vector();
        for u in t.non_root_ids() {
            let h = t.depth(u) as i32;
            assert_eq!(delta.get(u).unwrap(), 2f64.powi(1 - h));
        }
    }

    #[test]
    fn snapshot_roundtrip() {
        let mut t = EvolvingTree::new(3, 0.25).unwrap();
        let kids = t.fork(t.top(), 3).unwrap();
        t.grow(kids[2], 1.5).unwrap();
        t.delete_leaf(kids[0]).unwrap();
        let snap = t.snapshot();
        let json = serde_json::to_string(&snap).unwrap();
        let back = EvolvingTree::from_snapshot(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, t);
    }
}
