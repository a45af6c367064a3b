//! Flat, position-indexed view of a tree for the numerical kernels.
//!
//! Positions follow preorder, so position 0 is the root, position 1 is `c_r`,
//! and every parent precedes its children. Reverse iteration is bottom-up.

use crate::error::{Error, Result};
use crate::state::FractionalState;
use crate::tree::{EvolvingTree, NodeId, RevisedWeights, ShiftVector};

pub(crate) const NO_PARENT: usize = usize::MAX;

#[derive(Clone, Debug)]
pub(crate) struct Frame {
    pub ids: Vec<NodeId>,
    pub pos_of: Vec<usize>,
    pub parent: Vec<usize>,
    pub children: Vec<Vec<usize>>,
    pub depth: Vec<u32>,
    pub weight: Vec<f64>,
    pub revised: Vec<f64>,
    pub shift: Vec<f64>,
    pub k: u32,
    pub d_max: u32,
}

impl Frame {
    pub fn new(tree: &EvolvingTree) -> Self {
        let ids = tree.preorder();
        let mut pos_of = vec![NO_PARENT; tree.id_bound()];
        for (i, u) in ids.iter().enumerate() {
            pos_of[u.index()] = i;
        }
        let parent = ids
            .iter()
            .map(|&u| tree.parent(u).map_or(NO_PARENT, |p| pos_of[p.index()]))
            .collect();
        let children = ids
            .iter()
            .map(|&u| tree.children(u).iter().map(|c| pos_of[c.index()]).collect())
            .collect();
        let depth = ids.iter().map(|&u| tree.depth(u)).collect();
        let weight = ids.iter().map(|&u| tree.weight(u)).collect();
        let revised = ids
            .iter()
            .map(|&u| if u == NodeId::ROOT { f64::NAN } else { tree.revised_weight(u).expect("live node") })
            .collect();
        let mut shift = vec![1.0; ids.len()];
        for i in 2..ids.len() {
            let p = pos_of[tree.parent(ids[i]).expect("non-root").index()];
            shift[i] = shift[p] / tree.children(ids[p]).len() as f64;
        }
        Self { ids, pos_of, parent, children, depth, weight, revised, shift, k: tree.k(), d_max: tree.d_max() }
    }

    /// Frame with caller-supplied revised weights and shifts.
    pub fn with_overrides(tree: &EvolvingTree, revised: &RevisedWeights, shift: &ShiftVector) -> Result<Self> {
        let mut f = Self::new(tree);
        for i in 1..f.ids.len() {
            let u = f.ids[i];
            f.revised[i] = revised
                .get(u)
                .ok_or_else(|| Error::Input(format!("no revised weight for {u}")))?;
            f.shift[i] = shift.get(u).ok_or_else(|| Error::Input(format!("no shift for {u}")))?;
            if !(f.revised[i] > 0.0 && f.shift[i] > 0.0) {
                return Err(Error::Input(format!("revised weight and shift of {u} must be positive")));
            }
        }
        Ok(f)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn pos(&self, u: NodeId) -> Result<usize> {
        match self.pos_of.get(u.index()) {
            Some(&p) if p != NO_PARENT => Ok(p),
            _ => Err(Error::InvalidNode(u, "not in the tree".into())),
        }
    }

    pub fn is_leaf(&self, i: usize) -> bool {
        i != 0 && self.children[i].is_empty()
    }

    /// Dense copy of `x` in frame order, with the root at 1.
    pub fn dense(&self, x: &FractionalState) -> Result<Vec<f64>> {
        let mut out = vec![1.0; self.len()];
        for i in 1..self.len() {
            out[i] = x
                .get(self.ids[i])
                .ok_or_else(|| Error::TopologyMismatch(format!("state has no coordinate for {}", self.ids[i])))?;
        }
        if x.len() != self.len() - 1 {
            return Err(Error::TopologyMismatch("state has coordinates outside the tree".into()));
        }
        Ok(out)
    }

    pub fn sparse(&self, x: &[f64]) -> FractionalState {
        FractionalState::from_map((1..self.len()).map(|i| (self.ids[i], x[i])).collect())
    }

    /// Clamp and rescale in place; returns the pre-repair conservation residual.
    pub fn repair(&self, x: &mut [f64]) -> Result<f64> {
        let ids: Vec<usize> = (0..self.len()).collect();
        crate::state::repair_dense(&ids, &self.children, x)
    }

    /// Largest conservation residual, root constraint included.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let mut r: f64 = 0.0;
        for i in 0..self.len() {
            if self.children[i].is_empty() {
                continue;
            }
            let s: f64 = self.children[i].iter().map(|&c| x[c]).sum();
            let target = if i == 0 { 1.0 } else { x[i] };
            r = r.max((s - target).abs());
        }
        r
    }
}
