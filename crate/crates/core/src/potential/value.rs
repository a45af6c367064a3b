//! The potential `P = 4k·D − 2Ψ` and its time derivative along a continuous step.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dynamics::multipliers::Workspace;
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::state::FractionalState;
use crate::tree::{EvolvingTree, NodeId};

/// Indicator vector `y` of a root-to-leaf path, stored as the set of nodes on it.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PathIndicator(pub BTreeSet<NodeId>);

impl PathIndicator {
    /// The path from `leaf` up to, but excluding, the root.
    pub fn to_leaf(tree: &EvolvingTree, leaf: NodeId) -> Self {
        Self(tree.path_to_root(leaf).into_iter().collect())
    }

    pub fn value(&self, u: NodeId) -> f64 {
        if self.0.contains(&u) {
            1.0
        } else {
            0.0
        }
    }

    pub fn contains(&self, u: NodeId) -> bool {
        self.0.contains(&u)
    }

    /// `None` if the set is not exactly a root path ending at a leaf of `tree`.
    pub fn leaf(&self, tree: &EvolvingTree) -> Option<NodeId> {
        let leaf = *self.0.iter().find(|&&u| tree.contains(u) && tree.is_leaf(u))?;
        (Self::to_leaf(tree, leaf) == *self).then_some(leaf)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialValue {
    pub p: f64,
    pub d: f64,
    pub psi: f64,
}

/// `P`, `D` and `Ψ` for state `x` and optimal play `y` on `tree`.
pub fn eval_potential(tree: &EvolvingTree, x: &FractionalState, y: &PathIndicator) -> Result<PotentialValue> {
    let frame = Frame::new(tree);
    let xd = frame.dense(x)?;
    let yd = dense_indicator(&frame, y)?;
    Ok(eval_dense(&frame, &xd, &yd))
}

pub(crate) fn dense_indicator(frame: &Frame, y: &PathIndicator) -> Result<Vec<f64>> {
    let mut out = vec![0.0; frame.len()];
    for &u in &y.0 {
        out[frame.pos(u).map_err(|_| Error::Input(format!("optimal play uses {u}, which is not in the tree")))?] = 1.0;
    }
    Ok(out)
}

pub(crate) fn log_ratio(x: f64, delta: f64) -> f64 {
    ((1.0 + delta) / (x + delta)).ln()
}

pub(crate) fn eval_dense(f: &Frame, x: &[f64], y: &[f64]) -> PotentialValue {
    let k = f64::from(f.k);
    let (mut p, mut d, mut psi) = (0.0, 0.0, 0.0);
    for i in 1..f.len() {
        let w = f.revised[i];
        let h = f64::from(f.depth[i]);
        let lg = if y[i] != 0.0 { y[i] * log_ratio(x[i], f.shift[i]) } else { 0.0 };
        p += 2.0 * w * (4.0 * k * lg + (2.0 * k - h) * x[i]);
        d += w * (2.0 * lg + x[i]);
        psi += h * w * x[i];
    }
    PotentialValue { p, d, psi }
}

/// Instantaneous rates during a continuous step and the bounds they must satisfy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    /// Cost rate `C' = w'_ℓ·x_ℓ + Σ w_u·|x'_u|` under the true weights.
    pub cost: f64,
    /// `3·w̃'_ℓ·x_ℓ + 2·Σ (x_u + δ_u)·λ_u`, an upper bound on `cost`.
    pub cost_bound: f64,
    pub psi: f64,
    /// `−k·w̃'_ℓ·x_ℓ + Σ λ_u·(x_u + δ_u)`, a lower bound on `psi`.
    pub psi_bound: f64,
    pub d: f64,
    /// `−w̃'_ℓ·x_ℓ + 2·(2 + k·ln d_max)·y_ℓ·w̃'_ℓ`, an upper bound on `d`.
    pub d_bound: f64,
    /// `P' = 4k·D' − 2Ψ'`.
    pub p: f64,
}

/// Rates at the current instant of a continuous step growing `leaf` at unit
/// true rate. `tree` must carry the leaf weight of that instant.
pub fn rates(tree: &EvolvingTree, x: &FractionalState, y: &PathIndicator, leaf: NodeId) -> Result<Rates> {
    let frame = Frame::new(tree);
    let xd = frame.dense(x)?;
    let yd = dense_indicator(&frame, y)?;
    let l = frame.pos(leaf)?;
    if !frame.is_leaf(l) {
        return Err(Error::InvalidNode(leaf, "the growing node must be a leaf".into()));
    }
    let g = tree.revised_growth_rate(leaf);
    let mut ws = Workspace::new(frame.len());
    ws.solve(&frame, &xd, l, g)?;
    Ok(rates_dense(&frame, &xd, &yd, l, g, &ws.lambda, &ws.velocity))
}

pub(crate) fn rates_dense(f: &Frame, x: &[f64], y: &[f64], l: usize, g: f64, lambda: &[f64], v: &[f64]) -> Rates {
    let k = f64::from(f.k);
    let ln_d = f64::from(f.d_max).ln();
    let mut cost = x[l];
    let mut lam_mass = 0.0;
    let mut psi = f64::from(f.depth[l]) * g * x[l];
    let mut d = g * (2.0 * y[l] * log_ratio(x[l], f.shift[l]) + x[l]);
    for i in 1..f.len() {
        cost += f.weight[i] * v[i].abs();
        lam_mass += (x[i] + f.shift[i]) * lambda[i];
        psi += f64::from(f.depth[i]) * f.revised[i] * v[i];
        d += f.revised[i] * v[i] * (1.0 - 2.0 * y[i] / (x[i] + f.shift[i]));
    }
    Rates {
        cost,
        cost_bound: 3.0 * g * x[l] + 2.0 * lam_mass,
        psi,
        psi_bound: -k * g * x[l] + lam_mass,
        d,
        d_bound: -g * x[l] + 2.0 * (2.0 + k * ln_d) * y[l] * g,
        p: 4.0 * k * d - 2.0 * psi,
    }
}
