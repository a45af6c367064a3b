//! Tree-structured solve for the Lagrange multipliers of the mirror-descent flow.
//!
//! The velocity of every non-root node is
//!
//! ```text
//! x'_u = A_u + M_u·(λ_{p_u} − λ_u),   M_u = (x_u + δ_u) / w̃_u,
//! ```
//!
//! with `A_u = −2·x_u·g / w̃_u` at the driven leaf (growth rate `g`) and zero
//! elsewhere, `λ = 0` on leaves, and conservation `Σ_children x'_v = x'_u` at
//! every internal node, plus `x'_{c_r} = 0` at the root. Eliminating bottom-up
//! writes each subtree's inflow as `α_u + β_u·λ_{p_u}` and each internal
//! multiplier as `a_u + b_u·λ_{p_u}`; a top-down pass then recovers everything.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::state::FractionalState;
use crate::tree::{EvolvingTree, NodeId, RevisedWeights, ShiftVector};

/// `λ_u` for every node, root included. Leaves carry exactly zero.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiplierVector(pub BTreeMap<NodeId, f64>);

impl MultiplierVector {
    pub fn get(&self, u: NodeId) -> Option<f64> {
        self.0.get(&u).copied()
    }

    /// Smallest multiplier over non-leaf nodes, or `+∞` if there are none.
    pub fn min_internal(&self, tree: &EvolvingTree) -> f64 {
        self.0
            .iter()
            .filter(|(u, _)| !tree.is_leaf(**u))
            .map(|(_, v)| *v)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Which leaf is pushed, and how fast its revised weight grows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Drive {
    pub leaf: NodeId,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiplierSolution {
    pub lambda: MultiplierVector,
    /// `x'_u` for every non-root node.
    pub velocity: BTreeMap<NodeId, f64>,
}

/// Multipliers for a continuous step growing `growing_leaf` at unit true rate.
pub fn solve_multipliers(
    tree: &EvolvingTree,
    revised: &RevisedWeights,
    shift: &ShiftVector,
    x: &FractionalState,
    growing_leaf: NodeId,
) -> Result<MultiplierVector> {
    if !tree.contains(growing_leaf) || !tree.is_leaf(growing_leaf) {
        return Err(Error::InvalidNode(growing_leaf, "the growing node must be a leaf".into()));
    }
    let drive = Drive { leaf: growing_leaf, rate: tree.revised_growth_rate(growing_leaf) };
    Ok(solve_driven(tree, revised, shift, x, drive)?.lambda)
}

/// Multipliers and velocities for an arbitrary drive rate.
pub fn solve_driven(
    tree: &EvolvingTree,
    revised: &RevisedWeights,
    shift: &ShiftVector,
    x: &FractionalState,
    drive: Drive,
) -> Result<MultiplierSolution> {
    let frame = Frame::with_overrides(tree, revised, shift)?;
    let xd = frame.dense(x)?;
    let leaf = frame.pos(drive.leaf)?;
    if !frame.is_leaf(leaf) {
        return Err(Error::InvalidNode(drive.leaf, "the driven node must be a leaf".into()));
    }
    let mut ws = Workspace::new(frame.len());
    ws.solve(&frame, &xd, leaf, drive.rate)?;
    let lambda = MultiplierVector((0..frame.len()).map(|i| (frame.ids[i], ws.lambda[i])).collect());
    let velocity = (1..frame.len()).map(|i| (frame.ids[i], ws.velocity[i])).collect();
    Ok(MultiplierSolution { lambda, velocity })
}

/// Scratch buffers for repeated solves on one frame.
#[derive(Clone, Debug)]
pub(crate) struct Workspace {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    pub lambda: Vec<f64>,
    pub velocity: Vec<f64>,
}

impl Workspace {
    pub fn new(n: usize) -> Self {
        Self {
            alpha: vec![0.0; n],
            beta: vec![0.0; n],
            a: vec![0.0; n],
            b: vec![0.0; n],
            lambda: vec![0.0; n],
            velocity: vec![0.0; n],
        }
    }

    /// Solve on dense state `x` with the leaf at position `leaf` driven at `rate`.
    pub fn solve(&mut self, f: &Frame, x: &[f64], leaf: usize, rate: f64) -> Result<()> {
        let n = f.len();
        if self.lambda.len() != n {
            *self = Self::new(n);
        }
        for i in (1..n).rev() {
            let m = (x[i] + f.shift[i]) / f.revised[i];
            let drive = if i == leaf { -2.0 * x[i] * rate / f.revised[i] } else { 0.0 };
            if f.children[i].is_empty() {
                self.alpha[i] = drive;
                self.beta[i] = m;
                self.a[i] = 0.0;
                self.b[i] = 0.0;
                continue;
            }
            let (mut sa, mut sb) = (0.0, 0.0);
            for &c in &f.children[i] {
                sa += self.alpha[c];
                sb += self.beta[c];
            }
            if !(sb > 0.0 && m > 0.0) {
                return Err(Error::Internal(format!("degenerate elimination at {}", f.ids[i])));
            }
            let b = 1.0 / (1.0 + sb / m);
            let one_minus_b = 1.0 / (1.0 + m / sb);
            self.a[i] = (drive - sa) / (sb + m);
            self.b[i] = b;
            self.alpha[i] = sa * b + drive * one_minus_b;
            self.beta[i] = 1.0 / (1.0 / sb + 1.0 / m);
        }
        let top = f.children[0][0];
        if !(self.beta[top] > 0.0) {
            return Err(Error::Internal("degenerate elimination at the root".into()));
        }
        self.lambda[0] = -self.alpha[top] / self.beta[top];
        self.velocity[0] = 0.0;
        for i in 1..n {
            let lp = self.lambda[f.parent[i]];
            self.velocity[i] = self.alpha[i] + self.beta[i] * lp;
            self.lambda[i] = if f.children[i].is_empty() { 0.0 } else { self.a[i] + self.b[i] * lp };
        }
        // The root constraint pins x_{c_r}; its velocity is zero up to rounding.
        self.velocity[top] = 0.0;
        Ok(())
    }
}
