#![allow(dead_code)]

use std::collections::BTreeMap;

use lgt::tree::{RevisedWeights, ShiftVector};
use lgt::{EvolvingTree, FractionalState, NodeId};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random tree with at most `max_nodes` nodes (root included), built from
/// forks and growth steps.
pub fn random_tree(k: u32, max_nodes: usize, seed: u64) -> EvolvingTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = EvolvingTree::new(k, rng.gen_range(0.1..2.0)).unwrap();
    let target = rng.gen_range(2..=max_nodes);
    for _ in 0..200 {
        let leaves: Vec<NodeId> = t.leaves().into_iter().filter(|&l| t.depth(l) < k).collect();
        if leaves.is_empty() || t.len() + 2 > target {
            break;
        }
        let leaf = leaves[rng.gen_range(0..leaves.len())];
        if rng.gen_bool(0.3) {
            t.grow(leaf, rng.gen_range(0.0..3.0)).unwrap();
            continue;
        }
        let q = rng.gen_range(2..=4).min(target - t.len());
        if q >= 2 {
            t.fork(leaf, q).unwrap();
        }
    }
    for leaf in t.leaves() {
        if rng.gen_bool(0.5) {
            t.add_weight(leaf, rng.gen_range(0.0..2.0)).unwrap();
        }
    }
    t
}

/// Random point of the polytope: mass split top-down with random shares,
/// some of them zero.
pub fn random_state(t: &EvolvingTree, seed: u64) -> FractionalState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mass = BTreeMap::new();
    mass.insert(t.top(), 1.0);
    for u in t.preorder().into_iter().skip(1) {
        let kids = t.children(u);
        if kids.is_empty() {
            continue;
        }
        let shares: Vec<f64> =
            kids.iter().map(|_| if rng.gen_bool(0.15) { 0.0 } else { rng.gen_range(0.01..1.0) }).collect();
        let total: f64 = shares.iter().sum();
        let xu = mass[&u];
        for (i, &c) in kids.iter().enumerate() {
            let share = if total > 0.0 { shares[i] / total } else { 1.0 / kids.len() as f64 };
            mass.insert(c, xu * share);
        }
    }
    FractionalState::from_map(mass)
}

pub fn random_revised(t: &EvolvingTree, seed: u64) -> RevisedWeights {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RevisedWeights(t.non_root_ids().map(|u| (u, rng.gen_range(0.05..10.0))).collect())
}

/// Multipliers from one dense solve of the full system: for every internal
/// node `u` (root included), `Σ_children x'_c − x'_u = 0` with
/// `x'_v = A_v + M_v·(λ_{p_v} − λ_v)`, `λ = 0` on leaves and `x'_root = 0`.
pub fn dense_multipliers(
    t: &EvolvingTree,
    revised: &RevisedWeights,
    shift: &ShiftVector,
    x: &FractionalState,
    leaf: NodeId,
    rate: f64,
) -> BTreeMap<NodeId, f64> {
    let internal: Vec<NodeId> = t.preorder().into_iter().filter(|&u| !t.is_leaf(u)).collect();
    let col: BTreeMap<NodeId, usize> = internal.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let n = internal.len();
    let m = |v: NodeId| (x.mass(v) + shift.get(v).unwrap()) / revised.get(v).unwrap();
    let a = |v: NodeId| if v == leaf { -2.0 * x.mass(v) * rate / revised.get(v).unwrap() } else { 0.0 };
    let mut mat = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for (row, &u) in internal.iter().enumerate() {
        // + Σ_c [A_c + M_c (λ_u − λ_c)]
        for &c in t.children(u) {
            rhs[row] -= a(c);
            mat[(row, col[&u])] += m(c);
            if let Some(&j) = col.get(&c) {
                mat[(row, j)] -= m(c);
            }
        }
        // − [A_u + M_u (λ_p − λ_u)]
        if let Some(p) = t.parent(u) {
            rhs[row] += a(u);
            mat[(row, col[&p])] -= m(u);
            mat[(row, col[&u])] += m(u);
        }
    }
    let sol = mat.lu().solve(&rhs).expect("nonsingular system");
    let mut out: BTreeMap<NodeId, f64> = t.preorder().into_iter().map(|u| (u, 0.0)).collect();
    for (i, &u) in internal.iter().enumerate() {
        out.insert(u, sol[i]);
    }
    out
}
