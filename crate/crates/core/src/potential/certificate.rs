//! Per-step certificate checks over a recorded game.

use serde::{Deserialize, Serialize};

use crate::dynamics::game::{GameTrace, StepDetail, StepRecord};
use crate::dynamics::multipliers::Workspace;
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::potential::lineage::OptimalPlay;
use crate::potential::value::{dense_indicator, eval_potential, log_ratio, rates_dense, PathIndicator};
use crate::state::FractionalState;
use crate::tree::{EvolvingTree, NodeId};

/// Relative tolerance for continuous-step checks.
pub const CONTINUOUS_TOL: f64 = 1e-6;
/// Absolute tolerance for fork and merge checks.
pub const DISCRETE_TOL: f64 = 1e-9;
/// Absolute tolerance for deadend checks.
pub const DEADEND_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// `ΔC + ΔP ≤ 16k(2 + k·ln d_max)·Δw_ℓ·y_ℓ` over a continuous step.
    GrowthStep,
    /// `C' ≤ 3·w̃'_ℓ·x_ℓ + 2·Σ (x+δ)·λ` at a sample.
    CostRate,
    /// `−k·w̃'_ℓ·x_ℓ + Σ λ·(x+δ) ≤ Ψ'` at a sample.
    DepthRate,
    /// `D' ≤ −w̃'_ℓ·x_ℓ + 2(2 + k·ln d_max)·y_ℓ·w̃'_ℓ` at a sample.
    DivergenceRate,
    /// `ΔP ≤ ε·2^(−j+2)·(2k + 4k²·ln d_max)` over a fork.
    Fork,
    /// `ΔP + movement ≤ 0` over a deadend.
    Deadend,
    /// `ΔP ≤ 0` over a merge.
    Merge,
}

/// One inequality `lhs ≤ rhs`, checked with tolerance `tol`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateEntry {
    pub step: usize,
    pub check: Check,
    /// Time within the step for sampled checks.
    pub instant: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub tol: f64,
}

impl CertificateEntry {
    fn new(step: usize, check: Check, instant: Option<f64>, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self { step, check, instant, lhs, rhs, slack: rhs - lhs, tol }
    }

    pub fn passed(&self) -> bool {
        self.slack >= -self.tol
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub entries: Vec<CertificateEntry>,
    /// Largest `lhs − rhs` over all entries, floored at zero.
    pub max_violation: f64,
    pub failures: usize,
    /// Potential at the start and end of the game.
    pub initial_potential: f64,
    pub final_potential: f64,
    /// Sum of the fork right-hand sides.
    pub fork_allowance: f64,
    /// `Σ Δw_ℓ·y_ℓ` over continuous steps; equals the offline optimum.
    pub opt_service: f64,
    pub opt: f64,
    pub d_max: u32,
    pub total_cost: f64,
    /// `16k(2 + k·ln d_max)·(OPT + ε) + P₀ + fork_allowance`.
    pub end_to_end_bound: f64,
}

impl CertificateReport {
    pub fn all_passed(&self) -> bool {
        self.failures == 0 && self.total_cost <= self.end_to_end_bound
    }

    pub fn failed(&self) -> impl Iterator<Item = &CertificateEntry> {
        self.entries.iter().filter(|e| !e.passed())
    }
}

/// `16k(2 + k·ln d)`.
pub fn growth_constant(k: u32, d_max: u32) -> f64 {
    let k = f64::from(k);
    16.0 * k * (2.0 + k * f64::from(d_max).ln())
}

/// `ε·2^(−j+2)·(2k + 4k²·ln d)`.
pub fn fork_allowance(k: u32, epsilon: f64, step: u64, d_max: u32) -> f64 {
    let k = f64::from(k);
    epsilon * (2.0 - step as f64).exp2() * (2.0 * k + 4.0 * k * k * f64::from(d_max).ln())
}

/// Check every step of `trace` against the optimal play `y`.
pub fn certificate_report(trace: &GameTrace, y: &OptimalPlay) -> Result<CertificateReport> {
    if y.per_step.len() != trace.records.len() + 1 {
        return Err(Error::Input(format!(
            "optimal play covers {} states but the trace has {} steps",
            y.per_step.len(),
            trace.records.len()
        )));
    }
    let (k, eps) = (trace.script.k, trace.script.epsilon);
    let mut report = CertificateReport::default();
    let start = EvolvingTree::new(k, eps)?;
    report.initial_potential = eval_potential(&start, &FractionalState::init(&start)?, &y.per_step[0])?.p;

    for rec in &trace.records {
        let before = EvolvingTree::from_snapshot(&rec.tree_before)?;
        let after = EvolvingTree::from_snapshot(&rec.tree_after)?;
        let y0 = y.before(rec.index);
        let y1 = y.after(rec.index);
        let p0 = eval_potential(&before, &rec.x_before, y0).map_err(mismatch)?.p;
        match &rec.detail {
            StepDetail::Grow { leaf, duration, samples } => {
                let p1 = eval_potential(&after, &rec.x_after, y0).map_err(mismatch)?.p;
                let y_leaf = y0.value(*leaf);
                let rhs = growth_constant(k, before.d_max()) * duration * y_leaf;
                let lhs = rec.service + rec.movement + p1 - p0;
                report.entries.push(CertificateEntry::new(
                    rec.index,
                    Check::GrowthStep,
                    None,
                    lhs,
                    rhs,
                    CONTINUOUS_TOL * (1.0 + rhs.abs()),
                ));
                report.opt_service += duration * y_leaf;
                for s in samples {
                    sample_checks(&mut report, rec, &before, *leaf, s, y0)?;
                }
            }
            StepDetail::Fork { .. } => {
                let p1 = eval_potential(&after, &rec.x_after, y1).map_err(mismatch)?.p;
                let rhs = fork_allowance(k, eps, rec.step_number, after.d_max());
                report.fork_allowance += rhs;
                report.entries.push(CertificateEntry::new(rec.index, Check::Fork, None, p1 - p0, rhs, DISCRETE_TOL));
            }
            StepDetail::Delete { leaf, detached_tree, detached_state, merge } => {
                if y0.contains(*leaf) {
                    return Err(Error::Input(format!("optimal play sits on deleted leaf {leaf}")));
                }
                let mid = EvolvingTree::from_detached_snapshot(detached_tree)?;
                let p_mid = eval_potential(&mid, detached_state, y0).map_err(mismatch)?.p;
                report.entries.push(CertificateEntry::new(
                    rec.index,
                    Check::Deadend,
                    None,
                    p_mid - p0 + rec.movement,
                    0.0,
                    DEADEND_TOL,
                ));
                if merge.is_some() {
                    let p1 = eval_potential(&after, &rec.x_after, y1).map_err(mismatch)?.p;
                    report.entries.push(CertificateEntry::new(rec.index, Check::Merge, None, p1 - p_mid, 0.0, DISCRETE_TOL));
                }
            }
        }
    }

    let last = EvolvingTree::from_snapshot(&trace.final_tree)?;
    report.final_potential = eval_potential(&last, &trace.final_state, y.per_step.last().expect("nonempty"))?.p;
    report.opt = y.opt;
    report.d_max = last.d_max();
    report.total_cost = trace.total_cost();
    report.end_to_end_bound =
        growth_constant(k, report.d_max) * (y.opt + eps) + report.initial_potential + report.fork_allowance;
    report.failures = report.entries.iter().filter(|e| !e.passed()).count();
    report.max_violation = report.entries.iter().map(|e| e.lhs - e.rhs).fold(0.0, f64::max);
    Ok(report)
}

fn mismatch(e: Error) -> Error {
    Error::Input(format!("trace and optimal play do not match: {e}"))
}

fn sample_checks(
    report: &mut CertificateReport,
    rec: &StepRecord,
    before: &EvolvingTree,
    leaf: NodeId,
    s: &crate::dynamics::integrate::Sample,
    y: &PathIndicator,
) -> Result<()> {
    let mut tree = before.clone();
    tree.add_weight(leaf, s.leaf_weight - before.weight(leaf))?;
    let frame = Frame::new(&tree);
    let x = frame.dense(&s.x)?;
    let yd = dense_indicator(&frame, y).map_err(mismatch)?;
    let l = frame.pos(leaf)?;
    let g = tree.revised_growth_rate(leaf);
    let mut ws = Workspace::new(frame.len());
    ws.solve(&frame, &x, l, g)?;
    let r = rates_dense(&frame, &x, &yd, l, g, &ws.lambda, &ws.velocity);
    let at = Some(s.t);
    let tol = |rhs: f64| CONTINUOUS_TOL * (1.0 + rhs.abs());
    report.entries.push(CertificateEntry::new(rec.index, Check::CostRate, at, r.cost, r.cost_bound, tol(r.cost_bound)));
    report.entries.push(CertificateEntry::new(rec.index, Check::DepthRate, at, r.psi_bound, r.psi, tol(r.psi)));
    report.entries.push(CertificateEntry::new(rec.index, Check::DivergenceRate, at, r.d, r.d_bound, tol(r.d_bound)));
    Ok(())
}

/// Outcome of comparing the analytic `P'` with central differences.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FiniteDiffReport {
    pub checked: usize,
    /// Largest `|numeric − analytic| / (1 + |analytic|)`.
    pub max_deviation: f64,
}

/// Central-difference check of `P'` at interior samples of every continuous
/// step. Each node's term is probed along the flow, `x_u ± h_u·x'_u` (and the
/// leaf weight at `t ± h_u`), with `h_u` equal to `rel_h·(x_u + δ_u)/|x'_u|`.
pub fn finite_diff_check(trace: &GameTrace, y: &OptimalPlay, rel_h: f64) -> Result<FiniteDiffReport> {
    if y.per_step.len() != trace.records.len() + 1 {
        return Err(Error::Input("optimal play does not match the trace".into()));
    }
    let mut out = FiniteDiffReport::default();
    for rec in &trace.records {
        let StepDetail::Grow { leaf, duration, samples } = &rec.detail else {
            continue;
        };
        let before = EvolvingTree::from_snapshot(&rec.tree_before)?;
        for s in samples.iter().filter(|s| s.t > 0.0 && s.t < *duration) {
            let mut tree = before.clone();
            tree.add_weight(*leaf, s.leaf_weight - before.weight(*leaf))?;
            let frame = Frame::new(&tree);
            let x = frame.dense(&s.x)?;
            let yd = dense_indicator(&frame, y.before(rec.index)).map_err(mismatch)?;
            let l = frame.pos(*leaf)?;
            let g = tree.revised_growth_rate(*leaf);
            let mut ws = Workspace::new(frame.len());
            ws.solve(&frame, &x, l, g)?;
            let analytic = rates_dense(&frame, &x, &yd, l, g, &ws.lambda, &ws.velocity).p;

            // P is a sum of per-node terms, so each term gets its own step
            // scaled to its coordinate.
            let k = f64::from(frame.k);
            let term = |i: usize, xi: f64, w: f64| {
                let lg = if yd[i] != 0.0 { yd[i] * log_ratio(xi, frame.shift[i]) } else { 0.0 };
                2.0 * w * (4.0 * k * lg + (2.0 * k - f64::from(frame.depth[i])) * xi)
            };
            let mut numeric = 0.0;
            for i in 1..frame.len() {
                let v = ws.velocity[i];
                let dw = if i == l { g } else { 0.0 };
                if v == 0.0 && dw == 0.0 {
                    continue;
                }
                let mut h = rel_h * (x[i] + frame.shift[i]) / v.abs();
                if i == l {
                    h = h.min(rel_h * frame.revised[i] / g);
                }
                let w = frame.revised[i];
                let hi = term(i, x[i] + h * v, w + h * dw);
                let lo = term(i, x[i] - h * v, w - h * dw);
                numeric += (hi - lo) / (2.0 * h);
            }
            out.checked += 1;
            let dev = (numeric - analytic).abs() / (1.0 + analytic.abs());
            out.max_deviation = out.max_deviation.max(dev);
        }
    }
    Ok(out)
}
