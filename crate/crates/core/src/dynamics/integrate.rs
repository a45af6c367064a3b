//! Time stepping for continuous steps and for the deadend drain.

use serde::{Deserialize, Serialize};

use crate::dynamics::multipliers::{MultiplierVector, Workspace};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::state::FractionalState;
use crate::tree::{EvolvingTree, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Explicit Euler.
    Euler,
    /// Explicit trapezoidal predictor-corrector.
    Heun,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Per substep, no coordinate moves by more than this fraction of
    /// `x_u + δ_u` and the driven revised weight grows by at most this fraction.
    pub max_relative_step: f64,
    /// Smallest substep accepted before the integrator gives up.
    pub min_dt: f64,
    /// The drain stops once the dying leaf holds at most this much mass.
    pub drain_tolerance: f64,
    /// Largest conservation residual tolerated after repair.
    pub conservation_tol: f64,
    /// Record a trajectory sample every this many substeps.
    pub sample_every: usize,
    /// Substep cap per continuous step.
    pub max_substeps: usize,
    /// Cap on doublings of the virtual weight during a drain.
    pub max_drain_phases: usize,
    pub scheme: Scheme,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            max_relative_step: 1e-3,
            min_dt: 1e-300,
            drain_tolerance: 1e-10,
            conservation_tol: 1e-9,
            sample_every: 64,
            max_substeps: 10_000_000,
            max_drain_phases: 400,
            scheme: Scheme::Euler,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("max_relative_step", self.max_relative_step),
            ("min_dt", self.min_dt),
            ("drain_tolerance", self.drain_tolerance),
            ("conservation_tol", self.conservation_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_relative_step > 0.5 {
            return Err(Error::InvalidParameter("max_relative_step must be at most 0.5".into()));
        }
        if self.sample_every == 0 || self.max_substeps == 0 || self.max_drain_phases == 0 {
            return Err(Error::InvalidParameter("sample_every, max_substeps and max_drain_phases must be positive".into()));
        }
        Ok(())
    }
}

/// State of a continuous step at one instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Time since the start of the step.
    pub t: f64,
    /// True weight of the growing leaf at time `t`.
    pub leaf_weight: f64,
    pub x: FractionalState,
    pub lambda: MultiplierVector,
}

/// Numerical health of one step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub substeps: usize,
    /// Smallest multiplier at an internal node (root included) over all
    /// substeps; infinite if nothing was solved. Stored as `null` in JSON.
    #[serde(with = "infinite_as_null")]
    pub min_internal_lambda: f64,
    /// Largest conservation residual produced by a substep before repair.
    pub max_residual_before_repair: f64,
    /// Largest conservation residual after repair.
    pub max_residual: f64,
    pub drain_phases: usize,
}

impl Default for StepDiagnostics {
    fn default() -> Self {
        Self {
            substeps: 0,
            min_internal_lambda: f64::INFINITY,
            max_residual_before_repair: 0.0,
            max_residual: 0.0,
            drain_phases: 0,
        }
    }
}

impl StepDiagnostics {
    pub fn absorb(&mut self, other: &StepDiagnostics) {
        self.substeps += other.substeps;
        self.min_internal_lambda = self.min_internal_lambda.min(other.min_internal_lambda);
        self.max_residual_before_repair = self.max_residual_before_repair.max(other.max_residual_before_repair);
        self.max_residual = self.max_residual.max(other.max_residual);
        self.drain_phases += other.drain_phases;
    }
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthOutcome {
    pub service: f64,
    pub movement: f64,
    pub samples: Vec<Sample>,
    pub diagnostics: StepDiagnostics,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DrainOutcome {
    pub movement: f64,
    /// Mass left at the leaf when the flow stopped, before reassignment.
    pub residual: f64,
    pub diagnostics: StepDiagnostics,
}

/// How the driven leaf evolves along the integration variable.
trait LeafProfile {
    /// Revised weight and its rate of change at time `t`.
    fn revised(&self, t: f64) -> (f64, f64);
    /// True weight charged for the leaf's movement over `[t, t + dt]`.
    fn movement_weight(&self, t: f64, dt: f64) -> f64;
}

struct Growing {
    factor: f64,
    base: f64,
    slack: f64,
}

impl LeafProfile for Growing {
    fn revised(&self, t: f64) -> (f64, f64) {
        (self.factor * (self.base + t + self.slack), self.factor)
    }
    fn movement_weight(&self, t: f64, dt: f64) -> f64 {
        self.base + t + 0.5 * dt
    }
}

/// Virtual exponential growth `w̃(σ) = w̃_0·e^σ` with the true weight frozen.
struct Escalating {
    start: f64,
    weight: f64,
}

impl LeafProfile for Escalating {
    fn revised(&self, s: f64) -> (f64, f64) {
        let w = self.start * s.exp();
        (w, w)
    }
    fn movement_weight(&self, _: f64, _: f64) -> f64 {
        self.weight
    }
}

struct Flow<'a> {
    frame: Frame,
    leaf: usize,
    cfg: &'a IntegratorConfig,
    ws: Workspace,
    probe: Workspace,
    x: Vec<f64>,
    next: Vec<f64>,
    diag: StepDiagnostics,
}

struct Substep {
    dt: f64,
    leaf_before: f64,
    leaf_after: f64,
    movement: f64,
}

impl<'a> Flow<'a> {
    fn new(tree: &EvolvingTree, x: &FractionalState, leaf: NodeId, cfg: &'a IntegratorConfig) -> Result<Self> {
        let frame = Frame::new(tree);
        let xd = frame.dense(x)?;
        let pos = frame.pos(leaf)?;
        if !frame.is_leaf(pos) {
            return Err(Error::InvalidNode(leaf, "not a leaf".into()));
        }
        let n = frame.len();
        Ok(Self {
            frame,
            leaf: pos,
            cfg,
            ws: Workspace::new(n),
            probe: Workspace::new(n),
            next: xd.clone(),
            x: xd,
            diag: StepDiagnostics::default(),
        })
    }

    fn solve_at(&mut self, t: f64, profile: &impl LeafProfile) -> Result<()> {
        let (rev, rate) = profile.revised(t);
        self.frame.revised[self.leaf] = rev;
        self.ws.solve(&self.frame, &self.x, self.leaf, rate)?;
        for i in 0..self.frame.len() {
            if !self.frame.children[i].is_empty() {
                self.diag.min_internal_lambda = self.diag.min_internal_lambda.min(self.ws.lambda[i]);
            }
        }
        Ok(())
    }

    fn is_stationary(&self) -> bool {
        self.ws.velocity.iter().all(|&v| v == 0.0)
    }

    /// Largest admissible step for the velocities currently in `ws`: no
    /// coordinate and no revised leaf weight may move by more than the
    /// configured fraction, and no decreasing coordinate may more than halve.
    fn step_cap(&self, rate: f64) -> f64 {
        let mut dt = self.cfg.max_relative_step * self.frame.revised[self.leaf] / rate;
        for i in 1..self.frame.len() {
            let v = self.ws.velocity[i];
            if v == 0.0 {
                continue;
            }
            dt = dt.min(self.cfg.max_relative_step * (self.x[i] + self.frame.shift[i]) / v.abs());
            if v < 0.0 {
                dt = dt.min(0.5 * self.x[i] / -v);
            }
        }
        dt
    }

    /// Advance by at most `max_dt` from time `t`. Velocities for `t` must be in `ws`.
    fn advance(&mut self, t: f64, max_dt: f64, profile: &impl LeafProfile) -> Result<Substep> {
        let dt = self.step_cap(profile.revised(t).1).min(max_dt);
        if !(dt >= self.cfg.min_dt) {
            return Err(Error::IntegrationFailure(format!("step size collapsed to {dt:e} at t = {t}")));
        }
        let n = self.frame.len();
        for i in 0..n {
            self.next[i] = self.x[i] + dt * self.ws.velocity[i];
        }
        if self.cfg.scheme == Scheme::Heun {
            let (rev, rate) = profile.revised(t + dt);
            let saved = self.frame.revised[self.leaf];
            self.frame.revised[self.leaf] = rev;
            for v in self.next.iter_mut() {
                *v = v.max(0.0);
            }
            self.probe.solve(&self.frame, &self.next, self.leaf, rate)?;
            self.frame.revised[self.leaf] = saved;
            for i in 0..n {
                self.next[i] = self.x[i] + 0.5 * dt * (self.ws.velocity[i] + self.probe.velocity[i]);
            }
        }
        let before = self.frame.repair(&mut self.next)?;
        let after = self.frame.residual(&self.next);
        self.diag.max_residual_before_repair = self.diag.max_residual_before_repair.max(before);
        self.diag.max_residual = self.diag.max_residual.max(after);
        if after > self.cfg.conservation_tol {
            return Err(Error::IntegrationFailure(format!("conservation residual {after:e} after repair")));
        }
        let mut movement = 0.0;
        for i in 1..n {
            let w = if i == self.leaf { profile.movement_weight(t, dt) } else { self.frame.weight[i] };
            movement += w * (self.next[i] - self.x[i]).abs();
        }
        let step = Substep { dt, leaf_before: self.x[self.leaf], leaf_after: self.next[self.leaf], movement };
        std::mem::swap(&mut self.x, &mut self.next);
        self.diag.substeps += 1;
        Ok(step)
    }

    fn sample(&self, t: f64, leaf_weight: f64) -> Sample {
        Sample {
            t,
            leaf_weight,
            x: self.frame.sparse(&self.x),
            lambda: MultiplierVector((0..self.frame.len()).map(|i| (self.frame.ids[i], self.ws.lambda[i])).collect()),
        }
    }
}

/// Run a continuous step: grow `leaf` at unit rate for `duration` and let the
/// mass flow. On return `x` is the end state and `w_leaf` has increased by
/// `duration`; the step counter is left alone.
pub fn integrate_growth(
    tree: &mut EvolvingTree,
    x: &mut FractionalState,
    leaf: NodeId,
    duration: f64,
    cfg: &IntegratorConfig,
) -> Result<GrowthOutcome> {
    cfg.validate()?;
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(Error::RejectedStep(format!("growth duration must be nonnegative, got {duration}")));
    }
    if !tree.contains(leaf) || !tree.is_leaf(leaf) {
        return Err(Error::RejectedStep(format!("{leaf} is not a leaf")));
    }
    let mut flow = Flow::new(tree, x, leaf, cfg)?;
    let base = tree.weight(leaf);
    let profile = Growing {
        factor: tree.depth_factor(tree.depth(leaf)),
        base,
        slack: tree.slack_term(tree.creation_step(leaf)),
    };
    let mut out = GrowthOutcome { service: 0.0, movement: 0.0, samples: Vec::new(), diagnostics: StepDiagnostics::default() };
    let mut t = 0.0;
    let mut count = 0usize;
    while t < duration {
        flow.solve_at(t, &profile)?;
        if count.is_multiple_of(cfg.sample_every) {
            out.samples.push(flow.sample(t, base + t));
        }
        if flow.is_stationary() {
            // Nothing moves, so the leaf keeps its mass for the rest of the step.
            out.service += flow.x[flow.leaf] * (duration - t);
            break;
        }
        if count >= cfg.max_substeps {
            return Err(Error::IntegrationFailure(format!("substep cap {} reached at t = {t}", cfg.max_substeps)));
        }
        let s = flow.advance(t, duration - t, &profile)?;
        out.service += 0.5 * (s.leaf_before + s.leaf_after) * s.dt;
        out.movement += s.movement;
        t = if duration - t - s.dt <= 0.0 { duration } else { t + s.dt };
        count += 1;
    }
    if duration > 0.0 {
        flow.solve_at(duration, &profile)?;
        out.samples.push(flow.sample(duration, base + duration));
    }
    tree.add_weight(leaf, duration)?;
    *x = flow.frame.sparse(&flow.x);
    out.diagnostics = flow.diag;
    Ok(out)
}

/// Drain the mass of `leaf` by letting its revised weight escalate to
/// infinity while the true weight stays fixed. On return `x_leaf = 0`; the
/// tree is not modified.
pub fn deadend_drain(
    tree: &EvolvingTree,
    x: &mut FractionalState,
    leaf: NodeId,
    cfg: &IntegratorConfig,
) -> Result<DrainOutcome> {
    cfg.validate()?;
    if leaf == tree.top() || !tree.contains(leaf) || !tree.is_leaf(leaf) {
        return Err(Error::RejectedStep(format!("{leaf} is not a deletable leaf")));
    }
    let mut flow = Flow::new(tree, x, leaf, cfg)?;
    let l = flow.leaf;
    let profile = Escalating { start: tree.revised_weight(leaf)?, weight: tree.weight(leaf) };
    let mut out = DrainOutcome { movement: 0.0, residual: 0.0, diagnostics: StepDiagnostics::default() };
    let phase_len = std::f64::consts::LN_2;
    let horizon = phase_len * cfg.max_drain_phases as f64;
    let mut s = 0.0;
    while flow.x[l] > cfg.drain_tolerance {
        if s >= horizon || flow.diag.substeps >= cfg.max_substeps {
            return Err(Error::DrainFailure(format!(
                "{leaf} still holds {:e} after {} doublings",
                flow.x[l],
                (s / phase_len).ceil()
            )));
        }
        flow.solve_at(s, &profile)?;
        let step = flow.advance(s, horizon - s, &profile)?;
        out.movement += step.movement;
        s += step.dt;
    }
    flow.diag.drain_phases = (s / phase_len).ceil() as usize;

    out.residual = flow.x[l];
    if out.residual > 0.0 {
        let before = flow.x.clone();
        reassign(&flow.frame, &mut flow.x, l);
        for i in 1..flow.frame.len() {
            out.movement += flow.frame.weight[i] * (flow.x[i] - before[i]).abs();
        }
    }
    *x = flow.frame.sparse(&flow.x);
    out.diagnostics = flow.diag;
    Ok(out)
}

/// Move the remaining mass of `leaf` to its siblings in proportion to
/// `x + δ`, then push each increment down to the leaves the same way.
fn reassign(f: &Frame, x: &mut [f64], leaf: usize) {
    let r = x[leaf];
    x[leaf] = 0.0;
    let p = f.parent[leaf];
    let mut pending: Vec<(usize, f64)> = Vec::new();
    let spread = |kids: &[usize], amount: f64, x: &[f64], out: &mut Vec<(usize, f64)>| {
        let total: f64 = kids.iter().map(|&c| x[c] + f.shift[c]).sum();
        for &c in kids {
            out.push((c, amount * (x[c] + f.shift[c]) / total));
        }
    };
    let siblings: Vec<usize> = f.children[p].iter().copied().filter(|&c| c != leaf).collect();
    spread(&siblings, r, x, &mut pending);
    while let Some((u, amount)) = pending.pop() {
        if !f.children[u].is_empty() {
            spread(&f.children[u], amount, x, &mut pending);
        }
        x[u] += amount;
    }
}
