//! Batch experiments: generate instances, run the algorithm, check the
//! certificates and tabulate the results.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::game::{run_script, GameTrace};
use crate::dynamics::integrate::IntegratorConfig;
use crate::error::{Error, Result};
use crate::harness::generators::{gen_lost_cow, gen_random_layered_tree, gen_random_script_with, ScriptMix};
use crate::harness::greedy::baseline_greedy;
use crate::layered::binary::binary_convert;
use crate::layered::instance::LayeredTree;
use crate::layered::rounding::sample_walks;
use crate::layered::traverse::{traverse, TraverseConfig};
use crate::potential::certificate::{certificate_report, growth_constant};
use crate::potential::lineage::lineage_y;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// An instance family and its generator parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `k` disjoint paths with lengths drawn uniformly from `1..=max_length`.
    LostCow { instances: usize, max_length: u64 },
    RandomScripts { instances: usize, steps: usize, mix: ScriptMix },
    RandomLayered { instances: usize, layers: usize, unit_edge_prob: f64 },
}

impl Family {
    fn tag(&self) -> &'static str {
        match self {
            Family::LostCow { .. } => "lostcow",
            Family::RandomScripts { .. } => "script",
            Family::RandomLayered { .. } => "layered",
        }
    }

    fn instances(&self) -> usize {
        match self {
            Family::LostCow { instances, .. }
            | Family::RandomScripts { instances, .. }
            | Family::RandomLayered { instances, .. } => *instances,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Every family is run once per value of `k`.
    pub ks: Vec<u32>,
    pub epsilon: f64,
    pub seed: u64,
    pub families: Vec<Family>,
    /// Walks sampled per layered instance; 0 skips the rounding columns.
    pub samples: usize,
    pub integrator: IntegratorConfig,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            ks: vec![2, 3, 4, 5],
            epsilon: 1.0,
            seed: 0,
            families: vec![
                Family::LostCow { instances: 3, max_length: 6 },
                Family::RandomScripts { instances: 5, steps: 100, mix: ScriptMix::default() },
                Family::RandomLayered { instances: 3, layers: 20, unit_edge_prob: 0.4 },
            ],
            samples: 1000,
            integrator: IntegratorConfig::default(),
            format: OutputFormat::Csv,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ks.iter().any(|&k| k < 2) {
            return Err(Error::InvalidParameter("every k must be at least 2".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.samples == 1 {
            return Err(Error::InvalidParameter("samples must be 0 or at least 2".into()));
        }
        for f in &self.families {
            match f {
                Family::LostCow { max_length, .. } if *max_length == 0 => {
                    return Err(Error::InvalidParameter("lost cow paths need positive length".into()))
                }
                Family::RandomLayered { layers, unit_edge_prob, .. }
                    if *layers == 0 || !(0.0..=1.0).contains(unit_edge_prob) =>
                {
                    return Err(Error::InvalidParameter("layered family needs layers ≥ 1 and p in [0, 1]".into()))
                }
                _ => {}
            }
        }
        self.integrator.validate()
    }
}

/// One line of the results table. Field order is the column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub instance_id: String,
    pub k: u32,
    pub d_max: u32,
    pub opt: f64,
    /// Cost of the fractional strategy: the layered transport cost for
    /// layered instances, service plus movement for scripts.
    pub frac_cost: f64,
    /// `16k(2 + k·ln d_max)·(OPT + ε) + P₀`.
    pub bound: f64,
    pub max_cert_violation: f64,
    pub greedy_cost: Option<f64>,
    pub samples_mean: Option<f64>,
    pub samples_stderr: Option<f64>,
}

struct Job<'a> {
    family: &'a Family,
    k: u32,
    index: usize,
    seed: u64,
}

fn job_seed(base: u64, family: usize, k: u32, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(((family as u64) << 40) | (u64::from(k) << 32) | index as u64);
    rng.gen()
}

/// Run every family for every `k`. Instances run in parallel; rows come back
/// in a fixed order (family, k, index) regardless of scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let mut jobs = Vec::new();
    for (fi, family) in cfg.families.iter().enumerate() {
        for &k in &cfg.ks {
            for index in 0..family.instances() {
                jobs.push(Job { family, k, index, seed: job_seed(cfg.seed, fi, k, index) });
            }
        }
    }
    jobs.par_iter().map(|job| run_job(cfg, job)).collect()
}

fn run_job(cfg: &ExperimentConfig, job: &Job) -> Result<ResultRow> {
    let id = format!("{}-k{}-{:03}", job.family.tag(), job.k, job.index);
    let k = job.k as usize;
    match job.family {
        Family::RandomScripts { steps, mix, .. } => {
            let script = gen_random_script_with(job.k, cfg.epsilon, *steps, job.seed, mix)?;
            let trace = run_script(&script, &cfg.integrator)?;
            let row = certified_row(id, &trace, trace.total_cost())?;
            Ok(row)
        }
        Family::LostCow { max_length, .. } => {
            let mut rng = ChaCha8Rng::seed_from_u64(job.seed);
            let lengths: Vec<u64> = (0..k).map(|_| rng.gen_range(1..=*max_length)).collect();
            layered_row(cfg, id, &gen_lost_cow(k, &lengths)?, k, job.seed)
        }
        Family::RandomLayered { layers, unit_edge_prob, .. } => {
            let g = gen_random_layered_tree(k, *layers, *unit_edge_prob, job.seed)?;
            layered_row(cfg, id, &g, k, job.seed)
        }
    }
}

fn certified_row(instance_id: String, game: &GameTrace, frac_cost: f64) -> Result<ResultRow> {
    let y = lineage_y(&game.script)?;
    let rep = certificate_report(game, &y)?;
    let bound = growth_constant(game.script.k, rep.d_max) * (rep.opt + game.script.epsilon) + rep.initial_potential;
    Ok(ResultRow {
        instance_id,
        k: game.script.k,
        d_max: rep.d_max,
        opt: rep.opt,
        frac_cost,
        bound,
        max_cert_violation: rep.max_violation,
        greedy_cost: None,
        samples_mean: None,
        samples_stderr: None,
    })
}

fn layered_row(cfg: &ExperimentConfig, id: String, g: &LayeredTree, k: usize, seed: u64) -> Result<ResultRow> {
    let converted = binary_convert(g, k)?;
    let tcfg = TraverseConfig { epsilon: cfg.epsilon, integrator: cfg.integrator.clone() };
    let trace = traverse(&converted, k, &tcfg)?;
    let mut row = certified_row(id, &trace.game, trace.layered_cost)?;
    let (opt, _) = g.opt_path()?;
    row.opt = opt as f64;
    row.bound = growth_constant(row.k, row.d_max) * (row.opt + cfg.epsilon)
        + 2.0 * (2.0 * f64::from(row.k) - 1.0) * cfg.epsilon;
    row.greedy_cost = Some(baseline_greedy(g)?.1 as f64);
    if cfg.samples > 0 {
        let stats = sample_walks(&trace, cfg.samples, seed)?;
        row.samples_mean = Some(stats.mean);
        row.samples_stderr = Some(stats.stderr);
    }
    Ok(row)
}

/// Write rows as CSV (header first, empty cells for missing values) or as a
/// JSON array.
pub fn write_results<W: Write>(rows: &[ResultRow], format: OutputFormat, mut out: W) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            if rows.is_empty() {
                w.write_record(RESULT_COLUMNS)?;
            }
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, rows)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

pub const RESULT_COLUMNS: [&str; 10] = [
    "instance_id",
    "k",
    "d_max",
    "opt",
    "frac_cost",
    "bound",
    "max_cert_violation",
    "greedy_cost",
    "samples_mean",
    "samples_stderr",
];
