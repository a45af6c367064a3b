//! Rounding a fractional layer trace into a random walk.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layered::instance::LayerPos;
use crate::layered::traverse::LayerTrace;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Walk {
    /// Node index visited in each layer.
    pub path: Vec<usize>,
    pub cost: f64,
}

/// Draw one walk: from `u` in layer `i−1`, move to `v` with probability
/// `τ_i(u, v) / P_{i−1}(u)`, paying the tree distance between them.
pub fn sample_walk(trace: &LayerTrace, seed: u64) -> Result<Walk> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    walk_with(trace, &mut rng)
}

fn walk_with(trace: &LayerTrace, rng: &mut impl Rng) -> Result<Walk> {
    let mut path = vec![0usize];
    let mut cost = 0.0;
    for (i, plan) in trace.plans.iter().enumerate() {
        let u = path[i];
        let row = &plan.coupling[u];
        let mass: f64 = row.iter().sum();
        if !(mass > 0.0) {
            return Err(Error::Internal(format!("walk reached node {u} of layer {i}, which has no mass")));
        }
        let mut pick = rng.gen::<f64>() * mass;
        let mut v = row.iter().rposition(|&p| p > 0.0).expect("row has mass");
        for (j, &p) in row.iter().enumerate() {
            if p > 0.0 && pick < p {
                v = j;
                break;
            }
            pick -= p;
        }
        cost += trace.instance.distance(LayerPos { layer: i, index: u }, LayerPos { layer: i + 1, index: v }) as f64;
        path.push(v);
    }
    Ok(Walk { path, cost })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkStatistics {
    pub samples: usize,
    pub mean: f64,
    pub stderr: f64,
    /// Empirical frequency of each node, per layer.
    pub marginals: Vec<Vec<f64>>,
}

/// Mean cost and empirical layer marginals of `samples` independent walks.
pub fn sample_walks(trace: &LayerTrace, samples: usize, seed: u64) -> Result<WalkStatistics> {
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: Vec<Vec<f64>> = trace.distributions.iter().map(|d| vec![0.0; d.0.len()]).collect();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let w = walk_with(trace, &mut rng)?;
        sum += w.cost;
        sum_sq += w.cost * w.cost;
        for (layer, &v) in w.path.iter().enumerate() {
            counts[layer][v] += 1.0;
        }
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    for row in &mut counts {
        for c in row.iter_mut() {
            *c /= n;
        }
    }
    Ok(WalkStatistics { samples, mean, stderr: (var / n).sqrt(), marginals: counts })
}
