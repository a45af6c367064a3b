//! Optimal couplings of consecutive layer distributions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probability of each node of one layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LayerDistribution(pub Vec<f64>);

impl LayerDistribution {
    pub fn point(len: usize, at: usize) -> Self {
        let mut v = vec![0.0; len];
        v[at] = 1.0;
        Self(v)
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        if self.0.iter().any(|&p| !(p >= -tol && p.is_finite())) {
            return Err(Error::Input("distribution has a negative or non-finite entry".into()));
        }
        if (self.total() - 1.0).abs() > tol {
            return Err(Error::Input(format!("distribution sums to {}", self.total())));
        }
        Ok(())
    }
}

/// Coupling `τ` with rows indexed by the previous layer and columns by the current one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub coupling: Vec<Vec<f64>>,
    pub cost: f64,
}

impl TransportPlan {
    pub fn row_sums(&self) -> Vec<f64> {
        self.coupling.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let n = self.coupling.first().map_or(0, Vec::len);
        (0..n).map(|j| self.coupling.iter().map(|r| r[j]).sum()).collect()
    }
}

/// Marginal mismatch tolerated on input.
const MARGINAL_TOL: f64 = 1e-9;
/// Residual capacities below this are treated as saturated.
const CAP_EPS: f64 = 1e-15;

struct Edge {
    to: usize,
    cap: f64,
    cost: f64,
}

/// Minimum-cost coupling by successive shortest paths. Shortest paths use
/// Bellman–Ford scanning edges in index order with strict improvement, so ties
/// resolve to the lexicographically first path.
pub fn transport_plan(prev: &LayerDistribution, cur: &LayerDistribution, dist: &[Vec<f64>]) -> Result<TransportPlan> {
    prev.validate(MARGINAL_TOL)?;
    cur.validate(MARGINAL_TOL)?;
    let (m, n) = (prev.0.len(), cur.0.len());
    if dist.len() != m || dist.iter().any(|r| r.len() != n) {
        return Err(Error::Input(format!("distance matrix must be {m}×{n}")));
    }
    if dist.iter().flatten().any(|d| !(*d >= 0.0 && d.is_finite())) {
        return Err(Error::Input("distances must be nonnegative and finite".into()));
    }
    let supply: Vec<f64> = prev.0.iter().map(|p| p.max(0.0)).collect();
    let scale = supply.iter().sum::<f64>() / cur.0.iter().map(|p| p.max(0.0)).sum::<f64>();
    let demand: Vec<f64> = cur.0.iter().map(|p| p.max(0.0) * scale).collect();

    let (s, t) = (0, m + n + 1);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m + n + 2];
    let mut edges: Vec<Edge> = Vec::new();
    let mut add = |adj: &mut Vec<Vec<usize>>, a: usize, b: usize, cap: f64, cost: f64| {
        adj[a].push(edges.len());
        edges.push(Edge { to: b, cap, cost });
        adj[b].push(edges.len());
        edges.push(Edge { to: a, cap: 0.0, cost: -cost });
    };
    for (i, &p) in supply.iter().enumerate() {
        add(&mut adj, s, 1 + i, p, 0.0);
    }
    for (i, row) in dist.iter().enumerate() {
        for (j, &d) in row.iter().enumerate() {
            add(&mut adj, 1 + i, 1 + m + j, f64::INFINITY, d);
        }
    }
    for (j, &q) in demand.iter().enumerate() {
        add(&mut adj, 1 + m + j, t, q, 0.0);
    }

    let nodes = m + n + 2;
    for _ in 0..64 * nodes * nodes {
        let mut best = vec![f64::INFINITY; nodes];
        let mut via = vec![usize::MAX; nodes];
        best[s] = 0.0;
        for _ in 0..nodes {
            let mut changed = false;
            for u in 0..nodes {
                if best[u] == f64::INFINITY {
                    continue;
                }
                for &e in &adj[u] {
                    let edge = &edges[e];
                    if edge.cap > CAP_EPS && best[u] + edge.cost < best[edge.to] {
                        best[edge.to] = best[u] + edge.cost;
                        via[edge.to] = e;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if best[t] == f64::INFINITY {
            break;
        }
        let mut push = f64::INFINITY;
        let mut v = t;
        while v != s {
            let e = via[v];
            push = push.min(edges[e].cap);
            v = edges[e ^ 1].to;
        }
        let mut v = t;
        while v != s {
            let e = via[v];
            edges[e].cap -= push;
            edges[e ^ 1].cap += push;
            v = edges[e ^ 1].to;
        }
    }

    let mut coupling = vec![vec![0.0; n]; m];
    let mut cost = 0.0;
    for i in 0..m {
        for &e in &adj[1 + i] {
            let to = edges[e].to;
            if (1 + m..=m + n).contains(&to) && e % 2 == 0 {
                let flow = edges[e ^ 1].cap;
                coupling[i][to - 1 - m] = flow;
                cost += flow * dist[i][to - 1 - m];
            }
        }
    }
    let plan = TransportPlan { coupling, cost };
    let rows = plan.row_sums();
    let gap = rows.iter().zip(&prev.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if gap > MARGINAL_TOL {
        return Err(Error::Internal(format!("transport left {gap:e} of supply unrouted")));
    }
    Ok(plan)
}
