//! Minimum-cost coupling between two distributions on consecutive layers.

use lgt::layered::{transport_plan, LayerDistribution};

fn main() -> lgt::Result<()> {
    let prev = LayerDistribution(vec![0.5, 0.3, 0.2]);
    let cur = LayerDistribution(vec![0.1, 0.6, 0.3]);
    let dist = vec![vec![0.0, 2.0, 4.0], vec![2.0, 0.0, 2.0], vec![4.0, 2.0, 0.0]];
    let plan = transport_plan(&prev, &cur, &dist)?;
    for row in &plan.coupling {
        println!("{}", row.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join("  "));
    }
    println!("cost {:.3}", plan.cost);
    Ok(())
}
