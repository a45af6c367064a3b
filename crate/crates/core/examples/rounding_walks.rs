//! Samples random walks from a fractional traversal and compares their mean cost
//! to the fractional cost.

use lgt::harness::gen_random_layered_tree;
use lgt::layered::{binary_convert, sample_walk, sample_walks, traverse, TraverseConfig};

fn main() -> lgt::Result<()> {
    let k = 3;
    let g = gen_random_layered_tree(k, 6, 0.5, 11)?;
    let c = binary_convert(&g, k)?;
    let trace = traverse(&c, k, &TraverseConfig::default())?;
    let walk = sample_walk(&trace, 0)?;
    println!("one walk costs {} and ends at node {}", walk.cost, walk.path.last().unwrap());
    let stats = sample_walks(&trace, 10_000, 0)?;
    println!("fractional cost {:.4}", trace.layered_cost);
    println!("walk mean {:.4} +- {:.4} over {} walks", stats.mean, stats.stderr, stats.samples);
    let last = stats.marginals.last().unwrap();
    let frac = trace.distributions.last().unwrap();
    for (i, (m, f)) in last.iter().zip(&frac.0).enumerate() {
        println!("final layer node {i}: empirical {m:.4}, fractional {f:.4}");
    }
    Ok(())
}
