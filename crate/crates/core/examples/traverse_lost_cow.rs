//! Traverses width-2 instances with one short and one long path.

use lgt::harness::gen_lost_cow;
use lgt::layered::{binary_convert, traverse, TraverseConfig};

fn main() -> lgt::Result<()> {
    for long in [1, 2, 4, 8, 16] {
        let g = gen_lost_cow(2, &[1, long])?;
        let c = binary_convert(&g, 2)?;
        let t = traverse(&c, 2, &TraverseConfig::default())?;
        let (opt, _) = g.opt_path()?;
        println!(
            "lengths [1, {long:>2}]: OPT {opt}, layered cost {:.4}, evolving-tree cost {:.4}, ratio {:.3}",
            t.layered_cost,
            t.evolving_cost(),
            t.layered_cost / opt as f64
        );
    }
    Ok(())
}
