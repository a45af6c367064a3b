//! Converts a width-4 unit-weighted layered tree into a binary one of the same width.

use lgt::harness::gen_random_layered_tree;
use lgt::layered::binary::converted_layer;
use lgt::layered::binary_convert;

fn main() -> lgt::Result<()> {
    let k = 4;
    let g = gen_random_layered_tree(k, 6, 0.5, 3)?;
    let c = binary_convert(&g, k)?;
    println!("original:  {} layers, width {}, binary {}", g.depth(), g.width(), g.is_binary());
    println!("converted: {} layers, width {}, binary {}, unit edges per gap <= {}", c.depth(), c.width(), c.is_binary(), c.max_unit_edges_per_gap());
    let (opt, path) = g.opt_path()?;
    let (opt_c, path_c) = c.opt_path()?;
    println!("OPT {opt} vs {opt_c}");
    for (i, v) in path.iter().enumerate() {
        println!("layer {i:>2} node {v} -> converted layer {:>3} node {}", converted_layer(k, i), path_c[converted_layer(k, i)]);
    }
    Ok(())
}
