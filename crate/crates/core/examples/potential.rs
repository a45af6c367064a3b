//! Evaluates the potential and its two parts for a few optimal-leaf choices.

use lgt::potential::{eval_potential, PathIndicator};
use lgt::{EvolvingTree, FractionalState};

fn main() -> lgt::Result<()> {
    let mut tree = EvolvingTree::new(2, 1.0)?;
    let mut x = FractionalState::init(&tree)?;
    let kids = tree.fork(tree.top(), 2)?;
    x.apply_fork(tree.top(), &kids);
    tree.add_weight(kids[0], 3.0)?;
    x.set(kids[0], 0.2);
    x.set(kids[1], 0.8);
    for leaf in tree.leaves() {
        let y = PathIndicator::to_leaf(&tree, leaf);
        let v = eval_potential(&tree, &x, &y)?;
        println!("optimum at leaf {}: P = {:.4}, D = {:.4}, Psi = {:.4}", leaf.0, v.p, v.d, v.psi);
    }
    Ok(())
}
