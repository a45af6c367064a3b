//! Solves for the multipliers and mass velocities of one growth instant.

use lgt::dynamics::{solve_driven, Drive};
use lgt::{EvolvingTree, FractionalState};

fn main() -> lgt::Result<()> {
    let mut tree = EvolvingTree::new(3, 1.0)?;
    let mut x = FractionalState::init(&tree)?;
    let kids = tree.fork(tree.top(), 2)?;
    x.apply_fork(tree.top(), &kids);
    tree.end_step()?;
    let grandkids = tree.fork(kids[0], 3)?;
    x.apply_fork(kids[0], &grandkids);
    tree.add_weight(grandkids[1], 0.8)?;

    let leaf = grandkids[0];
    let drive = Drive { leaf, rate: tree.revised_growth_rate(leaf) };
    let sol = solve_driven(&tree, &tree.revised_weights(), &tree.shift_vector(), &x, drive)?;
    println!("{:>4} {:>8} {:>10} {:>12}", "node", "mass", "lambda", "velocity");
    for u in tree.preorder() {
        let lambda = sol.lambda.get(u).map_or("-".into(), |l| format!("{l:.5}"));
        let vel = sol.velocity.get(&u).map_or("-".into(), |v| format!("{v:+.5}"));
        println!("{:>4} {:>8.4} {lambda:>10} {vel:>12}", u.0, x.mass(u));
    }
    Ok(())
}
