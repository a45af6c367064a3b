//! Plays a short adversary script step by step and prints the cost of each step.

use lgt::dynamics::{Game, IntegratorConfig};
use lgt::harness::ScriptStep;
use lgt::{EvolvingTree, NodeId};

fn main() -> lgt::Result<()> {
    let mut game = Game::new(3, 0.5, IntegratorConfig::default())?;
    let steps = [
        ScriptStep::Fork { leaf: NodeId(1), q: 3 },
        ScriptStep::Grow { leaf: NodeId(2), duration: 1.5 },
        ScriptStep::Grow { leaf: NodeId(3), duration: 0.7 },
        ScriptStep::Delete { leaf: NodeId(4) },
        ScriptStep::Fork { leaf: NodeId(3), q: 2 },
        ScriptStep::Grow { leaf: NodeId(5), duration: 2.0 },
    ];
    for step in steps {
        let label = format!("{step:?}");
        let rec = game.apply(step)?;
        println!("{label:<45} service {:.4}  movement {:.4}", rec.service, rec.movement);
    }
    let tree = game.tree();
    for leaf in tree.leaves() {
        println!("leaf {:>2}: depth {} distance {:.2} mass {:.4}", leaf.0, tree.depth(leaf), tree.root_distance(leaf), game.state().mass(leaf));
    }
    let trace = game.finish();
    let opt = EvolvingTree::from_snapshot(&trace.final_tree)?.opt_distance();
    println!("total cost {:.4}, OPT {opt:.2}", trace.total_cost());
    Ok(())
}
