//! Runs a random script and checks every potential-function inequality along it.

use lgt::dynamics::{run_script, IntegratorConfig};
use lgt::harness::gen_random_script;
use lgt::potential::{certificate_report, lineage_y};

fn main() -> lgt::Result<()> {
    let script = gen_random_script(4, 60, 7)?;
    let trace = run_script(&script, &IntegratorConfig::default())?;
    let y = lineage_y(&script)?;
    let rep = certificate_report(&trace, &y)?;

    let mut counts = std::collections::BTreeMap::new();
    for e in &rep.entries {
        *counts.entry(format!("{:?}", e.check)).or_insert(0usize) += 1;
    }
    for (check, n) in &counts {
        println!("{check:<16} {n:>8} checks");
    }
    println!("max violation     {:.3e}", rep.max_violation);
    println!("potential         {:.4} -> {:.4}", rep.initial_potential, rep.final_potential);
    println!("cost {:.4} <= bound {:.4} (OPT {}, d_max {})", rep.total_cost, rep.end_to_end_bound, rep.opt, rep.d_max);
    println!("{}", if rep.all_passed() { "all checks passed" } else { "some checks failed" });
    Ok(())
}
