use lgt::dynamics::{run_script, IntegratorConfig};
use lgt::harness::{gen_random_script, AdversaryScript, ScriptStep};
use lgt::potential::certificate::growth_constant;
use lgt::potential::{certificate_report, finite_diff_check, lineage_y, Check};
use lgt::NodeId;

fn script(k: u32, steps: Vec<ScriptStep>) -> AdversaryScript {
    AdversaryScript { k, epsilon: 1.0, steps }
}

#[test]
fn growth_step_on_the_optimal_leaf() {
    // a = n2 is grown by 1 and ends as the closest leaf (b is grown by 2), so
    // y_a = 1 during the first growth step.
    let s = script(
        3,
        vec![
            ScriptStep::Fork { leaf: NodeId(1), q: 2 },
            ScriptStep::Grow { leaf: NodeId(2), duration: 1.0 },
            ScriptStep::Grow { leaf: NodeId(3), duration: 2.0 },
        ],
    );
    let trace = run_script(&s, &IntegratorConfig::default()).unwrap();
    let y = lineage_y(&s).unwrap();
    assert_eq!(y.leaf, NodeId(2));
    assert_eq!(y.opt, 1.0);
    assert!(y.before(1).contains(NodeId(2)));
    let rep = certificate_report(&trace, &y).unwrap();
    let e = rep.entries.iter().find(|e| e.check == Check::GrowthStep && e.step == 1).unwrap();
    assert_eq!(e.rhs, growth_constant(3, 3));
    assert!(e.lhs <= e.rhs);
    assert!(e.lhs > 0.0);
    assert_eq!(rep.opt_service, 1.0);
    assert!(rep.all_passed());
}

#[test]
fn drained_leaf_growth_is_nearly_free() {
    // Mass leaves a growing leaf roughly like 1/w², so after a long growth
    // step a second one barely moves anything.
    let s = script(
        2,
        vec![
            ScriptStep::Fork { leaf: NodeId(1), q: 2 },
            ScriptStep::Grow { leaf: NodeId(2), duration: 1000.0 },
            ScriptStep::Grow { leaf: NodeId(2), duration: 1.0 },
        ],
    );
    let trace = run_script(&s, &IntegratorConfig::default()).unwrap();
    let rec = &trace.records[2];
    assert!(rec.x_before.mass(NodeId(2)) < 1e-6);
    assert!(rec.service + rec.movement < 1e-5);
    let y = lineage_y(&s).unwrap();
    assert!(!y.before(2).contains(NodeId(2)));
    let rep = certificate_report(&trace, &y).unwrap();
    let e = rep.entries.iter().find(|e| e.check == Check::GrowthStep && e.step == 2).unwrap();
    assert_eq!(e.rhs, 0.0);
    assert!(e.passed(), "{e:?}");
}

#[test]
fn merges_never_raise_the_potential() {
    let mut merges = 0;
    for seed in 0..10 {
        let s = gen_random_script(2 + (seed % 4) as u32, 60, 1000 + seed).unwrap();
        let trace = run_script(&s, &IntegratorConfig::default()).unwrap();
        let rep = certificate_report(&trace, &lineage_y(&s).unwrap()).unwrap();
        for e in rep.entries.iter().filter(|e| e.check == Check::Merge) {
            merges += 1;
            assert!(e.lhs - e.rhs <= 1e-9, "seed {seed}: {e:?}");
        }
        for e in rep.entries.iter().filter(|e| e.check == Check::Deadend) {
            assert!(e.lhs - e.rhs <= 1e-6, "seed {seed}: {e:?}");
        }
        assert!(rep.all_passed(), "seed {seed}");
        assert!((rep.opt_service - rep.opt).abs() <= 1e-9 * (1.0 + rep.opt));
    }
    assert!(merges > 0);
}

#[test]
fn mismatched_optimal_play_is_rejected() {
    let a = gen_random_script(3, 20, 1).unwrap();
    let b = gen_random_script(3, 25, 2).unwrap();
    let trace = run_script(&a, &IntegratorConfig::default()).unwrap();
    assert!(certificate_report(&trace, &lineage_y(&b).unwrap()).is_err());
}

fn star_trace() -> (lgt::dynamics::GameTrace, lgt::potential::OptimalPlay) {
    let s = script(
        2,
        vec![
            ScriptStep::Fork { leaf: NodeId(1), q: 2 },
            ScriptStep::Grow { leaf: NodeId(2), duration: 2.0 },
            ScriptStep::Grow { leaf: NodeId(3), duration: 0.5 },
        ],
    );
    let cfg = IntegratorConfig { sample_every: 16, ..Default::default() };
    (run_script(&s, &cfg).unwrap(), lineage_y(&s).unwrap())
}

#[test]
fn finite_differences_agree_on_the_star() {
    let (trace, y) = star_trace();
    let fd = finite_diff_check(&trace, &y, 1e-4).unwrap();
    assert!(fd.checked > 20);
    assert!(fd.max_deviation <= 1e-4, "{fd:?}");
}

#[test]
fn finite_difference_error_shrinks_with_the_step() {
    let (trace, y) = star_trace();
    let floor = 1e-9;
    let mut prev = finite_diff_check(&trace, &y, 1e-1).unwrap().max_deviation;
    for rel_h in [5e-2, 2.5e-2, 1.25e-2] {
        let dev = finite_diff_check(&trace, &y, rel_h).unwrap().max_deviation;
        assert!(dev <= 0.5 * prev + floor, "h {rel_h}: {dev:e} after {prev:e}");
        prev = dev;
    }
}
