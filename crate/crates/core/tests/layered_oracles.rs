use lgt::harness::{baseline_greedy, gen_lost_cow, gen_random_layered_tree};
use lgt::layered::binary::{converted_layer, gadget_layers};
use lgt::layered::{
    binary_convert, sample_walks, transport_plan, traverse, LayerDistribution, LayerNode, LayerPos, LayeredTree,
    TraverseConfig,
};
use lgt::potential::certificate::growth_constant;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Minimum transport cost by enumerating every basis of `m + n − 1` cells,
/// solving the marginal equations on it and keeping the cheapest
/// nonnegative solution.
fn lp_vertex_cost(p: &[f64], q: &[f64], dist: &[Vec<f64>]) -> f64 {
    let (m, n) = (p.len(), q.len());
    let cells: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let r = m + n - 1;
    let mut best = f64::INFINITY;
    let mut pick = Vec::with_capacity(r);
    fn rec(
        start: usize,
        r: usize,
        cells: &[(usize, usize)],
        pick: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if pick.len() == r {
            visit(pick);
            return;
        }
        for c in start..cells.len() {
            pick.push(c);
            rec(c + 1, r, cells, pick, visit);
            pick.pop();
        }
    }
    let mut visit = |basis: &[usize]| {
        // Rows: all m row sums and the first n − 1 column sums.
        let mut a = DMatrix::<f64>::zeros(r, r);
        let mut b = DVector::<f64>::zeros(r);
        for i in 0..m {
            b[i] = p[i];
        }
        for j in 0..n - 1 {
            b[m + j] = q[j];
        }
        for (col, &c) in basis.iter().enumerate() {
            let (i, j) = cells[c];
            a[(i, col)] = 1.0;
            if j < n - 1 {
                a[(m + j, col)] = 1.0;
            }
        }
        if a.determinant().abs() < 0.5 {
            return;
        }
        let Some(sol) = a.lu().solve(&b) else { return };
        if sol.iter().any(|&v| v < -1e-12) {
            return;
        }
        let cost: f64 = basis.iter().enumerate().map(|(col, &c)| sol[col] * dist[cells[c].0][cells[c].1]).sum();
        best = best.min(cost);
    };
    rec(0, r, &cells, &mut pick, &mut visit);
    best
}

fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.01..1.0) }).collect();
    let s: f64 = v.iter().sum();
    if s == 0.0 {
        let mut e = vec![0.0; n];
        e[0] = 1.0;
        return e;
    }
    v.into_iter().map(|a| a / s).collect()
}

fn check_transport(m: usize, n: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = random_simplex(&mut rng, m);
    let q = random_simplex(&mut rng, n);
    let dist: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| f64::from(rng.gen_range(0u8..6))).collect()).collect();
    let plan = transport_plan(&LayerDistribution(p.clone()), &LayerDistribution(q.clone()), &dist).unwrap();
    let oracle = lp_vertex_cost(&p, &q, &dist);
    assert!((plan.cost - oracle).abs() <= 1e-12, "seed {seed}: solver {} oracle {oracle}", plan.cost);
    for (a, b) in plan.row_sums().iter().zip(&p) {
        assert!((a - b).abs() <= 1e-12);
    }
    for (a, b) in plan.col_sums().iter().zip(&q) {
        assert!((a - b).abs() <= 1e-12);
    }
    assert!(plan.coupling.iter().flatten().all(|&t| t >= 0.0));
}

#[test]
fn transport_matches_lp_vertices_on_3x3() {
    for seed in 0..200 {
        check_transport(3, 3, seed);
    }
}

/// Every root-to-target walk of the layered tree by depth-first search.
fn brute_force_opt(g: &LayeredTree) -> (u64, Vec<usize>) {
    let mut best: Option<(u64, Vec<usize>)> = None;
    let mut stack = vec![(0usize, vec![0usize], 0u64)];
    while let Some((layer, path, cost)) = stack.pop() {
        if layer == g.depth() {
            if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                best = Some((cost, path));
            }
            continue;
        }
        for c in g.children(layer, path[layer]) {
            let mut next = path.clone();
            next.push(c);
            stack.push((layer + 1, next, cost + g.layers[layer + 1][c].weight));
        }
    }
    best.expect("target reachable")
}

#[test]
fn opt_path_matches_enumeration() {
    for seed in 0..100 {
        let g = gen_random_layered_tree(4, 10, 0.5, seed).unwrap();
        assert_eq!(g.opt_path().unwrap(), brute_force_opt(&g), "seed {seed}");
    }
    assert_eq!(gen_lost_cow(2, &[3, 7]).unwrap().opt_path().unwrap().0, 3);
    let zero = LayeredTree::new(vec![
        vec![LayerNode::root()],
        vec![LayerNode { parent: Some(0), weight: 0 }, LayerNode { parent: Some(0), weight: 0 }],
        vec![LayerNode { parent: Some(1), weight: 0 }],
    ])
    .unwrap();
    assert_eq!(zero.opt_path().unwrap().0, 0);
}

fn check_conversion(g: &LayeredTree, k: usize) {
    let c = binary_convert(g, k).unwrap();
    assert!(c.is_binary() && c.is_unit_weighted());
    assert!(c.width() <= k);
    assert!(c.max_unit_edges_per_gap() <= 1);
    assert_eq!(c.depth(), converted_layer(k, g.depth()));
    let nodes: Vec<LayerPos> = (0..g.layers.len())
        .flat_map(|layer| (0..g.layers[layer].len()).map(move |index| LayerPos { layer, index }))
        .collect();
    let lift = |p: LayerPos| LayerPos { layer: converted_layer(k, p.layer), index: p.index };
    for &u in &nodes {
        for &v in &nodes {
            assert_eq!(g.distance(u, v), c.distance(lift(u), lift(v)), "{u:?} {v:?}");
        }
    }
    let (opt, path) = g.opt_path().unwrap();
    let (opt_c, path_c) = c.opt_path().unwrap();
    assert_eq!(opt, opt_c);
    for (layer, &index) in path.iter().enumerate() {
        assert_eq!(path_c[converted_layer(k, layer)], index);
    }
}

#[test]
fn binary_conversion_preserves_distances_and_opt() {
    for seed in 0..100 {
        check_conversion(&gen_random_layered_tree(4, 8, 0.5, seed).unwrap(), 4);
    }
    for k in 2..=6 {
        check_conversion(&gen_lost_cow(k, &vec![2; k]).unwrap(), k);
    }
}

#[test]
fn four_way_fork_gets_a_depth_two_gadget() {
    let n = |p, w| LayerNode { parent: Some(p), weight: w };
    let g = LayeredTree::new(vec![
        vec![LayerNode::root()],
        vec![n(0, 1), n(0, 0), n(0, 1), n(0, 0)],
        vec![n(1, 0)],
    ])
    .unwrap();
    assert_eq!(gadget_layers(4), 1);
    let c = binary_convert(&g, 4).unwrap();
    // One inserted layer of two halves, then the four original children.
    assert_eq!(c.layers[1].len(), 2);
    assert!(c.layers[1].iter().all(|x| x.weight == 0));
    check_conversion(&g, 4);
}

#[test]
fn lost_cow_one_vs_long() {
    for long in [3u64, 6, 10] {
        let g = gen_lost_cow(2, &[1, long]).unwrap();
        let c = binary_convert(&g, 2).unwrap();
        let trace = traverse(&c, 2, &TraverseConfig::default()).unwrap();
        let (opt, _) = g.opt_path().unwrap();
        assert_eq!(opt, 1);
        let bound = growth_constant(2, trace.game.d_max()) * (opt as f64 + 1.0) + 6.0;
        assert!(trace.layered_cost.is_finite() && trace.layered_cost <= bound);
        assert!(trace.layered_cost >= opt as f64 - 1e-9);
        assert!(trace.layered_cost <= trace.evolving_cost() + 1e-9);
    }
}

#[test]
fn zero_weight_path_costs_nothing() {
    let layers = std::iter::once(vec![LayerNode::root()])
        .chain((0..6).map(|_| vec![LayerNode { parent: Some(0), weight: 0 }]))
        .collect();
    let g = LayeredTree::new(layers).unwrap();
    let trace = traverse(&g, 2, &TraverseConfig::default()).unwrap();
    assert_eq!(trace.layered_cost, 0.0);
    assert_eq!(trace.evolving_cost(), 0.0);
}

#[test]
fn monte_carlo_marginals_and_cost() {
    // Two zero-weight branches; the first then pays a unit edge and is a
    // dead end, so walks through it pay 2 and the others nothing.
    let n = |p, w| LayerNode { parent: Some(p), weight: w };
    let g = LayeredTree::new(vec![
        vec![LayerNode::root()],
        vec![n(0, 0), n(0, 0)],
        vec![n(0, 1), n(1, 0)],
        vec![n(1, 0)],
    ])
    .unwrap();
    let trace = traverse(&g, 2, &TraverseConfig::default()).unwrap();
    let samples = 10_000;
    let stats = sample_walks(&trace, samples, 7).unwrap();
    let nf = samples as f64;
    let mut nontrivial = 0;
    for (emp, exact) in stats.marginals.iter().zip(&trace.distributions) {
        for (e, p) in emp.iter().zip(&exact.0) {
            let se = (p * (1.0 - p) / nf).sqrt();
            if se > 0.0 {
                nontrivial += 1;
                assert!((e - p).abs() <= 3.0 * se, "empirical {e} exact {p}");
            } else {
                assert_eq!(e, p);
            }
        }
    }
    assert!(nontrivial >= 4);
    assert!(stats.stderr > 0.0);
    assert!((stats.mean - trace.layered_cost).abs() <= 3.0 * stats.stderr);
}

#[test]
fn greedy_flees_the_short_path() {
    // Lost cow {1, 3}: the short path (index 1) shows its unit edge first, the
    // long path (index 0) only afterwards, and the target sits below index 1.
    let n = |p, w| LayerNode { parent: Some(p), weight: w };
    let g = LayeredTree::new(vec![
        vec![LayerNode::root()],
        vec![n(0, 0), n(0, 1)],
        vec![n(0, 0), n(1, 0)],
        vec![n(0, 1), n(1, 0)],
        vec![n(0, 1), n(1, 0)],
        vec![n(0, 1), n(1, 0)],
        vec![n(1, 0)],
    ])
    .unwrap();
    let (opt, _) = g.opt_path().unwrap();
    let (path, cost) = baseline_greedy(&g).unwrap();
    assert_eq!(opt, 1);
    // Layers 1-2: index 0 is free. Layer 3: tie at 1, stay and pay 1.
    // Layer 4: index 1 is shorter, cross for 1 + 1. Then stay.
    assert_eq!(path, vec![0, 0, 0, 0, 1, 1, 0]);
    assert_eq!(cost, 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transport_matches_lp_vertices(m in 1usize..=4, n in 1usize..=4, seed in any::<u64>()) {
        check_transport(m, n, seed);
    }

    #[test]
    fn conversion_properties(k in 2usize..=5, layers in 1usize..8, p in 0.0f64..=1.0, seed in any::<u64>()) {
        let g = gen_random_layered_tree(k, layers, p, seed).unwrap();
        prop_assert!(g.width() <= k && g.is_unit_weighted());
        check_conversion(&g, k);
    }

    #[test]
    fn greedy_never_beats_opt(k in 2usize..=5, layers in 1usize..12, seed in any::<u64>()) {
        let g = gen_random_layered_tree(k, layers, 0.5, seed).unwrap();
        let (path, cost) = baseline_greedy(&g).unwrap();
        prop_assert_eq!(path.len(), g.layers.len());
        prop_assert!(cost >= g.opt_path().unwrap().0);
    }

    #[test]
    fn generators_are_deterministic(k in 2usize..=5, layers in 1usize..12, seed in any::<u64>()) {
        let a = gen_random_layered_tree(k, layers, 0.3, seed).unwrap();
        prop_assert_eq!(&a, &gen_random_layered_tree(k, layers, 0.3, seed).unwrap());
        prop_assert!(a.validate().is_ok());
    }
}
