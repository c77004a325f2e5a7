//! Property suites across modules.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tsallis_geometry::catk::{
    cat_test, comparison_distance, comparison_triangle, lp_space, model_distance, tree_metric, GeodesicSpace, TreePoint,
    WarpedHyperbolicSpace, DEFAULT_CAT_TOL,
};
use tsallis_geometry::entropy::{check_composition, q_log, tsallis_discrete, DiscreteDistribution};
use tsallis_geometry::geometry::{
    deformed_distance, exponential_distance, exponential_geodesic_point, GroupElement, MetricPoint,
};
use tsallis_geometry::qcalc::QParam;
use tsallis_geometry::superstat::{q_exponential, SuperstatParams};

fn q_grid() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(0.25), Just(0.5), Just(0.75), Just(0.99), Just(1.0), Just(1.5), 0.0..1.9f64]
}

fn distribution(max: usize) -> impl Strategy<Value = DiscreteDistribution> {
    prop::collection::vec(0.01..1.0f64, 1..=max).prop_map(|w| DiscreteDistribution::from_weights(&w).unwrap())
}

/// Admissible side lengths `(a, b, c)`, the first drawn between the bounds
/// set by the other two.
fn sides(max: f64) -> impl Strategy<Value = (f64, f64, f64)> {
    (0.01..max, 0.01..max, 0.0..=1.0f64).prop_map(|(b, c, s)| {
        let lo = (b - c).abs();
        (lo + s * (b + c - lo), b, c)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn tau_round_trips(q in q_grid(), x in -20.0..20.0f64) {
        let p = QParam::new(q).unwrap();
        let back = p.tau_inv(p.tau(x).unwrap()).unwrap();
        prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(1.0));
    }

    #[test]
    fn deformed_operations_follow_tau(q in q_grid(), x in -20.0..20.0f64, y in -20.0..20.0f64) {
        let p = QParam::new(q).unwrap();
        let (tx, ty) = (p.tau(x).unwrap(), p.tau(y).unwrap());
        let sum = p.q_add_deformed(tx, ty).unwrap();
        prop_assert_eq!(sum.value(), p.q_add_deformed(ty, tx).unwrap().value());
        let want = p.tau(x + y).unwrap().value();
        prop_assert!((sum.value() - want).abs() <= 1e-10 * want.abs().max(f64::MIN_POSITIVE));
        if y.abs() > 1e-3 {
            let quotient = p.q_div(tx, ty).unwrap().value();
            let want = p.tau(x / y).unwrap().value();
            prop_assert!((quotient - want).abs() <= 1e-9 * want.abs().max(1e-300));
        }
    }

    #[test]
    fn raw_q_add_error_scales_with_its_terms(q in q_grid(), x in -20.0..20.0f64, y in -20.0..20.0f64) {
        let p = QParam::new(q).unwrap();
        let (u, v) = (p.tau(x).unwrap().value(), p.tau(y).unwrap().value());
        let scale = u.abs() + v.abs() + ((1.0 - q) * u * v).abs();
        let want = p.tau(x + y).unwrap().value();
        prop_assert!((p.q_add(u, v) - want).abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn composition_law_holds(q in prop_oneof![Just(0.0), Just(0.5), Just(0.9), 0.0..2.0f64], a in distribution(8), b in distribution(8)) {
        let p = QParam::new(q).unwrap();
        prop_assert!(check_composition(p, &a, &b).unwrap() < 1e-10);
    }

    #[test]
    fn uniform_entropy_is_q_log_of_count(q in 0.0..2.0f64, w in 1usize..50) {
        let p = QParam::new(q).unwrap();
        let s = tsallis_discrete(p, &DiscreteDistribution::uniform(w).unwrap()).unwrap();
        let want = q_log(p, w as f64).unwrap();
        prop_assert!((s - want).abs() <= 1e-12 * want.abs().max(1.0));
    }

    #[test]
    fn tsallis_entropy_is_bounded_by_uniform(q in 0.0..2.0f64, d in distribution(12)) {
        let p = QParam::new(q).unwrap();
        let s = tsallis_discrete(p, &d).unwrap();
        let max = tsallis_discrete(p, &DiscreteDistribution::uniform(d.len()).unwrap()).unwrap();
        prop_assert!(s >= -1e-15 && s <= max + 1e-12);
    }

    #[test]
    fn deformed_distance_satisfies_the_deformed_triangle_inequality(
        q in 0.0..1.0f64,
        a in prop::array::uniform3(-2.0..2.0f64),
        b in prop::array::uniform3(-2.0..2.0f64),
        c in prop::array::uniform3(-2.0..2.0f64),
    ) {
        let p = QParam::new(q).unwrap();
        let e = |u: &[f64; 3], v: &[f64; 3]| u.iter().zip(v).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let d = |x| deformed_distance(p, x).unwrap();
        prop_assert_eq!(d(e(&a, &b)), d(e(&b, &a)));
        prop_assert!(d(e(&a, &c)) <= p.q_add(d(e(&a, &b)), d(e(&b, &c))) * (1.0 + 1e-12));
    }

    #[test]
    fn closed_distance_is_a_metric(
        t in 0.05..1.5f64,
        a in prop::array::uniform3(-2.0..2.0f64),
        b in prop::array::uniform3(-2.0..2.0f64),
        c in prop::array::uniform3(-2.0..2.0f64),
    ) {
        let d = |u: &[f64; 3], v: &[f64; 3]| exponential_distance(t, u, v);
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert!((d(&a, &b) - d(&b, &a)).abs() <= 1e-12 * d(&a, &b).max(1.0));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-9);
    }

    #[test]
    fn group_translations_are_isometries(
        t in 0.05..1.5f64,
        g in prop::array::uniform3(-2.0..2.0f64),
        a in prop::array::uniform3(-2.0..2.0f64),
        b in prop::array::uniform3(-2.0..2.0f64),
    ) {
        let g = GroupElement::new(g[0], g[1..].to_vec(), t);
        let (pa, pb) = (MetricPoint::new(a.to_vec()), MetricPoint::new(b.to_vec()));
        let (ga, gb) = (g.translate(&pa).unwrap(), g.translate(&pb).unwrap());
        let before = exponential_distance(t, &a, &b);
        let after = exponential_distance(t, ga.coords(), gb.coords());
        prop_assert!((before - after).abs() <= 1e-9 * before.max(1.0));
    }

    #[test]
    fn closed_geodesic_points_split_distance(
        t in 0.05..1.5f64,
        a in prop::array::uniform3(-2.0..2.0f64),
        b in prop::array::uniform3(-2.0..2.0f64),
        s in 0.0..=1.0f64,
    ) {
        let d = exponential_distance(t, &a, &b);
        let w = exponential_geodesic_point(t, &a, &b, s);
        prop_assert!((exponential_distance(t, &a, &w) - s * d).abs() <= 1e-8);
        prop_assert!((exponential_distance(t, &w, &b) - (1.0 - s) * d).abs() <= 1e-8);
    }

    #[test]
    fn comparison_triangle_reproduces_sides(k in prop_oneof![Just(-0.1), Just(-1.0), Just(-4.0)], (a, b, c) in sides(4.0)) {
        let [x, y, z] = comparison_triangle(k, a, b, c).unwrap();
        prop_assert!((model_distance(k, y, z).unwrap() - a).abs() < 1e-10);
        prop_assert!((model_distance(k, z, x).unwrap() - b).abs() < 1e-10);
        prop_assert!((model_distance(k, x, y).unwrap() - c).abs() < 1e-10);
    }

    #[test]
    fn comparison_distance_shrinks_as_k_decreases(
        (a, b, c) in sides(3.0),
        s in 0.0..=1.0f64,
        k in -4.0..-0.01f64,
        factor in 1.0..10.0f64,
    ) {
        let near = comparison_distance(k, a, b, c, s).unwrap();
        let far = comparison_distance(k * factor, a, b, c, s).unwrap();
        prop_assert!(far <= near + 1e-12 * near.max(1.0));
    }

    #[test]
    fn integer_trees_satisfy_the_four_point_condition(
        weights in prop::collection::vec(1u32..20, 2..12),
        parents in prop::collection::vec(any::<prop::sample::Index>(), 2..12),
        picks in prop::collection::vec((any::<prop::sample::Index>(), 0u32..4), 4),
    ) {
        // Random tree on n vertices: vertex i > 0 hangs off an earlier one.
        let n = weights.len().min(parents.len()) + 1;
        let mut adj = vec![Vec::new(); n];
        for i in 1..n {
            let parent = parents[i - 1].index(i);
            let w = f64::from(weights[i - 1]);
            adj[i].push((parent, w));
            adj[parent].push((i, w));
        }
        let tree = tree_metric(&adj).unwrap();
        // Points at quarter offsets keep every path sum exact in binary.
        let pts: Vec<TreePoint> = picks
            .iter()
            .map(|(e, quarter)| {
                let edge = e.index(tree.edges().len());
                TreePoint { edge, offset: tree.edges()[edge].2 * f64::from(*quarter) / 4.0 }
            })
            .collect();
        prop_assert_eq!(tree.four_point_defect([&pts[0], &pts[1], &pts[2], &pts[3]]).unwrap(), 0.0);
    }

    #[test]
    fn q_exponential_decays_with_energy(q in 1.01..2.5f64, beta0 in 0.1..5.0f64, e in 0.0..20.0f64, de in 1e-3..5.0f64) {
        let f = |e| q_exponential(&SuperstatParams::new(q, beta0, e).unwrap()).unwrap();
        prop_assert!(f(e + de) < f(e));
    }
}

#[test]
fn q_exponential_has_a_heavy_tail() {
    let v = q_exponential(&SuperstatParams::new(1.5, 1.0, 50.0).unwrap()).unwrap();
    assert!(v / (-50.0f64).exp() > 1e6);
}

#[test]
fn cat_verdicts_are_seed_stable() {
    let t = std::f64::consts::LN_2;
    let warped = WarpedHyperbolicSpace::new(t, 1).unwrap();
    let l1 = lp_space(2, 1.0).unwrap();
    let l2 = lp_space(2, 2.0).unwrap();
    let tree = tree_metric(&vec![
        vec![(1, 1.0), (2, 2.0), (3, 0.5)],
        vec![(0, 1.0), (4, 1.5)],
        vec![(0, 2.0)],
        vec![(0, 0.5)],
        vec![(1, 1.5)],
    ])
    .unwrap();
    // 50 triangles x 3 sides x 8 points = 1200 samples per run.
    let verdicts = |seed| {
        [
            cat_test(&warped, -t * t, 50, 8, seed, DEFAULT_CAT_TOL).unwrap().verdict,
            cat_test(&warped, -2.0 * t * t, 50, 8, seed, DEFAULT_CAT_TOL).unwrap().verdict,
            cat_test(&l1, -0.1, 50, 8, seed, DEFAULT_CAT_TOL).unwrap().verdict,
            cat_test(&l2, -1.0, 50, 8, seed, DEFAULT_CAT_TOL).unwrap().verdict,
            cat_test(&tree, -1.0, 50, 8, seed, DEFAULT_CAT_TOL).unwrap().verdict,
        ]
    };
    assert_eq!(verdicts(100), verdicts(200));
}

#[test]
fn space_distances_are_metrics() {
    let t = 0.7;
    let warped = WarpedHyperbolicSpace::new(t, 2).unwrap();
    let l3 = lp_space(3, 3.0).unwrap();
    fn check<S: GeodesicSpace>(space: &S, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..500 {
            let (a, b, c) = (space.sample_point(&mut rng), space.sample_point(&mut rng), space.sample_point(&mut rng));
            let d = |p: &S::Point, q: &S::Point| space.distance(p, q).unwrap();
            assert!((d(&a, &b) - d(&b, &a)).abs() < 1e-9);
            assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-9);
            let w = space.geodesic_point(&a, &b, 0.3).unwrap();
            assert!((d(&a, &w) - 0.3 * d(&a, &b)).abs() < 1e-8);
        }
    }
    check(&warped, 1);
    check(&l3, 2);
}
