//! Randomized invariant checks: structural properties of the affinity
//! matrix, descriptor invariances under exact coordinate transforms, metric
//! axioms, assignment validity against the exhaustive oracle, CMC curve
//! shape, and binary-format round trips.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use gct::affinity::{build_affinity_matrix, stripe_search_space, MatchProblem};
use gct::config::{Config, MetricConfig};
use gct::eval::cmc_curve;
use gct::graph::{AttributedGraph, PatchLayout};
use gct::io::gctf::{encode_gctf, parse_gctf};
use gct::metric::learn_metric;
use gct::pose::{compute_pose_context, pose_similarity, JointSet, N_JOINTS};
use gct::solver::{brute_force_matching, discretize, solve_relaxed};

fn unit_vec(raw: Vec<f64>) -> DVector<f64> {
    let v = DVector::from_vec(raw);
    let n = v.norm();
    v / n
}

/// Two graphs sharing one layout and feature dimension, with uniformly
/// random unit features.
fn graph_pair() -> impl Strategy<Value = (AttributedGraph, AttributedGraph)> {
    (2usize..=3, 2usize..=3, 4usize..=6).prop_flat_map(|(rows, cols, dim)| {
        let layout =
            PatchLayout::new(16 * cols as u32, 16 * rows as u32, 16, 16, 16, 16, 1).unwrap();
        let n = layout.n_patches();
        let feats = || {
            proptest::collection::vec(
                proptest::collection::vec(0.05f64..1.0, dim),
                n,
            )
        };
        (feats(), feats()).prop_map(move |(fa, fb)| {
            let ga = AttributedGraph::build(
                layout.clone(),
                fa.into_iter().map(unit_vec).collect(),
            )
            .unwrap();
            let gb = AttributedGraph::build(
                layout.clone(),
                fb.into_iter().map(unit_vec).collect(),
            )
            .unwrap();
            (ga, gb)
        })
    })
}

/// Integer-valued joint coordinates: every arithmetic step downstream
/// (differences, squared magnitudes, exact doublings) stays exact in f64,
/// so invariance checks can demand bitwise equality.
fn integer_joints() -> impl Strategy<Value = JointSet> {
    proptest::collection::vec((0i32..=1000, 0i32..=1000), N_JOINTS)
        .prop_filter("joints must not all coincide", |pts| {
            pts.iter().any(|p| *p != pts[0])
        })
        .prop_map(|pts| {
            let opts: Vec<Option<(f64, f64)>> =
                pts.iter().map(|&(x, y)| Some((x as f64, y as f64))).collect();
            JointSet::from_options(&opts).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn affinity_matrix_is_symmetric_nonnegative_with_zero_conflicts(
        (probe, gallery) in graph_pair(),
    ) {
        let problem = MatchProblem::new(
            (0..probe.n_nodes()).collect(),
            (0..gallery.n_nodes()).collect(),
        ).unwrap();
        let aff = build_affinity_matrix(&probe, &gallery, &problem, 0.2, 1.0).unwrap();
        let n = aff.order();
        prop_assert_eq!(aff.k.nrows(), n);
        for a in 0..n {
            prop_assert!((0.0..=1.0).contains(&aff.k[(a, a)]));
            for b in 0..n {
                let v = aff.k[(a, b)];
                prop_assert!((0.0..=1.0).contains(&v));
                prop_assert_eq!(v, aff.k[(b, a)]);
                let (i1, i2) = problem.decode(a);
                let (j1, j2) = problem.decode(b);
                if a != b && (i1 == j1 || i2 == j2) {
                    prop_assert_eq!(v, 0.0);
                }
            }
        }
    }

    #[test]
    fn stripe_search_space_covers_the_stripe_and_respects_borders(
        rows in 4usize..=9,
        cols in 2usize..=4,
        n_stripes in 1usize..=4,
        expand in 0usize..=3,
    ) {
        prop_assume!(n_stripes <= rows);
        let layout = PatchLayout::new(
            8 * cols as u32 + 24, 12 * rows as u32 + 20, 32, 32, 8, 12, n_stripes,
        ).unwrap();
        prop_assume!(layout.n_rows == rows && layout.n_cols == cols);
        for stripe in 0..n_stripes {
            let problem = stripe_search_space(&layout, &layout, stripe, expand).unwrap();
            let (first, last) = layout.stripe_rows(stripe).unwrap();
            // Probe side is exactly the stripe's nodes.
            prop_assert_eq!(problem.n1(), (last - first + 1) * cols);
            // Gallery side adds `expand` rows each way, clamped at borders.
            let lo = first.saturating_sub(expand);
            let hi = (last + expand).min(rows - 1);
            prop_assert_eq!(problem.n2(), (hi - lo + 1) * cols);
            for &g in &problem.gallery_nodes {
                let r = layout.row_of(g);
                prop_assert!(r >= lo && r <= hi);
            }
        }
    }

    #[test]
    fn pose_descriptor_is_invariant_under_exact_translation_and_doubling(
        joints in integer_joints(),
        dx in -500i32..=500,
        dy in -500i32..=500,
        scale_pow in 0u32..=2,
    ) {
        let bins = 8;
        let base = compute_pose_context(&joints, bins).unwrap();
        prop_assert_eq!(pose_similarity(&base, &base).unwrap(), 1.0);

        let mut moved = joints.clone();
        for c in moved.coords.iter_mut() {
            c.0 += dx as f64;
            c.1 += dy as f64;
        }
        let moved_ctx = compute_pose_context(&moved, bins).unwrap();
        prop_assert_eq!(&moved_ctx, &base);

        let k = f64::from(1u32 << scale_pow);
        let mut scaled = joints.clone();
        for c in scaled.coords.iter_mut() {
            c.0 *= k;
            c.1 *= k;
        }
        let scaled_ctx = compute_pose_context(&scaled, bins).unwrap();
        prop_assert_eq!(&scaled_ctx, &base);
    }

    #[test]
    fn pose_similarity_is_symmetric_and_bounded(
        a in integer_joints(),
        b in integer_joints(),
    ) {
        let ca = compute_pose_context(&a, 8).unwrap();
        let cb = compute_pose_context(&b, 8).unwrap();
        let ab = pose_similarity(&ca, &cb).unwrap();
        let ba = pose_similarity(&cb, &ca).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!(ab > 0.0 && ab <= 1.0);
    }

    #[test]
    fn cmc_curves_are_monotone_with_terminal_100(
        n in 2usize..=20,
        seed in 0u64..1000,
    ) {
        let mut rng = gct::seed::stream(seed, "properties.cmc", 0);
        use rand::Rng;
        let d = DMatrix::from_fn(n, n, |_, _| rng.gen_range(0.0..1.0));
        let ids: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
        let curve = cmc_curve(&d, &ids, &ids).unwrap();
        prop_assert_eq!(curve.rates.len(), n);
        for w in curve.rates.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
        prop_assert_eq!(curve.rates.last().copied(), Some(100.0));
        for &r in &curve.rates {
            prop_assert!((0.0..=100.0).contains(&r));
        }
    }

    #[test]
    fn feature_files_reencode_byte_identically(
        raw in proptest::collection::vec(
            proptest::collection::vec(-10.0f64..10.0, 3),
            1..6,
        ),
    ) {
        let feats: Vec<DVector<f64>> = raw.into_iter().map(DVector::from_vec).collect();
        let bytes = encode_gctf(&feats).unwrap();
        let decoded = parse_gctf(&bytes, "prop").unwrap();
        // One quantization to f32 happens on the first encode; after that
        // the representation is a fixpoint.
        let again = encode_gctf(&decoded).unwrap();
        prop_assert_eq!(bytes, again);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn learned_distances_are_nonnegative_and_exactly_symmetric(
        sim_raw in proptest::collection::vec(
            (proptest::collection::vec(-1.0f64..1.0, 3),
             proptest::collection::vec(-1.0f64..1.0, 3)),
            5..9,
        ),
        dis_raw in proptest::collection::vec(
            (proptest::collection::vec(-1.0f64..1.0, 3),
             proptest::collection::vec(-1.0f64..1.0, 3)),
            5..9,
        ),
        probe in proptest::collection::vec(-2.0f64..2.0, 3),
        gallery in proptest::collection::vec(-2.0f64..2.0, 3),
    ) {
        let tup = |v: Vec<(Vec<f64>, Vec<f64>)>| -> Vec<(DVector<f64>, DVector<f64>)> {
            v.into_iter()
                .map(|(a, b)| (DVector::from_vec(a), DVector::from_vec(b)))
                .collect()
        };
        let metric = learn_metric(
            &tup(sim_raw),
            &tup(dis_raw),
            &MetricConfig { d_red: 3, reg: 1e-3 },
        ).unwrap();
        let x = DVector::from_vec(probe);
        let y = DVector::from_vec(gallery);
        let xy = metric.distance(&x, &y).unwrap();
        let yx = metric.distance(&y, &x).unwrap();
        prop_assert!(xy >= 0.0);
        prop_assert_eq!(xy, yx);
        prop_assert_eq!(metric.distance(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn discretized_assignments_are_valid_and_never_beat_the_oracle(
        seed in 0u64..500,
        n1 in 2usize..=4,
        extra in 0usize..=2,
    ) {
        use rand::Rng;
        let n2 = n1 + extra;
        let mut rng = gct::seed::stream(seed, "properties.solver", 0);
        let n = n1 * n2;
        let mut k = DMatrix::zeros(n, n);
        for a in 0..n {
            k[(a, a)] = rng.gen_range(0.0..1.0);
            for b in (a + 1)..n {
                if a / n2 == b / n2 || a % n2 == b % n2 {
                    continue;
                }
                let v = rng.gen_range(0.0..1.0);
                k[(a, b)] = v;
                k[(b, a)] = v;
            }
        }
        let aff = gct::affinity::AffinityMatrix { n1, n2, k };
        let cfg = Config::default();
        let soft = solve_relaxed(&aff, &cfg.solver).unwrap();
        let found = discretize(&soft, &aff).unwrap();

        // Exactly one gallery slot per probe slot, no slot reused.
        prop_assert_eq!(found.matches.len(), n1);
        let mut gallery_used: Vec<usize> = found.matches.iter().map(|m| m.1).collect();
        gallery_used.sort_unstable();
        gallery_used.dedup();
        prop_assert_eq!(gallery_used.len(), n1);
        for (i, &(p, g)) in found.matches.iter().enumerate() {
            prop_assert_eq!(p, i);
            prop_assert!(g < n2);
        }
        prop_assert!(found.objective >= 0.0);

        let oracle = brute_force_matching(&aff).unwrap();
        prop_assert!(found.objective <= oracle.objective + 1e-9);
    }
}
