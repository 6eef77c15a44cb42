mod common;

use common::random;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use selinf_core::architecture::{compose_rt, interaction_contrast, CompositionRule};
use selinf_core::distance::{class_distance, power_distance, MetricSpec};
use selinf_core::transform::random_permutations;
use selinf_core::*;

fn pmf_strategy() -> impl Strategy<Value = JointPmf> {
    prop::collection::vec(1usize..=3, 1..=4).prop_flat_map(|dims| {
        let cells: usize = dims.iter().product();
        prop::collection::vec(0.0f64..1.0, cells).prop_map(move |w| {
            let s: f64 = w.iter().sum::<f64>().max(1e-9);
            JointPmf::new(dims.clone(), w.iter().map(|x| x / s).collect()).unwrap()
        })
    })
}

fn generated(seed: u64) -> System {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let design = random::design(&mut rng, 3, 3, 3);
    let model = random::latent(&mut rng, &design, 6);
    generate_system(&design, &model).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn marginalize_is_idempotent_and_preserves_mass(p in pmf_strategy(), pick in any::<u64>()) {
        let idx: Vec<usize> = (0..p.arity()).filter(|k| pick >> k & 1 == 1).collect();
        let once = p.marginalize(&idx).unwrap();
        let all: Vec<usize> = (0..once.arity()).collect();
        prop_assert_eq!(once.marginalize(&all).unwrap(), once.clone());
        prop_assert!((once.total() - p.total()).abs() <= 4.0 * f64::EPSILON * p.len() as f64);
    }

    #[test]
    fn permuting_then_projecting_commutes(p in pmf_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = p.arity();
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let permuted = p.marginalize(&perm).unwrap();
        // Coordinate j of `permuted` is coordinate perm[j] of `p`; project onto the first half.
        let keep: Vec<usize> = (0..n.div_ceil(2)).collect();
        let via_perm = permuted.marginalize(&keep).unwrap();
        let direct = p.marginalize(&keep.iter().map(|&j| perm[j]).collect::<Vec<_>>()).unwrap();
        for (a, b) in via_perm.masses().iter().zip(direct.masses()) {
            prop_assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn generated_systems_have_level_determined_marginals(seed in any::<u64>()) {
        let s = generated(seed);
        prop_assert!(validate_system(&s, EPS_PROB).is_empty());
        let r = check_marginal_selectivity(&s, s.n().saturating_sub(1), 1e-12);
        prop_assert!(r.pass, "{:?}", r);
    }

    #[test]
    fn generated_systems_are_feasible_and_witnesses_push_back(seed in any::<u64>()) {
        let s = generated(seed);
        let fs = build_feasibility_system(&s).unwrap();
        let v = solve_feasibility(&fs, EPS_LP).unwrap();
        prop_assert!(v.feasible);
        let w = v.witness.unwrap();
        for (t, treatment) in s.design.treatments.iter().enumerate() {
            let coords: Vec<(usize, usize)> = treatment.0.iter().enumerate().map(|(k, &l)| (k, l)).collect();
            let pushed = extract_coupling_marginals(&w, &fs, &coords).unwrap();
            prop_assert!(pushed.sup_distance(s.pmf(t)) <= 2.0 * EPS_LP);
        }
    }

    #[test]
    fn lp_verdict_is_invariant_under_relabeling(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tables = random::fine_instance(&mut rng);
        let s = common::binary_system(tables);
        let base = solve_feasibility(&build_feasibility_system(&s).unwrap(), EPS_LP).unwrap().feasible;
        for spec in random_permutations(&s.design, 4, seed) {
            let t = apply_transform(&s, &spec).unwrap();
            let v = solve_feasibility(&build_feasibility_system(&t).unwrap(), EPS_LP).unwrap();
            prop_assert_eq!(v.feasible, base);
        }
    }

    #[test]
    fn one_sided_power_distance_obeys_the_triangle_inequality(
        x in -10.0f64..10.0, y in -10.0f64..10.0, z in -10.0f64..10.0, p in 0.0f64..=1.0,
    ) {
        let d = |a: f64, b: f64| if a < b { (b - a).powf(p) } else { 0.0 };
        prop_assert!(d(x, z) <= d(x, y) + d(y, z) + 1e-12);
    }

    #[test]
    fn pairwise_distances_satisfy_triangles_within_a_treatment(seed in any::<u64>(), p in 0.0f64..=1.0) {
        // Three outputs jointly distributed at one treatment.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = vec![3, 3, 3];
        let pmf = JointPmf::new(dims, random::weights(&mut rng, 27)).unwrap();
        let xs: Vec<Vec<f64>> = (0..3).map(|_| (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect();
        let d = |a: usize, b: usize| power_distance(&pmf.marginalize(&[a, b]).unwrap(), &xs[a], &xs[b], p);
        for (a, b, c) in [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)] {
            prop_assert!(d(a, c) <= d(a, b) + d(b, c) + 1e-12);
        }
    }

    #[test]
    fn class_distance_is_power_zero_on_class_indices(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pmf = JointPmf::new(vec![4, 3], random::weights(&mut rng, 12)).unwrap();
        let cx: Vec<usize> = (0..4).map(|_| rng.gen_range(0..3)).collect();
        let cy: Vec<usize> = (0..3).map(|_| rng.gen_range(0..3)).collect();
        let as_f64 = |c: &[usize]| c.iter().map(|&i| i as f64).collect::<Vec<_>>();
        let via_power = power_distance(&pmf, &as_f64(&cx), &as_f64(&cy), 0.0);
        prop_assert!((class_distance(&pmf, &cx, &cy) - via_power).abs() <= 1e-15);
    }

    #[test]
    fn class_verdict_ignores_relabels_within_classes(seed in any::<u64>()) {
        let s = common::distance_example();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let partitions = vec![vec![vec![0, 1], vec![2]], vec![vec![0], vec![1, 2]]];
        let metric = MetricSpec::Classification { partitions: partitions.clone() };
        let base = run_distance_test(&s, &metric, 6, EPS_TEST).unwrap().verdict;
        // Swap the values of each two-element class, independently per level.
        let maps = vec![
            (0..2).map(|_| if rng.gen_bool(0.5) { vec![1, 0, 2] } else { vec![0, 1, 2] }).collect(),
            (0..2).map(|_| if rng.gen_bool(0.5) { vec![0, 2, 1] } else { vec![0, 1, 2] }).collect(),
        ];
        let spec = TransformSpec::new("within-class", s.design.outputs.clone(), maps);
        let t = apply_transform(&s, &spec).unwrap();
        prop_assert_eq!(run_distance_test(&t, &metric, 6, EPS_TEST).unwrap().verdict, base);
    }

    #[test]
    fn correlation_is_affine_invariant(seed in any::<u64>(), a in 0.1f64..10.0, b in -5.0f64..5.0, c in 0.1f64..10.0, d in -5.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pmf = JointPmf::new(vec![3, 3], random::weights(&mut rng, 9)).unwrap();
        let xs = [0.0, 1.0, 5.0];
        let ys = [-1.0, 2.0, 3.0];
        let r = correlation(&pmf, &xs, &ys).unwrap();
        let xs2 = xs.map(|x| a * x + b);
        let ys2 = ys.map(|y| c * y + d);
        prop_assert!((correlation(&pmf, &xs2, &ys2).unwrap() - r).abs() <= 1e-12);
    }

    #[test]
    fn feasible_bivariate_systems_pass_cosphericity(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let payloads = [0.0, 1.0, 3.5];
        let design = Design::fully_crossed(
            common::two_by_two_inputs(),
            vec![OutputSpec::numeric("A1", &payloads[..rng.gen_range(2..=3)]), OutputSpec::numeric("A2", &payloads[..rng.gen_range(2..=3)])],
        );
        let s = generate_system(&design, &random::latent(&mut rng, &design, 6)).unwrap();
        if let Ok(results) = run_cosphericity(&s, EPS_COSPH) {
            prop_assert!(results.iter().all(|r| r.pass));
        }
    }

    #[test]
    fn contrast_is_linear_in_the_latent_mixture(seed in any::<u64>(), w in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (design, m1) = random::prolonged(&mut rng, 4, 5);
        let mut m2 = m1.clone();
        let r = m1.latent_size();
        m2.latent = JointPmf::new(vec![r], random::weights(&mut rng, r)).unwrap();
        let mixed = {
            let mut m = m1.clone();
            m.latent = m1.latent.mix(&m2.latent, 1.0 - w).unwrap();
            m
        };
        let grid = random::covering_grid(5);
        for rule in [CompositionRule::Plus, CompositionRule::Min, CompositionRule::Max] {
            let p1 = interaction_contrast(&compose_rt(&design, &m1, rule, &grid).unwrap());
            let p2 = interaction_contrast(&compose_rt(&design, &m2, rule, &grid).unwrap());
            let pm = interaction_contrast(&compose_rt(&design, &mixed, rule, &grid).unwrap());
            for i in 0..grid.len() {
                let c = w * p1.c[i] + (1.0 - w) * p2.c[i];
                let cum = w * p1.cumulative[i] + (1.0 - w) * p2.cumulative[i];
                prop_assert!((pm.c[i] - c).abs() <= 1e-12);
                prop_assert!((pm.cumulative[i] - cum).abs() <= 1e-11);
            }
        }
    }
}
