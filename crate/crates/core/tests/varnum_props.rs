mod common;

use common::*;
use fiber_atlas::poly::PolynomialMap;
use fiber_atlas::spatial::dist;
use fiber_atlas::varnum::*;
use proptest::prelude::*;

fn torus() -> PolynomialMap {
    // (sqrt(x^2+y^2) - 2)^2 + z^2 = 1/4, squared out
    PolynomialMap::parse(&["x", "y", "z"], &["(x^2+y^2+z^2+4-1/4)^2-16*(x^2+y^2)"]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn projection_is_idempotent(start in prop::collection::vec(-3.0f64..3.0, 3)) {
        let map = torus();
        let cfg = ProjectConfig::default();
        if let Ok(p) = project_to_fiber(&map, &[0.0], &start, &cfg) {
            let q = project_to_fiber(&map, &[0.0], &p, &cfg).unwrap();
            prop_assert!(dist(&p, &q) <= cfg.tol, "moved {}", dist(&p, &q));
        }
    }

    #[test]
    fn morse_index_ignores_tangent_basis(seed in 0u64..10_000) {
        let rf = random_constrained_problem(seed);
        let search = constrained_critical_points(&rf, &[-2.0; 3], &[2.0; 3], &critical_config(seed)).unwrap();
        let mut r = rng(seed ^ 0x5eed);
        for cp in &search.points {
            prop_assert!(cp.kkt_residual <= 1e-9);
            prop_assert!(rf.equalities.eval(&cp.location).unwrap()[0].abs() <= 1e-9);
            let q = random_rotation(&mut r, cp.eigenvalues.len());
            let eig = rotated_eigenvalues(&rf, &cp.location, &cp.multipliers, &q);
            for (a, b) in eig.iter().zip(&cp.eigenvalues) {
                prop_assert!((a - b).abs() <= 1e-8, "{:?} vs {:?}", eig, cp.eigenvalues);
            }
            if !cp.degenerate {
                prop_assert_eq!(eig.iter().filter(|e| **e < 0.0).count(), cp.morse_index);
            }
        }
    }
}

#[test]
fn restricted_hessian_matches_finite_differences() {
    let mut checked = 0;
    for seed in 0..50 {
        if let Some(gap) = hessian_vs_finite_differences(&random_constrained_problem(seed), seed) {
            assert!(gap <= 1e-4, "seed {seed}: {gap}");
            checked += 1;
        }
    }
    assert_eq!(checked, 50);
}

#[test]
fn sampling_is_byte_identical_for_a_seed() {
    let cfg = SampleConfig { count: 3000, ..Default::default() };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sample_fiber(&torus(), &[0.0], 4.0, 17, &cfg).unwrap().to_json())
    };
    let a = run(1);
    assert_eq!(a, run(1));
    assert_eq!(a, run(4));
}
