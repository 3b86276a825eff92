mod common;

use common::f_oracle;
use fiber_atlas::example5::*;
use fiber_atlas::poly::{isolate_real_roots, rat, rational_to_f64, square_free_part};
use num_traits::Zero;

/// `f1` on the slice `f2 = 0`, times the squared denominator of `v`.
fn reduced_oracle(x: f64, y: f64, z: f64, u: f64) -> f64 {
    let d = (u * u + 1.0) * (z * z + 1.0);
    let v = (z * z + u * u) / d;
    d * d * f_oracle([x, y, z, u, v])[0]
}

#[test]
fn exact_reference_values() {
    let b = build_example();
    let exact = b.map.eval_exact(&[rat(2, 1), rat(0, 1), rat(0, 1), rat(1, 1), rat(1, 2)]).unwrap();
    assert_eq!(exact, vec![rat(0, 1), rat(0, 1), rat(1, 1)]);
    assert_eq!(f_oracle([2.0, 0.0, 0.0, 1.0, 0.5]), [0.0, 0.0, 1.0]);

    let x0 = b.reduced_surface(&rat(0, 1));
    assert_eq!(x0.component(0).eval_exact(&[rat(0, 1), rat(0, 1), rat(0, 1)]).unwrap(), rat(-1, 1));

    let [ax, ay, az] = b.reference.p_level_one_anchor;
    assert_eq!(ax - az * az, 1.0);
    let circle = ay * ay + (az * az - 1.0) * (az * az + 1.0) * (az * az + 2.0);
    assert!(circle.abs() <= 1e-12);
    assert!(x0.eval(&[ax, ay, az]).unwrap()[0].abs() <= 1e-12);

    for p in [[0.3, -1.0, 2.0, 0.5, 0.1], [-4.0, 0.0, 1.0, 0.0, 7.0]] {
        let row: Vec<f64> = b.map.jacobian(&p).unwrap().row(2).iter().copied().collect();
        assert_eq!(row, vec![0.0, 0.0, 0.0, 1.0, 0.0]);
    }
}

#[test]
fn reduced_surface_matches_direct_elimination() {
    let b = build_example();
    for u in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let s = b.reduced_surface_f64(u);
        for (x, y, z) in [(0.5, 1.0, -0.3), (3.0, -2.0, 1.5), (-1.0, 0.0, 0.7)] {
            let a = s.eval(&[x, y, z]).unwrap()[0];
            let o = reduced_oracle(x, y, z, u);
            assert!((a - o).abs() <= 1e-9 * (1.0 + o.abs()), "u={u}: {a} vs {o}");
        }
    }
}

#[test]
fn g_has_two_simple_real_roots_on_the_grid() {
    let b = build_example();
    for (un, ud) in [(1, 4), (1, 2), (1, 1)] {
        for vn in 1..=9 {
            let (u, v) = (rat(un, ud), rat(vn, 10));
            let slice = b.g_slice(&u, &v);
            assert!(!square_free_part(&slice).unwrap().has_multiple_root);
            // the exact roots
            assert!(slice.poly().eval(&-(rat(1, 1) / (&u * &u))).is_zero());
            assert!(slice.poly().eval(&(rat(1, 1) / &v)).is_zero());
            let roots = isolate_real_roots(&slice, &rat(1, 100_000_000_000_000)).unwrap().approximations();
            let uf = rational_to_f64(&u);
            let vf = rational_to_f64(&v);
            assert_eq!(roots.len(), 2, "u={u} v={v}");
            assert!((roots[0] + 1.0 / (uf * uf)).abs() <= 1e-10);
            assert!((roots[1] - 1.0 / vf).abs() <= 1e-10);
        }
    }
}

#[test]
fn case_ii_has_no_common_solution() {
    let b = build_example();
    for u in [0.25, 0.5, 0.75, 1.0] {
        let c = case_ii_check(&b, u);
        assert!(c.no_common_solution, "{c:?}");
    }
}

#[test]
fn morse_point_and_chart_hessian_at_u_one() {
    let b = build_example();
    let cfg = ClaimConfig { seed: 3, morse_grid: vec![1.0], ..Default::default() };
    let rows = verify_morse_points(&b, &cfg);
    let row = &rows[0];
    assert!(row.ok, "{row:?}");
    let p = &row.points[0];
    assert!((p.location[0] - 2.0).abs() <= 1e-8 && p.location[1].abs() <= 1e-8 && p.location[2].abs() <= 1e-8);
    assert_eq!(p.morse_index, 2);
    let chart = p.chart.as_ref().unwrap();
    assert_eq!(chart.variables, vec!["y", "z"]);
    let mut eig = chart.eigenvalues.clone();
    eig.sort_by(f64::total_cmp);
    assert!((eig[0] + 2.0).abs() <= 1e-6 && (eig[1] + 1.0 / 3.0).abs() <= 1e-6, "{eig:?}");
}

#[test]
fn claim1_certifies_and_the_mutant_is_caught() {
    let b = build_example();
    let cfg = ClaimConfig { seed: 5, ..Default::default() };
    let ok = verify_claim1(&b, &cfg);
    assert_eq!(ok.status, ClaimStatus::Pass, "{:?}", ok.notes);
    assert!(ok.min_residual.unwrap() > 1e-4);
    assert!(ok.certify.as_ref().unwrap().all_gcd_negative);
    let bad = verify_claim1(&b.planted_mutant(), &cfg);
    assert_eq!(bad.status, ClaimStatus::Fail);
    assert!(bad.candidate.is_some());
}

#[test]
fn loose_candidate_tolerance_cannot_pass() {
    let b = build_example();
    let mut cfg = ClaimConfig { seed: 5, ..Default::default() };
    cfg.certify.candidate_tol = 1e-3;
    cfg.certify.multistart_n = 200;
    assert_eq!(verify_claim1(&b, &cfg).status, ClaimStatus::Inconclusive);
}
