//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! fails. The twenty-seed topology runs dominate; expect about half an hour
//! on a single core.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use common::*;
use fiber_atlas::arc::{uniform_schedule, Arc};
use fiber_atlas::arcscan::{atypicality_verdict, scan_arc, RadiusRule, ScanConfig, VerdictKind, REASON_BETA0};
use fiber_atlas::example5::*;
use fiber_atlas::poly::{isolate_real_roots, rat, rational_to_f64, square_free_part};
use fiber_atlas::PolynomialMap;
use num_traits::Zero;

const SEEDS: u64 = 20;

struct Check {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Check {
    Check { pass, detail: detail.into() }
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

fn exact_values(b: &Example5Bundle) -> Check {
    let t = Instant::now();
    let mut bad = Vec::new();
    let value = b.map.eval_exact(&[rat(2, 1), rat(0, 1), rat(0, 1), rat(1, 1), rat(1, 2)]).unwrap();
    if value != vec![rat(0, 1), rat(0, 1), rat(1, 1)] || f_oracle([2.0, 0.0, 0.0, 1.0, 0.5]) != [0.0, 0.0, 1.0] {
        bad.push("F(2,0,0,1,1/2)");
    }
    // y^2 + g0 at the origin of X_0 is g0(0,0)
    if b.reduced_surface(&rat(0, 1)).component(0).eval_exact(&[rat(0, 1), rat(0, 1), rat(0, 1)]).unwrap() != rat(-1, 1)
        || f_oracle([0.0; 5])[0] != -1.0
    {
        bad.push("g0(0,0)");
    }
    let [ax, ay, az] = b.reference.p_level_one_anchor;
    let circle = ay * ay + (az * az - 1.0) * (az * az + 1.0) * (az * az + 2.0);
    if (ax, az) != (1.0, 0.0) || (ay - 2f64.sqrt()).abs() > 1e-15 || circle.abs() > 1e-12 {
        bad.push("anchor");
    }
    for p in [[0.3, -1.0, 2.0, 0.5, 0.1], [-4.0, 0.0, 1.0, 0.0, 7.0], [2.0, 0.0, 0.0, 1.0, 0.5]] {
        let row: Vec<f64> = b.map.jacobian(&p).unwrap().row(2).iter().copied().collect();
        if row != [0.0, 0.0, 0.0, 1.0, 0.0] {
            bad.push("Jacobian row");
        }
    }
    let s = secs(t);
    check(bad.is_empty() && s < 1.0, format!("exact values, failures {bad:?}, {s:.3} s"))
}

fn root_structure(b: &Example5Bundle) -> Check {
    let t = Instant::now();
    let mut ok = 0;
    for (un, ud) in [(1, 4), (1, 2), (1, 1)] {
        for vn in 1..=9 {
            let (u, v) = (rat(un, ud), rat(vn, 10));
            let slice = b.g_slice(&u, &v);
            let simple = !square_free_part(&slice).unwrap().has_multiple_root;
            let exact = slice.poly().eval(&-(rat(1, 1) / (&u * &u))).is_zero() && slice.poly().eval(&(rat(1, 1) / &v)).is_zero();
            let roots = isolate_real_roots(&slice, &rat(1, 100_000_000_000_000)).unwrap().approximations();
            let (uf, vf) = (rational_to_f64(&u), rational_to_f64(&v));
            let close = roots.len() == 2
                && (roots[0] + 1.0 / (uf * uf)).abs() <= 1e-10
                && (roots[1] - 1.0 / vf).abs() <= 1e-10;
            if simple && exact && close {
                ok += 1;
            }
        }
    }
    let s = secs(t);
    check(ok == 27 && s < 5.0, format!("two simple roots at {ok}/27 grid points, {s:.2} s"))
}

fn claim1(b: &Example5Bundle) -> Check {
    let t = Instant::now();
    let cfg = ClaimConfig::default();
    let r = verify_claim1(b, &cfg);
    let mutant = verify_claim1(&b.planted_mutant(), &cfg);
    let s = secs(t);
    let min = r.min_residual.unwrap_or(0.0);
    let gcd = r.certify.as_ref().is_some_and(|c| c.all_gcd_negative);
    let shape = cfg.certify_grid.len() == 11 && cfg.certify.multistart_n == 2000;
    check(
        shape && r.status == ClaimStatus::Pass && min > 1e-4 && gcd && mutant.status == ClaimStatus::Fail && s < 120.0,
        format!(
            "claim 1 {:?}, min residual {min:.3e}, gcd negative {gcd}, mutant {:?}, {s:.1} s",
            r.status, mutant.status
        ),
    )
}

fn morse(b: &Example5Bundle) -> Check {
    let t = Instant::now();
    let rows = verify_morse_points(b, &ClaimConfig::default());
    let s = secs(t);
    let grid: Vec<f64> = rows.iter().map(|r| r.u).collect();
    let each = rows.iter().all(|r| {
        r.ok && r.points.len() == 1 && r.location_error.is_some_and(|e| e <= 1e-8) && r.points[0].morse_index == 2
    });
    let chart = rows.iter().find(|r| r.u == 1.0).and_then(|r| r.points.first()).and_then(|p| p.chart.clone());
    let eig_ok = chart.as_ref().is_some_and(|c| {
        let mut e = c.eigenvalues.clone();
        e.sort_by(f64::total_cmp);
        c.variables == ["y", "z"] && (e[0] + 2.0).abs() <= 1e-6 && (e[1] + 1.0 / 3.0).abs() <= 1e-6
    });
    let eig = chart.map(|c| c.eigenvalues);
    check(
        grid == [0.5, 0.75, 1.0] && each && eig_ok && s < 30.0,
        format!("Morse points on u = {grid:?}: index 2 and located {each}; chart eigenvalues at u=1 {eig:?}; {s:.1} s"),
    )
}

struct SeedRun {
    seed: u64,
    topology_ok: bool,
    per_fiber: f64,
    loops_ok: bool,
    constant: bool,
    loop_secs: f64,
    note: String,
}

fn seeded_runs(b: &Example5Bundle) -> Vec<SeedRun> {
    (0..SEEDS)
        .map(|seed| {
            let cfg = ClaimConfig { seed, ..Default::default() };
            let t = Instant::now();
            let c23 = verify_claims23(b, &cfg);
            let per_fiber = secs(t) / c23.fibers.len().max(1) as f64;
            let t = Instant::now();
            let c4 = verify_claim4(b, &cfg);
            let loop_secs = secs(t);
            let row = |u: f64| c23.fibers.iter().find(|r| r.u == u);
            let topology_ok = [0.0, 0.25, 0.5, 1.0].iter().all(|&u| {
                row(u).is_some_and(|r| r.n_points >= 2000 && (r.beta0, r.beta1, r.chi) == (Some(1), Some(1), Some(0)))
            });
            let bounds = |u: f64| c4.loops.iter().find(|l| l.u == u).and_then(|l| l.is_boundary);
            let loops_ok = [0.25, 0.5, 1.0].iter().all(|&u| bounds(u) == Some(true)) && bounds(0.0) == Some(false);
            let constant = !c23.fibers.is_empty() && c23.fibers.iter().all(|r| (r.beta0, r.beta1) == (Some(1), Some(1)));
            let table: Vec<String> =
                c23.fibers.iter().map(|r| format!("u={}:{:?}/{:?}", r.u, r.beta0, r.beta1)).collect();
            let loops: Vec<String> = c4.loops.iter().map(|l| format!("u={}:{:?}", l.u, l.is_boundary)).collect();
            let note = format!("betti {} | loops {}", table.join(" "), loops.join(" "));
            println!("  seed {seed}: {note} ({per_fiber:.1} s/fiber, loops {loop_secs:.1} s)");
            SeedRun { seed, topology_ok, per_fiber, loops_ok, constant, loop_secs, note }
        })
        .collect()
}

fn fiber_topology(runs: &[SeedRun]) -> Check {
    let ok = runs.iter().filter(|r| r.topology_ok).count();
    let worst = runs.iter().map(|r| r.per_fiber).fold(0.0, f64::max);
    let failed: Vec<u64> = runs.iter().filter(|r| !r.topology_ok).map(|r| r.seed).collect();
    check(
        ok >= 18 && worst < 120.0,
        format!("(1,1,0) at u in {{0,0.25,0.5,1}} in {ok}/{SEEDS} seeds (failing {failed:?}); worst {worst:.1} s per fiber"),
    )
}

fn loop_dichotomy(runs: &[SeedRun], full: &ClaimReport) -> Check {
    let ok = runs.iter().filter(|r| r.loops_ok && r.constant).count();
    let worst = runs.iter().map(|r| r.loop_secs).fold(0.0, f64::max);
    for r in runs.iter().filter(|r| !(r.loops_ok && r.constant)) {
        println!("  seed {} misses the dichotomy: {}", r.seed, r.note);
    }
    let shown = full.verdict.verdict == VerdictKind::Atypical
        && full.homology_constant
        && full.summary.contains("ATYPICAL")
        && full.summary.contains("betti table constant");
    check(
        ok >= 18 && shown && worst < 180.0,
        format!(
            "bounds at 0.25/0.5/1, not at 0, betti constant in {ok}/{SEEDS} seeds; worst {worst:.1} s; report: {}",
            full.summary
        ),
    )
}

fn oracle_suites() -> Check {
    let uf = (0..100).filter(|&s| {
        let (a, b) = beta0_both_ways(s);
        a == b
    });
    let uf = uf.count();
    let mut hess_ok = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..50 {
        if let Some(gap) = hessian_vs_finite_differences(&random_constrained_problem(seed), seed) {
            worst = worst.max(gap);
            if gap <= 1e-4 {
                hess_ok += 1;
            }
        }
    }
    let manifolds: Vec<(Manifold, usize)> = Manifold::ALL
        .iter()
        .map(|&m| (m, (0..SEEDS).filter(|&s| auto_betti(&m.sample(s)) == m.betti()).count()))
        .collect();
    let synth = manifolds.iter().all(|(_, k)| *k as f64 >= 0.95 * SEEDS as f64);
    check(
        uf == 100 && hess_ok == 50 && synth,
        format!("union-find = reduction {uf}/100; Hessian within 1e-4 {hess_ok}/50 (worst {worst:.1e}); synthetic {manifolds:?}"),
    )
}

fn negative_control() -> Check {
    let t = Instant::now();
    let fixed = |radius: f64, seed: u64| ScanConfig { radius: RadiusRule::Fixed { radius }, seed, ..Default::default() };
    let along = |vars: &[&str], exprs: &[&str], from: Vec<f64>, to: Vec<f64>| {
        let map = PolynomialMap::parse(vars, exprs).unwrap();
        (map, Arc::segment(from, to).unwrap().with_schedule(uniform_schedule(10)).unwrap())
    };
    let (map, arc) = along(&["x", "y"], &["x*(x*y-1)"], vec![0.0], vec![1.0]);
    let rep = scan_arc(&map, &arc, &fixed(3.0, 11), None).unwrap();
    let jump = rep.jumps.len() == 1 && {
        let j = &rep.jumps[0];
        (j.invariant.as_str(), j.s_to, j.before, j.after) == ("beta0", 0.0, 2, 3)
    };
    let v = atypicality_verdict(&rep, None);
    let atypical = v.verdict == VerdictKind::Atypical && v.reasons == [REASON_BETA0];
    let (map, arc) = along(&["x", "y", "t"], &["x^2+y^2", "t"], vec![1.0, 0.0], vec![1.0, 1.0]);
    let rep = scan_arc(&map, &arc, &fixed(3.0, 2), None).unwrap();
    let quiet = atypicality_verdict(&rep, None).verdict == VerdictKind::NoEvidence;
    let s = secs(t);
    check(
        jump && atypical && quiet && s < 30.0,
        format!("x(xy-1): beta0 2->3 at s=0 {jump}, verdict {}; product fibration NO-EVIDENCE {quiet}; {s:.1} s", v.line()),
    )
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

fn guarded(f: impl FnOnce() -> Check) -> Check {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        check(false, format!("panicked: {msg}"))
    })
}

fn main() -> ExitCode {
    let b = build_example();
    let mut lines: Vec<(u8, Check)> = Vec::new();
    let mut report = |n: u8, c: Check| {
        println!("criterion {n}: {} {}", if c.pass { "PASS" } else { "FAIL" }, c.detail);
        lines.push((n, c));
    };
    report(1, guarded(|| exact_values(&b)));
    report(2, guarded(|| root_structure(&b)));
    report(3, guarded(|| claim1(&b)));
    report(5, guarded(|| morse(&b)));
    report(7, guarded(oracle_suites));
    report(8, guarded(negative_control));

    let full = catch_unwind(AssertUnwindSafe(|| {
        let one = in_pool(1, || verify_all(&ClaimConfig::default(), None));
        let four = in_pool(4, || verify_all(&ClaimConfig::default(), None));
        (one, four)
    }));
    let runs = catch_unwind(AssertUnwindSafe(|| seeded_runs(&b)));
    match &runs {
        Ok(runs) => report(4, fiber_topology(runs)),
        Err(_) => report(4, check(false, "seeded runs panicked")),
    }
    match (&runs, &full) {
        (Ok(runs), Ok((one, _))) => report(6, loop_dichotomy(runs, one)),
        _ => report(6, check(false, "seeded or full runs panicked")),
    }
    match &full {
        Ok((one, four)) => {
            let same = one.to_json() == four.to_json();
            report(9, check(same, format!("seed 0 report at 1 vs 4 threads byte-identical: {same}")));
        }
        Err(_) => report(9, check(false, "full run panicked")),
    }

    lines.sort_by_key(|(n, _)| *n);
    let failed: Vec<u8> = lines.iter().filter(|(_, c)| !c.pass).map(|(n, _)| *n).collect();
    println!("acceptance: {}/{} criteria pass", lines.len() - failed.len(), lines.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failing: {failed:?}");
        ExitCode::FAILURE
    }
}
