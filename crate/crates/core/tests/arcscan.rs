use fiber_atlas::arc::{uniform_schedule, Arc};
use fiber_atlas::arcscan::*;
use fiber_atlas::poly::PolynomialMap;
use fiber_atlas::varnum::SampleConfig;

fn along(vars: &[&str], exprs: &[&str], from: Vec<f64>, to: Vec<f64>, steps: usize) -> (PolynomialMap, Arc) {
    let map = PolynomialMap::parse(vars, exprs).unwrap();
    let arc = Arc::segment(from, to).unwrap().with_schedule(uniform_schedule(steps)).unwrap();
    (map, arc)
}

fn fixed(radius: f64, seed: u64) -> ScanConfig {
    ScanConfig { radius: RadiusRule::Fixed { radius }, seed, ..Default::default() }
}

#[test]
fn hyperbola_family_jumps_in_beta0_at_zero() {
    let (map, arc) = along(&["x", "y"], &["x*(x*y-1)"], vec![0.0], vec![1.0], 10);
    let rep = scan_arc(&map, &arc, &fixed(3.0, 11), None).unwrap();
    assert_eq!(rep.records.len(), 11);
    for r in &rep.records[..10] {
        assert_eq!(r.betti().map(|b| b.0), Some(2), "s = {}", r.s);
    }
    assert_eq!(rep.records[10].betti().map(|b| b.0), Some(3));
    assert_eq!(rep.jumps.len(), 1);
    let j = &rep.jumps[0];
    assert_eq!((j.invariant.as_str(), j.s_to, j.before, j.after), ("beta0", 0.0, 2, 3));
    let v = atypicality_verdict(&rep, None);
    assert_eq!(v.verdict, VerdictKind::Atypical);
    assert_eq!(v.reasons, vec![REASON_BETA0.to_string()]);
}

#[test]
fn product_circle_fibration_shows_no_evidence() {
    let (map, arc) = along(&["x", "y", "t"], &["x^2+y^2", "t"], vec![1.0, 0.0], vec![1.0, 1.0], 10);
    let rep = scan_arc(&map, &arc, &fixed(3.0, 2), None).unwrap();
    assert!(rep.records.iter().all(|r| r.betti() == Some((1, 1)) && r.chi == Some(0)));
    assert!(rep.jumps.is_empty());
    assert!(rep.vanishing.is_empty());
    assert_eq!(atypicality_verdict(&rep, None).verdict, VerdictKind::NoEvidence);
}

#[test]
fn small_circle_vanishing_at_zero_is_flagged() {
    // at s = 0 the small circle degenerates to the singular point (0, 0),
    // which projection does not reach
    let (map, arc) = along(
        &["x", "y", "w"],
        &["(x^2+y^2-w)*((x-5)^2+y^2-1)", "w"],
        vec![0.0, 0.0],
        vec![0.0, 1.0],
        10,
    );
    let rep = scan_arc(&map, &arc, &fixed(7.0, 5), None).unwrap();
    assert_eq!(rep.records[9].betti().map(|b| b.0), Some(2));
    assert_eq!(rep.records[10].betti().map(|b| b.0), Some(1));
    assert_eq!(rep.vanishing.len(), 1);
    let flag = &rep.vanishing[0];
    assert_eq!(flag.chain.last().unwrap().0, 9);
    assert!(flag.last_centroid[0].abs() < 0.5);
    let v = atypicality_verdict(&rep, None);
    assert!(v.reasons.contains(&REASON_VANISHING.to_string()));
}

#[test]
fn circle_shrinking_to_a_sampled_point_is_not_flagged() {
    let (map, arc) = along(&["x", "y"], &["x^2+y^2"], vec![0.0], vec![1.0], 10);
    let rep = scan_arc(&map, &arc, &fixed(4.0, 5), None).unwrap();
    let end = rep.records.last().unwrap();
    assert_eq!(end.n_points, 1);
    assert_eq!(end.betti(), Some((1, 0)));
    assert!(rep.vanishing.is_empty());
    assert!(detect_vanishing_components(&rep, None).is_empty());
}

#[test]
fn equator_on_sphere_fibers_always_bounds() {
    let map = PolynomialMap::parse(&["x", "y", "z", "t"], &["x^2+y^2+z^2", "t"]).unwrap();
    let arc = Arc::segment(vec![1.0, 0.0], vec![1.5, 0.0]).unwrap().with_schedule(uniform_schedule(2)).unwrap();
    let family = MapAlongArc::new(map, arc.clone()).unwrap();
    let cut = PolynomialMap::parse(&["x", "y", "z", "t"], &["z"]).unwrap();
    let cfg = ScanConfig {
        radius: RadiusRule::Fixed { radius: 2.0 },
        sample: SampleConfig { count: 100_000, spacing: Some(0.08), ..Default::default() },
        seed: 4,
        ..Default::default()
    };
    let trace = track_loop_along_arc(&family, &arc.schedule, &cut, &cfg).unwrap();
    assert_eq!(trace.entries.len(), 3);
    for e in &trace.entries {
        assert_eq!(e.is_boundary, Some(true), "{:?}", e.error);
        assert!(e.max_gap.unwrap() <= 2.0 * e.median_gap.unwrap());
    }
    assert!(trace.entries.iter().skip(1).all(|e| !e.continuation_gap));
}

#[test]
fn core_circle_of_cylinder_fibers_never_bounds() {
    let map = PolynomialMap::parse(&["x", "y", "z", "t"], &["x^2+y^2", "t"]).unwrap();
    let arc = Arc::segment(vec![1.0, 0.0], vec![1.0, 1.0]).unwrap().with_schedule(uniform_schedule(2)).unwrap();
    let family = MapAlongArc::new(map, arc.clone()).unwrap();
    let cut = PolynomialMap::parse(&["x", "y", "z", "t"], &["z"]).unwrap();
    let cfg = ScanConfig {
        radius: RadiusRule::Fixed { radius: 2.0 },
        sample: SampleConfig { count: 100_000, spacing: Some(0.08), ..Default::default() },
        seed: 4,
        ..Default::default()
    };
    let trace = track_loop_along_arc(&family, &arc.schedule, &cut, &cfg).unwrap();
    assert!(trace.entries.iter().all(|e| e.is_boundary == Some(false)));
    let rep = scan_family(&family, &arc.schedule, &cfg, None).unwrap();
    assert_eq!(atypicality_verdict(&rep, Some(&trace)).verdict, VerdictKind::NoEvidence);
}

#[test]
fn unbounded_cut_locus_is_rejected() {
    // on a cylinder the cut {x = 0} is two lines leaving every ball
    let map = PolynomialMap::parse(&["x", "y", "z", "t"], &["x^2+y^2", "t"]).unwrap();
    let arc = Arc::segment(vec![1.0, 0.0], vec![1.0, 1.0]).unwrap().with_schedule(vec![1.0, 0.0]).unwrap();
    let family = MapAlongArc::new(map, arc.clone()).unwrap();
    let cut = PolynomialMap::parse(&["x", "y", "z", "t"], &["x"]).unwrap();
    let cfg = ScanConfig {
        radius: RadiusRule::Fixed { radius: 2.0 },
        sample: SampleConfig { count: 100_000, spacing: Some(0.1), ..Default::default() },
        ..Default::default()
    };
    let trace = track_loop_along_arc(&family, &arc.schedule, &cut, &cfg).unwrap();
    for e in &trace.entries {
        assert_eq!(e.is_boundary, None);
        assert!(e.error.as_deref().unwrap().contains("not a circle"));
    }
}

#[test]
fn per_fiber_csvs_are_named_by_schedule_index() {
    let (map, arc) = along(&["x", "y", "t"], &["x^2+y^2", "t"], vec![1.0, 0.0], vec![1.0, 1.0], 2);
    let dir = tempfile::tempdir().unwrap();
    let cfg = ScanConfig { emit_persistence: true, ..fixed(2.0, 1) };
    let rep = scan_arc(&map, &arc, &cfg, Some(dir.path())).unwrap();
    for i in 0..3 {
        let text = std::fs::read_to_string(dir.path().join(format!("fiber_{i:03}.csv"))).unwrap();
        assert!(text.starts_with("x,y,t,residual\n"));
        assert_eq!(text.lines().count(), rep.records[i].n_points + 1);
        assert!(dir.path().join(format!("persistence_{i:03}.csv")).exists());
    }
}

#[test]
fn reports_are_deterministic_across_thread_counts() {
    let (map, arc) = along(&["x", "y"], &["x*(x*y-1)"], vec![0.0], vec![1.0], 4);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| scan_arc(&map, &arc, &fixed(3.0, 9), None).unwrap().to_json())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn mismatched_arc_is_rejected() {
    let map = PolynomialMap::parse(&["x", "y"], &["x*y"]).unwrap();
    let arc = Arc::segment(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
    assert!(matches!(MapAlongArc::new(map, arc), Err(ArcScanError::InvalidInput(_))));
}

#[test]
fn failed_fibers_are_recorded_not_fatal() {
    // x^2 + y^2 = s - 1/2 is empty at s = 0
    let (map, arc) = along(&["x", "y"], &["x^2+y^2+1/2"], vec![0.0], vec![1.0], 2);
    let rep = scan_arc(&map, &arc, &fixed(2.0, 1), None).unwrap();
    assert!(rep.records[0].error.is_none());
    assert!(rep.records[2].error.as_deref().unwrap().contains("appears empty"));
    assert!(rep.jumps.iter().all(|j| j.to_index != 2 && j.from_index != 2));
}
