use std::path::Path;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::bundle::{build_example, Example5Bundle, VARS3, VARS5};
use crate::arcscan::{
    atypicality_verdict, index_seed, scan_family, track_loop_along_arc, ArcReport, ArcScanError, Fiber, FiberFamily,
    LoopTrace, RadiusRule, ScanConfig, Verdict,
};
use crate::poly::{isolate_real_roots, rat, rational_near, Polynomial, PolynomialMap, UnivariateSlice};
use crate::topo::DEFAULT_SCALE_FACTOR;
use crate::varnum::{
    certify_no_singularity_on_arc, constrained_critical_points, estimate_milnor_radius, CertifyConfig, CertifyReport,
    CriticalConfig, CriticalPoint, GcdCheck, MilnorConfig, MilnorEstimate, SampleConfig, SingularitySystem,
    VarnumError,
};

/// The reduced surfaces `X_u` along the arc, `u = s`.
pub struct ReducedFamily<'a>(pub &'a Example5Bundle);

impl FiberFamily for ReducedFamily<'_> {
    fn variables(&self) -> Vec<String> {
        VARS3.iter().map(|s| s.to_string()).collect()
    }

    fn fiber(&self, s: f64) -> Result<Fiber, ArcScanError> {
        Ok(Fiber {
            map: self.0.reduced_surface(&rational_near(s, 1000)),
            level: vec![0.0],
            target: self.0.arc.eval(s),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClaimStatus {
    Pass,
    Fail,
    Inconclusive,
}

impl ClaimStatus {
    /// Lowers `self` to `other` when `other` is worse.
    fn at_most(self, other: ClaimStatus) -> ClaimStatus {
        use ClaimStatus::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Pass,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClaimConfig {
    pub seed: u64,
    /// Ball radius for the fiber topology.
    pub radius: f64,
    pub topology_grid: Vec<f64>,
    pub morse_grid: Vec<f64>,
    pub certify_grid: Vec<f64>,
    pub certify: CertifyConfig,
    /// The singularity system's smallest residual must exceed this.
    pub residual_floor: f64,
    /// Candidate tolerances looser than this cannot certify anything.
    pub max_candidate_tol: f64,
    /// Values of `z` (as `numerator/denominator`) whose `v` feed the exact gcd checks.
    pub gcd_z: Vec<(i64, i64)>,
    pub milnor_grid: Vec<f64>,
    pub milnor: MilnorConfig,
    pub sample: SampleConfig,
    pub scale_factor: f64,
    pub simplex_cap: usize,
    pub critical: CriticalConfig,
    pub morse_tol: f64,
    /// Write `persistence_NNN.csv` next to the fiber CSVs.
    pub emit_persistence: bool,
}

impl Default for ClaimConfig {
    fn default() -> Self {
        ClaimConfig {
            seed: 0,
            radius: 8.0,
            topology_grid: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            morse_grid: vec![0.5, 0.75, 1.0],
            certify_grid: (0..=10).map(|k| k as f64 / 10.0).collect(),
            certify: CertifyConfig::default(),
            residual_floor: 1e-4,
            max_candidate_tol: 1e-6,
            gcd_z: vec![(0, 1), (1, 3), (1, 2), (1, 1), (2, 1), (5, 1)],
            milnor_grid: (2..=24).map(f64::from).collect(),
            milnor: MilnorConfig { per_shell: 1000, ..MilnorConfig::default() },
            sample: SampleConfig { count: 200_000, spacing_divisor: 120.0, ..SampleConfig::default() },
            scale_factor: DEFAULT_SCALE_FACTOR,
            simplex_cap: 4_000_000,
            critical: CriticalConfig { chart: Some(vec!["y".into(), "z".into()]), ..CriticalConfig::default() },
            morse_tol: 1e-8,
            emit_persistence: false,
        }
    }
}

impl ClaimConfig {
    fn scan(&self, radius: RadiusRule) -> ScanConfig {
        ScanConfig {
            radius,
            sample: self.sample.clone(),
            milnor: self.milnor.clone(),
            scale_factor: self.scale_factor,
            simplex_cap: self.simplex_cap,
            seed: self.seed,
            emit_persistence: self.emit_persistence,
            ..ScanConfig::default()
        }
    }

    /// The topology grid as an arc schedule: decreasing, deduplicated.
    fn schedule(&self) -> Vec<f64> {
        let mut s = self.topology_grid.clone();
        s.sort_by(|a, b| b.total_cmp(a));
        s.dedup();
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub u: f64,
    pub residual: f64,
    pub point: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Claim1Result {
    pub status: ClaimStatus,
    pub notes: Vec<String>,
    pub min_residual: Option<f64>,
    pub candidate: Option<Candidate>,
    pub certify: Option<CertifyReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologyRow {
    pub u: f64,
    pub radius: f64,
    pub n_points: usize,
    pub eps: Option<f64>,
    pub beta0: Option<usize>,
    pub beta1: Option<usize>,
    pub chi: Option<i64>,
    pub milnor_radius: Option<f64>,
    /// Smallest `|P_T x|/|x|` on the shell containing the ball's sphere.
    pub margin_at_radius: Option<f64>,
    /// The sphere of the ball meets the fiber transversally (with margin).
    pub transversal_at_radius: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Claims23Result {
    pub status: ClaimStatus,
    pub notes: Vec<String>,
    pub fibers: Vec<TopologyRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorseRow {
    pub u: f64,
    pub expected: [f64; 3],
    pub points: Vec<CriticalPoint>,
    pub location_error: Option<f64>,
    pub ok: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopRow {
    pub u: f64,
    pub radius: f64,
    pub is_boundary: Option<bool>,
    pub expected_boundary: bool,
    pub loop_points: usize,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseIiCheck {
    pub u: f64,
    /// Real roots in `x` of the eliminated system.
    pub real_roots: Vec<f64>,
    /// `z^2` at each root; a common real solution needs it non-negative.
    pub z_squared: Vec<f64>,
    pub no_common_solution: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Claim4Result {
    pub status: ClaimStatus,
    pub notes: Vec<String>,
    pub morse: Vec<MorseRow>,
    pub loops: Vec<LoopRow>,
    pub case_ii: Vec<CaseIiCheck>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BettiRow {
    pub u: f64,
    pub beta0: Option<usize>,
    pub beta1: Option<usize>,
    pub chi: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimReport {
    pub tool_version: String,
    pub config: ClaimConfig,
    pub seed: u64,
    pub overall: ClaimStatus,
    pub claim1: Claim1Result,
    pub claims23: Claims23Result,
    pub claim4: Claim4Result,
    /// Betti numbers along the arc, shown beside the verdict.
    pub betti_table: Vec<BettiRow>,
    pub homology_constant: bool,
    pub verdict: Verdict,
    pub verdict_line: String,
    pub summary: String,
    pub warnings: Vec<String>,
}

impl ClaimReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// The singularity system of `F` along the arc: `f1 = f2 = dg/dx = y = 0`
/// in `(x, y, z, v)` with `u` as the arc parameter.
pub fn claim1_system(bundle: &Example5Bundle) -> SingularitySystem {
    let gx = bundle.g.differentiate("x").expect("x").embed(&VARS5).expect("g uses x, u, v");
    let y = Polynomial::var(&VARS5, "y").expect("y");
    let equations = PolynomialMap::with_vars(
        &VARS5,
        vec![bundle.map.component(0).clone(), bundle.map.component(1).clone(), gx, y],
    )
    .expect("shared variables");
    SingularitySystem::Explicit { equations, parameter: "u".into() }
}

/// `g_{u,v}` slices at each grid `u` and each `v = (z^2+u^2)/((u^2+1)(z^2+1))`
/// for the configured `z`; those `v` are exactly the ones `f2 = 0` allows.
pub fn claim1_gcd_checks(bundle: &Example5Bundle, cfg: &ClaimConfig) -> Vec<GcdCheck> {
    let one = BigRational::one();
    let mut out = Vec::new();
    for &u in &cfg.certify_grid {
        let ur = rational_near(u, 1000);
        for &(n, d) in &cfg.gcd_z {
            let z = rat(n, d);
            let v = (&z * &z + &ur * &ur) / ((&ur * &ur + &one) * (&z * &z + &one));
            out.push(GcdCheck { s: u, label: format!("u={ur}, v={v}"), slice: bundle.g_slice(&ur, &v) });
        }
    }
    out
}

pub fn verify_claim1(bundle: &Example5Bundle, cfg: &ClaimConfig) -> Claim1Result {
    let mut notes = Vec::new();
    let certify = CertifyConfig { seed: cfg.seed, ..cfg.certify.clone() };
    let loose = certify.candidate_tol > cfg.max_candidate_tol;
    if loose {
        notes.push(format!(
            "candidate tolerance {:e} is looser than {:e}; result cannot certify",
            certify.candidate_tol, cfg.max_candidate_tol
        ));
    }
    let system = claim1_system(bundle);
    let checks = claim1_gcd_checks(bundle, cfg);
    let mut res = Claim1Result { status: ClaimStatus::Pass, notes: Vec::new(), min_residual: None, candidate: None, certify: None };
    match certify_no_singularity_on_arc(&system, &bundle.arc, &cfg.certify_grid, &checks, &certify) {
        Ok(report) => {
            if report.min_residual <= cfg.residual_floor {
                res.status = ClaimStatus::Inconclusive;
                notes.push(format!(
                    "no candidate, but smallest residual {:e} is not above {:e}",
                    report.min_residual, cfg.residual_floor
                ));
            }
            if !report.all_gcd_negative {
                res.status = ClaimStatus::Fail;
                notes.push("some g slice has a multiple root".into());
            }
            res.min_residual = Some(report.min_residual);
            res.certify = Some(report);
        }
        Err(VarnumError::CandidateSingularityFound { s, residual, point, report }) => {
            res.status = ClaimStatus::Fail;
            notes.push(format!("candidate singularity at u = {s} (residual {residual:e})"));
            res.min_residual = Some(report.min_residual);
            res.candidate = Some(Candidate { u: s, residual, point });
            res.certify = Some(*report);
        }
        Err(e) => {
            res.status = ClaimStatus::Inconclusive;
            notes.push(e.to_string());
        }
    }
    if loose {
        res.status = ClaimStatus::Inconclusive;
    }
    res.notes = notes;
    res
}

/// Transversality of the sphere `|x| = radius` from the shell containing it.
fn margin_at(est: &MilnorEstimate, radius: f64) -> (Option<f64>, bool) {
    match est.shells.iter().find(|s| s.r_lo <= radius && radius < s.r_hi) {
        Some(s) => (s.min_margin, s.passed),
        None => (None, false),
    }
}

fn topology_rows(bundle: &Example5Bundle, cfg: &ClaimConfig, scan: &ArcReport) -> Vec<TopologyRow> {
    scan.records
        .iter()
        .map(|r| {
            let mut row = TopologyRow {
                u: r.s,
                radius: r.radius,
                n_points: r.n_points,
                eps: r.homology.as_ref().map(|h| h.eps),
                beta0: r.homology.as_ref().map(|h| h.beta0),
                beta1: r.homology.as_ref().map(|h| h.beta1),
                chi: r.chi,
                milnor_radius: None,
                margin_at_radius: None,
                transversal_at_radius: false,
                error: r.error.clone(),
            };
            let map = bundle.reduced_surface(&rational_near(r.s, 1000));
            let milnor = MilnorConfig { seed: index_seed(cfg.seed, r.index), ..cfg.milnor.clone() };
            let est = match estimate_milnor_radius(&map, &[0.0], &cfg.milnor_grid, &milnor) {
                Ok(est) => Some(est),
                Err(VarnumError::InconclusiveMargin { report, .. }) => Some(*report),
                Err(e) => {
                    row.error.get_or_insert(e.to_string());
                    None
                }
            };
            if let Some(est) = est {
                row.milnor_radius = (!est.shells.last().is_some_and(|s| !s.passed)).then_some(est.radius);
                (row.margin_at_radius, row.transversal_at_radius) = margin_at(&est, cfg.radius);
            }
            row
        })
        .collect()
}

fn judge_claims23(rows: Vec<TopologyRow>) -> Claims23Result {
    let mut status = ClaimStatus::Pass;
    let mut notes = Vec::new();
    for r in &rows {
        if let Some(e) = &r.error {
            status = status.at_most(ClaimStatus::Inconclusive);
            notes.push(format!("u = {}: {e}", r.u));
            continue;
        }
        if (r.beta0, r.beta1, r.chi) != (Some(1), Some(1), Some(0)) {
            status = status.at_most(ClaimStatus::Fail);
            notes.push(format!("u = {}: (beta0, beta1, chi) = ({:?}, {:?}, {:?})", r.u, r.beta0, r.beta1, r.chi));
        }
        if !r.transversal_at_radius {
            status = status.at_most(ClaimStatus::Inconclusive);
            notes.push(format!("u = {}: sphere of radius {} not certified transversal", r.u, r.radius));
        }
    }
    Claims23Result { status, notes, fibers: rows }
}

/// Fibers are cylinders: `(beta0, beta1, chi) = (1, 1, 0)` on `X_u ∩ B_R`
/// for every grid `u`, with the sphere `|x| = R` transversal to `X_u`.
pub fn verify_claims23(bundle: &Example5Bundle, cfg: &ClaimConfig) -> Claims23Result {
    match scan_family(&ReducedFamily(bundle), &cfg.schedule(), &cfg.scan(RadiusRule::Fixed { radius: cfg.radius }), None) {
        Ok(scan) => judge_claims23(topology_rows(bundle, cfg, &scan)),
        Err(e) => Claims23Result { status: ClaimStatus::Inconclusive, notes: vec![e.to_string()], fibers: Vec::new() },
    }
}

/// The unique index-2 critical point of `r_u` at `((u^2+1)/u^2, 0, 0)`
/// for every `u` of the Morse grid.
pub fn verify_morse_points(bundle: &Example5Bundle, cfg: &ClaimConfig) -> Vec<MorseRow> {
    cfg.morse_grid
        .iter()
        .map(|&u| {
            let expected = [(u * u + 1.0) / (u * u), 0.0, 0.0];
            let mut row = MorseRow { u, expected, points: Vec::new(), location_error: None, ok: false, error: None };
            if u == 0.0 {
                row.error = Some("no Morse point at u = 0".into());
                return row;
            }
            let half = cfg.radius.max(expected[0] + 1.0);
            let crit = CriticalConfig { seed: cfg.seed, ..cfg.critical.clone() };
            match constrained_critical_points(&bundle.r_u(&rational_near(u, 1000)), &[-half; 3], &[half; 3], &crit) {
                Ok(search) => {
                    row.points = search.points;
                    if let [p] = row.points.as_slice() {
                        let err = p.location.iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                        row.location_error = Some(err);
                        row.ok = err <= cfg.morse_tol && p.morse_index == 2 && !p.degenerate;
                    }
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect()
}

fn loop_rows(trace: &LoopTrace) -> Vec<LoopRow> {
    trace
        .entries
        .iter()
        .map(|e| LoopRow {
            u: e.s,
            radius: e.radius,
            is_boundary: e.is_boundary,
            expected_boundary: e.s > 0.0,
            loop_points: e.loop_points.len(),
            error: e.error.clone(),
        })
        .collect()
}

/// `p(x, z)` with `z^2` replaced by `w(x) = x - 1 - x^2/(u^2+1)`, the value
/// the case (ii) polynomial forces.
fn eliminate_z(p: &Polynomial, u: &BigRational) -> Polynomial {
    let xz = ["x", "z"];
    let p = p.substitute(&[("u", u.clone())]).expect("u").embed(&xz).expect("only x, z remain");
    let x = Polynomial::var(&xz, "x").expect("x");
    let one = Polynomial::constant(&xz, BigRational::one());
    let w = &(&x - &one) - &x.pow(2).scale(&(BigRational::one() / (u * u + BigRational::one())));
    let mut acc = Polynomial::zero(&xz);
    for (e, c) in p.terms() {
        assert!(e[1] % 2 == 0, "z enters only through z^2");
        acc = &acc + &(&x.pow(e[0]).scale(c) * &w.pow(e[1] / 2));
    }
    acc
}

/// Case (ii): `(u^2+1)(z^2+1) = x(z^2+u^2)`, that is `x v = 1`, with `z^2`
/// eliminated through the case polynomial. Every real root `x` must give `z^2 < 0`, so no real
/// `(x, z)` solves both.
pub fn case_ii_check(bundle: &Example5Bundle, u: f64) -> CaseIiCheck {
    let ur = rational_near(u, 1000);
    let r = eliminate_z(&bundle.x_times_v_one, &ur);
    let slice = UnivariateSlice::new(&r, "x", &[("z", BigRational::zero())]).expect("univariate in x");
    let roots = isolate_real_roots(&slice, &rat(1, 1_000_000_000_000)).expect("nonzero polynomial");
    let real_roots = roots.approximations();
    let z_squared: Vec<f64> = real_roots.iter().map(|&x| x - 1.0 - x * x / (u * u + 1.0)).collect();
    CaseIiCheck { u, no_common_solution: z_squared.iter().all(|&w| w < 0.0), real_roots, z_squared }
}

/// Claim 4: `r_u` has one Morse point of index 2 for `u > 0`, and the loop
/// `X_u ∩ {x = z^2}` bounds for `u > 0` but not at `u = 0`.
pub fn verify_claim4(bundle: &Example5Bundle, cfg: &ClaimConfig) -> Claim4Result {
    let trace = track_loop_along_arc(
        &ReducedFamily(bundle),
        &cfg.schedule(),
        &bundle.loop_constraints(),
        &cfg.scan(RadiusRule::MilnorFloor { floor: cfg.radius, grid: cfg.milnor_grid.clone() }),
    );
    judge_claim4(bundle, cfg, trace.as_ref().map_err(|e| e.to_string()))
}

fn judge_claim4(bundle: &Example5Bundle, cfg: &ClaimConfig, trace: Result<&LoopTrace, String>) -> Claim4Result {
    let mut status = ClaimStatus::Pass;
    let mut notes = Vec::new();
    let morse = verify_morse_points(bundle, cfg);
    for m in &morse {
        if !m.ok {
            status = status.at_most(if m.error.is_some() { ClaimStatus::Inconclusive } else { ClaimStatus::Fail });
            notes.push(format!("u = {}: {} critical point(s), error {:?}", m.u, m.points.len(), m.error));
        }
    }
    let loops = match trace {
        Ok(t) => loop_rows(t),
        Err(e) => {
            notes.push(e);
            status = status.at_most(ClaimStatus::Inconclusive);
            Vec::new()
        }
    };
    for l in &loops {
        match l.is_boundary {
            Some(b) if b == l.expected_boundary => {}
            Some(b) => {
                status = status.at_most(ClaimStatus::Fail);
                notes.push(format!("u = {}: loop is_boundary = {b}, expected {}", l.u, l.expected_boundary));
            }
            None => {
                status = status.at_most(ClaimStatus::Inconclusive);
                notes.push(format!("u = {}: {}", l.u, l.error.as_deref().unwrap_or("no loop verdict")));
            }
        }
    }
    let case_ii: Vec<CaseIiCheck> = cfg.morse_grid.iter().map(|&u| case_ii_check(bundle, u)).collect();
    if let Some(c) = case_ii.iter().find(|c| !c.no_common_solution) {
        notes.push(format!("case (ii) system has a real solution at u = {}", c.u));
    }
    Claim4Result { status, notes, morse, loops, case_ii }
}

/// Runs every claim on the built-in example.
pub fn verify_all(cfg: &ClaimConfig, csv_dir: Option<&Path>) -> ClaimReport {
    verify_bundle(&build_example(), cfg, csv_dir)
}

/// Runs every claim on `bundle` and assembles the verdict: the loop class
/// changes at `u = 0` while the betti numbers along the arc stay constant.
pub fn verify_bundle(bundle: &Example5Bundle, cfg: &ClaimConfig, csv_dir: Option<&Path>) -> ClaimReport {
    let mut warnings = Vec::new();
    let schedule = cfg.schedule();
    if schedule.len() <= 3 {
        warnings.push(format!("coarse u-grid ({} points); verdict rests on few fibers", schedule.len()));
    }
    if schedule.last() != Some(&0.0) {
        warnings.push("u-grid misses u = 0, where the atypical fiber sits".into());
    }

    let claim1 = verify_claim1(bundle, cfg);

    let family = ReducedFamily(bundle);
    let scan = scan_family(&family, &schedule, &cfg.scan(RadiusRule::Fixed { radius: cfg.radius }), csv_dir);
    let claims23 = match &scan {
        Ok(s) => judge_claims23(topology_rows(bundle, cfg, s)),
        Err(e) => Claims23Result { status: ClaimStatus::Inconclusive, notes: vec![e.to_string()], fibers: Vec::new() },
    };

    let trace = track_loop_along_arc(
        &family,
        &schedule,
        &bundle.loop_constraints(),
        &cfg.scan(RadiusRule::MilnorFloor { floor: cfg.radius, grid: cfg.milnor_grid.clone() }),
    );
    let claim4 = judge_claim4(bundle, cfg, trace.as_ref().map_err(|e| e.to_string()));

    let betti_table: Vec<BettiRow> = claims23
        .fibers
        .iter()
        .map(|r| BettiRow { u: r.u, beta0: r.beta0, beta1: r.beta1, chi: r.chi })
        .collect();
    let homology_constant = !betti_table.is_empty()
        && betti_table.iter().all(|r| r.beta0.is_some() && (r.beta0, r.beta1) == (betti_table[0].beta0, betti_table[0].beta1));
    let verdict = match (&scan, &trace) {
        (Ok(s), Ok(t)) => atypicality_verdict(s, Some(t)),
        (Ok(s), Err(_)) => atypicality_verdict(s, None),
        _ => Verdict::from_reasons(Vec::new()),
    };
    let overall = claim1.status.at_most(claims23.status).at_most(claim4.status);
    let table = betti_table
        .iter()
        .map(|r| match (r.beta0, r.beta1) {
            (Some(b0), Some(b1)) => format!("u={}:({b0},{b1})", r.u),
            _ => format!("u={}:(?)", r.u),
        })
        .collect::<Vec<_>>()
        .join(" ");
    let summary = format!(
        "{} [{}]; betti table {} {}",
        verdict.verdict,
        verdict.reasons.join(", "),
        if homology_constant { "constant" } else { "NOT constant" },
        table
    );
    ClaimReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        seed: cfg.seed,
        overall,
        claim1,
        claims23,
        claim4,
        betti_table,
        homology_constant,
        verdict_line: verdict.line(),
        verdict,
        summary,
        warnings,
    }
}
