//! Critical points of a polynomial restricted to a variety, by damped Newton
//! on the Lagrange system from quasi-random starts.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::project::{project_compiled, ProjectConfig};
use super::qmc::Halton;
use super::VarnumError;
use crate::poly::{CompiledMap, CompiledPoly, Polynomial, PolynomialMap};
use crate::spatial::dist;

/// An objective on `{c(x) = 0, g_j(x) >= 0}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestrictedFunction {
    pub objective: Polynomial,
    pub equalities: PolynomialMap,
    pub inequalities: Vec<Polynomial>,
}

impl RestrictedFunction {
    pub fn new(objective: Polynomial, equalities: PolynomialMap) -> Result<Self, VarnumError> {
        if objective.vars() != equalities.vars() {
            return Err(VarnumError::InvalidInput(
                "objective and constraints must share one variable list".into(),
            ));
        }
        Ok(RestrictedFunction { objective, equalities, inequalities: Vec::new() })
    }

    pub fn with_inequality(mut self, g: Polynomial) -> Result<Self, VarnumError> {
        if g.vars() != self.objective.vars() {
            return Err(VarnumError::InvalidInput("inequality uses a different variable list".into()));
        }
        self.inequalities.push(g);
        Ok(self)
    }

    pub fn vars(&self) -> &[String] {
        self.objective.vars()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CriticalConfig {
    pub multistart_n: usize,
    pub seed: u64,
    /// Bound on [`CriticalPoint::kkt_residual`].
    pub tol: f64,
    /// Solutions closer than this are merged.
    pub cluster: f64,
    pub max_iter: usize,
    pub project: ProjectConfig,
    /// Also search each face `{g_j = 0}` unless the objective is constant there.
    pub boundary_pass: bool,
    /// Coordinates of the implicit chart; chosen from the Jacobian when `None`.
    pub chart: Option<Vec<String>>,
    pub ineq_tol: f64,
    /// Relative size below which an eigenvalue counts as zero.
    pub zero_eig: f64,
}

impl Default for CriticalConfig {
    fn default() -> Self {
        CriticalConfig {
            multistart_n: 400,
            seed: 0,
            tol: 1e-9,
            cluster: 1e-6,
            max_iter: 100,
            project: ProjectConfig::default(),
            boundary_pass: true,
            chart: None,
            ineq_tol: 1e-9,
            zero_eig: 1e-9,
        }
    }
}

/// Hessian of the objective in an implicit-function chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartHessian {
    pub variables: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub location: Vec<f64>,
    pub multipliers: Vec<f64>,
    /// Eigenvalues of the restricted Hessian in an orthonormal tangent basis, ascending.
    pub eigenvalues: Vec<f64>,
    pub morse_index: usize,
    pub degenerate: bool,
    pub kkt_residual: f64,
    pub chart: Option<ChartHessian>,
    /// Index of the inequality whose face this point was found on.
    pub on_boundary: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPass {
    pub inequality: usize,
    pub skipped_constant: bool,
    pub found: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CriticalDiagnostics {
    pub starts: usize,
    pub converged: usize,
    pub projection_failures: usize,
    pub newton_failures: usize,
    pub outside_box: usize,
    pub rank_deficient: usize,
    pub infeasible: usize,
    pub boundary: Vec<BoundaryPass>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalSearch {
    pub points: Vec<CriticalPoint>,
    pub diagnostics: CriticalDiagnostics,
}

/// Compiled Lagrange system for `objective` on `{c = 0}`.
pub(crate) struct Kkt {
    m: usize,
    obj: CompiledPoly,
    cons: Vec<CompiledPoly>,
    cmap: CompiledMap,
}

impl Kkt {
    pub(crate) fn new(objective: &Polynomial, equalities: &PolynomialMap) -> Self {
        Kkt {
            m: objective.nvars(),
            obj: CompiledPoly::compile(objective),
            cons: equalities.components().iter().map(CompiledPoly::compile).collect(),
            cmap: CompiledMap::compile(equalities),
        }
    }

    fn k(&self) -> usize {
        self.cons.len()
    }

    pub(crate) fn constraint_jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        self.cmap.jacobian(x)
    }

    pub(crate) fn lagrangian_hessian(&self, x: &[f64], lam: &[f64]) -> DMatrix<f64> {
        let mut h = self.obj.hessian(x);
        for (c, l) in self.cons.iter().zip(lam) {
            h -= c.hessian(x) * *l;
        }
        h
    }

    /// Least-squares multipliers for `grad f = J^T lambda`.
    fn multipliers(&self, x: &[f64]) -> Vec<f64> {
        if self.k() == 0 {
            return Vec::new();
        }
        let jt = self.constraint_jacobian(x).transpose();
        let g = self.obj.gradient(x);
        jt.svd(true, true).solve(&g, 1e-14).map(|v| v.iter().copied().collect()).unwrap_or_else(|_| vec![0.0; self.k()])
    }

    fn system(&self, x: &[f64], lam: &[f64]) -> DVector<f64> {
        let m = self.m;
        let k = self.k();
        let mut r = DVector::zeros(m + k);
        let stat = self.obj.gradient(x) - self.constraint_jacobian(x).transpose() * DVector::from_column_slice(lam);
        r.rows_mut(0, m).copy_from(&stat);
        for (i, c) in self.cons.iter().enumerate() {
            r[m + i] = c.eval(x);
        }
        r
    }

    fn system_jacobian(&self, x: &[f64], lam: &[f64]) -> DMatrix<f64> {
        let m = self.m;
        let k = self.k();
        let j = self.constraint_jacobian(x);
        let mut big = DMatrix::zeros(m + k, m + k);
        big.view_mut((0, 0), (m, m)).copy_from(&self.lagrangian_hessian(x, lam));
        big.view_mut((0, m), (m, k)).copy_from(&(-j.transpose()));
        big.view_mut((m, 0), (k, m)).copy_from(&j);
        big
    }

    pub(crate) fn kkt_residual(&self, x: &[f64], lam: &[f64]) -> f64 {
        let g = self.obj.gradient(x);
        let stat = &g - self.constraint_jacobian(x).transpose() * DVector::from_column_slice(lam);
        let s = stat.norm() / g.norm().max(1.0);
        let zeros = vec![0.0; self.k()];
        s.max(self.cmap.scaled_residual(x, &zeros))
    }

    /// Norm of the objective gradient projected onto the tangent space,
    /// relative to the full gradient norm.
    pub(crate) fn tangential_gradient(&self, x: &[f64]) -> f64 {
        let g = self.obj.gradient(x);
        let gn = g.norm();
        if gn == 0.0 {
            return 0.0;
        }
        if self.k() == 0 {
            return 1.0;
        }
        let t = tangent_basis(&self.constraint_jacobian(x));
        (t.transpose() * &g).norm() / gn
    }

    pub(crate) fn newton(&self, x0: &[f64], max_iter: usize, tol: f64) -> Option<(Vec<f64>, Vec<f64>, f64)> {
        let m = self.m;
        let mut x = x0.to_vec();
        let mut lam = self.multipliers(&x);
        for _ in 0..=max_iter {
            let res = self.kkt_residual(&x, &lam);
            if !res.is_finite() {
                return None;
            }
            let r = self.system(&x, &lam);
            let jac = self.system_jacobian(&x, &lam);
            let svd = jac.svd(true, true);
            let smax = svd.singular_values.max();
            let step = svd.solve(&r, 1e-14 * smax).ok();
            if res <= tol {
                // one polishing step; quadratic convergence makes it cheap
                if let Some(step) = step {
                    let xn: Vec<f64> = (0..m).map(|i| x[i] - step[i]).collect();
                    let ln: Vec<f64> = (0..self.k()).map(|i| lam[i] - step[m + i]).collect();
                    let rn = self.kkt_residual(&xn, &ln);
                    if rn < res {
                        return Some((xn, ln, rn));
                    }
                }
                return Some((x, lam, res));
            }
            let step = step?;
            let r0 = r.norm();
            let mut t = 1.0;
            let mut moved = false;
            for _ in 0..30 {
                let xn: Vec<f64> = (0..m).map(|i| x[i] - t * step[i]).collect();
                let ln: Vec<f64> = (0..self.k()).map(|i| lam[i] - t * step[m + i]).collect();
                let rn = self.system(&xn, &ln).norm();
                if rn.is_finite() && rn < r0 {
                    x = xn;
                    lam = ln;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                return None;
            }
        }
        None
    }
}

/// Orthonormal basis (columns) of the null space of `j` (`k x m`, full row
/// rank), from a QR factorization of `[j^T | I]`.
pub fn tangent_basis(j: &DMatrix<f64>) -> DMatrix<f64> {
    let (k, m) = j.shape();
    if k == 0 {
        return DMatrix::identity(m, m);
    }
    let mut a = DMatrix::zeros(m, k + m);
    a.view_mut((0, 0), (m, k)).copy_from(&j.transpose());
    a.view_mut((0, k), (m, m)).copy_from(&DMatrix::identity(m, m));
    let q = a.qr().q();
    q.columns(k, m - k).into_owned()
}

/// `T^T H T` and its eigenvalues in ascending order.
pub fn restricted_hessian(h: &DMatrix<f64>, basis: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let r = basis.transpose() * h * basis;
    let r = (&r + r.transpose()) * 0.5;
    let eig = sorted_eigenvalues(&r);
    (r, eig)
}

fn sorted_eigenvalues(s: &DMatrix<f64>) -> Vec<f64> {
    if s.nrows() == 0 {
        return Vec::new();
    }
    let mut e: Vec<f64> = SymmetricEigen::new(s.clone()).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Picks `k` columns of `j` to solve for, by Gaussian elimination with
/// complete pivoting. Returns `None` if `j` is numerically rank deficient.
fn pick_solved_columns(j: &DMatrix<f64>) -> Option<Vec<usize>> {
    let (k, m) = j.shape();
    let mut a = j.clone();
    let mut rows: Vec<usize> = (0..k).collect();
    let mut cols: Vec<usize> = (0..m).collect();
    let scale = a.amax().max(f64::MIN_POSITIVE);
    let mut picked = Vec::with_capacity(k);
    for step in 0..k {
        let mut best = (0.0, 0, 0);
        for &r in &rows {
            for &c in &cols {
                if a[(r, c)].abs() > best.0 {
                    best = (a[(r, c)].abs(), r, c);
                }
            }
        }
        let (piv, pr, pc) = best;
        if piv <= 1e-12 * scale {
            return None;
        }
        for &r in &rows {
            if r != pr {
                let f = a[(r, pc)] / a[(pr, pc)];
                for c in 0..m {
                    a[(r, c)] -= f * a[(pr, c)];
                }
            }
        }
        rows.retain(|&r| r != pr);
        cols.retain(|&c| c != pc);
        picked.push(pc);
        let _ = step;
    }
    picked.sort_unstable();
    Some(picked)
}

fn chart_hessian(
    vars: &[String],
    j: &DMatrix<f64>,
    h_l: &DMatrix<f64>,
    chart: Option<&[String]>,
) -> Option<ChartHessian> {
    let (k, m) = j.shape();
    if k == 0 {
        return Some(ChartHessian {
            variables: vars.to_vec(),
            matrix: (0..m).map(|r| h_l.row(r).iter().copied().collect()).collect(),
            eigenvalues: sorted_eigenvalues(h_l),
        });
    }
    let free: Vec<usize> = match chart {
        Some(names) => {
            let idx: Option<Vec<usize>> =
                names.iter().map(|n| vars.iter().position(|v| v == n)).collect();
            idx?
        }
        None => {
            let solved = pick_solved_columns(j)?;
            (0..m).filter(|c| !solved.contains(c)).collect()
        }
    };
    if free.len() + k != m {
        return None;
    }
    let solved: Vec<usize> = (0..m).filter(|c| !free.contains(c)).collect();
    let js = DMatrix::from_fn(k, k, |r, c| j[(r, solved[c])]);
    let jw = DMatrix::from_fn(k, free.len(), |r, c| j[(r, free[c])]);
    let dsolved = -(js.lu().solve(&jw)?);
    // columns of dx/dw
    let mut xw = DMatrix::zeros(m, free.len());
    for (a, &f) in free.iter().enumerate() {
        xw[(f, a)] = 1.0;
    }
    for (r, &s) in solved.iter().enumerate() {
        for a in 0..free.len() {
            xw[(s, a)] = dsolved[(r, a)];
        }
    }
    let hc = xw.transpose() * h_l * &xw;
    let hc = (&hc + hc.transpose()) * 0.5;
    Some(ChartHessian {
        variables: free.iter().map(|&i| vars[i].clone()).collect(),
        matrix: (0..hc.nrows()).map(|r| hc.row(r).iter().copied().collect()).collect(),
        eigenvalues: sorted_eigenvalues(&hc),
    })
}

fn rank_ok(j: &DMatrix<f64>, ratio: f64) -> bool {
    if j.nrows() == 0 {
        return true;
    }
    let s = j.clone().svd(false, false).singular_values;
    let smax = s.max();
    smax > 0.0 && s.min() >= ratio * smax
}

/// Solves the Lagrange system from `multistart_n` shifted-Halton starts in
/// the box `[lo, hi]`, clusters the solutions and classifies each one.
pub fn constrained_critical_points(
    rf: &RestrictedFunction,
    lo: &[f64],
    hi: &[f64],
    cfg: &CriticalConfig,
) -> Result<CriticalSearch, VarnumError> {
    let m = rf.vars().len();
    if lo.len() != m || hi.len() != m {
        return Err(VarnumError::InvalidInput(format!("box must have {m} coordinates")));
    }
    let mut search = search_on(rf, &rf.equalities, None, lo, hi, cfg)?;
    if cfg.boundary_pass {
        for (j, g) in rf.inequalities.iter().enumerate() {
            let face = rf.equalities.stacked(std::slice::from_ref(g))?;
            let mut pass = BoundaryPass { inequality: j, ..Default::default() };
            if objective_constant_on(rf, &face, lo, hi, cfg) {
                pass.skipped_constant = true;
            } else {
                let sub = search_on(rf, &face, Some(j), lo, hi, cfg)?;
                pass.found = sub.points.len();
                search.points.extend(sub.points);
            }
            search.diagnostics.boundary.push(pass);
        }
    }
    search.points.sort_by(|a, b| {
        a.location
            .iter()
            .zip(&b.location)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(search)
}

/// True when every sampled point of the face has zero tangential gradient,
/// or when no point of the face could be found.
fn objective_constant_on(
    rf: &RestrictedFunction,
    face: &PolynomialMap,
    lo: &[f64],
    hi: &[f64],
    cfg: &CriticalConfig,
) -> bool {
    let kkt = Kkt::new(&rf.objective, face);
    let cmap = CompiledMap::compile(face);
    let zeros = vec![0.0; face.n()];
    let halton = Halton::new(lo.len(), cfg.seed, 0xFACE);
    let mut seen = 0;
    for i in 0..64u64 {
        let start = halton.in_box(i, lo, hi);
        if let Ok((x, _)) = project_compiled(&cmap, &zeros, &start, &cfg.project) {
            if !rank_ok(&kkt.constraint_jacobian(&x), cfg.project.rank_ratio) {
                continue;
            }
            if kkt.tangential_gradient(&x) > 1e-8 {
                return false;
            }
            seen += 1;
            if seen >= 16 {
                break;
            }
        }
    }
    true
}

fn search_on(
    rf: &RestrictedFunction,
    eqs: &PolynomialMap,
    face: Option<usize>,
    lo: &[f64],
    hi: &[f64],
    cfg: &CriticalConfig,
) -> Result<CriticalSearch, VarnumError> {
    let kkt = Kkt::new(&rf.objective, eqs);
    let cmap = CompiledMap::compile(eqs);
    let zeros = vec![0.0; eqs.n()];
    let halton = Halton::new(lo.len(), cfg.seed, 0xC417 + face.map_or(0, |j| j as u64 + 1));
    let ineqs: Vec<CompiledPoly> = rf.inequalities.iter().map(CompiledPoly::compile).collect();

    enum Out {
        ProjFail,
        NewtonFail,
        Outside,
        Rank,
        Infeasible,
        Ok(Vec<f64>, Vec<f64>, f64),
    }
    let outs: Vec<Out> = (0..cfg.multistart_n as u64)
        .into_par_iter()
        .map(|i| {
            let start = halton.in_box(i, lo, hi);
            let x0 = if eqs.n() == 0 {
                start
            } else {
                match project_compiled(&cmap, &zeros, &start, &cfg.project) {
                    Ok((x, _)) => x,
                    Err(_) => return Out::ProjFail,
                }
            };
            let Some((x, lam, res)) = kkt.newton(&x0, cfg.max_iter, cfg.tol) else {
                return Out::NewtonFail;
            };
            let slack = 1e-9;
            if x.iter().zip(lo.iter().zip(hi)).any(|(v, (a, b))| *v < a - slack || *v > b + slack) {
                return Out::Outside;
            }
            if !rank_ok(&kkt.constraint_jacobian(&x), cfg.project.rank_ratio) {
                return Out::Rank;
            }
            for (j, g) in ineqs.iter().enumerate() {
                if Some(j) == face {
                    continue;
                }
                if g.eval(&x) < -cfg.ineq_tol * g.gradient(&x).norm().max(1.0) {
                    return Out::Infeasible;
                }
            }
            Out::Ok(x, lam, res)
        })
        .collect();

    let mut diag = CriticalDiagnostics { starts: cfg.multistart_n, ..Default::default() };
    let mut reps: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    for o in outs {
        match o {
            Out::ProjFail => diag.projection_failures += 1,
            Out::NewtonFail => diag.newton_failures += 1,
            Out::Outside => diag.outside_box += 1,
            Out::Rank => diag.rank_deficient += 1,
            Out::Infeasible => diag.infeasible += 1,
            Out::Ok(x, lam, res) => {
                diag.converged += 1;
                match reps.iter_mut().find(|(r, _, _)| dist(r, &x) <= cfg.cluster) {
                    Some(rep) if res < rep.2 => *rep = (x, lam, res),
                    Some(_) => {}
                    None => reps.push((x, lam, res)),
                }
            }
        }
    }

    let vars = rf.vars();
    let points = reps
        .into_iter()
        .map(|(x, lam, res)| {
            let j = kkt.constraint_jacobian(&x);
            let h_l = kkt.lagrangian_hessian(&x, &lam);
            let (_, eig) = restricted_hessian(&h_l, &tangent_basis(&j));
            let scale = eig.iter().fold(1.0f64, |a, e| a.max(e.abs())) * cfg.zero_eig;
            CriticalPoint {
                morse_index: eig.iter().filter(|&&e| e < -scale).count(),
                degenerate: eig.iter().any(|e| e.abs() <= scale),
                chart: chart_hessian(vars, &j, &h_l, cfg.chart.as_deref()),
                location: x,
                multipliers: lam,
                eigenvalues: eig,
                kkt_residual: res,
                on_boundary: face,
            }
        })
        .collect();
    Ok(CriticalSearch { points, diagnostics: diag })
}
