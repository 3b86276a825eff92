//! Evidence that a map has no critical point on the fibers over an arc:
//! multistart Levenberg–Marquardt on a singularity system plus exact gcd
//! checks on univariate slices.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::qmc::Halton;
use super::VarnumError;
use crate::arc::Arc;
use crate::poly::{rational_from_f64, rational_near, square_free_part, CompiledMap, Polynomial, PolynomialMap, UnivariateSlice};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SingularitySystem {
    /// `F(x) = gamma(s)`, `JF(x)^T w = 0`, `|w|^2 = 1` in the unknowns `(x, w)`.
    RankDeficiency { map: PolynomialMap },
    /// Hand-reduced equations; `parameter` is set to the arc parameter `s`.
    Explicit { equations: PolynomialMap, parameter: String },
}

#[derive(Clone, Debug)]
pub struct GcdCheck {
    pub s: f64,
    pub label: String,
    pub slice: UnivariateSlice,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CertifyConfig {
    pub multistart_n: usize,
    pub seed: u64,
    /// A start ending below this residual is a candidate singularity.
    pub candidate_tol: f64,
    /// Starts and iterates stay in `[-half_width, half_width]` per unknown.
    pub half_width: f64,
    pub max_iter: usize,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig { multistart_n: 2000, seed: 0, candidate_tol: 1e-8, half_width: 10.0, max_iter: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub s: f64,
    pub unknowns: Vec<String>,
    pub min_residual: f64,
    pub argmin: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcdVerdict {
    pub s: f64,
    pub label: String,
    pub gcd_degree: usize,
    pub no_common_root: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyReport {
    pub entries: Vec<GridEntry>,
    pub gcd: Vec<GcdVerdict>,
    pub min_residual: f64,
    pub all_gcd_negative: bool,
}

fn system_at(system: &SingularitySystem, arc: &Arc, s: f64) -> Result<PolynomialMap, VarnumError> {
    match system {
        SingularitySystem::RankDeficiency { map } => {
            let m = map.m();
            let n = map.n();
            let mut vars: Vec<String> = map.vars().to_vec();
            let wn: Vec<String> = (0..n).map(|i| format!("__w{i}")).collect();
            vars.extend(wn.iter().cloned());
            let shifted = map.minus_target(&arc.eval(s))?;
            let mut comps: Vec<Polynomial> =
                shifted.components().iter().map(|c| c.embed(&vars)).collect::<Result<_, _>>()?;
            let w: Vec<Polynomial> = wn.iter().map(|v| Polynomial::var(&vars, v)).collect::<Result<_, _>>()?;
            let jac = map.jacobian_symbolic();
            for j in 0..m {
                let mut acc = Polynomial::zero(&vars);
                for i in 0..n {
                    acc = &acc + &(&w[i] * &jac[i][j].embed(&vars)?);
                }
                comps.push(acc);
            }
            let mut norm = Polynomial::constant(&vars, rational_from_f64(-1.0));
            for wi in &w {
                norm = &norm + &wi.pow(2);
            }
            comps.push(norm);
            Ok(PolynomialMap::with_vars(&vars, comps)?)
        }
        SingularitySystem::Explicit { equations, parameter } => {
            let sub = equations.substitute(&[(parameter.as_str(), rational_near(s, 1000))])?;
            Ok(sub.drop_vars(&[parameter.as_str()])?)
        }
    }
}

/// Levenberg–Marquardt on `G(z) = 0` from `z0`, iterates clamped to the box.
fn levenberg_marquardt(g: &CompiledMap, z0: Vec<f64>, half_width: f64, max_iter: usize, stop: f64) -> (Vec<f64>, f64) {
    let mut z = z0;
    let mut r = g.eval(&z);
    let mut rn = r.norm();
    let mut mu = 1e-3;
    for _ in 0..max_iter {
        if rn < stop || !rn.is_finite() {
            break;
        }
        let j = g.jacobian(&z);
        let jt = j.transpose();
        let jtj = &jt * &j;
        let jtr: DVector<f64> = &jt * &r;
        let mut improved = false;
        for _ in 0..12 {
            let mut a = jtj.clone();
            for i in 0..a.nrows() {
                a[(i, i)] += mu * (1.0 + jtj[(i, i)]);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&jtr)) else {
                mu *= 10.0;
                continue;
            };
            let cand: Vec<f64> =
                z.iter().zip(step.iter()).map(|(a, d)| (a - d).clamp(-half_width, half_width)).collect();
            let rc = g.eval(&cand);
            let rcn = rc.norm();
            if rcn.is_finite() && rcn < rn {
                let rel = (rn - rcn) / rn.max(f64::MIN_POSITIVE);
                z = cand;
                r = rc;
                rn = rcn;
                mu = (mu / 3.0).max(1e-15);
                improved = rel > 1e-14;
                break;
            }
            mu *= 4.0;
        }
        if !improved {
            break;
        }
    }
    (z, rn)
}

pub fn certify_no_singularity_on_arc(
    system: &SingularitySystem,
    arc: &Arc,
    grid: &[f64],
    gcd_checks: &[GcdCheck],
    cfg: &CertifyConfig,
) -> Result<CertifyReport, VarnumError> {
    let mut entries = Vec::with_capacity(grid.len());
    for (gi, &s) in grid.iter().enumerate() {
        let sys = system_at(system, arc, s)?;
        let compiled = CompiledMap::compile(&sys);
        let p = sys.m();
        let halton = Halton::new(p, cfg.seed, 0xCE47 + gi as u64);
        let lo = vec![-cfg.half_width; p];
        let hi = vec![cfg.half_width; p];
        let w_dims = match system {
            SingularitySystem::RankDeficiency { map } => map.m()..p,
            SingularitySystem::Explicit { .. } => p..p,
        };
        let stop = cfg.candidate_tol * 1e-3;
        let best = (0..cfg.multistart_n as u64)
            .into_par_iter()
            .map(|i| {
                let mut z0 = halton.in_box(i, &lo, &hi);
                let wn: f64 = z0[w_dims.clone()].iter().map(|v| v * v).sum::<f64>().sqrt();
                if wn > 0.0 {
                    for v in &mut z0[w_dims.clone()] {
                        *v /= wn;
                    }
                }
                let (z, r) = levenberg_marquardt(&compiled, z0, cfg.half_width, cfg.max_iter, stop);
                (if r.is_finite() { r } else { f64::INFINITY }, i, z)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let (min_residual, argmin) = best.map(|(r, _, z)| (r, z)).unwrap_or((f64::INFINITY, Vec::new()));
        entries.push(GridEntry { s, unknowns: sys.vars().to_vec(), min_residual, argmin });
    }
    let gcd = gcd_checks
        .iter()
        .map(|c| {
            let sf = square_free_part(&c.slice)?;
            Ok(GcdVerdict {
                s: c.s,
                label: c.label.clone(),
                gcd_degree: sf.gcd.degree().unwrap_or(0),
                no_common_root: !sf.has_multiple_root,
            })
        })
        .collect::<Result<Vec<_>, VarnumError>>()?;
    let min_residual = entries.iter().map(|e| e.min_residual).fold(f64::INFINITY, f64::min);
    let report = CertifyReport { all_gcd_negative: gcd.iter().all(|g| g.no_common_root), entries, gcd, min_residual };
    if let Some(e) = report.entries.iter().filter(|e| e.min_residual < cfg.candidate_tol).min_by(|a, b| a.min_residual.total_cmp(&b.min_residual)) {
        return Err(VarnumError::CandidateSingularityFound {
            s: e.s,
            residual: e.min_residual,
            point: e.argmin.clone(),
            report: Box::new(report.clone()),
        });
    }
    Ok(report)
}
