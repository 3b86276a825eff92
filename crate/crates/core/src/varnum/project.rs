use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::VarnumError;
use crate::poly::{CompiledMap, PolynomialMap};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectConfig {
    /// Bound on the scaled residual, see [`CompiledMap::scaled_residual`].
    pub tol: f64,
    pub max_iter: usize,
    /// A Jacobian with `sigma_min < rank_ratio * sigma_max` counts as rank deficient.
    pub rank_ratio: f64,
    /// Optional cap on the length of a single step.
    pub max_step: Option<f64>,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        ProjectConfig { tol: 1e-10, max_iter: 60, rank_ratio: 1e-6, max_step: None }
    }
}

/// Gauss–Newton projection of `start` onto `{F = t}`.
pub fn project_to_fiber(
    map: &PolynomialMap,
    target: &[f64],
    start: &[f64],
    cfg: &ProjectConfig,
) -> Result<Vec<f64>, VarnumError> {
    if start.len() != map.m() || target.len() != map.n() {
        return Err(VarnumError::InvalidInput(format!(
            "expected start of length {} and target of length {}",
            map.m(),
            map.n()
        )));
    }
    project_compiled(&CompiledMap::compile(map), target, start, cfg).map(|(x, _)| x)
}

/// Same as [`project_to_fiber`] on a precompiled map; also returns the
/// number of iterations taken.
pub fn project_compiled(
    map: &CompiledMap,
    target: &[f64],
    start: &[f64],
    cfg: &ProjectConfig,
) -> Result<(Vec<f64>, usize), VarnumError> {
    if start.iter().any(|v| !v.is_finite()) {
        return Err(VarnumError::InvalidInput("start point is not finite".into()));
    }
    let t = DVector::from_column_slice(target);
    let mut x = start.to_vec();
    let mut res = map.scaled_residual(&x, target);
    for iter in 0..cfg.max_iter {
        if res <= cfg.tol {
            return Ok((x, iter));
        }
        let r = map.eval(&x) - &t;
        let svd = map.jacobian(&x).svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smax == 0.0 || smin < cfg.rank_ratio * smax {
            return Err(VarnumError::SingularStep { iter, ratio: if smax == 0.0 { 0.0 } else { smin / smax } });
        }
        let mut dx = svd.solve(&r, 0.0).map_err(|e| VarnumError::InvalidInput(e.to_string()))?;
        if let Some(cap) = cfg.max_step {
            let n = dx.norm();
            if n > cap {
                dx *= cap / n;
            }
        }
        // backtrack on the plain residual norm
        let r0 = r.norm();
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a - step * d).collect();
            let rn = (map.eval(&cand) - &t).norm();
            if rn.is_finite() && rn < r0 {
                accepted = Some(cand);
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some(c) => x = c,
            None => {
                return Err(VarnumError::MaxIterExceeded { iters: iter + 1, residual: res });
            }
        }
        res = map.scaled_residual(&x, target);
    }
    if res <= cfg.tol {
        return Ok((x, cfg.max_iter));
    }
    Err(VarnumError::MaxIterExceeded { iters: cfg.max_iter, residual: res })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle() -> PolynomialMap {
        PolynomialMap::parse(&["x", "y"], &["x^2+y^2-1"]).unwrap()
    }

    #[test]
    fn lands_on_circle() {
        let x = project_to_fiber(&circle(), &[0.0], &[0.3, 0.4], &ProjectConfig::default()).unwrap();
        assert!(((x[0] * x[0] + x[1] * x[1]) - 1.0).abs() < 1e-10);
        // minimal-norm steps stay on the ray through the start
        assert!((x[0] / x[1] - 0.75).abs() < 1e-9);
    }

    #[test]
    fn on_fiber_start_is_unchanged() {
        let s = [0.6, 0.8];
        assert_eq!(project_to_fiber(&circle(), &[0.0], &s, &ProjectConfig::default()).unwrap(), s);
    }

    #[test]
    fn origin_is_singular() {
        let r = project_to_fiber(&circle(), &[0.0], &[0.0, 0.0], &ProjectConfig::default());
        assert!(matches!(r, Err(VarnumError::SingularStep { .. })));
    }

    #[test]
    fn empty_fiber_does_not_converge() {
        let m = PolynomialMap::parse(&["x", "y"], &["x^2+y^2+1"]).unwrap();
        let r = project_to_fiber(&m, &[0.0], &[0.5, 0.1], &ProjectConfig::default());
        assert!(matches!(r, Err(VarnumError::MaxIterExceeded { .. }) | Err(VarnumError::SingularStep { .. })));
    }
}
