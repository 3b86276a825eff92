//! Transversality of a fiber to the spheres `|x| = r`.
//!
//! For each grid radius the fiber is sampled in the shell `[r_k, r_{k+1})`
//! and the tangential part of `grad psi = 2x` is measured. The lowest-margin
//! samples seed a Newton search for critical points of `psi` on the fiber,
//! which catches tangencies that fall between samples.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::critical::{tangent_basis, Kkt};
use super::project::{project_compiled, ProjectConfig};
use super::qmc::Halton;
use super::VarnumError;
use crate::poly::{CompiledMap, Polynomial, PolynomialMap};
use crate::spatial::norm;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MilnorConfig {
    /// Starts drawn per shell.
    pub per_shell: usize,
    /// Lowest-margin samples per shell used to seed the critical-point search.
    pub refine: usize,
    /// A shell passes when every margin is at least this.
    pub threshold: f64,
    pub seed: u64,
    pub project: ProjectConfig,
}

impl Default for MilnorConfig {
    fn default() -> Self {
        MilnorConfig { per_shell: 1500, refine: 400, threshold: 0.05, seed: 0, project: ProjectConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellReport {
    pub r_lo: f64,
    pub r_hi: f64,
    pub points: usize,
    /// `|P_T x| / |x|` minimized over the shell sample.
    pub min_margin: Option<f64>,
    /// Norms of critical points of `psi` found in this shell.
    pub critical_radii: Vec<f64>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MilnorEstimate {
    pub radius: f64,
    /// No fiber point was found in any shell from `radius` on.
    pub vacuous: bool,
    pub threshold: f64,
    /// Smallest margin seen in the shells from `radius` on.
    pub min_margin_beyond: Option<f64>,
    pub shells: Vec<ShellReport>,
}

fn margin(map: &CompiledMap, x: &[f64]) -> f64 {
    let n = norm(x);
    if n == 0.0 {
        return 0.0;
    }
    let j = map.jacobian(x);
    let s = j.clone().svd(false, false).singular_values;
    if s.max() == 0.0 || s.min() < 1e-9 * s.max() {
        return 0.0;
    }
    let t = tangent_basis(&j);
    let xv = nalgebra::DVector::from_column_slice(x);
    (t.transpose() * xv).norm() / n
}

pub fn estimate_milnor_radius(
    map: &PolynomialMap,
    target: &[f64],
    r_grid: &[f64],
    cfg: &MilnorConfig,
) -> Result<MilnorEstimate, VarnumError> {
    if r_grid.is_empty() || r_grid.windows(2).any(|w| w[1] <= w[0]) || r_grid[0] < 0.0 {
        return Err(VarnumError::InvalidInput("radius grid must be nonempty and increasing".into()));
    }
    let shifted = map.minus_target(target)?;
    let compiled = CompiledMap::compile(&shifted);
    let zeros = vec![0.0; map.n()];
    let m = map.m();
    let vars: Vec<&str> = map.vars().iter().map(|s| s.as_str()).collect();
    let psi = vars
        .iter()
        .map(|v| Polynomial::var(&vars, v).map(|p| p.pow(2)))
        .try_fold(Polynomial::zero(&vars), |acc, p| p.map(|p| &acc + &p))?;
    let kkt = Kkt::new(&psi, &shifted);

    let k = r_grid.len();
    let last_width = if k > 1 { r_grid[k - 1] - r_grid[k - 2] } else { r_grid[0].max(1.0) * 0.5 };
    let bounds: Vec<(f64, f64)> = (0..k)
        .map(|i| (r_grid[i], if i + 1 < k { r_grid[i + 1] } else { r_grid[i] + last_width }))
        .collect();

    let mut shells = Vec::with_capacity(k);
    let mut critical: Vec<f64> = Vec::new();
    for (si, &(lo, hi)) in bounds.iter().enumerate() {
        // m coordinates give a direction, the last one a radius in [lo, hi)
        let halton = Halton::new(m + 1, cfg.seed, 0x3111 + si as u64);
        let found: Vec<Option<(Vec<f64>, f64)>> = (0..cfg.per_shell as u64)
            .into_par_iter()
            .map(|i| {
                let h = halton.point(i);
                let mut s: Vec<f64> = h[..m].iter().map(|t| 2.0 * t - 1.0).collect();
                let d = norm(&s);
                if d < 1e-9 {
                    return None;
                }
                let rho = lo + h[m] * (hi - lo);
                s.iter_mut().for_each(|c| *c *= rho / d);
                let (x, _) = project_compiled(&compiled, &zeros, &s, &cfg.project).ok()?;
                let r = norm(&x);
                (r >= lo && r < hi).then(|| {
                    let g = margin(&compiled, &x);
                    (x, g)
                })
            })
            .collect();
        let mut pts: Vec<(Vec<f64>, f64)> = found.into_iter().flatten().collect();
        let min_margin = pts.iter().map(|p| p.1).reduce(f64::min);
        pts.sort_by(|a, b| a.1.total_cmp(&b.1));
        let seeds: Vec<Vec<f64>> = pts.iter().take(cfg.refine).map(|p| p.0.clone()).collect();
        let crit: Vec<f64> = seeds
            .par_iter()
            .filter_map(|x0| kkt.newton(x0, 60, 1e-10).map(|(x, _, _)| norm(&x)))
            .collect();
        critical.extend(crit);
        shells.push(ShellReport {
            r_lo: lo,
            r_hi: hi,
            points: pts.len(),
            min_margin,
            critical_radii: Vec::new(),
            passed: false,
        });
    }
    critical.sort_by(f64::total_cmp);
    critical.dedup_by(|a, b| (*a - *b).abs() < 1e-7);
    for sh in &mut shells {
        sh.critical_radii = critical.iter().copied().filter(|&r| r >= sh.r_lo && r < sh.r_hi).collect();
        let margin_ok = sh.min_margin.is_none_or(|g| g >= cfg.threshold);
        sh.passed = margin_ok && sh.critical_radii.is_empty();
    }

    let mut first_good = k;
    while first_good > 0 && shells[first_good - 1].passed {
        first_good -= 1;
    }
    let est = |idx: usize, shells: Vec<ShellReport>| {
        let tail = &shells[idx.min(k - 1)..];
        MilnorEstimate {
            radius: r_grid[idx.min(k - 1)],
            vacuous: tail.iter().all(|s| s.points == 0),
            threshold: cfg.threshold,
            min_margin_beyond: tail.iter().filter_map(|s| s.min_margin).reduce(f64::min),
            shells,
        }
    };
    if first_good == k {
        return Err(VarnumError::InconclusiveMargin {
            last_radius: r_grid[k - 1],
            report: Box::new(est(k - 1, shells)),
        });
    }
    Ok(est(first_good, shells))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_circle_is_vacuous_beyond_one_and_a_half() {
        let m = PolynomialMap::parse(&["x", "y"], &["x^2+y^2-1"]).unwrap();
        let cfg = MilnorConfig { per_shell: 400, ..Default::default() };
        let e = estimate_milnor_radius(&m, &[0.0], &[0.5, 1.5, 2.0, 3.0], &cfg).unwrap();
        assert_eq!(e.radius, 1.5);
        assert!(e.vacuous);
        assert!(!e.shells[0].passed);
    }

    #[test]
    fn line_through_origin_passes_everywhere() {
        let m = PolynomialMap::parse(&["x", "y"], &["y"]).unwrap();
        let cfg = MilnorConfig { per_shell: 400, ..Default::default() };
        let e = estimate_milnor_radius(&m, &[0.0], &[0.5, 1.0, 2.0], &cfg).unwrap();
        assert_eq!(e.radius, 0.5);
        assert!(!e.vacuous);
        assert!(e.min_margin_beyond.unwrap() > 0.999);
    }

    #[test]
    fn ellipse_tangency_inside_grid() {
        // psi on x^2/9 + y^2 = 1 is critical at radii 1 and 3
        let m = PolynomialMap::parse(&["x", "y"], &["x^2/9+y^2-1"]).unwrap();
        let cfg = MilnorConfig { per_shell: 800, ..Default::default() };
        let e = estimate_milnor_radius(&m, &[0.0], &[0.5, 2.0, 2.5, 3.5, 5.0], &cfg).unwrap();
        assert_eq!(e.radius, 3.5);
        assert!(e.vacuous);
    }

    #[test]
    fn failing_last_shell_is_inconclusive() {
        let m = PolynomialMap::parse(&["x", "y"], &["x^2+y^2-2.89"]).unwrap();
        let cfg = MilnorConfig { per_shell: 400, ..Default::default() };
        let r = estimate_milnor_radius(&m, &[0.0], &[0.5, 1.0, 1.5], &cfg);
        assert!(matches!(r, Err(VarnumError::InconclusiveMargin { .. })));
    }
}
