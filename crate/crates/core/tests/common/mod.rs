//! Independent oracles shared by the property and acceptance tests.
#![allow(dead_code)]

use fiber_atlas::poly::{rat, CompiledPoly, Polynomial, PolynomialMap};
use fiber_atlas::topo::{beta0_by_reduction, select_scale, RipsComplex, RipsHomology, DEFAULT_SIMPLEX_CAP};
use fiber_atlas::varnum::{
    constrained_critical_points, project_to_fiber, restricted_hessian, tangent_basis, CriticalConfig, ProjectConfig,
    RestrictedFunction,
};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

pub const VARS: [&str; 3] = ["x", "y", "z"];

/// The example map written out by hand, independent of the parser.
pub fn f_oracle(p: [f64; 5]) -> [f64; 3] {
    let [x, y, z, u, v] = p;
    let g = (u * u * x + 1.0) * (v * x - 1.0) * (x * x + (v - u * u) * x + 1.0);
    [y * y + g, (z * z + u * u) - v * (u * u + 1.0) * (z * z + 1.0), u]
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_poly(rng: &mut ChaCha8Rng, max_deg: u32, terms: usize, scale: f64) -> Polynomial {
    let t: Vec<_> = (0..terms)
        .map(|_| {
            let mut e = vec![0u32; 3];
            let d = rng.random_range(1..=max_deg);
            for _ in 0..d {
                e[rng.random_range(0..3)] += 1;
            }
            (e, rat((100.0 * scale * rng.random_range(-1.0..1.0)).round() as i64, 100))
        })
        .collect();
    Polynomial::from_terms(&VARS, t).unwrap()
}

/// A cubic objective on a mildly perturbed unit sphere, which stays smooth
/// and compact.
pub fn random_constrained_problem(seed: u64) -> RestrictedFunction {
    let mut r = rng(seed);
    let obj = random_poly(&mut r, 3, 6, 1.0);
    let sphere = fiber_atlas::parse_polynomial("x^2+y^2+z^2-1", &VARS).unwrap();
    let g = &sphere + &random_poly(&mut r, 3, 3, 0.1);
    RestrictedFunction::new(obj, PolynomialMap::with_vars(&VARS, vec![g]).unwrap()).unwrap()
}

pub fn critical_config(seed: u64) -> CriticalConfig {
    CriticalConfig { multistart_n: 64, seed, ..Default::default() }
}

fn sym_eigen(m: &DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Largest gap between the restricted-Hessian eigenvalues reported at each
/// nondegenerate critical point and those of a matrix built from second
/// differences of `f` along projected tangent steps. `None` when the search
/// found no nondegenerate point.
pub fn hessian_vs_finite_differences(rf: &RestrictedFunction, seed: u64) -> Option<f64> {
    hessian_fd_gaps(rf, seed).into_iter().reduce(f64::max)
}

/// Per-point gaps behind [`hessian_vs_finite_differences`].
pub fn hessian_fd_gaps(rf: &RestrictedFunction, seed: u64) -> Vec<f64> {
    let search = constrained_critical_points(rf, &[-2.0; 3], &[2.0; 3], &critical_config(seed)).unwrap();
    let f = CompiledPoly::compile(&rf.objective);
    let proj = ProjectConfig { tol: 1e-14, max_iter: 100, ..Default::default() };
    let h = 2e-3;
    let mut gaps = Vec::new();
    for cp in search.points.iter().filter(|p| !p.degenerate) {
        let x = &cp.location;
        let t = tangent_basis(&rf.equalities.jacobian(x).unwrap());
        let k = t.ncols();
        let phi = |v: &[f64], s: f64| {
            let start: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + s * b).collect();
            f.eval(&project_to_fiber(&rf.equalities, &[0.0], &start, &proj).unwrap())
        };
        // x is only critical to solver tolerance, so project it too
        let mid = phi(&vec![0.0; x.len()], 0.0);
        let d2 = |v: &[f64], h: f64| (phi(v, h) - 2.0 * mid + phi(v, -h)) / (h * h);
        // Richardson step cancels the h^2 term
        let second = |v: &[f64]| (4.0 * d2(v, h / 2.0) - d2(v, h)) / 3.0;
        let col = |i: usize| t.column(i).iter().copied().collect::<Vec<f64>>();
        let mut m = DMatrix::zeros(k, k);
        for i in 0..k {
            m[(i, i)] = second(&col(i));
        }
        for i in 0..k {
            for j in i + 1..k {
                let sum: Vec<f64> = col(i).iter().zip(col(j)).map(|(a, b)| a + b).collect();
                let off = (second(&sum) - m[(i, i)] - m[(j, j)]) / 2.0;
                m[(i, j)] = off;
                m[(j, i)] = off;
            }
        }
        let gap = sym_eigen(&m).iter().zip(&cp.eigenvalues).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        gaps.push(gap);
    }
    gaps
}

/// Random `k x k` orthogonal matrix.
pub fn random_rotation(rng: &mut ChaCha8Rng, k: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
    a.qr().q()
}

/// Restricted-Hessian eigenvalues in the basis `T Q`.
pub fn rotated_eigenvalues(rf: &RestrictedFunction, x: &[f64], lam: &[f64], q: &DMatrix<f64>) -> Vec<f64> {
    let mut hl = CompiledPoly::compile(&rf.objective).hessian(x);
    for (c, l) in rf.equalities.components().iter().zip(lam) {
        hl -= CompiledPoly::compile(c).hessian(x) * *l;
    }
    let t = tangent_basis(&rf.equalities.jacobian(x).unwrap()) * q;
    restricted_hessian(&hl, &t).1
}

/// Random points on a few manifolds with known betti numbers, thinned to a
/// Poisson-disk set like the fiber sampler produces.
#[derive(Clone, Copy, Debug)]
pub enum Manifold {
    Circle,
    Annulus,
    Sphere,
}

impl Manifold {
    pub const ALL: [Manifold; 3] = [Manifold::Circle, Manifold::Annulus, Manifold::Sphere];

    pub fn betti(self) -> (usize, usize) {
        match self {
            Manifold::Circle | Manifold::Annulus => (1, 1),
            Manifold::Sphere => (1, 0),
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Manifold::Sphere => 3,
            _ => 2,
        }
    }

    pub fn spacing(self) -> f64 {
        match self {
            Manifold::Circle => 0.04,
            Manifold::Annulus | Manifold::Sphere => 0.1,
        }
    }

    pub fn sample(self, seed: u64) -> Vec<Vec<f64>> {
        let h = self.spacing();
        let mut kept = fiber_atlas::spatial::SpatialHash::new(self.dim(), h);
        for p in self.raw(seed, 20_000) {
            if !kept.any_within(&p, h) {
                kept.insert(p);
            }
        }
        kept.points().to_vec()
    }

    fn raw(self, seed: u64, n: usize) -> Vec<Vec<f64>> {
        let mut r = rng(seed);
        match self {
            Manifold::Circle => (0..n)
                .map(|_| {
                    let t = r.random_range(0.0..TAU);
                    vec![t.cos(), t.sin()]
                })
                .collect(),
            Manifold::Annulus => (0..n)
                .map(|_| {
                    // area-uniform radius in [1, 2]
                    let rad = (r.random_range(1.0..4.0f64)).sqrt();
                    let t = r.random_range(0.0..TAU);
                    vec![rad * t.cos(), rad * t.sin()]
                })
                .collect(),
            Manifold::Sphere => (0..n)
                .map(|_| {
                    let z: f64 = r.random_range(-1.0..1.0);
                    let t = r.random_range(0.0..TAU);
                    let s = (1.0 - z * z).sqrt();
                    vec![s * t.cos(), s * t.sin(), z]
                })
                .collect(),
        }
    }
}

/// `(beta0, beta1)` of `points` at the automatically selected scale.
pub fn auto_betti(points: &[Vec<f64>]) -> (usize, usize) {
    let eps = select_scale(points, 3.0).unwrap();
    let h = RipsHomology::compute(points, eps, DEFAULT_SIMPLEX_CAP).unwrap();
    (h.beta0, h.beta1)
}

/// Random small complex; returns union-find and reduction beta0.
pub fn beta0_both_ways(seed: u64) -> (usize, usize) {
    let mut r = rng(seed);
    let n = r.random_range(1..40);
    let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![r.random_range(0.0..1.0), r.random_range(0.0..1.0)]).collect();
    let eps = r.random_range(0.01..0.4);
    let uf = fiber_atlas::topo::rips_components(&pts, eps);
    let red = beta0_by_reduction(&RipsComplex::build(&pts, eps, DEFAULT_SIMPLEX_CAP).unwrap());
    (uf, red)
}
