use nalgebra::{DMatrix, DVector};

use super::{rational_to_f64, Polynomial, PolynomialMap};

/// Nested Horner form of a polynomial for fast `f64` evaluation.
///
/// The outermost level is in the first variable that occurs; each
/// coefficient is itself a Horner form in the remaining variables.
#[derive(Clone, Debug, PartialEq)]
pub enum HornerPoly {
    Const(f64),
    Nest { var: usize, coeffs: Vec<HornerPoly> },
}

impl HornerPoly {
    pub fn compile(p: &Polynomial) -> Self {
        let terms: Vec<(Vec<u32>, f64)> =
            p.terms().map(|(e, c)| (e.clone(), rational_to_f64(c))).collect();
        Self::build(&terms, 0, p.nvars())
    }

    fn build(terms: &[(Vec<u32>, f64)], from: usize, nvars: usize) -> Self {
        if terms.is_empty() {
            return HornerPoly::Const(0.0);
        }
        let var = (from..nvars).find(|&i| terms.iter().any(|(e, _)| e[i] > 0));
        let Some(var) = var else {
            return HornerPoly::Const(terms.iter().map(|(_, c)| c).sum());
        };
        let deg = terms.iter().map(|(e, _)| e[var]).max().unwrap() as usize;
        let mut buckets: Vec<Vec<(Vec<u32>, f64)>> = vec![Vec::new(); deg + 1];
        for (e, c) in terms {
            buckets[e[var] as usize].push((e.clone(), *c));
        }
        let coeffs = buckets.iter().map(|b| Self::build(b, var + 1, nvars)).collect();
        HornerPoly::Nest { var, coeffs }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            HornerPoly::Const(c) => *c,
            HornerPoly::Nest { var, coeffs } => {
                let t = x[*var];
                let mut acc = 0.0;
                for c in coeffs.iter().rev() {
                    acc = acc * t + c.eval(x);
                }
                acc
            }
        }
    }
}

/// A polynomial map compiled for repeated floating point evaluation of its
/// values, Jacobian, and term magnitudes.
#[derive(Clone, Debug)]
pub struct CompiledMap {
    m: usize,
    values: Vec<HornerPoly>,
    /// `sum |c| |x^a|` per component; the scale used for relative residuals.
    magnitudes: Vec<HornerPoly>,
    jac: Vec<Vec<HornerPoly>>,
}

impl CompiledMap {
    pub fn compile(map: &PolynomialMap) -> Self {
        CompiledMap {
            m: map.m(),
            values: map.components().iter().map(HornerPoly::compile).collect(),
            magnitudes: map
                .components()
                .iter()
                .map(|c| HornerPoly::compile(&c.abs_coefficients()))
                .collect(),
            jac: map
                .jacobian_symbolic()
                .iter()
                .map(|row| row.iter().map(HornerPoly::compile).collect())
                .collect(),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn eval(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.values.len(), self.values.iter().map(|p| p.eval(x)))
    }

    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.values.len(), self.m);
        for (i, row) in self.jac.iter().enumerate() {
            for (k, d) in row.iter().enumerate() {
                j[(i, k)] = d.eval(x);
            }
        }
        j
    }

    /// Componentwise backward-error style residual:
    /// `max_i |f_i(x) - t_i| / max(1, sum |c| |x^a|)`.
    pub fn scaled_residual(&self, x: &[f64], target: &[f64]) -> f64 {
        let ax: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        self.values
            .iter()
            .zip(&self.magnitudes)
            .zip(target)
            .map(|((p, mag), t)| (p.eval(x) - t).abs() / mag.eval(&ax).max(1.0))
            .fold(0.0, f64::max)
    }
}

/// Value, gradient and Hessian of one polynomial, compiled for `f64`.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    value: HornerPoly,
    grad: Vec<HornerPoly>,
    hess: Vec<Vec<HornerPoly>>,
}

impl CompiledPoly {
    pub fn compile(p: &Polynomial) -> Self {
        let grad_sym = p.gradient();
        CompiledPoly {
            value: HornerPoly::compile(p),
            grad: grad_sym.iter().map(HornerPoly::compile).collect(),
            hess: grad_sym
                .iter()
                .map(|g| g.gradient().iter().map(HornerPoly::compile).collect())
                .collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.value.eval(x)
    }

    pub fn gradient(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.grad.len(), self.grad.iter().map(|g| g.eval(x)))
    }

    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let m = self.grad.len();
        DMatrix::from_fn(m, m, |i, j| self.hess[i][j].eval(x))
    }
}
