//! Exact multivariate polynomials over the rationals.
//!
//! A [`Polynomial`] owns its ordered variable list and a sparse term map from
//! exponent vectors to [`BigRational`] coefficients. Arithmetic between two
//! polynomials requires identical variable lists; use [`Polynomial::embed`]
//! to move a polynomial into a larger variable set first.
//!
//! Floating point evaluation goes through [`HornerPoly`], a nested Horner
//! scheme compiled once from the exact terms.

mod horner;
mod parse;
mod univariate;

pub use horner::{CompiledMap, CompiledPoly, HornerPoly};
pub use parse::parse_polynomial;
pub use univariate::{
    isolate_real_roots, square_free_part, RootInterval, RootIsolationResult, SquareFree, UniPoly,
    UnivariateSlice,
};

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Errors raised by the algebra layer.
#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable lists differ: {left:?} vs {right:?}")]
    VariableMismatch { left: Vec<String>, right: Vec<String> },
    #[error("operation undefined on the zero polynomial")]
    ZeroPolynomial,
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("invalid coefficient `{0}`")]
    InvalidCoefficient(String),
    #[error("polynomial is not univariate in `{0}` after substitution")]
    NotUnivariate(String),
}

pub type Exponents = Vec<u32>;

/// Converts an `f64` to the exact rational it represents.
pub fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

/// The rational with the smallest denominator (up to `max_den`) whose
/// nearest `f64` is `x`, so grid values like `0.1` become `1/10`. Falls back
/// to the exact value of `x`.
pub fn rational_near(x: f64, max_den: i64) -> BigRational {
    (1..=max_den)
        .find_map(|d| {
            let n = (x * d as f64).round();
            (n.abs() < 9.0e15 && n / d as f64 == x).then(|| rat(n as i64, d))
        })
        .unwrap_or_else(|| rational_from_f64(x))
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Fall back to a ratio of rounded parts for huge numerators/denominators.
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Polynomial {
    vars: Vec<String>,
    terms: BTreeMap<Exponents, BigRational>,
}

impl Polynomial {
    pub fn zero<S: AsRef<str>>(vars: &[S]) -> Self {
        Polynomial {
            vars: vars.iter().map(|s| s.as_ref().to_string()).collect(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant<S: AsRef<str>>(vars: &[S], c: BigRational) -> Self {
        let mut p = Self::zero(vars);
        if !c.is_zero() {
            p.terms.insert(vec![0; p.vars.len()], c);
        }
        p
    }

    pub fn one<S: AsRef<str>>(vars: &[S]) -> Self {
        Self::constant(vars, BigRational::one())
    }

    /// The coordinate function of `name`.
    pub fn var<S: AsRef<str>>(vars: &[S], name: &str) -> Result<Self, PolyError> {
        let mut p = Self::zero(vars);
        let i = p.index_of(name)?;
        let mut e = vec![0; p.vars.len()];
        e[i] = 1;
        p.terms.insert(e, BigRational::one());
        Ok(p)
    }

    /// Builds a polynomial from raw terms, summing duplicates and dropping zeros.
    pub fn from_terms<S: AsRef<str>>(
        vars: &[S],
        terms: impl IntoIterator<Item = (Exponents, BigRational)>,
    ) -> Result<Self, PolyError> {
        let mut p = Self::zero(vars);
        for (e, c) in terms {
            if e.len() != p.vars.len() {
                return Err(PolyError::DimensionMismatch { expected: p.vars.len(), got: e.len() });
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, e: Exponents, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            Entry::Vacant(slot) => {
                slot.insert(c);
            }
            Entry::Occupied(mut slot) => {
                *slot.get_mut() += c;
                if slot.get().is_zero() {
                    slot.remove();
                }
            }
        }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &BigRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Result<usize, PolyError> {
        self.vars
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| PolyError::UnknownVariable(name.to_string()))
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|e| e[var]).max().unwrap_or(0)
    }

    /// The constant term, if the polynomial is constant.
    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => {
                let (e, c) = self.terms.iter().next().unwrap();
                e.iter().all(|&k| k == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    fn check_same_vars(&self, other: &Self) -> Result<(), PolyError> {
        if self.vars != other.vars {
            return Err(PolyError::VariableMismatch {
                left: self.vars.clone(),
                right: other.vars.clone(),
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_same_vars(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_same_vars(other)?;
        let mut acc: BTreeMap<Exponents, BigRational> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Exponents = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                *acc.entry(e).or_insert_with(BigRational::zero) += ca * cb;
            }
        }
        acc.retain(|_, c| !c.is_zero());
        Ok(Polynomial { vars: self.vars.clone(), terms: acc })
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero(&self.vars);
        }
        Polynomial {
            vars: self.vars.clone(),
            terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::one(&self.vars);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                out = &out * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        out
    }

    /// Re-expresses the polynomial over `vars`, which must contain every
    /// variable this polynomial actually uses.
    pub fn embed<S: AsRef<str>>(&self, vars: &[S]) -> Result<Self, PolyError> {
        let target: Vec<String> = vars.iter().map(|s| s.as_ref().to_string()).collect();
        let mut map = Vec::with_capacity(self.vars.len());
        for (i, v) in self.vars.iter().enumerate() {
            match target.iter().position(|t| t == v) {
                Some(j) => map.push(Some(j)),
                None => {
                    if self.terms.keys().any(|e| e[i] > 0) {
                        return Err(PolyError::UnknownVariable(v.clone()));
                    }
                    map.push(None);
                }
            }
        }
        let mut out = Polynomial { vars: target, terms: BTreeMap::new() };
        for (e, c) in &self.terms {
            let mut ne = vec![0; out.vars.len()];
            for (i, &k) in e.iter().enumerate() {
                if let Some(j) = map[i] {
                    ne[j] += k;
                }
            }
            out.add_term(ne, c.clone());
        }
        Ok(out)
    }

    /// Formal partial derivative.
    pub fn differentiate(&self, var: &str) -> Result<Self, PolyError> {
        let i = self.index_of(var)?;
        let mut out = Self::zero(&self.vars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut ne = e.clone();
            ne[i] -= 1;
            out.add_term(ne, c * BigRational::from_integer(BigInt::from(e[i])));
        }
        Ok(out)
    }

    pub fn gradient(&self) -> Vec<Polynomial> {
        self.vars.iter().map(|v| self.differentiate(v).expect("own variable")).collect()
    }

    /// Substitutes exact values for some variables; the result keeps the full
    /// variable list (substituted variables simply no longer appear).
    pub fn substitute(&self, assignment: &[(&str, BigRational)]) -> Result<Self, PolyError> {
        let idx: Vec<(usize, &BigRational)> = assignment
            .iter()
            .map(|(n, v)| self.index_of(n).map(|i| (i, v)))
            .collect::<Result<_, _>>()?;
        let mut out = Self::zero(&self.vars);
        for (e, c) in &self.terms {
            let mut ne = e.clone();
            let mut coef = c.clone();
            for &(i, v) in &idx {
                if ne[i] > 0 {
                    coef *= num_traits::pow(v.clone(), ne[i] as usize);
                    ne[i] = 0;
                }
            }
            out.add_term(ne, coef);
        }
        Ok(out)
    }

    /// Drops the named variables, which must not occur in any term.
    pub fn drop_vars(&self, names: &[&str]) -> Result<Self, PolyError> {
        let keep: Vec<String> =
            self.vars.iter().filter(|v| !names.contains(&v.as_str())).cloned().collect();
        self.embed(&keep)
    }

    /// Composes this polynomial with polynomial substitutes for every
    /// variable. All substitutes must share one variable list.
    pub fn compose(&self, subs: &[Polynomial]) -> Result<Self, PolyError> {
        if subs.len() != self.vars.len() {
            return Err(PolyError::DimensionMismatch { expected: self.vars.len(), got: subs.len() });
        }
        let vars = subs.first().map(|p| p.vars.clone()).unwrap_or_default();
        for s in subs {
            if s.vars != vars {
                return Err(PolyError::VariableMismatch { left: vars, right: s.vars.clone() });
            }
        }
        let mut out = Self::zero(&vars);
        for (e, c) in &self.terms {
            let mut t = Self::constant(&vars, c.clone());
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t = &t * &subs[i].pow(k);
                }
            }
            out = &out + &t;
        }
        Ok(out)
    }

    pub fn eval_exact(&self, point: &[BigRational]) -> Result<BigRational, PolyError> {
        if point.len() != self.vars.len() {
            return Err(PolyError::DimensionMismatch { expected: self.vars.len(), got: point.len() });
        }
        let mut acc = BigRational::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (x, &k) in point.iter().zip(e) {
                if k > 0 {
                    t *= num_traits::pow(x.clone(), k as usize);
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Floating point evaluation (compiles a Horner scheme on each call; use
    /// [`HornerPoly`] directly in hot loops).
    pub fn eval(&self, point: &[f64]) -> Result<f64, PolyError> {
        if point.len() != self.vars.len() {
            return Err(PolyError::DimensionMismatch { expected: self.vars.len(), got: point.len() });
        }
        Ok(HornerPoly::compile(self).eval(point))
    }

    /// Matrix of second partials, evaluated in floating point.
    pub fn hessian(&self, point: &[f64]) -> Result<DMatrix<f64>, PolyError> {
        let n = self.vars.len();
        if point.len() != n {
            return Err(PolyError::DimensionMismatch { expected: n, got: point.len() });
        }
        let grad = self.gradient();
        let mut h = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let d = grad[i].differentiate(&self.vars[j])?;
                let v = HornerPoly::compile(&d).eval(point);
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        Ok(h)
    }

    pub fn hessian_exact(&self, point: &[BigRational]) -> Result<Vec<Vec<BigRational>>, PolyError> {
        let n = self.vars.len();
        let grad = self.gradient();
        let mut h = vec![vec![BigRational::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                h[i][j] = grad[i].differentiate(&self.vars[j])?.eval_exact(point)?;
            }
        }
        Ok(h)
    }

    /// Polynomial with every coefficient replaced by its absolute value.
    pub fn abs_coefficients(&self) -> Self {
        Polynomial {
            vars: self.vars.clone(),
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.abs())).collect(),
        }
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial[{}]({})", self.vars.join(","), self)
    }
}

impl fmt::Display for Polynomial {
    /// Prints in a form accepted by [`parse_polynomial`]. Terms are listed by
    /// descending total degree, then descending exponent vector.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut ordered: Vec<(&Exponents, &BigRational)> = self.terms.iter().collect();
        ordered.sort_by(|a, b| {
            let da: u32 = a.0.iter().sum();
            let db: u32 = b.0.iter().sum();
            db.cmp(&da).then_with(|| b.0.cmp(a.0))
        });
        for (k, (e, c)) in ordered.into_iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            let monomial: Vec<String> = e
                .iter()
                .zip(&self.vars)
                .filter(|(k, _)| **k > 0)
                .map(|(k, v)| if *k == 1 { v.clone() } else { format!("{v}^{k}") })
                .collect();
            let coef_str = if mag.is_integer() {
                mag.numer().to_string()
            } else {
                format!("{}/{}", mag.numer(), mag.denom())
            };
            if monomial.is_empty() {
                write!(f, "{coef_str}")?;
            } else if mag.is_one() {
                write!(f, "{}", monomial.join("*"))?;
            } else {
                write!(f, "{}*{}", coef_str, monomial.join("*"))?;
            }
        }
        Ok(())
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl<'a> $tr<&'a Polynomial> for &'a Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: &'a Polynomial) -> Polynomial {
                let f: fn(&Polynomial, &Polynomial) -> Result<Polynomial, PolyError> = $body;
                f(self, rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
        impl $tr<Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                (&self).$m(&rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| a.try_add(b));
binop!(Sub, sub, |a, b| a.try_add(&-b));
binop!(Mul, mul, |a, b| a.try_mul(b));

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(&-BigRational::one())
    }
}

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        -&self
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    exponents: Vec<u32>,
    num: String,
    den: String,
}

#[derive(Serialize, Deserialize)]
struct PolynomialJson {
    variables: Vec<String>,
    terms: Vec<TermJson>,
}

impl Serialize for Polynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PolynomialJson {
            variables: self.vars.clone(),
            terms: self
                .terms
                .iter()
                .map(|(e, c)| TermJson {
                    exponents: e.clone(),
                    num: c.numer().to_string(),
                    den: c.denom().to_string(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = PolynomialJson::deserialize(d)?;
        let mut terms = Vec::with_capacity(raw.terms.len());
        for t in raw.terms {
            let num: BigInt =
                t.num.parse().map_err(|_| D::Error::custom(PolyError::InvalidCoefficient(t.num.clone())))?;
            let den: BigInt =
                t.den.parse().map_err(|_| D::Error::custom(PolyError::InvalidCoefficient(t.den.clone())))?;
            if den.is_zero() {
                return Err(D::Error::custom(PolyError::InvalidCoefficient(t.den)));
            }
            terms.push((t.exponents, BigRational::new(num, den)));
        }
        Polynomial::from_terms(&raw.variables, terms).map_err(D::Error::custom)
    }
}

/// A polynomial map `R^m -> R^n`; all components share one variable list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialMap {
    vars: Vec<String>,
    components: Vec<Polynomial>,
}

impl PolynomialMap {
    pub fn new(components: Vec<Polynomial>) -> Result<Self, PolyError> {
        let vars = components.first().map(|p| p.vars.clone()).unwrap_or_default();
        for c in &components {
            if c.vars != vars {
                return Err(PolyError::VariableMismatch { left: vars, right: c.vars.clone() });
            }
        }
        Ok(PolynomialMap { vars, components })
    }

    /// A map with explicit variables, useful when `components` may be empty.
    pub fn with_vars<S: AsRef<str>>(vars: &[S], components: Vec<Polynomial>) -> Result<Self, PolyError> {
        let vars: Vec<String> = vars.iter().map(|s| s.as_ref().to_string()).collect();
        for c in &components {
            if c.vars != vars {
                return Err(PolyError::VariableMismatch { left: vars, right: c.vars.clone() });
            }
        }
        Ok(PolynomialMap { vars, components })
    }

    pub fn parse<S: AsRef<str>>(vars: &[S], exprs: &[&str]) -> Result<Self, PolyError> {
        let comps = exprs.iter().map(|e| parse_polynomial(e, vars)).collect::<Result<Vec<_>, _>>()?;
        Self::with_vars(vars, comps)
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Polynomial {
        &self.components[i]
    }

    /// Domain dimension.
    pub fn m(&self) -> usize {
        self.vars.len()
    }

    /// Target dimension.
    pub fn n(&self) -> usize {
        self.components.len()
    }

    /// Appends components (e.g. extra equality constraints).
    pub fn stacked(&self, extra: &[Polynomial]) -> Result<Self, PolyError> {
        let mut comps = self.components.clone();
        comps.extend_from_slice(extra);
        Self::with_vars(&self.vars, comps)
    }

    pub fn eval_exact(&self, point: &[BigRational]) -> Result<Vec<BigRational>, PolyError> {
        self.components.iter().map(|c| c.eval_exact(point)).collect()
    }

    pub fn eval(&self, point: &[f64]) -> Result<Vec<f64>, PolyError> {
        self.components.iter().map(|c| c.eval(point)).collect()
    }

    /// Symbolic Jacobian: row `i` is the gradient of component `i`.
    pub fn jacobian_symbolic(&self) -> Vec<Vec<Polynomial>> {
        self.components.iter().map(|c| c.gradient()).collect()
    }

    pub fn jacobian(&self, point: &[f64]) -> Result<DMatrix<f64>, PolyError> {
        if point.len() != self.m() {
            return Err(PolyError::DimensionMismatch { expected: self.m(), got: point.len() });
        }
        Ok(CompiledMap::compile(self).jacobian(point))
    }

    pub fn jacobian_exact(&self, point: &[BigRational]) -> Result<Vec<Vec<BigRational>>, PolyError> {
        if point.len() != self.m() {
            return Err(PolyError::DimensionMismatch { expected: self.m(), got: point.len() });
        }
        self.jacobian_symbolic()
            .iter()
            .map(|row| row.iter().map(|d| d.eval_exact(point)).collect())
            .collect()
    }

    pub fn substitute(&self, assignment: &[(&str, BigRational)]) -> Result<Self, PolyError> {
        let comps =
            self.components.iter().map(|c| c.substitute(assignment)).collect::<Result<Vec<_>, _>>()?;
        Self::with_vars(&self.vars, comps)
    }

    /// The map `x -> F(x) - t`, with `t` read as exact rationals.
    pub fn minus_target(&self, target: &[f64]) -> Result<Self, PolyError> {
        if target.len() != self.n() {
            return Err(PolyError::DimensionMismatch { expected: self.n(), got: target.len() });
        }
        let comps = self
            .components
            .iter()
            .zip(target)
            .map(|(c, t)| c - &Polynomial::constant(&self.vars, rational_from_f64(*t)))
            .collect();
        Self::with_vars(&self.vars, comps)
    }

    pub fn drop_vars(&self, names: &[&str]) -> Result<Self, PolyError> {
        let keep: Vec<String> =
            self.vars.iter().filter(|v| !names.contains(&v.as_str())).cloned().collect();
        let comps = self.components.iter().map(|c| c.embed(&keep)).collect::<Result<Vec<_>, _>>()?;
        Self::with_vars(&keep, comps)
    }
}
