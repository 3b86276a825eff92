//! Dense univariate polynomials over Q, Sturm sequences, and real root
//! isolation.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::{rational_to_f64, PolyError, Polynomial};

/// Dense univariate polynomial; `coeffs[k]` multiplies `x^k`. No trailing
/// zero coefficients are stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniPoly {
    coeffs: Vec<BigRational>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        UniPoly { coeffs }
    }

    pub fn from_ints(c: &[i64]) -> Self {
        Self::new(c.iter().map(|&v| BigRational::from_integer(BigInt::from(v))).collect())
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&BigRational> {
        self.coeffs.last()
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + rational_to_f64(c))
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * BigRational::from_integer(BigInt::from(k)))
                .collect(),
        )
    }

    pub fn monic(&self) -> Self {
        match self.leading() {
            None => self.clone(),
            Some(l) => {
                let inv = l.recip();
                Self::new(self.coeffs.iter().map(|c| c * &inv).collect())
            }
        }
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        let dd = d.degree().expect("division by zero polynomial");
        let lead_inv = d.leading().unwrap().recip();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![BigRational::zero(); self.coeffs.len().saturating_sub(dd)];
        while rem.len() > dd && !rem.is_empty() {
            let k = rem.len() - 1 - dd;
            let f = rem.last().unwrap() * &lead_inv;
            for (i, c) in d.coeffs.iter().enumerate() {
                rem[k + i] -= &f * c;
            }
            quot[k] = f;
            rem.pop();
            while rem.last().is_some_and(|c| c.is_zero()) {
                rem.pop();
            }
        }
        (Self::new(quot), Self::new(rem))
    }

    pub fn rem(&self, d: &Self) -> Self {
        self.div_rem(d).1
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn neg(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| -c).collect())
    }

    /// Converts to a one-variable [`Polynomial`] over `var`.
    pub fn to_polynomial(&self, var: &str) -> Polynomial {
        Polynomial::from_terms(
            &[var],
            self.coeffs.iter().enumerate().map(|(k, c)| (vec![k as u32], c.clone())),
        )
        .expect("one variable")
    }

    /// Cauchy bound: every real root lies strictly inside `(-B, B)`.
    pub fn root_bound(&self) -> BigRational {
        let lead = self.leading().expect("nonzero").abs();
        let max = self.coeffs[..self.coeffs.len() - 1]
            .iter()
            .map(|c| c.abs() / &lead)
            .max()
            .unwrap_or_else(BigRational::zero);
        max + BigRational::one()
    }

    /// Standard Sturm sequence `p, p', -rem(p, p'), ...`.
    pub fn sturm_sequence(&self) -> Vec<UniPoly> {
        let mut seq = vec![self.clone()];
        if self.degree().unwrap_or(0) == 0 {
            return seq;
        }
        seq.push(self.derivative());
        loop {
            let n = seq.len();
            let r = seq[n - 2].rem(&seq[n - 1]);
            if r.is_zero() {
                break;
            }
            seq.push(r.neg());
        }
        seq
    }
}

fn sign(v: &BigRational) -> i8 {
    if v.is_positive() {
        1
    } else if v.is_negative() {
        -1
    } else {
        0
    }
}

fn variations(signs: impl Iterator<Item = i8>) -> usize {
    let mut last = 0i8;
    let mut count = 0;
    for s in signs.filter(|&s| s != 0) {
        if last != 0 && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

struct Sturm {
    seq: Vec<UniPoly>,
}

impl Sturm {
    fn variations_at(&self, x: &BigRational) -> usize {
        variations(self.seq.iter().map(|p| sign(&p.eval(x))))
    }

    fn variations_at_neg_inf(&self) -> usize {
        variations(self.seq.iter().map(|p| {
            let s = sign(p.leading().unwrap());
            if p.degree().unwrap() % 2 == 1 {
                -s
            } else {
                s
            }
        }))
    }

    fn variations_at_pos_inf(&self) -> usize {
        variations(self.seq.iter().map(|p| sign(p.leading().unwrap())))
    }

    /// Number of distinct real roots in `(a, b]`.
    fn count(&self, a: &BigRational, b: &BigRational) -> usize {
        self.variations_at(a) - self.variations_at(b)
    }
}

/// A polynomial with all but one variable replaced by exact rationals.
#[derive(Clone, Debug)]
pub struct UnivariateSlice {
    base: Polynomial,
    var: String,
    assignment: Vec<(String, BigRational)>,
    uni: UniPoly,
}

impl UnivariateSlice {
    pub fn new(
        base: &Polynomial,
        var: &str,
        assignment: &[(&str, BigRational)],
    ) -> Result<Self, PolyError> {
        let vi = base.index_of(var)?;
        let sub = base.substitute(assignment)?;
        let mut coeffs = vec![BigRational::zero(); sub.degree_in(vi) as usize + 1];
        for (e, c) in sub.terms() {
            if e.iter().enumerate().any(|(i, &k)| i != vi && k > 0) {
                return Err(PolyError::NotUnivariate(var.to_string()));
            }
            coeffs[e[vi] as usize] += c;
        }
        Ok(UnivariateSlice {
            base: base.clone(),
            var: var.to_string(),
            assignment: assignment.iter().map(|(n, v)| (n.to_string(), v.clone())).collect(),
            uni: UniPoly::new(coeffs),
        })
    }

    pub fn from_uni(var: &str, uni: UniPoly) -> Self {
        UnivariateSlice {
            base: uni.to_polynomial(var),
            var: var.to_string(),
            assignment: Vec::new(),
            uni,
        }
    }

    pub fn base(&self) -> &Polynomial {
        &self.base
    }

    pub fn var(&self) -> &str {
        &self.var
    }

    pub fn assignment(&self) -> &[(String, BigRational)] {
        &self.assignment
    }

    pub fn poly(&self) -> &UniPoly {
        &self.uni
    }
}

/// An isolating interval. When `lo == hi` the root is exactly `lo`;
/// otherwise the root lies in the half-open interval `(lo, hi]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RootInterval {
    #[serde(serialize_with = "ser_rat")]
    pub lo: BigRational,
    #[serde(serialize_with = "ser_rat")]
    pub hi: BigRational,
    /// True when the root is a multiple root of the input polynomial.
    pub multiple: bool,
}

fn ser_rat<S: serde::Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

impl RootInterval {
    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> f64 {
        rational_to_f64(&((&self.lo + &self.hi) / BigRational::from_integer(BigInt::from(2))))
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        if self.is_exact() {
            x == &self.lo
        } else {
            x > &self.lo && x <= &self.hi
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RootIsolationResult {
    /// Sorted ascending, pairwise disjoint.
    pub roots: Vec<RootInterval>,
}

impl RootIsolationResult {
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn approximations(&self) -> Vec<f64> {
        self.roots.iter().map(|r| r.midpoint()).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SquareFree {
    /// `q / gcd(q, q')`, monic.
    pub part: UniPoly,
    /// `gcd(q, q')`, monic.
    pub gcd: UniPoly,
    pub has_multiple_root: bool,
}

/// Exact square-free decomposition step: `gcd(q, q')` and `q / gcd`.
pub fn square_free_part(q: &UnivariateSlice) -> Result<SquareFree, PolyError> {
    let p = q.poly();
    if p.is_zero() {
        return Err(PolyError::ZeroPolynomial);
    }
    let g = p.gcd(&p.derivative());
    let part = p.div_rem(&g).0.monic();
    let has_multiple_root = g.degree().unwrap_or(0) > 0;
    Ok(SquareFree { part, gcd: g, has_multiple_root })
}

/// Isolates every real root of the slice by Sturm sequences on its
/// square-free part, refining each interval to width at most `precision`.
pub fn isolate_real_roots(
    q: &UnivariateSlice,
    precision: &BigRational,
) -> Result<RootIsolationResult, PolyError> {
    let sf = square_free_part(q)?;
    if sf.part.degree() == Some(0) {
        return Ok(RootIsolationResult { roots: Vec::new() });
    }
    let sturm = Sturm { seq: sf.part.sturm_sequence() };
    let total = sturm.variations_at_neg_inf() - sturm.variations_at_pos_inf();
    let bound = sf.part.root_bound();
    let mut roots = Vec::with_capacity(total);
    let mut stack = vec![(-bound.clone(), bound)];
    let two = BigRational::from_integer(BigInt::from(2));
    while let Some((a, b)) = stack.pop() {
        let n = sturm.count(&a, &b);
        if n == 0 {
            continue;
        }
        if n == 1 {
            roots.push(refine(&sf.part, &sturm, a, b, precision));
            continue;
        }
        let mid = (&a + &b) / &two;
        stack.push((mid.clone(), b));
        stack.push((a, mid));
    }
    roots.sort_by(|x, y| x.lo.cmp(&y.lo));
    debug_assert_eq!(roots.len(), total);
    let gcd_sturm = (sf.gcd.degree().unwrap_or(0) > 0).then(|| Sturm { seq: sf.gcd.sturm_sequence() });
    for r in &mut roots {
        r.multiple = match &gcd_sturm {
            None => false,
            Some(_) if r.is_exact() => sf.gcd.eval(&r.lo).is_zero(),
            Some(gs) => gs.count(&r.lo, &r.hi) > 0,
        };
    }
    Ok(RootIsolationResult { roots })
}

fn refine(
    p: &UniPoly,
    sturm: &Sturm,
    mut a: BigRational,
    mut b: BigRational,
    precision: &BigRational,
) -> RootInterval {
    let two = BigRational::from_integer(BigInt::from(2));
    if p.eval(&b).is_zero() {
        return RootInterval { lo: b.clone(), hi: b, multiple: false };
    }
    while &(&b - &a) > precision {
        let mid = (&a + &b) / &two;
        if p.eval(&mid).is_zero() {
            return RootInterval { lo: mid.clone(), hi: mid, multiple: false };
        }
        if sturm.count(&a, &mid) == 1 {
            b = mid;
        } else {
            a = mid;
        }
    }
    RootInterval { lo: a, hi: b, multiple: false }
}
