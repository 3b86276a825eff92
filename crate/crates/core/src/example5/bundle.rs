use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arc::Arc;
use crate::poly::{parse_polynomial, rat, Polynomial, PolynomialMap};
use crate::varnum::RestrictedFunction;

pub const VARS5: [&str; 5] = ["x", "y", "z", "u", "v"];
pub const VARS3: [&str; 3] = ["x", "y", "z"];

pub const F1: &str = "y^2+(u^2*x+1)*(v*x-1)*(x^2+(v-u^2)*x+1)";
pub const F2: &str = "(z^2+u^2)-v*(u^2+1)*(z^2+1)";
pub const F3: &str = "u";
pub const G: &str = "(u^2*x+1)*(v*x-1)*(x^2+(v-u^2)*x+1)";
/// `D^2 (y^2 + g)` with `v = N/D`, `N = z^2+u^2`, `D = (u^2+1)(z^2+1)`.
pub const REDUCED: &str = "((u^2+1)*(z^2+1))^2*y^2 + (u^2*x+1)*((z^2+u^2)*x-(u^2+1)*(z^2+1))*((u^2+1)*(z^2+1)*x^2+((z^2+u^2)-u^2*(u^2+1)*(z^2+1))*x+(u^2+1)*(z^2+1))";
/// `g` with a planted double root at `x = 1`.
pub const G_MUTANT: &str = "(x-1)^2*(x-2)*(x^2+(v-u^2)*x+1)";
pub const LOOP_CUT: &str = "x-z^2";
pub const CASE_II: &str = "(1-x+z^2)*(u^2+1)+x^2";
/// `x v = 1` with `v = (z^2+u^2)/((u^2+1)(z^2+1))`, denominator cleared.
pub const X_TIMES_V_ONE: &str = "(u^2+1)*(z^2+1)-x*(z^2+u^2)";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BundleError {
    #[error("bundle invariant failed: {0}")]
    Invariant(String),
}

/// Reference values the claims are checked against.
#[derive(Clone, Debug, Serialize)]
pub struct ReferenceValues {
    pub map_point: [f64; 5],
    pub map_value: [f64; 3],
    /// `(0, ±1, 0)`: where the cut `x = z^2` meets `X_0` in the plane `z = 0`.
    pub circle_anchors_u0: [[f64; 3]; 2],
    /// `(1, √2, 0)` on `X_0` with `x - z^2 = 1`.
    pub p_level_one_anchor: [f64; 3],
}

/// The map `F = (f1, f2, f3): R^5 -> R^3`, the arc `(0, 0, s)` and the
/// reduced surfaces `X_u ⊂ R^3`.
#[derive(Clone, Debug)]
pub struct Example5Bundle {
    pub map: PolynomialMap,
    pub g: Polynomial,
    pub arc: Arc,
    /// Reduced polynomial in `(x, y, z, u)`.
    pub reduced: Polynomial,
    pub loop_cut: Polynomial,
    pub case_ii: Polynomial,
    pub x_times_v_one: Polynomial,
    pub reference: ReferenceValues,
}

impl Example5Bundle {
    /// `X_u` as a one-component map on `(x, y, z)`.
    pub fn reduced_surface(&self, u: &BigRational) -> PolynomialMap {
        let p = self.reduced.substitute(&[("u", u.clone())]).expect("u is a variable").embed(&VARS3).expect("u eliminated");
        PolynomialMap::with_vars(&VARS3, vec![p]).expect("shared variables")
    }

    pub fn reduced_surface_f64(&self, u: f64) -> PolynomialMap {
        self.reduced_surface(&crate::poly::rational_near(u, 1000))
    }

    /// `g_{u,v}` as a polynomial in `x` (variables `x, u, v` with `u, v` substituted).
    pub fn g_slice(&self, u: &BigRational, v: &BigRational) -> crate::poly::UnivariateSlice {
        crate::poly::UnivariateSlice::new(&self.g, "x", &[("u", u.clone()), ("v", v.clone())])
            .expect("g is univariate in x after substitution")
    }

    /// `v` recovered from a point of `X_u`.
    pub fn reconstruct_v(x: &[f64], u: f64) -> f64 {
        let z2 = x[2] * x[2];
        (z2 + u * u) / ((u * u + 1.0) * (z2 + 1.0))
    }

    /// Lifts a point of `X_u` to `F^{-1}(0, 0, u) ⊂ R^5`.
    pub fn lift(x: &[f64], u: f64) -> [f64; 5] {
        [x[0], x[1], x[2], u, Self::reconstruct_v(x, u)]
    }

    /// `r_u = x - z^2` on `X_u`, restricted to `x - z^2 >= 0`.
    pub fn r_u(&self, u: &BigRational) -> RestrictedFunction {
        RestrictedFunction::new(self.loop_cut.clone(), self.reduced_surface(u))
            .and_then(|rf| rf.with_inequality(self.loop_cut.clone()))
            .expect("shared variables")
    }

    /// `p = x - z^2` on `X_0`, no inequality.
    pub fn p(&self) -> RestrictedFunction {
        RestrictedFunction::new(self.loop_cut.clone(), self.reduced_surface(&BigRational::zero()))
            .expect("shared variables")
    }

    /// `q_u = z` on `X_u`.
    pub fn q_u(&self, u: &BigRational) -> RestrictedFunction {
        let z = Polynomial::var(&VARS3, "z").expect("z");
        RestrictedFunction::new(z, self.reduced_surface(u)).expect("shared variables")
    }

    /// `psi = x^2 + y^2 + z^2`.
    pub fn psi(&self) -> Polynomial {
        parse_polynomial("x^2+y^2+z^2", &VARS3).expect("static")
    }

    /// The cut `{x - z^2 = 0}` as a map on `(x, y, z)`.
    pub fn loop_constraints(&self) -> PolynomialMap {
        PolynomialMap::with_vars(&VARS3, vec![self.loop_cut.clone()]).expect("static")
    }

    /// The bundle with `g` (and so `f1`) replaced by [`G_MUTANT`], which has
    /// a singular fiber along the arc. Only `map` and `g` change.
    pub fn planted_mutant(&self) -> Self {
        let g = parse_polynomial(G_MUTANT, &["x", "u", "v"]).expect("static");
        let f1 = format!("y^2+{G_MUTANT}");
        let map = PolynomialMap::parse(&VARS5, &[&f1, F2, F3]).expect("static map");
        Example5Bundle { map, g, ..self.clone() }
    }

    /// Checks every build-time identity in exact arithmetic.
    pub fn check_invariants(&self) -> Result<(), BundleError> {
        let fail = |s: &str| Err(BundleError::Invariant(s.into()));
        let pt = [rat(2, 1), rat(0, 1), rat(0, 1), rat(1, 1), rat(1, 2)];
        if self.map.eval_exact(&pt).expect("5 coordinates") != vec![rat(0, 1), rat(0, 1), rat(1, 1)] {
            return fail("F(2,0,0,1,1/2) != (0,0,1)");
        }
        let x0 = self.reduced_surface(&BigRational::zero());
        if x0.component(0).eval_exact(&[rat(0, 1), rat(0, 1), rat(0, 1)]).expect("3 coordinates") != rat(-1, 1) {
            return fail("g_0(0,0) != -1");
        }
        if !x0.component(0).eval_exact(&[rat(0, 1), rat(1, 1), rat(0, 1)]).expect("3 coordinates").is_zero() {
            return fail("(0,1,0) not on X_0");
        }
        // the reduced surface is D^2 times f1 with v eliminated through f2 = 0
        let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
        let us = [rat(0, 1), rat(1, 4), rat(1, 2), rat(3, 4), rat(1, 1)];
        for i in 0..100 {
            let u = us[i % us.len()].clone();
            let q = |r: &mut ChaCha8Rng| rat(r.random_range(-40..=40), r.random_range(1..=9));
            let (x, y, z) = (q(&mut rng), q(&mut rng), q(&mut rng));
            let one = BigRational::one();
            let n = &z * &z + &u * &u;
            let d = (&u * &u + &one) * (&z * &z + &one);
            let v = &n / &d;
            let full = self.map.eval_exact(&[x.clone(), y.clone(), z.clone(), u.clone(), v]).expect("5 coordinates");
            if !full[1].is_zero() {
                return fail("eliminated v does not solve f2 = 0");
            }
            let red = self.reduced.eval_exact(&[x, y, z, u]).expect("4 coordinates");
            if red != &d * &d * &full[0] {
                return fail("reduced surface differs from D^2 f1 on the v-eliminated slice");
            }
        }
        Ok(())
    }
}

pub fn build_example() -> Example5Bundle {
    let map = PolynomialMap::parse(&VARS5, &[F1, F2, F3]).expect("static map");
    let g = parse_polynomial(G, &["x", "u", "v"]).expect("static g");
    let s = ["s"];
    let arc = Arc::polynomial(vec![
        parse_polynomial("0", &s).expect("static"),
        parse_polynomial("0", &s).expect("static"),
        parse_polynomial("s", &s).expect("static"),
    ])
    .expect("static arc");
    let b = Example5Bundle {
        map,
        g,
        arc,
        reduced: parse_polynomial(REDUCED, &["x", "y", "z", "u"]).expect("static reduced"),
        loop_cut: parse_polynomial(LOOP_CUT, &VARS3).expect("static cut"),
        case_ii: parse_polynomial(CASE_II, &["x", "z", "u"]).expect("static"),
        x_times_v_one: parse_polynomial(X_TIMES_V_ONE, &["x", "z", "u"]).expect("static"),
        reference: ReferenceValues {
            map_point: [2.0, 0.0, 0.0, 1.0, 0.5],
            map_value: [0.0, 0.0, 1.0],
            circle_anchors_u0: [[0.0, 1.0, 0.0], [0.0, -1.0, 0.0]],
            p_level_one_anchor: [1.0, std::f64::consts::SQRT_2, 0.0],
        },
    };
    b.check_invariants().expect("static bundle satisfies its identities");
    b
}
