//! Fiber topology of real polynomial maps along arcs in the target space.
//!
//! The crate is layered bottom-up:
//!
//! * [`poly`] exact rational polynomial arithmetic, differentiation, and
//!   Sturm-sequence real root isolation;
//! * [`varnum`] numerical work on real varieties: Gauss–Newton projection,
//!   fiber sampling, Milnor-radius estimation, constrained critical points;
//! * [`topo`] Vietoris–Rips homology over Z/2 and the loop-bounding test;
//! * [`arcscan`] per-parameter fiber invariants along an arc and the
//!   atypicality verdict;
//! * [`example5`] a worked map `R^5 -> R^3` whose endpoint fiber is atypical
//!   although every fiber along the arc has the same homology.

pub mod arc;
pub mod arcscan;
pub mod example5;
pub mod poly;
pub mod spatial;
pub mod topo;
pub mod varnum;

pub use arc::Arc;
pub use poly::{parse_polynomial, Polynomial, PolynomialMap, PolyError};
pub use varnum::{CriticalPoint, FiberSample, RestrictedFunction};
