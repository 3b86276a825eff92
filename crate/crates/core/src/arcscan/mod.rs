//! Fibers along an arc in the target: per-parameter betti numbers, component
//! tracking, a distinguished loop followed from fiber to fiber, and the
//! resulting atypicality verdict.

mod loops;
mod scan;
mod verdict;

use crate::arc::{Arc, ArcError};
use crate::poly::{PolyError, PolynomialMap};
use crate::topo::TopoError;
use crate::varnum::VarnumError;

pub use loops::{chain_nearest, track_loop_along_arc, LoopEntry, LoopTrace};
pub use scan::{
    analyze_points, scan_arc, scan_family, ArcReport, ComponentSummary, FiberRecord, Jump, RadiusRule, ScanConfig,
};
pub use verdict::{atypicality_verdict, detect_vanishing_components, Verdict, VerdictKind, VanishingFlag, REASON_BETA0, REASON_BETA1, REASON_LOOP, REASON_VANISHING};

#[derive(Debug, thiserror::Error)]
pub enum ArcScanError {
    #[error("cut locus at s = {s} is not a circle (beta0 = {beta0}, beta1 = {beta1}, bounded = {bounded})")]
    CutLocusNotACircle { s: f64, beta0: usize, beta1: usize, bounded: bool },
    #[error("loop chaining at s = {s} is ambiguous: gap {gap} exceeds twice the median {median}")]
    ChainingAmbiguity { s: f64, gap: f64, median: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Varnum(#[from] VarnumError),
    #[error(transparent)]
    Topo(#[from] TopoError),
    #[error(transparent)]
    Arc(#[from] ArcError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// The fiber over `gamma(s)`, written as a level set `map = level`.
#[derive(Clone, Debug)]
pub struct Fiber {
    pub map: PolynomialMap,
    pub level: Vec<f64>,
    /// The point `gamma(s)` itself, for reports.
    pub target: Vec<f64>,
}

/// A one-parameter family of fibers, indexed by the arc parameter.
pub trait FiberFamily: Sync {
    fn variables(&self) -> Vec<String>;
    fn fiber(&self, s: f64) -> Result<Fiber, ArcScanError>;
}

/// `F^{-1}(gamma(s))` for a fixed map and arc.
#[derive(Clone, Debug)]
pub struct MapAlongArc {
    pub map: PolynomialMap,
    pub arc: Arc,
}

impl MapAlongArc {
    pub fn new(map: PolynomialMap, arc: Arc) -> Result<Self, ArcScanError> {
        if arc.dim() != map.n() {
            return Err(ArcScanError::InvalidInput(format!(
                "arc lives in R^{} but the map has {} components",
                arc.dim(),
                map.n()
            )));
        }
        if map.m() <= map.n() {
            return Err(ArcScanError::InvalidInput("map needs more variables than components".into()));
        }
        arc.check_injective()?;
        Ok(MapAlongArc { map, arc })
    }
}

impl FiberFamily for MapAlongArc {
    fn variables(&self) -> Vec<String> {
        self.map.vars().to_vec()
    }

    fn fiber(&self, s: f64) -> Result<Fiber, ArcScanError> {
        let t = self.arc.eval(s);
        Ok(Fiber { map: self.map.clone(), level: t.clone(), target: t })
    }
}

/// Per-schedule-index seed.
pub(crate) fn index_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
