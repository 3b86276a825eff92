//! Homology of point clouds through Vietoris–Rips complexes over Z/2.

mod reduce;
mod rips;
mod scale;

pub use reduce::{
    beta0_by_reduction, loop_is_boundary, rips_betti1, rips_components, LoopClass, PersistencePair,
    PersistenceSummary, RipsHomology,
};
pub use rips::{RipsComplex, DEFAULT_SIMPLEX_CAP};
pub use scale::{farthest_point_subsample, nearest_neighbor_distances, select_scale, DEFAULT_SCALE_FACTOR};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TopoError {
    #[error("complex would exceed the simplex cap ({cap}); subsample the cloud")]
    ComplexTooLarge { cap: usize },
    #[error("point cloud is degenerate (fewer than two distinct points)")]
    DegenerateCloud,
    #[error("loop is not a cycle: vertices {0} and {1} are not joined by an edge")]
    LoopNotCycle(usize, usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// `beta0 - beta1`; equals the Euler characteristic when the sampled space
/// is homotopy equivalent to a graph (no higher homology).
pub fn euler_estimate(summary: &PersistenceSummary) -> i64 {
    summary.beta0 as i64 - summary.beta1 as i64
}
