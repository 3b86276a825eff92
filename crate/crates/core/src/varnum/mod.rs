//! Numerical work on real varieties: projection onto fibers, sampling inside
//! balls, Milnor-radius estimation, constrained critical points and
//! singularity certification along arcs.

pub mod certify;
pub mod critical;
pub mod milnor;
pub mod project;
pub mod qmc;
pub mod sample;

pub use certify::{certify_no_singularity_on_arc, CertifyConfig, CertifyReport, GcdCheck, SingularitySystem};
pub use critical::{
    constrained_critical_points, restricted_hessian, tangent_basis, ChartHessian, CriticalConfig,
    CriticalPoint, CriticalSearch, RestrictedFunction,
};
pub use milnor::{estimate_milnor_radius, MilnorConfig, MilnorEstimate, ShellReport};
pub use project::{project_to_fiber, ProjectConfig};
pub use sample::{sample_fiber, FiberSample, SampleConfig, SampleStats};

use crate::poly::PolyError;

#[derive(Debug, thiserror::Error)]
pub enum VarnumError {
    #[error("no convergence after {iters} iterations (scaled residual {residual:e})")]
    MaxIterExceeded { iters: usize, residual: f64 },
    #[error("Jacobian lost rank at iteration {iter} (sigma_min/sigma_max = {ratio:e})")]
    SingularStep { iter: usize, ratio: f64 },
    #[error("fiber appears empty within the ball: {attempts} starts, none converged inside")]
    FiberEmptyWithinBall { attempts: u64 },
    #[error("transversality margin stays below threshold out to the last grid radius {last_radius}")]
    InconclusiveMargin { last_radius: f64, report: Box<MilnorEstimate> },
    #[error("candidate singularity at s = {s} with residual {residual:e}")]
    CandidateSingularityFound { s: f64, residual: f64, point: Vec<f64>, report: Box<CertifyReport> },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
