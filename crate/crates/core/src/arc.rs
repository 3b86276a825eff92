//! Arcs `gamma: [0,1] -> R^n` in the target space together with the
//! parameter schedule at which fibers are examined.

use serde::{Deserialize, Serialize};

use crate::poly::{rational_from_f64, Polynomial};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ArcError {
    #[error("schedule must lie in [0,1] and contain both 0 and 1")]
    InvalidSchedule,
    #[error("arc needs at least two polyline vertices or one polynomial component")]
    Empty,
    #[error("polyline vertices have inconsistent dimensions")]
    Dimension,
    #[error("polynomial arc components must be univariate in one shared parameter")]
    NotUnivariate,
    #[error("arc is not injective on its schedule (s = {0} and s = {1} collide)")]
    NotInjective(f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArcPath {
    /// Vertices at equally spaced parameters, linear in between.
    Polyline { points: Vec<Vec<f64>> },
    /// One univariate polynomial per target coordinate.
    Polynomial { components: Vec<Polynomial> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub path: ArcPath,
    /// Parameters to visit, decreasing from 1 to 0.
    pub schedule: Vec<f64>,
}

pub fn uniform_schedule(steps: usize) -> Vec<f64> {
    let steps = steps.max(1);
    (0..=steps).rev().map(|i| i as f64 / steps as f64).collect()
}

impl Arc {
    pub fn polyline(points: Vec<Vec<f64>>) -> Result<Self, ArcError> {
        if points.len() < 2 {
            return Err(ArcError::Empty);
        }
        if points.iter().any(|p| p.len() != points[0].len()) {
            return Err(ArcError::Dimension);
        }
        Ok(Arc { path: ArcPath::Polyline { points }, schedule: uniform_schedule(10) })
    }

    pub fn segment(from: Vec<f64>, to: Vec<f64>) -> Result<Self, ArcError> {
        Self::polyline(vec![from, to])
    }

    pub fn polynomial(components: Vec<Polynomial>) -> Result<Self, ArcError> {
        if components.is_empty() {
            return Err(ArcError::Empty);
        }
        if components.iter().any(|c| c.nvars() != 1 || c.vars() != components[0].vars()) {
            return Err(ArcError::NotUnivariate);
        }
        Ok(Arc { path: ArcPath::Polynomial { components }, schedule: uniform_schedule(10) })
    }

    /// Replaces the schedule; it is sorted decreasing and deduplicated.
    pub fn with_schedule(mut self, mut schedule: Vec<f64>) -> Result<Self, ArcError> {
        if schedule.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(ArcError::InvalidSchedule);
        }
        schedule.sort_by(|a, b| b.total_cmp(a));
        schedule.dedup();
        if schedule.first() != Some(&1.0) || schedule.last() != Some(&0.0) {
            return Err(ArcError::InvalidSchedule);
        }
        self.schedule = schedule;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        match &self.path {
            ArcPath::Polyline { points } => points[0].len(),
            ArcPath::Polynomial { components } => components.len(),
        }
    }

    pub fn eval(&self, s: f64) -> Vec<f64> {
        let s = s.clamp(0.0, 1.0);
        match &self.path {
            ArcPath::Polyline { points } => {
                let segs = (points.len() - 1) as f64;
                let pos = s * segs;
                let i = (pos.floor() as usize).min(points.len() - 2);
                let f = pos - i as f64;
                points[i].iter().zip(&points[i + 1]).map(|(a, b)| a + f * (b - a)).collect()
            }
            ArcPath::Polynomial { components } => {
                components.iter().map(|c| c.eval(&[s]).expect("univariate")).collect()
            }
        }
    }

    /// Exact point of a polynomial arc at a rational parameter; polylines
    /// are evaluated in floating point and converted.
    pub fn eval_exact(&self, s: f64) -> Vec<num_rational::BigRational> {
        match &self.path {
            ArcPath::Polynomial { components } => components
                .iter()
                .map(|c| c.eval_exact(&[rational_from_f64(s)]).expect("univariate"))
                .collect(),
            ArcPath::Polyline { .. } => self.eval(s).into_iter().map(rational_from_f64).collect(),
        }
    }

    /// `gamma(0)`.
    pub fn endpoint(&self) -> Vec<f64> {
        self.eval(0.0)
    }

    pub fn check_injective(&self) -> Result<(), ArcError> {
        let pts: Vec<(f64, Vec<f64>)> = self.schedule.iter().map(|&s| (s, self.eval(s))).collect();
        for i in 0..pts.len() {
            for j in 0..i {
                if crate::spatial::dist(&pts[i].1, &pts[j].1) < 1e-12 {
                    return Err(ArcError::NotInjective(pts[j].0, pts[i].0));
                }
            }
        }
        Ok(())
    }
}
