use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scan::{resolve_radius, ScanConfig};
use super::{index_seed, ArcScanError, FiberFamily};
use crate::poly::PolynomialMap;
use crate::spatial::{dist, norm};
use crate::topo::{select_scale, LoopClass, RipsHomology};
use crate::varnum::{sample_fiber, SampleConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopEntry {
    pub index: usize,
    pub s: f64,
    pub seed: u64,
    pub radius: f64,
    pub eps: Option<f64>,
    pub n_fiber_points: usize,
    /// The loop as an ordered cycle of points on the fiber.
    pub loop_points: Vec<Vec<f64>>,
    /// Indices of the loop points in the fiber sample they were embedded in.
    pub vertices: Vec<usize>,
    pub max_gap: Option<f64>,
    pub median_gap: Option<f64>,
    pub hausdorff_to_prev: Option<f64>,
    pub continuation_gap: bool,
    pub is_boundary: Option<bool>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopTrace {
    pub entries: Vec<LoopEntry>,
}

impl LoopTrace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

/// Orders points into a cycle by greedy nearest-neighbour chaining from the
/// first point. Returns the order and the consecutive gaps, the closing gap
/// last.
pub fn chain_nearest(points: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    let n = points.len();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let mut used = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut gaps = Vec::with_capacity(n);
    let mut cur = 0;
    used[0] = true;
    order.push(0);
    for _ in 1..n {
        let (j, d) = (0..n)
            .filter(|&j| !used[j])
            .map(|j| (j, dist(&points[cur], &points[j])))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .expect("unvisited point");
        used[j] = true;
        order.push(j);
        gaps.push(d);
        cur = j;
    }
    gaps.push(dist(&points[cur], &points[0]));
    (order, gaps)
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn loop_hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let directed = |x: &[Vec<f64>], y: &[Vec<f64>]| {
        x.iter().map(|p| y.iter().map(|q| dist(p, q)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

struct Realized {
    eps: f64,
    n_fiber: usize,
    loop_points: Vec<Vec<f64>>,
    vertices: Vec<usize>,
    max_gap: f64,
    median_gap: f64,
    is_boundary: bool,
}

fn realize(
    family: &dyn FiberFamily,
    cut: &PolynomialMap,
    s: f64,
    seed: u64,
    cfg: &ScanConfig,
    entry: &mut LoopEntry,
) -> Result<Realized, ArcScanError> {
    let fiber = family.fiber(s)?;
    let (radius, _, _) = resolve_radius(&cfg.radius, &fiber.map, &fiber.level, &cfg.milnor, seed)?;
    entry.radius = radius;
    let sample = sample_fiber(&fiber.map, &fiber.level, radius, seed, &cfg.sample)?;
    let eps = select_scale(&sample.points, cfg.scale_factor)?;

    let stacked = fiber.map.stacked(cut.components())?;
    let mut level = fiber.level.clone();
    level.extend(std::iter::repeat_n(0.0, cut.n()));
    let cut_cfg = SampleConfig { spacing: Some(eps / cfg.loop_spacing_factor), ..cfg.sample.clone() };
    let cut_sample = sample_fiber(&stacked, &level, radius, seed ^ 0x100F, &cut_cfg)?;
    let bounded = cut_sample.points.iter().all(|p| norm(p) <= 0.95 * radius);
    let cut_h = RipsHomology::compute(
        &cut_sample.points,
        select_scale(&cut_sample.points, cfg.scale_factor)?,
        cfg.simplex_cap,
    )?;
    if !bounded || (cut_h.beta0, cut_h.beta1) != (1, 1) {
        return Err(ArcScanError::CutLocusNotACircle { s, beta0: cut_h.beta0, beta1: cut_h.beta1, bounded });
    }

    let (order, gaps) = chain_nearest(&cut_sample.points);
    let med = median(&gaps);
    let max_gap = gaps.iter().copied().fold(0.0, f64::max);
    if max_gap > 2.0 * med {
        return Err(ArcScanError::ChainingAmbiguity { s, gap: max_gap, median: med });
    }
    let loop_points: Vec<Vec<f64>> = order.iter().map(|&i| cut_sample.points[i].clone()).collect();
    let mut points = sample.points;
    let n_fiber = points.len();
    let lp = LoopClass::embed(&mut points, &loop_points, 1e-9);
    let h = RipsHomology::compute(&points, eps, cfg.simplex_cap)?;
    let is_boundary = h.loop_is_boundary(&lp)?;
    Ok(Realized { eps, n_fiber, loop_points, vertices: lp.vertices, max_gap, median_gap: med, is_boundary })
}

/// Follows the loop `fiber ∩ {cut = 0}` along the schedule and decides per
/// fiber whether it bounds (over Z/2) in the sampled fiber.
///
/// Each fiber is sampled exactly as [`super::scan_family`] does with the
/// same config, so the loop lives on the same cloud the scan analyzed.
/// Per-fiber failures are recorded on the entry.
pub fn track_loop_along_arc(
    family: &dyn FiberFamily,
    schedule: &[f64],
    cut: &PolynomialMap,
    cfg: &ScanConfig,
) -> Result<LoopTrace, ArcScanError> {
    if schedule.is_empty() {
        return Err(ArcScanError::InvalidInput("empty schedule".into()));
    }
    if cut.vars() != family.variables().as_slice() {
        return Err(ArcScanError::InvalidInput("loop constraints must use the fiber's variables".into()));
    }
    let mut entries: Vec<LoopEntry> = schedule
        .par_iter()
        .enumerate()
        .map(|(index, &s)| {
            let seed = index_seed(cfg.seed, index);
            let mut entry = LoopEntry {
                index,
                s,
                seed,
                radius: 0.0,
                eps: None,
                n_fiber_points: 0,
                loop_points: Vec::new(),
                vertices: Vec::new(),
                max_gap: None,
                median_gap: None,
                hausdorff_to_prev: None,
                continuation_gap: false,
                is_boundary: None,
                error: None,
            };
            match realize(family, cut, s, seed, cfg, &mut entry) {
                Ok(r) => {
                    entry.eps = Some(r.eps);
                    entry.n_fiber_points = r.n_fiber;
                    entry.loop_points = r.loop_points;
                    entry.vertices = r.vertices;
                    entry.max_gap = Some(r.max_gap);
                    entry.median_gap = Some(r.median_gap);
                    entry.is_boundary = Some(r.is_boundary);
                }
                Err(e) => entry.error = Some(e.to_string()),
            }
            entry
        })
        .collect();
    for i in 1..entries.len() {
        let (prev, cur) = entries.split_at_mut(i);
        let (a, b) = (&prev[i - 1], &mut cur[0]);
        if a.loop_points.is_empty() || b.loop_points.is_empty() {
            b.continuation_gap = true;
            continue;
        }
        let h = loop_hausdorff(&a.loop_points, &b.loop_points);
        let tol = cfg.match_tol.unwrap_or(a.radius.max(b.radius) / 10.0);
        b.hausdorff_to_prev = Some(h);
        b.continuation_gap = h > tol;
    }
    Ok(LoopTrace { entries })
}
