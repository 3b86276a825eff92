use rayon::prelude::*;

use super::TopoError;
use crate::spatial::{dist, SpatialHash};

pub const DEFAULT_SCALE_FACTOR: f64 = 3.0;

/// Distance from each point to its nearest other point.
pub fn nearest_neighbor_distances(points: &[Vec<f64>]) -> Result<Vec<f64>, TopoError> {
    let n = points.len();
    if n < 2 {
        return Err(TopoError::DegenerateCloud);
    }
    let dim = points[0].len();
    let mut lo = points[0].clone();
    let mut hi = points[0].clone();
    for p in points {
        for d in 0..dim {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let diag = dist(&lo, &hi);
    if diag == 0.0 {
        return Err(TopoError::DegenerateCloud);
    }
    let extent = (0..dim).map(|d| hi[d] - lo[d]).fold(0.0, f64::max);
    let cell = (extent / (n as f64).powf(1.0 / dim.max(1) as f64)).max(diag * 1e-9);
    let index = SpatialHash::from_points(points, cell);
    Ok((0..n)
        .into_par_iter()
        .map(|i| index.nearest(&points[i], Some(i), diag * 1.01).map_or(diag, |(_, d)| d))
        .collect())
}

/// `c` times the 90th percentile of nearest-neighbor distances.
pub fn select_scale(points: &[Vec<f64>], c: f64) -> Result<f64, TopoError> {
    let mut d = nearest_neighbor_distances(points)?;
    d.sort_by(f64::total_cmp);
    let k = ((0.9 * d.len() as f64).ceil() as usize).clamp(1, d.len()) - 1;
    let eps = c * d[k];
    if !(eps > 0.0) {
        return Err(TopoError::DegenerateCloud);
    }
    Ok(eps)
}

/// Greedy farthest-point subsample of `k` indices, starting from point 0.
pub fn farthest_point_subsample(points: &[Vec<f64>], k: usize) -> Vec<usize> {
    let n = points.len();
    if k >= n {
        return (0..n).collect();
    }
    let mut chosen = Vec::with_capacity(k);
    if k == 0 {
        return chosen;
    }
    let mut best = vec![f64::INFINITY; n];
    let mut cur = 0;
    for _ in 0..k {
        chosen.push(cur);
        let p = &points[cur];
        best.par_iter_mut().enumerate().for_each(|(i, b)| *b = b.min(dist(&points[i], p)));
        cur = best
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .expect("nonempty");
    }
    chosen.sort_unstable();
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                let t = i as f64 / n as f64 * std::f64::consts::TAU;
                vec![t.cos(), t.sin()]
            })
            .collect()
    }

    #[test]
    fn uniform_circle_scale_is_c_times_gap() {
        let eps = select_scale(&circle(200), 3.0).unwrap();
        let gap = 2.0 * (std::f64::consts::PI / 200.0).sin();
        assert!((eps - 3.0 * gap).abs() < 1e-9);
    }

    #[test]
    fn percentile_ignores_sparse_outliers() {
        let mut pts = circle(400);
        for i in 0..10 {
            pts.push(vec![10.0 + 3.0 * i as f64, 0.0]);
        }
        let eps = select_scale(&pts, 3.0).unwrap();
        assert!(eps < 0.1, "eps = {eps}");
    }

    #[test]
    fn identical_points_are_degenerate() {
        let pts = vec![vec![1.0, 2.0]; 5];
        assert_eq!(select_scale(&pts, 3.0), Err(TopoError::DegenerateCloud));
        assert_eq!(select_scale(&pts[..1], 3.0), Err(TopoError::DegenerateCloud));
    }

    #[test]
    fn farthest_points_spread_out() {
        let pts = circle(100);
        let idx = farthest_point_subsample(&pts, 4);
        assert_eq!(idx.len(), 4);
        assert!(idx.contains(&0) && idx.contains(&50));
    }
}
