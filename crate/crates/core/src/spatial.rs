//! Uniform grid hash for fixed-radius neighbor queries in low dimension.

use std::collections::HashMap;

#[derive(Clone, Debug)]
pub struct SpatialHash {
    cell: f64,
    dim: usize,
    buckets: HashMap<Vec<i64>, Vec<usize>>,
    points: Vec<Vec<f64>>,
}

impl SpatialHash {
    pub fn new(dim: usize, cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite(), "cell size must be positive");
        SpatialHash { cell, dim, buckets: HashMap::new(), points: Vec::new() }
    }

    pub fn from_points(points: &[Vec<f64>], cell: f64) -> Self {
        let dim = points.first().map_or(0, |p| p.len());
        let mut h = SpatialHash::new(dim, cell);
        for p in points {
            h.insert(p.clone());
        }
        h
    }

    fn key(&self, p: &[f64]) -> Vec<i64> {
        p.iter().map(|c| (c / self.cell).floor() as i64).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn insert(&mut self, p: Vec<f64>) -> usize {
        debug_assert_eq!(p.len(), self.dim);
        let id = self.points.len();
        let k = self.key(&p);
        self.buckets.entry(k).or_default().push(id);
        self.points.push(p);
        id
    }

    /// Calls `f` on every stored index in the cells overlapping the cube of
    /// half-width `r` around `p`. Candidates still need a distance check.
    fn for_candidates(&self, p: &[f64], r: f64, mut f: impl FnMut(usize) -> bool) {
        let lo: Vec<i64> = p.iter().map(|c| ((c - r) / self.cell).floor() as i64).collect();
        let hi: Vec<i64> = p.iter().map(|c| ((c + r) / self.cell).floor() as i64).collect();
        let mut key = lo.clone();
        loop {
            if let Some(ids) = self.buckets.get(&key) {
                for &i in ids {
                    if !f(i) {
                        return;
                    }
                }
            }
            let mut d = 0;
            loop {
                if d == self.dim {
                    return;
                }
                if key[d] < hi[d] {
                    key[d] += 1;
                    break;
                }
                key[d] = lo[d];
                d += 1;
            }
        }
    }

    /// Indices of stored points within distance `r` of `p`, ascending.
    pub fn within(&self, p: &[f64], r: f64) -> Vec<usize> {
        let r2 = r * r;
        let mut out = Vec::new();
        self.for_candidates(p, r, |i| {
            if dist2(&self.points[i], p) <= r2 {
                out.push(i);
            }
            true
        });
        out.sort_unstable();
        out
    }

    /// True if some stored point lies strictly closer than `r` to `p`.
    pub fn any_within(&self, p: &[f64], r: f64) -> bool {
        let r2 = r * r;
        let mut found = false;
        self.for_candidates(p, r, |i| {
            found = dist2(&self.points[i], p) < r2;
            !found
        });
        found
    }

    /// Nearest stored point other than `skip`, searching out to `max_r`.
    pub fn nearest(&self, p: &[f64], skip: Option<usize>, max_r: f64) -> Option<(usize, f64)> {
        let mut r = self.cell;
        loop {
            let mut best: Option<(usize, f64)> = None;
            self.for_candidates(p, r, |i| {
                if Some(i) != skip {
                    let d = dist2(&self.points[i], p);
                    if best.is_none_or(|(bi, bd)| d < bd || (d == bd && i < bi)) {
                        best = Some((i, d));
                    }
                }
                true
            });
            // a hit inside the searched cube is only certain within radius r
            if let Some((i, d2)) = best {
                if d2.sqrt() <= r {
                    return Some((i, d2.sqrt()));
                }
            }
            if r >= max_r {
                return best.map(|(i, d)| (i, d.sqrt())).filter(|&(_, d)| d <= max_r);
            }
            r = (r * 2.0).min(max_r);
        }
    }
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}
