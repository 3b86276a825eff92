use std::io::Write;

use rayon::prelude::*;

use super::TopoError;
use crate::spatial::{dist, SpatialHash};

pub const DEFAULT_SIMPLEX_CAP: usize = 2_000_000;

/// Vietoris–Rips 2-skeleton at scale `eps`.
///
/// Edges are `(i, j)` with `i < j` in lexicographic order; triangles are
/// `(i, j, k)` with `i < j < k`, also lexicographic.
#[derive(Clone, Debug)]
pub struct RipsComplex {
    pub eps: f64,
    pub n_vertices: usize,
    pub edges: Vec<[u32; 2]>,
    pub edge_len: Vec<f64>,
    pub triangles: Vec<[u32; 3]>,
    /// `offsets[i]..offsets[i+1]` indexes the edges whose first vertex is `i`.
    offsets: Vec<usize>,
}

impl RipsComplex {
    pub fn build(points: &[Vec<f64>], eps: f64, cap: usize) -> Result<Self, TopoError> {
        if !(eps > 0.0) {
            return Err(TopoError::InvalidInput("scale must be positive".into()));
        }
        let n = points.len();
        let index = SpatialHash::from_points(points, eps);
        let upper: Vec<Vec<u32>> = (0..n)
            .into_par_iter()
            .map(|i| index.within(&points[i], eps).into_iter().filter(|&j| j > i).map(|j| j as u32).collect())
            .collect();
        let n_edges: usize = upper.iter().map(Vec::len).sum();
        if n + n_edges > cap {
            return Err(TopoError::ComplexTooLarge { cap });
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut edges = Vec::with_capacity(n_edges);
        offsets.push(0);
        for (i, nb) in upper.iter().enumerate() {
            edges.extend(nb.iter().map(|&j| [i as u32, j]));
            offsets.push(edges.len());
        }
        let edge_len: Vec<f64> =
            edges.par_iter().map(|[i, j]| dist(&points[*i as usize], &points[*j as usize])).collect();

        let room = cap - n - n_edges;
        let per_vertex: Vec<Vec<[u32; 3]>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let ni = &upper[i];
                let mut out = Vec::new();
                for (a, &j) in ni.iter().enumerate() {
                    let nj = &upper[j as usize];
                    // k ranges over the common upper neighbors of i and j
                    let (mut p, mut q) = (a + 1, 0);
                    while p < ni.len() && q < nj.len() {
                        match ni[p].cmp(&nj[q]) {
                            std::cmp::Ordering::Less => p += 1,
                            std::cmp::Ordering::Greater => q += 1,
                            std::cmp::Ordering::Equal => {
                                out.push([i as u32, j, ni[p]]);
                                p += 1;
                                q += 1;
                            }
                        }
                    }
                    if out.len() > room {
                        break;
                    }
                }
                out
            })
            .collect();
        let n_tri: usize = per_vertex.iter().map(Vec::len).sum();
        if n_tri > room {
            return Err(TopoError::ComplexTooLarge { cap });
        }
        let triangles = per_vertex.concat();
        Ok(RipsComplex { eps, n_vertices: n, edges, edge_len, triangles, offsets })
    }

    pub fn simplex_count(&self) -> usize {
        self.n_vertices + self.edges.len() + self.triangles.len()
    }

    /// Index of edge `{a, b}`, if present.
    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        if i == j || j >= self.n_vertices {
            return None;
        }
        let range = self.offsets[i]..self.offsets[i + 1];
        self.edges[range.clone()].binary_search_by(|e| e[1].cmp(&(j as u32))).ok().map(|p| range.start + p)
    }

    /// One simplex per line as space-separated vertex indices.
    pub fn write_simplices<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for v in 0..self.n_vertices {
            writeln!(w, "{v}")?;
        }
        for [i, j] in &self.edges {
            writeln!(w, "{i} {j}")?;
        }
        for [i, j, k] in &self.triangles {
            writeln!(w, "{i} {j} {k}")?;
        }
        Ok(())
    }
}
