use std::io::Write;

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use super::rips::RipsComplex;
use super::TopoError;
use crate::spatial::{dist, SpatialHash};

const NONE: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersistencePair {
    pub dim: usize,
    pub birth: f64,
    /// `None` for classes still alive at the complex's scale.
    pub death: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersistenceSummary {
    pub beta0: usize,
    pub beta1: usize,
    pub eps: f64,
    pub scale_rule: String,
    pub n_points: usize,
    pub n_edges: usize,
    pub n_triangles: usize,
    pub pairs: Option<Vec<PersistencePair>>,
}

impl PersistenceSummary {
    pub fn write_pairs_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["dim", "birth", "death"])?;
        for p in self.pairs.iter().flatten() {
            let death = p.death.map_or_else(|| "inf".to_string(), |d| format!("{d:e}"));
            wtr.write_record([p.dim.to_string(), format!("{:e}", p.birth), death])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// A closed vertex cycle `v0 v1 ... v(k-1) v0` on a complex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopClass {
    pub vertices: Vec<usize>,
    pub is_boundary: Option<bool>,
}

impl LoopClass {
    pub fn new(vertices: Vec<usize>) -> Self {
        LoopClass { vertices, is_boundary: None }
    }

    /// Locates each loop point in `points` (within `tol`), appending the
    /// ones that are missing.
    pub fn embed(points: &mut Vec<Vec<f64>>, loop_points: &[Vec<f64>], tol: f64) -> Self {
        let cell = tol.max(1e-9);
        let mut index = SpatialHash::from_points(points, cell);
        let vertices = loop_points
            .iter()
            .map(|p| match index.within(p, tol).into_iter().min_by(|&a, &b| {
                dist(&points[a], p).total_cmp(&dist(&points[b], p)).then(a.cmp(&b))
            }) {
                Some(i) => i,
                None => {
                    points.push(p.clone());
                    index.insert(p.clone())
                }
            })
            .collect();
        LoopClass::new(vertices)
    }
}

fn symdiff(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Betti numbers and the reduced boundary matrix of a Rips 2-skeleton.
///
/// Edges are ranked by length; triangles are reduced in order of their
/// longest edge, so the reduction also yields the persistence pairs of the
/// filtration up to the complex's scale.
#[derive(Clone, Debug)]
pub struct RipsHomology {
    pub complex: RipsComplex,
    pub beta0: usize,
    pub beta1: usize,
    edge_rank: Vec<u32>,
    pivot: Vec<u32>,
    columns: Vec<Vec<u32>>,
    pairs: Vec<PersistencePair>,
}

impl RipsHomology {
    pub fn compute(points: &[Vec<f64>], eps: f64, cap: usize) -> Result<Self, TopoError> {
        Ok(Self::from_complex(RipsComplex::build(points, eps, cap)?))
    }

    pub fn from_complex(complex: RipsComplex) -> Self {
        let n = complex.n_vertices;
        let ne = complex.edges.len();
        let mut order: Vec<u32> = (0..ne as u32).collect();
        order.sort_by(|&a, &b| complex.edge_len[a as usize].total_cmp(&complex.edge_len[b as usize]).then(a.cmp(&b)));
        let mut edge_rank = vec![0u32; ne];
        for (r, &e) in order.iter().enumerate() {
            edge_rank[e as usize] = r as u32;
        }

        let mut pairs = Vec::new();
        let mut uf = UnionFind::<u32>::new(n);
        let mut positive = vec![false; ne];
        for &e in &order {
            let [a, b] = complex.edges[e as usize];
            if uf.union(a, b) {
                pairs.push(PersistencePair { dim: 0, birth: 0.0, death: Some(complex.edge_len[e as usize]) });
            } else {
                positive[e as usize] = true;
            }
        }
        let beta0 = (0..n as u32).filter(|&v| uf.find(v) == v).count();
        pairs.extend((0..beta0).map(|_| PersistencePair { dim: 0, birth: 0.0, death: None }));

        let mut tris: Vec<([u32; 3], f64)> = complex
            .triangles
            .iter()
            .map(|&[i, j, k]| {
                let e = [
                    complex.edge_index(i as usize, j as usize).expect("face edge"),
                    complex.edge_index(i as usize, k as usize).expect("face edge"),
                    complex.edge_index(j as usize, k as usize).expect("face edge"),
                ];
                let mut r = e.map(|x| edge_rank[x]);
                r.sort_unstable();
                (r, complex.edge_len[order[r[2] as usize] as usize])
            })
            .collect();
        tris.sort_by(|a, b| a.0[2].cmp(&b.0[2]).then(a.0[1].cmp(&b.0[1])).then(a.0[0].cmp(&b.0[0])));

        let mut pivot = vec![NONE; ne];
        let mut columns: Vec<Vec<u32>> = Vec::new();
        for (ranks, value) in tris {
            let mut col = ranks.to_vec();
            while let Some(&low) = col.last() {
                let p = pivot[low as usize];
                if p == NONE {
                    pivot[low as usize] = columns.len() as u32;
                    let birth = complex.edge_len[order[low as usize] as usize];
                    if value > birth {
                        pairs.push(PersistencePair { dim: 1, birth, death: Some(value) });
                    }
                    columns.push(col);
                    break;
                }
                col = symdiff(&col, &columns[p as usize]);
            }
        }
        let rank2 = columns.len();
        let rank1 = n - beta0;
        let beta1 = ne - rank1 - rank2;
        for (r, &e) in order.iter().enumerate() {
            if positive[e as usize] && pivot[r] == NONE {
                pairs.push(PersistencePair { dim: 1, birth: complex.edge_len[e as usize], death: None });
            }
        }
        RipsHomology { complex, beta0, beta1, edge_rank, pivot, columns, pairs }
    }

    pub fn persistence_pairs(&self) -> &[PersistencePair] {
        &self.pairs
    }

    pub fn summary(&self, scale_rule: &str, with_pairs: bool) -> PersistenceSummary {
        PersistenceSummary {
            beta0: self.beta0,
            beta1: self.beta1,
            eps: self.complex.eps,
            scale_rule: scale_rule.to_string(),
            n_points: self.complex.n_vertices,
            n_edges: self.complex.edges.len(),
            n_triangles: self.complex.triangles.len(),
            pairs: with_pairs.then(|| self.pairs.clone()),
        }
    }

    /// True iff the Z/2 1-chain of the loop is the boundary of a 2-chain.
    pub fn loop_is_boundary(&self, lp: &LoopClass) -> Result<bool, TopoError> {
        let k = lp.vertices.len();
        let mut chain: Vec<u32> = Vec::with_capacity(k);
        for i in 0..k {
            let (a, b) = (lp.vertices[i], lp.vertices[(i + 1) % k]);
            if a == b {
                continue;
            }
            let e = self.complex.edge_index(a, b).ok_or(TopoError::LoopNotCycle(a, b))?;
            chain.push(self.edge_rank[e]);
        }
        chain.sort_unstable();
        // cancel repeated edges mod 2
        let mut col: Vec<u32> = Vec::with_capacity(chain.len());
        for r in chain {
            if col.last() == Some(&r) {
                col.pop();
            } else {
                col.push(r);
            }
        }
        while let Some(&low) = col.last() {
            let p = self.pivot[low as usize];
            if p == NONE {
                return Ok(false);
            }
            col = symdiff(&col, &self.columns[p as usize]);
        }
        Ok(true)
    }
}

/// Number of connected components of the `eps`-neighborhood graph.
pub fn rips_components(points: &[Vec<f64>], eps: f64) -> usize {
    if points.is_empty() {
        return 0;
    }
    let index = SpatialHash::from_points(points, eps.max(f64::MIN_POSITIVE));
    let mut uf = UnionFind::<u32>::new(points.len());
    for (i, p) in points.iter().enumerate() {
        for j in index.within(p, eps) {
            if j > i {
                uf.union(i as u32, j as u32);
            }
        }
    }
    (0..points.len() as u32).filter(|&v| uf.find(v) == v).count()
}

pub fn rips_betti1(points: &[Vec<f64>], eps: f64, cap: usize) -> Result<usize, TopoError> {
    Ok(RipsHomology::compute(points, eps, cap)?.beta1)
}

/// `beta0` from the rank of the edge boundary matrix, independent of the
/// union-find path.
pub fn beta0_by_reduction(complex: &RipsComplex) -> usize {
    let mut pivot: Vec<Option<Vec<u32>>> = vec![None; complex.n_vertices];
    let mut rank = 0;
    for &[a, b] in &complex.edges {
        let mut col = vec![a, b];
        while let Some(&low) = col.last() {
            match &pivot[low as usize] {
                Some(p) => col = symdiff(&col, p),
                None => {
                    pivot[low as usize] = Some(col);
                    rank += 1;
                    break;
                }
            }
        }
    }
    complex.n_vertices - rank
}

/// Builds the complex at `eps` and tests whether `lp` bounds.
pub fn loop_is_boundary(points: &[Vec<f64>], lp: &LoopClass, eps: f64, cap: usize) -> Result<bool, TopoError> {
    RipsHomology::compute(points, eps, cap)?.loop_is_boundary(lp)
}
