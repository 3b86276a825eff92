use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::project::{project_compiled, ProjectConfig};
use super::qmc::Halton;
use super::VarnumError;
use crate::poly::{CompiledMap, PolynomialMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::spatial::{dist, norm, SpatialHash};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SampleConfig {
    /// Maximum number of points kept.
    pub count: usize,
    /// Minimum distance between kept points; `None` means `radius / spacing_divisor`.
    pub spacing: Option<f64>,
    pub spacing_divisor: f64,
    /// Global starts per requested point, capped by `global_starts`.
    pub attempt_multiplier: usize,
    pub global_starts: usize,
    /// Starts projected per parallel batch.
    pub batch: usize,
    /// Candidates tried around each kept point during front growth (0 disables it).
    pub grow_candidates: usize,
    pub project: ProjectConfig,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            count: 2000,
            spacing: None,
            spacing_divisor: 60.0,
            attempt_multiplier: 20,
            global_starts: 16384,
            batch: 4096,
            grow_candidates: 12,
            project: ProjectConfig::default(),
        }
    }
}

impl SampleConfig {
    pub fn spacing_for(&self, radius: f64) -> f64 {
        self.spacing.unwrap_or(radius / self.spacing_divisor)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub attempts: u64,
    pub converged: u64,
    pub outside_ball: u64,
    pub max_iter: u64,
    pub singular: u64,
    pub duplicates: u64,
    pub grow_attempts: u64,
    /// True when front growth ran out of candidates before `count` was reached.
    pub saturated: bool,
}

/// Points on `F^{-1}(t) ∩ B_R`, thinned so no two are closer than `spacing`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberSample {
    pub variables: Vec<String>,
    pub target: Vec<f64>,
    pub radius: f64,
    pub spacing: f64,
    pub tol: f64,
    pub seed: u64,
    pub points: Vec<Vec<f64>>,
    /// Scaled residual of each point.
    pub residuals: Vec<f64>,
    pub stats: SampleStats,
}

impl FiberSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), VarnumError> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = self.variables.clone();
        header.push("residual".into());
        wtr.write_record(&header)?;
        for (p, r) in self.points.iter().zip(&self.residuals) {
            let mut row: Vec<String> = p.iter().map(|v| format!("{v:e}")).collect();
            row.push(format!("{r:e}"));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sample serializes")
    }
}

fn project_one(map: &CompiledMap, target: &[f64], start: &[f64], radius: f64, cfg: &ProjectConfig) -> Outcome {
    match project_compiled(map, target, start, cfg) {
        Ok((x, _)) if norm(&x) <= radius => {
            let r = map.scaled_residual(&x, target);
            Outcome::Point(x, r)
        }
        Ok(_) => Outcome::Outside,
        Err(VarnumError::SingularStep { .. }) => Outcome::Singular,
        Err(_) => Outcome::MaxIter,
    }
}

fn accept(o: Outcome, out: &mut FiberSample, index: &mut SpatialHash, spacing: f64, count: usize) {
    match o {
        Outcome::Skipped => {}
        Outcome::Outside => out.stats.outside_ball += 1,
        Outcome::MaxIter => out.stats.max_iter += 1,
        Outcome::Singular => out.stats.singular += 1,
        Outcome::Point(x, r) => {
            out.stats.converged += 1;
            if out.points.len() >= count {
                return;
            }
            if index.any_within(&x, spacing) {
                out.stats.duplicates += 1;
            } else {
                index.insert(x.clone());
                out.points.push(x);
                out.residuals.push(r);
            }
        }
    }
}

enum Outcome {
    Point(Vec<f64>, f64),
    Outside,
    MaxIter,
    Singular,
    Skipped,
}

/// Samples `F^{-1}(t) ∩ B_R`.
///
/// Shifted-Halton starts from the cube `[-R, R]^m` (those outside the ball
/// are skipped) are projected onto the fiber to find every component; the
/// sample is then grown outward from the kept points until no candidate
/// fits. Projection runs in parallel per batch while acceptance is
/// sequential in candidate order, so the result depends only on
/// `(seed, cfg)`.
pub fn sample_fiber(
    map: &PolynomialMap,
    target: &[f64],
    radius: f64,
    seed: u64,
    cfg: &SampleConfig,
) -> Result<FiberSample, VarnumError> {
    if !(radius > 0.0) {
        return Err(VarnumError::InvalidInput("radius must be positive".into()));
    }
    if target.len() != map.n() {
        return Err(VarnumError::InvalidInput(format!("target must have length {}", map.n())));
    }
    let compiled = CompiledMap::compile(map);
    let m = map.m();
    let spacing = cfg.spacing_for(radius);
    let mut out = FiberSample {
        variables: map.vars().to_vec(),
        target: target.to_vec(),
        radius,
        spacing,
        tol: cfg.project.tol,
        seed,
        points: Vec::new(),
        residuals: Vec::new(),
        stats: SampleStats::default(),
    };
    if cfg.count == 0 {
        return Ok(out);
    }
    let halton = Halton::new(m, seed, 0x5A3F);
    let lo = vec![-radius; m];
    let hi = vec![radius; m];
    let max_attempts = (cfg.attempt_multiplier.max(1) * cfg.count).min(cfg.global_starts.max(1)) as u64;
    let batch = cfg.batch.max(1) as u64;
    let mut index = SpatialHash::new(m, spacing);
    let mut next = 0u64;
    while next < max_attempts && out.points.len() < cfg.count {
        let end = (next + batch).min(max_attempts);
        let outcomes: Vec<Outcome> = (next..end)
            .into_par_iter()
            .map(|i| {
                let start = halton.in_box(i, &lo, &hi);
                if norm(&start) > radius {
                    return Outcome::Skipped;
                }
                project_one(&compiled, target, &start, radius, &cfg.project)
            })
            .collect();
        for o in outcomes {
            if !matches!(o, Outcome::Skipped) {
                out.stats.attempts += 1;
            }
            accept(o, &mut out, &mut index, spacing, cfg.count);
        }
        next = end;
    }

    // Front growth: perturb each kept point by one to two spacings in a
    // random direction and project back.
    if cfg.grow_candidates > 0 && !out.points.is_empty() {
        let local = ProjectConfig { max_step: Some(4.0 * spacing), max_iter: 30, ..cfg.project.clone() };
        let mut cursor = 0usize;
        while cursor < out.points.len() && out.points.len() < cfg.count {
            let stop = (cursor + (cfg.batch / cfg.grow_candidates).max(1)).min(out.points.len());
            let outcomes: Vec<Outcome> = (cursor..stop)
                .into_par_iter()
                .flat_map_iter(|pi| {
                    let p = out.points[pi].clone();
                    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5_0000_0000 ^ (pi as u64).wrapping_mul(0x9E37_79B9));
                    let compiled = &compiled;
                    let local = &local;
                    (0..cfg.grow_candidates).map(move |_| {
                        let dir: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                        let dn = norm(&dir).max(1e-300);
                        let r = spacing * (1.0 + rng.random::<f64>());
                        let start: Vec<f64> = p.iter().zip(&dir).map(|(a, d)| a + r * d / dn).collect();
                        match project_one(compiled, target, &start, radius, local) {
                            Outcome::Point(x, res) if dist(&x, &p) <= 4.0 * spacing => Outcome::Point(x, res),
                            Outcome::Point(..) => Outcome::Skipped,
                            other => other,
                        }
                    })
                })
                .collect();
            for o in outcomes {
                out.stats.grow_attempts += 1;
                accept(o, &mut out, &mut index, spacing, cfg.count);
            }
            cursor = stop;
        }
        out.stats.saturated = out.points.len() < cfg.count;
    }
    if out.points.is_empty() {
        return Err(VarnumError::FiberEmptyWithinBall { attempts: out.stats.attempts });
    }
    Ok(out)
}
