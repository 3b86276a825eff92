use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use petgraph::unionfind::UnionFind;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::verdict::{detect_vanishing_components, VanishingFlag};
use super::{index_seed, ArcScanError, FiberFamily, MapAlongArc};
use crate::arc::Arc;
use crate::poly::PolynomialMap;
use crate::spatial::dist;
use crate::topo::{
    euler_estimate, farthest_point_subsample, select_scale, PersistenceSummary, RipsHomology, TopoError,
    DEFAULT_SCALE_FACTOR, DEFAULT_SIMPLEX_CAP,
};
use crate::varnum::{estimate_milnor_radius, sample_fiber, FiberSample, MilnorConfig, SampleConfig, SampleStats, VarnumError};

/// How the sampling ball is chosen per fiber.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum RadiusRule {
    Fixed { radius: f64 },
    /// `max(floor, Milnor estimate on grid)`; an inconclusive estimate falls
    /// back to the floor and is noted on the record.
    MilnorFloor { floor: f64, grid: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanConfig {
    pub radius: RadiusRule,
    pub sample: SampleConfig,
    pub milnor: MilnorConfig,
    pub scale_factor: f64,
    pub simplex_cap: usize,
    pub seed: u64,
    pub emit_persistence: bool,
    /// Hausdorff distance under which components at adjacent parameters are
    /// matched; `None` means a tenth of the larger radius.
    pub match_tol: Option<f64>,
    /// Farthest-point representatives kept per component.
    pub representatives: usize,
    /// Cut-locus samples are spaced `eps / loop_spacing_factor` apart.
    pub loop_spacing_factor: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            radius: RadiusRule::Fixed { radius: 8.0 },
            sample: SampleConfig { count: 100_000, ..SampleConfig::default() },
            milnor: MilnorConfig::default(),
            scale_factor: DEFAULT_SCALE_FACTOR,
            simplex_cap: DEFAULT_SIMPLEX_CAP,
            seed: 0,
            emit_persistence: false,
            match_tol: None,
            representatives: 32,
            loop_spacing_factor: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub size: usize,
    pub centroid: Vec<f64>,
    /// Diameter of the representative set (a lower bound for the component).
    pub diameter: f64,
    pub representatives: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberRecord {
    pub index: usize,
    pub s: f64,
    pub target: Vec<f64>,
    pub seed: u64,
    pub radius: f64,
    pub milnor_radius: Option<f64>,
    pub radius_note: Option<String>,
    pub spacing: Option<f64>,
    pub n_points: usize,
    pub sample_stats: Option<SampleStats>,
    /// Set when the complex exceeded the cap and the cloud was thinned.
    pub subsampled_to: Option<usize>,
    pub homology: Option<PersistenceSummary>,
    pub chi: Option<i64>,
    pub components: Vec<ComponentSummary>,
    pub error: Option<String>,
}

impl FiberRecord {
    pub fn betti(&self) -> Option<(usize, usize)> {
        self.homology.as_ref().map(|h| (h.beta0, h.beta1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub invariant: String,
    pub from_index: usize,
    pub to_index: usize,
    pub s_from: f64,
    pub s_to: f64,
    pub before: usize,
    pub after: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcReport {
    pub variables: Vec<String>,
    pub schedule: Vec<f64>,
    pub seed: u64,
    pub records: Vec<FiberRecord>,
    pub jumps: Vec<Jump>,
    pub vanishing: Vec<VanishingFlag>,
}

impl ArcReport {
    /// `(s, beta0, beta1, chi)` for every record that produced homology.
    pub fn betti_table(&self) -> Vec<(f64, usize, usize, i64)> {
        self.records
            .iter()
            .filter_map(|r| r.homology.as_ref().map(|h| (r.s, h.beta0, h.beta1, euler_estimate(h))))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Rips homology at `c x p90` nearest-neighbour spacing. When the complex
/// exceeds `cap`, the cloud is thinned by farthest-point subsampling (and
/// the scale re-selected) until it fits. A one-point cloud (a fiber that
/// collapsed to a point) is analyzed at unit scale.
pub fn analyze_points(
    points: &[Vec<f64>],
    scale_factor: f64,
    cap: usize,
) -> Result<(RipsHomology, Option<Vec<usize>>), TopoError> {
    if points.len() == 1 {
        return Ok((RipsHomology::compute(points, 1.0, cap)?, None));
    }
    let eps = select_scale(points, scale_factor)?;
    match RipsHomology::compute(points, eps, cap) {
        Ok(h) => return Ok((h, None)),
        Err(TopoError::ComplexTooLarge { .. }) => {}
        Err(e) => return Err(e),
    }
    let mut k = points.len();
    loop {
        k = k * 3 / 4;
        if k < 2 {
            return Err(TopoError::ComplexTooLarge { cap });
        }
        let idx = farthest_point_subsample(points, k);
        let sub: Vec<Vec<f64>> = idx.iter().map(|&i| points[i].clone()).collect();
        let eps = select_scale(&sub, scale_factor)?;
        match RipsHomology::compute(&sub, eps, cap) {
            Ok(h) => return Ok((h, Some(idx))),
            Err(TopoError::ComplexTooLarge { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
}

fn components(points: &[Vec<f64>], h: &RipsHomology, reps: usize) -> Vec<ComponentSummary> {
    let n = points.len();
    let mut uf = UnionFind::<u32>::new(n);
    for &[a, b] in &h.complex.edges {
        uf.union(a, b);
    }
    let labels = uf.into_labeling();
    let mut groups: std::collections::BTreeMap<u32, Vec<usize>> = Default::default();
    for (i, &l) in labels.iter().enumerate() {
        groups.entry(l).or_default().push(i);
    }
    let mut out: Vec<ComponentSummary> = groups
        .into_values()
        .map(|members| {
            let pts: Vec<Vec<f64>> = members.iter().map(|&i| points[i].clone()).collect();
            let d = pts[0].len();
            let mut centroid = vec![0.0; d];
            for p in &pts {
                for (c, x) in centroid.iter_mut().zip(p) {
                    *c += x;
                }
            }
            centroid.iter_mut().for_each(|c| *c /= pts.len() as f64);
            let representatives: Vec<Vec<f64>> =
                farthest_point_subsample(&pts, reps.max(1)).into_iter().map(|i| pts[i].clone()).collect();
            let mut diameter: f64 = 0.0;
            for i in 0..representatives.len() {
                for j in 0..i {
                    diameter = diameter.max(dist(&representatives[i], &representatives[j]));
                }
            }
            ComponentSummary { size: pts.len(), centroid, diameter, representatives }
        })
        .collect();
    out.sort_by(|a, b| {
        b.size.cmp(&a.size).then_with(|| {
            a.centroid.iter().zip(&b.centroid).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    out
}

pub(crate) fn resolve_radius(
    rule: &RadiusRule,
    map: &PolynomialMap,
    level: &[f64],
    milnor: &MilnorConfig,
    seed: u64,
) -> Result<(f64, Option<f64>, Option<String>), VarnumError> {
    match rule {
        RadiusRule::Fixed { radius } => Ok((*radius, None, None)),
        RadiusRule::MilnorFloor { floor, grid } => {
            let cfg = MilnorConfig { seed, ..milnor.clone() };
            match estimate_milnor_radius(map, level, grid, &cfg) {
                Ok(est) => Ok((floor.max(est.radius), Some(est.radius), None)),
                Err(VarnumError::InconclusiveMargin { last_radius, .. }) => Ok((
                    *floor,
                    None,
                    Some(format!("Milnor estimate inconclusive up to {last_radius}; using floor")),
                )),
                Err(e) => Err(e),
            }
        }
    }
}

struct Scanned {
    record: FiberRecord,
    sample: Option<FiberSample>,
}

fn scan_one(family: &dyn FiberFamily, index: usize, s: f64, cfg: &ScanConfig) -> Scanned {
    let seed = index_seed(cfg.seed, index);
    let mut record = FiberRecord {
        index,
        s,
        target: Vec::new(),
        seed,
        radius: 0.0,
        milnor_radius: None,
        radius_note: None,
        spacing: None,
        n_points: 0,
        sample_stats: None,
        subsampled_to: None,
        homology: None,
        chi: None,
        components: Vec::new(),
        error: None,
    };
    let fiber = match family.fiber(s) {
        Ok(f) => f,
        Err(e) => {
            record.error = Some(e.to_string());
            return Scanned { record, sample: None };
        }
    };
    record.target = fiber.target.clone();
    let (radius, milnor, note) = match resolve_radius(&cfg.radius, &fiber.map, &fiber.level, &cfg.milnor, seed) {
        Ok(r) => r,
        Err(e) => {
            record.error = Some(e.to_string());
            return Scanned { record, sample: None };
        }
    };
    record.radius = radius;
    record.milnor_radius = milnor;
    record.radius_note = note;
    let sample = match sample_fiber(&fiber.map, &fiber.level, radius, seed, &cfg.sample) {
        Ok(s) => s,
        Err(e) => {
            record.error = Some(e.to_string());
            return Scanned { record, sample: None };
        }
    };
    record.spacing = Some(sample.spacing);
    record.n_points = sample.len();
    record.sample_stats = Some(sample.stats.clone());
    match analyze_points(&sample.points, cfg.scale_factor, cfg.simplex_cap) {
        Ok((h, sub)) => {
            let pts: Vec<Vec<f64>> = match &sub {
                Some(idx) => idx.iter().map(|&i| sample.points[i].clone()).collect(),
                None => sample.points.clone(),
            };
            record.subsampled_to = sub.map(|idx| idx.len());
            record.components = components(&pts, &h, cfg.representatives);
            let rule = format!("{} x p90 nearest-neighbour distance", cfg.scale_factor);
            let summary = h.summary(&rule, cfg.emit_persistence);
            record.chi = Some(euler_estimate(&summary));
            record.homology = Some(summary);
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    Scanned { record, sample: Some(sample) }
}

fn jumps(records: &[FiberRecord]) -> Vec<Jump> {
    let mut out = Vec::new();
    for w in records.windows(2) {
        let (Some(a), Some(b)) = (w[0].betti(), w[1].betti()) else { continue };
        for (name, x, y) in [("beta0", a.0, b.0), ("beta1", a.1, b.1)] {
            if x != y {
                out.push(Jump {
                    invariant: name.into(),
                    from_index: w[0].index,
                    to_index: w[1].index,
                    s_from: w[0].s,
                    s_to: w[1].s,
                    before: x,
                    after: y,
                });
            }
        }
    }
    out
}

/// Samples and analyzes every fiber on `schedule`. Per-fiber failures are
/// recorded on the fiber's record. With `csv_dir`, writes
/// `fiber_NNN.csv` (and `persistence_NNN.csv` when persistence is emitted)
/// per schedule index.
pub fn scan_family(
    family: &dyn FiberFamily,
    schedule: &[f64],
    cfg: &ScanConfig,
    csv_dir: Option<&Path>,
) -> Result<ArcReport, ArcScanError> {
    if schedule.is_empty() {
        return Err(ArcScanError::InvalidInput("empty schedule".into()));
    }
    let scanned: Vec<Scanned> =
        schedule.par_iter().enumerate().map(|(i, &s)| scan_one(family, i, s, cfg)).collect();
    if let Some(dir) = csv_dir {
        std::fs::create_dir_all(dir)?;
        for sc in &scanned {
            let i = sc.record.index;
            if let Some(sample) = &sc.sample {
                sample.write_csv(BufWriter::new(File::create(dir.join(format!("fiber_{i:03}.csv")))?))?;
            }
            if let Some(h) = sc.record.homology.as_ref().filter(|h| h.pairs.is_some()) {
                h.write_pairs_csv(BufWriter::new(File::create(dir.join(format!("persistence_{i:03}.csv")))?))?;
            }
        }
    }
    let records: Vec<FiberRecord> = scanned.into_iter().map(|s| s.record).collect();
    let mut report = ArcReport {
        variables: family.variables(),
        schedule: schedule.to_vec(),
        seed: cfg.seed,
        jumps: jumps(&records),
        records,
        vanishing: Vec::new(),
    };
    report.vanishing = detect_vanishing_components(&report, cfg.match_tol);
    Ok(report)
}

/// [`scan_family`] for `F^{-1}(gamma(s))` over the arc's own schedule.
pub fn scan_arc(map: &PolynomialMap, arc: &Arc, cfg: &ScanConfig, csv_dir: Option<&Path>) -> Result<ArcReport, ArcScanError> {
    let family = MapAlongArc::new(map.clone(), arc.clone())?;
    scan_family(&family, &arc.schedule, cfg, csv_dir)
}
