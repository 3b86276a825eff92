use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use fiber_atlas::arcscan::{
    analyze_points, atypicality_verdict, scan_arc, track_loop_along_arc, MapAlongArc, RadiusRule, ScanConfig,
};
use fiber_atlas::example5::{verify_all, ClaimStatus};
use fiber_atlas::topo::{RipsHomology, DEFAULT_SCALE_FACTOR, DEFAULT_SIMPLEX_CAP};
use fiber_atlas::varnum::{constrained_critical_points, sample_fiber, CriticalConfig, SampleConfig};
use fiber_atlas::{parse_polynomial, PolynomialMap, RestrictedFunction};
use serde::Serialize;

use crate::config::{Eps, RunConfig};
use crate::error::CliError;

/// A finished command: the report, a one-line summary for stdout when the
/// report goes to a file, and the exit code.
pub struct Outcome {
    pub report: String,
    pub summary: String,
    pub code: i32,
}

#[derive(Serialize)]
struct Report<'a, R: Serialize, T: Serialize> {
    tool: &'static str,
    tool_version: &'static str,
    command: &'a str,
    seed: Option<u64>,
    config: &'a RunConfig,
    /// The library config actually used, defaults filled in.
    resolved: R,
    result: T,
}

fn report<R: Serialize, T: Serialize>(command: &str, cfg: &RunConfig, resolved: R, result: T) -> String {
    serde_json::to_string_pretty(&Report {
        tool: "fiber-atlas",
        tool_version: env!("CARGO_PKG_VERSION"),
        command,
        seed: cfg.seed,
        config: cfg,
        resolved,
        result,
    })
    .expect("report serializes")
}

pub fn verify_example(cfg: &RunConfig, out: Option<&Path>) -> Result<Outcome, CliError> {
    let claim_cfg = cfg.claim_config(cfg.require_seed()?);
    let rep = verify_all(&claim_cfg, out);
    let code = if rep.overall == ClaimStatus::Pass { 0 } else { 1 };
    let summary = serde_json::json!({
        "overall": rep.overall,
        "verdict": rep.verdict.verdict,
        "homology_constant": rep.homology_constant,
        "summary": rep.summary,
    })
    .to_string();
    Ok(Outcome { report: report("verify-example", cfg, &claim_cfg, &rep), summary, code })
}

fn scan_config(cfg: &RunConfig, seed: u64) -> ScanConfig {
    let d = ScanConfig::default();
    let radius = cfg.scan.radius.unwrap_or(8.0);
    let mut sample = d.sample.clone();
    if let Some(c) = cfg.scan.count {
        sample.count = c;
    }
    if cfg.scan.spacing.is_some() {
        sample.spacing = cfg.scan.spacing;
    }
    ScanConfig {
        radius: match &cfg.scan.milnor_grid {
            Some(grid) => RadiusRule::MilnorFloor { floor: radius, grid: grid.clone() },
            None => RadiusRule::Fixed { radius },
        },
        sample,
        scale_factor: cfg.scan.scale_factor.unwrap_or(d.scale_factor),
        simplex_cap: cfg.simplex_cap.unwrap_or(d.simplex_cap),
        seed,
        emit_persistence: cfg.emit_persistence(),
        match_tol: cfg.scan.match_tol,
        ..d
    }
}

pub fn scan(cfg: &RunConfig, out: Option<&Path>) -> Result<Outcome, CliError> {
    let seed = cfg.require_seed()?;
    let map = cfg.build_map()?;
    let arc = cfg.build_arc()?;
    let cut = cfg.build_cut()?;
    let scan_cfg = scan_config(cfg, seed);
    let rep = scan_arc(&map, &arc, &scan_cfg, out)?;
    let trace = match &cut {
        Some(c) => {
            let family = MapAlongArc::new(map.clone(), arc.clone())?;
            Some(track_loop_along_arc(&family, &arc.schedule, c, &scan_cfg)?)
        }
        None => None,
    };
    let verdict = atypicality_verdict(&rep, trace.as_ref());
    let summary = verdict.line();
    let result = serde_json::json!({
        "arc": arc,
        "scan": rep,
        "loop_trace": trace,
        "verdict": verdict,
        "verdict_line": summary,
    });
    Ok(Outcome { report: report("scan-arc", cfg, &scan_cfg, result), summary, code: 0 })
}

pub fn critical_points(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let seed = cfg.require_seed()?;
    let c = &cfg.critical;
    let vars = cfg.variables()?;
    let objective = c.objective.as_deref().ok_or_else(|| CliError::usage("no objective: pass --objective"))?;
    let objective = parse_polynomial(objective, &vars)?;
    let eqs: Vec<&str> = c.equalities.iter().map(String::as_str).collect();
    let equalities = if eqs.is_empty() { PolynomialMap::with_vars(&vars, Vec::new())? } else { PolynomialMap::parse(&vars, &eqs)? };
    let mut rf = RestrictedFunction::new(objective, equalities)?;
    for g in &c.inequalities {
        rf = rf.with_inequality(parse_polynomial(g, &vars)?)?;
    }
    let (Some(lo), Some(hi)) = (&c.lo, &c.hi) else {
        return Err(CliError::usage("the search box is required: pass --lo and --hi"));
    };
    let d = CriticalConfig::default();
    let crit_cfg = CriticalConfig {
        multistart_n: c.multistart.unwrap_or(d.multistart_n),
        seed,
        tol: c.tol.unwrap_or(d.tol),
        chart: c.chart.clone(),
        ..d
    };
    let search = constrained_critical_points(&rf, lo, hi, &crit_cfg)?;
    let summary = serde_json::json!({
        "critical_points": search.points.len(),
        "morse_indices": search.points.iter().map(|p| p.morse_index).collect::<Vec<_>>(),
    })
    .to_string();
    Ok(Outcome { report: report("critical-points", cfg, &crit_cfg, &search), summary, code: 0 })
}

pub fn fiber_sample(cfg: &RunConfig, out: Option<&Path>) -> Result<Outcome, CliError> {
    let seed = cfg.require_seed()?;
    let map = cfg.build_map()?;
    let s = &cfg.sample;
    let target = s.target.as_ref().ok_or_else(|| CliError::usage("no target: pass --target"))?;
    let radius = s.radius.unwrap_or(8.0);
    let d = SampleConfig::default();
    let sample_cfg = SampleConfig { count: s.count.unwrap_or(d.count), spacing: s.spacing.or(d.spacing), ..d };
    let sample = sample_fiber(&map, target, radius, seed, &sample_cfg)?;
    if let Some(dir) = out {
        sample.write_csv(BufWriter::new(File::create(dir.join("fiber.csv"))?))?;
    }
    let summary = serde_json::json!({ "n_points": sample.points.len(), "spacing": sample.spacing }).to_string();
    Ok(Outcome { report: report("fiber-sample", cfg, &sample_cfg, &sample), summary, code: 0 })
}

/// Reads a numeric CSV. A first row that does not parse as numbers is a
/// header; columns are picked by name from it, and a `residual` column is
/// dropped unless asked for.
pub fn read_points(path: &Path, columns: &[String]) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = rdr.records();
    let bad = |e: csv::Error| CliError::input(format!("{}: {e}", path.display()));
    let Some(first) = rows.next().transpose().map_err(bad)? else {
        return Err(CliError::input(format!("{} is empty", path.display())));
    };
    let numeric = |r: &csv::StringRecord| r.iter().map(str::parse::<f64>).collect::<Result<Vec<f64>, _>>();
    let (header, mut points): (Vec<String>, Vec<Vec<f64>>) = match numeric(&first) {
        Ok(p) => ((0..p.len()).map(|i| format!("c{i}")).collect(), vec![p]),
        Err(_) => (first.iter().map(String::from).collect(), Vec::new()),
    };
    for (line, r) in rows.enumerate() {
        let r = r.map_err(bad)?;
        let p = numeric(&r).map_err(|_| CliError::input(format!("{}: non-numeric row {}", path.display(), line + 2)))?;
        points.push(p);
    }
    let keep: Vec<usize> = if columns.is_empty() {
        (0..header.len()).filter(|&i| header[i] != "residual").collect()
    } else {
        columns
            .iter()
            .map(|c| header.iter().position(|h| h == c).ok_or_else(|| CliError::input(format!("no column `{c}`"))))
            .collect::<Result<_, _>>()?
    };
    let points = points
        .into_iter()
        .map(|p| keep.iter().map(|&i| p.get(i).copied()).collect::<Option<Vec<f64>>>())
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| CliError::input(format!("{}: ragged rows", path.display())))?;
    if points.iter().flatten().any(|x| !x.is_finite()) {
        return Err(CliError::input(format!("{}: non-finite coordinate", path.display())));
    }
    Ok((keep.iter().map(|&i| header[i].clone()).collect(), points))
}

pub fn betti(cfg: &RunConfig, out: Option<&Path>) -> Result<Outcome, CliError> {
    let b = &cfg.betti;
    let input = b.input.as_ref().ok_or_else(|| CliError::usage("no point cloud: pass --in"))?;
    let (columns, points) = read_points(input, &b.columns)?;
    if points.is_empty() {
        return Err(CliError::input(format!("{} has no points", input.display())));
    }
    let cap = cfg.simplex_cap.unwrap_or(DEFAULT_SIMPLEX_CAP);
    let factor = b.scale_factor.unwrap_or(DEFAULT_SCALE_FACTOR);
    let (h, subsampled, rule) = match b.eps.unwrap_or(Eps::Auto) {
        Eps::Auto => {
            let (h, idx) = analyze_points(&points, factor, cap)?;
            (h, idx.map(|i| i.len()), format!("{factor} x p90 nearest-neighbour distance"))
        }
        Eps::Value(e) => (RipsHomology::compute(&points, e, cap)?, None, "fixed".to_string()),
    };
    let summary = h.summary(&rule, cfg.emit_persistence());
    if let (Some(dir), true) = (out, cfg.emit_persistence()) {
        summary.write_pairs_csv(BufWriter::new(File::create(dir.join("persistence.csv"))?)).map_err(|e| CliError::input(e.to_string()))?;
    }
    let line = serde_json::json!({ "beta0": summary.beta0, "beta1": summary.beta1, "eps": summary.eps }).to_string();
    let result = serde_json::json!({
        "input": input,
        "columns": columns,
        "n_points": points.len(),
        "subsampled_to": subsampled,
        "homology": summary,
    });
    Ok(Outcome { report: report("betti", cfg, serde_json::Value::Null, result), summary: line, code: 0 })
}
