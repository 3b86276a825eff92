//! The run configuration: a TOML file of flat sections, with command-line
//! flags written over it before validation.

use std::path::{Path, PathBuf};

use fiber_atlas::arc::{uniform_schedule, Arc};
use fiber_atlas::example5::ClaimConfig;
use fiber_atlas::{parse_polynomial, PolynomialMap};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    /// Output directory for the report, CSVs and timing sidecar.
    pub out: Option<PathBuf>,
    pub simplex_cap: Option<usize>,
    pub emit_persistence: Option<bool>,
    pub map: MapSection,
    pub arc: ArcSection,
    pub scan: ScanSection,
    #[serde(rename = "loop")]
    pub loop_cut: LoopSection,
    pub critical: CriticalSection,
    pub sample: SampleSection,
    pub betti: BettiSection,
    /// Overrides for the built-in example, nested as in its own config.
    pub example: Option<ClaimConfig>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapSection {
    pub variables: Vec<String>,
    pub components: Vec<String>,
    /// One component per line; blank lines and `#` comments are skipped.
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArcSection {
    /// Polyline vertices; the first sits at `s = 0`.
    pub points: Option<Vec<Vec<f64>>>,
    /// Name of the arc parameter for polynomial arcs.
    pub parameter: Option<String>,
    pub components: Option<Vec<String>>,
    pub steps: Option<usize>,
    pub schedule: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub radius: Option<f64>,
    /// Switches to `max(radius, Milnor estimate)` over these shell radii.
    pub milnor_grid: Option<Vec<f64>>,
    pub count: Option<usize>,
    pub spacing: Option<f64>,
    pub scale_factor: Option<f64>,
    pub match_tol: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopSection {
    /// Extra equations cutting each fiber down to a closed curve.
    pub cut: Vec<String>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriticalSection {
    pub objective: Option<String>,
    pub equalities: Vec<String>,
    pub inequalities: Vec<String>,
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
    pub multistart: Option<usize>,
    pub tol: Option<f64>,
    pub chart: Option<Vec<String>>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSection {
    pub target: Option<Vec<f64>>,
    pub radius: Option<f64>,
    pub count: Option<usize>,
    pub spacing: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BettiSection {
    pub input: Option<PathBuf>,
    pub eps: Option<Eps>,
    pub scale_factor: Option<f64>,
    /// Columns to read; all but `residual` when empty.
    pub columns: Vec<String>,
}

/// `"auto"` or a fixed Rips scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Eps {
    Auto,
    Value(f64),
}

impl Serialize for Eps {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Eps::Auto => s.serialize_str("auto"),
            Eps::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Eps {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Eps::Value(v)),
            Raw::Word(w) => w.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl std::str::FromStr for Eps {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(Eps::Auto);
        }
        s.parse::<f64>().map(Eps::Value).map_err(|_| format!("expected \"auto\" or a number, got \"{s}\""))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
    }

    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| CliError::usage("a seed is required: pass --seed or set `seed` in the config"))
    }

    pub fn emit_persistence(&self) -> bool {
        self.emit_persistence.unwrap_or(false)
    }

    pub fn variables(&self) -> Result<Vec<String>, CliError> {
        if self.map.variables.is_empty() {
            return Err(CliError::usage("no variables: pass --vars or set map.variables"));
        }
        Ok(self.map.variables.clone())
    }

    pub fn build_map(&self) -> Result<PolynomialMap, CliError> {
        let vars = self.variables()?;
        let exprs: Vec<String> = match (&self.map.file, self.map.components.is_empty()) {
            (Some(_), false) => return Err(CliError::usage("give map components inline or as a file, not both")),
            (Some(f), true) => std::fs::read_to_string(f)
                .map_err(|e| CliError::input(format!("cannot read map file {}: {e}", f.display())))?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(String::from)
                .collect(),
            (None, _) => self.map.components.clone(),
        };
        if exprs.is_empty() {
            return Err(CliError::usage("no map components: pass --map or set map.components"));
        }
        let refs: Vec<&str> = exprs.iter().map(String::as_str).collect();
        Ok(PolynomialMap::parse(&vars, &refs)?)
    }

    pub fn build_arc(&self) -> Result<Arc, CliError> {
        let a = &self.arc;
        let arc = match (&a.points, &a.components) {
            (Some(_), Some(_)) => return Err(CliError::usage("an arc is either points or polynomial components")),
            (Some(p), None) => Arc::polyline(p.clone())?,
            (None, Some(c)) => {
                let param = a.parameter.clone().unwrap_or_else(|| "s".into());
                let comps = c.iter().map(|e| parse_polynomial(e, &[param.as_str()])).collect::<Result<Vec<_>, _>>()?;
                Arc::polynomial(comps)?
            }
            (None, None) => return Err(CliError::usage("no arc: pass --from/--to or set arc.points")),
        };
        let schedule = match (&a.schedule, a.steps) {
            (Some(_), Some(_)) => return Err(CliError::usage("set arc.steps or arc.schedule, not both")),
            (Some(s), None) => s.clone(),
            (None, steps) => uniform_schedule(steps.unwrap_or(10)),
        };
        Ok(arc.with_schedule(schedule)?)
    }

    pub fn build_cut(&self) -> Result<Option<PolynomialMap>, CliError> {
        if self.loop_cut.cut.is_empty() {
            return Ok(None);
        }
        let refs: Vec<&str> = self.loop_cut.cut.iter().map(String::as_str).collect();
        Ok(Some(PolynomialMap::parse(&self.variables()?, &refs)?))
    }

    /// Range checks on every numeric field that is set.
    pub fn validate(&self) -> Result<(), CliError> {
        fn pos(name: &str, v: Option<f64>) -> Result<(), CliError> {
            match v {
                Some(x) if !(x > 0.0 && x.is_finite()) => Err(CliError::usage(format!("{name} must be positive, got {x}"))),
                _ => Ok(()),
            }
        }
        fn pos_n(name: &str, v: Option<usize>) -> Result<(), CliError> {
            match v {
                Some(0) => Err(CliError::usage(format!("{name} must be positive"))),
                _ => Ok(()),
            }
        }
        pos_n("simplex_cap", self.simplex_cap)?;
        pos_n("arc.steps", self.arc.steps)?;
        pos("scan.radius", self.scan.radius)?;
        pos_n("scan.count", self.scan.count)?;
        pos("scan.spacing", self.scan.spacing)?;
        pos("scan.scale_factor", self.scan.scale_factor)?;
        pos("scan.match_tol", self.scan.match_tol)?;
        for r in self.scan.milnor_grid.iter().flatten() {
            pos("scan.milnor_grid entries", Some(*r))?;
        }
        pos_n("critical.multistart", self.critical.multistart)?;
        pos("critical.tol", self.critical.tol)?;
        if let (Some(lo), Some(hi)) = (&self.critical.lo, &self.critical.hi) {
            if lo.len() != hi.len() || lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                return Err(CliError::usage("critical.lo must lie strictly below critical.hi in every coordinate"));
            }
        }
        pos("sample.radius", self.sample.radius)?;
        pos_n("sample.count", self.sample.count)?;
        pos("sample.spacing", self.sample.spacing)?;
        pos("betti.scale_factor", self.betti.scale_factor)?;
        if let Some(Eps::Value(e)) = self.betti.eps {
            pos("betti.eps", Some(e))?;
        }
        if let Some(ex) = &self.example {
            pos("example.radius", Some(ex.radius))?;
            pos_n("example.simplex_cap", Some(ex.simplex_cap))?;
        }
        Ok(())
    }

    /// The example's config with the top-level seed, cap and persistence
    /// switch applied.
    pub fn claim_config(&self, seed: u64) -> ClaimConfig {
        let mut c = self.example.clone().unwrap_or_default();
        c.seed = seed;
        if let Some(cap) = self.simplex_cap {
            c.simplex_cap = cap;
        }
        c.emit_persistence |= self.emit_persistence();
        c
    }
}
