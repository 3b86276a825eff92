use serde::{Deserialize, Serialize};

use super::loops::LoopTrace;
use super::scan::{ArcReport, ComponentSummary};
use crate::spatial::dist;

pub const REASON_BETA0: &str = "β₀ jump";
pub const REASON_BETA1: &str = "β₁ jump";
pub const REASON_VANISHING: &str = "vanishing component";
pub const REASON_LOOP: &str = "loop-class change (π₂ proxy)";

/// A component chain that shrinks toward `s = 0` and has no counterpart in
/// the fiber at `s = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VanishingFlag {
    /// `(record index, component index)` along the chain.
    pub chain: Vec<(usize, usize)>,
    pub sizes: Vec<usize>,
    pub diameters: Vec<f64>,
    pub last_centroid: Vec<f64>,
}

fn hausdorff(a: &ComponentSummary, b: &ComponentSummary) -> f64 {
    let directed = |x: &[Vec<f64>], y: &[Vec<f64>]| {
        x.iter().map(|p| y.iter().map(|q| dist(p, q)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    directed(&a.representatives, &b.representatives).max(directed(&b.representatives, &a.representatives))
}

/// Flags components that vanish at the end of the schedule.
///
/// Components at adjacent records are matched by Hausdorff distance of
/// their representative sets (below `match_tol`, default a tenth of the
/// larger sampling radius). A chain is flagged when it reaches the record
/// just before the last one with point counts and diameters never growing
/// by more than 5% between steps and both ending below where they started,
/// and nothing in the last record matches it. A component that shrinks to a
/// point which the sampler still finds at `s = 0` is not flagged; one the
/// sampler misses is.
pub fn detect_vanishing_components(report: &ArcReport, match_tol: Option<f64>) -> Vec<VanishingFlag> {
    let recs = &report.records;
    if recs.len() < 2 {
        return Vec::new();
    }
    let last = recs.len() - 1;
    if recs[last].error.is_some() {
        return Vec::new();
    }
    let tol_for = |i: usize, j: usize| match_tol.unwrap_or(recs[i].radius.max(recs[j].radius) / 10.0);
    let best_match = |i: usize, c: usize| -> Option<usize> {
        let j = i + 1;
        if recs[i].error.is_some() || recs[j].error.is_some() {
            return None;
        }
        let tol = tol_for(i, j);
        recs[j]
            .components
            .iter()
            .enumerate()
            .map(|(k, d)| (k, hausdorff(&recs[i].components[c], d)))
            .filter(|&(_, h)| h <= tol)
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|(k, _)| k)
    };
    // chains start at components nothing earlier maps onto
    let mut targeted = vec![Vec::new(); recs.len()];
    for i in 0..last {
        let mut hit = vec![false; recs[i + 1].components.len()];
        for c in 0..recs[i].components.len() {
            if let Some(k) = best_match(i, c) {
                hit[k] = true;
            }
        }
        targeted[i + 1] = hit;
    }
    let mut flags = Vec::new();
    for i in 0..last {
        for c in 0..recs[i].components.len() {
            if i > 0 && targeted[i].get(c).copied().unwrap_or(false) {
                continue;
            }
            let mut chain = vec![(i, c)];
            let (mut ri, mut ci) = (i, c);
            while ri < last {
                match best_match(ri, ci) {
                    Some(k) => {
                        ri += 1;
                        ci = k;
                        chain.push((ri, ci));
                    }
                    None => break,
                }
            }
            if ri != last - 1 || chain.len() < 2 {
                continue;
            }
            let comps: Vec<&ComponentSummary> = chain.iter().map(|&(r, k)| &recs[r].components[k]).collect();
            let sizes: Vec<usize> = comps.iter().map(|c| c.size).collect();
            let diameters: Vec<f64> = comps.iter().map(|c| c.diameter).collect();
            let shrinking = sizes.windows(2).all(|w| w[1] as f64 <= w[0] as f64 * 1.05)
                && sizes[sizes.len() - 1] < sizes[0]
                && diameters.windows(2).all(|w| w[1] <= w[0] * 1.05)
                && diameters[diameters.len() - 1] < diameters[0];
            if shrinking {
                flags.push(VanishingFlag { chain, sizes, diameters, last_centroid: comps[comps.len() - 1].centroid.clone() });
            }
        }
    }
    flags
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictKind {
    #[serde(rename = "ATYPICAL")]
    Atypical,
    #[serde(rename = "NO-EVIDENCE")]
    NoEvidence,
}

impl std::fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            VerdictKind::Atypical => "ATYPICAL",
            VerdictKind::NoEvidence => "NO-EVIDENCE",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub verdict: VerdictKind,
    pub reasons: Vec<String>,
    pub note: String,
}

impl Verdict {
    pub fn from_reasons(mut reasons: Vec<String>) -> Self {
        reasons.sort();
        reasons.dedup();
        let verdict = if reasons.is_empty() { VerdictKind::NoEvidence } else { VerdictKind::Atypical };
        Verdict {
            verdict,
            reasons,
            note: "numerical evidence from sampled fibers, not a proof".into(),
        }
    }

    /// One-line JSON for scripts.
    pub fn line(&self) -> String {
        serde_json::to_string(&serde_json::json!({
            "verdict": self.verdict,
            "reasons": self.reasons,
            "evidence_only": true,
        }))
        .expect("verdict serializes")
    }
}

/// Loop verdict at the last schedule entry differs from the nearest earlier
/// entry that has one.
fn loop_class_changes(trace: &LoopTrace) -> bool {
    let Some((end, rest)) = trace.entries.split_last() else { return false };
    let (true, Some(b_end)) = (end.s == 0.0, end.is_boundary) else { return false };
    rest.iter().rev().find_map(|e| e.is_boundary).is_some_and(|b| b != b_end)
}

pub fn atypicality_verdict(report: &ArcReport, trace: Option<&LoopTrace>) -> Verdict {
    let mut reasons = Vec::new();
    if report.jumps.iter().any(|j| j.invariant == "beta0") {
        reasons.push(REASON_BETA0.to_string());
    }
    if report.jumps.iter().any(|j| j.invariant == "beta1") {
        reasons.push(REASON_BETA1.to_string());
    }
    if !report.vanishing.is_empty() {
        reasons.push(REASON_VANISHING.to_string());
    }
    if trace.is_some_and(loop_class_changes) {
        reasons.push(REASON_LOOP.to_string());
    }
    Verdict::from_reasons(reasons)
}
