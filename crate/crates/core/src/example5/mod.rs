//! A map `R^5 -> R^3` whose fiber over the end of the arc `(0, 0, u)`,
//! `u ∈ [0, 1]`, is atypical although all fibers along the arc are
//! cylinders with identical homology.

mod bundle;
mod claims;

pub use bundle::{build_example, BundleError, Example5Bundle, ReferenceValues, G_MUTANT, VARS3, VARS5};
pub use claims::{
    case_ii_check, claim1_gcd_checks, claim1_system, verify_all, verify_bundle, verify_claim1, verify_claim4,
    verify_claims23, verify_morse_points, BettiRow, CaseIiCheck, Candidate, Claim1Result, Claim4Result, ClaimConfig, ClaimReport,
    ClaimStatus, Claims23Result, LoopRow, MorseRow, ReducedFamily, TopologyRow,
};
