//! Deficiency indices: the recurrence oracle, its ℓ² tail probe, the
//! Floquet discriminant of the limiting period-2 matrix and the verdict
//! pipeline combining them with the self-adjointness tests.
//!
//! Numerical answers from the oracle are advisory and labelled as such.

mod floquet;
mod recurrence;
mod verdict;

pub use floquet::{floquet_discriminant, FloquetResult};
pub use recurrence::{
    l2_probe, l2_probe_gauged, solve_recurrence, Envelope, L2Config, L2Status, L2Verdict,
    RecurrenceSolution,
};
pub use verdict::{
    analyze, deficiency_verdict, oracle_check, CriterionVerdict, DeficiencyAnalysis,
    DeficiencyConfig, FloquetPath, OracleCheck, OracleMode, FLOQUET_BAND, SUM_D2,
};
