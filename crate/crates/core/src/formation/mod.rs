//! Typical-set formation of `ρ^⊗n` from singlets, with its cost accounting
//! and fidelity chain.

mod dilution;
mod protocol;
mod typical;

pub use dilution::{
    budget_capacity, dilute_pure_state, dilution_fidelity_analytic, Dilution,
    DILUTION_DIMENSION_CAP,
};
pub use protocol::{
    formation_protocol, truncated_state, verify_fid_bounds, DilutionEntry, DilutionPlan, Fid1Check,
    Fid2Check, FidBoundsReport, FormationArtifacts, FormationMode, FormationOutcome,
    FormationResult, FormationSettings, Normalization, TriangleCheck, TypicalSummary, ENSEMBLE_TOL,
    EXACT_DIMENSION_CAP, FID_TOL, TRIANGLE_TOL,
};
pub use typical::{
    typical_set, typical_types, TypeClass, TypicalSequence, TypicalSet, Window, ENUMERATION_CAP,
};

#[cfg(test)]
mod tests;
