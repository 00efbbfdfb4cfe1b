//! Entanglement of formation: closed form, ensemble search, continuity and
//! LOCC monotonicity.

mod closed_form;
mod continuity;
mod locc;
mod optimize;

pub use closed_form::{
    concurrence, concurrence_spectrum, eof_from_concurrence, eof_two_qubit_closed_form,
};
pub use continuity::{continuity_bound, nielsen_bound, perturb, ContinuityCheck};
pub use locc::{
    apply_locc, check_monotonicity, sample_entanglement_breaking, sample_locc, EofMethod,
    LoccChannel, LoccKind, LoccSampleKind, MonotonicityReport, ProductElement, CLOSED_FORM_TOL,
    COMPLETENESS_TOL, OPTIMIZER_TOL,
};
pub use optimize::{
    default_ensemble_size, eof_optimize, eof_optimize_seeded, EofResult, OptimizerSettings,
    WARM_START_TOL,
};

#[cfg(test)]
mod tests;
