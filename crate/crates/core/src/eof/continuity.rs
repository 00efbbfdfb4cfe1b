//! Continuity of the entanglement of formation in the Bures metric.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::bures_distance;
use crate::qcore::linalg::{hermitian_part, trace, CMatrix};
use crate::qcore::{QuantumState, RandomSource};
use crate::scalar::{creal, eta, log2, Real};

use super::locc::OPTIMIZER_TOL;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityCheck<T: Real> {
    pub distance: T,
    pub dim: usize,
    pub bound: T,
    pub observed_gap: T,
    pub tolerance: T,
    pub holds: bool,
}

/// `5 D log2(dim) + 2 η(D)`.
pub fn nielsen_bound<T: Real>(distance: T, dim: usize) -> T {
    T::lit(5.0) * distance * log2(T::from_usize_lossy(dim)) + T::lit(2.0) * eta(distance)
}

/// Compares `|E_f(ρ) - E_f(ρ')|` against the bound at the Bures distance of
/// the two states. `tolerance` absorbs optimizer error in the supplied
/// values; pass `None` for the default `1e-3`.
pub fn continuity_bound<T: Real>(
    rho: &QuantumState<T>,
    rho_prime: &QuantumState<T>,
    eof_rho: T,
    eof_rho_prime: T,
    tolerance: Option<T>,
) -> Result<ContinuityCheck<T>> {
    if rho.dims() != rho_prime.dims() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} vs {:?}",
            rho.dims(),
            rho_prime.dims()
        )));
    }
    let distance = bures_distance(rho, rho_prime)?;
    let dim = rho.dim();
    let bound = nielsen_bound(distance, dim);
    let observed_gap = (eof_rho - eof_rho_prime).abs();
    let tolerance = tolerance.unwrap_or_else(|| T::lit(OPTIMIZER_TOL));
    Ok(ContinuityCheck {
        distance,
        dim,
        bound,
        observed_gap,
        tolerance,
        holds: observed_gap <= bound + tolerance,
    })
}

/// `ρ + scale·H` for a random traceless Hermitian `H` of unit max-norm,
/// projected back onto the states.
pub fn perturb<T: Real>(
    rho: &QuantumState<T>,
    scale: T,
    rng: &mut RandomSource,
) -> Result<QuantumState<T>> {
    let d = rho.dim();
    let g = rng.ginibre::<T>(d, d);
    let mut h: CMatrix<T> = hermitian_part(&g);
    let shift = trace(&h).re / T::from_usize_lossy(d);
    for i in 0..d {
        h[(i, i)] -= creal(shift);
    }
    let norm = crate::qcore::linalg::max_abs(&h);
    if norm > T::zero() {
        h /= creal(norm);
    }
    QuantumState::project_psd(rho.dims(), &(rho.matrix() + h * creal(scale)))
}
