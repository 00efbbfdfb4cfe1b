//! Bipartite states and the basic operations on them.

pub mod io;
pub mod linalg;
pub mod random;
mod state;

pub use random::{sample_random, RandomSource, SampleKind, Sampled};
pub use state::{
    Ensemble, PureState, QuantumState, Repair, Subsystem, CLIP_TOL, PRUNE_FLOOR, RANK_TOL,
    REJECT_TOL, VALIDATION_TOL,
};

use linalg::{eigh, eigvalsh, reduced_smaller_of_vector, CMatrix, CVector};

use crate::error::{Error, Result};
use crate::scalar::{creal, czero, eta, Real};

/// Partial trace over the factor not named by `keep`.
pub fn partial_trace<T: Real>(rho: &QuantumState<T>, keep: Subsystem) -> Result<CMatrix<T>> {
    partial_trace_matrix(rho.matrix(), rho.dims(), keep)
}

/// Partial trace of a raw operator with the given bipartite dims.
pub fn partial_trace_matrix<T: Real>(
    m: &CMatrix<T>,
    dims: (usize, usize),
    keep: Subsystem,
) -> Result<CMatrix<T>> {
    let (da, db) = dims;
    if m.nrows() != da * db || m.ncols() != da * db {
        return Err(Error::DimensionMismatch(format!(
            "operator of order {} with dims {dims:?}",
            m.nrows()
        )));
    }
    Ok(match keep {
        Subsystem::A => CMatrix::from_fn(da, da, |a, c| {
            (0..db).fold(czero(), |acc, b| acc + m[(a * db + b, c * db + b)])
        }),
        Subsystem::B => CMatrix::from_fn(db, db, |b, d| {
            (0..da).fold(czero(), |acc, a| acc + m[(a * db + b, a * db + d)])
        }),
    })
}

/// Entropy in bits of a spectrum, `0 log 0 = 0`.
pub fn entropy_of_spectrum<T: Real>(values: &[T]) -> T {
    values.iter().fold(T::zero(), |acc, v| acc + eta(*v))
}

/// `S(σ) = -Tr σ log2 σ` in bits.
pub fn von_neumann_entropy<T: Real>(sigma: &CMatrix<T>) -> Result<T> {
    let values = eigvalsh(sigma);
    if let Some(min) = values.last() {
        if *min < -T::tol(REJECT_TOL) {
            return Err(Error::NotPositive(min.to_f64_lossy()));
        }
    }
    Ok(entropy_of_spectrum(&values))
}

/// Entanglement of a pure state: the entropy of either reduction, in ebits.
pub fn pure_entanglement<T: Real>(psi: &PureState<T>) -> T {
    let (da, db) = psi.dims();
    let reduced = reduced_smaller_of_vector(psi.vector().as_slice(), da, db);
    entropy_of_spectrum(&eigvalsh(&reduced))
}

/// `Σ p_i |ψ_i><ψ_i|`.
pub fn ensemble_average<T: Real>(ensemble: &Ensemble<T>) -> QuantumState<T> {
    let dims = ensemble.dims();
    let d = dims.0 * dims.1;
    let mut m = CMatrix::zeros(d, d);
    for (p, psi) in ensemble.iter() {
        let v = psi.vector();
        m += (v * v.adjoint()) * creal(p);
    }
    QuantumState::from_trusted(dims, m)
}

/// Eigen-ensemble of a state: its nonzero eigenvalues and eigenvectors.
pub fn eigen_ensemble<T: Real>(rho: &QuantumState<T>) -> Ensemble<T> {
    let (values, vectors) = rho.eigen();
    let tol = T::tol(RANK_TOL);
    let mut weights = Vec::new();
    let mut states = Vec::new();
    for (k, v) in values.iter().enumerate() {
        if *v > tol {
            weights.push(*v);
            let col: CVector<T> = vectors.column(k).into_owned();
            states.push(PureState::normalized(rho.dims(), col).expect("unit eigenvector"));
        }
    }
    Ensemble::pruned(weights, states, PRUNE_FLOOR)
}

/// A purification `|Φ> = Σ_k sqrt(λ_k) |e_k>|k>` of a state.
#[derive(Debug, Clone)]
pub struct Purification<T: Real> {
    /// Pure state with dims `(d_A d_B, rank)`: the original system as the first
    /// factor, the auxiliary as the second.
    pub state: PureState<T>,
    pub original_dims: (usize, usize),
    pub aux_dim: usize,
}

impl<T: Real> Purification<T> {
    /// Traces out the auxiliary system.
    pub fn reduce(&self) -> QuantumState<T> {
        let m = self.state.reduced(Subsystem::A);
        QuantumState::from_trusted(self.original_dims, m)
    }
}

pub fn purify<T: Real>(rho: &QuantumState<T>) -> Purification<T> {
    let (values, vectors) = eigh(rho.matrix());
    let tol = T::tol(RANK_TOL);
    let kept: Vec<usize> = (0..values.len()).filter(|&k| values[k] > tol).collect();
    let r = kept.len().max(1);
    let d = rho.dim();
    let mut v = CVector::zeros(d * r);
    for (slot, &k) in kept.iter().enumerate() {
        let amp = creal(values[k].sqrt());
        for i in 0..d {
            v[i * r + slot] = vectors[(i, k)] * amp;
        }
    }
    let state = PureState::normalized((d, r), v).expect("nonzero purification");
    Purification {
        state,
        original_dims: rho.dims(),
        aux_dim: r,
    }
}
