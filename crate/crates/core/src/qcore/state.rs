use log::warn;

use super::linalg::{
    bipartite_kron, bipartite_kron_vec, eigh, eigvalsh, hermitian_part, max_abs_diff, outer,
    reduced_a_of_vector, reduced_b_of_vector, trace, CMatrix, CVector,
};
use crate::error::{Error, Result};
use crate::scalar::{creal, czero, Real, C};

/// Deviation from Hermiticity and unit trace tolerated at construction.
pub const VALIDATION_TOL: f64 = 1e-9;
/// Negative eigenvalues above this are repaired silently.
pub const CLIP_TOL: f64 = 1e-9;
/// Negative eigenvalues below this are rejected.
pub const REJECT_TOL: f64 = 1e-6;
/// Eigenvalues at or below this count as zero for rank purposes.
pub const RANK_TOL: f64 = 1e-12;
/// Ensemble weights below this are pruned.
pub const PRUNE_FLOOR: f64 = 1e-12;

/// One factor of a bipartite system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Subsystem {
    A,
    B,
}

/// What the positivity repair policy did to an input matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Repair {
    None,
    /// Eigenvalues in `[-1e-9, 0)` were clipped.
    Clipped {
        min_eigenvalue: f64,
    },
    /// Eigenvalues in `[-1e-6, -1e-9)` were clipped; the caller should warn.
    Warned {
        min_eigenvalue: f64,
    },
}

impl Repair {
    pub fn applied(&self) -> bool {
        !matches!(self, Repair::None)
    }
}

/// Density matrix on `C^{d_A} ⊗ C^{d_B}`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState<T: Real> {
    dims: (usize, usize),
    matrix: CMatrix<T>,
}

fn check_dims(dims: (usize, usize), order: usize) -> Result<()> {
    if dims.0 == 0 || dims.1 == 0 {
        return Err(Error::DimensionMismatch(format!(
            "dims {dims:?} must be positive"
        )));
    }
    if dims.0 * dims.1 != order {
        return Err(Error::DimensionMismatch(format!(
            "dims {dims:?} imply order {}, got {order}",
            dims.0 * dims.1
        )));
    }
    Ok(())
}

impl<T: Real> QuantumState<T> {
    /// Validates `matrix` and applies the positivity repair policy.
    pub fn new(dims: (usize, usize), matrix: CMatrix<T>) -> Result<Self> {
        let (state, repair) = Self::new_with_repair(dims, matrix)?;
        if let Repair::Warned { min_eigenvalue } = repair {
            warn!("repaired negative eigenvalue {min_eigenvalue:e} in density matrix");
        }
        Ok(state)
    }

    /// Like [`QuantumState::new`] but reports the repair instead of logging it.
    pub fn new_with_repair(dims: (usize, usize), matrix: CMatrix<T>) -> Result<(Self, Repair)> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, expected square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        check_dims(dims, matrix.nrows())?;
        let herm_err = max_abs_diff(&matrix, &matrix.adjoint());
        if herm_err > T::tol(VALIDATION_TOL) {
            return Err(Error::NotHermitian(herm_err.to_f64_lossy()));
        }
        let matrix = hermitian_part(&matrix);
        let tr = trace(&matrix).re;
        if (tr - T::one()).abs() > T::tol(VALIDATION_TOL) {
            return Err(Error::InvalidTrace(tr.to_f64_lossy()));
        }
        let (values, vectors) = eigh(&matrix);
        let min = values.last().copied().unwrap_or(T::zero());
        if min >= T::zero() {
            return Ok((Self { dims, matrix }, Repair::None));
        }
        if min < -T::tol(REJECT_TOL) {
            return Err(Error::NotPositive(min.to_f64_lossy()));
        }
        let repair = if min < -T::tol(CLIP_TOL) {
            Repair::Warned {
                min_eigenvalue: min.to_f64_lossy(),
            }
        } else {
            Repair::Clipped {
                min_eigenvalue: min.to_f64_lossy(),
            }
        };
        let clipped: Vec<T> = values.iter().map(|v| v.max(T::zero())).collect();
        Ok((
            Self {
                dims,
                matrix: rebuild_normalized(&clipped, &vectors),
            },
            repair,
        ))
    }

    /// Constructor for matrices that are valid by construction. Hermiticity is
    /// enforced and the trace renormalized, nothing else is checked.
    pub(crate) fn from_trusted(dims: (usize, usize), matrix: CMatrix<T>) -> Self {
        debug_assert_eq!(dims.0 * dims.1, matrix.nrows());
        let mut matrix = hermitian_part(&matrix);
        let tr = trace(&matrix).re;
        if tr > T::zero() {
            matrix /= creal(tr);
        }
        Self { dims, matrix }
    }

    /// Projects an arbitrary Hermitian matrix onto the density matrices by
    /// clipping negative eigenvalues and renormalizing.
    pub fn project_psd(dims: (usize, usize), matrix: &CMatrix<T>) -> Result<Self> {
        check_dims(dims, matrix.nrows())?;
        let (values, vectors) = eigh(&hermitian_part(matrix));
        let clipped: Vec<T> = values.iter().map(|v| v.max(T::zero())).collect();
        if clipped.iter().all(|v| *v <= T::zero()) {
            return Err(Error::InvalidTrace(0.0));
        }
        Ok(Self {
            dims,
            matrix: rebuild_normalized(&clipped, &vectors),
        })
    }

    pub fn maximally_mixed(dims: (usize, usize)) -> Self {
        let d = dims.0 * dims.1;
        let w = creal(T::one() / T::from_usize_lossy(d));
        Self {
            dims,
            matrix: CMatrix::from_diagonal_element(d, d, w),
        }
    }

    /// Diagonal state in the computational basis.
    pub fn diagonal(dims: (usize, usize), diag: &[T]) -> Result<Self> {
        let d = diag.len();
        let m = CMatrix::from_fn(d, d, |r, c| if r == c { creal(diag[r]) } else { czero() });
        Self::new(dims, m)
    }

    pub fn from_pure(psi: &PureState<T>) -> Self {
        Self {
            dims: psi.dims,
            matrix: outer(&psi.vector),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.0 * self.dims.1
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.matrix
    }

    /// Eigenvalues (decreasing) and eigenvectors.
    pub fn eigen(&self) -> (Vec<T>, CMatrix<T>) {
        eigh(&self.matrix)
    }

    pub fn spectrum(&self) -> Vec<T> {
        eigvalsh(&self.matrix)
    }

    /// Number of eigenvalues above [`RANK_TOL`].
    pub fn rank(&self) -> usize {
        let tol = T::tol(RANK_TOL);
        self.spectrum().iter().filter(|v| **v > tol).count()
    }

    /// `ρ ⊗ σ`, regrouped as a bipartite state on `(A A') : (B B')`.
    pub fn kron(&self, other: &Self) -> Self {
        let m = bipartite_kron(&self.matrix, self.dims, &other.matrix, other.dims);
        Self {
            dims: (self.dims.0 * other.dims.0, self.dims.1 * other.dims.1),
            matrix: m,
        }
    }

    pub fn tensor_power(&self, n: usize) -> Self {
        assert!(n >= 1, "tensor power needs n >= 1");
        let mut out = self.clone();
        for _ in 1..n {
            out = out.kron(self);
        }
        out
    }

    /// `a ρ + (1 - a) σ`.
    pub fn mix(&self, a: T, other: &Self) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        let m = &self.matrix * creal(a) + &other.matrix * creal(T::one() - a);
        Ok(Self::from_trusted(self.dims, m))
    }

    /// `U ρ U^dagger` for a unitary on the full space.
    pub fn conjugate(&self, u: &CMatrix<T>) -> Self {
        Self::from_trusted(self.dims, u * &self.matrix * u.adjoint())
    }

    pub fn is_pure(&self) -> bool {
        self.rank() == 1
    }
}

fn rebuild_normalized<T: Real>(values: &[T], vectors: &CMatrix<T>) -> CMatrix<T> {
    let total = values.iter().fold(T::zero(), |a, b| a + *b);
    let n = vectors.nrows();
    let mut scaled = vectors.clone();
    for (c, v) in values.iter().enumerate() {
        let w = creal(*v / total);
        for r in 0..n {
            scaled[(r, c)] *= w;
        }
    }
    hermitian_part(&(scaled * vectors.adjoint()))
}

/// Unit vector on `C^{d_A} ⊗ C^{d_B}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState<T: Real> {
    dims: (usize, usize),
    vector: CVector<T>,
}

impl<T: Real> PureState<T> {
    pub fn new(dims: (usize, usize), vector: CVector<T>) -> Result<Self> {
        check_dims(dims, vector.len())?;
        let norm = vector.norm();
        if (norm - T::one()).abs() > T::tol(VALIDATION_TOL) {
            return Err(Error::NotNormalized(norm.to_f64_lossy()));
        }
        Ok(Self { dims, vector })
    }

    /// Rescales a nonzero vector to unit norm.
    pub fn normalized(dims: (usize, usize), vector: CVector<T>) -> Result<Self> {
        check_dims(dims, vector.len())?;
        let norm = vector.norm();
        if norm <= T::zero() {
            return Err(Error::NotNormalized(0.0));
        }
        Ok(Self {
            dims,
            vector: vector / creal(norm),
        })
    }

    pub fn from_amplitudes(dims: (usize, usize), amps: &[C<T>]) -> Result<Self> {
        Self::new(dims, CVector::from_column_slice(amps))
    }

    /// Computational basis product `|a>|b>`.
    pub fn basis(dims: (usize, usize), a: usize, b: usize) -> Self {
        let mut v = CVector::zeros(dims.0 * dims.1);
        v[a * dims.1 + b] = creal(T::one());
        Self { dims, vector: v }
    }

    /// The singlet `(|01> - |10>)/sqrt(2)`.
    pub fn singlet() -> Self {
        let h = creal(T::lit(std::f64::consts::FRAC_1_SQRT_2));
        let mut v = CVector::zeros(4);
        v[1] = h;
        v[2] = -h;
        Self {
            dims: (2, 2),
            vector: v,
        }
    }

    /// `sqrt(p)|00> + sqrt(1-p)|11>`.
    pub fn two_qubit_schmidt(p: T) -> Self {
        let mut v = CVector::zeros(4);
        v[0] = creal(p.sqrt());
        v[3] = creal((T::one() - p).sqrt());
        Self {
            dims: (2, 2),
            vector: v,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn vector(&self) -> &CVector<T> {
        &self.vector
    }

    pub fn density(&self) -> QuantumState<T> {
        QuantumState::from_pure(self)
    }

    pub fn kron(&self, other: &Self) -> Self {
        let v = bipartite_kron_vec(&self.vector, self.dims, &other.vector, other.dims);
        Self {
            dims: (self.dims.0 * other.dims.0, self.dims.1 * other.dims.1),
            vector: v,
        }
    }

    pub fn tensor_power(&self, n: usize) -> Self {
        if n == 0 {
            return Self {
                dims: (1, 1),
                vector: CVector::from_element(1, creal(T::one())),
            };
        }
        let mut out = self.clone();
        for _ in 1..n {
            out = out.kron(self);
        }
        out
    }

    /// Reduced density matrix of one factor.
    pub fn reduced(&self, keep: Subsystem) -> CMatrix<T> {
        let (da, db) = self.dims;
        match keep {
            Subsystem::A => reduced_a_of_vector(self.vector.as_slice(), da, db),
            Subsystem::B => reduced_b_of_vector(self.vector.as_slice(), da, db),
        }
    }

    /// Squared Schmidt coefficients, decreasing, clipped at zero.
    pub fn schmidt_weights(&self) -> Vec<T> {
        let keep = if self.dims.0 <= self.dims.1 {
            Subsystem::A
        } else {
            Subsystem::B
        };
        eigvalsh(&self.reduced(keep))
            .into_iter()
            .map(|v| v.max(T::zero()))
            .collect()
    }

    pub fn inner(&self, other: &Self) -> C<T> {
        self.vector.dotc(&other.vector)
    }
}

/// Weighted list of pure states realizing a density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble<T: Real> {
    weights: Vec<T>,
    states: Vec<PureState<T>>,
}

impl<T: Real> Ensemble<T> {
    pub fn new(weights: Vec<T>, states: Vec<PureState<T>>) -> Result<Self> {
        Self::with_floor(weights, states, PRUNE_FLOOR)
    }

    /// Validates and prunes weights below `floor`, renormalizing the rest.
    pub fn with_floor(weights: Vec<T>, states: Vec<PureState<T>>, floor: f64) -> Result<Self> {
        if weights.len() != states.len() {
            return Err(Error::InvalidEnsemble(format!(
                "{} weights for {} states",
                weights.len(),
                states.len()
            )));
        }
        if states.is_empty() {
            return Err(Error::InvalidEnsemble("empty ensemble".into()));
        }
        let dims = states[0].dims;
        if let Some(bad) = states.iter().find(|s| s.dims != dims) {
            return Err(Error::DimensionMismatch(format!(
                "ensemble mixes dims {:?} and {:?}",
                dims, bad.dims
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= T::zero())) {
            return Err(Error::InvalidEnsemble(format!("weight {w} is negative")));
        }
        let total = weights.iter().fold(T::zero(), |a, b| a + *b);
        if (total - T::one()).abs() > T::tol(VALIDATION_TOL) {
            return Err(Error::InvalidEnsemble(format!("weights sum to {total}")));
        }
        Ok(Self::pruned(weights, states, floor))
    }

    /// Drops weights below `floor` and renormalizes. Callers guarantee the
    /// weights are a probability vector up to rounding.
    pub(crate) fn pruned(weights: Vec<T>, states: Vec<PureState<T>>, floor: f64) -> Self {
        let floor = T::lit(floor);
        let (weights, states): (Vec<T>, Vec<_>) = weights
            .into_iter()
            .zip(states)
            .filter(|(w, _)| *w >= floor)
            .unzip();
        let total = weights.iter().fold(T::zero(), |a, b| a + *b);
        let weights = weights.into_iter().map(|w| w / total).collect();
        Self { weights, states }
    }

    pub fn singleton(psi: PureState<T>) -> Self {
        Self {
            weights: vec![T::one()],
            states: vec![psi],
        }
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn states(&self) -> &[PureState<T>] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.states[0].dims
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, &PureState<T>)> {
        self.weights.iter().copied().zip(self.states.iter())
    }

    /// `Σ p_i E(ψ_i)` in ebits.
    pub fn average_entanglement(&self) -> T {
        self.iter().fold(T::zero(), |acc, (p, s)| {
            acc + p * super::pure_entanglement(s)
        })
    }

    /// Product ensemble realizing `ρ ⊗ σ`.
    pub fn kron(&self, other: &Self) -> Self {
        let mut weights = Vec::with_capacity(self.len() * other.len());
        let mut states = Vec::with_capacity(self.len() * other.len());
        for (p, a) in self.iter() {
            for (q, b) in other.iter() {
                weights.push(p * q);
                states.push(a.kron(b));
            }
        }
        Self::pruned(weights, states, PRUNE_FLOOR)
    }
}
