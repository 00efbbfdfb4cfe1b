//! Channels that are LOCC by construction, and monotonicity checks under them.

use serde::Serialize;

use super::closed_form::eof_two_qubit_closed_form;
use super::optimize::{eof_optimize, OptimizerSettings};
use crate::error::{Error, Result};
use crate::qcore::linalg::{local_product, max_abs_diff, CMatrix, CVector};
use crate::qcore::random::{random_isometry, random_pure_state, random_unitary};
use crate::qcore::{QuantumState, RandomSource};
use crate::scalar::Real;

/// Completeness slack `|Σ A†A ⊗ B†B - I|`.
pub const COMPLETENESS_TOL: f64 = 1e-8;
/// Monotonicity slack when the closed form is used on both sides.
pub const CLOSED_FORM_TOL: f64 = 1e-9;
/// Monotonicity slack when the optimizer is involved.
pub const OPTIMIZER_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoccKind {
    LocalUnitary,
    /// Alice measures, sends the outcome, Bob applies an outcome-dependent
    /// operation; either side may re-prepare.
    MeasurePrepareOneWay,
}

/// Kraus element `A_j ⊗ B_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductElement<T: Real> {
    pub a: CMatrix<T>,
    pub b: CMatrix<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoccChannel<T: Real> {
    kind: LoccKind,
    dims: (usize, usize),
    elements: Vec<ProductElement<T>>,
}

impl<T: Real> LoccChannel<T> {
    pub fn new(
        kind: LoccKind,
        dims: (usize, usize),
        elements: Vec<ProductElement<T>>,
    ) -> Result<Self> {
        let (da, db) = dims;
        if elements.is_empty() {
            return Err(Error::InvalidArgument("channel has no elements".into()));
        }
        for e in &elements {
            if e.a.shape() != (da, da) || e.b.shape() != (db, db) {
                return Err(Error::DimensionMismatch(format!(
                    "element shapes {:?}, {:?} for dims {dims:?}",
                    e.a.shape(),
                    e.b.shape()
                )));
            }
        }
        let ch = Self {
            kind,
            dims,
            elements,
        };
        let err = ch.completeness_error();
        if err > T::tol(COMPLETENESS_TOL) {
            return Err(Error::Completeness(err.to_f64_lossy()));
        }
        Ok(ch)
    }

    pub fn identity(dims: (usize, usize)) -> Self {
        Self::local_unitary(
            CMatrix::identity(dims.0, dims.0),
            CMatrix::identity(dims.1, dims.1),
        )
    }

    pub fn local_unitary(u: CMatrix<T>, v: CMatrix<T>) -> Self {
        let dims = (u.nrows(), v.nrows());
        Self {
            kind: LoccKind::LocalUnitary,
            dims,
            elements: vec![ProductElement { a: u, b: v }],
        }
    }

    /// Both parties measure in a basis and re-prepare a fixed state per
    /// outcome. The output is always separable.
    pub fn entanglement_breaking(
        basis_a: &CMatrix<T>,
        preps_a: &[CVector<T>],
        basis_b: &CMatrix<T>,
        preps_b: &[CVector<T>],
    ) -> Result<Self> {
        let kraus = |basis: &CMatrix<T>, preps: &[CVector<T>]| -> Vec<CMatrix<T>> {
            (0..basis.ncols())
                .map(|j| &preps[j % preps.len()] * basis.column(j).adjoint())
                .collect()
        };
        let ka = kraus(basis_a, preps_a);
        let kb = kraus(basis_b, preps_b);
        let mut elements = Vec::with_capacity(ka.len() * kb.len());
        for a in &ka {
            for b in &kb {
                elements.push(ProductElement {
                    a: a.clone(),
                    b: b.clone(),
                });
            }
        }
        Self::new(
            LoccKind::MeasurePrepareOneWay,
            (basis_a.nrows(), basis_b.nrows()),
            elements,
        )
    }

    pub fn kind(&self) -> LoccKind {
        self.kind
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn elements(&self) -> &[ProductElement<T>] {
        &self.elements
    }

    /// Max-norm of `Σ (A_j†A_j ⊗ B_j†B_j) - I`.
    pub fn completeness_error(&self) -> T {
        let d = self.dims.0 * self.dims.1;
        let mut sum = CMatrix::zeros(d, d);
        for e in &self.elements {
            sum += local_product(&(e.a.adjoint() * &e.a), &(e.b.adjoint() * &e.b));
        }
        max_abs_diff(&sum, &CMatrix::identity(d, d))
    }
}

/// `Σ_j (A_j ⊗ B_j) ρ (A_j ⊗ B_j)†`.
pub fn apply_locc<T: Real>(ch: &LoccChannel<T>, rho: &QuantumState<T>) -> Result<QuantumState<T>> {
    if ch.dims != rho.dims() {
        return Err(Error::DimensionMismatch(format!(
            "channel dims {:?}, state dims {:?}",
            ch.dims,
            rho.dims()
        )));
    }
    let err = ch.completeness_error();
    if err > T::tol(COMPLETENESS_TOL) {
        return Err(Error::Completeness(err.to_f64_lossy()));
    }
    let d = rho.dim();
    let mut out = CMatrix::zeros(d, d);
    for e in &ch.elements {
        let k = local_product(&e.a, &e.b);
        out += &k * rho.matrix() * k.adjoint();
    }
    Ok(QuantumState::from_trusted(rho.dims(), out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoccSampleKind {
    LocalUnitary,
    MeasurePrepare { outcomes: usize },
}

/// Random channel of the requested family.
///
/// For the measure-and-prepare family Alice's Kraus operators are the blocks
/// of a Haar isometry `C^{d_A} -> C^{outcomes} ⊗ C^{d_A}`, so
/// `Σ A_j†A_j = I` holds exactly; Bob applies a random unitary per outcome.
pub fn sample_locc<T: Real>(
    dims: (usize, usize),
    kind: LoccSampleKind,
    rng: &mut RandomSource,
) -> Result<LoccChannel<T>> {
    let (da, db) = dims;
    match kind {
        LoccSampleKind::LocalUnitary => Ok(LoccChannel::local_unitary(
            random_unitary(da, rng),
            random_unitary(db, rng),
        )),
        LoccSampleKind::MeasurePrepare { outcomes } => {
            if outcomes == 0 {
                return Err(Error::InvalidArgument("at least one outcome".into()));
            }
            let w = random_isometry::<T>(outcomes * da, da, rng);
            let elements = (0..outcomes)
                .map(|j| ProductElement {
                    a: w.rows(j * da, da).into_owned(),
                    b: random_unitary(db, rng),
                })
                .collect();
            LoccChannel::new(LoccKind::MeasurePrepareOneWay, dims, elements)
        }
    }
}

/// Random entanglement-breaking channel on both sides.
pub fn sample_entanglement_breaking<T: Real>(
    dims: (usize, usize),
    rng: &mut RandomSource,
) -> Result<LoccChannel<T>> {
    let (da, db) = dims;
    let ua = random_unitary::<T>(da, rng);
    let ub = random_unitary::<T>(db, rng);
    let preps_a: Vec<CVector<T>> = (0..da)
        .map(|_| random_pure_state::<T>((da, 1), rng).vector().clone())
        .collect();
    let preps_b: Vec<CVector<T>> = (0..db)
        .map(|_| random_pure_state::<T>((db, 1), rng).vector().clone())
        .collect();
    LoccChannel::entanglement_breaking(&ua, &preps_a, &ub, &preps_b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EofMethod {
    ClosedForm,
    Optimizer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityReport<T: Real> {
    pub before: T,
    pub after: T,
    pub tolerance: T,
    pub method: EofMethod,
    pub holds: bool,
}

/// Checks `E_f(ρ) >= E_f(L(ρ))`. Two-qubit states use the closed form with a
/// `1e-9` slack; other dims use the optimizer with a `1e-3` slack.
pub fn check_monotonicity<T: Real>(
    rho: &QuantumState<T>,
    ch: &LoccChannel<T>,
    settings: &OptimizerSettings,
    rng: &mut RandomSource,
) -> Result<MonotonicityReport<T>> {
    let out = apply_locc(ch, rho)?;
    let (before, after, method, tol) = if rho.dims() == (2, 2) {
        (
            eof_two_qubit_closed_form(rho)?,
            eof_two_qubit_closed_form(&out)?,
            EofMethod::ClosedForm,
            T::tol(CLOSED_FORM_TOL),
        )
    } else {
        let mut r1 = rng.split();
        let mut r2 = rng.split();
        (
            eof_optimize(rho, settings, &mut r1)?.value,
            eof_optimize(&out, settings, &mut r2)?.value,
            EofMethod::Optimizer,
            T::lit(OPTIMIZER_TOL),
        )
    };
    Ok(MonotonicityReport {
        before,
        after,
        tolerance: tol,
        method,
        holds: after <= before + tol,
    })
}
