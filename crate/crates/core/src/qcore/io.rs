//! Serde mirror of the state, pure-state and ensemble file schemas.
//!
//! ```json
//! { "dims": [2, 2], "matrix": [[[re, im], ...], ...] }
//! { "dims": [2, 2], "vector": [[re, im], ...] }
//! { "weights": [...], "states": [ { "dims": ..., "vector": ... }, ... ] }
//! ```

use serde::{Deserialize, Serialize};

use super::linalg::{CMatrix, CVector};
use super::state::{Ensemble, PureState, QuantumState, Repair};
use crate::error::{Error, Result};
use crate::scalar::{cplx, Real, C};

pub type ComplexPair = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub dims: [usize; 2],
    pub matrix: Vec<Vec<ComplexPair>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PureStateFile {
    pub dims: [usize; 2],
    pub vector: Vec<ComplexPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleFile {
    pub weights: Vec<f64>,
    pub states: Vec<PureStateFile>,
}

/// Any of the three file shapes, discriminated by their keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnyStateFile {
    Mixed(StateFile),
    Pure(PureStateFile),
    Ensemble(EnsembleFile),
}

fn to_pair<T: Real>(z: &C<T>) -> ComplexPair {
    [z.re.to_f64_lossy(), z.im.to_f64_lossy()]
}

fn from_pair<T: Real>(p: &ComplexPair) -> C<T> {
    cplx(T::lit(p[0]), T::lit(p[1]))
}

impl StateFile {
    pub fn from_state<T: Real>(rho: &QuantumState<T>) -> Self {
        let m = rho.matrix();
        let matrix = (0..m.nrows())
            .map(|r| (0..m.ncols()).map(|c| to_pair(&m[(r, c)])).collect())
            .collect();
        Self {
            dims: [rho.dims().0, rho.dims().1],
            matrix,
        }
    }

    pub fn raw_matrix<T: Real>(&self) -> Result<CMatrix<T>> {
        let n = self.matrix.len();
        if let Some(row) = self.matrix.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "row of length {} in a matrix with {n} rows",
                row.len()
            )));
        }
        Ok(CMatrix::from_fn(n, n, |r, c| from_pair(&self.matrix[r][c])))
    }

    pub fn to_state<T: Real>(&self) -> Result<(QuantumState<T>, Repair)> {
        QuantumState::new_with_repair((self.dims[0], self.dims[1]), self.raw_matrix()?)
    }
}

impl PureStateFile {
    pub fn from_pure<T: Real>(psi: &PureState<T>) -> Self {
        Self {
            dims: [psi.dims().0, psi.dims().1],
            vector: psi.vector().iter().map(to_pair).collect(),
        }
    }

    pub fn to_pure<T: Real>(&self) -> Result<PureState<T>> {
        let v = CVector::from_iterator(self.vector.len(), self.vector.iter().map(from_pair));
        PureState::new((self.dims[0], self.dims[1]), v)
    }
}

impl EnsembleFile {
    pub fn from_ensemble<T: Real>(e: &Ensemble<T>) -> Self {
        Self {
            weights: e.weights().iter().map(|w| w.to_f64_lossy()).collect(),
            states: e.states().iter().map(PureStateFile::from_pure).collect(),
        }
    }

    pub fn to_ensemble<T: Real>(&self) -> Result<Ensemble<T>> {
        let states = self
            .states
            .iter()
            .map(|s| s.to_pure())
            .collect::<Result<Vec<_>>>()?;
        Ensemble::new(self.weights.iter().map(|w| T::lit(*w)).collect(), states)
    }
}

impl<T: Real> Serialize for QuantumState<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StateFile::from_state(self).serialize(s)
    }
}

impl<T: Real> Serialize for PureState<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PureStateFile::from_pure(self).serialize(s)
    }
}

impl<T: Real> Serialize for Ensemble<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        EnsembleFile::from_ensemble(self).serialize(s)
    }
}
