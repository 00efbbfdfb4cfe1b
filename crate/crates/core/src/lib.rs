//! Entanglement of formation, its regularization, and the typical-set
//! formation protocol, on finite-dimensional bipartite states.
//!
//! Everything numeric is generic over [`scalar::Real`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`.

pub mod eof;
pub mod error;
pub mod formation;
pub mod metrics;
pub mod qcore;
pub mod regcost;
pub mod scalar;
pub mod verify;

pub use error::{Error, Result};
pub use qcore::{RandomSource, Subsystem};
pub use scalar::Real;

pub type QuantumState64 = qcore::QuantumState<f64>;
pub type PureState64 = qcore::PureState<f64>;
pub type Ensemble64 = qcore::Ensemble<f64>;
pub type CMatrix64 = qcore::linalg::CMatrix<f64>;
pub type CVector64 = qcore::linalg::CVector<f64>;
pub type EofResult64 = eof::EofResult<f64>;
pub type LoccChannel64 = eof::LoccChannel<f64>;
pub type DistanceReport64 = metrics::DistanceReport<f64>;
pub type RegularizationTrace64 = regcost::RegularizationTrace<f64>;
pub type CostBracket64 = regcost::CostBracket<f64>;
pub type FormationResult64 = formation::FormationResult<f64>;
pub type TypicalSet64 = formation::TypicalSet<f64>;
