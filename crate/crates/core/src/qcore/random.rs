//! Seeded sampling of states, unitaries and isometries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::linalg::{CMatrix, CVector};
use super::state::{PureState, QuantumState};
use crate::error::{Error, Result};
use crate::scalar::{cabs, cplx, creal, Real, C};

/// Deterministic random stream. Children obtained through [`RandomSource::split`]
/// are independent of the parent's subsequent draws.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    splits: u64,
    rng: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            splits: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derives the next child stream.
    pub fn split(&mut self) -> RandomSource {
        self.splits += 1;
        RandomSource::new(splitmix64(self.seed ^ splitmix64(self.splits)))
    }

    /// `count` children in order.
    pub fn split_n(&mut self, count: usize) -> Vec<RandomSource> {
        (0..count).map(|_| self.split()).collect()
    }

    pub fn uniform<T: Real>(&mut self) -> T {
        T::lit(self.rng.random::<f64>())
    }

    pub fn uniform_in<T: Real>(&mut self, lo: f64, hi: f64) -> T {
        T::lit(lo + (hi - lo) * self.rng.random::<f64>())
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn normal<T: Real>(&mut self) -> T {
        let x: f64 = self.rng.sample(StandardNormal);
        T::lit(x)
    }

    /// Standard complex Gaussian with `E|z|^2 = 1`.
    pub fn complex_normal<T: Real>(&mut self) -> C<T> {
        let h = T::lit(std::f64::consts::FRAC_1_SQRT_2);
        cplx(self.normal::<T>() * h, self.normal::<T>() * h)
    }

    pub fn ginibre<T: Real>(&mut self, rows: usize, cols: usize) -> CMatrix<T> {
        // column-major fill keeps the draw order independent of nalgebra internals
        let mut m = CMatrix::zeros(rows, cols);
        for c in 0..cols {
            for r in 0..rows {
                m[(r, c)] = self.complex_normal();
            }
        }
        m
    }
}

/// Haar-distributed `rows x cols` isometry (`rows >= cols`).
pub fn random_isometry<T: Real>(rows: usize, cols: usize, rng: &mut RandomSource) -> CMatrix<T> {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let g = rng.ginibre::<T>(rows, cols);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    // fix the phase freedom of QR so the distribution is Haar
    for c in 0..cols {
        let d = r[(c, c)];
        let n = cabs(d);
        let phase = if n > T::zero() {
            d / creal(n)
        } else {
            creal(T::one())
        };
        for row in 0..rows {
            q[(row, c)] *= phase;
        }
    }
    q
}

pub fn random_unitary<T: Real>(d: usize, rng: &mut RandomSource) -> CMatrix<T> {
    random_isometry(d, d, rng)
}

pub fn random_pure_state<T: Real>(dims: (usize, usize), rng: &mut RandomSource) -> PureState<T> {
    let d = dims.0 * dims.1;
    let v: CVector<T> = CVector::from_fn(d, |_, _| rng.complex_normal());
    PureState::normalized(dims, v).expect("nonzero Gaussian vector")
}

/// Random density matrix of the requested rank (induced measure).
pub fn random_density_matrix<T: Real>(
    dims: (usize, usize),
    rank: usize,
    rng: &mut RandomSource,
) -> Result<QuantumState<T>> {
    let d = dims.0 * dims.1;
    if rank == 0 || rank > d {
        return Err(Error::RankOutOfRange { rank, max: d });
    }
    let g = rng.ginibre::<T>(d, rank);
    Ok(QuantumState::from_trusted(dims, &g * g.adjoint()))
}

/// Random product state `|a>|b>` with Haar-random local vectors.
pub fn random_product_state<T: Real>(dims: (usize, usize), rng: &mut RandomSource) -> PureState<T> {
    let a = random_pure_state::<T>((dims.0, 1), rng);
    let b = random_pure_state::<T>((1, dims.1), rng);
    a.kron(&b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleKind {
    PureState,
    DensityMatrix { rank: usize },
    LocalUnitary,
}

#[derive(Debug, Clone)]
pub enum Sampled<T: Real> {
    Pure(PureState<T>),
    Density(QuantumState<T>),
    /// `(U_A, U_B)`, acting as `U_A ⊗ U_B`.
    LocalUnitary(CMatrix<T>, CMatrix<T>),
}

pub fn sample_random<T: Real>(
    kind: SampleKind,
    dims: (usize, usize),
    rng: &mut RandomSource,
) -> Result<Sampled<T>> {
    if dims.0 == 0 || dims.1 == 0 {
        return Err(Error::DimensionMismatch(format!(
            "dims {dims:?} must be positive"
        )));
    }
    Ok(match kind {
        SampleKind::PureState => Sampled::Pure(random_pure_state(dims, rng)),
        SampleKind::DensityMatrix { rank } => {
            Sampled::Density(random_density_matrix(dims, rank, rng)?)
        }
        SampleKind::LocalUnitary => {
            Sampled::LocalUnitary(random_unitary(dims.0, rng), random_unitary(dims.1, rng))
        }
    })
}
