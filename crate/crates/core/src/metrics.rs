//! Fidelity, Bures and trace distances, and the relations between them.

use log::warn;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qcore::linalg::{eigvalsh, support_factor, CMatrix};
use crate::qcore::QuantumState;
use crate::scalar::Real;

/// Largest total dimension for which tensor powers are built explicitly.
pub const DIRECT_DIMENSION_CAP: usize = 4096;

/// Slack allowed on each side of the `1 - F <= d <= sqrt(1 - F^2)` chain.
pub const CHAIN_TOL: f64 = 1e-9;

fn same_dims<T: Real>(rho: &QuantumState<T>, sigma: &QuantumState<T>) -> Result<()> {
    if rho.dims() != sigma.dims() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} vs {:?}",
            rho.dims(),
            sigma.dims()
        )));
    }
    Ok(())
}

/// `Tr sqrt(sqrt(a) b sqrt(a))` for positive semidefinite operators of any
/// trace, without clamping.
///
/// Only the numerically nonzero eigenspace of `a` is used: with
/// `a = V Λ V^dagger` restricted to that support, the nonzero spectrum of
/// `sqrt(a) b sqrt(a)` equals that of `sqrt(Λ) V^dagger b V sqrt(Λ)`.
pub fn fidelity_of_operators<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    let factor = support_factor(a);
    if factor.ncols() == 0 {
        return T::zero();
    }
    let reduced = factor.adjoint() * b * &factor;
    eigvalsh(&reduced)
        .iter()
        .fold(T::zero(), |acc, v| acc + v.max(T::zero()).sqrt())
}

/// Uhlmann fidelity `F(ρ, σ) = Tr sqrt(sqrt(ρ) σ sqrt(ρ))`, clamped to `[0, 1]`.
pub fn uhlmann_fidelity<T: Real>(rho: &QuantumState<T>, sigma: &QuantumState<T>) -> Result<T> {
    same_dims(rho, sigma)?;
    // the lower-rank argument goes first: fewer noise eigenvalues enter the root
    let (a, b) = if rho.rank() <= sigma.rank() {
        (rho, sigma)
    } else {
        (sigma, rho)
    };
    let f = fidelity_of_operators(a.matrix(), b.matrix());
    if f > T::one() + T::tol(1e-7) {
        warn!("fidelity {f} exceeds 1 before clamping");
    }
    Ok(f.max(T::zero()).min(T::one()))
}

/// `D = 2 sqrt(1 - F)` for a fidelity value.
pub fn bures_from_fidelity<T: Real>(f: T) -> T {
    let two = T::lit(2.0);
    two * (T::one() - f).max(T::zero()).sqrt()
}

/// Bures distance in the normalization `D = 2 sqrt(1 - F)`, range `[0, 2]`.
pub fn bures_distance<T: Real>(rho: &QuantumState<T>, sigma: &QuantumState<T>) -> Result<T> {
    Ok(bures_from_fidelity(uhlmann_fidelity(rho, sigma)?))
}

/// `d(ρ, σ) = ½ Tr|ρ - σ|`.
pub fn trace_distance<T: Real>(rho: &QuantumState<T>, sigma: &QuantumState<T>) -> Result<T> {
    same_dims(rho, sigma)?;
    let diff = rho.matrix() - sigma.matrix();
    let sum = eigvalsh(&diff)
        .iter()
        .fold(T::zero(), |acc, v| acc + v.abs());
    Ok((sum * T::lit(0.5)).min(T::one()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceReport<T: Real> {
    pub fidelity: T,
    pub bures: T,
    pub trace: T,
    /// `1 - F`
    pub chain_lower: T,
    /// `sqrt(1 - F^2)`
    pub chain_upper: T,
    pub chain_holds: bool,
}

impl<T: Real> DistanceReport<T> {
    pub fn from_parts(fidelity: T, trace: T) -> Self {
        let tol = T::tol(CHAIN_TOL);
        let chain_lower = T::one() - fidelity;
        let chain_upper = (T::one() - fidelity * fidelity).max(T::zero()).sqrt();
        Self {
            fidelity,
            bures: bures_from_fidelity(fidelity),
            trace,
            chain_lower,
            chain_upper,
            chain_holds: chain_lower - tol <= trace && trace <= chain_upper + tol,
        }
    }
}

/// Computes `F`, `D`, `d` and checks `1 - F <= d <= sqrt(1 - F^2)`.
pub fn metric_relation_check<T: Real>(
    rho: &QuantumState<T>,
    sigma: &QuantumState<T>,
) -> Result<DistanceReport<T>> {
    let f = uhlmann_fidelity(rho, sigma)?;
    let d = trace_distance(rho, sigma)?;
    Ok(DistanceReport::from_parts(f, d))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceEntry<T: Real> {
    pub k: usize,
    pub fidelity: T,
    pub bures: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectCheck<T: Real> {
    pub k: usize,
    pub analytic: T,
    pub direct: T,
    pub abs_error: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceReport<T: Real> {
    pub base_fidelity: T,
    pub entries: Vec<DivergenceEntry<T>>,
    /// Direct `F(ρ^⊗k, σ^⊗k)` evaluations for small `k`.
    pub direct_checks: Vec<DirectCheck<T>>,
    /// Smallest `k` whose direct check was skipped because `dim^k` exceeds
    /// [`DIRECT_DIMENSION_CAP`].
    pub direct_check_capped_at: Option<usize>,
}

/// `F_k = F^k` and `D_k = 2 sqrt(1 - F^k)` for `k = 1..=k_max`.
pub fn divergence_sequence<T: Real>(fidelity: T, k_max: usize) -> Vec<DivergenceEntry<T>> {
    let mut f_k = T::one();
    (1..=k_max)
        .map(|k| {
            f_k *= fidelity;
            DivergenceEntry {
                k,
                fidelity: f_k,
                bures: bures_from_fidelity(f_k),
            }
        })
        .collect()
}

/// Bures distance between `k`-fold tensor powers, from fidelity
/// multiplicativity, with direct cross-checks for `k <= direct_max_k` while
/// the tensor power stays within [`DIRECT_DIMENSION_CAP`].
pub fn tensor_power_divergence<T: Real>(
    rho: &QuantumState<T>,
    sigma: &QuantumState<T>,
    k_max: usize,
    direct_max_k: usize,
) -> Result<DivergenceReport<T>> {
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    let base = uhlmann_fidelity(rho, sigma)?;
    let entries = divergence_sequence(base, k_max);
    let mut direct_checks = Vec::new();
    let mut capped = None;
    let (mut rk, mut sk) = (rho.clone(), sigma.clone());
    for k in 1..=direct_max_k.min(k_max) {
        if k > 1 {
            let dim = rk.dim().checked_mul(rho.dim());
            if dim.is_none_or(|d| d > DIRECT_DIMENSION_CAP) {
                capped = Some(k);
                break;
            }
            rk = rk.kron(rho);
            sk = sk.kron(sigma);
        }
        let direct = uhlmann_fidelity(&rk, &sk)?;
        let analytic = entries[k - 1].fidelity;
        direct_checks.push(DirectCheck {
            k,
            analytic,
            direct,
            abs_error: (analytic - direct).abs(),
        });
    }
    Ok(DivergenceReport {
        base_fidelity: base,
        entries,
        direct_checks,
        direct_check_capped_at: capped,
    })
}

/// First `k` with `2 sqrt(1 - F^k) > threshold`, searching up to `k_max`.
pub fn first_k_exceeding<T: Real>(fidelity: T, threshold: T, k_max: usize) -> Option<usize> {
    divergence_sequence(fidelity, k_max)
        .into_iter()
        .find(|e| e.bures > threshold)
        .map(|e| e.k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::random::{random_density_matrix, random_pure_state, random_unitary};
    use crate::qcore::{PureState, RandomSource};
    use crate::scalar::creal;

    fn qubit_diag(p: f64) -> QuantumState<f64> {
        QuantumState::diagonal((2, 1), &[p, 1.0 - p]).unwrap()
    }

    #[test]
    fn fidelity_examples() {
        let mut rng = RandomSource::new(1);
        let rho = random_density_matrix::<f64>((2, 2), 4, &mut rng).unwrap();
        assert!((uhlmann_fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(
            uhlmann_fidelity(&qubit_diag(1.0), &qubit_diag(0.0)).unwrap(),
            0.0
        );
        // sqrt(I/2) = I/sqrt(2), so F = Tr sqrt(|0><0| / 2) = sqrt(1/2)
        let f = uhlmann_fidelity(&qubit_diag(0.5), &qubit_diag(1.0)).unwrap();
        assert!((f - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn fidelity_of_pure_states_is_overlap_modulus() {
        let mut rng = RandomSource::new(2);
        for _ in 0..20 {
            let a = random_pure_state::<f64>((2, 3), &mut rng);
            let b = random_pure_state::<f64>((2, 3), &mut rng);
            let f = uhlmann_fidelity(&a.density(), &b.density()).unwrap();
            let overlap = a.inner(&b).norm();
            assert!((f - overlap).abs() < 1e-9);
        }
    }

    #[test]
    fn fidelity_is_symmetric_and_unitarily_invariant() {
        let mut rng = RandomSource::new(3);
        for _ in 0..30 {
            let r = random_density_matrix::<f64>((3, 2), 1 + rng.index(6), &mut rng).unwrap();
            let s = random_density_matrix::<f64>((3, 2), 1 + rng.index(6), &mut rng).unwrap();
            let f = uhlmann_fidelity(&r, &s).unwrap();
            assert!((f - uhlmann_fidelity(&s, &r).unwrap()).abs() < 1e-9);
            let u = random_unitary::<f64>(6, &mut rng);
            let fu = uhlmann_fidelity(&r.conjugate(&u), &s.conjugate(&u)).unwrap();
            assert!((f - fu).abs() < 1e-9);
        }
    }

    #[test]
    fn fidelity_rejects_dimension_mismatch() {
        let a = QuantumState::<f64>::maximally_mixed((2, 2));
        let b = QuantumState::<f64>::maximally_mixed((2, 3));
        assert!(matches!(
            uhlmann_fidelity(&a, &b),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            trace_distance(&a, &b),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            bures_distance(&a, &b),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn bures_examples() {
        let rho = qubit_diag(0.3);
        assert!(bures_distance(&rho, &rho).unwrap().abs() < 1e-6);
        assert!((bures_distance(&qubit_diag(1.0), &qubit_diag(0.0)).unwrap() - 2.0).abs() < 1e-15);
        let d = bures_distance(&qubit_diag(0.5), &qubit_diag(1.0)).unwrap();
        let expected = 2.0 * (1.0 - 0.5f64.sqrt()).sqrt();
        assert!((d - expected).abs() < 1e-12);
        assert!((d - 1.0824).abs() < 1e-4);
    }

    #[test]
    fn trace_distance_examples() {
        let rho = qubit_diag(0.3);
        assert_eq!(trace_distance(&rho, &rho).unwrap(), 0.0);
        assert!((trace_distance(&qubit_diag(1.0), &qubit_diag(0.0)).unwrap() - 1.0).abs() < 1e-15);
        assert!((trace_distance(&qubit_diag(0.7), &qubit_diag(0.5)).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn metric_chain_examples() {
        let rho = qubit_diag(0.4);
        let r = metric_relation_check(&rho, &rho).unwrap();
        assert!((r.fidelity - 1.0).abs() < 1e-12 && r.trace == 0.0 && r.chain_holds);
        let r = metric_relation_check(&qubit_diag(1.0), &qubit_diag(0.0)).unwrap();
        assert_eq!(
            (r.fidelity, r.trace, r.chain_lower, r.chain_upper),
            (0.0, 1.0, 1.0, 1.0)
        );
        assert!(r.chain_holds);
        assert!((r.bures - 2.0 * (1.0 - r.fidelity).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn metric_chain_fuzz() {
        let mut rng = RandomSource::new(4);
        for i in 0..200 {
            let dims = if i % 2 == 0 { (2, 2) } else { (3, 3) };
            let d = dims.0 * dims.1;
            let r = random_density_matrix::<f64>(dims, 1 + rng.index(d), &mut rng).unwrap();
            let s = random_density_matrix::<f64>(dims, 1 + rng.index(d), &mut rng).unwrap();
            assert!(metric_relation_check(&r, &s).unwrap().chain_holds);
        }
    }

    #[test]
    fn triangle_inequalities() {
        let mut rng = RandomSource::new(5);
        for _ in 0..200 {
            let s: Vec<_> = (0..3)
                .map(|_| random_density_matrix::<f64>((2, 2), 1 + rng.index(4), &mut rng).unwrap())
                .collect();
            let bd = |a: usize, b: usize| bures_distance(&s[a], &s[b]).unwrap();
            let td = |a: usize, b: usize| trace_distance(&s[a], &s[b]).unwrap();
            assert!(bd(0, 2) <= bd(0, 1) + bd(1, 2) + 1e-8);
            assert!(td(0, 2) <= td(0, 1) + td(1, 2) + 1e-8);
        }
    }

    #[test]
    fn fidelity_is_multiplicative() {
        let mut rng = RandomSource::new(6);
        for _ in 0..20 {
            let r1 = random_density_matrix::<f64>((2, 2), 1 + rng.index(4), &mut rng).unwrap();
            let s1 = random_density_matrix::<f64>((2, 2), 1 + rng.index(4), &mut rng).unwrap();
            let r2 = random_density_matrix::<f64>((2, 2), 1 + rng.index(4), &mut rng).unwrap();
            let s2 = random_density_matrix::<f64>((2, 2), 1 + rng.index(4), &mut rng).unwrap();
            let joint = uhlmann_fidelity(&r1.kron(&r2), &s1.kron(&s2)).unwrap();
            let prod = uhlmann_fidelity(&r1, &s1).unwrap() * uhlmann_fidelity(&r2, &s2).unwrap();
            assert!((joint - prod).abs() <= 1e-8);
        }
    }

    #[test]
    fn divergence_identical_states_stays_at_zero() {
        let rho = qubit_diag(0.2);
        let rep = tensor_power_divergence(&rho, &rho, 50, 0).unwrap();
        assert!(rep.entries.iter().all(|e| e.bures < 1e-6));
    }

    #[test]
    fn divergence_closed_form_value() {
        let seq = divergence_sequence(0.99f64, 200);
        // scalar evaluation of 2 sqrt(1 - 0.99^200)
        let expected = 2.0 * (1.0 - 0.99f64.powi(200)).sqrt();
        assert!((seq[199].bures - expected).abs() < 1e-12);
        assert!((seq[199].bures - 1.861_21).abs() < 1e-5);
        assert!(seq.windows(2).all(|w| w[1].bures > w[0].bures));
        assert_eq!(first_k_exceeding(0.99f64, 1.99, 1000), Some(459));
    }

    #[test]
    fn divergence_direct_check_matches_cube() {
        let mut rng = RandomSource::new(7);
        let r = random_density_matrix::<f64>((2, 2), 4, &mut rng).unwrap();
        let s = random_density_matrix::<f64>((2, 2), 4, &mut rng).unwrap();
        let rep = tensor_power_divergence(&r, &s, 10, 3).unwrap();
        assert_eq!(rep.direct_checks.len(), 3);
        let f = rep.base_fidelity;
        assert!((rep.direct_checks[2].direct - f * f * f).abs() < 1e-8);
        assert!(rep.direct_check_capped_at.is_none());
    }

    #[test]
    fn divergence_cap_disables_only_direct_check() {
        let a = QuantumState::<f64>::maximally_mixed((2, 5));
        let rep = tensor_power_divergence(&a, &a, 5, 5).unwrap();
        assert_eq!(rep.entries.len(), 5);
        assert_eq!(rep.direct_checks.len(), 3);
        assert_eq!(rep.direct_check_capped_at, Some(4));
    }

    #[test]
    fn subnormalized_operator_fidelity_scales() {
        let mut rng = RandomSource::new(8);
        let r = random_density_matrix::<f64>((2, 2), 3, &mut rng).unwrap();
        let s = random_density_matrix::<f64>((2, 2), 2, &mut rng).unwrap();
        let half: CMatrix<f64> = s.matrix() * creal(0.25);
        let f = fidelity_of_operators(r.matrix(), s.matrix());
        assert!((fidelity_of_operators(r.matrix(), &half) - 0.5 * f).abs() < 1e-12);
        let _ = PureState::<f64>::singlet();
    }
}
