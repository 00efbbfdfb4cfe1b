//! Entanglement dilution realized as Schmidt truncation of a tensor power.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::qcore::linalg::{eigh, CMatrix, CVector};
use crate::qcore::{PureState, RANK_TOL};
use crate::scalar::Real;

use super::typical::{compositions, multinomial};

/// Largest total dimension of a diluted block.
pub const DILUTION_DIMENSION_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dilution<T: Real> {
    /// Normalized truncation of `ψ^⊗count`.
    pub state: PureState<T>,
    /// `|<ψ^⊗count|state>|`, the square root of the retained Schmidt weight.
    pub fidelity: T,
    pub retained: usize,
    pub schmidt_rank: usize,
}

/// Number of Schmidt coefficients a budget of `singlets` ebits can carry.
pub fn budget_capacity(singlets: usize) -> u128 {
    if singlets >= 127 {
        u128::MAX
    } else {
        1u128 << singlets
    }
}

/// Keeps the `2^singlet_budget` largest Schmidt coefficients of
/// `ψ^⊗count` and renormalizes.
pub fn dilute_pure_state<T: Real>(
    psi: &PureState<T>,
    count: usize,
    singlet_budget: usize,
) -> Result<Dilution<T>> {
    let (da, db) = psi.dims();
    let dim = (da * db).checked_pow(count as u32).unwrap_or(usize::MAX);
    if dim > DILUTION_DIMENSION_CAP {
        return Err(Error::DimensionCap {
            dim,
            cap: DILUTION_DIMENSION_CAP,
        });
    }
    let power = psi.tensor_power(count);
    let (big_a, big_b) = power.dims();
    let coeffs = CMatrix::from_fn(big_a, big_b, |a, b| power.vector()[a * big_b + b]);
    let (values, vectors) = eigh(&(&coeffs * coeffs.adjoint()));
    let cutoff = T::tol(RANK_TOL);
    let schmidt_rank = values.iter().filter(|v| **v > cutoff).count();
    let keep = budget_capacity(singlet_budget).min(schmidt_rank as u128) as usize;
    let u = vectors.columns(0, keep).into_owned();
    let projected = &u * (u.adjoint() * &coeffs);
    let retained = values[..keep]
        .iter()
        .fold(T::zero(), |a, b| a + b.max(T::zero()));
    let vector = CVector::from_fn(big_a * big_b, |i, _| projected[(i / big_b, i % big_b)]);
    let norm = vector.norm();
    let state = if norm > T::zero() {
        PureState::normalized(power.dims(), vector)?
    } else {
        power.clone()
    };
    let fidelity = if keep >= schmidt_rank {
        T::one()
    } else {
        retained.sqrt().min(T::one())
    };
    Ok(Dilution {
        state,
        fidelity,
        retained: keep,
        schmidt_rank,
    })
}

/// Dilution fidelity from the Schmidt weights of `ψ` alone: the weights of
/// `ψ^⊗count` are grouped by type, so no vector is built.
pub fn dilution_fidelity_analytic<T: Real>(
    schmidt_weights: &[T],
    count: usize,
    singlet_budget: usize,
) -> Result<T> {
    let cutoff = T::tol(RANK_TOL);
    let w: Vec<T> = schmidt_weights
        .iter()
        .copied()
        .filter(|x| *x > cutoff)
        .collect();
    if w.len() <= 1 || count == 0 {
        return Ok(T::one());
    }
    let mut groups: Vec<(T, u128)> = Vec::new();
    for t in compositions(count, &vec![(0, count); w.len()]) {
        let value = t
            .iter()
            .zip(&w)
            .fold(T::one(), |acc, (&c, &x)| acc * x.powi(c as i32));
        let mult = multinomial(&t).ok_or(Error::EnumerationTooLarge(u128::MAX))?;
        groups.push((value, mult));
    }
    groups.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    let total_rank: u128 = groups.iter().map(|g| g.1).sum();
    let mut left = budget_capacity(singlet_budget);
    if left >= total_rank {
        return Ok(T::one());
    }
    let mut retained = T::zero();
    for (value, mult) in groups {
        if left == 0 {
            break;
        }
        let take = mult.min(left);
        retained += value * T::lit(take as f64);
        left -= take;
    }
    Ok(retained.sqrt().min(T::one()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::random::{random_product_state, random_pure_state};
    use crate::qcore::RandomSource;

    /// The 2^count Schmidt weights of (sqrt(p)|00> + sqrt(1-p)|11>)^count,
    /// listed bit pattern by bit pattern.
    fn binomial_spectrum(p: f64, count: usize) -> Vec<f64> {
        let mut w: Vec<f64> = (0..1u32 << count)
            .map(|bits| {
                let ones = bits.count_ones() as i32;
                p.powi(count as i32 - ones) * (1.0 - p).powi(ones)
            })
            .collect();
        w.sort_by(|a, b| b.partial_cmp(a).unwrap());
        w
    }

    #[test]
    fn product_state_needs_no_singlets() {
        let mut rng = RandomSource::new(1);
        let psi = random_product_state::<f64>((2, 3), &mut rng);
        let d = dilute_pure_state(&psi, 2, 0).unwrap();
        assert!((d.fidelity - 1.0).abs() < 1e-12);
        assert_eq!(d.schmidt_rank, 1);
    }

    #[test]
    fn singlets_dilute_exactly() {
        let d = dilute_pure_state(&PureState::<f64>::singlet(), 3, 3).unwrap();
        assert_eq!(d.schmidt_rank, 8);
        assert!((d.fidelity - 1.0).abs() < 1e-12);
        let overlap = d.state.inner(&PureState::singlet().tensor_power(3)).norm();
        assert!((overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn biased_state_matches_binomial_oracle() {
        let psi = PureState::<f64>::two_qubit_schmidt(0.9);
        let spectrum = binomial_spectrum(0.9, 6);
        let mut last = 0.0;
        for budget in 0..=6 {
            let d = dilute_pure_state(&psi, 6, budget).unwrap();
            let oracle: f64 = spectrum[..1 << budget].iter().sum::<f64>().sqrt();
            assert!((d.fidelity - oracle).abs() < 1e-9, "budget {budget}");
            let overlap = d.state.inner(&psi.tensor_power(6)).norm();
            assert!((overlap - oracle).abs() < 1e-9);
            let analytic = dilution_fidelity_analytic(&[0.9, 0.1], 6, budget).unwrap();
            assert!((analytic - oracle).abs() < 1e-12);
            assert!(d.fidelity >= last);
            last = d.fidelity;
        }
        assert_eq!(last, 1.0);
    }

    #[test]
    fn analytic_matches_vectors_for_random_states() {
        let mut rng = RandomSource::new(2);
        for _ in 0..5 {
            let psi = random_pure_state::<f64>((3, 3), &mut rng);
            let w = psi.schmidt_weights();
            for budget in 0..5 {
                let d = dilute_pure_state(&psi, 2, budget).unwrap();
                let a = dilution_fidelity_analytic(&w, 2, budget).unwrap();
                assert!((d.fidelity - a).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        let psi = PureState::<f64>::singlet();
        assert!(matches!(
            dilute_pure_state(&psi, 7, 3),
            Err(Error::DimensionCap { .. })
        ));
    }
}
