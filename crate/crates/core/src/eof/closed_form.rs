//! Two-qubit entanglement of formation through the concurrence.

use crate::error::{Error, Result};
use crate::qcore::linalg::{support_factor, CMatrix};
use crate::qcore::QuantumState;
use crate::scalar::{binary_entropy, creal, czero, Real};

/// `σ_y ⊗ σ_y` in the computational basis.
fn sigma_yy<T: Real>() -> CMatrix<T> {
    let mut m = CMatrix::from_element(4, 4, czero());
    m[(0, 3)] = creal(-T::one());
    m[(1, 2)] = creal(T::one());
    m[(2, 1)] = creal(T::one());
    m[(3, 0)] = creal(-T::one());
    m
}

/// Square roots of the eigenvalues of `ρ ρ̃`, decreasing, padded to four.
///
/// With `ρ = W W^dagger` these are the singular values of the symmetric
/// `W^T (σ_y ⊗ σ_y) W`, which avoids square roots of near-zero eigenvalues.
pub fn concurrence_spectrum<T: Real>(rho: &QuantumState<T>) -> Result<[T; 4]> {
    if rho.dims() != (2, 2) {
        return Err(Error::WrongDims {
            expected: (2, 2),
            got: rho.dims(),
        });
    }
    let factor = support_factor(rho.matrix());
    let reduced = factor.transpose() * sigma_yy::<T>() * &factor;
    let mut values: Vec<T> = reduced.singular_values().iter().copied().collect();
    values.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut out = [T::zero(); 4];
    for (slot, v) in out.iter_mut().zip(values) {
        *slot = v;
    }
    Ok(out)
}

/// `C(ρ) = max(0, λ1 - λ2 - λ3 - λ4)`.
pub fn concurrence<T: Real>(rho: &QuantumState<T>) -> Result<T> {
    let l = concurrence_spectrum(rho)?;
    Ok((l[0] - l[1] - l[2] - l[3]).max(T::zero()).min(T::one()))
}

/// `E_f = h((1 + sqrt(1 - C^2)) / 2)`.
pub fn eof_from_concurrence<T: Real>(c: T) -> T {
    let half = T::lit(0.5);
    let root = (T::one() - c * c).max(T::zero()).sqrt();
    binary_entropy(half + half * root)
}

/// Exact entanglement of formation of a two-qubit state, in ebits.
pub fn eof_two_qubit_closed_form<T: Real>(rho: &QuantumState<T>) -> Result<T> {
    Ok(eof_from_concurrence(concurrence(rho)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::linalg::local_product;
    use crate::qcore::random::{random_density_matrix, random_unitary};
    use crate::qcore::{Ensemble, PureState, RandomSource};

    #[test]
    fn singlet_has_one_ebit() {
        let rho = PureState::<f64>::singlet().density();
        assert!((concurrence(&rho).unwrap() - 1.0).abs() < 1e-12);
        assert!((eof_two_qubit_closed_form(&rho).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn classical_mixture_is_separable() {
        let e = Ensemble::new(
            vec![0.5, 0.5],
            vec![
                PureState::basis((2, 2), 0, 0),
                PureState::basis((2, 2), 1, 1),
            ],
        )
        .unwrap();
        let rho = crate::qcore::ensemble_average(&e);
        assert_eq!(eof_two_qubit_closed_form(&rho).unwrap(), 0.0);
    }

    #[test]
    fn werner_state_concurrence() {
        // for q |Ψ-><Ψ-| + (1 - q) I/4 the concurrence is max(0, (3q - 1)/2)
        let singlet = PureState::<f64>::singlet().density();
        let mixed = QuantumState::maximally_mixed((2, 2));
        for q in [0.2, 1.0 / 3.0 + 0.01, 0.5, 0.9] {
            let rho = singlet.mix(q, &mixed).unwrap();
            let expected = ((3.0 * q - 1.0) / 2.0f64).max(0.0);
            assert!(
                (concurrence(&rho).unwrap() - expected).abs() < 1e-12,
                "q = {q}"
            );
        }
        let rho = singlet.mix(0.9, &mixed).unwrap();
        let e = eof_two_qubit_closed_form(&rho).unwrap();
        assert!((e - eof_from_concurrence(0.85)).abs() < 1e-12);
    }

    #[test]
    fn pure_state_matches_entropy_of_reduction() {
        let psi = PureState::<f64>::two_qubit_schmidt(0.9);
        let e = eof_two_qubit_closed_form(&psi.density()).unwrap();
        assert!((e - crate::qcore::pure_entanglement(&psi)).abs() < 1e-9);
    }

    #[test]
    fn local_unitary_invariance() {
        let mut rng = RandomSource::new(9);
        for _ in 0..50 {
            let rho = random_density_matrix::<f64>((2, 2), 1 + rng.index(4), &mut rng).unwrap();
            let u = local_product(&random_unitary(2, &mut rng), &random_unitary(2, &mut rng));
            let a = eof_two_qubit_closed_form(&rho).unwrap();
            let b = eof_two_qubit_closed_form(&rho.conjugate(&u)).unwrap();
            assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_other_dims() {
        let rho = QuantumState::<f64>::maximally_mixed((2, 3));
        assert!(matches!(
            eof_two_qubit_closed_form(&rho),
            Err(Error::WrongDims {
                expected: (2, 2),
                got: (2, 3)
            })
        ));
    }
}
