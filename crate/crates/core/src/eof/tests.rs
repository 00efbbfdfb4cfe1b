use super::*;
use crate::error::Error;
use crate::qcore::linalg::max_abs_diff;
use crate::qcore::random::{random_density_matrix, random_product_state, random_pure_state};
use crate::qcore::{
    eigen_ensemble, ensemble_average, pure_entanglement, Ensemble, PureState, QuantumState,
    RandomSource,
};

fn quick() -> OptimizerSettings {
    OptimizerSettings {
        restarts: 4,
        ..OptimizerSettings::default()
    }
}

fn check_feasible(rho: &QuantumState<f64>, r: &EofResult<f64>) {
    let recomputed = r.ensemble.average_entanglement();
    assert!((recomputed - r.value).abs() <= 1e-9);
    let avg = ensemble_average(&r.ensemble);
    assert!(max_abs_diff(avg.matrix(), rho.matrix()) <= 1e-7);
    let (da, db) = rho.dims();
    assert!(r.value >= 0.0 && r.value <= (da.min(db) as f64).log2() + 1e-9);
}

#[test]
fn pure_input_is_singleton() {
    let mut rng = RandomSource::new(1);
    let psi = random_pure_state::<f64>((3, 2), &mut rng);
    let rho = psi.density();
    let r = eof_optimize(&rho, &quick(), &mut rng).unwrap();
    assert_eq!(r.ensemble.len(), 1);
    assert!((r.value - pure_entanglement(&psi)).abs() < 1e-9);
}

#[test]
fn werner_state_matches_closed_form() {
    let singlet = PureState::<f64>::singlet().density();
    let rho = singlet
        .mix(0.9, &QuantumState::maximally_mixed((2, 2)))
        .unwrap();
    let exact = eof_two_qubit_closed_form(&rho).unwrap();
    let r = eof_optimize(&rho, &quick(), &mut RandomSource::new(2)).unwrap();
    check_feasible(&rho, &r);
    assert!((r.value - exact).abs() <= 1e-3, "{} vs {exact}", r.value);
}

#[test]
fn random_two_qubit_states_match_closed_form() {
    let mut rng = RandomSource::new(3);
    for _ in 0..6 {
        let rank = 2 + rng.index(3);
        let rho = random_density_matrix::<f64>((2, 2), rank, &mut rng).unwrap();
        let exact = eof_two_qubit_closed_form(&rho).unwrap();
        let r = eof_optimize(&rho, &quick(), &mut rng).unwrap();
        check_feasible(&rho, &r);
        assert!(
            (r.value - exact).abs() <= 1e-3,
            "rank {rank}: {} vs {exact}",
            r.value
        );
    }
}

#[test]
fn separable_mixture_is_near_zero() {
    let mut rng = RandomSource::new(4);
    let states: Vec<_> = (0..8)
        .map(|_| random_product_state::<f64>((2, 2), &mut rng))
        .collect();
    let weights: Vec<f64> = (0..8).map(|_| rng.uniform_in(0.1, 1.0)).collect();
    let total: f64 = weights.iter().sum();
    let e = Ensemble::new(weights.iter().map(|w| w / total).collect(), states).unwrap();
    let rho = ensemble_average(&e);
    let r = eof_optimize(&rho, &quick(), &mut rng).unwrap();
    check_feasible(&rho, &r);
    assert!(r.value <= 1e-3, "{}", r.value);
}

#[test]
fn warm_start_is_an_upper_bound() {
    let mut rng = RandomSource::new(5);
    let rho = random_density_matrix::<f64>((2, 3), 3, &mut rng).unwrap();
    let warm = eigen_ensemble(&rho);
    let bound = warm.average_entanglement();
    let settings = OptimizerSettings {
        restarts: 1,
        ..OptimizerSettings::default()
    };
    let r = eof_optimize_seeded(&rho, &settings, &[warm], &mut rng).unwrap();
    check_feasible(&rho, &r);
    assert!(r.value <= bound + 1e-9);
    assert_eq!(r.restart_values.len(), 2);
    assert!(r.value_history.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn qutrit_qubit_state_is_feasible() {
    let mut rng = RandomSource::new(6);
    let rho = random_density_matrix::<f64>((3, 2), 2, &mut rng).unwrap();
    let r = eof_optimize(&rho, &quick(), &mut rng).unwrap();
    check_feasible(&rho, &r);
    assert_eq!(r.ensemble_size, 4);
}

#[test]
fn ensemble_below_rank_is_rejected() {
    let rho = QuantumState::<f64>::maximally_mixed((2, 2));
    let settings = OptimizerSettings {
        ensemble_size: Some(3),
        ..quick()
    };
    assert!(matches!(
        eof_optimize(&rho, &settings, &mut RandomSource::new(7)),
        Err(Error::EnsembleTooSmall { size: 3, rank: 4 })
    ));
}

#[test]
fn mismatched_warm_start_is_rejected() {
    let rho = QuantumState::<f64>::maximally_mixed((2, 2));
    let other = Ensemble::singleton(PureState::singlet());
    assert!(matches!(
        eof_optimize_seeded(&rho, &quick(), &[other], &mut RandomSource::new(8)),
        Err(Error::EnsembleMismatch(_))
    ));
}

#[test]
fn optimizer_is_deterministic() {
    let mut rng = RandomSource::new(9);
    let rho = random_density_matrix::<f64>((2, 2), 3, &mut rng).unwrap();
    let a = eof_optimize(&rho, &quick(), &mut RandomSource::new(10)).unwrap();
    let serial = OptimizerSettings {
        parallel: false,
        ..quick()
    };
    let b = eof_optimize(&rho, &serial, &mut RandomSource::new(10)).unwrap();
    assert_eq!(a, b);
}
