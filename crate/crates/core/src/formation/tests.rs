use super::*;
use crate::error::Error;
use crate::qcore::linalg::max_abs_diff;
use crate::qcore::random::{random_pure_state, random_unitary};
use crate::qcore::{
    ensemble_average, pure_entanglement, Ensemble, PureState, QuantumState, RandomSource,
};

fn singlet_and_00() -> (QuantumState<f64>, Ensemble<f64>) {
    let e = Ensemble::new(
        vec![0.5, 0.5],
        vec![PureState::singlet(), PureState::basis((2, 2), 0, 0)],
    )
    .unwrap();
    (ensemble_average(&e), e)
}

#[test]
fn full_typical_set_reproduces_tensor_power() {
    let (rho, e) = singlet_and_00();
    let t = typical_set(&[0.5, 0.5], 3, 5.0, Window::Paper).unwrap();
    assert_eq!(t.sequences.len(), 8);
    let m = truncated_state(&e, &t, Normalization::Sub).unwrap();
    assert!(max_abs_diff(&m, rho.tensor_power(3).matrix()) < 1e-12);
}

#[test]
fn singleton_truncation_is_pure_power() {
    let psi = PureState::<f64>::two_qubit_schmidt(0.8);
    let e = Ensemble::singleton(psi.clone());
    let t = TypicalSet::trivial(2);
    let m = truncated_state(&e, &t, Normalization::Unit).unwrap();
    assert!(max_abs_diff(&m, psi.tensor_power(2).density().matrix()) < 1e-12);
}

#[test]
fn subnormalized_trace_is_typical_weight() {
    let (_, e) = singlet_and_00();
    let t = typical_set(&[0.5, 0.5], 4, 0.5, Window::Paper).unwrap();
    let m = truncated_state(&e, &t, Normalization::Sub).unwrap();
    assert!((m.trace().re - 14.0 / 16.0).abs() < 1e-12);
    let u = truncated_state(&e, &t, Normalization::Unit).unwrap();
    assert!((u.trace().re - 1.0).abs() < 1e-12);
}

#[test]
fn pure_state_degenerates_to_dilution() {
    let psi = PureState::<f64>::two_qubit_schmidt(0.9);
    let rho = psi.density();
    let settings = FormationSettings::new(3, 0.1, 0.25);
    let out = formation_protocol(&rho, &Ensemble::singleton(psi.clone()), &settings).unwrap();
    let r = &out.result;
    let s = pure_entanglement(&psi);
    assert_eq!(r.m, (3.0 * (s + 0.25f64)).ceil() as usize);
    assert!((r.rate - r.average_entanglement - r.rate_slack).abs() < 1e-12);
    assert_eq!(r.eps1, 0.0);
    // 3 singlets hold all 8 Schmidt coefficients of the 3-fold power
    assert_eq!(r.m, 3);
    assert!(r.exact_bures.unwrap() < 1e-6);
    assert!(r.checks.as_ref().unwrap().holds);
}

#[test]
fn separable_mixture_costs_nothing() {
    let e = Ensemble::new(
        vec![0.5, 0.5],
        vec![
            PureState::basis((2, 2), 0, 0),
            PureState::basis((2, 2), 1, 1),
        ],
    )
    .unwrap();
    let rho = ensemble_average(&e);
    let out = formation_protocol(&rho, &e, &FormationSettings::new(4, 0.5, 0.25)).unwrap();
    let r = &out.result;
    assert_eq!(r.m, 0);
    assert_eq!(r.rate, 0.0);
    assert_eq!(r.eps3, 0.0);
    assert!((r.eps1 - 2.0f64 / 16.0).abs() < 1e-12);
    assert!(r.checks.as_ref().unwrap().holds);
}

#[test]
fn singlet_mixture_chain_holds() {
    let (rho, e) = singlet_and_00();
    let out = formation_protocol(&rho, &e, &FormationSettings::new(4, 0.5, 0.25)).unwrap();
    let r = &out.result;
    assert_eq!(r.mode, FormationMode::Exact);
    let c = r.checks.as_ref().unwrap();
    assert!(
        c.fid1_unit.holds && c.fid1_sub.holds && c.fid2.holds && c.triangle.holds,
        "{c:?}"
    );
    assert!(r.exact_bures.unwrap() <= r.bures_bound + 1e-6);
    assert!((r.rate - r.average_entanglement - r.rate_slack).abs() < 1e-12);
    // the exact check re-run from the artifacts agrees
    let again = verify_fid_bounds(r, out.artifacts.as_ref()).unwrap();
    assert_eq!(&again, c);
    assert!((c.fid2.aggregate - r.fid2_aggregate).abs() < 1e-9);
}

#[test]
fn tight_budget_is_still_bounded() {
    // a weakly entangled state gets 1 singlet per 3 copies; dilution is lossy
    let a = PureState::<f64>::two_qubit_schmidt(0.95);
    let b = PureState::<f64>::basis((2, 2), 1, 0);
    let e = Ensemble::new(vec![0.6, 0.4], vec![a, b]).unwrap();
    let rho = ensemble_average(&e);
    let out = formation_protocol(&rho, &e, &FormationSettings::new(4, 0.3, 0.0)).unwrap();
    let r = &out.result;
    assert!(r.eps3 > 0.0);
    let c = r.checks.as_ref().unwrap();
    assert!(c.holds, "{c:?}");
}

#[test]
fn random_ensembles_satisfy_chain() {
    let mut rng = RandomSource::new(11);
    for _ in 0..4 {
        let states: Vec<_> = (0..2)
            .map(|_| random_pure_state::<f64>((2, 2), &mut rng))
            .collect();
        let p = rng.uniform_in::<f64>(0.2, 0.8);
        let e = Ensemble::new(vec![p, 1.0 - p], states).unwrap();
        let rho = ensemble_average(&e);
        for window in [Window::Paper, Window::Plain] {
            let settings = FormationSettings {
                window,
                ..FormationSettings::new(3, 0.3, 0.1)
            };
            match formation_protocol(&rho, &e, &settings) {
                Ok(out) => assert!(out.result.checks.unwrap().holds),
                Err(Error::Degenerate(_)) => {}
                Err(other) => panic!("{other}"),
            }
        }
    }
}

#[test]
fn large_n_is_bound_only() {
    let (rho, e) = singlet_and_00();
    let out = formation_protocol(&rho, &e, &FormationSettings::new(12, 0.3, 0.1)).unwrap();
    let r = &out.result;
    assert_eq!(r.mode, FormationMode::BoundOnly);
    assert!(r.exact_bures.is_none() && out.artifacts.is_none());
    assert!(r.bures_bound.is_finite());
    assert!(matches!(
        verify_fid_bounds(r, None),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn ensemble_must_realize_state() {
    let (_, e) = singlet_and_00();
    let rho = QuantumState::<f64>::maximally_mixed((2, 2));
    assert!(matches!(
        formation_protocol(&rho, &e, &FormationSettings::new(2, 0.5, 0.1)),
        Err(Error::EnsembleMismatch(_))
    ));
}

#[test]
fn local_unitary_leaves_cost_unchanged() {
    let (rho, e) = singlet_and_00();
    let mut rng = RandomSource::new(12);
    let u = crate::qcore::linalg::local_product(
        &random_unitary(2, &mut rng),
        &random_unitary(2, &mut rng),
    );
    let rotated = Ensemble::new(
        e.weights().to_vec(),
        e.states()
            .iter()
            .map(|s| PureState::normalized((2, 2), &u * s.vector()).unwrap())
            .collect(),
    )
    .unwrap();
    let rho_u = rho.conjugate(&u);
    let a = formation_protocol(&rho, &e, &FormationSettings::new(3, 0.5, 0.2))
        .unwrap()
        .result;
    let b = formation_protocol(&rho_u, &rotated, &FormationSettings::new(3, 0.5, 0.2))
        .unwrap()
        .result;
    assert_eq!(a.m, b.m);
    assert!((a.exact_bures.unwrap() - b.exact_bures.unwrap()).abs() < 1e-6);
}
