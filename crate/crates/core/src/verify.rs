//! Seeded property fuzzing: LOCC monotonicity, continuity, the metric chain
//! and fidelity multiplicativity. Same config, same report, bit for bit.

use serde::{Deserialize, Serialize};

use crate::eof::{
    check_monotonicity, continuity_bound, eof_two_qubit_closed_form, perturb,
    sample_entanglement_breaking, sample_locc, LoccSampleKind, OptimizerSettings, CLOSED_FORM_TOL,
};
use crate::error::Result;
use crate::metrics::{metric_relation_check, uhlmann_fidelity};
use crate::qcore::random::random_density_matrix;
use crate::qcore::{QuantumState, RandomSource};

/// Largest Bures distance at which continuity pairs are kept.
pub const CONTINUITY_MAX_DISTANCE: f64 = 0.2;
pub const MULTIPLICATIVITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub seed: u64,
    pub monotonicity_cases: usize,
    pub continuity_cases: usize,
    pub metric_pairs: usize,
    pub multiplicativity_cases: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            monotonicity_cases: 100,
            continuity_cases: 100,
            metric_pairs: 1000,
            multiplicativity_cases: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertySummary {
    pub property: String,
    pub cases: usize,
    pub violations: usize,
    /// Largest amount by which a case exceeded its allowance (negative when
    /// every case held with room to spare); `None` without cases.
    pub worst_margin: Option<f64>,
    pub tolerance: f64,
    pub holds: bool,
}

impl PropertySummary {
    fn new(property: &str, tolerance: f64) -> Self {
        Self {
            property: property.into(),
            cases: 0,
            violations: 0,
            worst_margin: None,
            tolerance,
            holds: true,
        }
    }

    /// Records a case whose excess over its allowance is `margin`.
    fn record(&mut self, margin: f64, holds: bool) {
        self.cases += 1;
        self.worst_margin = Some(self.worst_margin.map_or(margin, |w| w.max(margin)));
        if !holds {
            self.violations += 1;
            self.holds = false;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub config: VerifyConfig,
    pub properties: Vec<PropertySummary>,
    pub holds: bool,
}

fn random_state(dims: (usize, usize), rng: &mut RandomSource) -> Result<QuantumState<f64>> {
    let d = dims.0 * dims.1;
    let rank = 1 + rng.index(d);
    random_density_matrix(dims, rank, rng)
}

fn monotonicity(cases: usize, rng: &mut RandomSource) -> Result<PropertySummary> {
    let mut out = PropertySummary::new("locc-monotonicity", CLOSED_FORM_TOL);
    let settings = OptimizerSettings::default();
    for _ in 0..cases {
        let rho = random_state((2, 2), rng)?;
        let ch = match rng.index(3) {
            0 => sample_locc((2, 2), LoccSampleKind::LocalUnitary, rng)?,
            1 => sample_locc(
                (2, 2),
                LoccSampleKind::MeasurePrepare {
                    outcomes: 1 + rng.index(4),
                },
                rng,
            )?,
            _ => sample_entanglement_breaking((2, 2), rng)?,
        };
        let r = check_monotonicity(&rho, &ch, &settings, rng)?;
        out.record(r.after - r.before - r.tolerance, r.holds);
    }
    Ok(out)
}

fn continuity(cases: usize, rng: &mut RandomSource) -> Result<PropertySummary> {
    let mut out = PropertySummary::new("continuity", CLOSED_FORM_TOL);
    while out.cases < cases {
        let rho = random_state((2, 2), rng)?;
        let scale = rng.uniform_in::<f64>(1e-4, 0.1);
        let other = perturb(&rho, scale, rng)?;
        let a = eof_two_qubit_closed_form(&rho)?;
        let b = eof_two_qubit_closed_form(&other)?;
        let c = continuity_bound(&rho, &other, a, b, Some(CLOSED_FORM_TOL))?;
        if c.distance > CONTINUITY_MAX_DISTANCE {
            continue;
        }
        out.record(c.observed_gap - c.bound - c.tolerance, c.holds);
    }
    Ok(out)
}

fn metric_chain(pairs: usize, rng: &mut RandomSource) -> Result<PropertySummary> {
    let tol = crate::metrics::CHAIN_TOL;
    let mut out = PropertySummary::new("metric-chain", tol);
    for i in 0..pairs {
        let dims = if i % 2 == 0 { (2, 2) } else { (3, 3) };
        let rho = random_state(dims, rng)?;
        let sigma = random_state(dims, rng)?;
        let r = metric_relation_check(&rho, &sigma)?;
        let margin = (r.chain_lower - r.trace).max(r.trace - r.chain_upper) - tol;
        out.record(margin, r.chain_holds);
    }
    Ok(out)
}

fn multiplicativity(cases: usize, rng: &mut RandomSource) -> Result<PropertySummary> {
    let mut out = PropertySummary::new("fidelity-multiplicativity", MULTIPLICATIVITY_TOL);
    for _ in 0..cases {
        let (r1, s1) = (random_state((2, 2), rng)?, random_state((2, 2), rng)?);
        let (r2, s2) = (random_state((2, 1), rng)?, random_state((2, 1), rng)?);
        let joint = uhlmann_fidelity(&r1.kron(&r2), &s1.kron(&s2))?;
        let product = uhlmann_fidelity(&r1, &s1)? * uhlmann_fidelity(&r2, &s2)?;
        let err = (joint - product).abs();
        out.record(err - MULTIPLICATIVITY_TOL, err <= MULTIPLICATIVITY_TOL);
    }
    Ok(out)
}

/// Runs every property on its own stream split from `config.seed`, so
/// changing one count leaves the other properties' cases unchanged.
pub fn run_verify(config: &VerifyConfig) -> Result<VerifyReport> {
    let mut root = RandomSource::new(config.seed);
    let mut streams = root.split_n(4);
    let properties = vec![
        monotonicity(config.monotonicity_cases, &mut streams[0])?,
        continuity(config.continuity_cases, &mut streams[1])?,
        metric_chain(config.metric_pairs, &mut streams[2])?,
        multiplicativity(config.multiplicativity_cases, &mut streams[3])?,
    ];
    let holds = properties.iter().all(|p| p.holds);
    Ok(VerifyReport {
        config: config.clone(),
        properties,
        holds,
    })
}
