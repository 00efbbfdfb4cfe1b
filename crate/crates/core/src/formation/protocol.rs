//! The typical-set formation protocol, simulated exactly at small `n`.
//!
//! Given an ensemble `{p_i, ψ_i}` of `ρ`, the protocol keeps only typical
//! index sequences `s`, prepares each `ψ_s = ⊗_j ψ_{s_j}` by diluting singlets
//! into `ψ_i^⊗c_i` for every index `i`, and mixes the results with the
//! sequence weights. Every error term is computed from the actual vectors,
//! so each inequality in the chain can be checked on its own.

use std::collections::HashMap;

use serde::Serialize;

use super::dilution::{dilute_pure_state, dilution_fidelity_analytic};
use super::typical::{typical_set, typical_types, TypicalSet, Window, ENUMERATION_CAP};
use crate::error::{Error, Result};
use crate::metrics::{bures_distance, fidelity_of_operators, uhlmann_fidelity};
use crate::qcore::linalg::{bipartite_kron_vec, max_abs_diff, permute_copies, CMatrix, CVector};
use crate::qcore::{ensemble_average, pure_entanglement, Ensemble, PureState, QuantumState};
use crate::scalar::{creal, Real};

/// Cap on the total dimension `(d_A d_B)^n` for exact simulation.
pub const EXACT_DIMENSION_CAP: usize = 4096;

/// Allowed deviation between the ensemble average and `ρ`.
pub const ENSEMBLE_TOL: f64 = 1e-7;

pub const FID_TOL: f64 = 1e-9;
pub const TRIANGLE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// `ρ_T = Σ_{s∈T} p_s |ψ_s><ψ_s|`, trace `p_T`.
    Sub,
    /// `ρ_T / p_T`.
    #[default]
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormationMode {
    Exact,
    BoundOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FormationSettings<T: Real> {
    pub n: usize,
    pub delta1: T,
    pub delta2: T,
    pub window: Window,
    /// Variant of `ρ_T` reported as the primary fid1 check.
    pub normalization: Normalization,
}

impl<T: Real> FormationSettings<T> {
    pub fn new(n: usize, delta1: T, delta2: T) -> Self {
        Self {
            n,
            delta1,
            delta2,
            window: Window::Paper,
            normalization: Normalization::Unit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DilutionEntry<T: Real> {
    pub index: usize,
    /// Largest count of this index over the typical set.
    pub count: usize,
    pub expected_count: T,
    /// `E(ψ_i)` in ebits.
    pub entanglement: T,
    pub delta2: T,
    pub singlets: usize,
    /// `(c_i - p_i n) E_i`.
    pub count_slack: T,
    /// `c_i δ2`, or zero when `E_i = 0`.
    pub delta2_slack: T,
    /// `singlets - c_i E_i - delta2_slack`, from rounding up.
    pub rounding_slack: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DilutionPlan<T: Real> {
    pub entries: Vec<DilutionEntry<T>>,
    pub total_singlets: usize,
}

impl<T: Real> DilutionPlan<T> {
    /// `singlets_i = ceil(c_i (E_i + δ2))`, with product states charged nothing.
    pub fn build(
        probabilities: &[T],
        entanglements: &[T],
        max_counts: &[usize],
        n: usize,
        delta2: T,
    ) -> Self {
        let nf = T::from_usize_lossy(n);
        let cutoff = T::tol(1e-12);
        let entries: Vec<DilutionEntry<T>> = (0..probabilities.len())
            .map(|i| {
                let c = T::from_usize_lossy(max_counts[i]);
                let e = entanglements[i];
                let expected = probabilities[i] * nf;
                let (singlets, delta2_slack) = if e <= cutoff {
                    (0, T::zero())
                } else {
                    let raw = c * (e + delta2);
                    // absorb rounding noise so exact integers do not round up
                    let s = (raw - T::tol(1e-12)).ceil().max(T::zero());
                    (s.to_f64_lossy() as usize, c * delta2)
                };
                let singlets_f = T::from_usize_lossy(singlets);
                DilutionEntry {
                    index: i,
                    count: max_counts[i],
                    expected_count: expected,
                    entanglement: e,
                    delta2,
                    singlets,
                    count_slack: (c - expected) * e,
                    delta2_slack,
                    rounding_slack: singlets_f - c * e - delta2_slack,
                }
            })
            .collect();
        let total_singlets = entries.iter().map(|e| e.singlets).sum();
        Self {
            entries,
            total_singlets,
        }
    }

    /// Sum of all stored slack terms; equals `m - n Σ p_i E_i`.
    pub fn total_slack(&self) -> T {
        self.entries.iter().fold(T::zero(), |acc, e| {
            acc + e.count_slack + e.delta2_slack + e.rounding_slack
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fid1Check<T: Real> {
    pub normalization: Normalization,
    pub fidelity: T,
    /// `sqrt(1 - ε1)` for the unit-trace variant, `1 - ε1` for the
    /// subnormalized one.
    pub bound: T,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fid2Check<T: Real> {
    /// `Σ (p_s / p_T) |<ψ_s|ψ'_s>|`.
    pub aggregate: T,
    pub bound: T,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TriangleCheck<T: Real> {
    /// `D(ρ^⊗n, ρ'_T)`.
    pub direct: T,
    /// `D(ρ^⊗n, ρ_T)`.
    pub to_truncated: T,
    /// `D(ρ_T, ρ'_T)`.
    pub truncated_to_diluted: T,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidBoundsReport<T: Real> {
    pub fid1_unit: Fid1Check<T>,
    pub fid1_sub: Fid1Check<T>,
    pub fid2: Fid2Check<T>,
    pub triangle: TriangleCheck<T>,
    /// `D(ρ^⊗n, ρ'_T)` against `2 sqrt(1 - sqrt(1 - ε1)) + 2 sqrt(ε3)`.
    pub bures_bound_holds: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypicalSummary<T: Real> {
    pub window: Window,
    pub delta1: T,
    pub entropy: T,
    pub slack: T,
    pub bounds: (T, T),
    pub total_weight: T,
    pub sequences: u128,
    pub types: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormationResult<T: Real> {
    pub mode: FormationMode,
    pub n: usize,
    pub k: usize,
    /// Singlets consumed.
    pub m: usize,
    /// `m / n`.
    pub rate: T,
    /// `Σ p_i E(ψ_i)`.
    pub average_entanglement: T,
    /// `rate - average_entanglement`, itemized in `plan`.
    pub rate_slack: T,
    pub plan: DilutionPlan<T>,
    pub typical: TypicalSummary<T>,
    pub eps1: T,
    pub eps2: T,
    pub eps3: T,
    pub bures_bound: T,
    pub normalization: Normalization,
    /// `D(ρ^⊗n, ρ'_T)`; exact mode only.
    pub exact_bures: Option<T>,
    pub fidelity_fid1_holds: Option<bool>,
    pub fid2_holds: Option<bool>,
    /// `Σ (p_s / p_T) Π_i f_i(c_i(s))` over typical types, from the
    /// per-block dilution fidelities; available in both modes.
    pub fid2_aggregate: T,
    pub checks: Option<FidBoundsReport<T>>,
}

/// States and overlaps from an exact run, enough to recheck every bound.
#[derive(Debug, Clone)]
pub struct FormationArtifacts<T: Real> {
    pub rho_n: QuantumState<T>,
    /// Unit-trace `ρ_T`.
    pub rho_t: QuantumState<T>,
    /// Subnormalized `ρ_T`.
    pub rho_t_sub: CMatrix<T>,
    pub rho_t_prime: QuantumState<T>,
    /// `(p_s, |<ψ_s|ψ'_s>|)` per typical sequence.
    pub overlaps: Vec<(T, T)>,
}

#[derive(Debug, Clone)]
pub struct FormationOutcome<T: Real> {
    pub result: FormationResult<T>,
    pub artifacts: Option<FormationArtifacts<T>>,
}

/// `Σ_{s∈T} p_s |ψ_s><ψ_s|` (or divided by `p_T`), as a dense matrix.
pub fn truncated_state<T: Real>(
    ensemble: &Ensemble<T>,
    typical: &TypicalSet<T>,
    normalization: Normalization,
) -> Result<CMatrix<T>> {
    let (da, db) = ensemble.dims();
    let dim = (da * db)
        .checked_pow(typical.n as u32)
        .unwrap_or(usize::MAX);
    if dim > EXACT_DIMENSION_CAP {
        return Err(Error::DimensionCap {
            dim,
            cap: EXACT_DIMENSION_CAP,
        });
    }
    if typical.k != ensemble.len() {
        return Err(Error::InvalidArgument(format!(
            "typical set over {} indices, ensemble of {}",
            typical.k,
            ensemble.len()
        )));
    }
    if typical.sequences.is_empty() && !typical.types.is_empty() {
        return Err(Error::InvalidArgument(
            "typical set was not enumerated".into(),
        ));
    }
    let columns: Vec<CVector<T>> = typical
        .sequences
        .iter()
        .map(|s| sequence_vector(ensemble.states(), &s.indices) * creal(s.weight.sqrt()))
        .collect();
    let mut out = if columns.is_empty() {
        CMatrix::zeros(dim, dim)
    } else {
        let v = CMatrix::from_columns(&columns);
        &v * v.adjoint()
    };
    if normalization == Normalization::Unit && typical.total_weight > T::zero() {
        out /= creal(typical.total_weight);
    }
    Ok(out)
}

/// `⊗_j ψ_{s_j}` in the grouped bipartite ordering.
fn sequence_vector<T: Real>(states: &[PureState<T>], indices: &[usize]) -> CVector<T> {
    let mut dims = (1, 1);
    let mut v = CVector::from_element(1, creal(T::one()));
    for &i in indices {
        let s = &states[i];
        v = bipartite_kron_vec(&v, dims, s.vector(), s.dims());
        dims = (dims.0 * s.dims().0, dims.1 * s.dims().1);
    }
    v
}

/// Re-checks fid1, fid2 and the triangle chain from exact artifacts.
pub fn verify_fid_bounds<T: Real>(
    result: &FormationResult<T>,
    artifacts: Option<&FormationArtifacts<T>>,
) -> Result<FidBoundsReport<T>> {
    let art =
        artifacts.ok_or_else(|| Error::InvalidArgument("exact artifacts are required".into()))?;
    let fid_tol = T::tol(FID_TOL);
    let one = T::one();
    let eps1 = result.eps1;

    let f_unit = uhlmann_fidelity(&art.rho_t, &art.rho_n)?;
    let bound_unit = (one - eps1).max(T::zero()).sqrt();
    let fid1_unit = Fid1Check {
        normalization: Normalization::Unit,
        fidelity: f_unit,
        bound: bound_unit,
        holds: f_unit >= bound_unit - fid_tol,
    };
    let f_sub = fidelity_of_operators(&art.rho_t_sub, art.rho_n.matrix());
    let bound_sub = one - eps1;
    let fid1_sub = Fid1Check {
        normalization: Normalization::Sub,
        fidelity: f_sub,
        bound: bound_sub,
        holds: f_sub >= bound_sub - fid_tol,
    };

    let p_t = art.overlaps.iter().fold(T::zero(), |a, (p, _)| a + *p);
    let aggregate = art
        .overlaps
        .iter()
        .fold(T::zero(), |a, (p, o)| a + *p / p_t * *o);
    let fid2 = Fid2Check {
        aggregate,
        bound: one - result.eps3,
        holds: aggregate >= one - result.eps3 - fid_tol,
    };

    let direct = bures_distance(&art.rho_n, &art.rho_t_prime)?;
    let to_truncated = bures_distance(&art.rho_n, &art.rho_t)?;
    let truncated_to_diluted = bures_distance(&art.rho_t, &art.rho_t_prime)?;
    let triangle = TriangleCheck {
        direct,
        to_truncated,
        truncated_to_diluted,
        holds: direct <= to_truncated + truncated_to_diluted + T::tol(TRIANGLE_TOL),
    };
    let bures_bound_holds = direct <= result.bures_bound + T::tol(1e-6);
    let holds =
        fid1_unit.holds && fid1_sub.holds && fid2.holds && triangle.holds && bures_bound_holds;
    Ok(FidBoundsReport {
        fid1_unit,
        fid1_sub,
        fid2,
        triangle,
        bures_bound_holds,
        holds,
    })
}

/// Runs the protocol on `ρ^⊗n` with the ensemble `ensemble` of `ρ`.
/// Simulates exactly when `(d_A d_B)^n <= 4096` and the sequences can be
/// enumerated; otherwise only the analytic quantities are reported.
pub fn formation_protocol<T: Real>(
    rho: &QuantumState<T>,
    ensemble: &Ensemble<T>,
    settings: &FormationSettings<T>,
) -> Result<FormationOutcome<T>> {
    let n = settings.n;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if ensemble.dims() != rho.dims() {
        return Err(Error::DimensionMismatch(format!(
            "ensemble {:?}, state {:?}",
            ensemble.dims(),
            rho.dims()
        )));
    }
    let dev = max_abs_diff(ensemble_average(ensemble).matrix(), rho.matrix());
    if dev > T::lit(ENSEMBLE_TOL) {
        return Err(Error::EnsembleMismatch(dev.to_f64_lossy()));
    }
    if settings.delta2 < T::zero() {
        return Err(Error::InvalidArgument("delta2 must be non-negative".into()));
    }
    // a pure state admits only itself up to phase as an ensemble
    let ensemble = if ensemble.len() > 1 && rho.is_pure() {
        Ensemble::singleton(ensemble.states()[0].clone())
    } else {
        ensemble.clone()
    };
    let k = ensemble.len();
    let (da, db) = rho.dims();
    let dim = (da * db).checked_pow(n as u32).unwrap_or(usize::MAX);
    let enumerable = (k as u128)
        .checked_pow(n as u32)
        .is_some_and(|t| t <= ENUMERATION_CAP);
    let mode = if dim <= EXACT_DIMENSION_CAP && enumerable {
        FormationMode::Exact
    } else {
        FormationMode::BoundOnly
    };

    let probabilities = ensemble.weights().to_vec();
    let typical = if k == 1 {
        TypicalSet::trivial(n)
    } else if mode == FormationMode::Exact {
        typical_set(&probabilities, n, settings.delta1, settings.window)?
    } else {
        typical_types(&probabilities, n, settings.delta1, settings.window)?
    };

    let entanglements: Vec<T> = ensemble.states().iter().map(pure_entanglement).collect();
    let plan = DilutionPlan::build(
        &probabilities,
        &entanglements,
        &typical.max_counts(),
        n,
        settings.delta2,
    );
    let nf = T::from_usize_lossy(n);
    let m = plan.total_singlets;
    let rate = T::from_usize_lossy(m) / nf;
    let average_entanglement = probabilities
        .iter()
        .zip(&entanglements)
        .fold(T::zero(), |acc, (p, e)| acc + *p * *e);
    let rate_slack = plan.total_slack() / nf;

    // dilution fidelity of index i at count c: from the diluted vectors in
    // exact mode, from the Schmidt spectrum otherwise
    let mut diluted: HashMap<(usize, usize), PureState<T>> = HashMap::new();
    let mut fid_cache: HashMap<(usize, usize), T> = HashMap::new();
    let schmidt: Vec<Vec<T>> = ensemble
        .states()
        .iter()
        .map(|s| s.schmidt_weights())
        .collect();
    for t in &typical.types {
        for (i, &c) in t.counts.iter().enumerate() {
            if fid_cache.contains_key(&(i, c)) {
                continue;
            }
            let budget = plan.entries[i].singlets;
            let f = if mode == FormationMode::Exact && c > 0 {
                let d = dilute_pure_state(&ensemble.states()[i], c, budget)?;
                diluted.insert((i, c), d.state);
                d.fidelity
            } else {
                dilution_fidelity_analytic(&schmidt[i], c, budget)?
            };
            fid_cache.insert((i, c), f);
        }
    }
    let one = T::one();
    let p_t = typical.total_weight;
    let eps1 = (one - p_t).max(T::zero());
    let mut eps2 = T::zero();
    for i in 0..k {
        let worst = fid_cache
            .iter()
            .filter(|((j, _), _)| *j == i)
            .fold(one, |acc, (_, f)| acc.min(*f));
        eps2 = eps2.max(one - worst);
    }
    let eps3 = one - (one - eps2).powi(k as i32);
    let bures_bound =
        T::lit(2.0) * (one - (one - eps1).sqrt()).max(T::zero()).sqrt() + T::lit(2.0) * eps3.sqrt();
    let fid2_aggregate = if p_t > T::zero() {
        typical.types.iter().fold(T::zero(), |acc, t| {
            let overlap = t
                .counts
                .iter()
                .enumerate()
                .fold(one, |a, (i, &c)| a * fid_cache[&(i, c)]);
            acc + T::lit(t.multiplicity as f64) * t.weight / p_t * overlap
        })
    } else {
        T::zero()
    };

    let typical_summary = TypicalSummary {
        window: typical.window,
        delta1: typical.delta1,
        entropy: typical.entropy,
        slack: typical.slack,
        bounds: typical.bounds,
        total_weight: p_t,
        sequences: typical.sequence_count(),
        types: typical.types.len(),
    };
    let mut result = FormationResult {
        mode,
        n,
        k,
        m,
        rate,
        average_entanglement,
        rate_slack,
        plan,
        typical: typical_summary,
        eps1,
        eps2,
        eps3,
        bures_bound,
        normalization: settings.normalization,
        exact_bures: None,
        fidelity_fid1_holds: None,
        fid2_holds: None,
        fid2_aggregate,
        checks: None,
    };
    if mode == FormationMode::BoundOnly {
        return Ok(FormationOutcome {
            result,
            artifacts: None,
        });
    }
    if typical.sequences.is_empty() {
        return Err(Error::Degenerate(
            "the typical set is empty; widen delta1".into(),
        ));
    }

    // exact simulation
    let mut overlaps = Vec::with_capacity(typical.sequences.len());
    let mut prime_columns = Vec::with_capacity(typical.sequences.len());
    for seq in &typical.sequences {
        let psi_s = sequence_vector(ensemble.states(), &seq.indices);
        // diluted blocks grouped by index, then moved to sequence positions
        let mut perm = Vec::with_capacity(n);
        let mut block = CVector::from_element(1, creal(one));
        let mut block_dims = (1, 1);
        for i in 0..k {
            let positions: Vec<usize> = (0..n).filter(|&j| seq.indices[j] == i).collect();
            if positions.is_empty() {
                continue;
            }
            let d = &diluted[&(i, positions.len())];
            block = bipartite_kron_vec(&block, block_dims, d.vector(), d.dims());
            block_dims = (block_dims.0 * d.dims().0, block_dims.1 * d.dims().1);
            perm.extend(positions);
        }
        let psi_prime = permute_copies(&block, da, db, &perm);
        let overlap = crate::scalar::cabs((psi_s.adjoint() * &psi_prime)[(0, 0)]);
        overlaps.push((seq.weight, overlap));
        prime_columns.push(psi_prime * creal((seq.weight / p_t).sqrt()));
    }
    let rho_n = rho.tensor_power(n);
    let rho_t_sub = truncated_state(&ensemble, &typical, Normalization::Sub)?;
    let rho_t = QuantumState::from_trusted(rho_n.dims(), &rho_t_sub / creal(p_t));
    let v = CMatrix::from_columns(&prime_columns);
    let rho_t_prime = QuantumState::from_trusted(rho_n.dims(), &v * v.adjoint());
    let artifacts = FormationArtifacts {
        rho_n,
        rho_t,
        rho_t_sub,
        rho_t_prime,
        overlaps,
    };
    let checks = verify_fid_bounds(&result, Some(&artifacts))?;
    result.exact_bures = Some(checks.triangle.direct);
    let primary = match settings.normalization {
        Normalization::Unit => checks.fid1_unit.holds,
        Normalization::Sub => checks.fid1_sub.holds,
    };
    result.fidelity_fid1_holds = Some(primary);
    result.fid2_holds = Some(checks.fid2.holds);
    result.checks = Some(checks);
    Ok(FormationOutcome {
        result,
        artifacts: Some(artifacts),
    })
}
