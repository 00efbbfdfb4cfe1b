//! Finite-n estimates of the regularized entanglement of formation.
//!
//! `A_n = E_f(ρ^⊗n)/n` only converges as `n → ∞`; every report here is a
//! finite-n certificate. Each `ρ^⊗n` search is seeded with products of the
//! best ensembles found for smaller powers, so `n·A_n` is subadditive over
//! computed entries by construction rather than by luck of the optimizer.

use serde::Serialize;

use crate::eof::{eof_optimize_seeded, EofResult, OptimizerSettings, OPTIMIZER_TOL};
use crate::error::{Error, Result};
use crate::qcore::{Ensemble, QuantumState, RandomSource};
use crate::scalar::{log2, Real};

/// Cap on `D^2` for `ρ^⊗n` of total dimension `D`: the size of the ensemble
/// space the optimizer searches. Two qubits reach `n = 3`, two qutrits `n = 1`.
pub const REGCOST_DIMENSION_CAP: usize = 4096;

/// Gap `E_f(ρ) + E_f(σ) - E_f(ρ⊗σ)` above which a pair is flagged.
pub const NON_ADDITIVITY_FLAG: f64 = 1e-2;

/// Cycle cap for searches on joint systems (tensor powers and products).
pub const JOINT_MAX_CYCLES: usize = 60;

pub const BRACKET_CAVEAT: &str = "finite-n estimate: the regularized limit is not computable; \
upper_on_efinf is the smallest computed E_f(rho^n)/n, which bounds the entanglement cost from above, \
and achievable_rate is E_f(rho), the cost of the typical-set formation protocol";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularizationEntry<T: Real> {
    pub n: usize,
    /// `E_f(ρ^⊗n)/n`.
    pub value: T,
    /// `E_f(ρ^⊗n)`.
    pub total: T,
    pub warm_started: bool,
    /// Whether a product warm start beat every optimizer start.
    pub warm_start_won: bool,
    pub converged: bool,
    pub ensemble_size: usize,
    #[serde(skip)]
    pub ensemble: Ensemble<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubadditivityCheck<T: Real> {
    pub n: usize,
    pub m: usize,
    /// `a_n + a_m - a_{n+m}` with `a_n = n·A_n`.
    pub gap: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularizationTrace<T: Real> {
    pub dims: (usize, usize),
    pub entries: Vec<RegularizationEntry<T>>,
    pub subadditivity_checks: Vec<SubadditivityCheck<T>>,
}

impl<T: Real> RegularizationTrace<T> {
    pub fn entry(&self, n: usize) -> Option<&RegularizationEntry<T>> {
        self.entries.iter().find(|e| e.n == n)
    }

    fn total(&self, n: usize) -> Result<T> {
        self.entry(n).map(|e| e.total).ok_or(Error::MissingEntry(n))
    }

    /// `log2 min(d_A, d_B)`, the per-copy ceiling on `A_n`.
    pub fn max_rate(&self) -> T {
        log2(T::from_usize_lossy(self.dims.0.min(self.dims.1)))
    }
}

/// Optimizer settings used on joint systems: the ensemble size defaults to
/// the rank instead of its square, and the cycle count is capped.
pub fn joint_settings(settings: &OptimizerSettings) -> OptimizerSettings {
    OptimizerSettings {
        max_cycles: settings.max_cycles.min(JOINT_MAX_CYCLES),
        ..settings.clone()
    }
}

/// Seeded search that only refines warm starts small enough for the
/// ensemble size; larger ones stay candidates at their exact value.
fn seeded_search<T: Real>(
    rho: &QuantumState<T>,
    warm: Vec<Ensemble<T>>,
    settings: &OptimizerSettings,
    rng: &mut RandomSource,
) -> Result<(EofResult<T>, bool)> {
    let rank = rho.rank();
    let size = settings.ensemble_size.unwrap_or(rank).max(rank);
    let (refined, frozen): (Vec<_>, Vec<_>) = warm.into_iter().partition(|e| e.len() <= size);
    let inner = OptimizerSettings {
        ensemble_size: Some(size),
        ..settings.clone()
    };
    let mut result = eof_optimize_seeded(rho, &inner, &refined, rng)?;
    let mut warm_won = false;
    for e in frozen {
        let v = e.average_entanglement();
        result.restart_values.push(v);
        let best = result.value_history.last().copied().unwrap_or(v).min(v);
        result.value_history.push(best);
        if v < result.value {
            result.value = v;
            result.ensemble = e;
            warm_won = true;
        }
    }
    let w = result.warm_starts;
    if !warm_won && w > 0 && result.restart_values.len() > w {
        let min = |vals: &[T]| {
            vals.iter()
                .copied()
                .fold(T::max_value().expect("bounded"), |a, b| a.min(b))
        };
        let random_end = (w + settings.restarts).min(result.restart_values.len());
        warm_won = min(&result.restart_values[..w]) <= min(&result.restart_values[w..random_end]);
    }
    Ok((result, warm_won))
}

fn check_cap(dims: (usize, usize), n: usize) -> Result<()> {
    let base = dims.0 * dims.1;
    let mut dim: usize = 1;
    for _ in 0..2 * n {
        dim = dim.saturating_mul(base);
    }
    if dim > REGCOST_DIMENSION_CAP {
        return Err(Error::DimensionCap {
            dim,
            cap: REGCOST_DIMENSION_CAP,
        });
    }
    Ok(())
}

/// Computes `A_n` for `n = 1..=n_max`. The search for `ρ^⊗n` is seeded with
/// `E_k ⊗ E_{n-k}` for every split, where `E_k` is the best ensemble kept
/// for `ρ^⊗k`; the `n = 1` search uses `settings` unchanged and the joint
/// searches use [`joint_settings`].
pub fn regularized_sequence<T: Real>(
    rho: &QuantumState<T>,
    n_max: usize,
    settings: &OptimizerSettings,
    rng: &mut RandomSource,
) -> Result<RegularizationTrace<T>> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    check_cap(rho.dims(), n_max)?;
    let joint = joint_settings(settings);
    let mut entries: Vec<RegularizationEntry<T>> = Vec::with_capacity(n_max);
    let mut power = rho.clone();
    for n in 1..=n_max {
        if n > 1 {
            power = power.kron(rho);
        }
        let mut child = rng.split();
        let (result, warm_won, warm_started) = if n == 1 {
            let r = eof_optimize_seeded(&power, settings, &[], &mut child)?;
            (r, false, false)
        } else {
            let warm: Vec<Ensemble<T>> = (1..=n / 2)
                .map(|k| entries[k - 1].ensemble.kron(&entries[n - k - 1].ensemble))
                .collect();
            let (r, won) = seeded_search(&power, warm, &joint, &mut child)?;
            (r, won, true)
        };
        let total = result.value;
        log::debug!("A_{n} = {}", total / T::from_usize_lossy(n));
        entries.push(RegularizationEntry {
            n,
            value: total / T::from_usize_lossy(n),
            total,
            warm_started,
            warm_start_won: warm_won,
            converged: result.converged,
            ensemble_size: result.ensemble.len(),
            ensemble: result.ensemble,
        });
    }
    let mut trace = RegularizationTrace {
        dims: rho.dims(),
        entries,
        subadditivity_checks: Vec::new(),
    };
    for n in 1..=n_max {
        for m in n..=n_max {
            if n + m > n_max {
                break;
            }
            let gap = trace.total(n)? + trace.total(m)? - trace.total(n + m)?;
            trace
                .subadditivity_checks
                .push(SubadditivityCheck { n, m, gap });
        }
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeketeReport<T: Real> {
    pub c: T,
    /// `a_n <= c·n` for every computed entry.
    pub linear_bound_holds: bool,
    pub checks: Vec<SubadditivityCheck<T>>,
    pub tolerance: T,
    /// `a_n + a_m >= a_{n+m} - tolerance` for every checked triple.
    pub subadditive: bool,
    pub holds: bool,
}

/// Checks the growth bound and subadditivity on every triple the trace
/// covers. `c` defaults to `log2 min(d_A, d_B)`.
pub fn fekete_check<T: Real>(
    trace: &RegularizationTrace<T>,
    c: Option<T>,
) -> Result<FeketeReport<T>> {
    let mut triples = Vec::new();
    let ns: Vec<usize> = trace.entries.iter().map(|e| e.n).collect();
    for &n in &ns {
        for &m in &ns {
            if n <= m && ns.contains(&(n + m)) {
                triples.push((n, m));
            }
        }
    }
    fekete_check_triples(trace, c, &triples)
}

/// Like [`fekete_check`] on the requested `(n, m)` pairs only.
pub fn fekete_check_triples<T: Real>(
    trace: &RegularizationTrace<T>,
    c: Option<T>,
    triples: &[(usize, usize)],
) -> Result<FeketeReport<T>> {
    let c = c.unwrap_or_else(|| trace.max_rate());
    let slack = T::tol(1e-9);
    let linear_bound_holds = trace
        .entries
        .iter()
        .all(|e| e.total <= c * T::from_usize_lossy(e.n) + slack);
    let mut checks = Vec::with_capacity(triples.len());
    for &(n, m) in triples {
        let gap = trace.total(n)? + trace.total(m)? - trace.total(n + m)?;
        checks.push(SubadditivityCheck { n, m, gap });
    }
    let tolerance = T::lit(OPTIMIZER_TOL);
    let subadditive = checks.iter().all(|t| t.gap >= -tolerance);
    Ok(FeketeReport {
        c,
        linear_bound_holds,
        checks,
        tolerance,
        subadditive,
        holds: linear_bound_holds && subadditive,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdditivityReport<T: Real> {
    pub eof_rho: T,
    pub eof_sigma: T,
    pub sum: T,
    pub joint: T,
    /// `sum - joint`; non-negative up to optimizer tolerance.
    pub gap: T,
    pub tolerance: T,
    /// Gap above the flag threshold: a candidate for non-additivity, not a
    /// proof of it, since `joint` is only an upper bound.
    pub flagged: bool,
}

/// Compares `E_f(ρ) + E_f(σ)` with `E_f(ρ⊗σ)`. The joint search is seeded
/// with the product of the two single-system ensembles.
pub fn additivity_probe<T: Real>(
    rho: &QuantumState<T>,
    sigma: &QuantumState<T>,
    settings: &OptimizerSettings,
    rng: &mut RandomSource,
) -> Result<AdditivityReport<T>> {
    let joint_dim = rho.dim() * sigma.dim();
    if joint_dim > crate::metrics::DIRECT_DIMENSION_CAP {
        return Err(Error::DimensionCap {
            dim: joint_dim,
            cap: crate::metrics::DIRECT_DIMENSION_CAP,
        });
    }
    let (mut r1, mut r2, mut r3) = (rng.split(), rng.split(), rng.split());
    let a = eof_optimize_seeded(rho, settings, &[], &mut r1)?;
    let b = eof_optimize_seeded(sigma, settings, &[], &mut r2)?;
    let product = rho.kron(sigma);
    let warm = vec![a.ensemble.kron(&b.ensemble)];
    let (joint, _) = seeded_search(&product, warm, &joint_settings(settings), &mut r3)?;
    let sum = a.value + b.value;
    let gap = sum - joint.value;
    Ok(AdditivityReport {
        eof_rho: a.value,
        eof_sigma: b.value,
        sum,
        joint: joint.value,
        gap,
        tolerance: T::lit(OPTIMIZER_TOL),
        flagged: gap > T::lit(NON_ADDITIVITY_FLAG),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostBracket<T: Real> {
    /// `min_n A_n` over computed entries.
    pub upper_on_efinf: T,
    pub argmin_n: usize,
    /// `A_1 = E_f(ρ)`.
    pub achievable_rate: T,
    pub n_max: usize,
    pub caveat: String,
}

/// Assembles the bracket from a computed trace.
pub fn cost_bracket<T: Real>(trace: &RegularizationTrace<T>) -> Result<CostBracket<T>> {
    let first = trace.entry(1).ok_or(Error::MissingEntry(1))?;
    let best = trace
        .entries
        .iter()
        .fold(first, |best, e| if e.value < best.value { e } else { best });
    Ok(CostBracket {
        upper_on_efinf: best.value,
        argmin_n: best.n,
        achievable_rate: first.value,
        n_max: trace.entries.iter().map(|e| e.n).max().unwrap_or(1),
        caveat: BRACKET_CAVEAT.to_string(),
    })
}

/// Runs [`regularized_sequence`] and assembles the bracket.
pub fn cost_bracket_for<T: Real>(
    rho: &QuantumState<T>,
    n_max: usize,
    settings: &OptimizerSettings,
    rng: &mut RandomSource,
) -> Result<(RegularizationTrace<T>, CostBracket<T>)> {
    let trace = regularized_sequence(rho, n_max, settings, rng)?;
    let bracket = cost_bracket(&trace)?;
    Ok((trace, bracket))
}
