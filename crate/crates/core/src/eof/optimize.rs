//! Ensemble search for the entanglement of formation.
//!
//! Every size-`L` ensemble of a rank-`r` state `ρ = Σ_k λ_k |e_k><e_k|` is
//! `ψ̃_i = Σ_k U_ik sqrt(λ_k) |e_k>` for an `L x r` isometry `U`, with
//! `p_i = |ψ̃_i|^2`. The search keeps the unnormalized rows `ψ̃_i` directly:
//! a unitary rotation of two rows is a left multiplication of `U` by a
//! unitary, so every iterate is a valid ensemble of `ρ`.
//!
//! Each start runs cyclic sweeps over row pairs and the two off-diagonal
//! generators of `su(2)`, minimizing the objective along each rotation angle
//! with a grid bracket followed by golden-section refinement.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qcore::linalg::CVector;
use crate::qcore::linalg::{eigvals_2x2, eigvalsh, max_abs_diff, reduced_smaller_of_vector};
use crate::qcore::random::random_isometry;
use crate::qcore::{
    ensemble_average, Ensemble, PureState, QuantumState, RandomSource, PRUNE_FLOOR,
};
use crate::scalar::{cplx, creal, czero, eta, log2, Real, C};

/// Deviation allowed between a warm-start ensemble's average and the target.
pub const WARM_START_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerSettings {
    /// Ensemble size `L`; `None` selects `r^2` capped at `(d_A d_B)^2`.
    pub ensemble_size: Option<usize>,
    /// Number of random starts, in addition to any warm starts.
    pub restarts: usize,
    /// A sweep improving the objective by less than this ends a start.
    pub tol: f64,
    pub max_cycles: usize,
    /// Grid points used to bracket each line search.
    pub grid_points: usize,
    pub parallel: bool,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            ensemble_size: None,
            restarts: 8,
            tol: 1e-6,
            max_cycles: 500,
            grid_points: 12,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EofResult<T: Real> {
    /// `Σ p_i E(ψ_i)` of `ensemble`, in ebits.
    pub value: T,
    pub ensemble: Ensemble<T>,
    pub rank: usize,
    pub ensemble_size: usize,
    pub warm_starts: usize,
    pub restarts_used: usize,
    /// Every start ended on the improvement threshold rather than the cycle cap.
    pub converged: bool,
    pub total_cycles: usize,
    /// Final value of each start, in start order (warm starts first).
    pub restart_values: Vec<T>,
    /// Running minimum of `restart_values`.
    pub value_history: Vec<T>,
}

/// Squared norms below this count as an empty row.
fn tiny<T: Real>() -> T {
    T::default_epsilon() * T::default_epsilon()
}

/// Default ensemble size for a rank-`r` state on total dimension `d`.
pub fn default_ensemble_size(rank: usize, dim: usize) -> usize {
    (rank * rank).min(dim * dim).max(rank)
}

/// Contribution `|w|^2 E(w / |w|)` of one unnormalized ensemble row.
fn row_term<T: Real>(row: &[C<T>], da: usize, db: usize) -> T {
    let norm2 = row.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
    if norm2 <= tiny::<T>() {
        return T::zero();
    }
    let small = da.min(db);
    if small == 1 {
        return T::zero();
    }
    let gram = reduced_smaller_of_vector(row, da, db);
    let sum = if small == 2 {
        let [a, b] = eigvals_2x2(gram[(0, 0)].re, gram[(1, 1)].re, gram[(0, 1)]);
        eta(a) + eta(b.max(T::zero()))
    } else {
        eigvalsh(&gram)
            .into_iter()
            .fold(T::zero(), |acc, v| acc + eta(v.max(T::zero())))
    };
    // -Σ μ log μ + |w|^2 log |w|^2 with μ the unnormalized Schmidt weights
    (sum + norm2 * log2(norm2)).max(T::zero())
}

#[derive(Clone, Copy)]
enum Generator {
    Real,
    Imag,
}

struct Search<T: Real> {
    da: usize,
    db: usize,
    rows: Vec<Vec<C<T>>>,
    terms: Vec<T>,
}

impl<T: Real> Search<T> {
    fn new(rows: Vec<Vec<C<T>>>, dims: (usize, usize)) -> Self {
        let terms = rows.iter().map(|r| row_term(r, dims.0, dims.1)).collect();
        Self {
            da: dims.0,
            db: dims.1,
            rows,
            terms,
        }
    }

    fn value(&self) -> T {
        self.terms.iter().fold(T::zero(), |a, b| a + *b)
    }

    fn rotate(
        a: &[C<T>],
        b: &[C<T>],
        theta: T,
        g: Generator,
        out_a: &mut [C<T>],
        out_b: &mut [C<T>],
    ) {
        let (s, c) = (theta.sin(), theta.cos());
        match g {
            Generator::Real => {
                for k in 0..a.len() {
                    out_a[k] = a[k] * creal(c) - b[k] * creal(s);
                    out_b[k] = a[k] * creal(s) + b[k] * creal(c);
                }
            }
            Generator::Imag => {
                let is = cplx(T::zero(), s);
                for k in 0..a.len() {
                    out_a[k] = a[k] * creal(c) + b[k] * is;
                    out_b[k] = a[k] * is + b[k] * creal(c);
                }
            }
        }
    }

    /// Minimizes along one rotation; returns the improvement applied.
    fn line_search(&mut self, i: usize, j: usize, g: Generator, grid: usize) -> T {
        let (da, db) = (self.da, self.db);
        let a = self.rows[i].clone();
        let b = self.rows[j].clone();
        let mut buf_a = vec![czero(); a.len()];
        let mut buf_b = vec![czero(); a.len()];
        let mut eval = |theta: T| -> T {
            Self::rotate(&a, &b, theta, g, &mut buf_a, &mut buf_b);
            row_term(&buf_a, da, db) + row_term(&buf_b, da, db)
        };
        let h0 = self.terms[i] + self.terms[j];
        let pi = T::pi();
        let step = pi / T::from_usize_lossy(grid);
        let half_pi = pi * T::lit(0.5);
        let (mut best_theta, mut best_val) = (T::zero(), h0);
        for m in 0..grid {
            let theta = -half_pi + step * T::from_usize_lossy(m);
            if theta == T::zero() {
                continue;
            }
            let v = eval(theta);
            if v < best_val {
                best_val = v;
                best_theta = theta;
            }
        }
        // golden-section refinement inside the bracketing cell pair
        let inv_phi = T::lit(0.618_033_988_749_894_8);
        let (mut lo, mut hi) = (best_theta - step, best_theta + step);
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let (mut f1, mut f2) = (eval(x1), eval(x2));
        let tol = T::lit(1e-9);
        while hi - lo > tol {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = eval(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = eval(x2);
            }
        }
        let (theta, v) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
        let (theta, v) = if v < best_val {
            (theta, v)
        } else {
            (best_theta, best_val)
        };
        if !(v < h0) || theta == T::zero() {
            return T::zero();
        }
        let (mut na, mut nb) = (vec![czero(); a.len()], vec![czero(); a.len()]);
        Self::rotate(&a, &b, theta, g, &mut na, &mut nb);
        let (ta, tb) = (row_term(&na, da, db), row_term(&nb, da, db));
        if ta + tb >= h0 {
            return T::zero();
        }
        self.rows[i] = na;
        self.rows[j] = nb;
        self.terms[i] = ta;
        self.terms[j] = tb;
        h0 - ta - tb
    }

    fn is_zero(&self, i: usize) -> bool {
        self.rows[i].iter().all(|z| z.norm_sqr() <= tiny::<T>())
    }

    /// Runs sweeps until the improvement threshold or the cycle cap; returns
    /// `(converged, cycles)`.
    fn run(&mut self, settings: &OptimizerSettings) -> (bool, usize) {
        let l = self.rows.len();
        let tol = T::lit(settings.tol);
        for cycle in 1..=settings.max_cycles {
            let before = self.value();
            for i in 0..l {
                for j in (i + 1)..l {
                    if self.is_zero(i) || self.is_zero(j) {
                        continue;
                    }
                    self.line_search(i, j, Generator::Real, settings.grid_points);
                    self.line_search(i, j, Generator::Imag, settings.grid_points);
                }
            }
            if before - self.value() < tol {
                return (true, cycle);
            }
        }
        (false, settings.max_cycles)
    }

    fn into_ensemble(self) -> Ensemble<T> {
        let dims = (self.da, self.db);
        let floor = T::lit(PRUNE_FLOOR);
        let mut weights = Vec::new();
        let mut states = Vec::new();
        for row in self.rows {
            let norm2 = row.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
            if norm2 < floor {
                continue;
            }
            let v = CVector::from_vec(row);
            weights.push(norm2);
            states.push(PureState::normalized(dims, v).expect("nonzero row"));
        }
        Ensemble::pruned(weights, states, 0.0)
    }
}

/// Rows `ψ̃_i = sqrt(p_i) ψ_i` of an ensemble, padded with zero rows to `len`.
fn ensemble_rows<T: Real>(e: &Ensemble<T>, len: usize) -> Vec<Vec<C<T>>> {
    let d = e.dims().0 * e.dims().1;
    let mut rows: Vec<Vec<C<T>>> = e
        .iter()
        .map(|(p, s)| s.vector().iter().map(|z| *z * creal(p.sqrt())).collect())
        .collect();
    rows.resize(len.max(rows.len()), vec![czero(); d]);
    rows
}

/// Minimizes `Σ p_i E(ψ_i)` over ensembles of `ρ` from random starts.
pub fn eof_optimize<T: Real>(
    rho: &QuantumState<T>,
    settings: &OptimizerSettings,
    rng: &mut RandomSource,
) -> Result<EofResult<T>> {
    eof_optimize_seeded(rho, settings, &[], rng)
}

/// Like [`eof_optimize`], additionally starting from each ensemble in
/// `warm_starts`. The result never exceeds the best warm-start value.
pub fn eof_optimize_seeded<T: Real>(
    rho: &QuantumState<T>,
    settings: &OptimizerSettings,
    warm_starts: &[Ensemble<T>],
    rng: &mut RandomSource,
) -> Result<EofResult<T>> {
    let dims = rho.dims();
    let d = rho.dim();
    let (values, vectors) = rho.eigen();
    let cutoff = T::tol(crate::qcore::RANK_TOL);
    let support: Vec<usize> = (0..d).filter(|&k| values[k] > cutoff).collect();
    let rank = support.len();
    let size = settings
        .ensemble_size
        .unwrap_or_else(|| default_ensemble_size(rank, d));
    if size < rank {
        return Err(Error::EnsembleTooSmall { size, rank });
    }
    if settings.restarts == 0 && warm_starts.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one restart is required".into(),
        ));
    }
    for w in warm_starts {
        if w.dims() != dims {
            return Err(Error::DimensionMismatch(format!(
                "warm start dims {:?}, state dims {dims:?}",
                w.dims()
            )));
        }
        let dev = max_abs_diff(ensemble_average(w).matrix(), rho.matrix());
        if dev > T::lit(WARM_START_TOL) {
            return Err(Error::EnsembleMismatch(dev.to_f64_lossy()));
        }
    }

    if rank == 1 {
        let top = vectors.column(support[0]).into_owned();
        let psi = PureState::normalized(dims, top).expect("unit eigenvector");
        let ensemble = Ensemble::singleton(psi);
        let value = ensemble.average_entanglement();
        return Ok(EofResult {
            value,
            ensemble,
            rank,
            ensemble_size: 1,
            warm_starts: warm_starts.len(),
            restarts_used: 0,
            converged: true,
            total_cycles: 0,
            restart_values: vec![value],
            value_history: vec![value],
        });
    }

    // scaled eigenvectors sqrt(λ_k) e_k as the rows of V
    let scaled: Vec<Vec<C<T>>> = support
        .iter()
        .map(|&k| {
            let s = creal(values[k].sqrt());
            (0..d).map(|r| vectors[(r, k)] * s).collect()
        })
        .collect();

    let mut starts: Vec<Vec<Vec<C<T>>>> =
        warm_starts.iter().map(|w| ensemble_rows(w, size)).collect();
    for mut child in rng.split_n(settings.restarts) {
        let u = random_isometry::<T>(size, rank, &mut child);
        let rows = (0..size)
            .map(|i| {
                let mut row = vec![czero(); d];
                for (k, v) in scaled.iter().enumerate() {
                    let c = u[(i, k)];
                    for (x, y) in row.iter_mut().zip(v) {
                        *x += c * *y;
                    }
                }
                row
            })
            .collect();
        starts.push(rows);
    }

    let run = |rows: Vec<Vec<C<T>>>| {
        let mut search = Search::new(rows, dims);
        let (converged, cycles) = search.run(settings);
        (search.value(), converged, cycles, search)
    };
    let outcomes: Vec<_> = if settings.parallel {
        starts.into_par_iter().map(run).collect()
    } else {
        starts.into_iter().map(run).collect()
    };

    let restart_values: Vec<T> = outcomes.iter().map(|o| o.0).collect();
    let mut value_history = Vec::with_capacity(restart_values.len());
    let mut best_so_far = T::max_value().expect("bounded scalar");
    for v in &restart_values {
        best_so_far = best_so_far.min(*v);
        value_history.push(best_so_far);
    }
    let converged = outcomes.iter().all(|o| o.1);
    let total_cycles = outcomes.iter().map(|o| o.2).sum();
    let best = outcomes
        .into_iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(ia.cmp(ib))
        })
        .map(|(_, o)| o.3)
        .expect("at least one start");
    let ensemble = best.into_ensemble();
    let value = ensemble.average_entanglement();
    Ok(EofResult {
        value,
        ensemble_size: size,
        ensemble,
        rank,
        warm_starts: warm_starts.len(),
        restarts_used: settings.restarts,
        converged,
        total_cycles,
        restart_values,
        value_history,
    })
}
