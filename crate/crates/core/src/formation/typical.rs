//! Strongly typical sets of index sequences.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{log2, Real};

/// Largest `k^n` the explicit enumeration will walk.
pub const ENUMERATION_CAP: u128 = 10_000_000;

/// Slack when converting a real count window to integers.
const WINDOW_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    /// `|c_i - p_i n| <= δ1 n |log_{p_i} 2| / k`, which puts every sequence
    /// weight inside `2^{-n(H ± δ1)}`.
    #[default]
    Paper,
    /// `|c_i - p_i n| <= δ1 n`; the weight bounds widen to
    /// `2^{-n(H ± δ1 Σ|log2 p_i|)}`.
    Plain,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeClass<T: Real> {
    pub counts: Vec<usize>,
    /// Number of sequences with these counts.
    pub multiplicity: u128,
    /// Weight `Π p_i^{c_i}` of each such sequence.
    pub weight: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypicalSequence<T: Real> {
    pub indices: Vec<usize>,
    pub weight: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypicalSet<T: Real> {
    pub n: usize,
    pub delta1: T,
    pub k: usize,
    pub window: Window,
    pub probabilities: Vec<T>,
    /// Admissible integer counts `lo..=hi` per index.
    pub count_ranges: Vec<(usize, usize)>,
    pub types: Vec<TypeClass<T>>,
    /// Explicit sequences; empty unless built by [`typical_set`].
    pub sequences: Vec<TypicalSequence<T>>,
    pub total_weight: T,
    /// `H(p)` in bits.
    pub entropy: T,
    /// Exponent slack `s` in the bounds `2^{-n(H ± s)}`.
    pub slack: T,
    pub bounds: (T, T),
}

impl<T: Real> TypicalSet<T> {
    pub fn sequence_count(&self) -> u128 {
        self.types.iter().map(|t| t.multiplicity).sum()
    }

    /// Largest count of each index over the set.
    pub fn max_counts(&self) -> Vec<usize> {
        let mut out = vec![0; self.k];
        for t in &self.types {
            for (o, c) in out.iter_mut().zip(&t.counts) {
                *o = (*o).max(*c);
            }
        }
        out
    }

    /// Whether `weight` lies within the AEP bounds, up to relative rounding.
    pub fn within_bounds(&self, weight: T) -> bool {
        let tol = T::one() + T::tol(1e-12);
        weight * tol >= self.bounds.0 && weight <= self.bounds.1 * tol
    }

    /// The single all-zero sequence for a one-element ensemble.
    pub(crate) fn trivial(n: usize) -> Self {
        Self {
            n,
            delta1: T::zero(),
            k: 1,
            window: Window::Paper,
            probabilities: vec![T::one()],
            count_ranges: vec![(n, n)],
            types: vec![TypeClass {
                counts: vec![n],
                multiplicity: 1,
                weight: T::one(),
            }],
            sequences: vec![TypicalSequence {
                indices: vec![0; n],
                weight: T::one(),
            }],
            total_weight: T::one(),
            entropy: T::zero(),
            slack: T::zero(),
            bounds: (T::one(), T::one()),
        }
    }
}

/// `n! / Π c_i!`, or `None` on overflow.
pub(crate) fn multinomial(counts: &[usize]) -> Option<u128> {
    let mut out: u128 = 1;
    let mut total: u128 = 0;
    for &c in counts {
        for j in 1..=c as u128 {
            total += 1;
            out = out.checked_mul(total)? / j;
        }
    }
    Some(out)
}

/// All `k`-part compositions of `n` with part `i` inside `ranges[i]`.
pub(crate) fn compositions(n: usize, ranges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    fn go(rest: usize, ranges: &[(usize, usize)], cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let i = cur.len();
        if i + 1 == ranges.len() {
            if (ranges[i].0..=ranges[i].1).contains(&rest) {
                cur.push(rest);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        let (lo, hi) = ranges[i];
        for c in lo..=hi.min(rest) {
            cur.push(c);
            go(rest - c, ranges, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if !ranges.is_empty() {
        go(n, ranges, &mut Vec::with_capacity(ranges.len()), &mut out);
    }
    out
}

fn validate<T: Real>(p: &[T], n: usize, delta1: T) -> Result<()> {
    if p.is_empty() || n == 0 {
        return Err(Error::InvalidArgument(
            "need at least one index and one copy".into(),
        ));
    }
    if !(delta1 > T::zero()) {
        return Err(Error::InvalidArgument("delta1 must be positive".into()));
    }
    if p.iter().any(|x| *x >= T::one()) {
        return Err(Error::Degenerate(
            "a probability equals 1; use the pure-state path".into(),
        ));
    }
    if p.iter().any(|x| !(*x > T::zero())) {
        return Err(Error::InvalidArgument(
            "probabilities must be positive".into(),
        ));
    }
    let sum = p.iter().fold(T::zero(), |a, b| a + *b);
    if (sum - T::one()).abs() > T::tol(1e-9) {
        return Err(Error::NotNormalized(sum.to_f64_lossy()));
    }
    Ok(())
}

/// Typical types without enumerating sequences.
pub fn typical_types<T: Real>(
    p: &[T],
    n: usize,
    delta1: T,
    window: Window,
) -> Result<TypicalSet<T>> {
    validate(p, n, delta1)?;
    let k = p.len();
    let nf = T::from_usize_lossy(n);
    let kf = T::from_usize_lossy(k);
    let eps = T::lit(WINDOW_EPS);
    let count_ranges: Vec<(usize, usize)> = p
        .iter()
        .map(|&pi| {
            let half = match window {
                Window::Paper => delta1 * nf / (kf * log2(pi).abs()),
                Window::Plain => delta1 * nf,
            };
            let lo = (pi * nf - half - eps).ceil().max(T::zero());
            let hi = (pi * nf + half + eps).floor().min(nf);
            let lo = lo.to_f64_lossy() as usize;
            let hi = hi.to_f64_lossy() as usize;
            (lo, hi)
        })
        .collect();
    let ranges_ok = count_ranges.iter().all(|(lo, hi)| lo <= hi);
    let mut types = Vec::new();
    if ranges_ok {
        for counts in compositions(n, &count_ranges) {
            let weight = counts
                .iter()
                .zip(p)
                .fold(T::one(), |acc, (&c, &pi)| acc * pi.powi(c as i32));
            let multiplicity = multinomial(&counts).ok_or(Error::EnumerationTooLarge(u128::MAX))?;
            types.push(TypeClass {
                counts,
                multiplicity,
                weight,
            });
        }
    }
    let total_weight = types.iter().fold(T::zero(), |acc, t| {
        acc + T::lit(t.multiplicity as f64) * t.weight
    });
    let entropy = p.iter().fold(T::zero(), |acc, &x| acc - x * log2(x));
    let slack = match window {
        Window::Paper => delta1,
        Window::Plain => delta1 * p.iter().fold(T::zero(), |acc, &x| acc + log2(x).abs()),
    };
    let two = T::lit(2.0);
    let bounds = (
        two.powf(-nf * (entropy + slack)),
        two.powf(-nf * (entropy - slack)),
    );
    Ok(TypicalSet {
        n,
        delta1,
        k,
        window,
        probabilities: p.to_vec(),
        count_ranges,
        types,
        sequences: Vec::new(),
        total_weight,
        entropy,
        slack,
        bounds,
    })
}

/// Enumerates every length-`n` index sequence whose counts fall in the
/// window, in lexicographic order.
pub fn typical_set<T: Real>(p: &[T], n: usize, delta1: T, window: Window) -> Result<TypicalSet<T>> {
    let mut set = typical_types(p, n, delta1, window)?;
    let k = p.len();
    let total = (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if total > ENUMERATION_CAP {
        return Err(Error::EnumerationTooLarge(total));
    }
    let mut indices = vec![0usize; n];
    let mut counts = vec![0usize; k];
    let mut sequences = Vec::new();
    for _ in 0..total {
        counts.iter_mut().for_each(|c| *c = 0);
        for &i in &indices {
            counts[i] += 1;
        }
        if counts
            .iter()
            .zip(&set.count_ranges)
            .all(|(c, (lo, hi))| lo <= c && c <= hi)
        {
            let weight = indices.iter().fold(T::one(), |acc, &i| acc * p[i]);
            sequences.push(TypicalSequence {
                indices: indices.clone(),
                weight,
            });
        }
        // odometer increment, last position fastest
        for pos in (0..n).rev() {
            indices[pos] += 1;
            if indices[pos] < k {
                break;
            }
            indices[pos] = 0;
        }
    }
    set.total_weight = sequences.iter().fold(T::zero(), |acc, s| acc + s.weight);
    set.sequences = sequences;
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::binary_entropy;

    #[test]
    fn wide_window_admits_everything() {
        let s = typical_set(&[0.5f64, 0.5], 4, 1.0, Window::Paper).unwrap();
        assert_eq!(s.sequences.len(), 16);
        assert!((s.total_weight - 1.0).abs() < 1e-12);
    }

    #[test]
    fn narrow_window_matches_brute_force() {
        // half-width 2·δ1 = 1 around 2 admits counts 1, 2, 3
        let s = typical_set(&[0.5f64, 0.5], 4, 0.5, Window::Paper).unwrap();
        assert_eq!(s.count_ranges, vec![(1, 3), (1, 3)]);
        let mut brute = 0.0;
        for bits in 0u32..16 {
            let ones = bits.count_ones();
            if (1..=3).contains(&ones) {
                brute += 1.0 / 16.0;
            }
        }
        assert!((s.total_weight - brute).abs() < 1e-12);
        assert!((s.total_weight - 14.0 / 16.0).abs() < 1e-12);
        assert_eq!(s.sequence_count(), 14);
    }

    #[test]
    fn weights_respect_aep_bounds() {
        let p = [0.7, 0.3];
        let s = typical_set(&p, 6, 0.2, Window::Paper).unwrap();
        let h = binary_entropy(0.7);
        let (lo, hi) = (2f64.powf(-6.0 * (h + 0.2)), 2f64.powf(-6.0 * (h - 0.2)));
        assert!(!s.sequences.is_empty());
        for seq in &s.sequences {
            let direct: f64 = seq.indices.iter().map(|&i| p[i]).product();
            assert!((direct - seq.weight).abs() < 1e-15);
            assert!(
                direct >= lo * (1.0 - 1e-12) && direct <= hi * (1.0 + 1e-12),
                "{seq:?}"
            );
        }
        // outward rounding would have admitted the (3, 3) type, which lies below the lower bound
        assert!(s
            .sequences
            .iter()
            .all(|q| q.indices.iter().filter(|&&i| i == 0).count() != 3));
        assert!(0.7f64.powi(3) * 0.3f64.powi(3) < lo);
    }

    #[test]
    fn plain_window_uses_effective_slack() {
        let p = [0.6, 0.3, 0.1];
        let s = typical_set(&p, 5, 0.1, Window::Plain).unwrap();
        let slack: f64 = 0.1 * p.iter().map(|x: &f64| x.log2().abs()).sum::<f64>();
        assert!((s.slack - slack).abs() < 1e-15);
        for seq in &s.sequences {
            assert!(s.within_bounds(seq.weight));
        }
    }

    #[test]
    fn types_agree_with_enumeration() {
        let p = [0.5f64, 0.25, 0.25];
        let s = typical_set(&p, 6, 0.3, Window::Paper).unwrap();
        let t = typical_types(&p, 6, 0.3, Window::Paper).unwrap();
        assert_eq!(s.sequences.len() as u128, t.sequence_count());
        assert!((s.total_weight - t.total_weight).abs() < 1e-12);
        assert_eq!(s.max_counts(), t.max_counts());
    }

    #[test]
    fn errors() {
        assert!(matches!(
            typical_set(&[1.0], 3, 0.1, Window::Paper),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            typical_set(&[0.5, 0.5], 30, 0.1, Window::Paper),
            Err(Error::EnumerationTooLarge(_))
        ));
        assert!(typical_set(&[0.5, 0.4], 3, 0.1, Window::Paper).is_err());
        assert!(typical_types(&[0.5, 0.5], 30, 0.1, Window::Paper).is_ok());
    }

    #[test]
    fn multinomial_values() {
        assert_eq!(multinomial(&[2, 2]), Some(6));
        assert_eq!(multinomial(&[1, 2, 3]), Some(60));
        assert_eq!(compositions(3, &[(0, 3), (0, 3)]).len(), 4);
    }
}
