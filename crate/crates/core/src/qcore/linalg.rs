//! Dense complex helpers on top of nalgebra.
//!
//! Bipartite indices are row-major with the A factor as the slow index:
//! `index = a * d_b + b`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::scalar::{cabs, creal, czero, Real, C};

pub type CMatrix<T> = DMatrix<C<T>>;
pub type CVector<T> = DVector<C<T>>;

/// Dense Householder reflection `I - 2 v v^dagger` from a fixed pattern.
fn reflection<T: Real>(n: usize, salt: usize) -> CMatrix<T> {
    let v = CVector::<T>::from_fn(n, |i, _| {
        let re = ((i * 7 + 3 + salt * 5) % 11) as f64 + 1.0;
        let im = ((i * 5 + 1 + salt * 3) % 13) as f64 - 6.0;
        crate::scalar::cplx(T::lit(re), T::lit(im))
    });
    let norm = creal(v.norm());
    let v = v.map(|z| z / norm);
    CMatrix::identity(n, n) - (&v * v.adjoint()) * creal(T::lit(2.0))
}

/// `SymmetricEigen` of the Hermitian part of `m`. The QR iteration can break
/// down into NaN on some sparse, highly degenerate inputs; those are retried
/// on a unitarily rotated copy, which has the same spectrum.
fn hermitian_eigen<T: Real>(m: &CMatrix<T>) -> SymmetricEigen<C<T>, nalgebra::Dyn> {
    let h = hermitian_part(m);
    let eig = SymmetricEigen::new(h.clone());
    let finite = |e: &SymmetricEigen<C<T>, nalgebra::Dyn>| {
        e.eigenvalues.iter().all(|v| v.is_finite())
            && e.eigenvectors
                .iter()
                .all(|z| z.re.is_finite() && z.im.is_finite())
    };
    if finite(&eig) {
        return eig;
    }
    for salt in 0..4 {
        let r = reflection::<T>(h.nrows(), salt);
        let mut e = SymmetricEigen::new(&r * &h * &r);
        if finite(&e) {
            e.eigenvectors = &r * &e.eigenvectors;
            return e;
        }
    }
    panic!("Hermitian eigendecomposition did not converge");
}

/// Hermitian eigendecomposition with eigenvalues sorted in decreasing order.
/// Columns of the returned matrix are the matching eigenvectors.
pub fn eigh<T: Real>(m: &CMatrix<T>) -> (Vec<T>, CMatrix<T>) {
    let n = m.nrows();
    let eig = hermitian_eigen(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Eigenvalues of a Hermitian matrix, decreasing.
pub fn eigvalsh<T: Real>(m: &CMatrix<T>) -> Vec<T> {
    let mut values: Vec<T> = match m.nrows() {
        0 => Vec::new(),
        1 => vec![m[(0, 0)].re],
        2 => eigvals_2x2(m[(0, 0)].re, m[(1, 1)].re, m[(0, 1)]).to_vec(),
        _ => hermitian_eigen(m).eigenvalues.iter().copied().collect(),
    };
    values.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    values
}

pub(crate) fn eigvals_2x2<T: Real>(a: T, d: T, off: C<T>) -> [T; 2] {
    let half = T::lit(0.5);
    let mean = (a + d) * half;
    let diff = (a - d) * half;
    let r = (diff * diff + off.norm_sqr()).sqrt();
    [mean + r, mean - r]
}

pub fn hermitian_part<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    let half = creal(T::lit(0.5));
    (m + m.adjoint()) * half
}

/// Largest entrywise modulus.
pub fn max_abs<T: Real>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(cabs(*z)))
}

pub fn max_abs_diff<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (x, y)| acc.max(cabs(*x - *y)))
}

pub fn trace<T: Real>(m: &CMatrix<T>) -> C<T> {
    (0..m.nrows()).fold(czero(), |acc, i| acc + m[(i, i)])
}

/// `V diag(f(lambda)) V^dagger` for a Hermitian input.
pub fn hermitian_map<T: Real>(m: &CMatrix<T>, f: impl Fn(T) -> T) -> CMatrix<T> {
    let (values, vectors) = eigh(m);
    let n = m.nrows();
    let mut scaled = vectors.clone();
    for (c, &v) in values.iter().enumerate() {
        let w = creal(f(v));
        for r in 0..n {
            scaled[(r, c)] *= w;
        }
    }
    scaled * vectors.adjoint()
}

/// Square root of a positive semidefinite matrix, clipping negative noise.
pub fn psd_sqrt<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    hermitian_map(m, |x| x.max(T::zero()).sqrt())
}

/// Tensor product of two bipartite operators, regrouped so that the result is
/// again bipartite with dims `(da1 * da2, db1 * db2)`.
pub fn bipartite_kron<T: Real>(
    m1: &CMatrix<T>,
    dims1: (usize, usize),
    m2: &CMatrix<T>,
    dims2: (usize, usize),
) -> CMatrix<T> {
    let (da1, db1) = dims1;
    let (da2, db2) = dims2;
    let db = db1 * db2;
    let n = da1 * da2 * db;
    let mut out = CMatrix::zeros(n, n);
    for a1 in 0..da1 {
        for b1 in 0..db1 {
            let r1 = a1 * db1 + b1;
            for c1 in 0..da1 {
                for d1 in 0..db1 {
                    let x = m1[(r1, c1 * db1 + d1)];
                    if x == czero() {
                        continue;
                    }
                    for a2 in 0..da2 {
                        for b2 in 0..db2 {
                            let r2 = a2 * db2 + b2;
                            let row = (a1 * da2 + a2) * db + b1 * db2 + b2;
                            for c2 in 0..da2 {
                                for d2 in 0..db2 {
                                    let col = (c1 * da2 + c2) * db + d1 * db2 + d2;
                                    out[(row, col)] = x * m2[(r2, c2 * db2 + d2)];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Vector counterpart of [`bipartite_kron`].
pub fn bipartite_kron_vec<T: Real>(
    v1: &CVector<T>,
    dims1: (usize, usize),
    v2: &CVector<T>,
    dims2: (usize, usize),
) -> CVector<T> {
    let (da1, db1) = dims1;
    let (da2, db2) = dims2;
    let db = db1 * db2;
    let mut out = CVector::zeros(da1 * da2 * db);
    for a1 in 0..da1 {
        for b1 in 0..db1 {
            let x = v1[a1 * db1 + b1];
            for a2 in 0..da2 {
                for b2 in 0..db2 {
                    out[(a1 * da2 + a2) * db + b1 * db2 + b2] = x * v2[a2 * db2 + b2];
                }
            }
        }
    }
    out
}

/// Local operator `A ⊗ B` on a bipartite space with A as the slow index.
pub fn local_product<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a.kronecker(b)
}

/// Reduced operator on A of the rank-one operator built from an unnormalized
/// vector: `M M^dagger` where `M[a, b] = v[a * d_b + b]`.
pub fn reduced_a_of_vector<T: Real>(v: &[C<T>], da: usize, db: usize) -> CMatrix<T> {
    let mut out = CMatrix::zeros(da, da);
    for a in 0..da {
        for c in a..da {
            let mut acc = czero();
            for b in 0..db {
                acc += v[a * db + b] * v[c * db + b].conj();
            }
            out[(a, c)] = acc;
            out[(c, a)] = acc.conj();
        }
    }
    out
}

/// Reduced operator on B of the rank-one operator built from `v`.
pub fn reduced_b_of_vector<T: Real>(v: &[C<T>], da: usize, db: usize) -> CMatrix<T> {
    let mut out = CMatrix::zeros(db, db);
    for b in 0..db {
        for d in b..db {
            let mut acc = czero();
            for a in 0..da {
                acc += v[a * db + b] * v[a * db + d].conj();
            }
            out[(b, d)] = acc;
            out[(d, b)] = acc.conj();
        }
    }
    out
}

/// Reduced operator on whichever factor is smaller; both share the nonzero
/// spectrum.
pub fn reduced_smaller_of_vector<T: Real>(v: &[C<T>], da: usize, db: usize) -> CMatrix<T> {
    if da <= db {
        reduced_a_of_vector(v, da, db)
    } else {
        reduced_b_of_vector(v, da, db)
    }
}

/// Outer product `|v><v|`.
pub fn outer<T: Real>(v: &CVector<T>) -> CMatrix<T> {
    v * v.adjoint()
}

/// Reorders the copies of an `n`-fold bipartite vector. Copy slot `t` of the
/// input moves to copy slot `perm[t]` of the output. Each copy has local dims
/// `(da, db)` and the vector uses the grouped ordering `A_1..A_n B_1..B_n`.
pub fn permute_copies<T: Real>(v: &CVector<T>, da: usize, db: usize, perm: &[usize]) -> CVector<T> {
    let n = perm.len();
    let big_db = db.pow(n as u32);
    let mut out = CVector::zeros(v.len());
    let mut a_digits = vec![0usize; n];
    let mut b_digits = vec![0usize; n];
    for (idx, x) in v.iter().enumerate() {
        let (mut a_idx, mut b_idx) = (idx / big_db, idx % big_db);
        for t in (0..n).rev() {
            a_digits[t] = a_idx % da;
            a_idx /= da;
            b_digits[t] = b_idx % db;
            b_idx /= db;
        }
        let (mut a_out, mut b_out) = (0usize, 0usize);
        let mut a_new = vec![0usize; n];
        let mut b_new = vec![0usize; n];
        for t in 0..n {
            a_new[perm[t]] = a_digits[t];
            b_new[perm[t]] = b_digits[t];
        }
        for t in 0..n {
            a_out = a_out * da + a_new[t];
            b_out = b_out * db + b_new[t];
        }
        out[a_out * big_db + b_out] = *x;
    }
    out
}

/// `V sqrt(Λ)` restricted to the numerically nonzero eigenvalues of a
/// positive semidefinite matrix, so that `a ≈ F F^dagger` with `F` of shape
/// `n x rank`.
pub fn support_factor<T: Real>(a: &CMatrix<T>) -> CMatrix<T> {
    let (values, vectors) = eigh(a);
    let n = a.nrows();
    let top = values.first().copied().unwrap_or(T::zero()).max(T::zero());
    let cutoff = top * T::default_epsilon() * T::from_usize_lossy(4 * n.max(1));
    let support: Vec<usize> = (0..n).filter(|&k| values[k] > cutoff).collect();
    CMatrix::from_fn(n, support.len(), |r, c| {
        vectors[(r, support[c])] * creal(values[support[c]].sqrt())
    })
}
