//! Small dense linear algebra: symmetric eigendecomposition and LU solves.
//!
//! Hand-rolled (Householder tridiagonalization + implicit-shift QL, partial
//! pivoting) so the whole crate stays generic over the scalar type. Problem
//! sizes here are modest: ion-chain Hessians are N ≤ 20 and the largest
//! gauge-model Hamiltonians are 2^13.

use crate::scalar::{fl, Scalar};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinalgError {
    #[error("eigensolver failed to converge after {0} QL iterations")]
    NoConvergence(usize),
    #[error("singular matrix in linear solve (pivot column {0})")]
    SingularMatrix(usize),
}

/// Eigendecomposition of a real symmetric matrix.
///
/// `values` are ascending; eigenvector `j` is the contiguous row
/// `vectors[j*n .. (j+1)*n]`.
#[derive(Debug, Clone)]
pub struct SymEigen<T> {
    pub values: Vec<T>,
    pub vectors: Vec<T>,
    pub n: usize,
}

impl<T: Scalar> SymEigen<T> {
    pub fn vector(&self, j: usize) -> &[T] {
        &self.vectors[j * self.n..(j + 1) * self.n]
    }
}

/// Diagonalize a symmetric matrix given in row-major order.
///
/// Only the content, not the storage, is assumed symmetric; the lower
/// triangle is read.
pub fn eigh<T: Scalar>(matrix: &[T], n: usize) -> Result<SymEigen<T>, LinalgError> {
    assert_eq!(matrix.len(), n * n, "matrix must be n x n");
    if n == 0 {
        return Ok(SymEigen { values: vec![], vectors: vec![], n });
    }
    let mut a = matrix.to_vec();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(&mut a, n, &mut d, &mut e);

    // Work on the transpose so QL rotations touch contiguous rows.
    let mut zt = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            zt[j * n + i] = a[i * n + j];
        }
    }
    tqli(&mut d, &mut e, n, &mut zt)?;

    // Ascending eigenvalue order with the permutation applied to rows.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).expect("non-finite eigenvalue"));
    let mut values = Vec::with_capacity(n);
    let mut vectors = vec![T::zero(); n * n];
    for (row, &k) in order.iter().enumerate() {
        values.push(d[k]);
        vectors[row * n..(row + 1) * n].copy_from_slice(&zt[k * n..(k + 1) * n]);
    }
    Ok(SymEigen { values, vectors, n })
}

/// Householder reduction to tridiagonal form with accumulated transform.
///
/// On exit `a` holds the orthogonal matrix Q (Qᵀ A Q tridiagonal), `d` the
/// diagonal and `e[1..]` the subdiagonal.
fn tred2<T: Scalar>(a: &mut [T], n: usize, d: &mut [T], e: &mut [T]) {
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = T::zero();
        if l > 0 {
            let mut scale = T::zero();
            for k in 0..=l {
                scale += a[i * n + k].abs();
            }
            if scale == T::zero() {
                e[i] = a[i * n + l];
            } else {
                for k in 0..=l {
                    a[i * n + k] = a[i * n + k] / scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l];
                let g = if f >= T::zero() { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                let mut fa = T::zero();
                for j in 0..=l {
                    a[j * n + i] = a[i * n + j] / h;
                    let mut ga = T::zero();
                    for k in 0..=j {
                        ga += a[j * n + k] * a[i * n + k];
                    }
                    for k in (j + 1)..=l {
                        ga += a[k * n + j] * a[i * n + k];
                    }
                    e[j] = ga / h;
                    fa += e[j] * a[i * n + j];
                }
                let hh = fa / (h + h);
                for j in 0..=l {
                    let f = a[i * n + j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[j * n + k] = a[j * n + k] - (f * e[k] + g * a[i * n + k]);
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    d[0] = T::zero();
    e[0] = T::zero();
    for i in 0..n {
        if d[i] != T::zero() {
            for j in 0..i {
                let mut g = T::zero();
                for k in 0..i {
                    g += a[i * n + k] * a[k * n + j];
                }
                for k in 0..i {
                    a[k * n + j] = a[k * n + j] - g * a[k * n + i];
                }
            }
        }
        d[i] = a[i * n + i];
        a[i * n + i] = T::one();
        for j in 0..i {
            a[j * n + i] = T::zero();
            a[i * n + j] = T::zero();
        }
    }
}

/// Implicit-shift QL on a tridiagonal matrix, rotating rows of `zt`.
///
/// Eigenvector k ends up in row k of `zt`. The deflation test carries an
/// absolute floor at ε·‖T‖ so blocks of (near-)zero diagonal entries —
/// common for constrained spin models with large null spaces — still
/// deflate; this keeps the decomposition backward stable.
fn tqli<T: Scalar>(d: &mut [T], e: &mut [T], n: usize, zt: &mut [T]) -> Result<(), LinalgError> {
    const MAX_ITER: usize = 50;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    let scale = d
        .iter()
        .chain(e.iter())
        .fold(T::zero(), |m, x| m.max(x.abs()));
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * (dd + scale) {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_ITER {
                return Err(LinalgError::NoConvergence(MAX_ITER));
            }
            let mut g = (d[l + 1] - d[l]) / (fl::<T>(2.0) * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + r.abs().copysign(g));
            let mut s = T::one();
            let mut c = T::one();
            let mut p = T::zero();
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + fl::<T>(2.0) * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let (lo, hi) = zt.split_at_mut((i + 1) * n);
                let row_i = &mut lo[i * n..(i + 1) * n];
                let row_i1 = &mut hi[..n];
                for k in 0..n {
                    f = row_i1[k];
                    row_i1[k] = s * row_i[k] + c * f;
                    row_i[k] = c * row_i[k] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(())
}

/// Solve `a x = b` in place by LU with partial pivoting; `b` becomes `x`.
pub fn solve_in_place<T: Scalar>(a: &mut [T], b: &mut [T], n: usize) -> Result<(), LinalgError> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[col * n + col].abs();
        for row in (col + 1)..n {
            let v = a[row * n + col].abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best == T::zero() {
            return Err(LinalgError::SingularMatrix(col));
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let inv = T::one() / a[col * n + col];
        for row in (col + 1)..n {
            let factor = a[row * n + col] * inv;
            if factor != T::zero() {
                for k in col..n {
                    let upd = a[col * n + k] * factor;
                    a[row * n + k] = a[row * n + k] - upd;
                }
                b[row] = b[row] - factor * b[col];
            }
        }
    }
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc = acc - a[row * n + k] * b[k];
        }
        b[row] = acc / a[row * n + row];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn max_abs(xs: impl IntoIterator<Item = f64>) -> f64 {
        xs.into_iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn two_by_two_analytic() {
        let a: Vec<f64> = vec![2.0, 1.0, 1.0, 2.0];
        let eig = eigh(&a, 2).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 3.0).abs() < 1e-14);
        let v1 = eig.vector(1);
        assert!((v1[0].abs() - 1.0 / 2f64.sqrt()).abs() < 1e-14);
        assert!((v1[0] - v1[1]).abs() < 1e-14);
    }

    #[test]
    fn diagonal_matrix_passes_through() {
        let a: Vec<f64> = vec![3.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 7.0];
        let eig = eigh(&a, 3).unwrap();
        assert_eq!(eig.values.len(), 3);
        assert!((eig.values[0] + 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 3.0).abs() < 1e-14);
        assert!((eig.values[2] - 7.0).abs() < 1e-14);
    }

    #[test]
    fn degenerate_spectrum_stays_orthonormal() {
        let n = 10;
        let mut a = vec![0.0f64; n * n];
        for i in 0..n {
            a[i * n + i] = 1.0;
        }
        let eig = eigh(&a, n).unwrap();
        for i in 0..n {
            assert!((eig.values[i] - 1.0).abs() < 1e-14);
            for j in 0..n {
                let dot: f64 = (0..n).map(|k| eig.vector(i)[k] * eig.vector(j)[k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn random_symmetric_residuals_and_orthonormality() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &n in &[5usize, 17, 40] {
            let mut a = vec![0.0f64; n * n];
            for i in 0..n {
                for j in 0..=i {
                    let v = rng.gen_range(-1.0..1.0);
                    a[i * n + j] = v;
                    a[j * n + i] = v;
                }
            }
            let eig = eigh(&a, n).unwrap();
            let scale = max_abs(a.iter().copied());
            // residual ||A v - lambda v||
            for j in 0..n {
                let v = eig.vector(j);
                for r in 0..n {
                    let av: f64 = (0..n).map(|c| a[r * n + c] * v[c]).sum();
                    assert!(
                        (av - eig.values[j] * v[r]).abs() < 1e-10 * scale.max(1.0),
                        "residual too large at n={n}"
                    );
                }
            }
            // V Vt = I
            for i in 0..n {
                for j in 0..=i {
                    let dot: f64 = (0..n).map(|k| eig.vector(i)[k] * eig.vector(j)[k]).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() < 1e-10);
                }
            }
            // eigenvalue sum equals trace
            let trace: f64 = (0..n).map(|i| a[i * n + i]).sum();
            let sum: f64 = eig.values.iter().sum();
            assert!((trace - sum).abs() < 1e-9 * (n as f64));
            // ascending
            for w in eig.values.windows(2) {
                assert!(w[0] <= w[1]);
            }
        }
    }

    #[test]
    fn lu_solve_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 12;
        let mut a = vec![0.0f64; n * n];
        for v in a.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        for i in 0..n {
            a[i * n + i] += 4.0; // keep it comfortably nonsingular
        }
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 0.3).collect();
        let mut b: Vec<f64> = (0..n)
            .map(|r| (0..n).map(|c| a[r * n + c] * x_true[c]).sum())
            .collect();
        let mut lu = a.clone();
        solve_in_place(&mut lu, &mut b, n).unwrap();
        for i in 0..n {
            assert!((b[i] - x_true[i]).abs() < 1e-11);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let mut a = vec![1.0, 2.0, 2.0, 4.0];
        let mut b = vec![1.0, 1.0];
        assert!(matches!(
            solve_in_place(&mut a, &mut b, 2),
            Err(LinalgError::SingularMatrix(_))
        ));
    }
}
