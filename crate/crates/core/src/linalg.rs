//! Dense row-major linear algebra: LU with partial pivoting, a 1-norm
//! condition estimate, and Householder least squares.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Square or rectangular row-major matrix.
#[derive(Clone, Debug)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| *a * *b).sum())
            .collect()
    }

    pub fn norm1(&self) -> T {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j).abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }
}

/// LU factorization `PA = LU` of a square matrix.
#[derive(Clone, Debug)]
pub struct Lu<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
    norm1: T,
}

impl<T: Real> Lu<T> {
    pub fn factor(a: &Matrix<T>) -> Result<Self> {
        assert_eq!(a.rows, a.cols, "LU needs a square matrix");
        let n = a.rows;
        let norm1 = a.norm1();
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, -T::one()), |acc, v| if v.1 > acc.1 { v } else { acc });
            if pmax <= T::zero() {
                return Err(Error::SingularMatrix(k));
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f != T::zero() {
                    let (upper, lower) = lu.split_at_mut(i * n);
                    let src = &upper[k * n + k + 1..k * n + n];
                    let dst = &mut lower[k + 1..n];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d -= f * *s;
                    }
                }
            }
        }
        Ok(Self { n, lu, perm, norm1 })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: T = (0..i).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: T = (i + 1..n).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        assert_eq!(b.len(), n);
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ y = b, Lᵀ z = y, x = Pᵀ z.
        let mut y = b.to_vec();
        for i in 0..n {
            let s: T = (0..i).map(|j| self.lu[j * n + i] * y[j]).sum();
            y[i] = (y[i] - s) / self.lu[i * n + i];
        }
        for i in (0..n).rev() {
            let s: T = (i + 1..n).map(|j| self.lu[j * n + i] * y[j]).sum();
            y[i] -= s;
        }
        let mut x = vec![T::zero(); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        x
    }

    /// Hager–Higham estimate of the 1-norm condition number.
    pub fn condition_estimate(&self) -> T {
        let n = self.n;
        let nf = T::from_usize_lossy(n);
        let mut x = vec![T::one() / nf; n];
        let mut est = T::zero();
        for _ in 0..5 {
            let y = self.solve(&x);
            let y_norm: T = y.iter().map(|v| v.abs()).sum();
            let xi: Vec<T> = y
                .iter()
                .map(|v| if *v >= T::zero() { T::one() } else { -T::one() })
                .collect();
            let z = self.solve_transpose(&xi);
            let (jmax, zmax) = z
                .iter()
                .enumerate()
                .map(|(j, v)| (j, v.abs()))
                .fold((0, -T::one()), |acc, v| if v.1 > acc.1 { v } else { acc });
            let ztx: T = z.iter().zip(&x).map(|(a, b)| *a * *b).sum();
            if y_norm <= est || zmax <= ztx {
                est = est.max(y_norm);
                break;
            }
            est = y_norm;
            x = vec![T::zero(); n];
            x[jmax] = T::one();
        }
        est * self.norm1
    }
}

/// Solution of a linear least-squares problem `min ‖A c − y‖₂`.
#[derive(Clone, Debug)]
pub struct LeastSquares<T> {
    pub coefficients: Vec<T>,
    pub residuals: Vec<T>,
    /// First row of the pseudo-inverse `(AᵀA)⁻¹Aᵀ`.
    pub pinv_first_row: Vec<T>,
}

/// Householder QR least squares; fails when a diagonal of R falls below
/// `rank_tol` times the largest one.
pub fn least_squares<T: Real>(a: &Matrix<T>, y: &[T], rank_tol: T) -> Result<LeastSquares<T>> {
    let (m, n) = (a.rows(), a.cols());
    if m < n {
        return Err(Error::DegenerateSweep(format!(
            "{m} samples for {n} unknowns"
        )));
    }
    let mut r = a.clone();
    // Householder vectors stored column by column.
    let mut vs: Vec<Vec<T>> = Vec::with_capacity(n);
    for k in 0..n {
        let norm: T = (k..m).map(|i| r.get(i, k).powi(2)).sum::<T>().sqrt();
        let mut v: Vec<T> = (k..m).map(|i| r.get(i, k)).collect();
        let alpha = if v[0] >= T::zero() { -norm } else { norm };
        v[0] -= alpha;
        let vnorm2: T = v.iter().map(|x| *x * *x).sum();
        if vnorm2 > T::zero() {
            for j in k..n {
                let dot: T = (k..m).map(|i| v[i - k] * r.get(i, j)).sum();
                let f = T::lit(2.0) * dot / vnorm2;
                for i in k..m {
                    let val = r.get(i, j) - f * v[i - k];
                    r.set(i, j, val);
                }
            }
        }
        vs.push(v);
    }
    let diag_max = (0..n).map(|k| r.get(k, k).abs()).fold(T::zero(), T::max);
    for k in 0..n {
        if r.get(k, k).abs() <= rank_tol * diag_max {
            return Err(Error::DegenerateSweep(format!(
                "rank-deficient fit (column {k})"
            )));
        }
    }
    let apply_qt = |b: &[T]| -> Vec<T> {
        let mut b = b.to_vec();
        for (k, v) in vs.iter().enumerate() {
            let vnorm2: T = v.iter().map(|x| *x * *x).sum();
            if vnorm2 == T::zero() {
                continue;
            }
            let dot: T = (k..m).map(|i| v[i - k] * b[i]).sum();
            let f = T::lit(2.0) * dot / vnorm2;
            for i in k..m {
                b[i] -= f * v[i - k];
            }
        }
        b
    };
    let back = |rhs: &[T]| -> Vec<T> {
        let mut c = vec![T::zero(); n];
        for i in (0..n).rev() {
            let s: T = (i + 1..n).map(|j| r.get(i, j) * c[j]).sum();
            c[i] = (rhs[i] - s) / r.get(i, i);
        }
        c
    };
    let qty = apply_qt(y);
    let coefficients = back(&qty[..n]);
    let fitted = a.mul_vec(&coefficients);
    let residuals = y.iter().zip(&fitted).map(|(a, b)| *a - *b).collect();
    let pinv_first_row = (0..m)
        .map(|i| {
            let mut e = vec![T::zero(); m];
            e[i] = T::one();
            back(&apply_qt(&e)[..n])[0]
        })
        .collect();
    Ok(LeastSquares {
        coefficients,
        residuals,
        pinv_first_row,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hilbert(n: usize) -> Matrix<f64> {
        let data = (0..n * n)
            .map(|k| 1.0 / ((k / n + k % n + 1) as f64))
            .collect();
        Matrix::from_rows(n, n, data)
    }

    #[test]
    fn lu_solves_and_transposes() {
        let a = Matrix::from_rows(3, 3, vec![0.0f64, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0]);
        let x = [1.0, -2.0, 0.5];
        let b = a.mul_vec(&x);
        let lu = Lu::factor(&a).unwrap();
        for (u, v) in lu.solve(&b).iter().zip(&x) {
            assert!((u - v).abs() < 1e-14);
        }
        let at = Matrix::from_rows(3, 3, (0..9).map(|k| a.get(k % 3, k / 3)).collect());
        let bt = at.mul_vec(&x);
        for (u, v) in lu.solve_transpose(&bt).iter().zip(&x) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = Matrix::from_rows(2, 2, vec![1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(Lu::factor(&a), Err(Error::SingularMatrix(_))));
    }

    #[test]
    fn condition_estimate_tracks_hilbert_growth() {
        // κ₁(H₆) ≈ 2.9e7 (exact value 29070279.0).
        let est = Lu::factor(&hilbert(6)).unwrap().condition_estimate();
        assert!(est > 1e7 && est <= 2.91e7, "estimate {est}");
        let id = Lu::factor(&Matrix::from_rows(2, 2, vec![1.0f64, 0.0, 0.0, 1.0])).unwrap();
        assert!((id.condition_estimate() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn least_squares_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let a = Matrix::from_rows(4, 2, xs.iter().flat_map(|x| [1.0, *x]).collect());
        let y: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let ls = least_squares(&a, &y, 1e-12).unwrap();
        assert!((ls.coefficients[0] - 2.0).abs() < 1e-14);
        assert!((ls.coefficients[1] + 0.5).abs() < 1e-14);
        // pinv row applied to data reproduces the intercept
        let c0: f64 = ls.pinv_first_row.iter().zip(&y).map(|(p, y)| p * y).sum();
        assert!((c0 - 2.0).abs() < 1e-14);
    }

    #[test]
    fn least_squares_rejects_rank_deficiency() {
        let a = Matrix::from_rows(3, 2, vec![1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        assert!(least_squares(&a, &[1.0, 2.0, 3.0], 1e-12).is_err());
    }
}
