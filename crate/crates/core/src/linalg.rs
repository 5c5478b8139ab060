//! Small dense kernels: row-major matrices, Hermitian Cholesky, triangular
//! inversion and LU with partial pivoting.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use std::ops::{Index, IndexMut};

#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn conj_transpose(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x.conj()).collect(),
        }
    }

    pub fn matmul(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                let orow = other.row(k);
                let dst = out.row_mut(i);
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// Largest absolute diagonal entry, used as a cheap norm proxy for
    /// positive semidefinite matrices.
    pub fn max_abs_diag(&self) -> f64 {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)].abs())
            .fold(0.0, f64::max)
    }

    /// Replace `self` with `(self + self^*) / 2`.
    pub fn hermitize(&mut self) {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        for i in 0..n {
            let d = self[(i, i)].re();
            self[(i, i)] = T::from_real(d);
            for j in (i + 1)..n {
                let avg = (self[(i, j)] + self[(j, i)].conj()).scale(0.5);
                self[(i, j)] = avg;
                self[(j, i)] = avg.conj();
            }
        }
    }

    pub fn max_abs_diff(&self, other: &Mat<T>) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Cholesky factor `C` (lower triangular, positive real diagonal) with
/// `a = C C^*`. A pivot no larger than `n * 1e-14 * max|diag|` is rejected;
/// the reported pivot is 1-based.
pub fn cholesky<T: Scalar>(a: &Mat<T>) -> Result<Mat<T>> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let tol = n as f64 * 1e-14 * a.max_abs_diag();
    let mut c = Mat::<T>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re();
        for k in 0..j {
            d -= c[(j, k)].norm_sqr();
        }
        if !(d > tol) {
            return Err(Error::Singular { pivot: j + 1 });
        }
        let djj = d.sqrt();
        c[(j, j)] = T::from_real(djj);
        let inv = 1.0 / djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= c[(i, k)] * c[(j, k)].conj();
            }
            c[(i, j)] = s.scale(inv);
        }
    }
    Ok(c)
}

/// `log det` of a Hermitian positive definite matrix from its Cholesky factor.
pub fn cholesky_log_det<T: Scalar>(c: &Mat<T>) -> f64 {
    (0..c.rows()).map(|i| 2.0 * c[(i, i)].re().ln()).sum()
}

/// Inverse of a nonsingular lower-triangular matrix.
pub fn lower_inverse<T: Scalar>(c: &Mat<T>) -> Mat<T> {
    let n = c.rows();
    let mut inv = Mat::zeros(n, n);
    for j in 0..n {
        inv[(j, j)] = T::one() / c[(j, j)];
        for i in (j + 1)..n {
            let mut s = T::zero();
            for k in j..i {
                s += c[(i, k)] * inv[(k, j)];
            }
            inv[(i, j)] = -(s / c[(i, i)]);
        }
    }
    inv
}

/// `||L v||^2` for lower-triangular `L`.
pub fn lower_apply_norm_sqr<T: Scalar>(l: &Mat<T>, v: &[T]) -> f64 {
    let n = l.rows();
    let mut acc = 0.0;
    for i in 0..n {
        let row = &l.row(i)[..=i];
        let s = row
            .iter()
            .zip(&v[..=i])
            .fold(T::zero(), |a, (&x, &y)| a + x * y);
        acc += s.norm_sqr();
    }
    acc
}

/// LU factorisation with partial pivoting, `P A = L U`.
#[derive(Clone, Debug)]
pub struct Lu<T> {
    lu: Mat<T>,
    perm: Vec<usize>,
    sign_flips: usize,
    singular: bool,
}

impl<T: Scalar> Lu<T> {
    pub fn new(a: &Mat<T>) -> Self {
        let n = a.rows();
        assert_eq!(n, a.cols());
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign_flips = 0;
        let mut singular = false;
        let scale = a.as_slice().iter().map(|x| x.abs()).fold(0.0, f64::max);
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pmax > scale * f64::EPSILON * 1e-3) || !pmax.is_finite() {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
                perm.swap(k, p);
                sign_flips += 1;
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f == T::zero() {
                    continue;
                }
                for j in (k + 1)..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= f * u;
                }
            }
        }
        Lu {
            lu,
            perm,
            sign_flips,
            singular,
        }
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    /// `(log|det|, det/|det|)`; a singular matrix gives `(-inf, 0)`.
    pub fn log_abs_det(&self) -> (f64, T) {
        if self.singular {
            return (f64::NEG_INFINITY, T::zero());
        }
        let mut log = 0.0;
        let mut phase = if self.sign_flips % 2 == 0 {
            T::one()
        } else {
            -T::one()
        };
        for i in 0..self.lu.rows() {
            let u = self.lu[(i, i)];
            let a = u.abs();
            log += a.ln();
            phase *= u.scale(1.0 / a);
        }
        (log, phase)
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.rows();
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[(i, k)];
                let xk = x[k];
                x[i] -= l * xk;
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let u = self.lu[(i, k)];
                let xk = x[k];
                x[i] -= u * xk;
            }
            x[i] = x[i] / self.lu[(i, i)];
        }
        x
    }

    pub fn inverse(&self) -> Mat<T> {
        let n = self.lu.rows();
        let mut inv = Mat::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = T::zero());
            e[j] = T::one();
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }
}

/// Greedy row selection by modified Gram–Schmidt with row pivoting: at each
/// step the row with the largest residual norm is chosen (lowest index on
/// ties) and its direction projected out of all rows. Stops after `k` picks
/// or when the best residual norm drops to `rel_tol` times the largest
/// initial row norm. Returns the chosen row indices in pick order.
pub fn pivoted_row_selection<T: Scalar>(a: &Mat<T>, k: usize, rel_tol: f64) -> Vec<usize> {
    let (m, n) = (a.rows(), a.cols());
    let mut r = a.clone();
    let mut norms: Vec<f64> = (0..m)
        .map(|i| r.row(i).iter().map(|x| x.norm_sqr()).sum())
        .collect();
    let scale = norms.iter().cloned().fold(0.0, f64::max).sqrt();
    let mut taken = vec![false; m];
    let mut picked = Vec::with_capacity(k.min(n));
    let mut q = vec![T::zero(); n];
    for _ in 0..k.min(n) {
        let mut best = None;
        let mut best_norm = -1.0;
        for i in 0..m {
            if !taken[i] && norms[i] > best_norm {
                best_norm = norms[i];
                best = Some(i);
            }
        }
        let Some(p) = best else { break };
        let nrm = best_norm.max(0.0).sqrt();
        if !(nrm > rel_tol * scale) {
            break;
        }
        taken[p] = true;
        picked.push(p);
        for (qj, &rj) in q.iter_mut().zip(r.row(p)) {
            *qj = rj.scale(1.0 / nrm);
        }
        for i in 0..m {
            if taken[i] {
                continue;
            }
            let row = r.row_mut(i);
            let coef = q
                .iter()
                .zip(row.iter())
                .fold(T::zero(), |acc, (&qj, &x)| acc + qj.conj() * x);
            for (x, &qj) in row.iter_mut().zip(&q) {
                *x -= coef * qj;
            }
            // recompute rather than downdate to avoid cancellation
            norms[i] = row.iter().map(|x| x.norm_sqr()).sum();
        }
    }
    picked
}
