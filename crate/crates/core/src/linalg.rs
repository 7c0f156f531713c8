//! Small dense linear algebra, generic over the scalar type so the same code
//! runs in double and in extended precision.

use num_traits::{One, Zero};
use thiserror::Error;

use crate::numeric::Real;
use crate::rootsys::Rational;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is numerically singular (pivot {pivot:e} at column {column})")]
    Singular { column: usize, pivot: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("least-squares system is rank deficient (|R_kk| / max = {ratio:e} at column {column})")]
    RankDeficient { column: usize, ratio: f64 },
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<S> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<S>,
}

impl<S: Clone> Mat<S> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Mat<S> {
        Mat::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }
}

impl<S: Real> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat::from_fn(rows, cols, |_, _| S::zero())
    }

    pub fn identity(n: usize) -> Self {
        Mat::from_fn(n, n, |i, j| if i == j { S::one() } else { S::zero() })
    }

    pub fn matmul(&self, other: &Mat<S>) -> Mat<S> {
        assert_eq!(self.cols, other.rows, "matmul shapes");
        Mat::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = S::zero();
            for k in 0..self.cols {
                acc += self.get(i, k).clone() * other.get(k, j).clone();
            }
            acc
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.abs().to_f64()).fold(0.0, f64::max)
    }

    /// Max-row-sum norm.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows).map(|i| self.row(i).iter().map(|x| x.abs().to_f64()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Gauss-Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Result<Mat<S>, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::Shape(format!("inverse of {}x{}", self.rows, self.cols)));
        }
        let n = self.rows;
        let scale = self.max_abs();
        if scale == 0.0 {
            return Err(LinalgError::Singular { column: 0, pivot: 0.0 });
        }
        let mut a = self.clone();
        let mut inv = Mat::<S>::identity(n);
        for col in 0..n {
            let (p, pv) = (col..n)
                .map(|r| (r, a.get(r, col).abs()))
                .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap_or(std::cmp::Ordering::Equal))
                .expect("non-empty column");
            let piv = pv.to_f64();
            if piv <= scale * S::epsilon() * (n as f64) {
                return Err(LinalgError::Singular { column: col, pivot: piv });
            }
            if p != col {
                for j in 0..n {
                    a.data.swap(p * n + j, col * n + j);
                    inv.data.swap(p * n + j, col * n + j);
                }
            }
            let d = a.get(col, col).clone();
            for j in 0..n {
                let v = a.get(col, j).clone() / d.clone();
                a.set(col, j, v);
                let w = inv.get(col, j).clone() / d.clone();
                inv.set(col, j, w);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.get(r, col).clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let v = a.get(r, j).clone() - f.clone() * a.get(col, j).clone();
                    a.set(r, j, v);
                    let w = inv.get(r, j).clone() - f.clone() * inv.get(col, j).clone();
                    inv.set(r, j, w);
                }
            }
        }
        Ok(inv)
    }

    /// Inverse of a matrix with nonzero diagonal after symmetric diagonal
    /// scaling `D A D`, `D = diag(|a_ii|^-1/2)`.
    pub fn inverse_equilibrated(&self) -> Result<Mat<S>, LinalgError> {
        let n = self.rows;
        let mut d = Vec::with_capacity(n);
        for i in 0..n {
            let a = self.get(i, i).abs();
            if a.is_zero() {
                return self.inverse();
            }
            d.push(S::one() / a.sqrt());
        }
        let scaled = Mat::from_fn(n, n, |i, j| d[i].clone() * self.get(i, j).clone() * d[j].clone());
        let inv = scaled.inverse()?;
        Ok(Mat::from_fn(n, n, |i, j| d[i].clone() * inv.get(i, j).clone() * d[j].clone()))
    }

    /// `||A||_inf ||A^-1||_inf`.
    pub fn condition_inf(&self, inverse: &Mat<S>) -> f64 {
        self.norm_inf() * inverse.norm_inf()
    }
}

/// Householder QR solve of `min ||M c - rhs||` for several right-hand sides,
/// after scaling every column of `M` to unit Euclidean norm.
pub struct LeastSquares<S> {
    rows: usize,
    cols: usize,
    // Householder vectors stored column-wise below the diagonal, with R above.
    qr: Vec<Vec<S>>,
    betas: Vec<S>,
    col_scale: Vec<S>,
    pub min_diag_ratio: f64,
}

impl<S: Real> LeastSquares<S> {
    /// `columns[j][i]` is entry `(i, j)`.
    pub fn factor(columns: Vec<Vec<S>>, rank_tol: f64) -> Result<Self, LinalgError> {
        let cols = columns.len();
        let rows = columns.first().map(Vec::len).unwrap_or(0);
        if rows < cols {
            return Err(LinalgError::Shape(format!("{rows} samples for {cols} unknowns")));
        }
        let mut qr = columns;
        let mut col_scale = Vec::with_capacity(cols);
        for c in qr.iter_mut() {
            let n = norm(c);
            let n = if n.is_zero() { S::one() } else { n };
            for x in c.iter_mut() {
                *x = x.clone() / n.clone();
            }
            col_scale.push(n);
        }
        let mut betas = Vec::with_capacity(cols);
        let mut diag_max = 0.0f64;
        let mut min_ratio = f64::INFINITY;
        for k in 0..cols {
            let (left, right) = qr.split_at_mut(k + 1);
            let v = &mut left[k];
            let alpha = norm(&v[k..]);
            let alpha = if v[k] > S::zero() { -alpha } else { alpha };
            // v <- x - alpha e_k, beta = 2 / (v.v)
            v[k] = v[k].clone() - alpha.clone();
            let vv = dot(&v[k..], &v[k..]);
            let beta = if vv.is_zero() { S::zero() } else { S::from_i64(2) / vv };
            for c in right.iter_mut() {
                let s = dot(&v[k..], &c[k..]) * beta.clone();
                for i in k..rows {
                    c[i] = c[i].clone() - s.clone() * v[i].clone();
                }
            }
            let r = alpha.abs().to_f64();
            diag_max = diag_max.max(r);
            min_ratio = min_ratio.min(r);
            betas.push(beta);
            // Keep R_kk next to the reflector: stash alpha in the spare slot.
            v.push(alpha);
        }
        let ratio = if diag_max > 0.0 { min_ratio / diag_max } else { 0.0 };
        if ratio < rank_tol {
            let column = qr
                .iter()
                .enumerate()
                .min_by(|a, b| {
                    let x = a.1[rows].abs().to_f64();
                    let y = b.1[rows].abs().to_f64();
                    x.partial_cmp(&y).unwrap_or(std::cmp::Ordering::Equal)
                })
                .map(|(i, _)| i)
                .unwrap_or(0);
            return Err(LinalgError::RankDeficient { column, ratio });
        }
        Ok(LeastSquares { rows, cols, qr, betas, col_scale, min_diag_ratio: ratio })
    }

    pub fn solve(&self, rhs: &[S]) -> Result<Vec<S>, LinalgError> {
        if rhs.len() != self.rows {
            return Err(LinalgError::Shape(format!("rhs length {} != {}", rhs.len(), self.rows)));
        }
        let mut b = rhs.to_vec();
        for k in 0..self.cols {
            let v = &self.qr[k];
            let s = dot(&v[k..self.rows], &b[k..]) * self.betas[k].clone();
            for i in k..self.rows {
                b[i] = b[i].clone() - s.clone() * v[i].clone();
            }
        }
        let mut x = vec![S::zero(); self.cols];
        for k in (0..self.cols).rev() {
            let mut acc = b[k].clone();
            for j in k + 1..self.cols {
                acc -= self.qr[j][k].clone() * x[j].clone();
            }
            x[k] = acc / self.qr[k][self.rows].clone();
        }
        Ok(x.into_iter().zip(&self.col_scale).map(|(c, s)| c / s.clone()).collect())
    }
}

fn dot<S: Real>(a: &[S], b: &[S]) -> S {
    let mut acc = S::zero();
    for (x, y) in a.iter().zip(b) {
        acc += x.clone() * y.clone();
    }
    acc
}

fn norm<S: Real>(a: &[S]) -> S {
    dot(a, a).sqrt()
}

/// Exact determinant by Gaussian elimination over the rationals.
pub fn rational_determinant(m: &[Vec<Rational>]) -> Rational {
    let n = m.len();
    let mut a: Vec<Vec<Rational>> = m.to_vec();
    let mut det = Rational::one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Rational::zero();
        };
        if p != col {
            a.swap(p, col);
            det = -det;
        }
        let piv = a[col][col].clone();
        det *= &piv;
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &piv;
            for j in col..n {
                let v = &a[col][j] * &f;
                a[r][j] -= v;
            }
        }
    }
    det
}
