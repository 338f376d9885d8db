//! Small dense matrices and a one-sided Jacobi SVD.
//!
//! Only what the aligners need: d×d products, transposes, determinants and
//! the SVD of a square cross-covariance.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::scalar::{dot, Real};

const MAX_SWEEPS: usize = 100;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
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

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "buffer does not match shape");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::from_row_major(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_row_major(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "vector length differs from column count");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }

    /// Determinant by LU with partial pivoting.
    pub fn determinant(&self) -> T {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = T::one();
        for c in 0..n {
            let p = (c..n)
                .max_by(|&x, &y| a[x * n + c].abs().partial_cmp(&a[y * n + c].abs()).unwrap())
                .unwrap();
            if a[p * n + c] == T::zero() {
                return T::zero();
            }
            if p != c {
                for j in 0..n {
                    a.swap(c * n + j, p * n + j);
                }
                det = -det;
            }
            let pivot = a[c * n + c];
            det *= pivot;
            for r in c + 1..n {
                let f = a[r * n + c] / pivot;
                for j in c..n {
                    let v = a[c * n + j];
                    a[r * n + j] -= f * v;
                }
            }
        }
        det
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// `A = U · diag(S) · Vᵀ` for a square `A`, singular values descending.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub u: Matrix<T>,
    pub singular_values: Vec<T>,
    pub v: Matrix<T>,
    pub sweeps: usize,
}

impl<T: Real> Svd<T> {
    /// Number of singular values above `rel_tol · σ_max`.
    pub fn rank(&self, rel_tol: T) -> usize {
        let top = self.singular_values.first().copied().unwrap_or(T::zero());
        self.singular_values
            .iter()
            .filter(|&&s| s > top * rel_tol)
            .count()
    }
}

/// One-sided (Hestenes) Jacobi SVD of a square matrix.
///
/// Columns of a working copy are rotated pairwise until mutually
/// orthogonal; the accumulated rotations form `V`. Left singular vectors of
/// zero singular values are completed to an orthonormal basis, so `U` is
/// always orthogonal.
pub fn svd<T: Real>(a: &Matrix<T>) -> Svd<T> {
    assert_eq!(a.rows, a.cols, "svd expects a square matrix");
    let n = a.rows;
    // Column-major working storage makes column rotations contiguous.
    let mut w: Vec<Vec<T>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<T>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|i| if i == j { T::one() } else { T::zero() })
                .collect()
        })
        .collect();
    let tol = T::svd_tolerance();
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let two = T::one() + T::one();
                let zeta = (beta - alpha) / (two * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma: Vec<T> = w.iter().map(|col| dot(col, col).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| sigma[y].partial_cmp(&sigma[x]).unwrap().then(x.cmp(&y)));
    let top = order.first().map_or(T::zero(), |&i| sigma[i]);
    let cutoff = top * T::epsilon() * T::from_usize_lossy(n.max(1));

    let mut u_cols: Vec<Vec<T>> = Vec::with_capacity(n);
    let mut v_cols: Vec<Vec<T>> = Vec::with_capacity(n);
    let mut sorted_sigma = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for (slot, &j) in order.iter().enumerate() {
        v_cols.push(v[j].clone());
        if sigma[j] > cutoff && sigma[j] > T::zero() {
            u_cols.push(w[j].iter().map(|&x| x / sigma[j]).collect());
            sorted_sigma.push(sigma[j]);
        } else {
            u_cols.push(vec![T::zero(); n]);
            sorted_sigma.push(T::zero());
            missing.push(slot);
        }
    }
    complete_basis(&mut u_cols, &missing);
    sigma.clear();

    let mut u = Matrix::zeros(n, n);
    let mut vm = Matrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            u[(i, j)] = u_cols[j][i];
            vm[(i, j)] = v_cols[j][i];
        }
    }
    Svd {
        u,
        singular_values: sorted_sigma,
        v: vm,
        sweeps,
    }
}

fn rotate<T: Real>(cols: &mut [Vec<T>], p: usize, q: usize, c: T, s: T) {
    let (left, right) = cols.split_at_mut(q);
    let (cp, cq) = (&mut left[p], &mut right[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let a = *x;
        let b = *y;
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Fills `cols[slot]` for each slot in `missing` with unit vectors
/// orthogonal to every other column, by Gram-Schmidt over the standard basis.
fn complete_basis<T: Real>(cols: &mut [Vec<T>], missing: &[usize]) {
    let n = cols.len();
    let mut candidate = 0;
    for &slot in missing {
        loop {
            assert!(candidate < n * 2, "basis completion ran out of candidates");
            let mut e = vec![T::zero(); n];
            e[candidate % n] = T::one();
            candidate += 1;
            // Two passes of Gram-Schmidt for numerical orthogonality.
            for _ in 0..2 {
                for (k, col) in cols.iter().enumerate() {
                    if k == slot || col.iter().all(|&x| x == T::zero()) {
                        continue;
                    }
                    let proj = dot(&e, col);
                    for (ei, &ci) in e.iter_mut().zip(col) {
                        *ei -= proj * ci;
                    }
                }
            }
            let len = dot(&e, &e).sqrt();
            if len > T::from_f64_lossy(0.5) {
                cols[slot] = e.into_iter().map(|x| x / len).collect();
                break;
            }
        }
    }
}

/// Haar-random proper rotation (det = +1) from the QR of a Gaussian matrix.
pub fn random_rotation<T: Real, R: Rng + ?Sized>(rng: &mut R, d: usize) -> Matrix<T> {
    let mut cols: Vec<Vec<T>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut c: Vec<T> = (0..d)
            .map(|_| T::from_f64_lossy(rng.sample::<f64, _>(StandardNormal)))
            .collect();
        for _ in 0..2 {
            for prev in &cols {
                let p = dot(&c, prev);
                for (x, &y) in c.iter_mut().zip(prev) {
                    *x -= p * y;
                }
            }
        }
        let len = dot(&c, &c).sqrt();
        if len > T::from_f64_lossy(1e-6) {
            cols.push(c.into_iter().map(|x| x / len).collect());
        }
    }
    let mut q = Matrix::zeros(d, d);
    for (j, c) in cols.iter().enumerate() {
        for i in 0..d {
            q[(i, j)] = c[i];
        }
    }
    if q.determinant() < T::zero() {
        for i in 0..d {
            q[(i, 0)] = -q[(i, 0)];
        }
    }
    q
}
