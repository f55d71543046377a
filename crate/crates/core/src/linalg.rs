//! Dense real symmetric eigensolver.
//!
//! Householder reduction to tridiagonal form followed by the implicit QL
//! algorithm with Wilkinson-style shifts. Eigenvectors are accumulated as
//! rows, so each returned vector is a contiguous slice.

use thiserror::Error;

use crate::scalar::{from_usize, lit, Real};

/// Maximum QL sweeps spent on a single eigenvalue before giving up.
const MAX_QL_ITERATIONS: usize = 60;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric: |M[{i}][{j}] - M[{j}][{i}]| = {diff:e}")]
    NotSymmetric { i: usize, j: usize, diff: f64 },
    #[error("requested {k} eigenpairs from a {dim}-dimensional matrix")]
    BadCount { k: usize, dim: usize },
    #[error("QL iteration did not converge for eigenvalue {index} after {iterations} sweeps (off-diagonal {residual:e})")]
    NoConvergence {
        index: usize,
        iterations: usize,
        residual: f64,
    },
    #[error("eigenpair {index} residual {residual:e} exceeds bound {bound:e}")]
    Residual {
        index: usize,
        residual: f64,
        bound: f64,
    },
    #[error("matrix contains non-finite entries")]
    NonFinite,
}

/// Square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![T::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, SolverError> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            if r.len() != dim {
                return Err(SolverError::NotSquare {
                    rows: dim,
                    cols: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { dim, data })
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Sets `M[i][j]` and `M[j][i]` to the same value.
    pub fn set_symmetric(&mut self, i: usize, j: usize, v: T) {
        self[(i, j)] = v;
        self[(j, i)] = v;
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.dim)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, &x| acc + x * x)
            .sqrt()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    fn check_symmetric(&self, tol: T) -> Result<(), SolverError> {
        let scale = self.frobenius_norm().max(T::one());
        for i in 0..self.dim {
            for j in 0..i {
                let diff = (self[(i, j)] - self[(j, i)]).abs();
                if diff > tol * scale {
                    return Err(SolverError::NotSymmetric {
                        i,
                        j,
                        diff: diff.to_f64().unwrap_or(f64::NAN),
                    });
                }
            }
        }
        Ok(())
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.dim + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.dim + j]
    }
}

/// One eigenpair of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair<T> {
    pub value: T,
    pub vector: Vec<T>,
}

/// Residual bound factor: `||Mv - Ev|| <= bound * ||M||`.
pub fn residual_bound<T: Real>(dim: usize) -> T {
    lit::<T>(1e-9).max(lit::<T>(100.0) * from_usize::<T>(dim.max(1)) * T::epsilon())
}

/// The `k` lowest eigenpairs of a dense symmetric matrix, ascending.
///
/// Each eigenvector has unit norm. The residual of every returned pair is
/// checked against [`residual_bound`].
pub fn diagonalize<T: Real>(matrix: &Matrix<T>, k: usize) -> Result<Vec<EigenPair<T>>, SolverError> {
    let n = matrix.dim();
    if k == 0 || k > n {
        return Err(SolverError::BadCount { k, dim: n });
    }
    if matrix.data.iter().any(|x| !x.is_finite()) {
        return Err(SolverError::NonFinite);
    }
    matrix.check_symmetric(lit(1e-12))?;

    let (mut d, mut e, mut z) = householder_tridiagonalize(matrix);
    tql2(&mut d, &mut e, Some(&mut z))?;
    let pairs = sorted_pairs(&d, &z, k);

    let bound = residual_bound::<T>(n) * matrix.frobenius_norm().max(T::min_positive_value());
    for (index, p) in pairs.iter().enumerate() {
        let mv = matrix.mul_vec(&p.vector);
        let r = mv
            .iter()
            .zip(&p.vector)
            .fold(T::zero(), |acc, (&a, &b)| {
                let t = a - p.value * b;
                acc + t * t
            })
            .sqrt();
        if r > bound {
            return Err(SolverError::Residual {
                index,
                residual: r.to_f64().unwrap_or(f64::NAN),
                bound: bound.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    Ok(pairs)
}

/// Full eigendecomposition of a symmetric tridiagonal matrix given by its
/// diagonal and off-diagonal (`off[i]` couples rows `i` and `i + 1`).
///
/// Returns the `k` lowest pairs, ascending, residual-checked.
pub fn diagonalize_tridiagonal<T: Real>(
    diag: &[T],
    off: &[T],
    k: usize,
) -> Result<Vec<EigenPair<T>>, SolverError> {
    let n = diag.len();
    if k == 0 || k > n {
        return Err(SolverError::BadCount { k, dim: n });
    }
    assert_eq!(off.len() + 1, n, "off-diagonal length must be dim - 1");
    if diag.iter().chain(off).any(|x| !x.is_finite()) {
        return Err(SolverError::NonFinite);
    }
    let mut d = diag.to_vec();
    // tql2 expects e[i] to couple i-1 and i.
    let mut e = vec![T::zero(); n];
    e[1..].copy_from_slice(off);
    let mut z = Matrix::identity(n);
    tql2(&mut d, &mut e, Some(&mut z))?;
    let pairs = sorted_pairs(&d, &z, k);

    let norm = (diag.iter().fold(T::zero(), |acc, &x| acc + x * x)
        + off.iter().fold(T::zero(), |acc, &x| acc + (x + x) * x))
        .sqrt();
    let bound = residual_bound::<T>(n) * norm.max(T::min_positive_value());
    for (index, p) in pairs.iter().enumerate() {
        let v = &p.vector;
        let mut r2 = T::zero();
        for i in 0..n {
            let mut mv = diag[i] * v[i];
            if i > 0 {
                mv = mv + off[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                mv = mv + off[i] * v[i + 1];
            }
            let t = mv - p.value * v[i];
            r2 = r2 + t * t;
        }
        let r = r2.sqrt();
        if r > bound {
            return Err(SolverError::Residual {
                index,
                residual: r.to_f64().unwrap_or(f64::NAN),
                bound: bound.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    Ok(pairs)
}

/// All eigenvalues of a symmetric tridiagonal matrix, ascending, without
/// eigenvectors.
pub fn tridiagonal_eigenvalues<T: Real>(diag: &[T], off: &[T]) -> Result<Vec<T>, SolverError> {
    let n = diag.len();
    assert_eq!(off.len() + 1, n.max(1), "off-diagonal length must be dim - 1");
    if diag.iter().chain(off).any(|x| !x.is_finite()) {
        return Err(SolverError::NonFinite);
    }
    let mut d = diag.to_vec();
    let mut e = vec![T::zero(); n];
    if n > 1 {
        e[1..].copy_from_slice(off);
    }
    tql2(&mut d, &mut e, None)?;
    d.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(d)
}

fn sorted_pairs<T: Real>(d: &[T], z: &Matrix<T>, k: usize) -> Vec<EigenPair<T>> {
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    order
        .into_iter()
        .take(k)
        .map(|i| {
            let mut vector = z.row(i).to_vec();
            let norm = vector.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
            for x in &mut vector {
                *x = *x / norm;
            }
            EigenPair { value: d[i], vector }
        })
        .collect()
}

/// Householder reduction. Returns `(d, e, z)` where `z` holds the
/// accumulated orthogonal transform with basis vectors as rows, and
/// `e[i]` couples `i - 1` and `i` (`e[0] = 0`).
fn householder_tridiagonalize<T: Real>(a: &Matrix<T>) -> (Vec<T>, Vec<T>, Matrix<T>) {
    let n = a.dim();
    let zero = T::zero();
    // v[(i, j)] follows the column-oriented reference layout; transposed at the end.
    let mut v = a.clone();
    let mut d = vec![zero; n];
    let mut e = vec![zero; n];
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = zero;
        let mut h = zero;
        for &dk in &d[..i] {
            scale = scale + dk.abs();
        }
        if scale == zero {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = zero;
                v[(j, i)] = zero;
            }
        } else {
            for dk in &mut d[..i] {
                *dk = *dk / scale;
                h = h + *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale * g;
            h = h - f * g;
            d[i - 1] = f - g;
            for ej in &mut e[..i] {
                *ej = zero;
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for kk in (j + 1)..i {
                    g = g + v[(kk, j)] * d[kk];
                    e[kk] = e[kk] + v[(kk, j)] * f;
                }
                e[j] = g;
            }
            f = zero;
            for j in 0..i {
                e[j] = e[j] / h;
                f = f + e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] = e[j] - hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for kk in j..i {
                    v[(kk, j)] = v[(kk, j)] - (f * e[kk] + g * d[kk]);
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = zero;
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = T::one();
        let h = d[i + 1];
        if h != zero {
            for kk in 0..=i {
                d[kk] = v[(kk, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = zero;
                for kk in 0..=i {
                    g = g + v[(kk, i + 1)] * v[(kk, j)];
                }
                for kk in 0..=i {
                    v[(kk, j)] = v[(kk, j)] - g * d[kk];
                }
            }
        }
        for kk in 0..=i {
            v[(kk, i + 1)] = zero;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = zero;
    }
    if n > 0 {
        v[(n - 1, n - 1)] = T::one();
    }
    e[0] = zero;
    // Columns of v are the basis vectors; store them as rows.
    let mut z = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            z[(j, i)] = v[(i, j)];
        }
    }
    (d, e, z)
}

/// Implicit QL on a tridiagonal matrix, accumulating rotations into the rows
/// of `z`. On return `d` holds the (unsorted) eigenvalues and row `i` of `z`
/// the matching eigenvector.
fn tql2<T: Real>(d: &mut [T], e: &mut [T], mut z: Option<&mut Matrix<T>>) -> Result<(), SolverError> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    let zero = T::zero();
    let one = T::one();
    let two = one + one;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = zero;

    let mut f = zero;
    let mut tst1 = zero;
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(SolverError::NoConvergence {
                        index: l,
                        iterations: MAX_QL_ITERATIONS,
                        residual: e[l].to_f64().unwrap_or(f64::NAN),
                    });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = (p * p + one).sqrt();
                if p < zero {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di = *di - h;
                }
                f = f + h;

                p = d[m];
                let mut c = one;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = (p * p + e[i] * e[i]).sqrt();
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = z.as_deref_mut() {
                        let (lo, hi) = z.data.split_at_mut((i + 1) * n);
                        let zi = &mut lo[i * n..];
                        let zi1 = &mut hi[..n];
                        for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                            let hb = *b;
                            *b = s * *a + c * hb;
                            *a = c * *a - s * hb;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] = d[l] + f;
        e[l] = zero;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> Matrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                m.set_symmetric(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        m
    }

    #[test]
    fn pauli_x_spectrum() {
        let m = Matrix::<f64>::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let pairs = diagonalize(&m, 2).unwrap();
        assert!((pairs[0].value + 1.0).abs() < 1e-14);
        assert!((pairs[1].value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn diagonal_matrix_lowest_two() {
        let m = Matrix::<f64>::from_diagonal(&[3.0, 1.0, 2.0]);
        let pairs = diagonalize(&m, 2).unwrap();
        assert!((pairs[0].value - 1.0).abs() < 1e-15);
        assert!((pairs[1].value - 2.0).abs() < 1e-15);
        assert!((pairs[0].vector[1].abs() - 1.0).abs() < 1e-15);
        assert!((pairs[1].vector[2].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_50_residuals_and_orthogonality() {
        let m = random_symmetric(50, 7);
        let pairs = diagonalize(&m, 50).unwrap();
        let norm = m.frobenius_norm();
        for p in &pairs {
            let mv = m.mul_vec(&p.vector);
            let r: f64 = mv
                .iter()
                .zip(&p.vector)
                .map(|(a, b)| (a - p.value * b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(r <= 1e-9 * norm, "residual {r}");
        }
        for i in 0..50 {
            for j in 0..i {
                let dot: f64 = pairs[i].vector.iter().zip(&pairs[j].vector).map(|(a, b)| a * b).sum();
                assert!(dot.abs() <= 1e-9);
            }
        }
        assert!(pairs.windows(2).all(|w| w[0].value <= w[1].value));
    }

    #[test]
    fn matches_nalgebra_oracle() {
        let m = random_symmetric(30, 11);
        let na = nalgebra::DMatrix::from_fn(30, 30, |i, j| m[(i, j)]);
        let mut oracle: Vec<f64> = na.symmetric_eigen().eigenvalues.iter().copied().collect();
        oracle.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ours = diagonalize(&m, 30).unwrap();
        for (a, b) in ours.iter().zip(&oracle) {
            assert!((a.value - b).abs() < 1e-11);
        }
    }

    #[test]
    fn tridiagonal_path_agrees_with_dense() {
        let diag: Vec<f64> = (0..20).map(|i| 0.3 * i as f64 - 1.0).collect();
        let off: Vec<f64> = (0..19).map(|i| ((i + 1) as f64).sqrt() * 0.4).collect();
        let mut dense = Matrix::from_diagonal(&diag);
        for (i, &o) in off.iter().enumerate() {
            dense.set_symmetric(i, i + 1, o);
        }
        let a = diagonalize(&dense, 5).unwrap();
        let b = diagonalize_tridiagonal(&diag, &off, 5).unwrap();
        let c = tridiagonal_eigenvalues(&diag, &off).unwrap();
        for ((x, y), z) in a.iter().zip(&b).zip(&c) {
            assert_eq!(y.value, *z);
            assert!((x.value - y.value).abs() < 1e-12);
            let dot: f64 = x.vector.iter().zip(&y.vector).map(|(p, q)| p * q).sum();
            assert!((dot.abs() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn tridiagonal_with_zero_couplings_is_exact() {
        let pairs = diagonalize_tridiagonal(&[2.0, -1.0, 0.5], &[0.0, 0.0], 3).unwrap();
        let vals: Vec<f64> = pairs.iter().map(|p| p.value).collect();
        assert_eq!(vals, vec![-1.0, 0.5, 2.0]);
    }

    #[test]
    fn rejects_bad_input() {
        let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap();
        assert!(matches!(diagonalize(&m, 1), Err(SolverError::NotSymmetric { .. })));
        let m = Matrix::<f64>::identity(3);
        assert!(matches!(diagonalize(&m, 4), Err(SolverError::BadCount { .. })));
        assert!(matches!(diagonalize(&m, 0), Err(SolverError::BadCount { .. })));
    }

    #[test]
    fn works_in_single_precision() {
        let m = Matrix::from_rows(&[vec![2.0f32, 1.0], vec![1.0, 2.0]]).unwrap();
        let pairs = diagonalize(&m, 2).unwrap();
        assert!((pairs[0].value - 1.0).abs() < 1e-6);
        assert!((pairs[1].value - 3.0).abs() < 1e-6);
    }
}
