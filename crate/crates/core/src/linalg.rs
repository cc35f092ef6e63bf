//! Small dense kernels: Gaussian probes, Gram–Schmidt, Jacobi eigensolver,
//! diagonal pseudo-inverse and a brute-force SVD used as a test oracle.
//!
//! Nothing in here is meant for large matrices. The PCA driver only ever
//! hands these routines `d x l` or `l x l` operands.

use std::fmt;
use std::ops::{Index, IndexMut};

use thiserror::Error;

use crate::splitmix::SplitMix64;

/// Relative norm below which a Gram–Schmidt residual counts as dependent.
pub const RANK_TOLERANCE: f64 = 1e-12;
/// Relative cutoff of [`pinv_diag`].
pub const PINV_TOLERANCE: f64 = 1e-12;
/// Relative off-diagonal norm at which Jacobi iteration stops.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Largest `min(rows, cols)` accepted by [`oracle_svd`].
pub const ORACLE_MAX_SIDE: usize = 2000;
/// Largest `rows * cols` accepted by [`oracle_svd`].
pub const ORACLE_MAX_ENTRIES: usize = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("column {column} is numerically dependent on the previous columns")]
    RankDeficient { column: usize },
    #[error("Jacobi iteration did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("matrix is not symmetric (max |A - A^T| = {deviation:e})")]
    Asymmetric { deviation: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("{rows}x{cols} matrix exceeds the oracle size guard")]
    TooLarge { rows: usize, cols: usize },
}

/// Row-major dense matrix of `f64`.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(8) {
            writeln!(f, "  {:?}", &self.row(r)[..self.cols.min(8)])?;
        }
        write!(f, "]")
    }
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Wraps row-major `data`, rejecting a wrong length or non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equally long rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<f64>]) -> Self {
        let rows = columns.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows, "ragged columns");
            m.set_column(j, c);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn set_column(&mut self, c: usize, values: &[f64]) {
        for (r, v) in values.iter().enumerate() {
            self[(r, c)] = *v;
        }
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|c| self.column(c)).collect()
    }

    /// First `n` columns.
    pub fn leading_columns(&self, n: usize) -> Self {
        assert!(n <= self.cols);
        let mut out = Self::zeros(self.rows, n);
        for r in 0..self.rows {
            out.row_mut(r).copy_from_slice(&self.row(r)[..n]);
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let out_row = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for (k, &a) in self.row(r).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self^T * other` without forming the transpose.
    pub fn t_matmul(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "t_matmul shape mismatch");
        let mut out = Self::zeros(self.cols, other.cols);
        for r in 0..self.rows {
            let b_row = other.row(r);
            for (i, &a) in self.row(r).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self * v` for a vector of length `cols`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|r| dot(self.row(r), v)).collect()
    }

    /// `self^T * v` for a vector of length `rows`.
    pub fn t_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &a) in v.iter().enumerate() {
            axpy(a, self.row(r), &mut out);
        }
        out
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape());
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Heap bytes held by the entries.
    pub fn heap_bytes(&self) -> usize {
        self.data.capacity() * std::mem::size_of::<f64>()
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (a[..n].chunks_exact(4), b[..n].chunks_exact(4));
    let tail: f64 = a
        .remainder()
        .iter()
        .zip(b.remainder())
        .map(|(x, y)| x * y)
        .sum();
    // Four independent partial sums so the loop vectorizes.
    let mut acc = [0.0; 4];
    for (x, y) in a.zip(b) {
        for lane in 0..4 {
            acc[lane] += x[lane] * y[lane];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `rows x cols` matrix of i.i.d. standard normals, filled row-major from
/// Box–Muller pairs over the SplitMix64 stream of `seed`.
pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = SplitMix64::new(seed);
    let mut m = DenseMatrix::zeros(rows, cols);
    for pair in m.data.chunks_mut(2) {
        let (z0, z1) = rng.next_gaussian_pair();
        pair[0] = z0;
        if let Some(second) = pair.get_mut(1) {
            *second = z1;
        }
    }
    m
}

/// Orthonormal basis of the column space of `y` (`d x k`, `d >= k`).
///
/// Modified Gram–Schmidt followed by one full re-orthogonalization pass.
/// Fails with [`LinalgError::RankDeficient`] when a column's residual drops
/// below [`RANK_TOLERANCE`] times its original norm.
pub fn gram_schmidt(y: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    let (d, k) = y.shape();
    if k == 0 || d < k {
        return Err(LinalgError::DimensionMismatch(format!(
            "gram_schmidt needs d >= k >= 1, got {d}x{k}"
        )));
    }
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    for j in 0..k {
        let mut v = y.column(j);
        let original = norm2(&v);
        for _pass in 0..2 {
            for q in &basis {
                let proj = dot(q, &v);
                axpy(-proj, q, &mut v);
            }
        }
        let residual = norm2(&v);
        if original.is_nan() || original <= 0.0 || residual < RANK_TOLERANCE * original {
            return Err(LinalgError::RankDeficient { column: j });
        }
        v.iter_mut().for_each(|x| *x /= residual);
        basis.push(v);
    }
    Ok(DenseMatrix::from_columns(&basis))
}

/// Eigenvalues in nonincreasing order with matching orthonormal eigenvectors
/// stored as columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DenseMatrix,
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// The input is symmetrized as `(A + A^T) / 2`. Eigenvalues come back
/// sorted nonincreasing (stable on ties) and every eigenvector has its
/// largest-magnitude entry nonnegative.
pub fn sym_eig(a: &DenseMatrix) -> Result<EigenDecomposition, LinalgError> {
    let n = a.rows();
    if a.cols() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "sym_eig needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let mut deviation = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            deviation = deviation.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    if deviation > 1e-9 * a.max_abs() {
        return Err(LinalgError::Asymmetric { deviation });
    }

    let mut m = a.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (a[(i, j)] + a[(j, i)]);
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
    // Eigenvectors are accumulated as rows so the rotation touches
    // contiguous memory; transposed at the end.
    let mut vt = DenseMatrix::identity(n);
    let total = m.frobenius_norm();
    let threshold = JACOBI_TOLERANCE * total;

    let mut converged = total == 0.0;
    let mut sweeps = 0;
    while !converged {
        if off_diagonal_norm(&m) <= threshold {
            converged = true;
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut m, &mut vt, p, q);
            }
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence { sweeps });
    }

    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps the original index order on exact ties.
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));

    let mut eigenvectors = DenseMatrix::zeros(n, n);
    let mut eigenvalues = Vec::with_capacity(n);
    for (col, &src) in order.iter().enumerate() {
        eigenvalues.push(diag[src]);
        let mut v = vt.row(src).to_vec();
        fix_sign(&mut v);
        eigenvectors.set_column(col, &v);
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(m: &DenseMatrix) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for i in 0..n {
        for (j, v) in m.row(i).iter().enumerate() {
            if i != j {
                s += v * v;
            }
        }
    }
    s.sqrt()
}

/// One Jacobi rotation annihilating `m[p][q]`, exploiting symmetry so only
/// rows `p` and `q` are read.
fn rotate(m: &mut DenseMatrix, vt: &mut DenseMatrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    if apq == 0.0 {
        return;
    }
    let app = m[(p, p)];
    let aqq = m[(q, q)];
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
        sign / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let n = m.rows();
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = m[(p, k)];
        let akq = m[(q, k)];
        let new_p = c * akp - s * akq;
        let new_q = s * akp + c * akq;
        m[(p, k)] = new_p;
        m[(k, p)] = new_p;
        m[(q, k)] = new_q;
        m[(k, q)] = new_q;
    }
    m[(p, p)] = app - t * apq;
    m[(q, q)] = aqq + t * apq;
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;

    let cols = vt.cols();
    let (head, tail) = vt.as_mut_slice().split_at_mut(q * cols);
    let row_p = &mut head[p * cols..(p + 1) * cols];
    let row_q = &mut tail[..cols];
    for (vp, vq) in row_p.iter_mut().zip(row_q.iter_mut()) {
        let a = *vp;
        let b = *vq;
        *vp = c * a - s * b;
        *vq = s * a + c * b;
    }
}

/// Flips `v` so that its first largest-magnitude entry is nonnegative.
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0.0_f64;
    let mut sign = 1.0;
    for &x in v.iter() {
        if x.abs() > best {
            best = x.abs();
            sign = if x < 0.0 { -1.0 } else { 1.0 };
        }
    }
    if sign < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Moore–Penrose pseudo-inverse of a nonnegative diagonal.
pub fn pinv_diag(sigma: &[f64]) -> Vec<f64> {
    let max = sigma.iter().fold(0.0_f64, |m, &s| m.max(s));
    sigma
        .iter()
        .map(|&s| {
            if s > PINV_TOLERANCE * max {
                1.0 / s
            } else {
                0.0
            }
        })
        .collect()
}

/// Thin singular value decomposition `X = U diag(sigma) V^T`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `n x m` with orthonormal columns, `m = min(n, p)`.
    pub u: DenseMatrix,
    /// Nonincreasing, length `m`.
    pub sigma: Vec<f64>,
    /// `p x m` with orthonormal columns.
    pub v: DenseMatrix,
}

/// Brute-force SVD for small matrices, used as a reference in tests and
/// diagnostics.
///
/// Runs [`sym_eig`] on the smaller Gram matrix, then reads each singular
/// value off as the norm of the matrix applied to the eigenvector. That
/// keeps small singular values accurate to `eps * sigma_max` rather than
/// `sqrt(eps) * sigma_max`.
pub fn oracle_svd(x: &DenseMatrix) -> Result<Svd, LinalgError> {
    let (n, p) = x.shape();
    if n.min(p) > ORACLE_MAX_SIDE || n.saturating_mul(p) > ORACLE_MAX_ENTRIES {
        return Err(LinalgError::TooLarge { rows: n, cols: p });
    }
    if n == 0 || p == 0 {
        return Ok(Svd {
            u: DenseMatrix::zeros(n, 0),
            sigma: Vec::new(),
            v: DenseMatrix::zeros(p, 0),
        });
    }
    if p <= n {
        svd_via_right_gram(x)
    } else {
        let t = svd_via_right_gram(&x.transpose())?;
        Ok(Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        })
    }
}

/// SVD of a tall (`n >= p`) matrix from the eigenvectors of `X^T X`.
fn svd_via_right_gram(x: &DenseMatrix) -> Result<Svd, LinalgError> {
    let (n, p) = x.shape();
    let mut gram = DenseMatrix::zeros(p, p);
    for r in 0..n {
        let row = x.row(r);
        for (i, &a) in row.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            axpy(a, &row[i..], &mut gram.row_mut(i)[i..]);
        }
    }
    for i in 0..p {
        for j in 0..i {
            gram[(i, j)] = gram[(j, i)];
        }
    }
    let eig = sym_eig(&gram)?;
    let v_all = eig.eigenvectors;

    // Image of every eigenvector: xv is n x p.
    let xv = x.matmul(&v_all);
    let mut triples: Vec<(f64, usize)> = (0..p).map(|j| (norm2(&xv.column(j)), j)).collect();
    triples.sort_by(|a, b| b.0.total_cmp(&a.0));

    let sigma_max = triples.first().map_or(0.0, |t| t.0);
    let cutoff = sigma_max * f64::EPSILON * (n.max(p) as f64);
    let mut sigma = Vec::with_capacity(p);
    let mut v = DenseMatrix::zeros(p, p);
    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(p);
    for (col, &(s, j)) in triples.iter().enumerate() {
        v.set_column(col, &v_all.column(j));
        sigma.push(s);
        if s > cutoff && s > 0.0 {
            u_cols.push(xv.column(j).iter().map(|x| x / s).collect());
        }
    }
    let u = complete_basis(u_cols, n, p);
    Ok(Svd { u, sigma, v })
}

/// Extends orthonormal `cols` (vectors of length `n`) to `m` columns using
/// the standard basis vectors with the largest residuals.
fn complete_basis(mut cols: Vec<Vec<f64>>, n: usize, m: usize) -> DenseMatrix {
    // Re-orthogonalize the supplied vectors; they are only accurate to a few ulps.
    for j in 0..cols.len() {
        let (done, rest) = cols.split_at_mut(j);
        let v = &mut rest[0];
        for q in done.iter() {
            let proj = dot(q, v);
            axpy(-proj, q, v);
        }
        let nv = norm2(v);
        v.iter_mut().for_each(|x| *x /= nv);
    }
    let mut candidate = 0;
    while cols.len() < m && candidate < n {
        let mut v = vec![0.0; n];
        v[candidate] = 1.0;
        candidate += 1;
        for _pass in 0..2 {
            for q in &cols {
                let proj = dot(q, &v);
                axpy(-proj, q, &mut v);
            }
        }
        let nv = norm2(&v);
        if nv > 1e-6 {
            v.iter_mut().for_each(|x| *x /= nv);
            cols.push(v);
        }
    }
    DenseMatrix::from_columns(&cols)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn orthonormality_error(q: &DenseMatrix) -> f64 {
        q.t_matmul(q)
            .sub(&DenseMatrix::identity(q.cols()))
            .max_abs()
    }

    #[test]
    fn gaussian_is_deterministic_and_seed_dependent() {
        let a = gaussian_matrix(7, 3, 11);
        let b = gaussian_matrix(7, 3, 11);
        let c = gaussian_matrix(7, 3, 12);
        assert_eq!(a.as_slice(), b.as_slice());
        assert!(a.as_slice().iter().zip(c.as_slice()).any(|(x, y)| x != y));
    }

    #[test]
    fn gaussian_moments() {
        let n = 100_000;
        let g = gaussian_matrix(n, 1, 5);
        let mean = g.as_slice().iter().sum::<f64>() / n as f64;
        let var = g.as_slice().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        let nf = n as f64;
        assert!(mean.abs() <= 3.0 / nf.sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() <= 3.0 * (2.0 / nf).sqrt(), "var {var}");
    }

    #[test]
    fn gram_schmidt_identity() {
        let q = gram_schmidt(&DenseMatrix::identity(2)).unwrap();
        assert_eq!(q, DenseMatrix::identity(2));
    }

    #[test]
    fn gram_schmidt_hand_case() {
        let y = DenseMatrix::from_columns(&[vec![3.0, 4.0], vec![1.0, 1.0]]);
        let q = gram_schmidt(&y).unwrap();
        let expected = [[0.6, 0.8], [0.8, -0.6]];
        for (j, col) in expected.iter().enumerate() {
            for (i, &e) in col.iter().enumerate() {
                assert_close(q[(i, j)], e, 1e-15);
            }
        }
    }

    #[test]
    fn gram_schmidt_duplicate_column_is_rank_deficient() {
        let y = DenseMatrix::from_columns(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]);
        assert_eq!(
            gram_schmidt(&y),
            Err(LinalgError::RankDeficient { column: 1 })
        );
        let zero = DenseMatrix::zeros(3, 1);
        assert_eq!(
            gram_schmidt(&zero),
            Err(LinalgError::RankDeficient { column: 0 })
        );
    }

    #[test]
    fn gram_schmidt_rejects_wide_input() {
        assert!(matches!(
            gram_schmidt(&DenseMatrix::zeros(2, 3)),
            Err(LinalgError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn gram_schmidt_survives_near_dependence() {
        // Columns nearly parallel: classical GS loses orthogonality here.
        let eps = 1e-9;
        let y = DenseMatrix::from_columns(&[
            vec![1.0, eps, 0.0, 0.0],
            vec![1.0, 0.0, eps, 0.0],
            vec![1.0, 0.0, 0.0, eps],
        ]);
        let q = gram_schmidt(&y).unwrap();
        assert!(orthonormality_error(&q) <= 1e-10);
    }

    #[test]
    fn sym_eig_diagonal() {
        let a = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]);
        let e = sym_eig(&a).unwrap();
        assert_eq!(e.eigenvalues, vec![2.0, 1.0]);
        assert_eq!(e.eigenvectors, DenseMatrix::identity(2));
    }

    #[test]
    fn sym_eig_swap_matrix() {
        let a = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let e = sym_eig(&a).unwrap();
        assert_close(e.eigenvalues[0], 1.0, 1e-15);
        assert_close(e.eigenvalues[1], -1.0, 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = e.eigenvectors.column(0);
        let v1 = e.eigenvectors.column(1);
        assert_close(v0[0], h, 1e-15);
        assert_close(v0[1], h, 1e-15);
        // Both entries tie in magnitude; the first one carries the sign.
        assert_close(v1[0], h, 1e-15);
        assert_close(v1[1], -h, 1e-15);
    }

    #[test]
    fn sym_eig_two_by_two() {
        let a = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let e = sym_eig(&a).unwrap();
        assert_close(e.eigenvalues[0], 3.0, 1e-14);
        assert_close(e.eigenvalues[1], 1.0, 1e-14);
    }

    #[test]
    fn sym_eig_ties_keep_index_order() {
        let a = DenseMatrix::identity(3);
        let e = sym_eig(&a).unwrap();
        assert_eq!(e.eigenvectors, DenseMatrix::identity(3));
    }

    #[test]
    fn sym_eig_rejects_asymmetric() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]);
        assert!(matches!(sym_eig(&a), Err(LinalgError::Asymmetric { .. })));
    }

    #[test]
    fn sym_eig_zero_matrix() {
        let e = sym_eig(&DenseMatrix::zeros(3, 3)).unwrap();
        assert_eq!(e.eigenvalues, vec![0.0; 3]);
    }

    #[test]
    fn pinv_diag_cases() {
        assert_eq!(pinv_diag(&[2.0, 0.0]), vec![0.5, 0.0]);
        assert_eq!(pinv_diag(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(pinv_diag(&[1.0, 1e-15]), vec![1.0, 0.0]);
        assert_eq!(pinv_diag(&[]), Vec::<f64>::new());
    }

    #[test]
    fn oracle_svd_diagonal() {
        let x = DenseMatrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 2.0]]);
        let s = oracle_svd(&x).unwrap();
        assert_close(s.sigma[0], 3.0, 1e-14);
        assert_close(s.sigma[1], 2.0, 1e-14);
    }

    #[test]
    fn oracle_svd_rank_one() {
        let u = [0.6, 0.8, 0.0];
        let v = [0.0, 1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()];
        let rows: Vec<Vec<f64>> = u
            .iter()
            .map(|a| v.iter().map(|b| a * b).collect())
            .collect();
        let s = oracle_svd(&DenseMatrix::from_rows(&rows)).unwrap();
        assert_close(s.sigma[0], 1.0, 1e-14);
        assert!(s.sigma[1].abs() <= 1e-14);
        assert!(orthonormality_error(&s.u) <= 1e-12);
    }

    #[test]
    fn oracle_svd_wide_reconstructs() {
        let x = gaussian_matrix(5, 9, 3);
        let s = oracle_svd(&x).unwrap();
        assert_eq!(s.u.shape(), (5, 5));
        assert_eq!(s.v.shape(), (9, 5));
        let mut us = s.u.clone();
        for r in 0..5 {
            for c in 0..5 {
                us[(r, c)] *= s.sigma[c];
            }
        }
        let rec = us.matmul(&s.v.transpose());
        assert!(rec.sub(&x).frobenius_norm() <= 1e-8 * x.frobenius_norm());
        assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn oracle_svd_guard() {
        let x = DenseMatrix::zeros(ORACLE_MAX_SIDE + 1, ORACLE_MAX_SIDE + 1);
        assert!(matches!(oracle_svd(&x), Err(LinalgError::TooLarge { .. })));
    }
}
