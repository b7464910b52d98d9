//! Dense complex matrices, Hermitian eigendecomposition and spectral calculus.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::math::{fabs, sqrt};
use crate::{Error, Result};

/// Absolute (entry-scaled) tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Relative off-diagonal Frobenius mass at which Jacobi sweeps stop.
pub const JACOBI_TOL: f64 = 1e-13;
/// Eigenvalues closer than this (relative to the spectral radius) are
/// reported as one degenerate cluster.
pub const CLUSTER_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 100;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, data.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Column vector.
    pub fn column(v: &[Complex64]) -> Self {
        CMatrix { rows: v.len(), cols: 1, data: v.to_vec() }
    }

    /// `|u><v|`.
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Self {
        let mut m = Self::zeros(u.len(), v.len());
        for (i, a) in u.iter().enumerate() {
            for (j, b) in v.iter().enumerate() {
                m[(i, j)] = a * b.conj();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn col(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn matmul(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, found: rhs.rows });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in row.iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let rrow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in orow.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, rhs: &CMatrix) -> Result<CMatrix> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &CMatrix) -> Result<CMatrix> {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &CMatrix, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<CMatrix> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                found: rhs.rows * rhs.cols,
            });
        }
        let data = self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(CMatrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, s: f64) -> CMatrix {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        sqrt(self.data.iter().map(|a| a.norm_sqr()).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &CMatrix) -> CMatrix {
        let (r, c) = (self.rows * rhs.rows, self.cols * rhs.cols);
        let mut out = Self::zeros(r, c);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for k in 0..rhs.rows {
                    for l in 0..rhs.cols {
                        out[(i * rhs.rows + k, j * rhs.cols + l)] = a * rhs[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// `<u| self |u>` for a square matrix.
    pub fn quadratic_form(&self, u: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.rows {
            let mut row = Complex64::new(0.0, 0.0);
            for j in 0..self.cols {
                row += self[(i, j)] * u[j];
            }
            acc += u[i].conj() * row;
        }
        acc
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Square matrix equal to its adjoint. Stored exactly Hermitian: the
/// constructor averages `M` and `M†` after checking they agree.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare { rows: m.rows, cols: m.cols });
        }
        let n = m.rows;
        let scale = m.max_abs().max(1.0);
        let mut deviation: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                deviation = deviation.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if !(deviation <= HERMITIAN_TOL * scale) {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self::symmetrized(m))
    }

    /// Hermitian part `(M + M†)/2` without a tolerance check; for matrices
    /// that are Hermitian by construction up to rounding.
    pub fn symmetrized(mut m: CMatrix) -> Self {
        assert!(m.is_square(), "symmetrized: matrix must be square");
        let n = m.rows;
        for i in 0..n {
            m[(i, i)].im = 0.0;
            for j in i + 1..n {
                let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
                m[(i, j)] = avg;
                m[(j, i)] = avg.conj();
            }
        }
        HermitianMatrix(m)
    }

    pub fn from_real_symmetric(n: usize, data: &[f64]) -> Result<Self> {
        Self::new(CMatrix::from_real(n, n, data)?)
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        HermitianMatrix(CMatrix::diagonal(diag))
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix(CMatrix::identity(n))
    }

    /// `|u><u|`.
    pub fn projector(u: &[Complex64]) -> Self {
        Self::symmetrized(CMatrix::outer(u, u))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_cmatrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_cmatrix(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn add(&self, rhs: &HermitianMatrix) -> Result<HermitianMatrix> {
        Ok(HermitianMatrix(self.0.add(&rhs.0)?))
    }

    pub fn sub(&self, rhs: &HermitianMatrix) -> Result<HermitianMatrix> {
        Ok(HermitianMatrix(self.0.sub(&rhs.0)?))
    }

    pub fn scale(&self, s: f64) -> HermitianMatrix {
        HermitianMatrix(self.0.scale(s))
    }

    pub fn kron(&self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix(self.0.kron(&rhs.0))
    }

    /// `Tr(self · rhs)`, real for Hermitian arguments.
    pub fn trace_product(&self, rhs: &HermitianMatrix) -> Result<f64> {
        if self.dim() != rhs.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: rhs.dim() });
        }
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.0[(i, j)] * rhs.0[(j, i)]).re;
            }
        }
        Ok(acc)
    }

    /// `A B A` for Hermitian `A = self`.
    pub fn congruence(&self, b: &HermitianMatrix) -> Result<HermitianMatrix> {
        Ok(Self::symmetrized(self.0.matmul(&b.0)?.matmul(&self.0)?))
    }

    /// `K self K†` for an arbitrary (possibly rectangular) `K`.
    pub fn conjugate_by(&self, k: &CMatrix) -> Result<HermitianMatrix> {
        Ok(Self::symmetrized(k.matmul(&self.0)?.matmul(&k.adjoint())?))
    }

    /// Eigendecomposition; see [`eig_h`].
    pub fn eig(&self) -> Eigen {
        eig_h(self)
    }

    /// Applies `f` to the spectrum: `U f(Λ) U†`. Fails if `f` is not finite
    /// on some eigenvalue.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Result<HermitianMatrix> {
        self.eig().map(f)
    }

    pub fn trace_norm(&self) -> f64 {
        trace_norm(self)
    }
}

/// Eigenpairs of a Hermitian matrix; values ascending, vectors are the
/// columns of a unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        self.vectors.col(k)
    }

    /// `Σ_k f(λ_k) |v_k><v_k|`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<HermitianMatrix> {
        let n = self.dim();
        let fv: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        if fv.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFunction);
        }
        let mut out = CMatrix::zeros(n, n);
        for (k, &w) in fv.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = self.vectors[(i, k)] * w;
                if vik.re == 0.0 && vik.im == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += vik * self.vectors[(j, k)].conj();
                }
            }
        }
        Ok(HermitianMatrix::symmetrized(out))
    }

    /// Groups eigenvalues that agree to within [`CLUSTER_TOL`] (relative to
    /// the spectral radius). Returns index ranges into `values`.
    pub fn clusters(&self) -> Vec<core::ops::Range<usize>> {
        let radius = self.values.iter().map(|v| fabs(*v)).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut out = Vec::new();
        let mut start = 0;
        for k in 1..=self.values.len() {
            if k == self.values.len() || self.values[k] - self.values[start] > CLUSTER_TOL * radius {
                out.push(start..k);
                start = k;
            }
        }
        out
    }

    /// Spectral projector onto the cluster containing index `k`'s range.
    pub fn cluster_projector(&self, range: core::ops::Range<usize>) -> HermitianMatrix {
        let n = self.dim();
        let mut out = CMatrix::zeros(n, n);
        for k in range {
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] += self.vectors[(i, k)] * self.vectors[(j, k)].conj();
                }
            }
        }
        HermitianMatrix::symmetrized(out)
    }
}

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let n = a.rows;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    sqrt(s)
}

/// Cyclic complex Jacobi eigensolver.
///
/// Each rotation zeroes one off-diagonal pair. With the pivot written as
/// `a_pq = |a_pq| e^{iφ}`, the rotation is the real Jacobi rotation
/// conjugated by `diag(1, e^{-iφ})`. Sweeps stop once the off-diagonal
/// Frobenius mass falls below [`JACOBI_TOL`] times the matrix norm.
pub fn eig_h(m: &HermitianMatrix) -> Eigen {
    let n = m.dim();
    let mut a = m.0.clone();
    // rows of `vt` are the eigenvectors (V transposed), so updates are contiguous
    let mut vt = CMatrix::identity(n);
    let scale = a.frobenius_norm();
    if scale > 0.0 {
        for _ in 0..MAX_SWEEPS {
            if off_diagonal_norm(&a) <= JACOBI_TOL * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    rotate(&mut a, &mut vt, p, q);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, new)] = vt[(old, i)];
        }
    }
    Eigen { values, vectors }
}

fn rotate(a: &mut CMatrix, vt: &mut CMatrix, p: usize, q: usize) {
    let n = a.rows;
    let apq = a[(p, q)];
    let g = apq.norm();
    if g == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (2.0 * g);
    let t = if fabs(theta) > 1e150 {
        0.5 / theta
    } else {
        let t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0));
        if theta < 0.0 { -t } else { t }
    };
    let c = 1.0 / sqrt(t * t + 1.0);
    let s = t * c;
    let phase = (apq / g).conj();
    // J = [[c, s], [-s e^{-iφ}, c e^{-iφ}]] acting on coordinates (p, q).
    let jpp = Complex64::new(c, 0.0);
    let jpq = Complex64::new(s, 0.0);
    let jqp = phase * (-s);
    let jqq = phase * c;

    // A ← A J (columns p, q)
    for row in a.data.chunks_exact_mut(n) {
        let (akp, akq) = (row[p], row[q]);
        row[p] = akp * jpp + akq * jqp;
        row[q] = akp * jpq + akq * jqq;
    }
    // A ← J† A (rows p, q), and Vᵀ ← Jᵀ Vᵀ
    let (cpp, cqp, cpq, cqq) = (jpp.conj(), jqp.conj(), jpq.conj(), jqq.conj());
    rows_mix(&mut a.data, n, p, q, |x, y| (cpp * x + cqp * y, cpq * x + cqq * y));
    rows_mix(&mut vt.data, n, p, q, |x, y| (jpp * x + jqp * y, jpq * x + jqq * y));
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;
}

/// Replaces rows `p < q` by `f(row_p[k], row_q[k])` elementwise.
fn rows_mix(data: &mut [Complex64], n: usize, p: usize, q: usize, f: impl Fn(Complex64, Complex64) -> (Complex64, Complex64)) {
    let (head, tail) = data.split_at_mut(q * n);
    let rp = &mut head[p * n..(p + 1) * n];
    let rq = &mut tail[..n];
    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
        let (u, v) = f(*x, *y);
        *x = u;
        *y = v;
    }
}

/// `U f(Λ) U†`.
pub fn mat_func(m: &HermitianMatrix, f: impl Fn(f64) -> f64) -> Result<HermitianMatrix> {
    m.map_spectrum(f)
}

/// `Σ |λ_k|`.
pub fn trace_norm(m: &HermitianMatrix) -> f64 {
    m.eig().values.iter().map(|v| fabs(*v)).sum()
}

/// Partial trace over the tensor factors not listed in `keep`.
///
/// `dims` are the local dimensions in tensor order; `keep` lists the factor
/// indices to retain, in any order (the output keeps tensor order).
pub fn partial_trace(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if !m.is_square() || m.rows != total {
        return Err(Error::DimensionMismatch { expected: total, found: m.rows });
    }
    if let Some(&bad) = keep.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::param("keep", alloc::format!("factor index {bad} out of range")));
    }
    let kept: Vec<usize> = (0..dims.len()).filter(|k| keep.contains(k)).collect();
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let dk: usize = kept.iter().map(|&k| dims[k]).product();
    let dt: usize = traced.iter().map(|&k| dims[k]).product();

    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let offsets = |factors: &[usize], mut idx: usize| -> usize {
        let mut off = 0;
        for &f in factors.iter().rev() {
            off += (idx % dims[f]) * strides[f];
            idx /= dims[f];
        }
        off
    };
    let kept_off: Vec<usize> = (0..dk).map(|i| offsets(&kept, i)).collect();
    let traced_off: Vec<usize> = (0..dt).map(|i| offsets(&traced, i)).collect();

    let mut out = CMatrix::zeros(dk, dk);
    for i in 0..dk {
        for j in 0..dk {
            let mut acc = Complex64::new(0.0, 0.0);
            for &t in &traced_off {
                acc += m[(kept_off[i] + t, kept_off[j] + t)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Hermitian variant of [`partial_trace`].
pub fn partial_trace_h(m: &HermitianMatrix, dims: &[usize], keep: &[usize]) -> Result<HermitianMatrix> {
    Ok(HermitianMatrix::symmetrized(partial_trace(&m.0, dims, keep)?))
}
