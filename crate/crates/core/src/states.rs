//! Validated density matrices.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::math::fabs;
use crate::numerics::{CMatrix, Eigen, HermitianMatrix};
use crate::{Error, Result, MAX_DIM};

/// Eigenvalues at or below this are treated as zero (kernel).
pub const ZERO_EIGENVALUE: f64 = 1e-12;
/// Most negative eigenvalue tolerated when validating a state.
pub const NEGATIVITY_TOL: f64 = 1e-12;
/// Allowed deviation of the trace from one.
pub const TRACE_TOL: f64 = 1e-10;
/// Default mixing weight used by [`DensityMatrix::regularized`].
pub const DEFAULT_REGULARIZATION: f64 = 1e-10;

/// Positive semidefinite, unit-trace Hermitian matrix with its
/// eigendecomposition cached. Eigenvalues in the cache are clipped at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: HermitianMatrix,
    eigen: Eigen,
}

/// Distribution for [`DensityMatrix::random`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    /// Hilbert-Schmidt measure: `G G† / Tr(G G†)` with complex Ginibre `G`.
    HilbertSchmidt,
    /// Diagonal state with a uniform (Dirichlet(1,…,1)) spectrum.
    Diagonal,
}

impl DensityMatrix {
    pub fn new(matrix: HermitianMatrix) -> Result<Self> {
        let eigen = matrix.eig();
        Self::from_parts(matrix, eigen)
    }

    fn from_parts(matrix: HermitianMatrix, mut eigen: Eigen) -> Result<Self> {
        if matrix.dim() == 0 {
            return Err(Error::InvalidState("empty matrix".into()));
        }
        let min = eigen.values[0];
        if !(min >= -NEGATIVITY_TOL) {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        let tr = matrix.trace();
        if !(fabs(tr - 1.0) <= TRACE_TOL) {
            return Err(Error::InvalidState(format!("trace {tr} differs from one")));
        }
        for v in &mut eigen.values {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        Ok(DensityMatrix { matrix, eigen })
    }

    pub fn from_cmatrix(m: CMatrix) -> Result<Self> {
        Self::new(HermitianMatrix::new(m)?)
    }

    /// Qubit state `(I + r·σ)/2`; requires `|r| ≤ 1`.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let norm2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
        if !(norm2 <= 1.0 + 1e-12) {
            return Err(Error::InvalidState(format!("Bloch vector norm {} exceeds one", libm::sqrt(norm2))));
        }
        let m = CMatrix::from_vec(
            2,
            2,
            alloc::vec![
                Complex64::new((1.0 + r[2]) / 2.0, 0.0),
                Complex64::new(r[0] / 2.0, -r[1] / 2.0),
                Complex64::new(r[0] / 2.0, r[1] / 2.0),
                Complex64::new((1.0 - r[2]) / 2.0, 0.0),
            ],
        )?;
        Self::from_cmatrix(m)
    }

    /// Diagonal state with the given probability vector.
    pub fn diagonal(p: &[f64]) -> Result<Self> {
        Self::new(HermitianMatrix::diagonal(p))
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Self::diagonal(&alloc::vec![1.0 / dim as f64; dim])
    }

    /// Pure state `|ψ><ψ|`; `psi` is normalized here.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm = libm::sqrt(psi.iter().map(|z| z.norm_sqr()).sum());
        if !(norm > 0.0) {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let u: Vec<Complex64> = psi.iter().map(|z| z / norm).collect();
        Self::new(HermitianMatrix::projector(&u))
    }

    /// Seeded random state.
    pub fn random(dim: usize, seed: u64, mode: SamplingMode) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "must be positive"));
        }
        check_dim(dim)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match mode {
            SamplingMode::Diagonal => {
                let w: Vec<f64> = (0..dim).map(|_| Exp1.sample(&mut rng)).collect();
                let s: f64 = w.iter().sum();
                Self::diagonal(&w.iter().map(|x| x / s).collect::<Vec<_>>())
            }
            SamplingMode::HilbertSchmidt => {
                let g: Vec<Complex64> = (0..dim * dim)
                    .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
                    .collect();
                let g = CMatrix::from_vec(dim, dim, g)?;
                let ggd = g.matmul(&g.adjoint())?;
                let tr = ggd.trace().re;
                Self::new(HermitianMatrix::symmetrized(ggd.scale(1.0 / tr)))
            }
        }
    }

    /// Uniformly random Bloch vector inside the ball of radius `max_radius`.
    pub fn random_qubit(rng: &mut impl Rng, max_radius: f64) -> Result<Self> {
        loop {
            let r: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let n2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
            if n2 <= 1.0 {
                return Self::from_bloch([r[0] * max_radius, r[1] * max_radius, r[2] * max_radius]);
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn eigen(&self) -> &Eigen {
        &self.eigen
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigen.values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen.values[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigen.values.last().unwrap()
    }

    /// Full support: smallest eigenvalue above [`ZERO_EIGENVALUE`].
    pub fn is_faithful(&self) -> bool {
        self.min_eigenvalue() > ZERO_EIGENVALUE
    }

    pub fn require_faithful(&self) -> Result<()> {
        if self.is_faithful() {
            Ok(())
        } else {
            Err(Error::NotFaithful { min_eigenvalue: self.min_eigenvalue() })
        }
    }

    /// `(1-δ) ρ + δ I/d`.
    pub fn regularized(&self, delta: f64) -> Self {
        let d = self.dim() as f64;
        let matrix = self.matrix.scale(1.0 - delta).add(&HermitianMatrix::identity(self.dim()).scale(delta / d)).unwrap();
        let eigen = Eigen {
            values: self.eigen.values.iter().map(|&l| (1.0 - delta) * l + delta / d).collect(),
            vectors: self.eigen.vectors.clone(),
        };
        DensityMatrix { matrix, eigen }
    }

    /// `Tr(ρ A)`.
    pub fn expectation(&self, a: &HermitianMatrix) -> Result<f64> {
        self.matrix.trace_product(a)
    }

    /// `ρ ⊗ other`; the eigendecomposition is assembled from the factors.
    pub fn tensor(&self, other: &DensityMatrix) -> Result<Self> {
        check_dim(self.dim().saturating_mul(other.dim()))?;
        let matrix = self.matrix.kron(&other.matrix);
        let values: Vec<f64> =
            self.eigen.values.iter().flat_map(|a| other.eigen.values.iter().map(move |b| a * b)).collect();
        let vectors = self.eigen.vectors.kron(&other.eigen.vectors);
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        let n = values.len();
        let mut sorted = CMatrix::zeros(n, n);
        for (new, &old) in order.iter().enumerate() {
            for i in 0..n {
                sorted[(i, new)] = vectors[(i, old)];
            }
        }
        let values = order.iter().map(|&i| values[i]).collect();
        Ok(DensityMatrix { matrix, eigen: Eigen { values, vectors: sorted } })
    }

    /// `ρ^{⊗n}` for `n ≥ 1`.
    pub fn tensor_pow(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "must be at least 1"));
        }
        let mut dim = 1usize;
        for _ in 0..n {
            dim = dim.saturating_mul(self.dim());
            check_dim(dim)?;
        }
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.tensor(self)?;
        }
        Ok(acc)
    }

    /// `ρ_1 ⊗ … ⊗ ρ_n`.
    pub fn product(factors: &[DensityMatrix]) -> Result<Self> {
        let (first, rest) = factors.split_first().ok_or_else(|| Error::param("factors", "empty product"))?;
        let mut dim = first.dim();
        for f in rest {
            dim = dim.saturating_mul(f.dim());
            check_dim(dim)?;
        }
        let mut acc = first.clone();
        for f in rest {
            acc = acc.tensor(f)?;
        }
        Ok(acc)
    }

    /// Reduced state on the listed factors.
    pub fn partial_trace(&self, dims: &[usize], keep: &[usize]) -> Result<Self> {
        Self::new(crate::numerics::partial_trace_h(&self.matrix, dims, keep)?)
    }
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if dim > MAX_DIM {
        Err(Error::ResourceLimit { dim, limit: MAX_DIM })
    } else {
        Ok(())
    }
}

pub(crate) fn check_same_dim(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() })
    } else {
        Ok(())
    }
}
