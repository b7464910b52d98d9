//! Scalar distinguishability measures (natural logarithms throughout).

use alloc::vec::Vec;

use crate::math::{log, pow, sqrt};
use crate::numerics::{trace_norm, HermitianMatrix};
use crate::states::{check_same_dim, DensityMatrix, ZERO_EIGENVALUE};
use crate::{Error, Result};

/// `log` on the support, zero on the kernel.
fn support_log(x: f64) -> f64 {
    if x > ZERO_EIGENVALUE {
        log(x)
    } else {
        0.0
    }
}

/// `x^p` on the support, zero on the kernel (also for negative `p`).
fn support_pow(p: f64) -> impl Fn(f64) -> f64 {
    move |x| if x > ZERO_EIGENVALUE { pow(x, p) } else { 0.0 }
}

/// Weight of `rho` on the kernel of `sigma`.
fn kernel_weight(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let e = sigma.eigen();
    (0..e.dim())
        .filter(|&j| e.values[j] <= ZERO_EIGENVALUE)
        .map(|j| rho.matrix().as_cmatrix().quadratic_form(&e.vector(j)).re)
        .sum()
}

fn require_support(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<()> {
    check_same_dim(rho, sigma)?;
    if kernel_weight(rho, sigma) > ZERO_EIGENVALUE {
        Err(Error::SupportViolation)
    } else {
        Ok(())
    }
}

/// `log ρ − log σ` restricted to supports.
fn log_ratio_operator(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<HermitianMatrix> {
    let lr = rho.eigen().map(support_log)?;
    let ls = sigma.eigen().map(support_log)?;
    lr.sub(&ls)
}

/// `D(ρ‖σ) = Tr ρ(log ρ − log σ)`.
pub fn rel_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    require_support(rho, sigma)?;
    let l = log_ratio_operator(rho, sigma)?;
    Ok(rho.expectation(&l)?.max(0.0))
}

/// `V(ρ‖σ) = Tr ρ(log ρ − log σ)² − D(ρ‖σ)²`.
pub fn info_variance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    require_support(rho, sigma)?;
    let l = log_ratio_operator(rho, sigma)?;
    let d = rho.expectation(&l)?;
    let l2 = HermitianMatrix::symmetrized(l.as_cmatrix().matmul(l.as_cmatrix())?);
    Ok((rho.expectation(&l2)? - d * d).max(0.0))
}

/// Petz Rényi divergence `(α−1)⁻¹ log Tr ρ^α σ^{1−α}`.
///
/// Returns `+∞` when the trace vanishes (orthogonal supports, `α < 1`).
pub fn renyi(alpha: f64, rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if !(alpha > 0.0) || alpha == 1.0 || !alpha.is_finite() {
        return Err(Error::param("alpha", "must lie in (0,1) or (1,∞)"));
    }
    check_same_dim(rho, sigma)?;
    if alpha > 1.0 {
        require_support(rho, sigma)?;
    }
    let ra = rho.eigen().map(support_pow(alpha))?;
    let sa = sigma.eigen().map(support_pow(1.0 - alpha))?;
    let q = ra.trace_product(&sa)?;
    if q <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(log(q) / (alpha - 1.0))
}

/// Sandwiched Rényi divergence for `α > 1`:
/// `(α−1)⁻¹ log Tr (ρ^{1/2} σ^{(1−α)/α} ρ^{1/2})^α`. Requires faithful `σ`.
pub fn sandwiched_renyi(alpha: f64, rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(Error::param("alpha", "must exceed 1"));
    }
    check_same_dim(rho, sigma)?;
    sigma.require_faithful()?;
    let rh = rho.eigen().map(|x| sqrt(x.max(0.0)))?;
    let s = sigma.eigen().map(|x| pow(x, (1.0 - alpha) / alpha))?;
    let inner = rh.congruence(&s)?;
    let q: f64 = inner.eig().values.iter().map(|&x| pow(x.max(0.0), alpha)).sum();
    Ok(log(q) / (alpha - 1.0))
}

/// Overlap table `|⟨e_i|f_j⟩|²` between the eigenbases of two states.
pub(crate) fn overlaps(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Vec<Vec<f64>>> {
    let u = rho.eigen().vectors.adjoint().matmul(&sigma.eigen().vectors)?;
    let n = rho.dim();
    Ok((0..n).map(|i| (0..n).map(|j| u[(i, j)].norm_sqr()).collect()).collect())
}

/// `log Tr ρ^t σ^{1−t}` evaluated from the eigen-overlap table.
struct PetzLogQ {
    lambda: Vec<f64>,
    mu: Vec<f64>,
    w: Vec<Vec<f64>>,
}

impl PetzLogQ {
    fn new(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Self> {
        check_same_dim(rho, sigma)?;
        Ok(PetzLogQ {
            lambda: rho.eigenvalues().to_vec(),
            mu: sigma.eigenvalues().to_vec(),
            w: overlaps(rho, sigma)?,
        })
    }

    fn eval(&self, t: f64) -> f64 {
        let mut q = 0.0;
        for (i, &l) in self.lambda.iter().enumerate() {
            if l <= ZERO_EIGENVALUE {
                continue;
            }
            let lt = if t == 0.0 { 1.0 } else { pow(l, t) };
            for (j, &m) in self.mu.iter().enumerate() {
                if m <= ZERO_EIGENVALUE {
                    continue;
                }
                q += lt * pow(m, 1.0 - t) * self.w[i][j];
            }
        }
        log(q)
    }
}

const HOEFFDING_T_MAX: f64 = 1.0 - 1e-6;
const HOEFFDING_GRID: usize = 256;
const GOLDEN_TOL: f64 = 1e-10;

/// Hoeffding distance `H_r(ρ‖σ) = −inf_{t∈[0,1)} (t r + log Tr ρ^t σ^{1−t})/(1−t)`.
///
/// Coarse grid of 256 points on `[0, 1−10⁻⁶]` followed by golden-section
/// refinement around the best grid point.
pub fn hoeffding_distance(r: f64, rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::param("r", "must be positive and finite"));
    }
    let q = PetzLogQ::new(rho, sigma)?;
    let phi = |t: f64| (t * r + q.eval(t)) / (1.0 - t);
    Ok(-minimize_on_grid(phi, 0.0, HOEFFDING_T_MAX, HOEFFDING_GRID, GOLDEN_TOL))
}

/// Minimum of `f` on `[lo, hi]`: best of an equispaced grid, then
/// golden-section search on the bracketing cell.
pub(crate) fn minimize_on_grid(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize, tol: f64) -> f64 {
    let step = (hi - lo) / (points - 1) as f64;
    let mut best_k = 0;
    let mut best = f(lo);
    for k in 1..points {
        let v = f(lo + step * k as f64);
        if v < best {
            best = v;
            best_k = k;
        }
    }
    let a = lo + step * best_k.saturating_sub(1) as f64;
    let b = (lo + step * (best_k + 1) as f64).min(hi);
    best.min(golden_section(&f, a, b, tol))
}

pub(crate) fn golden_section(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (sqrt(5.0) - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd).min(f(0.5 * (a + b)))
}

/// Binary relative entropy `p log(p/q) + (1−p) log((1−p)/(1−q))`, `+∞` when
/// `q` sits on the boundary and `p` does not match it.
pub fn binary_kl(p: f64, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
        return Err(Error::param("p, q", "must lie in [0,1]"));
    }
    let term = |a: f64, b: f64| -> f64 {
        if a == 0.0 {
            0.0
        } else if b == 0.0 {
            f64::INFINITY
        } else {
            a * log(a / b)
        }
    };
    Ok((term(p, q) + term(1.0 - p, 1.0 - q)).max(0.0))
}

/// Minimal total error `(Tr a + Tr b − ‖a − b‖₁)/2` for PSD `a`, `b`.
pub fn sym_error(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64> {
    let diff = a.sub(b)?;
    Ok((a.trace() + b.trace() - trace_norm(&diff)) / 2.0)
}
