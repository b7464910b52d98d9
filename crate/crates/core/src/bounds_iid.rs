//! Upper bounds on `log β_n` for uncorrelated states `ρ̃_1⊗…⊗ρ̃_n` versus
//! `σ̃_1⊗…⊗σ̃_n`, and the second-order comparison curves for one pair.
//!
//! Bound values are in nats and are not clamped: a positive value means the
//! bound on `β` exceeds one.

use alloc::vec::Vec;

use crate::concentration::kearns_saul_constant;
use crate::divergences::{info_variance, rel_entropy, renyi};
use crate::math::{exp, log, log1p, sqrt};
use crate::modular::{log_ratio_range, sup_norm_c};
use crate::normal;
use crate::states::{check_same_dim, DensityMatrix};
use crate::{Error, Result};

/// Per-copy scalars entering the bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairConstants {
    /// `D(ρ̃‖σ̃)`
    pub divergence: f64,
    /// `V(ρ̃‖σ̃)`
    pub variance: f64,
    /// `‖log Δ + D‖_∞`
    pub sup_norm: f64,
    /// Kearns-Saul constant of the log-likelihood variable.
    pub ks_constant: f64,
    /// Range `[lo, hi]` of the log-likelihood variable.
    pub lo: f64,
    pub hi: f64,
    /// Relative position of the mean `−D` in `[lo, hi]`.
    pub p: f64,
}

impl PairConstants {
    /// Requires both states faithful.
    pub fn new(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Self> {
        check_same_dim(rho, sigma)?;
        rho.require_faithful()?;
        sigma.require_faithful()?;
        let divergence = rel_entropy(rho, sigma)?;
        let variance = info_variance(rho, sigma)?;
        let sup_norm = sup_norm_c(rho, sigma)?;
        let (lo, hi) = log_ratio_range(rho, sigma);
        let (p, ks_constant) = if hi > lo {
            let p = ((-divergence - lo) / (hi - lo)).clamp(0.0, 1.0);
            (p, kearns_saul_constant(lo, hi, p)?)
        } else {
            (0.5, 0.0)
        };
        Ok(PairConstants { divergence, variance, sup_norm, ks_constant, lo, hi, p })
    }

    /// `n` identical copies.
    pub fn iid(rho: &DensityMatrix, sigma: &DensityMatrix, n: usize) -> Result<Vec<Self>> {
        Ok(alloc::vec![Self::new(rho, sigma)?; n])
    }

    /// One entry per pair.
    pub fn from_pairs(pairs: &[(DensityMatrix, DensityMatrix)]) -> Result<Vec<Self>> {
        pairs.iter().map(|(r, s)| Self::new(r, s)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    AzumaHoeffding,
    KearnsSaul,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::AzumaHoeffding => "azuma",
            Method::KearnsSaul => "kearns-saul",
        }
    }
}

/// Error regime the bound refers to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// Type-I error at most `eps`.
    Stein { eps: f64 },
    /// Type-I error at most `e^{−n r}`.
    Hoeffding { rate: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub n: usize,
    pub regime: Regime,
    pub method: Method,
    /// Upper bound on `log β` (nats).
    pub value: f64,
    /// `Σ_k D(ρ̃_k‖σ̃_k)`.
    pub divergence_sum: f64,
    /// Per-copy `d_k` (Azuma) or `c_k` (Kearns-Saul).
    pub constants: Vec<f64>,
}

fn check_stein_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 1.0 {
        Ok(())
    } else {
        Err(Error::param("eps", "must lie in (0,1]"))
    }
}

fn stein(pairs: &[PairConstants], eps: f64, method: Method, regime: Regime) -> Result<BoundReport> {
    if pairs.is_empty() {
        return Err(Error::param("pairs", "need at least one copy"));
    }
    let divergence_sum: f64 = pairs.iter().map(|p| p.divergence).sum();
    let log_inv_eps = match regime {
        Regime::Hoeffding { rate } if eps == 0.0 => pairs.len() as f64 * rate,
        _ => -log(eps),
    };
    let (constants, spread): (Vec<f64>, f64) = match method {
        Method::AzumaHoeffding => {
            let d: Vec<f64> = pairs.iter().map(|p| p.sup_norm).collect();
            let s = sqrt(2.0 * d.iter().map(|x| x * x).sum::<f64>() * log_inv_eps);
            (d, s)
        }
        Method::KearnsSaul => {
            let c: Vec<f64> = pairs.iter().map(|p| p.ks_constant).collect();
            let s = sqrt(4.0 * log_inv_eps * c.iter().sum::<f64>());
            (c, s)
        }
    };
    Ok(BoundReport { n: pairs.len(), regime, method, value: -divergence_sum + spread, divergence_sum, constants })
}

fn hoeffding(pairs: &[PairConstants], rate: f64, method: Method) -> Result<BoundReport> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::param("r", "must be positive and finite"));
    }
    // evaluated as the Stein bound at ε = e^{−nr} so the two agree bitwise
    let eps = hoeffding_eps(pairs.len(), rate);
    stein(pairs, eps, method, Regime::Hoeffding { rate })
}

/// The type-I level `e^{−nr}` used by the Hoeffding-regime bounds.
pub fn hoeffding_eps(n: usize, rate: f64) -> f64 {
    exp(-(n as f64) * rate)
}

/// `−Σ D_k + √(2 Σ d_k² log(1/ε))`.
pub fn azuma_stein_bound(pairs: &[PairConstants], eps: f64) -> Result<BoundReport> {
    check_stein_eps(eps)?;
    stein(pairs, eps, Method::AzumaHoeffding, Regime::Stein { eps })
}

/// `−Σ D_k + √(2 n r Σ d_k²)`.
pub fn azuma_hoeffding_bound(pairs: &[PairConstants], rate: f64) -> Result<BoundReport> {
    hoeffding(pairs, rate, Method::AzumaHoeffding)
}

/// `−Σ D_k + √(4 log(1/ε) Σ c_k)`.
pub fn ks_stein_bound(pairs: &[PairConstants], eps: f64) -> Result<BoundReport> {
    check_stein_eps(eps)?;
    stein(pairs, eps, Method::KearnsSaul, Regime::Stein { eps })
}

/// `−Σ D_k + √(4 n r Σ c_k)`.
pub fn ks_hoeffding_bound(pairs: &[PairConstants], rate: f64) -> Result<BoundReport> {
    hoeffding(pairs, rate, Method::KearnsSaul)
}

/// Second-order comparison terms `f`, `g` built from
/// `η = 1 + e^{D_{3/2}/2} + e^{−D_{1/2}/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmvBounds {
    pub f: f64,
    pub g: f64,
    pub eta: f64,
}

/// `η` for a pair; always above one.
pub fn amv_eta(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let d32 = renyi(1.5, rho, sigma)?;
    let d12 = renyi(0.5, rho, sigma)?;
    Ok(1.0 + exp(d32 / 2.0) + exp(-d12 / 2.0))
}

fn amv_from_eta(eta: f64, eps: f64) -> AmvBounds {
    let k = 4.0 * core::f64::consts::SQRT_2 * log(eta);
    AmvBounds { f: k * -log1p(-eps), g: k * -log(eps), eta }
}

/// `f = 4√2 log η log(1/(1−ε))`, `g = 4√2 log η log(1/ε)`.
pub fn amv_bounds(rho: &DensityMatrix, sigma: &DensityMatrix, eps: f64) -> Result<AmvBounds> {
    check_stein_eps(eps)?;
    Ok(amv_from_eta(amv_eta(rho, sigma)?, eps))
}

/// `−Φ⁻¹(ε) √V`.
pub fn second_order_s1(rho: &DensityMatrix, sigma: &DensityMatrix, eps: f64) -> Result<f64> {
    check_stein_eps(eps)?;
    Ok(s1(info_variance(rho, sigma)?, eps))
}

/// `√(2 log(1/ε) V)`.
pub fn second_order_s2(rho: &DensityMatrix, sigma: &DensityMatrix, eps: f64) -> Result<f64> {
    check_stein_eps(eps)?;
    Ok(s2(info_variance(rho, sigma)?, eps))
}

fn s1(v: f64, eps: f64) -> f64 {
    -phi_inv(eps) * sqrt(v)
}

fn s2(v: f64, eps: f64) -> f64 {
    sqrt(2.0 * -log(eps) * v)
}

/// Standard normal quantile; see [`normal::inv_cdf`].
pub fn phi_inv(p: f64) -> f64 {
    normal::inv_cdf(p)
}

/// Thresholds below which `h` (resp. `h̃`) is smaller than `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossover {
    /// `exp(−d²/(16 log²η))` with `d = ‖log Δ + D‖_∞`.
    pub eps0: f64,
    /// `exp(−c/(8 log²η))` with `c` the Kearns-Saul constant.
    pub eps0_tilde: f64,
}

fn crossover(consts: &PairConstants, eta: f64) -> Crossover {
    let l2 = log(eta) * log(eta);
    Crossover {
        eps0: exp(-consts.sup_norm * consts.sup_norm / (16.0 * l2)),
        eps0_tilde: exp(-consts.ks_constant / (8.0 * l2)),
    }
}

pub fn crossover_eps(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Crossover> {
    let consts = PairConstants::new(rho, sigma)?;
    Ok(crossover(&consts, amv_eta(rho, sigma)?))
}

/// One row of the comparison table. `neg_f` is `−f`; the others are as named.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QRow {
    pub eps: f64,
    pub neg_f: f64,
    pub g: f64,
    pub h: f64,
    pub h_tilde: f64,
    pub s1: f64,
    pub s2: f64,
}

/// Everything needed to tabulate the comparison curves for one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QCurve {
    pub constants: PairConstants,
    pub eta: f64,
    pub crossover: Crossover,
}

impl QCurve {
    pub fn new(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Self> {
        let constants = PairConstants::new(rho, sigma)?;
        let eta = amv_eta(rho, sigma)?;
        Ok(QCurve { constants, eta, crossover: crossover(&constants, eta) })
    }

    pub fn row(&self, eps: f64) -> Result<QRow> {
        check_stein_eps(eps)?;
        let amv = amv_from_eta(self.eta, eps);
        let l = -log(eps);
        let c = &self.constants;
        Ok(QRow {
            eps,
            neg_f: -amv.f,
            g: amv.g,
            h: sqrt(2.0 * l) * c.sup_norm,
            h_tilde: sqrt(4.0 * c.ks_constant * l),
            s1: s1(c.variance, eps),
            s2: s2(c.variance, eps),
        })
    }
}

/// Comparison table over an `ε` grid.
pub fn q_curve(rho: &DensityMatrix, sigma: &DensityMatrix, eps_grid: &[f64]) -> Result<Vec<QRow>> {
    let q = QCurve::new(rho, sigma)?;
    eps_grid.iter().map(|&e| q.row(e)).collect()
}

/// `k/(m+1)` for `k = 1..=m`.
pub fn uniform_grid(m: usize) -> Vec<f64> {
    (1..=m).map(|k| k as f64 / (m + 1) as f64).collect()
}
