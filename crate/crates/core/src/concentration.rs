//! Martingale concentration bounds and a seeded Monte Carlo harness for
//! checking them empirically.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::divergences::binary_kl;
use crate::math::{atanh, exp, fabs, log1p, sqrt};
use crate::{Error, Result};

/// Azuma-Hoeffding tail `exp(−α²/(2 Σ d_k²))` for a super-martingale with
/// increments bounded by `d_k`.
pub fn azuma_tail(alpha: f64, d: &[f64]) -> Result<f64> {
    if !(alpha >= 0.0) {
        return Err(Error::param("alpha", "must be nonnegative"));
    }
    if d.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::param("d", "bounds must be nonnegative"));
    }
    if alpha == 0.0 {
        return Ok(1.0);
    }
    let s: f64 = d.iter().map(|x| x * x).sum();
    if s == 0.0 {
        return Ok(0.0);
    }
    Ok(exp(-alpha * alpha / (2.0 * s)).min(1.0))
}

/// Variance-aware Azuma bound on `P(X_n − X_0 ≥ κ n)` for increments with
/// `X_k − E[X_k|F] ≤ d` and conditional variance `≤ ν²`, `0 < ν < d`.
pub fn improved_azuma_tail(kappa: f64, n: usize, d: f64, nu: f64) -> Result<f64> {
    if !(0.0 < nu && nu < d) {
        return Err(Error::param("nu, d", "need 0 < nu < d"));
    }
    if !(kappa >= 0.0) {
        return Err(Error::param("kappa", "must be nonnegative"));
    }
    let gamma = nu * nu / (d * d);
    let delta = kappa / d;
    if delta > 1.0 {
        return Ok(0.0);
    }
    let kl = binary_kl((delta + gamma) / (1.0 + gamma), gamma / (1.0 + gamma))?;
    Ok(exp(-(n as f64) * kl).min(1.0))
}

/// Sub-Gaussian constant for a variable in `[a, b]` whose mean sits at
/// relative position `p`; at most the Hoeffding value `(b−a)²/8`, attained
/// only at `p = 1/2`. Symmetric in `p ↔ 1−p`.
pub fn kearns_saul_constant(a: f64, b: f64, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param("p", "must lie in [0,1]"));
    }
    let range2 = (b - a) * (b - a);
    // (1−2p)/log((1−p)/p) = u/(2 atanh u) with u = 1 − 2p
    let u = 1.0 - 2.0 * p;
    let ratio = if fabs(u) < 1e-5 {
        0.5 * (1.0 - u * u / 3.0)
    } else if fabs(u) >= 1.0 {
        0.0
    } else {
        u / (2.0 * atanh(u))
    };
    Ok(range2 * ratio / 4.0)
}

/// Kearns-Saul lower tail `P(Σ X_k − μ_n ≤ −α√n) ≤ exp(−α² n/(4 Σ c_k))`.
pub fn kearns_saul_tail(alpha: f64, n: usize, c: &[f64]) -> Result<f64> {
    if !(alpha >= 0.0) {
        return Err(Error::param("alpha", "must be nonnegative"));
    }
    if alpha == 0.0 {
        return Ok(1.0);
    }
    let s: f64 = c.iter().sum();
    if s == 0.0 {
        return Ok(0.0);
    }
    Ok(exp(-alpha * alpha * n as f64 / (4.0 * s)).min(1.0))
}

/// Bennett's function `h(u) = (1+u) log(1+u) − u`.
pub fn bennett_h(u: f64) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(Error::param("u", "must be nonnegative"));
    }
    Ok((1.0 + u) * log1p(u) - u)
}

/// Increment processes for the Monte Carlo harness. `S_0 = 0` and
/// `S_k = S_{k−1} + X_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IncrementModel {
    /// `±1` with equal probability.
    Rademacher,
    /// `1` with probability `p`, else `0`.
    Bernoulli { p: f64 },
    /// Uniform on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    /// `±1` steps; up with probability 1/2 while `S ≤ 0` and with
    /// probability `p_up ≤ 1/2` while `S > 0`. A bounded super-martingale
    /// whose increments are neither independent nor identically distributed.
    SelfCorrectingWalk { p_up: f64 },
    /// Unbounded; rejected by the harness.
    Gaussian { sd: f64 },
}

impl IncrementModel {
    /// Almost-sure range of one increment, `None` if unbounded.
    pub fn range(&self) -> Option<(f64, f64)> {
        match *self {
            IncrementModel::Rademacher | IncrementModel::SelfCorrectingWalk { .. } => Some((-1.0, 1.0)),
            IncrementModel::Bernoulli { .. } => Some((0.0, 1.0)),
            IncrementModel::Uniform { lo, hi } => Some((lo, hi)),
            IncrementModel::Gaussian { .. } => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            IncrementModel::Bernoulli { p } if !(0.0..=1.0).contains(&p) => {
                Err(Error::param("p", "must lie in [0,1]"))
            }
            IncrementModel::Uniform { lo, hi } if !(lo < hi) => Err(Error::param("lo, hi", "need lo < hi")),
            IncrementModel::SelfCorrectingWalk { p_up } if !(0.0..=0.5).contains(&p_up) => {
                Err(Error::param("p_up", "must lie in [0, 1/2]"))
            }
            IncrementModel::Gaussian { .. } => Err(Error::param("model", "unbounded increments are not supported")),
            _ => Ok(()),
        }
    }

    fn step(&self, s: f64, rng: &mut impl Rng) -> f64 {
        match *self {
            IncrementModel::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            IncrementModel::Bernoulli { p } => {
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            }
            IncrementModel::Uniform { lo, hi } => rng.random_range(lo..=hi),
            IncrementModel::SelfCorrectingWalk { p_up } => {
                let p = if s > 0.0 { p_up } else { 0.5 };
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    -1.0
                }
            }
            IncrementModel::Gaussian { .. } => unreachable!("rejected by validate"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailSide {
    /// `P(S_n ≥ threshold)`
    Upper,
    /// `P(S_n ≤ threshold)`
    Lower,
}

/// Empirical frequency with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub probability: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Simulates `trials` paths of length `n` and returns the final sums `S_n`.
/// Trial `i` draws from ChaCha8 seeded with `seed` on stream `i`, so results
/// do not depend on evaluation order.
pub fn simulate_sums(model: IncrementModel, n: usize, trials: usize, seed: u64) -> Result<Vec<f64>> {
    model.validate()?;
    if trials == 0 {
        return Err(Error::param("trials", "must be positive"));
    }
    let mut out = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let mut s = 0.0;
        for _ in 0..n {
            s += model.step(s, &mut rng);
        }
        out.push(s);
    }
    Ok(out)
}

/// Tail frequency of precomputed sums.
pub fn tail_estimate(sums: &[f64], threshold: f64, side: TailSide) -> TailEstimate {
    let hits = sums
        .iter()
        .filter(|&&s| match side {
            TailSide::Upper => s >= threshold,
            TailSide::Lower => s <= threshold,
        })
        .count();
    let trials = sums.len();
    let p = hits as f64 / trials as f64;
    TailEstimate { probability: p, std_error: sqrt(p * (1.0 - p) / trials as f64), trials }
}

/// One-shot harness: empirical `P(S_n ≥ t)` or `P(S_n ≤ t)`.
pub fn mc_martingale_tail(
    model: IncrementModel,
    n: usize,
    trials: usize,
    threshold: f64,
    side: TailSide,
    seed: u64,
) -> Result<TailEstimate> {
    let sums = simulate_sums(model, n, trials, seed)?;
    Ok(tail_estimate(&sums, threshold, side))
}
