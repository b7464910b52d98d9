//! Classical-quantum channels: Holevo capacity, one-shot and finite-`n`
//! capacity lower bounds, and channels with memory generated by letter-wise
//! Kraus maps on a shared auxiliary system.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::bounds_corr::{factorized_stein_bound, moderate_lower, moderate_upper_form};
use crate::divergences::{info_variance, rel_entropy};
use crate::fcs_gibbs::{minimal_lower_r, minimal_upper_r, Generator, GeneratingTriple, KrausMap, StateFamily};
use crate::math::{exp, log, sqrt};
use crate::modular::sup_norm_c;
use crate::np_oracle::d_h;
use crate::numerics::{CMatrix, HermitianMatrix};
use crate::states::{check_dim, DensityMatrix, SamplingMode};
use crate::{Error, Result};

/// Stop when the prior moves less than this in sup norm...
pub const PRIOR_TOL: f64 = 1e-10;
/// ...and the duality gap is below this.
pub const GAP_TOL: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 100_000;
/// Largest number of input strings enumerated for an `n`-letter channel.
pub const MAX_STRINGS: usize = 10_000;
/// Prior weights at or below this are treated as unused letters.
const PRIOR_ZERO: f64 = 1e-12;

/// Map from a finite alphabet to states of a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct CQChannel {
    alphabet: Vec<String>,
    outputs: Vec<DensityMatrix>,
}

impl CQChannel {
    pub fn new(alphabet: Vec<String>, outputs: Vec<DensityMatrix>) -> Result<Self> {
        if alphabet.is_empty() || alphabet.len() != outputs.len() {
            return Err(Error::param("alphabet", "need one output per symbol and at least one symbol"));
        }
        let dim = outputs[0].dim();
        if let Some(bad) = outputs.iter().find(|o| o.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: bad.dim() });
        }
        for (i, a) in alphabet.iter().enumerate() {
            if alphabet[..i].contains(a) {
                return Err(Error::param("alphabet", alloc::format!("duplicate symbol {a:?}")));
            }
        }
        Ok(CQChannel { alphabet, outputs })
    }

    /// Symbols `"0"`, `"1"`, … with Hilbert-Schmidt random outputs.
    pub fn random(letters: usize, dim: usize, seed: u64) -> Result<Self> {
        let outputs = (0..letters)
            .map(|i| DensityMatrix::random(dim, seed.wrapping_mul(1_000_003).wrapping_add(i as u64), SamplingMode::HilbertSchmidt))
            .collect::<Result<Vec<_>>>()?;
        Self::new((0..letters).map(|i| i.to_string()).collect(), outputs)
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn outputs(&self) -> &[DensityMatrix] {
        &self.outputs
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.outputs[0].dim()
    }

    fn check_prior(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.len() || p.iter().any(|&x| !(x >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
            return Err(Error::param("prior", "must be a probability vector over the alphabet"));
        }
        Ok(())
    }

    /// `W(p) = Σ p(x) W(x)`.
    pub fn mixture(&self, p: &[f64]) -> Result<DensityMatrix> {
        self.check_prior(p)?;
        let mut m = CMatrix::zeros(self.dim(), self.dim());
        for (o, &w) in self.outputs.iter().zip(p) {
            m = m.add(&o.matrix().as_cmatrix().scale(w))?;
        }
        DensityMatrix::new(HermitianMatrix::symmetrized(m))
    }

    /// Memoryless `n`-fold use; symbols are joined with `,`.
    pub fn tensor_power(&self, n: usize) -> Result<Self> {
        let strings = enumerate_strings(self.len(), n)?;
        let alphabet = strings.iter().map(|s| join(&self.alphabet, s)).collect();
        let outputs = strings
            .iter()
            .map(|s| DensityMatrix::product(&s.iter().map(|&i| self.outputs[i].clone()).collect::<Vec<_>>()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(alphabet, outputs)
    }

    // letters with non-negligible prior weight
    fn restricted(&self, p: &[f64]) -> (CQChannel, Vec<f64>) {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| p[i] > PRIOR_ZERO).collect();
        let total: f64 = keep.iter().map(|&i| p[i]).sum();
        (
            CQChannel {
                alphabet: keep.iter().map(|&i| self.alphabet[i].clone()).collect(),
                outputs: keep.iter().map(|&i| self.outputs[i].clone()).collect(),
            },
            keep.iter().map(|&i| p[i] / total).collect(),
        )
    }
}

fn join(alphabet: &[String], s: &[usize]) -> String {
    let mut out = String::new();
    for (k, &i) in s.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        out.push_str(&alphabet[i]);
    }
    out
}

fn enumerate_strings(letters: usize, n: usize) -> Result<Vec<Vec<usize>>> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    let mut count = 1usize;
    for _ in 0..n {
        count = count.saturating_mul(letters);
        if count > MAX_STRINGS {
            return Err(Error::ResourceLimit { dim: count, limit: MAX_STRINGS });
        }
    }
    Ok((0..count)
        .map(|mut c| {
            let mut s = vec![0; n];
            for slot in s.iter_mut().rev() {
                *slot = c % letters;
                c /= letters;
            }
            s
        })
        .collect())
}

fn block_diagonal(blocks: &[(f64, &DensityMatrix)]) -> Result<DensityMatrix> {
    let d = blocks[0].1.dim();
    let dim = d * blocks.len();
    check_dim(dim)?;
    let mut m = CMatrix::zeros(dim, dim);
    for (b, (w, s)) in blocks.iter().enumerate() {
        let src = s.matrix().as_cmatrix();
        for i in 0..d {
            for j in 0..d {
                m[(b * d + i, b * d + j)] = src[(i, j)] * Complex64::new(*w, 0.0);
            }
        }
    }
    DensityMatrix::new(HermitianMatrix::symmetrized(m))
}

/// `ρ_X = Σ p(x)|x><x| ⊗ W(x)` and `σ_X = Σ p(x)|x><x| ⊗ W(p)`.
pub fn lifted_states(channel: &CQChannel, p: &[f64]) -> Result<(DensityMatrix, DensityMatrix)> {
    let mix = channel.mixture(p)?;
    let rho: Vec<(f64, &DensityMatrix)> = p.iter().copied().zip(channel.outputs.iter()).collect();
    let sigma: Vec<(f64, &DensityMatrix)> = p.iter().map(|&w| (w, &mix)).collect();
    Ok((block_diagonal(&rho)?, block_diagonal(&sigma)?))
}

/// Holevo capacity together with the optimizing prior and divergence centre.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityReport {
    pub chi_star: f64,
    pub sigma_star: DensityMatrix,
    /// `Σ p*(x) V(W(x)‖σ*)` at the converged prior.
    pub v_min: f64,
    pub prior: Vec<f64>,
    /// `max_x D(W(x)‖σ*) − χ*` at termination.
    pub gap: f64,
    pub iterations: usize,
}

/// Blahut-Arimoto style alternating maximization
/// `p(x) ← p(x) exp(D(W(x)‖W(p)))`, normalized.
pub fn holevo_capacity(channel: &CQChannel) -> Result<CapacityReport> {
    let k = channel.len();
    let mut p = vec![1.0 / k as f64; k];
    let mut gap = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        let mix = channel.mixture(&p)?;
        let d: Vec<f64> = channel.outputs.iter().map(|o| rel_entropy(o, &mix)).collect::<Result<_>>()?;
        let chi: f64 = p.iter().zip(&d).map(|(a, b)| a * b).sum();
        let dmax = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        gap = dmax - chi;
        // shift by the maximum to keep the weights finite
        let mut next: Vec<f64> = p.iter().zip(&d).map(|(&pi, &di)| pi * exp(di - dmax)).collect();
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= s);
        let moved = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if moved < PRIOR_TOL && gap < GAP_TOL {
            let v_min = p
                .iter()
                .zip(&channel.outputs)
                .filter(|(&w, _)| w > 0.0)
                .map(|(&w, o)| Ok(w * info_variance(o, &mix)?))
                .sum::<Result<f64>>()?;
            return Ok(CapacityReport { chi_star: chi.max(0.0), sigma_star: mix, v_min, prior: p, gap, iterations: it });
        }
        p = next;
    }
    Err(Error::NoConvergence { iterations: MAX_ITERATIONS, gap })
}

/// `c_p = ‖log Δ + D‖_∞` of the lifted pair at prior `p`, over the letters
/// `p` actually uses. Requires faithful outputs on that support.
pub fn lifted_sup_norm(channel: &CQChannel, p: &[f64]) -> Result<f64> {
    channel.check_prior(p)?;
    let (sub, q) = channel.restricted(p);
    let (rho, sigma) = lifted_states(&sub, &q)?;
    sup_norm_c(&rho, &sigma)
}

fn wr_penalty(eps: f64, eps_prime: f64) -> Result<f64> {
    if !(0.0 < eps_prime && eps_prime < eps && eps < 1.0) {
        return Err(Error::param("eps", "need 0 < eps' < eps < 1"));
    }
    Ok(log(4.0 * eps / (eps - eps_prime)))
}

/// One-shot lower bound `d_h(ρ_X, σ_X, ε') − log(4ε/(ε−ε'))`.
pub fn wr_lower_bound(channel: &CQChannel, eps: f64, eps_prime: f64, prior: &[f64]) -> Result<f64> {
    let penalty = wr_penalty(eps, eps_prime)?;
    let (rho, sigma) = lifted_states(channel, prior)?;
    Ok(d_h(&rho, &sigma, eps_prime)? - penalty)
}

impl CapacityReport {
    /// `nχ* − √(2n log(1/ε'))·c_p − log(4ε/(ε−ε'))` with `c_p` at the
    /// converged prior.
    pub fn lower_memoryless(&self, channel: &CQChannel, n: usize, eps: f64, eps_prime: f64) -> Result<f64> {
        let penalty = wr_penalty(eps, eps_prime)?;
        if n == 0 {
            return Err(Error::param("n", "must be at least 1"));
        }
        let c = lifted_sup_norm(channel, &self.prior)?;
        let nf = n as f64;
        Ok(nf * self.chi_star - sqrt(2.0 * nf * -log(eps_prime)) * c - penalty)
    }
}

pub fn capacity_lower_memoryless(channel: &CQChannel, n: usize, eps: f64, eps_prime: f64) -> Result<f64> {
    holevo_capacity(channel)?.lower_memoryless(channel, n, eps, eps_prime)
}

/// Which factorization inequality a channel constant refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Upper,
    Lower,
}

/// Certified channel factorization constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelCertificate {
    pub r: f64,
    pub direction: Direction,
    pub valid_through: usize,
}

/// Channels `W_n` with memory: letter `x` acts on a shared auxiliary system
/// through a map `E_x: B → A ⊗ B` leaving `ρ_B` invariant, and
/// `W_n(x_1..x_n) = Tr_B (id ⊗ E_{x_n}) ∘ … ∘ E_{x_1}(ρ_B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CQChannelFamily {
    alphabet: Vec<String>,
    site_dim: usize,
    aux_dim: usize,
    maps: Vec<KrausMap>,
    rho_b: DensityMatrix,
    certificates: Vec<ChannelCertificate>,
}

impl CQChannelFamily {
    pub fn new(
        alphabet: Vec<String>,
        site_dim: usize,
        aux_dim: usize,
        maps: Vec<KrausMap>,
        rho_b: DensityMatrix,
    ) -> Result<Self> {
        if alphabet.is_empty() || alphabet.len() != maps.len() {
            return Err(Error::param("alphabet", "need one map per symbol"));
        }
        // validates trace preservation and invariance of ρ_B for every letter
        GeneratingTriple::new(site_dim, aux_dim, maps.clone(), rho_b.clone())?;
        Ok(CQChannelFamily { alphabet, site_dim, aux_dim, maps, rho_b, certificates: Vec::new() })
    }

    /// `W_n = W^{⊗n}`.
    pub fn memoryless(channel: &CQChannel) -> Result<Self> {
        let maps = channel.outputs.iter().map(|o| KrausMap::replacement(1, o)).collect::<Result<Vec<_>>>()?;
        Self::new(channel.alphabet.clone(), channel.dim(), 1, maps, DensityMatrix::maximally_mixed(1)?)
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn certificates(&self) -> &[ChannelCertificate] {
        &self.certificates
    }

    fn string_family(&self, xs: &[usize]) -> Result<StateFamily> {
        let maps = xs.iter().map(|&x| self.maps[x].clone()).collect();
        let triple = GeneratingTriple::new(self.site_dim, self.aux_dim, maps, self.rho_b.clone())?;
        StateFamily::build(Generator::Fcs(triple), xs.len())
    }

    /// `W_n(x_1..x_n)` for letter indices `xs`.
    pub fn output(&self, xs: &[usize]) -> Result<DensityMatrix> {
        if xs.iter().any(|&x| x >= self.alphabet.len()) {
            return Err(Error::param("letters", "index outside the alphabet"));
        }
        Ok(self.string_family(xs)?.state(xs.len()).clone())
    }

    /// `W_1`.
    pub fn base_channel(&self) -> Result<CQChannel> {
        let outputs = (0..self.alphabet.len()).map(|x| self.output(&[x])).collect::<Result<Vec<_>>>()?;
        CQChannel::new(self.alphabet.clone(), outputs)
    }

    /// `W_n` as a channel on strings; symbols are joined with `,`.
    pub fn n_letter_channel(&self, n: usize) -> Result<CQChannel> {
        let strings = enumerate_strings(self.alphabet.len(), n)?;
        let outputs = strings.iter().map(|s| self.output(s)).collect::<Result<Vec<_>>>()?;
        CQChannel::new(strings.iter().map(|s| join(&self.alphabet, s)).collect(), outputs)
    }

    /// Certified constant for `direction` valid through `n`.
    pub fn certified(&self, n: usize, direction: Direction) -> Result<f64> {
        self.certificates
            .iter()
            .find(|c| c.direction == direction && c.valid_through >= n && c.r.is_finite())
            .map(|c| c.r)
            .ok_or(Error::Uncertified("channel factorization constant not certified through n"))
    }
}

/// Largest per-string factorization constant over all strings of length
/// `≤ n` (every prefix of a length-`n` string is covered).
pub fn channel_factorization_r(family: &CQChannelFamily, n: usize, direction: Direction) -> Result<f64> {
    let mut r = 1.0f64;
    for s in enumerate_strings(family.alphabet.len(), n)? {
        let fam = family.string_family(&s)?;
        let rs = match direction {
            Direction::Upper => minimal_upper_r(&fam, n)?,
            Direction::Lower => minimal_lower_r(&fam, n)?,
        };
        r = r.max(rs);
        if r.is_infinite() {
            break;
        }
    }
    Ok(r)
}

/// Copy of `family` with a certificate for `direction` through `n`.
pub fn certify_channel(family: &CQChannelFamily, n: usize, direction: Direction) -> Result<CQChannelFamily> {
    let r = channel_factorization_r(family, n, direction)?;
    let mut out = family.clone();
    out.certificates.retain(|c| c.direction != direction);
    out.certificates.push(ChannelCertificate { r, direction, valid_through: n });
    Ok(out)
}

/// Finite-`n` lower bound for a certified family:
/// `−(factorized Stein bound at (χ*, c_p, R, n, ε')) − log(4ε/(ε−ε'))`.
pub fn capacity_lower_factorized(family: &CQChannelFamily, n: usize, eps: f64, eps_prime: f64) -> Result<f64> {
    let r = family.certified(n, Direction::Upper)?;
    let penalty = wr_penalty(eps, eps_prime)?;
    let base = family.base_channel()?;
    let report = holevo_capacity(&base)?;
    let c = lifted_sup_norm(&base, &report.prior)?;
    Ok(-factorized_stein_bound(report.chi_star, c, r, n, eps_prime)? - penalty)
}

/// Moderate-deviation forms for `C(W_n, e^{−n a_n²})`; the `o(n a_n)`
/// remainder is omitted in both.
pub fn capacity_moderate(family: &CQChannelFamily, a_n: f64, n: usize, direction: Direction) -> Result<f64> {
    let r = family.certified(n, direction)?;
    let base = family.base_channel()?;
    let report = holevo_capacity(&base)?;
    match direction {
        Direction::Upper => {
            let c = lifted_sup_norm(&base, &report.prior)?;
            moderate_lower(report.chi_star, report.v_min, c, r, a_n, n)
        }
        Direction::Lower => Ok(moderate_upper_form(report.chi_star, report.v_min, a_n, n)),
    }
}
