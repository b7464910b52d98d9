//! Spectral measure of the log relative modular operator.
//!
//! For `ρ = Σ λ_i |e_i⟩⟨e_i|` and `σ = Σ μ_j |f_j⟩⟨f_j|`, the measure puts
//! weight `λ_i |⟨e_i|f_j⟩|²` at `log(μ_j/λ_i)`. It is the law of a classical
//! random variable `X` with `E[X] = −D(ρ‖σ)`, `Var X = V(ρ‖σ)` and
//! `E[e^X] = 1`, and it turns tensor products into convolutions.

use alloc::vec::Vec;

use crate::divergences::{overlaps, rel_entropy};
use crate::math::{exp, fabs, log};
use crate::numerics::HermitianMatrix;
use crate::states::{check_same_dim, DensityMatrix};
use crate::{Error, Result};

/// Atoms closer than this are merged.
pub const ATOM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

/// Finite atomic measure; locations strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure {
    atoms: Vec<Atom>,
}

impl SpectralMeasure {
    /// Sorts and merges atoms within [`ATOM_TOL`] of the first atom of each
    /// cluster; merged location is the weighted mean. Zero-weight atoms are
    /// dropped, tiny positive weights are kept.
    pub fn from_atoms(atoms: impl IntoIterator<Item = Atom>) -> Self {
        let mut raw: Vec<Atom> = atoms.into_iter().filter(|a| a.weight > 0.0).collect();
        raw.sort_by(|a, b| a.location.total_cmp(&b.location));
        let mut out: Vec<Atom> = Vec::with_capacity(raw.len());
        let mut start = f64::NAN;
        let mut moment = 0.0;
        for a in raw {
            match out.last_mut() {
                Some(last) if a.location - start <= ATOM_TOL => {
                    moment += a.weight * a.location;
                    last.weight += a.weight;
                    last.location = moment / last.weight;
                }
                _ => {
                    start = a.location;
                    moment = a.weight * a.location;
                    out.push(a);
                }
            }
        }
        SpectralMeasure { atoms: out }
    }

    pub fn point_mass(location: f64) -> Self {
        SpectralMeasure { atoms: alloc::vec![Atom { location, weight: 1.0 }] }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight * a.location).sum::<f64>() / self.total_weight()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.atoms.iter().map(|a| a.weight * (a.location - m) * (a.location - m)).sum::<f64>() / self.total_weight()
    }

    pub fn min_location(&self) -> f64 {
        self.atoms.first().map_or(f64::NAN, |a| a.location)
    }

    pub fn max_location(&self) -> f64 {
        self.atoms.last().map_or(f64::NAN, |a| a.location)
    }

    /// Total weight at locations `≥ threshold`.
    pub fn tail(&self, threshold: f64) -> f64 {
        self.atoms.iter().filter(|a| a.location >= threshold).map(|a| a.weight).sum()
    }

    /// Total weight at locations `≤ threshold`.
    pub fn lower_tail(&self, threshold: f64) -> f64 {
        self.atoms.iter().filter(|a| a.location <= threshold).map(|a| a.weight).sum()
    }

    /// `Σ w e^{t x}`; overflow is an error rather than `+∞`.
    pub fn mgf(&self, t: f64) -> Result<f64> {
        let v: f64 = self.atoms.iter().map(|a| a.weight * exp(t * a.location)).sum();
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Overflow("measure_mgf"))
        }
    }

    /// Law of `X + Y` for independent `X ~ self`, `Y ~ other`.
    pub fn convolve(&self, other: &SpectralMeasure) -> SpectralMeasure {
        SpectralMeasure::from_atoms(self.atoms.iter().flat_map(|a| {
            other.atoms.iter().map(move |b| Atom { location: a.location + b.location, weight: a.weight * b.weight })
        }))
    }

    /// `n`-fold self-convolution, `n ≥ 1`.
    pub fn convolve_pow(&self, n: usize) -> SpectralMeasure {
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.convolve(self);
        }
        acc
    }

    /// Left side of the tail/symmetric-error inequality:
    /// `e^{−θ} P(X ≥ −v) / (1 + e^{v−θ})`.
    pub fn weighted_tail(&self, theta: f64, v: f64) -> f64 {
        exp(-theta) / (1.0 + exp(v - theta)) * self.tail(-v)
    }
}

/// Spectral measure of `log Δ_{σ|ρ}` with respect to `ρ^{1/2}`.
/// Both states must be faithful.
pub fn relative_modular_measure(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<SpectralMeasure> {
    check_same_dim(rho, sigma)?;
    rho.require_faithful()?;
    sigma.require_faithful()?;
    let w = overlaps(rho, sigma)?;
    let lam = rho.eigenvalues();
    let mu = sigma.eigenvalues();
    Ok(SpectralMeasure::from_atoms(lam.iter().enumerate().flat_map(|(i, &l)| {
        let row = &w[i];
        mu.iter().enumerate().map(move |(j, &m)| Atom { location: log(m) - log(l), weight: l * row[j] })
    })))
}

/// Operator norm `‖log Δ_{σ|ρ} + D(ρ‖σ) id‖_∞`, i.e. the largest
/// `|log(μ_j/λ_i) + D|` over all eigenvalue pairs.
pub fn sup_norm_c(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_same_dim(rho, sigma)?;
    rho.require_faithful()?;
    sigma.require_faithful()?;
    let d = rel_entropy(rho, sigma)?;
    let (lo, hi) = log_ratio_range(rho, sigma);
    Ok(fabs(lo + d).max(fabs(hi + d)))
}

/// Smallest and largest `log(μ_j/λ_i)` over all pairs.
pub fn log_ratio_range(rho: &DensityMatrix, sigma: &DensityMatrix) -> (f64, f64) {
    let lo = log(sigma.min_eigenvalue()) - log(rho.max_eigenvalue());
    let hi = log(sigma.max_eigenvalue()) - log(rho.min_eigenvalue());
    (lo, hi)
}

/// `e*_sym(σ, e^{−θ}ρ)`, the right side matching [`SpectralMeasure::weighted_tail`].
pub fn sym_error_scaled(rho: &DensityMatrix, sigma: &DensityMatrix, theta: f64) -> Result<f64> {
    let b: HermitianMatrix = rho.matrix().scale(exp(-theta));
    crate::divergences::sym_error(sigma.matrix(), &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergences::info_variance;
    use crate::states::SamplingMode;
    use proptest::prelude::*;

    fn pair(d: usize, s1: u64, s2: u64) -> (DensityMatrix, DensityMatrix) {
        (
            DensityMatrix::random(d, s1, SamplingMode::HilbertSchmidt).unwrap(),
            DensityMatrix::random(d, s2, SamplingMode::HilbertSchmidt).unwrap(),
        )
    }

    #[test]
    fn maximally_mixed_is_point_mass() {
        let m = DensityMatrix::maximally_mixed(2).unwrap();
        let mu = relative_modular_measure(&m, &m).unwrap();
        assert_eq!(mu.atoms().len(), 1);
        assert!(mu.atoms()[0].location.abs() < 1e-15);
        assert!((mu.atoms()[0].weight - 1.0).abs() < 1e-15);
        assert!(sup_norm_c(&m, &m).unwrap().abs() < 1e-15);
    }

    #[test]
    fn classical_pair() {
        let rho = DensityMatrix::diagonal(&[0.7, 0.3]).unwrap();
        let sigma = DensityMatrix::diagonal(&[0.4, 0.6]).unwrap();
        let mu = relative_modular_measure(&rho, &sigma).unwrap();
        let a = mu.atoms();
        assert_eq!(a.len(), 2);
        assert!((a[0].location - (0.4f64 / 0.7).ln()).abs() < 1e-15);
        assert!((a[0].weight - 0.7).abs() < 1e-15);
        assert!((a[1].location - (0.6f64 / 0.3).ln()).abs() < 1e-15);
        assert!((a[1].weight - 0.3).abs() < 1e-15);
        // sup-norm over all pairs (i,j), including off-diagonal ones
        let kl = 0.7 * (0.7f64 / 0.4).ln() + 0.3 * (0.3f64 / 0.6).ln();
        let expect = [0.4f64 / 0.7, 0.6 / 0.7, 0.4 / 0.3, 0.6 / 0.3]
            .iter()
            .map(|r| (r.ln() + kl).abs())
            .fold(0.0, f64::max);
        assert!((sup_norm_c(&rho, &sigma).unwrap() - expect).abs() < 1e-14);
        assert!((mu.tail(0.0) - 0.3).abs() < 1e-15);
        assert_eq!(mu.tail(f64::NEG_INFINITY), mu.total_weight());
        assert_eq!(mu.tail(10.0), 0.0);
    }

    #[test]
    fn fig1_pair_has_four_atoms() {
        let rho = DensityMatrix::from_bloch([-0.177483, 0.365807, 0.291007]).unwrap();
        let sigma = DensityMatrix::from_bloch([-0.452239, -0.141906, -0.159193]).unwrap();
        let mu = relative_modular_measure(&rho, &sigma).unwrap();
        assert_eq!(mu.atoms().len(), 4);
        assert!((mu.mean() + rel_entropy(&rho, &sigma).unwrap()).abs() < 1e-9);
        assert!((mu.variance() - info_variance(&rho, &sigma).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn mgf_examples() {
        let (rho, sigma) = pair(3, 1, 2);
        let mu = relative_modular_measure(&rho, &sigma).unwrap();
        assert!((mu.mgf(0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((mu.mgf(1.0).unwrap() - 1.0).abs() < 1e-10);
        let h = 1e-6;
        let slope = (mu.mgf(h).unwrap() - mu.mgf(-h).unwrap()) / (2.0 * h);
        assert!((slope + rel_entropy(&rho, &sigma).unwrap()).abs() < 1e-4);
        let wide = SpectralMeasure::point_mass(800.0);
        assert_eq!(wide.mgf(1.0), Err(Error::Overflow("measure_mgf")));
    }

    #[test]
    fn clustering_merges_near_atoms() {
        let m = SpectralMeasure::from_atoms([
            Atom { location: 1.0, weight: 0.25 },
            Atom { location: 1.0 + 5e-10, weight: 0.25 },
            Atom { location: 2.0, weight: 1e-16 },
            Atom { location: 3.0, weight: 0.0 },
        ]);
        assert_eq!(m.atoms().len(), 2);
        assert!((m.atoms()[0].location - (1.0 + 2.5e-10)).abs() < 1e-15);
        assert_eq!(m.atoms()[1].weight, 1e-16);
    }

    #[test]
    fn product_measure_matches_tensor_construction() {
        let (r1, s1) = pair(2, 10, 11);
        let (r2, s2) = pair(3, 12, 13);
        let direct = relative_modular_measure(&r1.tensor(&r2).unwrap(), &s1.tensor(&s2).unwrap()).unwrap();
        let conv = relative_modular_measure(&r1, &s1).unwrap().convolve(&relative_modular_measure(&r2, &s2).unwrap());
        assert_eq!(direct.atoms().len(), conv.atoms().len());
        for (a, b) in direct.atoms().iter().zip(conv.atoms()) {
            assert!((a.location - b.location).abs() < 1e-10);
            assert!((a.weight - b.weight).abs() < 1e-10);
        }
        let m1 = relative_modular_measure(&r1, &s1).unwrap();
        let same = m1.convolve(&SpectralMeasure::point_mass(0.0));
        assert_eq!(same, m1);
        let sq = m1.convolve_pow(2);
        assert!((sq.mean() - 2.0 * m1.mean()).abs() < 1e-12);
        let direct2 = relative_modular_measure(&r1.tensor_pow(2).unwrap(), &s1.tensor_pow(2).unwrap()).unwrap();
        for (a, b) in direct2.atoms().iter().zip(sq.atoms()) {
            assert!((a.location - b.location).abs() < 1e-10 && (a.weight - b.weight).abs() < 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn moments(d in 2usize..6, s1: u64, s2: u64) {
            let (rho, sigma) = pair(d, s1, s2);
            let mu = relative_modular_measure(&rho, &sigma).unwrap();
            prop_assert!((mu.total_weight() - 1.0).abs() < 1e-10);
            prop_assert!((mu.mean() + rel_entropy(&rho, &sigma).unwrap()).abs() < 1e-9);
            prop_assert!((mu.variance() - info_variance(&rho, &sigma).unwrap()).abs() < 1e-9);
            prop_assert!((mu.mgf(1.0).unwrap() - 1.0).abs() < 1e-10);
            let c = sup_norm_c(&rho, &sigma).unwrap();
            prop_assert!(c * c >= mu.variance() - 1e-12);
            prop_assert!(mu.atoms().windows(2).all(|w| w[0].location < w[1].location));
        }

        #[test]
        fn reverse_markov(d in 2usize..5, s1: u64, s2: u64, x in 0.01f64..5.0) {
            // P(e^X > x) ≥ E[(e^X − x)/e^X] = 1 − x E[e^{−X}]
            let (rho, sigma) = pair(d, s1, s2);
            let mu = relative_modular_measure(&rho, &sigma).unwrap();
            let lhs: f64 = mu.atoms().iter().filter(|a| a.location.exp() > x).map(|a| a.weight).sum();
            let rhs = 1.0 - x * mu.mgf(-1.0).unwrap();
            prop_assert!(lhs >= rhs - 1e-12);
        }

        #[test]
        fn weighted_tail_below_symmetric_error(s1: u64, s2: u64, theta in -4.0f64..4.0, v in -4.0f64..4.0) {
            let (rho, sigma) = pair(2, s1, s2);
            let mu = relative_modular_measure(&rho, &sigma).unwrap();
            prop_assert!(mu.weighted_tail(theta, v) <= sym_error_scaled(&rho, &sigma, theta).unwrap() + 1e-10);
        }

        #[test]
        fn tail_is_monotone(s1: u64, s2: u64, a in -5.0f64..5.0, b in -5.0f64..5.0) {
            let (rho, sigma) = pair(3, s1, s2);
            let mu = relative_modular_measure(&rho, &sigma).unwrap();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(mu.tail(lo) >= mu.tail(hi));
        }
    }
}
