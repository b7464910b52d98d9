//! Bounds for state families with an upper factorization constant `R`, and
//! the moderate-deviation forms built on the Bennett chain.
//!
//! The moderate-deviation statements hold "for `n` large enough". Here they
//! are only evaluated as formulas. [`moderate_certified`] reports when the
//! finite-`n` chain behind the lower form actually applies.

use alloc::vec::Vec;

use crate::bounds_iid::PairConstants;
use crate::concentration::bennett_h;
use crate::fcs_gibbs::StateFamily;
use crate::math::{exp, expm1, log, sqrt};
use crate::{Error, Result};

fn check_r(r: f64) -> Result<f64> {
    if r >= 1.0 && r.is_finite() {
        Ok(log(r))
    } else {
        Err(Error::param("R", "must be a finite number >= 1"))
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 1.0 {
        Ok(())
    } else {
        Err(Error::param("eps", "must lie in (0,1]"))
    }
}

fn check_rate(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::param("r", "must be positive and finite"))
    }
}

fn check_n(n: usize) -> Result<f64> {
    if n == 0 {
        Err(Error::param("n", "must be at least 1"))
    } else {
        Ok(n as f64)
    }
}

// −ΣD + C√(2L) for L ≤ C²/2, else −ΣD + C²/2 + L, with L = log(Rⁿ/ε)
fn two_branch(d_sum: f64, c2: f64, l: f64) -> f64 {
    if l <= c2 / 2.0 {
        -d_sum + sqrt(2.0 * c2 * l)
    } else {
        -d_sum + c2 / 2.0 + l
    }
}

/// Stein-regime bound on `log β_n(ε)` for a homogeneous family.
pub fn factorized_stein_bound(d1: f64, c: f64, r: f64, n: usize, eps: f64) -> Result<f64> {
    let log_r = check_r(r)?;
    let nf = check_n(n)?;
    check_eps(eps)?;
    if !(c >= 0.0) {
        return Err(Error::param("c", "must be nonnegative"));
    }
    Ok(two_branch(nf * d1, nf * c * c, nf * log_r - log(eps)))
}

/// Hoeffding-regime bound on `log β̃_n(r)` for a homogeneous family.
pub fn factorized_hoeffding_bound(d1: f64, c: f64, r_fac: f64, n: usize, rate: f64) -> Result<f64> {
    let log_r = check_r(r_fac)?;
    let nf = check_n(n)?;
    check_rate(rate)?;
    if !(c >= 0.0) {
        return Err(Error::param("c", "must be nonnegative"));
    }
    Ok(if rate <= c * c / 2.0 - log_r {
        -nf * d1 + nf * c * sqrt(2.0 * (rate + log_r))
    } else {
        -nf * (d1 - c * c / 2.0 - rate - log_r)
    })
}

fn step_sums(steps: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    let n = check_n(steps.len())?;
    let d: f64 = steps.iter().map(|s| s.0).sum();
    let c2: f64 = steps.iter().map(|s| s.1 * s.1).sum();
    Ok((n, d, c2))
}

/// Stein-regime bound for per-step constants `(D_k, c_k)`; `n` is the
/// number of steps.
pub fn nonhomog_stein_bound(steps: &[(f64, f64)], r: f64, eps: f64) -> Result<f64> {
    let log_r = check_r(r)?;
    check_eps(eps)?;
    let (n, d, c2) = step_sums(steps)?;
    Ok(two_branch(d, c2, n * log_r - log(eps)))
}

/// Hoeffding-regime bound for per-step constants `(D_k, c_k)`.
pub fn nonhomog_hoeffding_bound(steps: &[(f64, f64)], r: f64, rate: f64) -> Result<f64> {
    let log_r = check_r(r)?;
    check_rate(rate)?;
    let (n, d, c2) = step_sums(steps)?;
    Ok(if rate <= c2 / (2.0 * n) - log_r {
        -d + sqrt(2.0 * c2 * n * (rate + log_r))
    } else {
        -d + c2 / 2.0 + n * (rate + log_r)
    })
}

/// Largest gap `nD₁ − log L_n` for which the Bennett optimizer stays in `t ≤ 1`.
pub fn bennett_window(n: usize, v1: f64, c: f64) -> f64 {
    expm1(c) * n as f64 * v1 / c
}

/// `Rⁿ exp(−n V₁ h(c·gap/(n V₁)) / c²)`, a bound on the type-I error of the
/// test with threshold `log L_n = nD₁ − gap`.
pub fn bennett_alpha_bound(n: usize, v1: f64, c: f64, r: f64, gap: f64) -> Result<f64> {
    let log_r = check_r(r)?;
    let nf = check_n(n)?;
    if !(v1 > 0.0) || !(c > 0.0) {
        return Err(Error::param("V1, c", "must be positive"));
    }
    let window = bennett_window(n, v1, c);
    if !(gap >= 0.0 && gap <= window) {
        return Err(Error::Inadmissible(alloc::format!("gap {gap} outside [0, {window}]")));
    }
    let h = bennett_h(c * gap / (nf * v1))?;
    Ok(exp(nf * log_r - nf * v1 * h / (c * c)))
}

/// Upper limit on `log R` for the moderate lower form.
pub fn moderate_r_limit(v1: f64, c: f64) -> f64 {
    let ec = exp(c);
    (4.0 - ec) * (ec - 1.0) * (ec - 1.0) * v1 / (6.0 * c * c)
}

fn check_admissible(v1: f64, c: f64, log_r: f64) -> Result<()> {
    if !(c > 0.0) || !(c < core::f64::consts::LN_2 * 2.0) {
        return Err(Error::Inadmissible(alloc::format!("c = {c} must lie in (0, log 4)")));
    }
    if !(v1 > 0.0) {
        return Err(Error::Inadmissible(alloc::format!("variance {v1} must be positive")));
    }
    let limit = moderate_r_limit(v1, c);
    if !(log_r < limit) {
        return Err(Error::Inadmissible(alloc::format!("log R = {log_r} must be below {limit}")));
    }
    Ok(())
}

fn moderate_radius(c: f64, log_r: f64, a_n: f64) -> f64 {
    sqrt(3.0 * (log_r + a_n * a_n) / (4.0 - exp(c)))
}

fn check_a(a_n: f64) -> Result<()> {
    if a_n.is_finite() && a_n >= 0.0 {
        Ok(())
    } else {
        Err(Error::param("a_n", "must be finite and nonnegative"))
    }
}

/// `n[D₁ − √(2V₁)·(3(log R + a_n²)/(4 − e^c))^{1/2}]`, the lower form for
/// `D_H^{ε_n}` with `ε_n = e^{−n a_n²}`.
pub fn moderate_lower(d1: f64, v1: f64, c: f64, r: f64, a_n: f64, n: usize) -> Result<f64> {
    let log_r = check_r(r)?;
    let nf = check_n(n)?;
    check_a(a_n)?;
    check_admissible(v1, c, log_r)?;
    Ok(nf * (d1 - sqrt(2.0 * v1) * moderate_radius(c, log_r, a_n)))
}

/// Whether the gap used by [`moderate_lower`] lies inside the Bennett window,
/// so that the lower form is a proven finite-`n` inequality.
pub fn moderate_certified(v1: f64, c: f64, r: f64, a_n: f64, n: usize) -> Result<bool> {
    let log_r = check_r(r)?;
    let nf = check_n(n)?;
    check_a(a_n)?;
    check_admissible(v1, c, log_r)?;
    let gap = nf * sqrt(2.0 * v1) * moderate_radius(c, log_r, a_n);
    Ok(gap <= bennett_window(n, v1, c))
}

/// `n[D₁ − √(2V₁)·a_n]`; the `o(a_n)` remainder is not included.
pub fn moderate_upper_form(d1: f64, v1: f64, a_n: f64, n: usize) -> f64 {
    let nf = n as f64;
    nf * (d1 - sqrt(2.0 * v1) * a_n)
}

/// Per-step `(D_k, V_k)` version; returns `(lower, upper_form)`.
pub fn moderate_nonhomog(steps: &[(f64, f64)], c_sup: f64, r: f64, a_n: f64) -> Result<(f64, f64)> {
    let log_r = check_r(r)?;
    check_a(a_n)?;
    let n = check_n(steps.len())?;
    let d: f64 = steps.iter().map(|s| s.0).sum();
    let v: f64 = steps.iter().map(|s| s.1).sum();
    check_admissible(v / n, c_sup, log_r)?;
    let spread = sqrt(2.0 * n * v);
    Ok((d - spread * moderate_radius(c_sup, log_r, a_n), d - spread * a_n))
}

/// Per-step constants of the auxiliary marginals `ρ̃_k`, `σ̃_k`, `k ≤ n`.
pub fn family_step_constants(rho: &StateFamily, sigma: &StateFamily, n: usize) -> Result<Vec<PairConstants>> {
    if n == 0 || n > rho.len() || n > sigma.len() {
        return Err(Error::param("n", "exceeds the cached family length"));
    }
    (1..=n).map(|k| PairConstants::new(rho.marginal(k), sigma.marginal(k))).collect()
}

/// `max(R_ρ, R_σ)` from the certified upper constants; refuses uncertified families.
pub fn family_upper_r(rho: &StateFamily, sigma: &StateFamily, n: usize) -> Result<f64> {
    Ok(rho.certified_upper(n)?.max(sigma.certified_upper(n)?))
}

fn steps_dc(consts: &[PairConstants]) -> Vec<(f64, f64)> {
    consts.iter().map(|c| (c.divergence, c.sup_norm)).collect()
}

/// Stein-regime bound for a certified pair of families.
pub fn family_stein_bound(rho: &StateFamily, sigma: &StateFamily, n: usize, eps: f64) -> Result<f64> {
    let r = family_upper_r(rho, sigma, n)?;
    nonhomog_stein_bound(&steps_dc(&family_step_constants(rho, sigma, n)?), r, eps)
}

/// Hoeffding-regime bound for a certified pair of families.
pub fn family_hoeffding_bound(rho: &StateFamily, sigma: &StateFamily, n: usize, rate: f64) -> Result<f64> {
    let r = family_upper_r(rho, sigma, n)?;
    nonhomog_hoeffding_bound(&steps_dc(&family_step_constants(rho, sigma, n)?), r, rate)
}

/// One row of the moderate-deviation table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModerateRow {
    pub n: usize,
    pub a_n: f64,
    /// `e^{−n a_n²}`
    pub eps_n: f64,
    pub lower: f64,
    pub upper_form: f64,
    /// The lower form is a finite-`n` inequality (Bennett window respected).
    pub certified: bool,
}

/// Moderate-deviation forms for a certified pair of families.
pub fn family_moderate(rho: &StateFamily, sigma: &StateFamily, n: usize, a_n: f64) -> Result<ModerateRow> {
    let r = family_upper_r(rho, sigma, n)?;
    let consts = family_step_constants(rho, sigma, n)?;
    let c_sup = consts.iter().map(|c| c.sup_norm).fold(0.0, f64::max);
    let steps: Vec<(f64, f64)> = consts.iter().map(|c| (c.divergence, c.variance)).collect();
    let (lower, upper_form) = moderate_nonhomog(&steps, c_sup, r, a_n)?;
    let v_mean = steps.iter().map(|s| s.1).sum::<f64>() / n as f64;
    let certified = moderate_certified(v_mean, c_sup, r, a_n, n)?;
    let eps_n = exp(-(n as f64) * a_n * a_n);
    Ok(ModerateRow { n, a_n, eps_n, lower, upper_form, certified })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds_iid::{azuma_stein_bound, PairConstants};
    use crate::modular::SpectralMeasure;
    use crate::modular::Atom;
    use crate::fcs_gibbs::{certify_family, commutative_fcs, Generator, GeneratingTriple, GibbsChain, Which};
    use crate::modular::relative_modular_measure;
    use crate::np_oracle::{d_h, optimal_type2, optimal_type2_hoeffding};
    use crate::numerics::HermitianMatrix;
    use crate::states::DensityMatrix;
    use proptest::prelude::*;

    fn zz_field(j: f64, g: f64, beta: f64) -> GibbsChain {
        let z = HermitianMatrix::diagonal(&[1.0, -1.0]);
        let x = HermitianMatrix::from_real_symmetric(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let field = z.scale(g).add(&x.scale(0.5 * g)).unwrap();
        GibbsChain::new(2, z.kron(&z).scale(j), beta, Some(field)).unwrap()
    }

    fn certified(g: Generator, n: usize) -> StateFamily {
        certify_family(&StateFamily::build(g, n).unwrap(), n, Which::Both).unwrap()
    }

    #[test]
    fn gibbs_pair_dominates_oracle() {
        let rho = certified(Generator::Gibbs(zz_field(0.5, 0.8, 0.4)), 3);
        let sigma = certified(Generator::Gibbs(zz_field(0.3, -0.6, 0.4)), 3);
        let r = family_upper_r(&rho, &sigma, 3).unwrap();
        assert!(r > 1.0);
        let pc = PairConstants::new(rho.state(1), sigma.state(1)).unwrap();
        for eps in [0.01, 0.1, 0.3, 0.6] {
            let exact = optimal_type2(rho.state(3), sigma.state(3), eps).unwrap().ln();
            let bound = factorized_stein_bound(pc.divergence, pc.sup_norm, r, 3, eps).unwrap();
            assert!(exact <= bound, "{eps}: {exact} > {bound}");
            assert!(close(family_stein_bound(&rho, &sigma, 3, eps).unwrap(), bound, 1e-12));
        }
    }

    #[test]
    fn fcs_pair_hoeffding_dominates_oracle() {
        let rho = certified(Generator::Fcs(GeneratingTriple::random(2, 2, 2, 11).unwrap()), 3);
        let sigma = certified(Generator::Fcs(GeneratingTriple::random(2, 2, 2, 12).unwrap()), 3);
        let r = family_upper_r(&rho, &sigma, 3).unwrap();
        let pc = PairConstants::new(rho.marginal(1), sigma.marginal(1)).unwrap();
        for rate in [0.02, 0.1, 0.4] {
            let exact = optimal_type2_hoeffding(rho.state(3), sigma.state(3), rate, 3).unwrap().ln();
            let bound = factorized_hoeffding_bound(pc.divergence, pc.sup_norm, r, 3, rate).unwrap();
            assert!(exact <= bound);
        }
    }

    #[test]
    fn nonhomogeneous_fcs_dominates_oracle() {
        // two symmetric chains share the uniform invariant law
        let s = |b: [f64; 3]| DensityMatrix::from_bloch(b).unwrap();
        let letters = alloc::vec![
            alloc::vec![s([0.5, 0.1, 0.2]), s([-0.3, 0.2, 0.4])],
            alloc::vec![s([0.1, -0.4, 0.3]), s([0.2, 0.2, -0.5])],
        ];
        let p = [0.5, 0.5];
        let t1 = alloc::vec![alloc::vec![0.8, 0.2], alloc::vec![0.2, 0.8]];
        let t2 = alloc::vec![alloc::vec![0.3, 0.7], alloc::vec![0.7, 0.3]];
        let m1 = commutative_fcs(&t1, &letters, &p).unwrap().triple;
        let m2 = commutative_fcs(&t2, &letters, &p).unwrap().triple;
        let triple = GeneratingTriple::new(2, 2, alloc::vec![m1.maps()[0].clone(), m2.maps()[0].clone()], m1.rho_b().clone())
            .unwrap();
        let rho = certified(Generator::Fcs(triple), 3);
        let sigma = certified(
            Generator::Product(alloc::vec![s([0.0, 0.0, -0.3]), s([0.1, 0.0, -0.2])]),
            3,
        );
        for eps in [0.05, 0.2, 0.5] {
            let exact = optimal_type2(rho.state(3), sigma.state(3), eps).unwrap().ln();
            assert!(exact <= family_stein_bound(&rho, &sigma, 3, eps).unwrap());
        }
        for rate in [0.05, 0.3] {
            let exact = optimal_type2_hoeffding(rho.state(3), sigma.state(3), rate, 3).unwrap().ln();
            assert!(exact <= family_hoeffding_bound(&rho, &sigma, 3, rate).unwrap());
        }
        let uncertified = StateFamily::build(Generator::Product(alloc::vec![s([0.0, 0.0, 0.1])]), 3).unwrap();
        assert!(matches!(family_stein_bound(&rho, &uncertified, 3, 0.1), Err(Error::Uncertified(_))));
    }

    #[test]
    fn bennett_chain_for_gibbs_family() {
        let n_max = 5;
        let rho = certified(Generator::Gibbs(zz_field(0.2, 0.5, 0.3)), n_max);
        let sigma = certified(Generator::Gibbs(zz_field(0.1, -0.2, 0.3)), n_max);
        let pc = PairConstants::new(rho.state(1), sigma.state(1)).unwrap();
        for n in 1..=n_max {
            let r = family_upper_r(&rho, &sigma, n).unwrap();
            let mu = relative_modular_measure(rho.state(n), sigma.state(n)).unwrap();
            let w = bennett_window(n, pc.variance, pc.sup_norm);
            for k in 0..=30 {
                let gap = w * k as f64 / 30.0;
                // α(T_n) ≤ μ_n((−log L_n, ∞)) with log L_n = nD₁ − gap
                let exact = mu.tail(gap - n as f64 * pc.divergence + 1e-12);
                let bound = bennett_alpha_bound(n, pc.variance, pc.sup_norm, r, gap).unwrap();
                assert!(exact <= bound + 1e-12, "n={n} gap={gap}: {exact} > {bound}");
            }
        }
    }

    #[test]
    fn moderate_lower_below_exact_where_certified() {
        // the window needs a_n ≲ (e^c − 1)√V/c, so the log-likelihood must be
        // close to a symmetric two-point law with c near 1.2
        let rho = DensityMatrix::from_bloch([0.05, 0.0, 0.0]).unwrap();
        let sigma = DensityMatrix::from_bloch([0.1, 0.0, 0.8336]).unwrap();
        let pc = PairConstants::new(&rho, &sigma).unwrap();
        assert!(pc.sup_norm < 4f64.ln());
        let mut checked = 0;
        for n in 1..=6 {
            let a = (n as f64).powf(-1.0 / 3.0);
            if !moderate_certified(pc.variance, pc.sup_norm, 1.0, a, n).unwrap() {
                continue;
            }
            let lower = moderate_lower(pc.divergence, pc.variance, pc.sup_norm, 1.0, a, n).unwrap();
            let eps = (-(n as f64) * a * a).exp();
            let exact = d_h(&rho.tensor_pow(n).unwrap(), &sigma.tensor_pow(n).unwrap(), eps).unwrap();
            assert!(lower <= exact, "n={n}: {lower} > {exact}");
            checked += 1;
        }
        assert!(checked > 0);
    }

    #[test]
    fn family_moderate_rows() {
        let rho = certified(Generator::Gibbs(zz_field(0.05, 0.5, 0.3)), 4);
        let sigma = certified(Generator::Gibbs(zz_field(0.05, -0.1, 0.3)), 4);
        let row = family_moderate(&rho, &sigma, 4, 0.4).unwrap();
        let pc = PairConstants::new(rho.state(1), sigma.state(1)).unwrap();
        let r = family_upper_r(&rho, &sigma, 4).unwrap();
        assert!(close(row.lower, moderate_lower(pc.divergence, pc.variance, pc.sup_norm, r, 0.4, 4).unwrap(), 1e-12));
        assert!(close(row.upper_form, moderate_upper_form(pc.divergence, pc.variance, 0.4, 4), 1e-12));
        assert!(row.lower < row.upper_form);
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn r_one_matches_iid_azuma() {
        let rho = DensityMatrix::from_bloch([0.3, -0.1, 0.5]).unwrap();
        let sigma = DensityMatrix::from_bloch([-0.2, 0.2, 0.1]).unwrap();
        for n in 1..=5 {
            let pc = PairConstants::iid(&rho, &sigma, n).unwrap();
            let (d, c) = (pc[0].divergence, pc[0].sup_norm);
            // the first branch is the Azuma form; it applies for ε ≥ e^{−nc²/2}
            for eps in [0.05, 0.2, 0.5, 0.9, 1.0] {
                if eps < (-(n as f64) * c * c / 2.0).exp() {
                    continue;
                }
                let want = azuma_stein_bound(&pc, eps).unwrap().value;
                assert!(close(factorized_stein_bound(d, c, 1.0, n, eps).unwrap(), want, 1e-12));
                let steps = vec![(d, c); n];
                assert!(close(nonhomog_stein_bound(&steps, 1.0, eps).unwrap(), want, 1e-12));
            }
        }
    }

    #[test]
    fn branch_continuity() {
        for (d, c, r, n) in [(0.3f64, 0.8f64, 1.2f64, 4usize), (0.1, 1.5, 1.0, 7), (0.5, 0.4, 1.01, 2)] {
            let nf = n as f64;
            let log_eps = nf * r.ln() - nf * c * c / 2.0;
            if log_eps < 0.0 {
                let eps = log_eps.exp();
                let a = factorized_stein_bound(d, c, r, n, eps).unwrap();
                let b = factorized_stein_bound(d, c, r, n, eps * (1.0 - 1e-13)).unwrap();
                assert!(close(a, b, 1e-12), "{a} {b}");
            }
            let rate = c * c / 2.0 - r.ln();
            if rate > 0.0 {
                let a = factorized_hoeffding_bound(d, c, r, n, rate).unwrap();
                let b = factorized_hoeffding_bound(d, c, r, n, rate * (1.0 + 1e-14)).unwrap();
                assert!(close(a, b, 1e-12));
                let steps = vec![(d, c); n];
                let a = nonhomog_hoeffding_bound(&steps, r, rate).unwrap();
                let b = nonhomog_hoeffding_bound(&steps, r, rate * (1.0 + 1e-14)).unwrap();
                assert!(close(a, b, 1e-12));
            }
        }
    }

    #[test]
    fn r_one_rate_to_zero() {
        let v = factorized_hoeffding_bound(0.4, 0.9, 1.0, 5, 1e-18).unwrap();
        assert!(close(v, -2.0, 1e-8));
        assert!(factorized_stein_bound(0.4, 0.9, 0.99, 5, 0.1).is_err());
        assert!(nonhomog_stein_bound(&[], 1.0, 0.1).is_err());
    }

    #[test]
    fn hoeffding_is_stein_at_exponential_eps() {
        let (d, c, r, n) = (0.3, 0.7, 1.1, 6usize);
        for rate in [0.01, 0.1, 0.5, 2.0] {
            let eps = (-(n as f64) * rate).exp();
            assert!(close(
                factorized_hoeffding_bound(d, c, r, n, rate).unwrap(),
                factorized_stein_bound(d, c, r, n, eps).unwrap(),
                1e-12
            ));
        }
    }

    #[test]
    fn bennett_examples() {
        assert!(close(bennett_alpha_bound(4, 0.5, 0.8, 1.3, 0.0).unwrap(), 1.3f64.powi(4), 1e-14));
        assert!(bennett_alpha_bound(4, 0.5, 0.8, 1.0, -0.1).is_err());
        let w = bennett_window(4, 0.5, 0.8);
        assert!(bennett_alpha_bound(4, 0.5, 0.8, 1.0, w * 1.001).is_err());
        // classical Bennett: P(S − ES ≥ t) ≤ exp(−(σ²/b²)((1+u)ln(1+u) − u)), u = bt/σ²
        let (n, v, c, t) = (5usize, 0.3, 0.9, 1.1);
        let s2 = n as f64 * v;
        let u = c * t / s2;
        let classical = (-(s2 / (c * c)) * ((1.0 + u) * (1.0 + u).ln() - u)).exp();
        assert!(close(bennett_alpha_bound(n, v, c, 1.0, t).unwrap(), classical, 1e-13));
    }

    #[test]
    fn bennett_dominates_exact_iid_tail() {
        // centered two-point variable with upper deviation c
        let (p, c) = (0.3, 0.7);
        let lo = -c * p / (1.0 - p);
        let mu = SpectralMeasure::from_atoms([
            Atom { location: c, weight: p },
            Atom { location: lo, weight: 1.0 - p },
        ]);
        let v = mu.variance();
        let c_sup = c.max(-lo);
        for n in 1..=6 {
            let m = mu.convolve_pow(n);
            let w = bennett_window(n, v, c_sup);
            for k in 0..=40 {
                let gap = w * k as f64 / 40.0;
                let exact = m.tail(gap + 1e-12);
                assert!(exact <= bennett_alpha_bound(n, v, c_sup, 1.0, gap).unwrap() + 1e-14);
            }
        }
    }

    #[test]
    fn moderate_examples() {
        let (d, v, c) = (0.4, 0.6, 0.9);
        assert!(close(moderate_lower(d, v, c, 1.0, 0.0, 7).unwrap(), 7.0 * d, 1e-15));
        assert!(matches!(moderate_lower(d, v, 4f64.ln(), 1.0, 0.1, 3), Err(Error::Inadmissible(_))));
        assert!(matches!(moderate_lower(d, v, 1.5, 1.0, 0.1, 3), Err(Error::Inadmissible(_))));
        let lim = moderate_r_limit(v, c);
        assert!(moderate_lower(d, v, c, (lim * 1.01).exp(), 0.1, 3).is_err());
        assert!(moderate_lower(d, v, c, (lim * 0.99).exp(), 0.1, 3).is_ok());
        assert_eq!(moderate_upper_form(d, v, 0.0, 5), 5.0 * d);
        assert_eq!(moderate_upper_form(d, 0.0, 0.3, 5), 5.0 * d);
        assert!(moderate_upper_form(d, v, 0.3, 5) < moderate_upper_form(d, v, 0.2, 5));
        let (lo, up) = moderate_nonhomog(&[(d, v); 5], c, 1.05, 0.2).unwrap();
        assert!(close(lo, moderate_lower(d, v, c, 1.05, 0.2, 5).unwrap(), 1e-13));
        assert!(close(up, moderate_upper_form(d, v, 0.2, 5), 1e-13));
        let (lo1, _) = moderate_nonhomog(&[(d, v); 5], c, 1.0, 0.2).unwrap();
        assert!(lo1 > lo);
    }

    proptest! {
        #[test]
        fn r_monotone(d in 0.0f64..1.0, c in 0.01f64..2.0, r in 1.0f64..3.0, dr in 0.0f64..1.0,
                      n in 1usize..10, eps in 0.001f64..1.0, rate in 0.001f64..2.0) {
            let r2 = r + dr;
            prop_assert!(factorized_stein_bound(d, c, r, n, eps).unwrap()
                <= factorized_stein_bound(d, c, r2, n, eps).unwrap() + 1e-12);
            prop_assert!(factorized_hoeffding_bound(d, c, r, n, rate).unwrap()
                <= factorized_hoeffding_bound(d, c, r2, n, rate).unwrap() + 1e-12);
            let steps = vec![(d, c); n];
            prop_assert!(nonhomog_stein_bound(&steps, r, eps).unwrap()
                <= nonhomog_stein_bound(&steps, r2, eps).unwrap() + 1e-12);
            prop_assert!(nonhomog_hoeffding_bound(&steps, r, rate).unwrap()
                <= nonhomog_hoeffding_bound(&steps, r2, rate).unwrap() + 1e-12);
            prop_assert!(bennett_alpha_bound(n, 0.5, c, r, 0.0).unwrap()
                <= bennett_alpha_bound(n, 0.5, c, r2, 0.0).unwrap());
        }

        #[test]
        fn homogeneous_specialization(d in 0.0f64..1.0, c in 0.0f64..2.0, r in 1.0f64..3.0,
                                      n in 1usize..10, eps in 0.001f64..1.0, rate in 0.001f64..2.0) {
            let steps = vec![(d, c); n];
            prop_assert!(close(nonhomog_stein_bound(&steps, r, eps).unwrap(),
                factorized_stein_bound(d, c, r, n, eps).unwrap(), 1e-12));
            prop_assert!(close(nonhomog_hoeffding_bound(&steps, r, rate).unwrap(),
                factorized_hoeffding_bound(d, c, r, n, rate).unwrap(), 1e-12));
        }
    }
}
