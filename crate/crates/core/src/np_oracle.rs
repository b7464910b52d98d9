//! Exact optimal type-I/type-II error trade-off for explicit state pairs.
//!
//! Optimal tests are spectral projectors `P_{>0}(ρ − tσ)`, with
//! randomization on the zero eigenspace. The rank of that projector only
//! changes at the generalized eigenvalues `t_k` of the pencil `(ρ, σ)`; at
//! those points the strict and inclusive projectors give the two ends of a
//! flat piece of the curve. Between consecutive `t_k` the projector still
//! rotates when `ρ` and `σ` do not commute, so the curve is traced there by
//! evaluating the projector at interior thresholds. For commuting inputs the
//! interior is constant and the curve is the classical polygon.

use alloc::vec::Vec;

use crate::math::{log, sqrt};
use crate::states::{check_dim, check_same_dim, DensityMatrix, DEFAULT_REGULARIZATION};
use crate::{Error, Result};

/// Eigenvalues of `(ρ − tσ)/(1+t)` this close to zero count as degenerate.
pub const ZERO_CROSSING_TOL: f64 = 1e-11;
/// Chord length (in the `(α, β)` plane) below which curve sampling stops.
const CHORD_TOL: f64 = 1e-3;
const MAX_REFINE_DEPTH: u32 = 24;
const MAX_BISECTIONS: usize = 200;

/// Achievable extreme points `(α, β)` of the optimal error region; `α`
/// strictly increasing, `β` strictly decreasing, last point has `β = 0`.
/// Linear interpolation between breakpoints is achieved by randomized
/// tests.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve {
    breakpoints: Vec<(f64, f64)>,
}

impl ErrorCurve {
    /// Lower convex envelope of arbitrary achievable points. The corner
    /// points `(0, 1)` and `(1, 0)` (trivial tests) are always included.
    pub fn from_points(mut pts: Vec<(f64, f64)>) -> Self {
        pts.push((0.0, 1.0));
        pts.push((1.0, 0.0));
        for p in &mut pts {
            p.0 = p.0.clamp(0.0, 1.0);
            p.1 = p.1.clamp(0.0, 1.0);
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        pts.dedup();
        let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
        for p in pts {
            if hull.last().is_some_and(|h: &(f64, f64)| h.0 == p.0) {
                // same α, larger β: not on the lower envelope
                continue;
            }
            while hull.len() >= 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
                if cross <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        // drop the flat tail after β first reaches its minimum
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(hull.len());
        for p in hull {
            if out.last().is_some_and(|l: &(f64, f64)| p.1 >= l.1) {
                break;
            }
            out.push(p);
        }
        ErrorCurve { breakpoints: out }
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    /// Type-II error of the best randomization of the breakpoints with
    /// type-I error at most `eps`.
    pub fn type2_at(&self, eps: f64) -> f64 {
        let bp = &self.breakpoints;
        if eps <= bp[0].0 {
            return bp[0].1;
        }
        for w in bp.windows(2) {
            let ((a0, b0), (a1, b1)) = (w[0], w[1]);
            if eps <= a1 {
                let s = (eps - a0) / (a1 - a0);
                return (b0 + s * (b1 - b0)).max(0.0);
            }
        }
        bp[bp.len() - 1].1
    }
}

#[derive(Debug, Clone, Copy)]
enum Cut {
    Strict,
    Inclusive,
    Interior,
}

/// Neyman-Pearson oracle for one pair; reuses the pencil thresholds across
/// queries.
#[derive(Debug, Clone)]
pub struct NpOracle {
    rho: DensityMatrix,
    sigma: DensityMatrix,
    thresholds: Vec<f64>,
    /// `(strict, inclusive)` points at each threshold.
    corners: Vec<((f64, f64), (f64, f64))>,
}

impl NpOracle {
    pub fn new(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Self> {
        check_same_dim(rho, sigma)?;
        check_dim(rho.dim())?;
        let s_reg = if sigma.is_faithful() { sigma.clone() } else { sigma.regularized(DEFAULT_REGULARIZATION) };
        let w = s_reg.eigen().map(|x| 1.0 / sqrt(x))?;
        let pencil = w.congruence(rho.matrix())?;
        let mut thresholds: Vec<f64> = pencil.eig().values.into_iter().map(|t| t.max(0.0)).collect();
        thresholds.push(0.0);
        thresholds.sort_by(f64::total_cmp);
        thresholds.dedup();
        let mut oracle = NpOracle { rho: rho.clone(), sigma: sigma.clone(), thresholds, corners: Vec::new() };
        oracle.corners = oracle
            .thresholds
            .iter()
            .map(|&t| {
                let [strict, incl] = oracle.points(t, [Cut::Strict, Cut::Inclusive])?;
                Ok((strict, incl))
            })
            .collect::<Result<_>>()?;
        Ok(oracle)
    }

    /// `(α, β)` of the projector tests at threshold `t`, one per cut.
    fn points<const K: usize>(&self, t: f64, cuts: [Cut; K]) -> Result<[(f64, f64); K]> {
        let m = self.rho.matrix().sub(&self.sigma.matrix().scale(t))?.scale(1.0 / (1.0 + t));
        let e = m.eig();
        let mut acc = [(0.0, 0.0); K];
        for k in 0..e.dim() {
            let lam = e.values[k];
            let keep = cuts.map(|cut| match cut {
                Cut::Strict => lam > ZERO_CROSSING_TOL,
                Cut::Inclusive => lam >= -ZERO_CROSSING_TOL,
                Cut::Interior => lam > 0.0,
            });
            if !keep.contains(&true) {
                continue;
            }
            let v = e.vector(k);
            let q = self.rho.matrix().as_cmatrix().quadratic_form(&v).re;
            let s = self.sigma.matrix().as_cmatrix().quadratic_form(&v).re;
            for (a, &kp) in acc.iter_mut().zip(&keep) {
                if kp {
                    a.0 += q;
                    a.1 += s;
                }
            }
        }
        Ok(acc.map(|(tq, ts)| ((1.0 - tq).clamp(0.0, 1.0), ts.clamp(0.0, 1.0))))
    }

    fn point(&self, t: f64, cut: Cut) -> Result<(f64, f64)> {
        Ok(self.points(t, [cut])?[0])
    }

    /// Generalized eigenvalues of the pencil (plus `0`), ascending.
    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// The optimal curve, sampled adaptively inside each threshold segment.
    pub fn curve(&self) -> Result<ErrorCurve> {
        let mut pts = Vec::new();
        for (k, &(strict, incl)) in self.corners.iter().enumerate() {
            pts.push(strict);
            pts.push(incl);
            if let Some(&(_, next_incl)) = self.corners.get(k + 1) {
                self.refine(self.thresholds[k], strict, self.thresholds[k + 1], next_incl, 0, &mut pts)?;
            }
        }
        Ok(ErrorCurve::from_points(pts))
    }

    fn refine(&self, ta: f64, pa: (f64, f64), tb: f64, pb: (f64, f64), depth: u32, out: &mut Vec<(f64, f64)>) -> Result<()> {
        let chord = (pb.0 - pa.0).abs() + (pb.1 - pa.1).abs();
        if chord <= CHORD_TOL || depth >= MAX_REFINE_DEPTH {
            return Ok(());
        }
        let tm = split(ta, tb);
        let pm = self.point(tm, Cut::Interior)?;
        out.push(pm);
        self.refine(ta, pa, tm, pm, depth + 1, out)?;
        self.refine(tm, pm, tb, pb, depth + 1, out)
    }

    /// `β(ε)`, achieved by an explicit (possibly randomized) test.
    pub fn type2(&self, eps: f64) -> Result<f64> {
        check_eps(eps)?;
        let last = self.corners.len() - 1;
        for k in 0..=last {
            let (strict, incl) = self.corners[k];
            if eps <= strict.0 {
                return Ok(interpolate(incl, strict, eps));
            }
            if k == last {
                return Ok(strict.1);
            }
            let next_incl = self.corners[k + 1].1;
            if eps < next_incl.0 {
                return self.bisect(self.thresholds[k], strict, self.thresholds[k + 1], next_incl, eps);
            }
        }
        unreachable!("corners are nonempty")
    }

    fn bisect(&self, mut ta: f64, mut pa: (f64, f64), mut tb: f64, mut pb: (f64, f64), eps: f64) -> Result<f64> {
        for _ in 0..MAX_BISECTIONS {
            if tb - ta <= 1e-15 * tb || pb.0 - pa.0 <= 1e-10 {
                break;
            }
            let tm = split(ta, tb);
            if tm <= ta || tm >= tb {
                break;
            }
            let pm = self.point(tm, Cut::Interior)?;
            if pm.0 <= eps {
                ta = tm;
                pa = pm;
            } else {
                tb = tm;
                pb = pm;
            }
        }
        Ok(interpolate(pa, pb, eps))
    }
}

/// Midpoint of a threshold interval; geometric when it spans decades.
fn split(a: f64, b: f64) -> f64 {
    if a > 0.0 && b > 4.0 * a {
        sqrt(a * b)
    } else if a == 0.0 && b > 2.0 {
        1.0
    } else {
        0.5 * (a + b)
    }
}

/// β on the chord between two achievable points at `α = eps`.
fn interpolate(a: (f64, f64), b: (f64, f64), eps: f64) -> f64 {
    if b.0 <= a.0 {
        return a.1.min(b.1);
    }
    let s = ((eps - a.0) / (b.0 - a.0)).clamp(0.0, 1.0);
    (a.1 + s * (b.1 - a.1)).max(0.0)
}

/// Optimal error curve of the pair `(ρ, σ)`; the test accepts `ρ` with `T`.
pub fn error_curve(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<ErrorCurve> {
    NpOracle::new(rho, sigma)?.curve()
}

fn check_eps(eps: f64) -> Result<()> {
    if (0.0..=1.0).contains(&eps) {
        Ok(())
    } else {
        Err(Error::param("eps", "must lie in [0,1]"))
    }
}

/// `β(ε)`: minimal type-II error with type-I error at most `eps`.
pub fn optimal_type2(rho: &DensityMatrix, sigma: &DensityMatrix, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    NpOracle::new(rho, sigma)?.type2(eps)
}

/// `β(e^{−nr})` for the `n`-copy states passed in.
pub fn optimal_type2_hoeffding(rho_n: &DensityMatrix, sigma_n: &DensityMatrix, r: f64, n: usize) -> Result<f64> {
    if !(r > 0.0) || n == 0 {
        return Err(Error::param("r, n", "need r > 0 and n ≥ 1"));
    }
    optimal_type2(rho_n, sigma_n, libm::exp(-(n as f64) * r))
}

/// `D_H^ε(ρ‖σ) = −log β(ε)`; `+∞` when `β = 0`.
pub fn d_h(rho: &DensityMatrix, sigma: &DensityMatrix, eps: f64) -> Result<f64> {
    Ok(-log(optimal_type2(rho, sigma, eps)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::SamplingMode;
    use proptest::prelude::*;

    /// Classical Neyman-Pearson curve: sort outcomes by likelihood ratio p/q
    /// (descending) and accept them one at a time.
    pub fn classical_curve(p: &[f64], q: &[f64]) -> Vec<(f64, f64)> {
        let mut idx: Vec<usize> = (0..p.len()).collect();
        idx.sort_by(|&i, &j| (p[j] * q[i]).total_cmp(&(p[i] * q[j])));
        let mut pts = vec![(1.0, 0.0)];
        for k in 0..idx.len() {
            let alpha: f64 = idx[k + 1..].iter().map(|&i| p[i]).sum();
            let beta: f64 = idx[..=k].iter().map(|&i| q[i]).sum();
            pts.push((alpha, beta.min(1.0)));
        }
        pts
    }

    fn interp(pts: &[(f64, f64)], eps: f64) -> f64 {
        let mut sorted = pts.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut best = f64::INFINITY;
        for i in 0..sorted.len() {
            for j in i..sorted.len() {
                let (a, b) = (sorted[i], sorted[j]);
                if a.0 <= eps && eps <= b.0 {
                    let v = if b.0 == a.0 { a.1.min(b.1) } else { a.1 + (eps - a.0) / (b.0 - a.0) * (b.1 - a.1) };
                    best = best.min(v);
                }
            }
        }
        best
    }

    #[test]
    fn identical_states_give_diagonal_line() {
        let r = DensityMatrix::random(3, 4, SamplingMode::HilbertSchmidt).unwrap();
        let c = error_curve(&r, &r).unwrap();
        for &(a, b) in c.breakpoints() {
            assert!((a + b - 1.0).abs() < 1e-10);
        }
        for eps in [0.1, 0.5, 0.9] {
            assert!((c.type2_at(eps) - (1.0 - eps)).abs() < 1e-10);
            assert!((d_h(&r, &r, eps).unwrap() + (1.0 - eps).ln()).abs() < 1e-9);
        }
        let n = 2;
        let r2 = r.tensor_pow(n).unwrap();
        let h = optimal_type2_hoeffding(&r2, &r2, 0.3, n).unwrap();
        assert!((h - (1.0 - (-0.6f64).exp())).abs() < 1e-9);
    }

    #[test]
    fn orthogonal_pure_states() {
        let a = DensityMatrix::from_bloch([0.0, 0.0, 1.0]).unwrap();
        let b = DensityMatrix::from_bloch([0.0, 0.0, -1.0]).unwrap();
        let c = error_curve(&a, &b).unwrap();
        assert_eq!(c.breakpoints(), &[(0.0, 0.0)]);
        assert_eq!(d_h(&a, &b, 0.1).unwrap(), f64::INFINITY);
    }

    #[test]
    fn classical_pair_matches_likelihood_ratio_sort() {
        let p = [0.5, 0.3, 0.15, 0.05];
        let q = [0.1, 0.2, 0.3, 0.4];
        let c = error_curve(&DensityMatrix::diagonal(&p).unwrap(), &DensityMatrix::diagonal(&q).unwrap()).unwrap();
        let oracle = classical_curve(&p, &q);
        for k in 0..=100 {
            let eps = k as f64 / 100.0;
            assert!((c.type2_at(eps) - interp(&oracle, eps)).abs() < 1e-12, "eps={eps}");
        }
        let beta = optimal_type2(&DensityMatrix::diagonal(&p).unwrap(), &DensityMatrix::diagonal(&q).unwrap(), 0.1).unwrap();
        assert!((beta - interp(&oracle, 0.1)).abs() < 1e-12);
    }

    #[test]
    fn singular_sigma_is_handled() {
        let rho = DensityMatrix::from_bloch([0.2, 0.1, 0.3]).unwrap();
        let sigma = DensityMatrix::from_bloch([0.0, 0.0, 1.0]).unwrap();
        let c = error_curve(&rho, &sigma).unwrap();
        // accepting on ker σ costs no type-II error
        let ker_weight = (1.0 - 0.3) / 2.0;
        assert!((c.type2_at(1.0 - ker_weight) - 0.0).abs() < 1e-9);
        assert!(c.type2_at(0.5) > 0.01);
    }

    #[test]
    fn qubit_pair_matches_fine_threshold_grid() {
        let rho = DensityMatrix::from_bloch([-0.177483, 0.365807, 0.291007]).unwrap();
        let sigma = DensityMatrix::from_bloch([-0.452239, -0.141906, -0.159193]).unwrap();
        let mut pts = Vec::new();
        for k in 0..100_000 {
            let t = 20.0 * k as f64 / 100_000.0;
            let e = rho.matrix().sub(&sigma.matrix().scale(t)).unwrap().eig();
            let proj = e.map(|x| if x > 0.0 { 1.0 } else { 0.0 }).unwrap();
            pts.push((1.0 - rho.expectation(&proj).unwrap(), sigma.expectation(&proj).unwrap()));
        }
        let grid = ErrorCurve::from_points(pts);
        let exact = NpOracle::new(&rho, &sigma).unwrap();
        for eps in [0.01, 0.05, 0.1, 0.3, 0.5, 0.8] {
            let a = -exact.type2(eps).unwrap().ln();
            let b = -grid.type2_at(eps).ln();
            assert!((a - b).abs() < 1e-8, "eps={eps}: {a} vs {b}");
        }
    }

    #[test]
    fn resource_guard() {
        assert!(matches!(
            check_dim(4097),
            Err(Error::ResourceLimit { dim: 4097, .. })
        ));
    }

    #[test]
    fn stein_trend() {
        for (ra, sa) in [([0.1, 0.4, 0.3], [-0.3, 0.0, -0.2]), ([0.0, 0.0, 0.5], [0.3, 0.0, 0.0]), ([-0.177483, 0.365807, 0.291007], [-0.452239, -0.141906, -0.159193])] {
            let rho = DensityMatrix::from_bloch(ra).unwrap();
            let sigma = DensityMatrix::from_bloch(sa).unwrap();
            let d = crate::divergences::rel_entropy(&rho, &sigma).unwrap();
            let rates: Vec<f64> = (1..=6)
                .map(|n| {
                    let b = optimal_type2(&rho.tensor_pow(n).unwrap(), &sigma.tensor_pow(n).unwrap(), 0.01).unwrap();
                    -b.ln() / n as f64
                })
                .collect();
            // not monotone step by step at these n; the trend is
            assert!(rates[5] > rates[0], "{rates:?}");
            assert!(rates.iter().all(|&r| r > 0.0 && r < d));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn curve_is_monotone_convex(d in 2usize..5, s1: u64, s2: u64) {
            let rho = DensityMatrix::random(d, s1, SamplingMode::HilbertSchmidt).unwrap();
            let sigma = DensityMatrix::random(d, s2, SamplingMode::HilbertSchmidt).unwrap();
            let c = error_curve(&rho, &sigma).unwrap();
            let bp = c.breakpoints();
            prop_assert!(bp.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 > w[1].1));
            prop_assert_eq!(bp.last().unwrap().1, 0.0);
            let mut prev = f64::INFINITY;
            for k in 0..=50 {
                let eps = k as f64 / 50.0;
                let b = c.type2_at(eps);
                prop_assert!(b <= prev + 1e-15);
                prev = b;
                // never worse than the trivial randomized test
                prop_assert!(b <= 1.0 - eps + 1e-12);
            }
        }

        #[test]
        fn classical_curves_agree(p in proptest::collection::vec(0.01f64..1.0, 4), q in proptest::collection::vec(0.01f64..1.0, 4)) {
            let sp: f64 = p.iter().sum();
            let sq: f64 = q.iter().sum();
            let p: Vec<f64> = p.iter().map(|x| x / sp).collect();
            let q: Vec<f64> = q.iter().map(|x| x / sq).collect();
            let c = error_curve(&DensityMatrix::diagonal(&p).unwrap(), &DensityMatrix::diagonal(&q).unwrap()).unwrap();
            let oracle = classical_curve(&p, &q);
            for k in 0..=20 {
                let eps = k as f64 / 20.0;
                prop_assert!((c.type2_at(eps) - interp(&oracle, eps)).abs() < 1e-10);
            }
        }
    }
}
