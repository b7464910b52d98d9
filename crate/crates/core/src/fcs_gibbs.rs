//! Correlated state families on a chain and numerical certificates for their
//! factorization constants.
//!
//! A family caches `ρ_1, …, ρ_N` together with auxiliary one-site states
//! `ρ̃_1, …, ρ̃_N`. The upper constant is the least `R` with
//! `ρ_k ≤ R ρ_{k−1} ⊗ ρ̃_k` for every cached `k`, and the lower constant is
//! the least `R` with `ρ_k ≥ R⁻¹ ρ_{k−1} ⊗ ρ̃_k`.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::math::{exp, sqrt};
use crate::numerics::{partial_trace, CMatrix, HermitianMatrix};
use crate::states::{DensityMatrix, ZERO_EIGENVALUE};
use crate::{Error, Result, MAX_DIM};

/// Allowed deviation of `Σ K†K` from the identity.
pub const TRACE_PRESERVING_TOL: f64 = 1e-10;
/// Allowed deviation of `Tr_A E(ρ_B)` from `ρ_B`.
pub const INVARIANCE_TOL: f64 = 1e-9;
/// Most negative eigenvalue accepted in `R·product − ρ_k` (or its lower analogue).
pub const PSD_TOL: f64 = 1e-10;
/// Required agreement between the pencil value and the direct check.
pub const CERTIFICATE_AGREEMENT: f64 = 1e-8;

/// Completely positive map given by Kraus operators `K_i` (each
/// `output_dim × input_dim`), acting as `X ↦ Σ K_i X K_i†`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausMap {
    input_dim: usize,
    output_dim: usize,
    ops: Vec<CMatrix>,
}

impl KrausMap {
    pub fn new(input_dim: usize, output_dim: usize, ops: Vec<CMatrix>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::param("kraus", "need at least one operator"));
        }
        for k in &ops {
            if k.rows() != output_dim || k.cols() != input_dim {
                return Err(Error::param(
                    "kraus",
                    format!("operator is {}x{}, expected {output_dim}x{input_dim}", k.rows(), k.cols()),
                ));
            }
        }
        Ok(KrausMap { input_dim, output_dim, ops })
    }

    /// Converts a Choi matrix `J = Σ_{ij} |i><j| ⊗ E(|i><j|)`.
    pub fn from_choi(choi: &HermitianMatrix, input_dim: usize, output_dim: usize) -> Result<Self> {
        if choi.dim() != input_dim * output_dim {
            return Err(Error::DimensionMismatch { expected: input_dim * output_dim, found: choi.dim() });
        }
        let eig = choi.eig();
        let scale = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if eig.values[0] < -1e-10 * scale.max(1.0) {
            return Err(Error::param("choi", "matrix is not positive semidefinite"));
        }
        let mut ops = Vec::new();
        for (k, &l) in eig.values.iter().enumerate() {
            if l <= ZERO_EIGENVALUE * scale {
                continue;
            }
            let v = eig.vector(k);
            let s = sqrt(l);
            let mut op = CMatrix::zeros(output_dim, input_dim);
            for i in 0..input_dim {
                for a in 0..output_dim {
                    op[(a, i)] = v[i * output_dim + a] * s;
                }
            }
            ops.push(op);
        }
        Self::new(input_dim, output_dim, ops)
    }

    /// The map `X ↦ Tr(X)·state`.
    pub fn replacement(input_dim: usize, state: &DensityMatrix) -> Result<Self> {
        let e = state.eigen();
        let mut ops = Vec::new();
        for (m, &w) in e.values.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            let psi = e.vector(m);
            for i in 0..input_dim {
                let mut op = CMatrix::zeros(state.dim(), input_dim);
                for (a, &c) in psi.iter().enumerate() {
                    op[(a, i)] = c * sqrt(w);
                }
                ops.push(op);
            }
        }
        Self::new(input_dim, state.dim(), ops)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    /// Largest entry of `Σ K†K − I`.
    pub fn trace_preservation_error(&self) -> f64 {
        let mut acc = CMatrix::zeros(self.input_dim, self.input_dim);
        for k in &self.ops {
            acc = acc.add(&k.adjoint().matmul(k).expect("shapes checked")).expect("shapes checked");
        }
        acc.sub(&CMatrix::identity(self.input_dim)).expect("square").max_abs()
    }

    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.rows() != self.input_dim || !x.is_square() {
            return Err(Error::DimensionMismatch { expected: self.input_dim, found: x.rows() });
        }
        let mut out = CMatrix::zeros(self.output_dim, self.output_dim);
        for k in &self.ops {
            out = out.add(&k.matmul(x)?.matmul(&k.adjoint())?)?;
        }
        Ok(out)
    }

    pub fn apply_state(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::new(HermitianMatrix::symmetrized(self.apply(rho.matrix().as_cmatrix())?))
    }
}

/// Generating data `(B, {E_k}, ρ_B)` for a (possibly non-homogeneous)
/// finitely correlated family. Each map goes from `B` to `A ⊗ B`; step `k`
/// uses `maps[k−1]`, and the last map repeats beyond the list.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingTriple {
    site_dim: usize,
    aux_dim: usize,
    maps: Vec<KrausMap>,
    rho_b: DensityMatrix,
}

impl GeneratingTriple {
    pub fn new(site_dim: usize, aux_dim: usize, maps: Vec<KrausMap>, rho_b: DensityMatrix) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::param("maps", "need at least one map"));
        }
        if rho_b.dim() != aux_dim {
            return Err(Error::DimensionMismatch { expected: aux_dim, found: rho_b.dim() });
        }
        rho_b.require_faithful()?;
        for (k, map) in maps.iter().enumerate() {
            if map.input_dim() != aux_dim || map.output_dim() != site_dim * aux_dim {
                return Err(Error::param("maps", format!("map {k} does not act B -> A⊗B")));
            }
            let tp = map.trace_preservation_error();
            if tp > TRACE_PRESERVING_TOL {
                return Err(Error::param("maps", format!("map {k} is not trace preserving (error {tp:e})")));
            }
            let image = map.apply(rho_b.matrix().as_cmatrix())?;
            let reduced = partial_trace(&image, &[site_dim, aux_dim], &[1])?;
            let dev = reduced.sub(rho_b.matrix().as_cmatrix())?.max_abs();
            if dev > INVARIANCE_TOL {
                return Err(Error::param("rho_B", format!("not invariant under map {k} (deviation {dev:e})")));
            }
        }
        Ok(GeneratingTriple { site_dim, aux_dim, maps, rho_b })
    }

    /// Homogeneous triple from an isometry built out of a complex Ginibre
    /// matrix, with `ρ_B` the fixed point of `Tr_A ∘ E`.
    pub fn random(site_dim: usize, aux_dim: usize, kraus_count: usize, seed: u64) -> Result<Self> {
        if site_dim == 0 || aux_dim == 0 || kraus_count == 0 {
            return Err(Error::param("dims", "must be positive"));
        }
        let out = site_dim * aux_dim;
        let rows = out * kraus_count;
        if rows < aux_dim {
            return Err(Error::param("kraus_count", "too few operators for an isometry"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(aux_dim);
        for _ in 0..aux_dim {
            let mut v: Vec<Complex64> =
                (0..rows).map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))).collect();
            // two Gram-Schmidt passes for orthogonality to rounding
            for _ in 0..2 {
                for u in &cols {
                    let dot: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                    for (x, y) in v.iter_mut().zip(u) {
                        *x -= dot * y;
                    }
                }
            }
            let norm = sqrt(v.iter().map(|x| x.norm_sqr()).sum());
            v.iter_mut().for_each(|x| *x /= norm);
            cols.push(v);
        }
        let ops = (0..kraus_count)
            .map(|m| {
                let mut k = CMatrix::zeros(out, aux_dim);
                for (j, col) in cols.iter().enumerate() {
                    for r in 0..out {
                        k[(r, j)] = col[m * out + r];
                    }
                }
                k
            })
            .collect();
        let map = KrausMap::new(aux_dim, out, ops)?;
        let rho_b = fixed_point(&map, site_dim, aux_dim)?;
        Self::new(site_dim, aux_dim, alloc::vec![map], rho_b)
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn aux_dim(&self) -> usize {
        self.aux_dim
    }

    pub fn maps(&self) -> &[KrausMap] {
        &self.maps
    }

    pub fn rho_b(&self) -> &DensityMatrix {
        &self.rho_b
    }

    /// Map used at step `k ≥ 1`.
    pub fn map(&self, k: usize) -> &KrausMap {
        &self.maps[(k.max(1) - 1).min(self.maps.len() - 1)]
    }

    /// `ρ̃_k = Tr_B E_k(ρ_B)`.
    pub fn marginal(&self, k: usize) -> Result<DensityMatrix> {
        let image = self.map(k).apply(self.rho_b.matrix().as_cmatrix())?;
        DensityMatrix::new(HermitianMatrix::symmetrized(partial_trace(&image, &[self.site_dim, self.aux_dim], &[0])?))
    }
}

fn fixed_point(map: &KrausMap, site_dim: usize, aux_dim: usize) -> Result<DensityMatrix> {
    let mut x = CMatrix::identity(aux_dim).scale(1.0 / aux_dim as f64);
    let mut gap = f64::INFINITY;
    for _ in 0..100_000 {
        let next = partial_trace(&map.apply(&x)?, &[site_dim, aux_dim], &[1])?;
        gap = next.sub(&x)?.max_abs();
        x = next;
        if gap < 1e-15 {
            let tr = x.trace().re;
            return DensityMatrix::new(HermitianMatrix::symmetrized(x.scale(1.0 / tr)));
        }
    }
    Err(Error::NoConvergence { iterations: 100_000, gap })
}

// (id_{A^{k−1}} ⊗ E)(τ) for τ on A^{k−1} ⊗ B, done blockwise
fn apply_step(tau: &CMatrix, left: usize, aux: usize, map: &KrausMap) -> Result<CMatrix> {
    let out = map.output_dim();
    let mut result = CMatrix::zeros(left * out, left * out);
    let mut block = CMatrix::zeros(aux, aux);
    for i in 0..left {
        for j in 0..left {
            for r in 0..aux {
                for s in 0..aux {
                    block[(r, s)] = tau[(i * aux + r, j * aux + s)];
                }
            }
            if block.max_abs() == 0.0 {
                continue;
            }
            let y = map.apply(&block)?;
            for r in 0..out {
                for s in 0..out {
                    result[(i * out + r, j * out + s)] = y[(r, s)];
                }
            }
        }
    }
    Ok(result)
}

/// `(ρ_n, ρ̃_n)` for the family generated by `triple`.
pub fn build_fcs(triple: &GeneratingTriple, n: usize) -> Result<(DensityMatrix, DensityMatrix)> {
    let fam = StateFamily::build(Generator::Fcs(triple.clone()), n)?;
    Ok((fam.state(n).clone(), fam.marginal(n).clone()))
}

/// Nearest-neighbour chain `H_n = Σ_i h_{i,i+1} + Σ_i f_i` at inverse
/// temperature `β`. The on-site term `f` is optional.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsChain {
    site_dim: usize,
    interaction: HermitianMatrix,
    beta: f64,
    field: Option<HermitianMatrix>,
}

impl GibbsChain {
    pub fn new(site_dim: usize, interaction: HermitianMatrix, beta: f64, field: Option<HermitianMatrix>) -> Result<Self> {
        if site_dim == 0 {
            return Err(Error::param("site_dim", "must be positive"));
        }
        if interaction.dim() != site_dim * site_dim {
            return Err(Error::DimensionMismatch { expected: site_dim * site_dim, found: interaction.dim() });
        }
        if let Some(f) = &field {
            if f.dim() != site_dim {
                return Err(Error::DimensionMismatch { expected: site_dim, found: f.dim() });
            }
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::param("beta", "must be positive and finite"));
        }
        Ok(GibbsChain { site_dim, interaction, beta, field })
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn interaction(&self) -> &HermitianMatrix {
        &self.interaction
    }

    pub fn field(&self) -> Option<&HermitianMatrix> {
        self.field.as_ref()
    }

    pub fn hamiltonian(&self, n: usize) -> Result<HermitianMatrix> {
        let d = self.site_dim;
        let dim = chain_dim(d, n, 1)?;
        let mut h = CMatrix::zeros(dim, dim);
        for i in 0..n.saturating_sub(1) {
            let term = embed(self.interaction.as_cmatrix(), d.pow(i as u32), d.pow((n - i - 2) as u32));
            h = h.add(&term)?;
        }
        if let Some(f) = &self.field {
            for i in 0..n {
                h = h.add(&embed(f.as_cmatrix(), d.pow(i as u32), d.pow((n - i - 1) as u32)))?;
            }
        }
        Ok(HermitianMatrix::symmetrized(h))
    }

    /// `exp(−β H_n) / Tr exp(−β H_n)`.
    pub fn state(&self, n: usize) -> Result<DensityMatrix> {
        let eig = self.hamiltonian(n)?.eig();
        let e0 = eig.values[0];
        let beta = self.beta;
        let z: f64 = eig.values.iter().map(|&e| exp(-beta * (e - e0))).sum();
        DensityMatrix::new(eig.map(|e| exp(-beta * (e - e0)) / z)?)
    }
}

/// See [`GibbsChain::state`].
pub fn build_gibbs(chain: &GibbsChain, n: usize) -> Result<DensityMatrix> {
    chain.state(n)
}

fn embed(op: &CMatrix, left: usize, right: usize) -> CMatrix {
    CMatrix::identity(left).kron(op).kron(&CMatrix::identity(right))
}

fn chain_dim(site: usize, n: usize, extra: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    let mut dim = extra;
    for _ in 0..n {
        dim = dim.saturating_mul(site);
        if dim > MAX_DIM {
            return Err(Error::ResourceLimit { dim, limit: MAX_DIM });
        }
    }
    Ok(dim / extra)
}

/// Triple with commutative `B` built from a transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutativeFcs {
    pub triple: GeneratingTriple,
    /// `T > 0` entrywise and `supp ρ_{xy}` independent of `x` for every `y`:
    /// the condition under which the family factorizes from below.
    pub lower_factorization: bool,
}

/// `E(δ_x) = Σ_y T_{xy} ρ_{xy} ⊗ δ_y` with `ρ_B = diag(p)`.
pub fn commutative_fcs(t: &[Vec<f64>], states: &[Vec<DensityMatrix>], p: &[f64]) -> Result<CommutativeFcs> {
    let nx = t.len();
    if nx == 0 || p.len() != nx || states.len() != nx {
        return Err(Error::param("T", "transition matrix, states and p must share the alphabet size"));
    }
    for row in t {
        if row.len() != nx || row.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::param("T", "must be a square matrix with nonnegative entries"));
        }
        if (row.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
            return Err(Error::param("T", "rows must sum to one"));
        }
    }
    for y in 0..nx {
        let py: f64 = (0..nx).map(|x| p[x] * t[x][y]).sum();
        if (py - p[y]).abs() > 1e-10 {
            return Err(Error::param("p", "is not invariant under T"));
        }
    }
    let site = states[0].first().map(|s| s.dim()).ok_or_else(|| Error::param("states", "empty row"))?;
    for row in states {
        if row.len() != nx || row.iter().any(|s| s.dim() != site) {
            return Err(Error::param("states", "need one state of common dimension per (x, y)"));
        }
    }
    let out = site * nx;
    let mut ops = Vec::new();
    for x in 0..nx {
        for y in 0..nx {
            if t[x][y] == 0.0 {
                continue;
            }
            let e = states[x][y].eigen();
            for (m, &w) in e.values.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                let psi = e.vector(m);
                let s = sqrt(t[x][y] * w);
                let mut k = CMatrix::zeros(out, nx);
                for (a, &c) in psi.iter().enumerate() {
                    k[(a * nx + y, x)] = c * s;
                }
                ops.push(k);
            }
        }
    }
    let map = KrausMap::new(nx, out, ops)?;
    let rho_b = DensityMatrix::diagonal(p)?;
    let triple = GeneratingTriple::new(site, nx, alloc::vec![map], rho_b)?;

    let positive = t.iter().all(|row| row.iter().all(|&v| v > 0.0));
    let supports_match = (0..nx).all(|y| {
        let reference = support_projector(&states[0][y]);
        (1..nx).all(|x| support_projector(&states[x][y]).sub(&reference).map(|d| d.max_abs() < 1e-8).unwrap_or(false))
    });
    Ok(CommutativeFcs { triple, lower_factorization: positive && supports_match })
}

fn support_projector(s: &DensityMatrix) -> CMatrix {
    let e = s.eigen();
    let start = e.values.iter().position(|&v| v > ZERO_EIGENVALUE).unwrap_or(e.dim());
    e.cluster_projector(start..e.dim()).into_cmatrix()
}

/// How a family is generated.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    Fcs(GeneratingTriple),
    Gibbs(GibbsChain),
    /// Independent sites; the last state repeats beyond the list.
    Product(Vec<DensityMatrix>),
}

impl Generator {
    pub fn site_dim(&self) -> usize {
        match self {
            Generator::Fcs(t) => t.site_dim,
            Generator::Gibbs(g) => g.site_dim,
            Generator::Product(s) => s.first().map(|s| s.dim()).unwrap_or(0),
        }
    }
}

/// Factorization constants and the largest `n` they were verified for.
/// `None` means not certified; `Some(∞)` means no finite constant exists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub r_upper: Option<f64>,
    pub r_lower: Option<f64>,
    pub valid_through: usize,
}

/// Cached states `ρ_1..ρ_N`, auxiliary marginals `ρ̃_1..ρ̃_N` and any
/// certified constants.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFamily {
    generator: Generator,
    states: Vec<DensityMatrix>,
    marginals: Vec<DensityMatrix>,
    certificate: Certificate,
}

impl StateFamily {
    pub fn build(generator: Generator, n: usize) -> Result<Self> {
        let (states, marginals) = match &generator {
            Generator::Product(sites) => {
                let first = sites.first().ok_or_else(|| Error::param("states", "product family needs a state"))?;
                if sites.iter().any(|s| s.dim() != first.dim()) {
                    return Err(Error::param("states", "sites must share a dimension"));
                }
                chain_dim(first.dim(), n, 1)?;
                let marginals: Vec<DensityMatrix> = (0..n).map(|k| sites[k.min(sites.len() - 1)].clone()).collect();
                let mut states = Vec::with_capacity(n);
                let mut acc = marginals[0].clone();
                states.push(acc.clone());
                for m in &marginals[1..] {
                    acc = acc.tensor(m)?;
                    states.push(acc.clone());
                }
                (states, marginals)
            }
            Generator::Gibbs(chain) => {
                chain_dim(chain.site_dim, n, 1)?;
                let states = (1..=n).map(|k| chain.state(k)).collect::<Result<Vec<_>>>()?;
                let marginals = alloc::vec![states[0].clone(); n];
                (states, marginals)
            }
            Generator::Fcs(triple) => {
                let (d, b) = (triple.site_dim, triple.aux_dim);
                chain_dim(d, n, b)?;
                let mut tau = triple.rho_b.matrix().as_cmatrix().clone();
                let mut states = Vec::with_capacity(n);
                let mut marginals = Vec::with_capacity(n);
                let mut left = 1;
                for k in 1..=n {
                    tau = apply_step(&tau, left, b, triple.map(k))?;
                    left *= d;
                    states.push(DensityMatrix::new(HermitianMatrix::symmetrized(partial_trace(&tau, &[left, b], &[0])?))?);
                    marginals.push(triple.marginal(k)?);
                }
                (states, marginals)
            }
        };
        Ok(StateFamily {
            generator,
            states,
            marginals,
            certificate: Certificate { r_upper: None, r_lower: None, valid_through: 0 },
        })
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn site_dim(&self) -> usize {
        self.generator.site_dim()
    }

    /// Number of cached states.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// `ρ_k` for `1 ≤ k ≤ len()`.
    pub fn state(&self, k: usize) -> &DensityMatrix {
        &self.states[k - 1]
    }

    /// `ρ̃_k` for `1 ≤ k ≤ len()`.
    pub fn marginal(&self, k: usize) -> &DensityMatrix {
        &self.marginals[k - 1]
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn marginals(&self) -> &[DensityMatrix] {
        &self.marginals
    }

    pub fn certificate(&self) -> Certificate {
        self.certificate
    }

    /// Certified upper constant valid through `n`, or an error.
    pub fn certified_upper(&self, n: usize) -> Result<f64> {
        match self.certificate.r_upper {
            Some(r) if self.certificate.valid_through >= n && r.is_finite() => Ok(r),
            Some(_) if self.certificate.valid_through >= n => {
                Err(Error::Uncertified("family has no finite upper factorization constant"))
            }
            _ => Err(Error::Uncertified("upper factorization constant not certified through n")),
        }
    }

    /// Certified lower constant valid through `n`, or an error.
    pub fn certified_lower(&self, n: usize) -> Result<f64> {
        match self.certificate.r_lower {
            Some(r) if self.certificate.valid_through >= n && r.is_finite() => Ok(r),
            Some(_) if self.certificate.valid_through >= n => {
                Err(Error::Uncertified("family has no finite lower factorization constant"))
            }
            _ => Err(Error::Uncertified("lower factorization constant not certified through n")),
        }
    }

    fn check_n(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.len() {
            Err(Error::param("n", format!("must lie in 1..={}", self.len())))
        } else {
            Ok(())
        }
    }

    // ρ_{k−1} ⊗ ρ̃_k, with ρ_0 the scalar 1
    fn product(&self, k: usize) -> Result<DensityMatrix> {
        if k == 1 {
            Ok(self.marginal(1).clone())
        } else {
            self.state(k - 1).tensor(self.marginal(k))
        }
    }
}

/// Which constants [`certify_family`] computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Upper,
    Lower,
    Both,
}

fn inverse_sqrt_on_support(s: &DensityMatrix) -> Result<HermitianMatrix> {
    s.eigen().map(|l| if l > ZERO_EIGENVALUE { 1.0 / sqrt(l) } else { 0.0 })
}

fn min_eigenvalue(m: &HermitianMatrix) -> f64 {
    m.eig().values[0]
}

// least R with ρ ≤ R P, double-checked against λ_min(R P − ρ)
fn upper_step(rho: &DensityMatrix, prod: &DensityMatrix) -> Result<f64> {
    if prod.min_eigenvalue() < ZERO_EIGENVALUE {
        return Err(Error::SingularProduct);
    }
    let w = inverse_sqrt_on_support(prod)?;
    let pencil = w.congruence(rho.matrix())?;
    let r = *pencil.eig().values.last().expect("nonempty");
    let direct = min_eigenvalue(&prod.matrix().scale(r).sub(rho.matrix())?);
    if direct < -PSD_TOL || direct.abs() > CERTIFICATE_AGREEMENT {
        return Err(Error::CertificateMismatch { pencil: r, direct });
    }
    Ok(r)
}

// least R with ρ ≥ R⁻¹ P; infinite when P is not supported inside ρ
fn lower_step(rho: &DensityMatrix, prod: &DensityMatrix) -> Result<f64> {
    let e = rho.eigen();
    let kernel = e.values.iter().position(|&v| v > ZERO_EIGENVALUE).unwrap_or(e.dim());
    if kernel > 0 {
        let proj = e.cluster_projector(0..kernel);
        if prod.expectation(&proj)? > ZERO_EIGENVALUE {
            return Ok(f64::INFINITY);
        }
    }
    let w = inverse_sqrt_on_support(rho)?;
    let pencil = w.congruence(prod.matrix())?;
    let r = *pencil.eig().values.last().expect("nonempty");
    if !(r > 0.0) {
        return Err(Error::SingularProduct);
    }
    let direct = min_eigenvalue(&rho.matrix().scale(r).sub(prod.matrix())?);
    if direct < -PSD_TOL || direct.abs() > CERTIFICATE_AGREEMENT {
        return Err(Error::CertificateMismatch { pencil: r, direct });
    }
    Ok(r)
}

/// Least `R ≥ 1` with `ρ_k ≤ R ρ_{k−1} ⊗ ρ̃_k` for all `k ≤ n`.
pub fn minimal_upper_r(family: &StateFamily, n: usize) -> Result<f64> {
    family.check_n(n)?;
    let mut r = 1.0f64;
    for k in 1..=n {
        r = r.max(upper_step(family.state(k), &family.product(k)?)?);
    }
    for k in 1..=n {
        let prod = family.product(k)?;
        let m = min_eigenvalue(&prod.matrix().scale(r).sub(family.state(k).matrix())?);
        if m < -PSD_TOL {
            return Err(Error::Uncertified("upper constant fails the direct check"));
        }
    }
    Ok(r)
}

/// Least `R ≥ 1` with `ρ_k ≥ R⁻¹ ρ_{k−1} ⊗ ρ̃_k` for all `k ≤ n`, or `+∞`.
pub fn minimal_lower_r(family: &StateFamily, n: usize) -> Result<f64> {
    family.check_n(n)?;
    let mut r = 1.0f64;
    for k in 1..=n {
        r = r.max(lower_step(family.state(k), &family.product(k)?)?);
        if r.is_infinite() {
            return Ok(r);
        }
    }
    for k in 1..=n {
        let prod = family.product(k)?;
        let m = min_eigenvalue(&family.state(k).matrix().scale(r).sub(prod.matrix())?);
        if m < -PSD_TOL {
            return Err(Error::Uncertified("lower constant fails the direct check"));
        }
    }
    Ok(r)
}

/// Copy of `family` carrying certified constants valid through `n`.
pub fn certify_family(family: &StateFamily, n: usize, which: Which) -> Result<StateFamily> {
    let r_upper = match which {
        Which::Upper | Which::Both => Some(minimal_upper_r(family, n)?),
        Which::Lower => None,
    };
    let r_lower = match which {
        Which::Lower | Which::Both => Some(minimal_lower_r(family, n)?),
        Which::Upper => None,
    };
    let mut out = family.clone();
    out.certificate = Certificate { r_upper, r_lower, valid_through: n };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::SamplingMode;
    use proptest::prelude::*;

    fn pauli_z() -> HermitianMatrix {
        HermitianMatrix::diagonal(&[1.0, -1.0])
    }

    fn zz(j: f64) -> HermitianMatrix {
        pauli_z().kron(&pauli_z()).scale(j)
    }

    fn heisenberg() -> HermitianMatrix {
        let x = CMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let y = CMatrix::from_vec(
            2,
            2,
            alloc::vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0)],
        )
        .unwrap();
        let z = pauli_z().into_cmatrix();
        let s = x.kron(&x).add(&y.kron(&y)).unwrap().add(&z.kron(&z)).unwrap();
        HermitianMatrix::new(s).unwrap()
    }

    fn max_dev(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
        a.matrix().sub(b.matrix()).unwrap().as_cmatrix().max_abs()
    }

    #[test]
    fn replacement_map_gives_product_family() {
        let site = DensityMatrix::from_bloch([0.2, -0.3, 0.4]).unwrap();
        let rho_b = DensityMatrix::from_bloch([0.0, 0.1, -0.5]).unwrap();
        let map = KrausMap::replacement(2, &site.tensor(&rho_b).unwrap()).unwrap();
        let triple = GeneratingTriple::new(2, 2, alloc::vec![map], rho_b).unwrap();
        let (rho4, marg) = build_fcs(&triple, 4).unwrap();
        assert!(max_dev(&rho4, &site.tensor_pow(4).unwrap()) < 1e-12);
        assert!(max_dev(&marg, &site) < 1e-12);
    }

    #[test]
    fn trivial_aux_is_product() {
        let site = DensityMatrix::random(3, 5, SamplingMode::HilbertSchmidt).unwrap().regularized(0.3);
        let one = DensityMatrix::maximally_mixed(1).unwrap();
        let map = KrausMap::replacement(1, &site).unwrap();
        let triple = GeneratingTriple::new(3, 1, alloc::vec![map], one).unwrap();
        let fam = StateFamily::build(Generator::Fcs(triple), 3).unwrap();
        assert!(max_dev(fam.state(3), &site.tensor_pow(3).unwrap()) < 1e-12);
        let cert = certify_family(&fam, 3, Which::Both).unwrap().certificate();
        assert!((cert.r_upper.unwrap() - 1.0).abs() < 1e-9);
        assert!((cert.r_lower.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn triple_validation() {
        let rho_b = DensityMatrix::maximally_mixed(2).unwrap();
        let bad = KrausMap::new(2, 4, alloc::vec![CMatrix::zeros(4, 2)]).unwrap();
        assert!(GeneratingTriple::new(2, 2, alloc::vec![bad], rho_b.clone()).is_err());
        // replacement with a different B-state breaks invariance
        let other = DensityMatrix::from_bloch([0.0, 0.0, 0.5]).unwrap();
        let map = KrausMap::replacement(2, &rho_b.tensor(&other).unwrap()).unwrap();
        assert!(GeneratingTriple::new(2, 2, alloc::vec![map], rho_b).is_err());
    }

    #[test]
    fn choi_round_trip() {
        let t = GeneratingTriple::random(2, 2, 2, 9).unwrap();
        let map = &t.maps()[0];
        let (din, dout) = (2, 4);
        let mut choi = CMatrix::zeros(din * dout, din * dout);
        for i in 0..din {
            for j in 0..din {
                let mut e = CMatrix::zeros(din, din);
                e[(i, j)] = Complex64::new(1.0, 0.0);
                let img = map.apply(&e).unwrap();
                for a in 0..dout {
                    for b in 0..dout {
                        choi[(i * dout + a, j * dout + b)] = img[(a, b)];
                    }
                }
            }
        }
        let back = KrausMap::from_choi(&HermitianMatrix::new(choi).unwrap(), din, dout).unwrap();
        let x = DensityMatrix::random(2, 3, SamplingMode::HilbertSchmidt).unwrap();
        let d = back.apply(x.matrix().as_cmatrix()).unwrap().sub(&map.apply(x.matrix().as_cmatrix()).unwrap()).unwrap();
        assert!(d.max_abs() < 1e-12);
    }

    #[test]
    fn gibbs_basic_cases() {
        let zero = HermitianMatrix::diagonal(&[0.0; 4]);
        let chain = GibbsChain::new(2, zero, 1.0, None).unwrap();
        assert!(max_dev(&chain.state(3).unwrap(), &DensityMatrix::maximally_mixed(8).unwrap()) < 1e-14);
        let chain = GibbsChain::new(2, heisenberg(), 0.7, None).unwrap();
        assert!(max_dev(&chain.state(1).unwrap(), &DensityMatrix::maximally_mixed(2).unwrap()) < 1e-14);
    }

    #[test]
    fn gibbs_matches_classical_ising() {
        let (j, g, beta, n) = (0.8, 0.3, 0.6, 4usize);
        let chain = GibbsChain::new(2, zz(j), beta, Some(pauli_z().scale(g))).unwrap();
        let rho = chain.state(n).unwrap();
        // transfer matrix for the partition function, enumeration for weights
        let spin = |b: usize| if b == 0 { 1.0 } else { -1.0 };
        let tm = |a: usize, b: usize| (-beta * (j * spin(a) * spin(b) + g * spin(b))).exp();
        let mut v = [(-beta * g).exp(), (beta * g).exp()];
        for _ in 1..n {
            v = [v[0] * tm(0, 0) + v[1] * tm(1, 0), v[0] * tm(0, 1) + v[1] * tm(1, 1)];
        }
        let z = v[0] + v[1];
        for s in 0..(1usize << n) {
            let bits: Vec<usize> = (0..n).map(|i| (s >> (n - 1 - i)) & 1).collect();
            let mut e = g * spin(bits[0]);
            for i in 1..n {
                e += j * spin(bits[i - 1]) * spin(bits[i]) + g * spin(bits[i]);
            }
            let p = (-beta * e).exp() / z;
            assert!((rho.matrix().as_cmatrix()[(s, s)].re - p).abs() < 1e-13);
        }
    }

    #[test]
    fn zz_gibbs_constants() {
        // ρ_k(s)/(ρ_{k−1}(s')/2) = e^{−βJ s_{k−1}s_k}/cosh(βJ), so the upper constant is
        // e^{βJ}/cosh(βJ) and the lower one e^{βJ}cosh(βJ)
        let mut last = 1.0;
        for beta in [0.1, 0.2, 0.4] {
            let chain = GibbsChain::new(2, zz(1.0), beta, None).unwrap();
            let fam = StateFamily::build(Generator::Gibbs(chain), 4).unwrap();
            let ru = minimal_upper_r(&fam, 4).unwrap();
            let rl = minimal_lower_r(&fam, 4).unwrap();
            assert!((ru - beta.exp() / beta.cosh()).abs() < 1e-9);
            assert!((rl - beta.exp() * beta.cosh()).abs() < 1e-9);
            assert!(ru > last);
            last = ru;
        }
    }

    #[test]
    fn heisenberg_gibbs_certificate() {
        let chain = GibbsChain::new(2, heisenberg(), 0.3, Some(pauli_z().scale(0.4))).unwrap();
        let fam = StateFamily::build(Generator::Gibbs(chain), 4).unwrap();
        let cert = certify_family(&fam, 4, Which::Both).unwrap().certificate();
        let (ru, rl) = (cert.r_upper.unwrap(), cert.r_lower.unwrap());
        assert!(ru > 1.0 && ru.is_finite() && rl > 1.0 && rl.is_finite());
        for k in 2..=4 {
            let prod = fam.state(k - 1).tensor(fam.marginal(k)).unwrap();
            let m = prod.matrix().scale(ru).sub(fam.state(k).matrix()).unwrap();
            assert!(m.eig().values[0] >= -PSD_TOL);
            let m = prod.matrix().scale(ru * (1.0 - 1e-6)).sub(fam.state(k).matrix()).unwrap();
            if k == 4 {
                // the maximum is attained at the last step for this chain
                assert!(m.eig().values[0] < 0.0);
            }
        }
    }

    #[test]
    fn commutative_markov_chain() {
        let t = alloc::vec![alloc::vec![0.7, 0.3], alloc::vec![0.4, 0.6]];
        let p = [4.0 / 7.0, 3.0 / 7.0];
        let e0 = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        let e1 = DensityMatrix::diagonal(&[0.0, 1.0]).unwrap();
        let states = alloc::vec![alloc::vec![e0.clone(), e1.clone()], alloc::vec![e0, e1]];
        let c = commutative_fcs(&t, &states, &p).unwrap();
        assert!(c.lower_factorization);
        let fam = StateFamily::build(Generator::Fcs(c.triple), 3).unwrap();
        let rho = fam.state(3).matrix().as_cmatrix();
        for s in 0..8usize {
            let y = [(s >> 2) & 1, (s >> 1) & 1, s & 1];
            let want = p[y[0]] * t[y[0]][y[1]] * t[y[1]][y[2]];
            assert!((rho[(s, s)].re - want).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_transition_breaks_lower_factorization() {
        let t = alloc::vec![alloc::vec![0.5, 0.5], alloc::vec![1.0, 0.0]];
        let p = [2.0 / 3.0, 1.0 / 3.0];
        let e0 = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        let e1 = DensityMatrix::diagonal(&[0.0, 1.0]).unwrap();
        let states = alloc::vec![alloc::vec![e0.clone(), e1.clone()], alloc::vec![e0, e1]];
        let c = commutative_fcs(&t, &states, &p).unwrap();
        assert!(!c.lower_factorization);
        let fam = StateFamily::build(Generator::Fcs(c.triple), 3).unwrap();
        assert_eq!(minimal_lower_r(&fam, 3).unwrap(), f64::INFINITY);
        assert!(minimal_upper_r(&fam, 2).unwrap().is_finite());
        // ρ_2 has a kernel, so the step-3 product is singular
        assert!(matches!(minimal_upper_r(&fam, 3), Err(Error::SingularProduct)));
    }

    #[test]
    fn positive_commutative_fcs_has_both_constants() {
        let t = alloc::vec![alloc::vec![0.6, 0.4], alloc::vec![0.2, 0.8]];
        let p = [1.0 / 3.0, 2.0 / 3.0];
        let s = |b: [f64; 3]| DensityMatrix::from_bloch(b).unwrap();
        let states = alloc::vec![
            alloc::vec![s([0.1, 0.2, 0.3]), s([-0.4, 0.0, 0.1])],
            alloc::vec![s([0.3, -0.2, 0.0]), s([0.0, 0.5, -0.2])],
        ];
        let c = commutative_fcs(&t, &states, &p).unwrap();
        assert!(c.lower_factorization);
        let fam = StateFamily::build(Generator::Fcs(c.triple), 4).unwrap();
        let cert = certify_family(&fam, 4, Which::Both).unwrap().certificate();
        assert!(cert.r_upper.unwrap().is_finite() && cert.r_lower.unwrap().is_finite());
        assert!(commutative_fcs(&t, &states, &[0.5, 0.5]).is_err());
    }

    #[test]
    fn equal_letter_states_give_iid() {
        let t = alloc::vec![alloc::vec![0.6, 0.4], alloc::vec![0.2, 0.8]];
        let p = [1.0 / 3.0, 2.0 / 3.0];
        let r = DensityMatrix::from_bloch([0.3, 0.1, -0.2]).unwrap();
        let states = alloc::vec![alloc::vec![r.clone(); 2]; 2];
        let fam = StateFamily::build(Generator::Fcs(commutative_fcs(&t, &states, &p).unwrap().triple), 4).unwrap();
        assert!(max_dev(fam.state(4), &r.tensor_pow(4).unwrap()) < 1e-12);
        let cert = certify_family(&fam, 4, Which::Both).unwrap().certificate();
        assert!((cert.r_upper.unwrap() - 1.0).abs() < 1e-9);
        assert!((cert.r_lower.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn singular_product_is_rejected() {
        let pure = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        let fam = StateFamily::build(Generator::Product(alloc::vec![pure]), 2).unwrap();
        assert!(matches!(minimal_upper_r(&fam, 2), Err(Error::SingularProduct)));
    }

    #[test]
    fn uncertified_family_is_refused() {
        let s = DensityMatrix::maximally_mixed(2).unwrap();
        let fam = StateFamily::build(Generator::Product(alloc::vec![s]), 3).unwrap();
        assert!(matches!(fam.certified_upper(3), Err(Error::Uncertified(_))));
        let c = certify_family(&fam, 2, Which::Upper).unwrap();
        assert!(c.certified_upper(2).is_ok());
        assert!(c.certified_upper(3).is_err());
        assert!(c.certified_lower(2).is_err());
    }

    #[test]
    fn resource_guard() {
        let s = DensityMatrix::maximally_mixed(2).unwrap();
        assert!(matches!(
            StateFamily::build(Generator::Product(alloc::vec![s]), 13),
            Err(Error::ResourceLimit { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn fcs_marginal_consistency(seed: u64, aux in 1usize..4, kraus in 1usize..3) {
            let triple = GeneratingTriple::random(2, aux, kraus, seed).unwrap();
            let fam = StateFamily::build(Generator::Fcs(triple), 4).unwrap();
            for k in 2..=4 {
                let dims = alloc::vec![2usize; k];
                let keep: Vec<usize> = (0..k - 1).collect();
                let reduced = fam.state(k).partial_trace(&dims, &keep).unwrap();
                prop_assert!(max_dev(&reduced, fam.state(k - 1)) < 1e-9);
            }
        }

        #[test]
        fn upper_constant_grows_with_n(seed: u64) {
            let triple = GeneratingTriple::random(2, 2, 2, seed).unwrap();
            let fam = StateFamily::build(Generator::Fcs(triple), 4).unwrap();
            let mut prev = 1.0;
            for n in 1..=4 {
                match minimal_upper_r(&fam, n) {
                    Ok(r) => { prop_assert!(r >= prev); prev = r; }
                    Err(Error::SingularProduct) => break,
                    Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
                }
            }
        }
    }
}
