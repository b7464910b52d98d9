//! Argument parsing and subcommand dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use qht_core::bounds_corr::{family_hoeffding_bound, family_moderate, family_stein_bound, moderate_certified, moderate_lower, moderate_upper_form};
use qht_core::bounds_iid::{
    azuma_hoeffding_bound, azuma_stein_bound, crossover_eps, hoeffding_eps, ks_hoeffding_bound, ks_stein_bound, uniform_grid,
    PairConstants, QCurve,
};
use qht_core::concentration::{
    azuma_tail, improved_azuma_tail, kearns_saul_constant, kearns_saul_tail, mc_martingale_tail, IncrementModel, TailSide,
};
use qht_core::cq_channel::{holevo_capacity, lifted_sup_norm, wr_lower_bound, CQChannel};
use qht_core::divergences::{info_variance, rel_entropy};
use qht_core::fcs_gibbs::{certify_family, minimal_lower_r, minimal_upper_r, Generator, StateFamily, Which};
use qht_core::modular::{log_ratio_range, relative_modular_measure, sup_norm_c};
use qht_core::np_oracle::{error_curve, optimal_type2, optimal_type2_hoeffding};
use qht_core::states::SamplingMode;
use qht_core::DensityMatrix;
use serde_json::{json, Value};

use crate::io::{read_channel, read_family, read_state};
use crate::output::{fmt_num, num, nums, Csv};
use crate::{CliError, EXIT_PARSE};

type Result<T> = std::result::Result<T, CliError>;

/// Bloch vectors of the default comparison pair.
pub const FIG1_RHO: [f64; 3] = [-0.177483, 0.365807, 0.291007];
pub const FIG1_SIGMA: [f64; 3] = [-0.452239, -0.141906, -0.159193];

/// Largest dimension for which optional exact columns are computed.
pub const EXACT_DIM_LIMIT: usize = 256;

#[derive(Debug, Parser)]
#[command(name = "qht", version, about = "Finite-blocklength bounds for quantum hypothesis testing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Pair {
    /// State file for the null hypothesis ρ
    a: PathBuf,
    /// State file for the alternative σ
    b: PathBuf,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Threshold {
    /// Type-I error budget (Stein regime)
    #[arg(long)]
    eps: Option<f64>,
    /// Type-I error exponent (Hoeffding regime, budget e^{-n r})
    #[arg(long)]
    rate: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Divergences and single-copy constants of a pair
    Divergence(Pair),
    /// Atoms of the relative modular spectral measure (n-fold convolution)
    Measure {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, default_value_t = 1)]
        n: usize,
    },
    /// Exact optimal type-II error of n copies
    NpExact {
        #[command(flatten)]
        pair: Pair,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Print the whole error curve as CSV instead
        #[arg(long)]
        curve: bool,
    },
    /// Concentration bounds on log β_n for independent copies
    BoundsIid {
        #[command(flatten)]
        pair: Pair,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        threshold: Threshold,
        /// Also report the exact value from the Neyman-Pearson oracle
        #[arg(long)]
        exact: bool,
    },
    /// Second-order coefficient comparison table over an ε grid
    Fig1 {
        #[arg(long = "blochA", alias = "bloch-a", value_parser = parse_bloch, allow_hyphen_values = true, requires = "bloch_b")]
        bloch_a: Option<[f64; 3]>,
        #[arg(long = "blochB", alias = "bloch-b", value_parser = parse_bloch, allow_hyphen_values = true, requires = "bloch_a")]
        bloch_b: Option<[f64; 3]>,
        /// Random qubit pair instead of the default states
        #[arg(long, conflicts_with = "bloch_a")]
        seed: Option<u64>,
        /// Recorded in the metadata; the table itself does not depend on n
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        grid: usize,
    },
    /// Factorization constants of a correlated family
    FcsCertify {
        family: PathBuf,
        #[arg(long)]
        n: usize,
    },
    /// Bounds on log β_n for a pair of certified correlated families
    BoundsFactorized {
        family_a: PathBuf,
        family_b: PathBuf,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        threshold: Threshold,
        #[arg(long)]
        exact: bool,
    },
    /// Moderate-deviation table for a pair of families, a_n = n^{-t}
    Moderate {
        family_a: PathBuf,
        family_b: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0 / 3.0)]
        an_exponent: f64,
    },
    /// Classical-quantum channel computations
    Channel {
        channel: PathBuf,
        #[command(subcommand)]
        action: ChannelAction,
    },
    /// Monte Carlo check of martingale tail bounds
    ConcentrationMc {
        /// rademacher | bernoulli:P | uniform:LO:HI | walk:P_UP
        #[arg(long)]
        model: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Deviation above the mean; defaults to √n
        #[arg(long)]
        deviation: Option<f64>,
    },
}

#[derive(Debug, Subcommand)]
enum ChannelAction {
    /// Holevo capacity, optimal prior and divergence centre
    Capacity,
    /// One-shot bound on n memoryless uses against the concentration bound
    WrBound {
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        eps_prime: f64,
        #[arg(long, default_value_t = 1)]
        n: usize,
    },
    /// Moderate-deviation table for memoryless use, a_n = n^{-t}
    Moderate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0 / 3.0)]
        an_exponent: f64,
    },
}

fn parse_bloch(s: &str) -> std::result::Result<[f64; 3], String> {
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| e.to_string())).collect::<std::result::Result<_, _>>()?;
    v.try_into().map_err(|_| "expected three comma-separated numbers".to_string())
}

/// Runs one invocation, writing results to `out` and errors to `err`.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let text = e.to_string();
            let msg = text.lines().next().unwrap_or_default().trim_start_matches("error: ").to_string();
            let _ = writeln!(err, "{}", CliError::Parse(msg).to_json());
            return EXIT_PARSE;
        }
    };
    match dispatch(cli.command) {
        Ok(text) => match out.write_all(text.as_bytes()) {
            Ok(()) => 0,
            Err(e) => {
                let _ = writeln!(err, "{}", CliError::Parse(format!("writing output: {e}")).to_json());
                EXIT_PARSE
            }
        },
        Err(e) => {
            let _ = writeln!(err, "{}", e.to_json());
            e.exit_code()
        }
    }
}

fn json_text(v: Value) -> String {
    let mut s = serde_json::to_string_pretty(&v).expect("serializable");
    s.push('\n');
    s
}

fn dispatch(cmd: Command) -> Result<String> {
    match cmd {
        Command::Divergence(p) => divergence(&p),
        Command::Measure { pair, n } => measure(&pair, n),
        Command::NpExact { pair, eps, n, curve } => np_exact(&pair, eps, n, curve),
        Command::BoundsIid { pair, n, threshold, exact } => bounds_iid(&pair, n, &threshold, exact),
        Command::Fig1 { bloch_a, bloch_b, seed, n, grid } => fig1(bloch_a.zip(bloch_b), seed, n, grid),
        Command::FcsCertify { family, n } => fcs_certify(&family, n),
        Command::BoundsFactorized { family_a, family_b, n, threshold, exact } => {
            bounds_factorized(&family_a, &family_b, n, &threshold, exact)
        }
        Command::Moderate { family_a, family_b, n, an_exponent } => moderate(&family_a, &family_b, n, an_exponent),
        Command::Channel { channel, action } => channel_cmd(&read_channel(&channel)?, action),
        Command::ConcentrationMc { model, n, trials, seed, deviation } => concentration_mc(&model, n, trials, seed, deviation),
    }
}

fn precondition(msg: impl Into<String>) -> CliError {
    CliError::Precondition(msg.into())
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(precondition("--n must be at least 1"))
    } else {
        Ok(())
    }
}

fn read_pair(p: &Pair) -> Result<(DensityMatrix, DensityMatrix)> {
    let rho = read_state(&p.a)?;
    let sigma = read_state(&p.b)?;
    if rho.dim() != sigma.dim() {
        return Err(qht_core::Error::DimensionMismatch { expected: rho.dim(), found: sigma.dim() }.into());
    }
    Ok((rho, sigma))
}

fn divergence(p: &Pair) -> Result<String> {
    let (rho, sigma) = read_pair(p)?;
    let d = rel_entropy(&rho, &sigma)?;
    let v = info_variance(&rho, &sigma)?;
    let (lo, hi) = log_ratio_range(&rho, &sigma);
    let faithful = rho.is_faithful() && sigma.is_faithful();
    let (c, ks) = if faithful {
        let pc = PairConstants::new(&rho, &sigma)?;
        (num(sup_norm_c(&rho, &sigma)?), num(pc.ks_constant))
    } else {
        (Value::Null, Value::Null)
    };
    Ok(json_text(json!({
        "dim": rho.dim(),
        "relative_entropy": num(d),
        "information_variance": num(v),
        "log_ratio_range": nums(&[lo, hi]),
        "sup_norm": c,
        "ks_constant": ks,
    })))
}

fn measure(p: &Pair, n: usize) -> Result<String> {
    check_n(n)?;
    let (rho, sigma) = read_pair(p)?;
    let mu = relative_modular_measure(&rho, &sigma)?.convolve_pow(n);
    let mut csv = Csv::new(&["location", "weight"]);
    for a in mu.atoms() {
        csv.row(&[a.location, a.weight]);
    }
    Ok(csv.into_string())
}

fn copies(rho: &DensityMatrix, sigma: &DensityMatrix, n: usize) -> Result<(DensityMatrix, DensityMatrix)> {
    Ok((rho.tensor_pow(n)?, sigma.tensor_pow(n)?))
}

fn np_exact(p: &Pair, eps: f64, n: usize, curve: bool) -> Result<String> {
    check_n(n)?;
    let (rho, sigma) = read_pair(p)?;
    let (rn, sn) = copies(&rho, &sigma, n)?;
    if curve {
        let mut csv = Csv::new(&["alpha", "beta"]);
        for &(a, b) in error_curve(&rn, &sn)?.breakpoints() {
            csv.row(&[a, b]);
        }
        return Ok(csv.into_string());
    }
    let beta = optimal_type2(&rn, &sn, eps)?;
    Ok(json_text(json!({
        "n": n,
        "eps": num(eps),
        "type2": num(beta),
        "log_type2": num(beta.ln()),
    })))
}

fn too_big_for_exact(dim: usize) -> Result<()> {
    if dim > EXACT_DIM_LIMIT {
        Err(qht_core::Error::ResourceLimit { dim, limit: EXACT_DIM_LIMIT }.into())
    } else {
        Ok(())
    }
}

fn bounds_iid(p: &Pair, n: usize, t: &Threshold, exact: bool) -> Result<String> {
    check_n(n)?;
    let (rho, sigma) = read_pair(p)?;
    let pairs = PairConstants::iid(&rho, &sigma, n)?;
    let (azuma, ks, regime) = match (t.eps, t.rate) {
        (Some(eps), _) => (azuma_stein_bound(&pairs, eps)?, ks_stein_bound(&pairs, eps)?, "stein"),
        (None, Some(rate)) => (azuma_hoeffding_bound(&pairs, rate)?, ks_hoeffding_bound(&pairs, rate)?, "hoeffding"),
        (None, None) => unreachable!("clap requires one of --eps/--rate"),
    };
    let exact_value = if exact {
        too_big_for_exact(rho.dim().saturating_pow(n as u32))?;
        let (rn, sn) = copies(&rho, &sigma, n)?;
        let beta = match (t.eps, t.rate) {
            (Some(eps), _) => optimal_type2(&rn, &sn, eps)?,
            (None, Some(rate)) => optimal_type2_hoeffding(&rn, &sn, rate, n)?,
            _ => unreachable!(),
        };
        num(beta.ln())
    } else {
        Value::Null
    };
    Ok(json_text(json!({
        "n": n,
        "regime": regime,
        "eps": t.eps.map(num).unwrap_or_else(|| num(hoeffding_eps(n, t.rate.unwrap_or(0.0)))),
        "rate": t.rate.map(num),
        "divergence_sum": num(azuma.divergence_sum),
        "azuma": num(azuma.value),
        "kearns_saul": num(ks.value),
        "exact": exact_value,
    })))
}

fn bloch(s: &DensityMatrix) -> [f64; 3] {
    let m = s.matrix().as_cmatrix();
    [2.0 * m[(0, 1)].re, -2.0 * m[(0, 1)].im, m[(0, 0)].re - m[(1, 1)].re]
}

fn fig1(vectors: Option<([f64; 3], [f64; 3])>, seed: Option<u64>, n: usize, grid: usize) -> Result<String> {
    if grid == 0 {
        return Err(precondition("--grid must be positive"));
    }
    let (rho, sigma, ra, rb) = match (vectors, seed) {
        (Some((a, b)), _) => (DensityMatrix::from_bloch(a)?, DensityMatrix::from_bloch(b)?, a, b),
        (None, Some(s)) => {
            let rho = DensityMatrix::random(2, s, SamplingMode::HilbertSchmidt)?;
            let sigma = DensityMatrix::random(2, s.wrapping_add(1), SamplingMode::HilbertSchmidt)?;
            let (a, b) = (bloch(&rho), bloch(&sigma));
            (rho, sigma, a, b)
        }
        (None, None) => (DensityMatrix::from_bloch(FIG1_RHO)?, DensityMatrix::from_bloch(FIG1_SIGMA)?, FIG1_RHO, FIG1_SIGMA),
    };
    let curve = QCurve::new(&rho, &sigma)?;
    let cross = crossover_eps(&rho, &sigma)?;
    let k = curve.constants;
    let mut csv = Csv::default();
    csv.comment(&format!("n={n},grid={grid}"));
    for (name, r) in [("rho", ra), ("sigma", rb)] {
        csv.comment(&format!("state,{name},{},{},{}", fmt_num(r[0]), fmt_num(r[1]), fmt_num(r[2])));
    }
    csv.comment(&format!(
        "constants,D,{},V,{},d,{},c_ks,{},eta,{},eps0,{},eps0_tilde,{}",
        fmt_num(k.divergence),
        fmt_num(k.variance),
        fmt_num(k.sup_norm),
        fmt_num(k.ks_constant),
        fmt_num(curve.eta),
        fmt_num(cross.eps0),
        fmt_num(cross.eps0_tilde),
    ));
    csv.line(["eps", "neg_f", "g", "h", "h_tilde", "s1", "s2"].map(String::from));
    for eps in uniform_grid(grid) {
        let r = curve.row(eps)?;
        csv.row(&[r.eps, r.neg_f, r.g, r.h, r.h_tilde, r.s1, r.s2]);
    }
    Ok(csv.into_string())
}

fn r_value(r: qht_core::Result<f64>) -> (Value, Value) {
    match r {
        Ok(v) => (num(v), Value::Null),
        Err(e) => (Value::Null, Value::String(e.code().into())),
    }
}

fn family_kind(g: &Generator) -> &'static str {
    match g {
        Generator::Fcs(_) => "fcs",
        Generator::Gibbs(_) => "gibbs",
        Generator::Product(_) => "product",
    }
}

fn fcs_certify(path: &Path, n: usize) -> Result<String> {
    check_n(n)?;
    let g = read_family(path)?;
    let kind = family_kind(&g);
    let fam = StateFamily::build(g, n)?;
    let (upper, upper_err) = r_value(minimal_upper_r(&fam, n));
    let (lower, lower_err) = r_value(minimal_lower_r(&fam, n));
    Ok(json_text(json!({
        "family": kind,
        "n": n,
        "site_dim": fam.site_dim(),
        "r_upper": upper,
        "r_lower": lower,
        "upper_error": upper_err,
        "lower_error": lower_err,
    })))
}

fn certified_pair(a: &Path, b: &Path, n: usize) -> Result<(StateFamily, StateFamily)> {
    let ga = read_family(a)?;
    let gb = read_family(b)?;
    if ga.site_dim() != gb.site_dim() {
        return Err(qht_core::Error::DimensionMismatch { expected: ga.site_dim(), found: gb.site_dim() }.into());
    }
    let rho = certify_family(&StateFamily::build(ga, n)?, n, Which::Upper)?;
    let sigma = certify_family(&StateFamily::build(gb, n)?, n, Which::Upper)?;
    Ok((rho, sigma))
}

fn bounds_factorized(a: &Path, b: &Path, n: usize, t: &Threshold, exact: bool) -> Result<String> {
    check_n(n)?;
    let (rho, sigma) = certified_pair(a, b, n)?;
    let r = rho.certified_upper(n)?.max(sigma.certified_upper(n)?);
    let (bound, regime) = match (t.eps, t.rate) {
        (Some(eps), _) => (family_stein_bound(&rho, &sigma, n, eps)?, "stein"),
        (None, Some(rate)) => (family_hoeffding_bound(&rho, &sigma, n, rate)?, "hoeffding"),
        _ => unreachable!("clap requires one of --eps/--rate"),
    };
    let exact_value = if exact {
        let (rn, sn) = (rho.state(n), sigma.state(n));
        too_big_for_exact(rn.dim())?;
        let beta = match (t.eps, t.rate) {
            (Some(eps), _) => optimal_type2(rn, sn, eps)?,
            (None, Some(rate)) => optimal_type2_hoeffding(rn, sn, rate, n)?,
            _ => unreachable!(),
        };
        num(beta.ln())
    } else {
        Value::Null
    };
    Ok(json_text(json!({
        "n": n,
        "regime": regime,
        "eps": t.eps.map(num).unwrap_or_else(|| num(hoeffding_eps(n, t.rate.unwrap_or(0.0)))),
        "rate": t.rate.map(num),
        "r": num(r),
        "bound": num(bound),
        "exact": exact_value,
    })))
}

fn moderate_schedule(k: usize, t: f64) -> f64 {
    (k as f64).powf(-t)
}

fn moderate(a: &Path, b: &Path, n: usize, t: f64) -> Result<String> {
    check_n(n)?;
    if !(t > 0.0 && t < 0.5) {
        return Err(precondition("--an-exponent must lie in (0, 1/2)"));
    }
    let (rho, sigma) = certified_pair(a, b, n)?;
    let mut csv = Csv::new(&["n", "a_n", "eps_n", "lower", "upper_form", "certified", "dh_exact"]);
    for k in 1..=n {
        let row = family_moderate(&rho, &sigma, k, moderate_schedule(k, t))?;
        let exact = if rho.state(k).dim() <= EXACT_DIM_LIMIT {
            -optimal_type2(rho.state(k), sigma.state(k), row.eps_n)?.ln()
        } else {
            f64::NAN
        };
        csv.line([
            k.to_string(),
            fmt_num(row.a_n),
            fmt_num(row.eps_n),
            fmt_num(row.lower),
            fmt_num(row.upper_form),
            row.certified.to_string(),
            fmt_num(exact),
        ]);
    }
    Ok(csv.into_string())
}

fn channel_cmd(ch: &CQChannel, action: ChannelAction) -> Result<String> {
    let rep = holevo_capacity(ch)?;
    match action {
        ChannelAction::Capacity => {
            let prior: serde_json::Map<String, Value> =
                ch.alphabet().iter().zip(&rep.prior).map(|(a, &p)| (a.clone(), num(p))).collect();
            let m = rep.sigma_star.matrix().as_cmatrix();
            let d = m.rows();
            let entries: Vec<Value> = (0..d * d).map(|i| json!([num(m[(i / d, i % d)].re), num(m[(i / d, i % d)].im)])).collect();
            let c = lifted_sup_norm(ch, &rep.prior).ok().map(num);
            Ok(json_text(json!({
                "chi_star": num(rep.chi_star),
                "prior": prior,
                "sigma_star": {"dim": d, "entries": entries},
                "v_min": num(rep.v_min),
                "sup_norm": c,
                "gap": num(rep.gap),
                "iterations": rep.iterations,
            })))
        }
        ChannelAction::WrBound { eps, eps_prime, n } => {
            check_n(n)?;
            let memoryless = rep.lower_memoryless(ch, n, eps, eps_prime)?;
            let chn = ch.tensor_power(n)?;
            too_big_for_exact(chn.len() * chn.dim())?;
            let prior = product_prior(&rep.prior, n);
            let wr = wr_lower_bound(&chn, eps, eps_prime, &prior)?;
            Ok(json_text(json!({
                "n": n,
                "eps": num(eps),
                "eps_prime": num(eps_prime),
                "chi_star": num(rep.chi_star),
                "wr_exact": num(wr),
                "memoryless_lower": num(memoryless),
            })))
        }
        ChannelAction::Moderate { n, an_exponent } => {
            check_n(n)?;
            if !(an_exponent > 0.0 && an_exponent < 0.5) {
                return Err(precondition("--an-exponent must lie in (0, 1/2)"));
            }
            let c = lifted_sup_norm(ch, &rep.prior)?;
            let mut csv = Csv::new(&["n", "a_n", "eps_n", "lower", "upper_form", "certified"]);
            for k in 1..=n {
                let a = moderate_schedule(k, an_exponent);
                // memoryless use factorizes exactly, R = 1
                let lower = moderate_lower(rep.chi_star, rep.v_min, c, 1.0, a, k)?;
                let upper = moderate_upper_form(rep.chi_star, rep.v_min, a, k);
                let certified = moderate_certified(rep.v_min, c, 1.0, a, k)?;
                csv.line([
                    k.to_string(),
                    fmt_num(a),
                    fmt_num((-(k as f64) * a * a).exp()),
                    fmt_num(lower),
                    fmt_num(upper),
                    certified.to_string(),
                ]);
            }
            Ok(csv.into_string())
        }
    }
}

// p^{⊗n} in the string order used by `tensor_power`
fn product_prior(p: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    for _ in 0..n {
        out = out.iter().flat_map(|&a| p.iter().map(move |&b| a * b)).collect();
    }
    out
}

fn parse_model(s: &str) -> Result<IncrementModel> {
    let mut parts = s.split(':');
    let name = parts.next().unwrap_or_default();
    let args: Vec<f64> = parts
        .map(|x| x.parse::<f64>().map_err(|_| CliError::Parse(format!("bad model parameter \"{x}\""))))
        .collect::<Result<_>>()?;
    let model = match (name, args.as_slice()) {
        ("rademacher", []) => IncrementModel::Rademacher,
        ("bernoulli", [p]) => IncrementModel::Bernoulli { p: *p },
        ("uniform", [lo, hi]) => IncrementModel::Uniform { lo: *lo, hi: *hi },
        ("walk", [p]) => IncrementModel::SelfCorrectingWalk { p_up: *p },
        _ => return Err(CliError::Parse(format!("unknown model \"{s}\""))),
    };
    Ok(model)
}

type ModelConstants = (f64, f64, Option<(f64, f64)>, Option<f64>);

/// Per-step mean, Azuma bound `d`, optional `(d, ν)` for the variance-aware
/// bound and optional Kearns-Saul constant.
fn model_constants(m: IncrementModel) -> Result<ModelConstants> {
    Ok(match m {
        IncrementModel::Rademacher => (0.0, 1.0, None, Some(kearns_saul_constant(-1.0, 1.0, 0.5)?)),
        IncrementModel::Bernoulli { p } => {
            let d = 1.0 - p;
            let nu = (p * (1.0 - p)).sqrt();
            let improved = (nu > 0.0 && nu < d).then_some((d, nu));
            (p, p.max(1.0 - p), improved, Some(kearns_saul_constant(0.0, 1.0, p)?))
        }
        IncrementModel::Uniform { lo, hi } => {
            let d = (hi - lo) / 2.0;
            (0.5 * (lo + hi), d, Some((d, d / 3f64.sqrt())), Some(kearns_saul_constant(lo, hi, 0.5)?))
        }
        // super-martingale: the drifted sum sits below its martingale part
        IncrementModel::SelfCorrectingWalk { p_up } => {
            let d = 2.0 * (1.0 - p_up);
            (0.0, 1.0, (1.0 < d).then_some((d, 1.0)), None)
        }
        IncrementModel::Gaussian { .. } => return Err(precondition("unbounded model")),
    })
}

fn concentration_mc(model: &str, n: usize, trials: usize, seed: u64, deviation: Option<f64>) -> Result<String> {
    check_n(n)?;
    let m = parse_model(model)?;
    let (mean, d, improved, ks) = model_constants(m)?;
    let alpha = deviation.unwrap_or((n as f64).sqrt());
    if !(alpha >= 0.0) {
        return Err(precondition("--deviation must be nonnegative"));
    }
    let est = mc_martingale_tail(m, n, trials, n as f64 * mean + alpha, TailSide::Upper, seed)?;
    let azuma = azuma_tail(alpha, &vec![d; n])?;
    let improved = improved.map(|(d, nu)| improved_azuma_tail(alpha / n as f64, n, d, nu)).transpose()?;
    let ks = ks.map(|c| kearns_saul_tail(alpha / (n as f64).sqrt(), n, &vec![c; n])).transpose()?;
    Ok(json_text(json!({
        "model": model,
        "n": n,
        "trials": trials,
        "seed": seed,
        "deviation": num(alpha),
        "empirical": num(est.probability),
        "std_error": num(est.std_error),
        "azuma": num(azuma),
        "improved_azuma": improved.map(num),
        "kearns_saul": ks.map(num),
    })))
}
