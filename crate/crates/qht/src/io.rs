//! JSON input formats for states, operators, state families and channels.
//!
//! Structural problems (missing keys, wrong types) are [`InputError::Parse`];
//! inputs that parse but describe an invalid object surface as core errors.

use std::path::Path;

use num_complex::Complex64;
use qht_core::cq_channel::CQChannel;
use qht_core::fcs_gibbs::{commutative_fcs, Generator, GeneratingTriple, GibbsChain, KrausMap};
use qht_core::{CMatrix, DensityMatrix, HermitianMatrix};
use serde_json::{Map, Value};

use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn parse_err(msg: impl Into<String>) -> CliError {
    CliError::Parse(msg.into())
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| parse_err(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| parse_err(format!("{}: {e}", path.display())))
}

fn object<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| parse_err(format!("{what} must be a JSON object")))
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, what: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| parse_err(format!("{what}: missing \"{key}\"")))
}

fn number(v: &Value, what: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| parse_err(format!("{what} must be a number")))
}

fn uint(v: &Value, what: &str) -> Result<usize> {
    v.as_u64().map(|u| u as usize).ok_or_else(|| parse_err(format!("{what} must be a nonnegative integer")))
}

fn numbers(v: &Value, what: &str) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| parse_err(format!("{what} must be an array of numbers")))?
        .iter()
        .map(|x| number(x, what))
        .collect()
}

fn array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| parse_err(format!("{what} must be an array")))
}

/// Row-major `[[re, im], …]` entries of a `rows × cols` matrix. A bare
/// number is read as a real entry.
fn entries(v: &Value, rows: usize, cols: usize, what: &str) -> Result<CMatrix> {
    let list = array(v, what)?;
    if list.len() != rows * cols {
        return Err(parse_err(format!("{what}: expected {} entries, found {}", rows * cols, list.len())));
    }
    let data = list
        .iter()
        .map(|e| match e {
            Value::Number(_) => Ok(Complex64::new(number(e, what)?, 0.0)),
            Value::Array(pair) if pair.len() == 2 => Ok(Complex64::new(number(&pair[0], what)?, number(&pair[1], what)?)),
            _ => Err(parse_err(format!("{what}: entries must be numbers or [re, im] pairs"))),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CMatrix::from_vec(rows, cols, data)?)
}

/// `{"dim": d, "entries": […]}`, `{"rows": r, "cols": c, "entries": […]}`
/// or `{"diag": […]}`.
pub fn parse_matrix(v: &Value, what: &str) -> Result<CMatrix> {
    let obj = object(v, what)?;
    if let Some(d) = obj.get("diag") {
        return Ok(CMatrix::diagonal(&numbers(d, what)?));
    }
    let (rows, cols) = match obj.get("dim") {
        Some(d) => {
            let d = uint(d, what)?;
            (d, d)
        }
        None => (uint(field(obj, "rows", what)?, what)?, uint(field(obj, "cols", what)?, what)?),
    };
    entries(field(obj, "entries", what)?, rows, cols, what)
}

pub fn parse_hermitian(v: &Value, what: &str) -> Result<HermitianMatrix> {
    Ok(HermitianMatrix::new(parse_matrix(v, what)?)?)
}

/// `{"bloch": [x, y, z]}`, `{"diag": […]}` or `{"dim": d, "entries": […]}`.
pub fn parse_state(v: &Value, what: &str) -> Result<DensityMatrix> {
    let obj = object(v, what)?;
    if let Some(b) = obj.get("bloch") {
        let r = numbers(b, what)?;
        let r: [f64; 3] = r.try_into().map_err(|_| parse_err(format!("{what}: bloch needs three components")))?;
        return Ok(DensityMatrix::from_bloch(r)?);
    }
    if let Some(d) = obj.get("diag") {
        return Ok(DensityMatrix::diagonal(&numbers(d, what)?)?);
    }
    Ok(DensityMatrix::new(parse_hermitian(v, what)?)?)
}

pub fn read_state(path: &Path) -> Result<DensityMatrix> {
    parse_state(&read_json(path)?, &path.display().to_string())
}

fn parse_fcs(obj: &Map<String, Value>) -> Result<Generator> {
    if let Some(r) = obj.get("random") {
        let r = object(r, "random")?;
        let get = |k: &str| uint(field(r, k, "random")?, k);
        let triple = GeneratingTriple::random(get("site_dim")?, get("aux_dim")?, get("kraus")?, get("seed")? as u64)?;
        return Ok(Generator::Fcs(triple));
    }
    let site = uint(field(obj, "site_dim", "fcs")?, "site_dim")?;
    let aux = uint(field(obj, "aux_dim", "fcs")?, "aux_dim")?;
    let rho_b = parse_state(field(obj, "rho_b", "fcs")?, "rho_b")?;
    let maps = array(field(obj, "maps", "fcs")?, "maps")?
        .iter()
        .map(|m| {
            let m = object(m, "map")?;
            let ops = array(field(m, "kraus", "map")?, "kraus")?
                .iter()
                .map(|k| match k.get("entries") {
                    Some(e) => entries(e, site * aux, aux, "kraus"),
                    None => Err(parse_err("kraus: missing \"entries\"")),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(KrausMap::new(aux, site * aux, ops)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Generator::Fcs(GeneratingTriple::new(site, aux, maps, rho_b)?))
}

fn parse_commutative(obj: &Map<String, Value>) -> Result<Generator> {
    let t = array(field(obj, "T", "commutative_fcs")?, "T")?
        .iter()
        .map(|row| numbers(row, "T"))
        .collect::<Result<Vec<_>>>()?;
    let p = numbers(field(obj, "p", "commutative_fcs")?, "p")?;
    let states = array(field(obj, "states", "commutative_fcs")?, "states")?
        .iter()
        .map(|row| array(row, "states")?.iter().map(|s| parse_state(s, "states")).collect())
        .collect::<Result<Vec<Vec<_>>>>()?;
    Ok(Generator::Fcs(commutative_fcs(&t, &states, &p)?.triple))
}

/// `{"type": "gibbs" | "fcs" | "commutative_fcs" | "product", …}`.
pub fn parse_family(v: &Value) -> Result<Generator> {
    let obj = object(v, "family")?;
    let kind = field(obj, "type", "family")?.as_str().ok_or_else(|| parse_err("family type must be a string"))?;
    match kind {
        "gibbs" => {
            let site = uint(field(obj, "site_dim", "gibbs")?, "site_dim")?;
            let beta = number(field(obj, "beta", "gibbs")?, "beta")?;
            let h = parse_hermitian(field(obj, "interaction", "gibbs")?, "interaction")?;
            let f = obj.get("field").map(|f| parse_hermitian(f, "field")).transpose()?;
            Ok(Generator::Gibbs(GibbsChain::new(site, h, beta, f)?))
        }
        "fcs" => parse_fcs(obj),
        "commutative_fcs" => parse_commutative(obj),
        "product" => Ok(Generator::Product(
            array(field(obj, "states", "product")?, "states")?
                .iter()
                .map(|s| parse_state(s, "product state"))
                .collect::<Result<Vec<_>>>()?,
        )),
        other => Err(parse_err(format!("unknown family type \"{other}\""))),
    }
}

pub fn read_family(path: &Path) -> Result<Generator> {
    parse_family(&read_json(path)?)
}

/// `{"alphabet": [symbols], "outputs": {symbol: state}}`.
pub fn parse_channel(v: &Value) -> Result<CQChannel> {
    let obj = object(v, "channel")?;
    let alphabet = array(field(obj, "alphabet", "channel")?, "alphabet")?
        .iter()
        .map(|s| s.as_str().map(str::to_owned).ok_or_else(|| parse_err("alphabet symbols must be strings")))
        .collect::<Result<Vec<_>>>()?;
    let outputs = object(field(obj, "outputs", "channel")?, "outputs")?;
    let states = alphabet
        .iter()
        .map(|a| parse_state(field(outputs, a, "outputs")?, a))
        .collect::<Result<Vec<_>>>()?;
    Ok(CQChannel::new(alphabet, states)?)
}

pub fn read_channel(path: &Path) -> Result<CQChannel> {
    parse_channel(&read_json(path)?)
}
