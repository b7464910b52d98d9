//! Number formatting and small CSV/JSON helpers. All numbers are written
//! with 12 significant digits.

use serde_json::Value;

pub const SIG_DIGITS: usize = 12;

/// Shortest decimal form of `x` rounded to 12 significant digits.
/// Non-finite values print as `inf`, `-inf` and `nan`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let rounded: f64 = sci.parse().expect("round trip");
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim(format!("{rounded:.decimals$}"))
    } else {
        format!("{}e{exp}", trim(mantissa.to_string()))
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// JSON value for `x`: a number rounded to 12 significant digits, or the
/// strings `"inf"`, `"-inf"`, `"nan"`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        let r: f64 = fmt_num(x).parse().expect("formatted number parses");
        serde_json::Number::from_f64(r).map(Value::Number).unwrap_or(Value::Null)
    } else {
        Value::String(fmt_num(x))
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

/// Accumulates CSV text; fields never contain separators so no quoting.
#[derive(Debug, Default)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut c = Csv::default();
        c.line(header.iter().map(|s| s.to_string()));
        c
    }

    /// `# …` metadata line; only valid before the header in practice.
    pub fn comment(&mut self, s: &str) {
        self.text.push_str("# ");
        self.text.push_str(s);
        self.text.push('\n');
    }

    pub fn line(&mut self, fields: impl IntoIterator<Item = String>) {
        let fields: Vec<String> = fields.into_iter().collect();
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn row(&mut self, xs: &[f64]) {
        self.line(xs.iter().map(|&x| fmt_num(x)));
    }

    pub fn into_string(self) -> String {
        self.text
    }
}
