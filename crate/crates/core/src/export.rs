//! Deterministic JSON and CSV views of results.
//!
//! JSON numbers are rounded to 15 significant digits and object keys are
//! emitted in sorted order, so identical inputs give byte-identical output.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::euler_core::VorticityField;
use crate::matrixop::{SpectralTag, TaggedEigenvalue, TruncatedOperator};
use crate::subsystem::Trajectory;

pub const SIG_DIGITS: usize = 15;

/// Complex number as `{"re": .., "im": ..}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cx {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for Cx {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<Cx> for Complex64 {
    fn from(z: Cx) -> Self {
        Complex64::new(z.re, z.im)
    }
}

pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(x) = n.as_f64() {
                    if let Some(r) = serde_json::Number::from_f64(round_sig(x)) {
                        *n = r;
                    }
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(m) => m.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with sorted keys and floats rounded to [`SIG_DIGITS`].
pub fn to_json<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

fn num(x: f64) -> String {
    format!("{}", round_sig(x))
}

/// Columns `t,n,re,im`, one row per sample and chain index.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,n,re,im\n");
    for (t, st) in traj.times.iter().zip(&traj.states) {
        for (n, v) in st.indices().zip(&st.values) {
            let _ = writeln!(out, "{},{},{},{}", num(*t), n, num(v.re), num(v.im));
        }
    }
    out
}

/// Columns `re,im,kind`.
pub fn spectrum_csv(eigs: &[TaggedEigenvalue]) -> String {
    let mut out = String::from("re,im,kind\n");
    for e in eigs {
        let kind = match e.tag {
            SpectralTag::Isolated => "isolated",
            SpectralTag::Band => "band",
        };
        let _ = writeln!(out, "{},{},{}", num(e.value.re), num(e.value.im), kind);
    }
    out
}

/// Nonzero entries as `row,col,re,im` (0-based).
pub fn triplets_csv(op: &TruncatedOperator) -> String {
    let mut out = String::from("row,col,re,im\n");
    for (r, c, v) in op.triplets() {
        let _ = writeln!(out, "{},{},{},{}", r, c, num(v.re), num(v.im));
    }
    out
}

/// Columns `k1,k2,re,im` over all modes, negatives included.
pub fn field_csv(field: &VorticityField) -> String {
    let mut out = String::from("k1,k2,re,im\n");
    for (k, v) in field.modes.modes().iter().zip(field.full()) {
        let _ = writeln!(out, "{},{},{},{}", k.k1, k.k2, num(v.re), num(v.im));
    }
    out
}

/// Columns `re,im` for a plain list of complex values.
pub fn complex_csv(values: &[Complex64]) -> String {
    let mut out = String::from("re,im\n");
    for v in values {
        let _ = writeln!(out, "{},{}", num(v.re), num(v.im));
    }
    out
}
