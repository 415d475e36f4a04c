//! Deterministic number formatting shared by every text, CSV and JSON emitter.
//!
//! Floats are written with 17 significant digits in scientific notation
//! (`d.dddddddddddddddde±x`), which round-trips every finite `f64` exactly and does not
//! depend on locale. Non-finite values are written as the strings `inf`,
//! `-inf` and `nan`.

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use std::str::FromStr;

/// Formats `x` with 17 significant digits, e.g. `9.4399999999999995e-1`, `6.5290000000000000e+3`.
pub fn sig17(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        let s = format!("{:.16e}", x);
        match s.split_once('e') {
            Some((mantissa, exp)) if !exp.starts_with('-') => format!("{mantissa}e+{exp}"),
            _ => s,
        }
    }
}

/// Parses the output of [`sig17`] (or any plain decimal literal).
pub fn parse_sig17(s: &str) -> Option<f64> {
    match s {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => f64::from_str(s).ok().filter(|v| v.is_finite()),
    }
}

/// `serialize_with` helper emitting a raw JSON number with 17 significant digits.
pub fn ser_f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        let n = serde_json::Number::from_str(&sig17(*x)).map_err(serde::ser::Error::custom)?;
        n.serialize(s)
    } else {
        s.serialize_str(&sig17(*x))
    }
}

/// `deserialize_with` counterpart of [`ser_f64`].
pub fn de_f64<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    match serde_json::Value::deserialize(d)? {
        serde_json::Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| de::Error::custom(format!("number {n} is not an f64"))),
        serde_json::Value::String(t) => parse_sig17(&t)
            .ok_or_else(|| de::Error::custom(format!("invalid number literal {t:?}"))),
        other => Err(de::Error::custom(format!("expected a number, got {other}"))),
    }
}

pub fn ser_opt_f64<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => ser_f64(v, s),
        None => s.serialize_none(),
    }
}

pub fn de_opt_f64<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
    #[derive(Deserialize)]
    struct Wrap(#[serde(deserialize_with = "de_f64")] f64);
    Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
}

/// Fixed-point formatting for human-facing text tables.
pub fn fixed(x: f64, decimals: usize) -> String {
    if x.is_finite() {
        // Avoid "-0.000".
        let s = format!("{:.*}", decimals, x);
        if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
            s.trim_start_matches('-').to_string()
        } else {
            s
        }
    } else {
        sig17(x)
    }
}
