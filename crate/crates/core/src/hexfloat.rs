//! Exact textual form for `f64` (C99 `%a` style), used for every number the
//! crate writes to disk.

use std::fmt::Write as _;

/// Format `x` as a hexadecimal float, e.g. `0x1.8p+1` for `3.0`.
pub fn format(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    if exp_bits == 0 && frac == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, exp) = if exp_bits == 0 { (0, -1022) } else { (1, exp_bits - 1023) };
    let mut digits = format!("{frac:013x}");
    while digits.ends_with('0') {
        digits.pop();
    }
    let mut out = String::with_capacity(24);
    let _ = write!(out, "{sign}0x{lead}");
    if !digits.is_empty() {
        out.push('.');
        out.push_str(&digits);
    }
    let _ = write!(out, "p{}{}", if exp >= 0 { "+" } else { "-" }, exp.abs());
    out
}

/// Parse the output of [`format()`]. Also accepts any hex float whose mantissa
/// fits in 53 bits.
pub fn parse(s: &str) -> Result<f64, String> {
    let t = s.trim();
    match t {
        "nan" => return Ok(f64::NAN),
        "inf" | "+inf" => return Ok(f64::INFINITY),
        "-inf" => return Ok(f64::NEG_INFINITY),
        _ => {}
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let body = body
        .strip_prefix("0x")
        .or_else(|| body.strip_prefix("0X"))
        .ok_or_else(|| format!("not a hex float: {s:?}"))?;
    let (mant, exp) = body
        .split_once(['p', 'P'])
        .ok_or_else(|| format!("missing exponent: {s:?}"))?;
    let exp: i64 = exp.parse().map_err(|_| format!("bad exponent: {s:?}"))?;
    let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(format!("empty mantissa: {s:?}"));
    }
    let mut m: u64 = 0;
    for c in int_part.chars().chain(frac_part.chars()) {
        let v = c.to_digit(16).ok_or_else(|| format!("bad digit in {s:?}"))? as u64;
        m = m
            .checked_mul(16)
            .and_then(|m| m.checked_add(v))
            .ok_or_else(|| format!("mantissa too long: {s:?}"))?;
    }
    if m > (1u64 << 53) {
        return Err(format!("mantissa exceeds 53 bits: {s:?}"));
    }
    let mut e = exp - 4 * frac_part.len() as i64;
    let mut v = m as f64;
    while e != 0 && v != 0.0 {
        let step = e.clamp(-1000, 1000);
        v *= 2f64.powi(step as i32);
        e -= step;
    }
    Ok(if neg { -v } else { v })
}

/// `#[serde(with = "hexfloat::serde_f64")]`
pub mod serde_f64 {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format(*x))
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    pub(crate) enum Repr {
        Text(String),
        Number(f64),
    }

    impl Repr {
        pub(crate) fn into_f64<E: de::Error>(self) -> Result<f64, E> {
            match self {
                Repr::Text(t) => super::parse(&t).map_err(E::custom),
                Repr::Number(x) => Ok(x),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Repr::deserialize(d)?.into_f64()
    }
}

/// `#[serde(with = "hexfloat::serde_vec")]`
pub mod serde_vec {
    use super::serde_f64::Repr;
    use serde::{ser::SerializeSeq, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&super::format(*x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Repr>::deserialize(d)?
            .into_iter()
            .map(Repr::into_f64)
            .collect()
    }
}

/// `#[serde(with = "hexfloat::serde_opt")]`
pub mod serde_opt {
    use super::serde_f64::Repr;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => s.serialize_some(&super::format(*v)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<Repr>::deserialize(d)?
            .map(Repr::into_f64)
            .transpose()
    }
}
