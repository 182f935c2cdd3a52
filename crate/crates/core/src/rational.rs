//! Exact rational helpers shared by every module.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn zero() -> Q {
    Q::zero()
}

pub fn one() -> Q {
    Q::one()
}

pub fn pow2(e: i64) -> Q {
    let two = qi(2);
    if e >= 0 {
        num_traits::pow(two, e as usize)
    } else {
        num_traits::pow(two, (-e) as usize).recip()
    }
}

/// Parses `"p/q"`, an integer, or a finite decimal such as `"0.125"` or `"-1.5e-3"`.
pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Malformed("empty number".into()));
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad(s))?;
        let d: BigInt = d.trim().parse().map_err(|_| bad(s))?;
        if d.is_zero() {
            return Err(Error::Malformed(format!("zero denominator in `{s}`")));
        }
        return Ok(Q::new(n, d));
    }
    parse_decimal(s)
}

fn parse_decimal(s: &str) -> Result<Q> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i64>().map_err(|_| bad(s))?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad(s));
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad(s));
    }
    let all: BigInt = format!("{int_part}{frac_part}0").parse().map_err(|_| bad(s))?;
    let scale = frac_part.len() as i64 + 1 - exp;
    let ten = Q::from_integer(BigInt::from(10));
    let factor =
        if scale >= 0 { num_traits::pow(ten, scale as usize).recip() } else { num_traits::pow(ten, (-scale) as usize) };
    let v = Q::from_integer(all) * factor;
    Ok(if neg { -v } else { v })
}

fn bad(s: &str) -> Error {
    Error::Malformed(format!("not a number: `{s}`"))
}

/// Canonical text form: `"p"` for integers, `"p/q"` otherwise.
pub fn fmt_q(v: &Q) -> String {
    if v.is_integer() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

pub fn to_f64(v: &Q) -> f64 {
    use num_traits::ToPrimitive;
    v.to_f64().unwrap_or(f64::NAN)
}

pub fn from_f64(x: f64) -> Result<Q> {
    Q::from_float(x).ok_or_else(|| Error::Malformed(format!("non-finite float {x}")))
}

/// Relative comparison used only in float mode.
pub fn close(a: &Q, b: &Q, rel: f64) -> bool {
    let (fa, fb) = (to_f64(a), to_f64(b));
    (fa - fb).abs() <= rel * fa.abs().max(fb.abs())
}

pub fn is_positive(v: &Q) -> bool {
    v.is_positive()
}

pub fn sum<'a>(it: impl IntoIterator<Item = &'a Q>) -> Q {
    it.into_iter().fold(Q::zero(), |acc, v| acc + v)
}

pub fn abs(v: &Q) -> Q {
    v.abs()
}

pub fn min_max<'a>(it: impl IntoIterator<Item = &'a Q>) -> Option<(Q, Q)> {
    let mut it = it.into_iter();
    let first = it.next()?.clone();
    Some(it.fold((first.clone(), first), |(lo, hi), v| {
        (if v < &lo { v.clone() } else { lo }, if v > &hi { v.clone() } else { hi })
    }))
}

pub mod serde_q {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_q(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        parse_q(&s).map_err(serde::de::Error::custom)
    }
}

pub mod serde_q_vec {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(fmt_q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Q>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter().map(|s| parse_q(s).map_err(serde::de::Error::custom)).collect()
    }
}
