//! Exact rational numbers for weights, costs and marks.
//!
//! In documents a rational is written as an integer, a decimal (`0.5`) or a
//! fraction string (`"1/2"`).

use num_traits::{FromPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serializer};

pub type Rational = num_rational::Ratio<i64>;

/// Parse `3`, `-2`, `0.25` or `1/3`.
pub fn parse(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: i64 = n.trim().parse().ok()?;
        let d: i64 = d.trim().parse().ok()?;
        return (d != 0).then(|| Rational::new(n, d));
    }
    if let Ok(n) = text.parse::<i64>() {
        return Some(Rational::from_integer(n));
    }
    let (int, frac) = text.split_once('.')?;
    if frac.is_empty() || frac.len() > 12 || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let neg = int.starts_with('-');
    let whole: i64 = if int.is_empty() || int == "-" { 0 } else { int.parse().ok()? };
    let den = 10i64.checked_pow(frac.len() as u32)?;
    let f: i64 = frac.parse().ok()?;
    let f = if neg { -f } else { f };
    Some(Rational::from_integer(whole) + Rational::new(f, den))
}

pub fn to_string(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Serde adapter: written as a string, read from a string or a number.
pub mod serde_str {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&to_string(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Float(f64),
            Text(String),
        }
        let bad = || serde::de::Error::custom("expected a rational such as 2, 0.5 or \"1/3\"");
        match Raw::deserialize(d)? {
            Raw::Int(i) => Ok(Rational::from_integer(i)),
            Raw::Float(f) => parse(&f.to_string())
                .or_else(|| Rational::from_f64(f).filter(|r| !r.is_zero() || f == 0.0))
                .ok_or_else(bad),
            Raw::Text(t) => parse(&t).ok_or_else(bad),
        }
    }
}

/// Serde adapter for optional rationals.
pub mod serde_opt {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&to_string(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "super::serde_str")] Rational);
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_common_forms() {
        assert_eq!(parse("3"), Some(Rational::from_integer(3)));
        assert_eq!(parse("0.5"), Some(Rational::new(1, 2)));
        assert_eq!(parse("-1.25"), Some(Rational::new(-5, 4)));
        assert_eq!(parse("2/6"), Some(Rational::new(1, 3)));
        assert_eq!(parse("1/0"), None);
        assert_eq!(parse("x"), None);
    }

    #[test]
    fn formats_round_trip() {
        for r in [Rational::new(7, 3), Rational::from_integer(-4), Rational::new(1, 2)] {
            assert_eq!(parse(&to_string(&r)), Some(r));
        }
    }
}
