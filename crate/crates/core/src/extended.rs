//! Extended-real values: finite `f64` or `+inf`, written as the literal `inf`.
//!
//! Usable as `#[serde(with = "crate::extended")]`.

use serde::de::{self, Visitor};
use serde::{Deserializer, Serializer};
use std::fmt;

pub const INF_LITERAL: &str = "inf";

/// 17 significant digits, `inf` for positive infinity.
pub fn format(v: f64) -> String {
    if v == f64::INFINITY {
        INF_LITERAL.to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn parse(s: &str) -> Option<f64> {
    let s = s.trim();
    if s == INF_LITERAL {
        return Some(f64::INFINITY);
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if *v == f64::INFINITY {
        s.serialize_str(INF_LITERAL)
    } else {
        Err(serde::ser::Error::custom(format!("non-extended value {v}")))
    }
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    struct V;
    impl<'de> Visitor<'de> for V {
        type Value = f64;
        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a finite number or \"inf\"")
        }
        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }
        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }
        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }
        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            parse(v).ok_or_else(|| E::custom(format!("bad extended value '{v}'")))
        }
    }
    d.deserialize_any(V)
}
