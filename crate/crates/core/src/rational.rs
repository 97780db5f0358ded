//! Exact frequencies `theta = p/q` on the unit interval.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A reduced fraction `p/q` with `0 <= p <= q` and `q >= 1`.
///
/// Ordering and equality are exact; comparisons go through integer
/// cross-multiplication, never through floating point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rational {
    p: i64,
    q: i64,
}

pub(crate) fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Rational {
    pub const ZERO: Rational = Rational { p: 0, q: 1 };
    pub const ONE: Rational = Rational { p: 1, q: 1 };

    /// Builds `p/q`, rejecting anything that is not already in lowest terms
    /// or lies outside `[0, 1]`.
    pub fn new(p: i64, q: i64) -> Result<Self> {
        if q < 1 {
            return Err(Error::InvalidRational { p, q, reason: "denominator must be at least 1" });
        }
        if p < 0 || p > q {
            return Err(Error::InvalidRational { p, q, reason: "value must lie in [0, 1]" });
        }
        if gcd(p, q) != 1 {
            return Err(Error::InvalidRational { p, q, reason: "fraction is not reduced" });
        }
        Ok(Rational { p, q })
    }

    /// Reduces `p/q` to lowest terms before validating the range.
    pub fn reduced(p: i64, q: i64) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidRational { p, q, reason: "denominator must be at least 1" });
        }
        let (p, q) = if q < 0 { (-p, -q) } else { (p, q) };
        let g = gcd(p, q).max(1);
        Rational::new(p / g, q / g)
    }

    pub fn numer(self) -> i64 {
        self.p
    }

    pub fn denom(self) -> i64 {
        self.q
    }

    pub fn to_f64(self) -> f64 {
        self.p as f64 / self.q as f64
    }

    /// Mediant `(p1 + p2) / (q1 + q2)`, reduced.
    pub fn mediant(self, other: Rational) -> Rational {
        Rational::reduced(self.p + other.p, self.q + other.q).expect("mediant of two points in [0, 1] stays in [0, 1]")
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.p as i128 * other.q as i128).cmp(&(other.p as i128 * self.q as i128))
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl FromStr for Rational {
    type Err = Error;

    /// Accepts `p/q`, a bare integer, or a finite decimal such as `0.2857`
    /// (converted exactly, then reduced).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidArgument(format!("cannot parse {s:?} as a rational"));
        if let Some((num, den)) = s.split_once('/') {
            let p: i64 = num.trim().parse().map_err(|_| bad())?;
            let q: i64 = den.trim().parse().map_err(|_| bad())?;
            return Rational::reduced(p, q);
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.len() > 15 || !frac.chars().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            let int: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
            let scale = 10i64.pow(frac.len() as u32);
            let frac: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
            return Rational::reduced(int * scale + frac, scale);
        }
        let p: i64 = s.parse().map_err(|_| bad())?;
        Rational::reduced(p, 1)
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
