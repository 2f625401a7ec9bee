//! Exact rational parameters (`epsilon`, `phi`).
//!
//! Thresholds such as `phi * N` are compared with integer arithmetic so a
//! report never depends on floating-point rounding.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A non-negative rational number such as `0.05` or `1/3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fraction(Ratio<u64>);

impl Fraction {
    pub fn new(numer: u64, denom: u64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::Parse {
                what: "fraction",
                input: format!("{numer}/0"),
            });
        }
        Ok(Fraction(Ratio::new(numer, denom)))
    }

    pub fn numer(&self) -> u64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> u64 {
        *self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.numer() == 0
    }

    /// True when `0 < self < 1`.
    pub fn is_proper(&self) -> bool {
        self.numer() > 0 && self.numer() < self.denom()
    }

    pub fn to_f64(&self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    /// `ceil(self * n)`, the smallest integer `t` with `t >= self * n`.
    pub fn ceil_mul(&self, n: u64) -> u64 {
        let num = self.numer() as u128 * n as u128;
        let den = self.denom() as u128;
        num.div_ceil(den) as u64
    }

    /// `ceil(1 / self)`; the counter budget for an error target.
    pub fn ceil_recip(&self) -> u64 {
        self.denom().div_ceil(self.numer())
    }

    /// Exact test of `value >= self * n`.
    pub fn exceeded_by(&self, value: u64, n: u64) -> bool {
        value as u128 * self.denom() as u128 >= self.numer() as u128 * n as u128
    }

    /// Exact test of `value <= self * n`.
    pub fn bounds(&self, value: u64, n: u64) -> bool {
        value as u128 * self.denom() as u128 <= self.numer() as u128 * n as u128
    }

    pub fn checked_mul_int(&self, k: u64) -> Option<Self> {
        self.numer()
            .checked_mul(k)
            .map(|n| Fraction(Ratio::new(n, self.denom())))
    }

    pub fn checked_div_int(&self, k: u64) -> Option<Self> {
        if k == 0 {
            return None;
        }
        self.denom()
            .checked_mul(k)
            .map(|d| Fraction(Ratio::new(self.numer(), d)))
    }
}

impl FromStr for Fraction {
    type Err = Error;

    /// Accepts `a/b`, plain decimals (`0.05`) and scientific notation (`1e-4`).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse {
            what: "fraction",
            input: s.to_string(),
        };
        let t = s.trim();
        if let Some((n, d)) = t.split_once('/') {
            let n: u64 = n.trim().parse().map_err(|_| bad())?;
            let d: u64 = d.trim().parse().map_err(|_| bad())?;
            return Fraction::new(n, d).map_err(|_| bad());
        }
        let (mantissa, exp) = match t.split_once(['e', 'E']) {
            Some((m, e)) => (m, e.parse::<i32>().map_err(|_| bad())?),
            None => (t, 0),
        };
        let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        let digits: String = format!("{int_part}{frac_part}");
        if !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let mut numer: u128 = digits.parse().map_err(|_| bad())?;
        let scale = exp - frac_part.len() as i32;
        let mut denom: u128 = 1;
        if scale >= 0 {
            numer = numer
                .checked_mul(10u128.checked_pow(scale as u32).ok_or_else(bad)?)
                .ok_or_else(bad)?;
        } else {
            denom = 10u128.checked_pow((-scale) as u32).ok_or_else(bad)?;
        }
        let r = Ratio::new(numer, denom);
        let (n, d) = (
            u64::try_from(*r.numer()).map_err(|_| bad())?,
            u64::try_from(*r.denom()).map_err(|_| bad())?,
        );
        Fraction::new(n, d)
    }
}

impl fmt::Display for Fraction {
    /// Decimal when the denominator divides a power of ten, `a/b` otherwise.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, d) = (self.numer() as u128, self.denom() as u128);
        let mut scale = 0u32;
        let mut pow = 1u128;
        while scale <= 30 {
            if pow.is_multiple_of(d) {
                let scaled = n * (pow / d);
                let int = scaled / pow;
                let frac = scaled % pow;
                return if scale == 0 {
                    write!(f, "{int}")
                } else {
                    write!(f, "{int}.{frac:0width$}", width = scale as usize)
                };
            }
            scale += 1;
            pow *= 10;
        }
        write!(f, "{n}/{d}")
    }
}

impl Serialize for Fraction {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(s: &str) -> Fraction {
        s.parse().unwrap()
    }

    #[test]
    fn parses_decimal_ratio_and_scientific() {
        assert_eq!(f("0.05"), Fraction::new(1, 20).unwrap());
        assert_eq!(f("1/3"), Fraction::new(1, 3).unwrap());
        assert_eq!(f("1e-4"), Fraction::new(1, 10_000).unwrap());
        assert_eq!(f("2.5E-1"), Fraction::new(1, 4).unwrap());
        assert_eq!(f(".5"), Fraction::new(1, 2).unwrap());
        assert!("abc".parse::<Fraction>().is_err());
        assert!("1/0".parse::<Fraction>().is_err());
        assert!("-0.1".parse::<Fraction>().is_err());
    }

    #[test]
    fn display_round_trips() {
        for s in ["0.05", "0.0001", "1/3", "2", "0.25"] {
            assert_eq!(f(s).to_string(), s);
            assert_eq!(f(&f(s).to_string()), f(s));
        }
    }

    #[test]
    fn threshold_arithmetic_is_exact() {
        // 0.1 * 30 = 3 exactly; a float product would give 3.0000000000000004.
        assert_eq!(f("0.1").ceil_mul(30), 3);
        assert_eq!(f("0.1").ceil_mul(31), 4);
        assert!(f("0.1").exceeded_by(3, 30));
        assert!(!f("0.1").exceeded_by(2, 30));
        assert_eq!(f("0.01").ceil_recip(), 100);
        assert_eq!(f("0.3").ceil_recip(), 4);
    }
}
