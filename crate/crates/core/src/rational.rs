//! Exact rational arithmetic for supports, bounds, and thresholds.
//!
//! Support comparisons in this crate never go through floating point:
//! thresholds like 0.5 sit exactly on representable boundaries, and the
//! synthesis math is required to be exact when a pattern is reported in
//! every segment. `Rational` wraps an arbitrary-precision ratio; JSON
//! carries the exact numerator/denominator next to a decimal rendering.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Number of fractional digits kept in the decimal rendering of a rational.
/// The numerator/denominator fields stay exact; the decimal is display only.
const DECIMAL_DIGITS: usize = 12;

/// An exact rational number.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    /// Builds `num / den`. Panics if `den` is zero.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "rational denominator must be non-zero");
        Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// Builds `num / den` from unsigned parts. Panics if `den` is zero.
    pub fn ratio(num: u64, den: u64) -> Self {
        assert!(den != 0, "rational denominator must be non-zero");
        Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_int(value: u64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(value)))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    /// Lossy conversion, for human-facing summaries only.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Decimal rendering truncated to 12 fractional digits.
    /// Exact when the expansion terminates within that budget.
    pub fn to_decimal_string(&self) -> String {
        let negative = self.0.is_negative();
        let num = self.0.numer().abs();
        let den = self.0.denom().clone();
        let (int_part, mut rem) = (num.clone() / &den, num % &den);
        let mut out = String::new();
        if negative && (!int_part.is_zero() || !rem.is_zero()) {
            out.push('-');
        }
        out.push_str(&int_part.to_string());
        if rem.is_zero() {
            return out;
        }
        out.push('.');
        let ten = BigInt::from(10);
        for _ in 0..DECIMAL_DIGITS {
            rem *= &ten;
            let digit = &rem / &den;
            rem %= &den;
            out.push(char::from(b'0' + digit.to_u8().unwrap_or(0)));
            if rem.is_zero() {
                break;
            }
        }
        out
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string())
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl From<BigRational> for Rational {
    fn from(value: BigRational) -> Self {
        Rational(value)
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((self.0).$method(rhs.0))
            }
        }
        impl $trait for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
        impl $trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational((self.0).$method(&rhs.0))
            }
        }
    };
}

impl_binop!(Add, add);
impl_binop!(Sub, sub);
impl_binop!(Mul, mul);
impl_binop!(Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl std::iter::Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

/// Parses either a decimal literal ("0.35") or a fraction ("7/20").
impl FromStr for Rational {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err("empty rational literal".into());
        }
        if let Some((num, den)) = s.split_once('/') {
            let num: BigInt = num
                .trim()
                .parse()
                .map_err(|_| format!("invalid numerator in '{s}'"))?;
            let den: BigInt = den
                .trim()
                .parse()
                .map_err(|_| format!("invalid denominator in '{s}'"))?;
            if den.is_zero() {
                return Err(format!("zero denominator in '{s}'"));
            }
            return Ok(Rational(BigRational::new(num, den)));
        }
        let (signless, negative) = match s.strip_prefix('-') {
            Some(rest) => (rest, true),
            None => (s.strip_prefix('+').unwrap_or(s), false),
        };
        let (int_digits, frac_text) = match signless.split_once('.') {
            Some((i, f)) => (i, f),
            None => (signless, ""),
        };
        if !int_digits.chars().all(|c| c.is_ascii_digit())
            || !frac_text.chars().all(|c| c.is_ascii_digit())
            || (int_digits.is_empty() && frac_text.is_empty())
        {
            return Err(format!("invalid rational literal '{s}'"));
        }
        let mut digits = String::with_capacity(int_digits.len() + frac_text.len());
        digits.push_str(if int_digits.is_empty() {
            "0"
        } else {
            int_digits
        });
        digits.push_str(frac_text);
        let mut num: BigInt = digits
            .parse()
            .map_err(|_| format!("invalid rational literal '{s}'"))?;
        if negative {
            num = -num;
        }
        let den = BigInt::from(10u32).pow(frac_text.len() as u32);
        Ok(Rational(BigRational::new(num, den)))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("Rational", 3)?;
        st.serialize_field("num", &self.0.numer().to_string())?;
        st.serialize_field("den", &self.0.denom().to_string())?;
        st.serialize_field("decimal", &self.to_decimal_string())?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            num: String,
            den: String,
            #[serde(default)]
            #[allow(dead_code)]
            decimal: Option<String>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let num: BigInt = raw
            .num
            .parse()
            .map_err(|_| de::Error::custom("invalid rational numerator"))?;
        let den: BigInt = raw
            .den
            .parse()
            .map_err(|_| de::Error::custom("invalid rational denominator"))?;
        if den.is_zero() {
            return Err(de::Error::custom("zero rational denominator"));
        }
        Ok(Rational(BigRational::new(num, den)))
    }
}

/// Minimum support threshold, a rational in (0, 1].
///
/// Frequency tests reduce to integer comparisons (`count * den >= num * n`)
/// so e.g. `minsupport = 0.5` on an even segment size behaves exactly.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct SupportThreshold {
    num: u64,
    den: u64,
}

impl SupportThreshold {
    /// Builds `num / den` reduced to lowest terms. Errors unless 0 < num/den <= 1.
    pub fn new(num: u64, den: u64) -> Result<Self, String> {
        if den == 0 {
            return Err("minsupport denominator must be non-zero".into());
        }
        if num == 0 || num > den {
            return Err(format!("minsupport {num}/{den} outside (0, 1]"));
        }
        let g = gcd(num, den);
        Ok(SupportThreshold {
            num: num / g,
            den: den / g,
        })
    }

    pub fn numer(&self) -> u64 {
        self.num
    }

    pub fn denom(&self) -> u64 {
        self.den
    }

    /// Exact test of `count / n >= threshold`.
    pub fn is_frequent(&self, count: u64, n: u64) -> bool {
        (count as u128) * (self.den as u128) >= (self.num as u128) * (n as u128)
    }

    /// Smallest count that is frequent in a segment of `n` transactions.
    pub fn min_frequent_count(&self, n: u64) -> u64 {
        let num = self.num as u128 * n as u128;
        num.div_ceil(self.den as u128) as u64
    }

    /// Largest count strictly below threshold in a segment of `n` transactions.
    pub fn max_infrequent_count(&self, n: u64) -> u64 {
        self.min_frequent_count(n).saturating_sub(1)
    }

    pub fn to_rational(&self) -> Rational {
        Rational::ratio(self.num, self.den)
    }
}

impl fmt::Display for SupportThreshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_rational())
    }
}

impl FromStr for SupportThreshold {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let r: Rational = s.parse()?;
        if r <= Rational::zero() || r > Rational::one() {
            return Err(format!("minsupport '{s}' outside (0, 1]"));
        }
        let num = r
            .numer()
            .to_u64()
            .ok_or_else(|| format!("minsupport '{s}' numerator too large"))?;
        let den = r
            .denom()
            .to_u64()
            .ok_or_else(|| format!("minsupport '{s}' denominator too large"))?;
        SupportThreshold::new(num, den)
    }
}

impl PartialOrd for SupportThreshold {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SupportThreshold {
    fn cmp(&self, other: &Self) -> Ordering {
        let lhs = self.num as u128 * other.den as u128;
        let rhs = other.num as u128 * self.den as u128;
        lhs.cmp(&rhs)
    }
}

impl Serialize for SupportThreshold {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_rational().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SupportThreshold {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let r = Rational::deserialize(deserializer)?;
        let num = r
            .numer()
            .to_u64()
            .ok_or_else(|| de::Error::custom("minsupport numerator out of range"))?;
        let den = r
            .denom()
            .to_u64()
            .ok_or_else(|| de::Error::custom("minsupport denominator out of range"))?;
        SupportThreshold::new(num, den).map_err(de::Error::custom)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimal_and_fraction_forms() {
        assert_eq!("0.5".parse::<Rational>().unwrap(), Rational::new(1, 2));
        assert_eq!("1/2".parse::<Rational>().unwrap(), Rational::new(1, 2));
        assert_eq!("0.35".parse::<Rational>().unwrap(), Rational::new(7, 20));
        assert_eq!("-0.25".parse::<Rational>().unwrap(), Rational::new(-1, 4));
        assert_eq!("3".parse::<Rational>().unwrap(), Rational::new(3, 1));
        assert_eq!("+0.6".parse::<Rational>().unwrap(), Rational::new(3, 5));
        assert!("x".parse::<Rational>().is_err());
        assert!("1/0".parse::<Rational>().is_err());
        assert!("+-5".parse::<Rational>().is_err());
        assert!("--5".parse::<Rational>().is_err());
        assert!(".".parse::<Rational>().is_err());
    }

    #[test]
    fn decimal_rendering_truncates_repeating_expansions() {
        assert_eq!(Rational::new(1, 2).to_decimal_string(), "0.5");
        assert_eq!(Rational::new(7, 13).to_decimal_string(), "0.538461538461");
        assert_eq!(Rational::new(-3, 8).to_decimal_string(), "-0.375");
        assert_eq!(Rational::new(4, 2).to_decimal_string(), "2");
        assert_eq!(Rational::zero().to_decimal_string(), "0");
    }

    #[test]
    fn threshold_boundary_is_exact() {
        let t = SupportThreshold::new(1, 2).unwrap();
        assert!(t.is_frequent(2, 4));
        assert!(!t.is_frequent(1, 4));
        assert!(t.is_frequent(3, 5));
        assert!(!t.is_frequent(2, 5));
        assert_eq!(t.min_frequent_count(10), 5);
        assert_eq!(t.max_infrequent_count(10), 4);
        assert_eq!(t.min_frequent_count(5), 3);
        assert_eq!(t.max_infrequent_count(5), 2);
    }

    #[test]
    fn threshold_range_is_enforced() {
        assert!(SupportThreshold::new(0, 2).is_err());
        assert!(SupportThreshold::new(3, 2).is_err());
        assert!("1.5".parse::<SupportThreshold>().is_err());
        assert!("0".parse::<SupportThreshold>().is_err());
        assert!("1".parse::<SupportThreshold>().is_ok());
    }

    #[test]
    fn rational_json_round_trips() {
        let r = Rational::new(7, 13);
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(json, r#"{"num":"7","den":"13","decimal":"0.538461538461"}"#);
        let back: Rational = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
