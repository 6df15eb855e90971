//! Exact rational scalars and the few irrational quantities the reduction
//! bounds need (square roots, rational powers), handled through directed
//! rational enclosures rather than floating point.

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arbitrary-precision rational; always kept in canonical form.
pub type Rational = BigRational;

/// Denominator used when sampling rationals from an interval.
pub const SAMPLE_BITS: u32 = 20;

pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn pow2(bits: u32) -> BigInt {
    BigInt::one() << bits as usize
}

/// Parses `"p/q"` or an integer literal. Decimals are rejected.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let bad = || Error::RationalLiteral(text.to_string());
    let s = text.trim();
    let parse_int = |part: &str| -> Result<BigInt> {
        let part = part.trim();
        let digits = part.strip_prefix(['-', '+']).unwrap_or(part);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        part.parse::<BigInt>().map_err(|_| bad())
    };
    match s.split_once('/') {
        Some((p, q)) => {
            let p = parse_int(p)?;
            let q = parse_int(q)?;
            if q.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(p, q))
        }
        None => Ok(Rational::from_integer(parse_int(s)?)),
    }
}

/// Canonical literal: `"p"` for integers, `"p/q"` otherwise.
pub fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Decimal approximation for display only.
pub fn approx(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

pub fn pow_int(base: i64, exp: u32) -> BigInt {
    num_traits::pow(BigInt::from(base), exp as usize)
}

/// Largest multiple of 2^-bits that is <= q.
pub fn dyadic_floor(q: &Rational, bits: u32) -> Rational {
    let scale = pow2(bits);
    let scaled = (q * Rational::from_integer(scale.clone())).floor();
    Rational::new(scaled.to_integer(), scale)
}

/// Smallest multiple of 2^-bits that is >= q.
pub fn dyadic_ceil(q: &Rational, bits: u32) -> Rational {
    let scale = pow2(bits);
    let scaled = (q * Rational::from_integer(scale.clone())).ceil();
    Rational::new(scaled.to_integer(), scale)
}

/// A closed rational interval known to contain some real quantity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enclosure {
    pub lo: Rational,
    pub hi: Rational,
}

impl Enclosure {
    pub fn exact(q: Rational) -> Self {
        Enclosure {
            lo: q.clone(),
            hi: q,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / int(2)
    }

    pub fn add(&self, other: &Enclosure) -> Enclosure {
        Enclosure {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    pub fn neg(&self) -> Enclosure {
        Enclosure {
            lo: -&self.hi,
            hi: -&self.lo,
        }
    }

    pub fn sub(&self, other: &Enclosure) -> Enclosure {
        self.add(&other.neg())
    }

    pub fn add_rational(&self, q: &Rational) -> Enclosure {
        Enclosure {
            lo: &self.lo + q,
            hi: &self.hi + q,
        }
    }

    pub fn scale(&self, q: &Rational) -> Enclosure {
        let a = &self.lo * q;
        let b = &self.hi * q;
        if q.is_negative() {
            Enclosure { lo: b, hi: a }
        } else {
            Enclosure { lo: a, hi: b }
        }
    }

    /// Product of two enclosures of strictly positive quantities.
    pub fn mul_positive(&self, other: &Enclosure) -> Enclosure {
        debug_assert!(self.lo.is_positive() && other.lo.is_positive());
        Enclosure {
            lo: &self.lo * &other.lo,
            hi: &self.hi * &other.hi,
        }
    }

    /// Reciprocal of a strictly positive quantity.
    pub fn recip_positive(&self) -> Enclosure {
        debug_assert!(self.lo.is_positive());
        Enclosure {
            lo: self.hi.recip(),
            hi: self.lo.recip(),
        }
    }

    /// Sign of the enclosed quantity when it can be decided at this precision.
    pub fn sign(&self) -> Option<std::cmp::Ordering> {
        use std::cmp::Ordering::*;
        if self.lo.is_positive() {
            Some(Greater)
        } else if self.hi.is_negative() {
            Some(Less)
        } else if self.is_exact() {
            Some(Equal)
        } else {
            None
        }
    }
}

/// Enclosure of `sqrt(q)` of width at most 2^-bits (exact when q is a square).
pub fn sqrt_enclosure(q: &Rational, bits: u32) -> Enclosure {
    assert!(!q.is_negative(), "sqrt of a negative rational");
    // sqrt(p/d) = sqrt(p*d)/d
    let pd = q.numer() * q.denom();
    let d = q.denom().clone();
    let scaled = &pd << (2 * bits as usize);
    let root = scaled.sqrt();
    let denom = &d * pow2(bits);
    let lo = Rational::new(root.clone(), denom.clone());
    if &root * &root == scaled {
        return Enclosure::exact(lo);
    }
    let hi = Rational::new(root + BigInt::one(), denom);
    Enclosure { lo, hi }
}

/// Enclosure of `base^(exp)` for an integer base >= 1 and rational exponent,
/// exact whenever the power is rational.
pub fn pow_enclosure(base: u64, exp: &Rational, bits: u32) -> Enclosure {
    assert!(base >= 1, "pow_enclosure needs base >= 1");
    let p = exp.numer().clone();
    let q = exp
        .denom()
        .to_u32()
        .expect("exponent denominator must fit in u32");
    let p_abs = p
        .abs()
        .to_u32()
        .expect("exponent numerator must fit in u32");
    let radicand = num_traits::pow(BigInt::from(base), p_abs as usize);
    let positive = if q == 1 {
        Enclosure::exact(Rational::from_integer(radicand))
    } else {
        let scaled = &radicand << (q as usize * bits as usize);
        let root = scaled.nth_root(q);
        let denom = pow2(bits);
        let lo = Rational::new(root.clone(), denom.clone());
        if num_traits::pow(root.clone(), q as usize) == scaled {
            Enclosure::exact(lo)
        } else {
            let hi = Rational::new(root + BigInt::one(), denom);
            Enclosure { lo, hi }
        }
    };
    if p.sign() == Sign::Minus {
        positive.recip_positive()
    } else {
        positive
    }
}

/// Compares `t` with `a + b*sqrt(c)` exactly (b >= 0, c >= 0).
pub fn cmp_with_surd(
    t: &Rational,
    a: &Rational,
    b: &Rational,
    c: &Rational,
) -> std::cmp::Ordering {
    use std::cmp::Ordering::*;
    assert!(!b.is_negative() && !c.is_negative());
    // t ? a + b sqrt(c)  <=>  t - a ? b sqrt(c), right-hand side >= 0
    let lhs = t - a;
    if lhs.is_negative() {
        return if b.is_zero() || c.is_zero() {
            lhs.cmp(&Rational::zero())
        } else {
            Less
        };
    }
    let lhs_sq = &lhs * &lhs;
    let rhs_sq = b * b * c;
    lhs_sq.cmp(&rhs_sq)
}

/// Uniform draw `lo + (hi - lo) * j / 2^20`, rejecting excluded endpoints.
/// Returns `None` when the interval is empty under the given flags.
pub fn sample_in<R: Rng + ?Sized>(
    lo: &Rational,
    hi: &Rational,
    lo_closed: bool,
    hi_closed: bool,
    rng: &mut R,
) -> Option<Rational> {
    if lo > hi || (lo == hi && !(lo_closed && hi_closed)) {
        return None;
    }
    if lo == hi {
        return Some(lo.clone());
    }
    let steps: u64 = 1 << SAMPLE_BITS;
    let first = if lo_closed { 0 } else { 1 };
    let last = if hi_closed { steps } else { steps - 1 };
    let j = rng.gen_range(first..=last);
    let width = hi - lo;
    Some(lo + width * Rational::new(BigInt::from(j), BigInt::from(steps)))
}

/// Serde adapters writing rationals as canonical `"p/q"` strings.
pub mod serde_rational {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(
            v: &[Rational],
            s: S,
        ) -> std::result::Result<S::Ok, S::Error> {
            s.collect_seq(v.iter().map(format_rational))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> std::result::Result<Vec<Rational>, D::Error> {
            let raw = Vec::<String>::deserialize(d)?;
            raw.iter()
                .map(|t| parse_rational(t).map_err(serde::de::Error::custom))
                .collect()
        }
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(
            v: &Option<Rational>,
            s: S,
        ) -> std::result::Result<S::Ok, S::Error> {
            match v {
                Some(q) => s.serialize_some(&format_rational(q)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> std::result::Result<Option<Rational>, D::Error> {
            let raw = Option::<String>::deserialize(d)?;
            raw.map(|t| parse_rational(&t).map_err(serde::de::Error::custom))
                .transpose()
        }
    }
}

/// An exact value next to its decimal rendering, for reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tagged {
    #[serde(with = "serde_rational")]
    pub exact: Rational,
    pub approx: f64,
}

impl From<&Rational> for Tagged {
    fn from(q: &Rational) -> Self {
        Tagged {
            exact: q.clone(),
            approx: approx(q),
        }
    }
}

/// A rational enclosure of an irrational value, for reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaggedEnclosure {
    #[serde(with = "serde_rational")]
    pub lower: Rational,
    #[serde(with = "serde_rational")]
    pub upper: Rational,
    pub approx: f64,
}

impl From<&Enclosure> for TaggedEnclosure {
    fn from(e: &Enclosure) -> Self {
        TaggedEnclosure {
            lower: e.lo.clone(),
            upper: e.hi.clone(),
            approx: approx(&e.midpoint()),
        }
    }
}
