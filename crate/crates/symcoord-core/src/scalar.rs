//! Dual numeric backend: exact big rationals or binary floats.
//!
//! Every probability, cost, and value in the library is generic over
//! [`Scalar`]. The rational backend ([`Rat`]) reproduces paper constants
//! bit-for-bit; the float backend (`f64`) is for larger sweeps and Monte
//! Carlo runs. Belief memoization keys come from [`Scalar::memo_key`]:
//! exact in rational mode, quantized to a 1e-9 grid in float mode.

use alloc::string::ToString;
use core::fmt::{Debug, Display};
use core::hash::Hash;
use core::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Componentwise quantization step for float-mode belief keys.
pub const FLOAT_MEMO_QUANTUM: f64 = 1e-9;
/// Normalization tolerance for float-mode distributions.
pub const FLOAT_SUM_TOLERANCE: f64 = 1e-12;

pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + Send
    + Sync
    + 'static
{
    /// Hashable, totally ordered key used for belief memoization.
    type Key: Ord + Eq + Hash + Clone + Debug + Send + Sync;

    /// True when arithmetic is exact (rational backend).
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(n: i64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    /// Exact embedding of a finite float (dyadic rational in exact mode).
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    /// Parses `"1/4"`, `"0.25"`, or `"3"`; fractions and decimal strings
    /// are exact in rational mode.
    fn parse_text(text: &str) -> Result<Self>;
    fn memo_key(&self) -> Self::Key;
    fn is_zero(&self) -> bool;
    /// Equality up to the backend tolerance: exact in rational mode,
    /// `FLOAT_SUM_TOLERANCE` in float mode.
    fn close_to(&self, other: &Self) -> bool;
    fn abs(&self) -> Self;
    fn is_finite(&self) -> bool;
}

/// Exact rational scalar backed by `BigRational`, always in lowest terms.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rat(pub BigRational);

impl Rat {
    pub fn new(num: i64, den: i64) -> Self {
        Rat(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }
}

impl Debug for Rat {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Display for Rat {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Add for Rat {
    type Output = Rat;
    fn add(self, rhs: Rat) -> Rat {
        Rat(self.0 + rhs.0)
    }
}

impl Sub for Rat {
    type Output = Rat;
    fn sub(self, rhs: Rat) -> Rat {
        Rat(self.0 - rhs.0)
    }
}

impl Mul for Rat {
    type Output = Rat;
    fn mul(self, rhs: Rat) -> Rat {
        Rat(self.0 * rhs.0)
    }
}

impl Div for Rat {
    type Output = Rat;
    fn div(self, rhs: Rat) -> Rat {
        Rat(self.0 / rhs.0)
    }
}

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-self.0)
    }
}

impl AddAssign for Rat {
    fn add_assign(&mut self, rhs: Rat) {
        self.0 += rhs.0;
    }
}

impl Scalar for Rat {
    type Key = Rat;
    const EXACT: bool = true;

    fn zero() -> Self {
        Rat(BigRational::zero())
    }

    fn one() -> Self {
        Rat(BigRational::one())
    }

    fn from_int(n: i64) -> Self {
        Rat(BigRational::from_integer(BigInt::from(n)))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Rat::new(num, den)
    }

    fn from_f64(x: f64) -> Self {
        Rat(BigRational::from_f64(x).expect("finite float"))
    }

    fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    fn parse_text(text: &str) -> Result<Self> {
        parse_rational(text).map(Rat).ok_or_else(|| Error::BadScalar {
            text: text.to_string(),
        })
    }

    fn memo_key(&self) -> Rat {
        self.clone()
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    fn close_to(&self, other: &Self) -> bool {
        self == other
    }

    fn abs(&self) -> Self {
        Rat(self.0.abs())
    }

    fn is_finite(&self) -> bool {
        true
    }
}

impl Scalar for f64 {
    type Key = i64;
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }

    fn one() -> Self {
        1.0
    }

    fn from_int(n: i64) -> Self {
        n as f64
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn parse_text(text: &str) -> Result<Self> {
        let text = text.trim();
        if let Some((num, den)) = text.split_once('/') {
            let n: f64 = num
                .trim()
                .parse()
                .map_err(|_| Error::BadScalar { text: text.into() })?;
            let d: f64 = den
                .trim()
                .parse()
                .map_err(|_| Error::BadScalar { text: text.into() })?;
            if d == 0.0 {
                return Err(Error::BadScalar { text: text.into() });
            }
            Ok(n / d)
        } else {
            text.parse()
                .map_err(|_| Error::BadScalar { text: text.into() })
        }
    }

    fn memo_key(&self) -> i64 {
        round_f64(self / FLOAT_MEMO_QUANTUM) as i64
    }

    fn is_zero(&self) -> bool {
        *self == 0.0
    }

    fn close_to(&self, other: &Self) -> bool {
        (self - other).abs() <= FLOAT_SUM_TOLERANCE
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

#[cfg(feature = "std")]
fn round_f64(x: f64) -> f64 {
    x.round()
}

#[cfg(not(feature = "std"))]
fn round_f64(x: f64) -> f64 {
    libm::round(x)
}

#[cfg(feature = "std")]
pub(crate) fn sqrt_f64(x: f64) -> f64 {
    x.sqrt()
}

#[cfg(not(feature = "std"))]
pub(crate) fn sqrt_f64(x: f64) -> f64 {
    libm::sqrt(x)
}

/// Parses `-?a/b`, a decimal string, or a plain integer into an exact
/// rational. Decimal strings are read base-10 (`"0.2"` becomes 1/5, not
/// the nearest binary float).
fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    if let Some((num, den)) = text.split_once('/') {
        let n: BigInt = num.trim().parse().ok()?;
        let d: BigInt = den.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    if let Some((int_part, frac_part)) = text.split_once('.') {
        let negative = int_part.trim_start().starts_with('-');
        let int_digits = if int_part.is_empty() || int_part == "-" {
            BigInt::zero()
        } else {
            int_part.parse().ok()?
        };
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let frac_digits: BigInt = frac_part.parse().ok()?;
        let scale = num_traits::pow(BigInt::from(10), frac_part.len());
        let frac = BigRational::new(frac_digits, scale);
        let whole = BigRational::from_integer(int_digits);
        return Some(if negative { whole - frac } else { whole + frac });
    }
    let n: BigInt = text.parse().ok()?;
    Some(BigRational::from_integer(n))
}
