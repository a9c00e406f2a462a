use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::TangleError;

/// An exact rational number extended by a single unsigned infinity.
///
/// Values are kept in lowest terms with a non-negative denominator. Infinity
/// is stored as `1/0` and zero as `0/1`, so structural equality is value
/// equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExtendedRational {
    num: BigInt,
    den: BigInt,
}

impl ExtendedRational {
    pub fn new(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Result<Self, TangleError> {
        let mut num = num.into();
        let mut den = den.into();
        if num.is_zero() && den.is_zero() {
            return Err(TangleError::Indeterminate("0/0".into()));
        }
        if den.is_zero() {
            return Ok(Self::infinity());
        }
        if den.is_negative() {
            num = -num;
            den = -den;
        }
        let g = num.gcd(&den);
        if !g.is_one() {
            num /= &g;
            den /= &g;
        }
        Ok(Self { num, den })
    }

    pub fn integer(n: impl Into<BigInt>) -> Self {
        Self { num: n.into(), den: BigInt::one() }
    }

    pub fn zero() -> Self {
        Self::integer(0)
    }

    pub fn infinity() -> Self {
        Self { num: BigInt::one(), den: BigInt::zero() }
    }

    pub fn is_infinite(&self) -> bool {
        self.den.is_zero()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn numer(&self) -> &BigInt {
        &self.num
    }

    pub fn denom(&self) -> &BigInt {
        &self.den
    }

    /// `1/x`, with `1/0 = ∞` and `1/∞ = 0`.
    pub fn recip(&self) -> Self {
        if self.num.is_zero() {
            return Self::infinity();
        }
        if self.den.is_zero() {
            return Self::zero();
        }
        let (num, den) = if self.num.is_negative() {
            (-self.den.clone(), -self.num.clone())
        } else {
            (self.den.clone(), self.num.clone())
        };
        Self { num, den }
    }

    /// Negation; the unsigned infinity is its own negative.
    pub fn neg(&self) -> Self {
        if self.is_infinite() {
            return self.clone();
        }
        Self { num: -self.num.clone(), den: self.den.clone() }
    }

    /// `x + y`. Adding infinity to a finite value gives infinity; `∞ + ∞` has
    /// no defined value.
    pub fn checked_add(&self, other: &Self) -> Result<Self, TangleError> {
        match (self.is_infinite(), other.is_infinite()) {
            (true, true) => Err(TangleError::Indeterminate("inf + inf".into())),
            (true, false) | (false, true) => Ok(Self::infinity()),
            (false, false) => Self::new(
                &self.num * &other.den + &other.num * &self.den,
                &self.den * &other.den,
            ),
        }
    }

    /// `a + 1/self`, the continued-fraction step. Total for every finite `a`.
    pub fn cf_step(&self, a: i64) -> Self {
        self.recip()
            .checked_add(&Self::integer(a))
            .expect("finite plus extended value is always defined")
    }

    /// Lossy conversion for display and diagnostics.
    pub fn to_f64(&self) -> f64 {
        if self.is_infinite() {
            return f64::INFINITY;
        }
        let n: f64 = self.num.to_string().parse().unwrap_or(f64::NAN);
        let d: f64 = self.den.to_string().parse().unwrap_or(f64::NAN);
        n / d
    }

    pub fn signum(&self) -> Ordering {
        if self.is_infinite() {
            return Ordering::Greater;
        }
        self.num.sign().cmp(&num_bigint::Sign::NoSign)
    }
}

impl From<i64> for ExtendedRational {
    fn from(n: i64) -> Self {
        Self::integer(n)
    }
}

impl fmt::Display for ExtendedRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl std::str::FromStr for ExtendedRational {
    type Err = TangleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "inf" || s == "∞" {
            return Ok(Self::infinity());
        }
        let bad = || TangleError::Syntax { offset: 0, message: format!("not a fraction: {s:?}") };
        match s.split_once('/') {
            Some((n, d)) => {
                let n: BigInt = n.trim().parse().map_err(|_| bad())?;
                let d: BigInt = d.trim().parse().map_err(|_| bad())?;
                Self::new(n, d)
            }
            None => Ok(Self::integer(s.parse::<BigInt>().map_err(|_| bad())?)),
        }
    }
}
