//! Exact scalars: dyadic rationals (numerator times a power of two) and
//! general big rationals. Every construction coefficient in this crate is a
//! dyadic rational; general rationals appear only as step-function values.

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

pub type Rational = BigRational;

/// `numer * 2^{-exp}` in canonical form: `numer` is odd or zero, and zero has
/// `exp == 0`. `exp` may be negative, so values of any magnitude are exact.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    numer: BigInt,
    exp: i64,
}

impl Dyadic {
    pub fn zero() -> Self {
        Dyadic {
            numer: BigInt::zero(),
            exp: 0,
        }
    }

    pub fn one() -> Self {
        Dyadic {
            numer: BigInt::one(),
            exp: 0,
        }
    }

    pub fn new(numer: BigInt, exp: i64) -> Self {
        let mut d = Dyadic { numer, exp };
        d.canonicalize();
        d
    }

    pub fn from_int(n: i64) -> Self {
        Dyadic::new(BigInt::from(n), 0)
    }

    /// `2^k` for any integer `k`.
    pub fn pow2(k: i64) -> Self {
        Dyadic {
            numer: BigInt::one(),
            exp: -k,
        }
    }

    fn canonicalize(&mut self) {
        if self.numer.is_zero() {
            self.exp = 0;
            return;
        }
        let tz = self.numer.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            self.numer >>= tz;
            self.exp -= tz as i64;
        }
    }

    pub fn numer(&self) -> &BigInt {
        &self.numer
    }

    /// Exponent `e` with value = numer * 2^{-e}.
    pub fn exp(&self) -> i64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.numer.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.numer.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.numer.is_negative()
    }

    pub fn abs(&self) -> Self {
        Dyadic {
            numer: self.numer.abs(),
            exp: self.exp,
        }
    }

    pub fn signum(&self) -> i8 {
        match self.numer.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    /// Multiply by `2^k` exactly.
    pub fn mul_pow2(&self, k: i64) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        Dyadic {
            numer: self.numer.clone(),
            exp: self.exp - k,
        }
    }

    pub fn to_rational(&self) -> Rational {
        if self.exp >= 0 {
            Rational::new(self.numer.clone(), BigInt::one() << self.exp as usize)
        } else {
            Rational::new(
                self.numer.clone() << (-self.exp) as usize,
                BigInt::one(),
            )
        }
    }

    /// Exact conversion from a rational whose denominator is a power of two.
    pub fn try_from_rational(r: &Rational) -> Option<Self> {
        let den = r.denom();
        if den.is_zero() {
            return None;
        }
        let den_u = den.magnitude();
        if !is_power_of_two(den_u) {
            return None;
        }
        let exp = den_u.trailing_zeros().unwrap_or(0) as i64;
        Some(Dyadic::new(r.numer().clone(), exp))
    }

    /// log2 of the absolute value, as binary64; `-inf` for zero.
    pub fn log2_abs(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        big_log2(self.numer.magnitude()) - self.exp as f64
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let sign = if self.is_negative() { -1.0 } else { 1.0 };
        sign * self.log2_abs().exp2()
    }
}

pub fn is_power_of_two(n: &BigUint) -> bool {
    !n.is_zero() && n.count_ones() == 1
}

/// log2 of a positive big integer in binary64.
pub fn big_log2(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 53 {
        let v: u64 = n.try_into().unwrap();
        return (v as f64).log2();
    }
    let shift = bits - 53;
    let top: u64 = (n >> shift).try_into().unwrap();
    (top as f64).log2() + shift as f64
}

/// log2|r| in binary64; `-inf` for zero.
pub fn rational_log2_abs(r: &Rational) -> f64 {
    if r.is_zero() {
        return f64::NEG_INFINITY;
    }
    big_log2(r.numer().magnitude()) - big_log2(r.denom().magnitude())
}

impl Add for &Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        // Align to the larger exponent (finer grid).
        let e = self.exp.max(rhs.exp);
        let a = &self.numer << (e - self.exp) as usize;
        let b = &rhs.numer << (e - rhs.exp) as usize;
        Dyadic::new(a + b, e)
    }
}

impl Sub for &Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        self + &(-rhs)
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &Dyadic) -> Dyadic {
        Dyadic::new(&self.numer * &rhs.numer, self.exp + rhs.exp)
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            numer: -self.numer.clone(),
            exp: self.exp,
        }
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            numer: -self.numer,
            exp: self.exp,
        }
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let d = self - other;
        match d.signum() {
            -1 => Ordering::Less,
            0 => Ordering::Equal,
            _ => Ordering::Greater,
        }
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^{}", self.numer, -self.exp)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp <= 0 {
            write!(f, "{}", &self.numer << (-self.exp) as usize)
        } else {
            write!(f, "{}/{}", self.numer, BigInt::one() << self.exp as usize)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form() {
        let d = Dyadic::new(BigInt::from(6), 3);
        assert_eq!(d.numer(), &BigInt::from(3));
        assert_eq!(d.exp(), 2);
        let z = Dyadic::new(BigInt::zero(), 17);
        assert!(z.is_zero());
        assert_eq!(z.exp(), 0);
        let i = Dyadic::from_int(32);
        assert_eq!(i.numer(), &BigInt::from(1));
        assert_eq!(i.exp(), -5);
    }

    #[test]
    fn arithmetic_round_trip() {
        let a = Dyadic::new(BigInt::from(3), 2); // 3/4
        let b = Dyadic::new(BigInt::from(1), 3); // 1/8
        let s = &a + &b;
        assert_eq!(s.to_rational(), Rational::new(BigInt::from(7), BigInt::from(8)));
        let p = &a * &b;
        assert_eq!(p.to_rational(), Rational::new(BigInt::from(3), BigInt::from(32)));
        let d = &a - &b;
        assert_eq!(d.to_rational(), Rational::new(BigInt::from(5), BigInt::from(8)));
        assert_eq!(a.mul_pow2(3).to_rational(), Rational::from_integer(BigInt::from(6)));
    }

    #[test]
    fn rational_embedding() {
        let r = Rational::new(BigInt::from(-5), BigInt::from(16));
        let d = Dyadic::try_from_rational(&r).unwrap();
        assert_eq!(d.to_rational(), r);
        let bad = Rational::new(BigInt::from(1), BigInt::from(3));
        assert!(Dyadic::try_from_rational(&bad).is_none());
    }

    #[test]
    fn log2_of_big_values() {
        let d = Dyadic::pow2(-700);
        assert_eq!(d.log2_abs(), -700.0);
        let e = Dyadic::new(BigInt::from(3), 10);
        assert!((e.log2_abs() - (3f64.log2() - 10.0)).abs() < 1e-12);
    }

    #[test]
    fn ordering() {
        let a = Dyadic::new(BigInt::from(1), 1);
        let b = Dyadic::new(BigInt::from(3), 2);
        assert!(a < b);
        assert!(-&a > -&b);
    }
}
