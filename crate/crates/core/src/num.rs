//! Exact arithmetic helpers.

use num_bigint::BigInt;
use num_integer::Integer as _;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rational = BigRational;
pub type Integer = BigInt;

pub fn int(v: i64) -> Integer {
    Integer::from(v)
}

pub fn rat(v: i64) -> Rational {
    Rational::from_integer(Integer::from(v))
}

pub fn rat_from(v: &Integer) -> Rational {
    Rational::from_integer(v.clone())
}

pub fn is_integral(r: &Rational) -> bool {
    r.denom().is_one()
}

/// Integer gcd, always non-negative. `gcd(0, 0) = 0`.
pub fn gcd(a: &Integer, b: &Integer) -> Integer {
    a.gcd(b)
}

/// Integer lcm, always non-negative.
pub fn lcm(a: &Integer, b: &Integer) -> Integer {
    if a.is_zero() || b.is_zero() {
        return Integer::zero();
    }
    a.lcm(b).abs()
}

/// Floor division remainder in `[0, m)` for `m > 0`.
pub fn modulo(a: &Integer, m: &Integer) -> Integer {
    a.mod_floor(m)
}

pub fn floor(r: &Rational) -> Integer {
    r.floor().to_integer()
}

pub fn ceil(r: &Rational) -> Integer {
    r.ceil().to_integer()
}
