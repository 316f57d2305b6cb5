use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// The exact scalar used everywhere outside the generic linear algebra.
pub type Q = BigRational;

pub fn int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn ratio(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

/// Fractional part in `[0, 1)`.
pub fn frac(x: &Q) -> Q {
    x - x.floor()
}

pub fn is_integer(x: &Q) -> bool {
    x.is_integer()
}

/// Second Bernoulli polynomial `x^2 - x + 1/6`.
pub fn bernoulli2(x: &Q) -> Q {
    x * x - x + ratio(1, 6)
}

/// `(-1)^k` as a rational.
pub fn sign_power(k: i64) -> Q {
    if k.is_even() {
        Q::one()
    } else {
        -Q::one()
    }
}

pub fn product<'a, I: IntoIterator<Item = &'a Q>>(items: I) -> Q {
    items.into_iter().fold(Q::one(), |acc, x| acc * x)
}

/// Integer value of a rational known to be integral.
pub fn to_bigint(x: &Q) -> Option<BigInt> {
    x.is_integer().then(|| x.to_integer())
}

pub fn to_i64(x: &Q) -> Option<i64> {
    use num_traits::ToPrimitive;
    to_bigint(x).and_then(|n| n.to_i64())
}

/// Sum of squares, used as a termination measure for rewriting.
pub fn square_sum<'a, I: IntoIterator<Item = &'a Q>>(items: I) -> Q {
    items.into_iter().fold(Q::zero(), |acc, x| acc + x * x)
}

pub fn is_negative(x: &Q) -> bool {
    x.is_negative()
}
