//! Exact and log-domain combinatorics.
//!
//! Every quantity here comes in two flavours: an exact big-integer or
//! big-rational value, and an `f64` computed in the log domain. The exact
//! values feed the inclusion-exclusion engine, the log-domain values feed the
//! forward recursion and the samplers.

use std::f64::consts::PI;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::sum::NeumaierSum;

/// `C(n, k)` as an exact integer; zero when `k < 0` or `k > n`.
pub fn binomial_exact(n: u64, k: i64) -> BigUint {
    if k < 0 || k as u64 > n {
        return BigUint::zero();
    }
    let k = (k as u64).min(n - k as u64);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `C(n, k)` as an exact rational.
pub fn binomial_rational(n: u64, k: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(binomial_exact(n, k)))
}

// ln m! for m <= 20, where m! is exactly representable or within one rounding.
fn small_ln_factorial(m: u64) -> f64 {
    let mut f = 1.0_f64;
    for i in 2..=m {
        f *= i as f64;
    }
    f.ln()
}

const SMALL_FACTORIAL_LIMIT: u64 = 20;

/// Stirling remainder `ln m! - (m ln m - m + ln(2 pi m) / 2)`.
fn stirling_remainder(m: u64) -> f64 {
    debug_assert!(m > 0);
    if m <= SMALL_FACTORIAL_LIMIT {
        let mf = m as f64;
        return small_ln_factorial(m) - (mf * mf.ln() - mf + 0.5 * (2.0 * PI * mf).ln());
    }
    let x = m as f64;
    let x2 = x * x;
    // 1/12x - 1/360x^3 + 1/1260x^5 - 1/1680x^7 + 1/1188x^9
    (1.0 / 12.0
        - (1.0 / 360.0 - (1.0 / 1260.0 - (1.0 / 1680.0 - 1.0 / (1188.0 * x2)) / x2) / x2) / x2)
        / x
}

/// `ln m!`.
pub fn ln_factorial(m: u64) -> f64 {
    if m <= SMALL_FACTORIAL_LIMIT {
        return small_ln_factorial(m);
    }
    let x = m as f64;
    x * x.ln() - x + 0.5 * (2.0 * PI * x).ln() + stirling_remainder(m)
}

/// Natural log of `C(n, k)`, or `-inf` when the coefficient is zero.
///
/// Uses the Stirling-remainder decomposition so the result stays accurate to
/// a few ulps even when `n` is large and `k` small.
pub fn log_binomial(n: u64, k: i64) -> f64 {
    if k < 0 || k as u64 > n {
        return f64::NEG_INFINITY;
    }
    let k = k as u64;
    if k == 0 || k == n {
        return 0.0;
    }
    let small = k.min(n - k);
    let large = n - small;
    if n <= SMALL_FACTORIAL_LIMIT {
        return small_ln_factorial(n) - small_ln_factorial(small) - small_ln_factorial(large);
    }
    let (nf, sf, lf) = (n as f64, small as f64, large as f64);
    let mut acc = NeumaierSum::new();
    acc.add(sf * (nf / sf).ln());
    acc.add(lf * (sf / lf).ln_1p());
    acc.add(0.5 * (nf / (2.0 * PI * sf * lf)).ln());
    acc.add(stirling_remainder(n));
    acc.add(-stirling_remainder(small));
    acc.add(-stirling_remainder(large));
    acc.value()
}

/// A harmonic number in exact and floating form.
#[derive(Debug, Clone, PartialEq)]
pub struct Harmonic {
    pub rational: BigRational,
    pub value: f64,
}

/// `H_n = 1 + 1/2 + ... + 1/n`.
pub fn harmonic(n: u64) -> Result<Harmonic> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "harmonic number needs n >= 1".into(),
        ));
    }
    let rational = harmonic_range(1, n);
    let value = rational.to_f64().unwrap_or(f64::NAN);
    Ok(Harmonic { rational, value })
}

/// `1/lo + 1/(lo+1) + ... + 1/hi` as an exact rational; zero for an empty range.
pub fn harmonic_range(lo: u64, hi: u64) -> BigRational {
    if lo > hi || hi == 0 {
        return BigRational::zero();
    }
    let lo = lo.max(1);
    // Pairwise combination keeps the intermediate denominators balanced.
    fn sum(lo: u64, hi: u64) -> (BigInt, BigInt) {
        if lo == hi {
            return (BigInt::one(), BigInt::from(lo));
        }
        let mid = lo + (hi - lo) / 2;
        let (a, b) = sum(lo, mid);
        let (c, d) = sum(mid + 1, hi);
        (a * &d + c * &b, b * d)
    }
    let (num, den) = sum(lo, hi);
    BigRational::new(num, den)
}

/// `H_n` in floating point by compensated summation from the small end.
pub fn harmonic_f64(n: u64) -> f64 {
    (1..=n)
        .rev()
        .map(|i| 1.0 / i as f64)
        .collect::<NeumaierSum>()
        .value()
}
