//! The single-draw law: how many of the `m` still-missing coupons a uniform
//! `s`-subset of `n` coupons hits.
//!
//! `P[J = j] = C(m, j) C(n - m, s - j) / C(n, s)` on
//! `max(0, s - (n - m)) <= j <= min(m, s)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::combinatorics::{binomial_exact, log_binomial};
use crate::error::Result;
use crate::instance::Instance;
use crate::sum::compensated_sum;

/// Inclusive support `[lo, hi]` of the hit count when `m` coupons are missing.
pub fn hit_support(inst: &Instance, m: u64) -> (u64, u64) {
    let (n, s) = (inst.n(), inst.s());
    (s.saturating_sub(n - m), m.min(s))
}

/// Mode of the hit count, `floor((m + 1)(s + 1) / (n + 2))` clamped to the support.
pub fn hit_mode(inst: &Instance, m: u64) -> u64 {
    let (lo, hi) = hit_support(inst, m);
    let raw = (m as u128 + 1) * (inst.s() as u128 + 1) / (inst.n() as u128 + 2);
    (raw as u64).clamp(lo, hi)
}

/// `ln P[J = j]`, `-inf` outside the support.
pub fn log_hit_pmf(inst: &Instance, m: u64, j: i64) -> f64 {
    let (n, s) = (inst.n(), inst.s());
    let a = log_binomial(m, j);
    let b = log_binomial(n - m, s as i64 - j);
    if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    a + b - log_binomial(n, s as i64)
}

/// `P[newly collected = j]` when `m` coupons are still missing.
pub fn hypergeom_step_pmf(m: u64, inst: &Instance, j: i64) -> Result<f64> {
    inst.check_uncollected(m)?;
    Ok(log_hit_pmf(inst, m, j).exp())
}

/// Exact rational form of [`hypergeom_step_pmf`].
pub fn hypergeom_step_pmf_exact(m: u64, inst: &Instance, j: i64) -> Result<BigRational> {
    inst.check_uncollected(m)?;
    let (n, s) = (inst.n(), inst.s());
    let num = binomial_exact(m, j) * binomial_exact(n - m, s as i64 - j);
    if num.is_zero() {
        return Ok(BigRational::zero());
    }
    Ok(BigRational::new(
        BigInt::from(num),
        BigInt::from(binomial_exact(n, s as i64)),
    ))
}

/// `P[J = j + 1] / P[J = j]`.
#[inline]
pub(crate) fn ratio_up(inst: &Instance, m: u64, j: u64) -> f64 {
    let (n, s) = (inst.n() as f64, inst.s() as f64);
    let (m, j) = (m as f64, j as f64);
    ((m - j) * (s - j)) / ((j + 1.0) * (n - m - s + j + 1.0))
}

/// `P[J = j - 1] / P[J = j]`.
#[inline]
pub(crate) fn ratio_down(inst: &Instance, m: u64, j: u64) -> f64 {
    let (n, s) = (inst.n() as f64, inst.s() as f64);
    let (m, j) = (m as f64, j as f64);
    (j * (n - m - s + j)) / ((m - j + 1.0) * (s - j + 1.0))
}

/// The hit law for one value of `m`, with entries below a floor trimmed.
///
/// `dropped_bound` is an upper bound on the total trimmed mass, derived from
/// log-concavity: past the last kept entry the ratios only shrink, so the
/// trimmed tail is dominated by a geometric series.
#[derive(Debug, Clone)]
pub struct HitRow {
    pub first: u64,
    pub probs: Vec<f64>,
    pub dropped_bound: f64,
}

impl HitRow {
    pub fn new(inst: &Instance, m: u64, floor: f64) -> HitRow {
        let (lo, hi) = hit_support(inst, m);
        if lo == hi {
            return HitRow {
                first: lo,
                probs: vec![1.0],
                dropped_bound: 0.0,
            };
        }
        let mode = hit_mode(inst, m);
        let p_mode = log_hit_pmf(inst, m, mode as i64).exp();

        let mut upper = Vec::new();
        let mut dropped = 0.0;
        let mut j = mode;
        let mut p = p_mode;
        // Underflow to zero counts as reaching the edge of the support.
        let mut top_reached = true;
        while j < hi {
            let next = p * ratio_up(inst, m, j);
            if next == 0.0 {
                break;
            }
            if next < floor {
                dropped += tail_bound(next, hi - (j + 1), ratio_up(inst, m, j + 1));
                top_reached = false;
                break;
            }
            upper.push(next);
            p = next;
            j += 1;
        }

        let mut lower = Vec::new();
        let mut j = mode;
        let mut p = p_mode;
        let mut bottom_reached = true;
        while j > lo {
            let next = p * ratio_down(inst, m, j);
            if next == 0.0 {
                break;
            }
            if next < floor {
                dropped += tail_bound(next, (j - 1) - lo, ratio_down(inst, m, j - 1));
                bottom_reached = false;
                break;
            }
            lower.push(next);
            p = next;
            j -= 1;
        }

        let first = mode - lower.len() as u64;
        let mut probs: Vec<f64> = lower.into_iter().rev().collect();
        probs.push(p_mode);
        probs.extend(upper);

        // With the full support present the exact law sums to one, so
        // normalising removes the rounding error of the log-domain mode value.
        if top_reached && bottom_reached {
            let total = compensated_sum(probs.iter().copied());
            for p in &mut probs {
                *p /= total;
            }
        }
        HitRow {
            first,
            probs,
            dropped_bound: dropped,
        }
    }

    #[inline]
    pub fn last(&self) -> u64 {
        self.first + self.probs.len() as u64 - 1
    }
}

// Bound on p + p r + p r^2 + ... over at most `remaining + 1` terms.
fn tail_bound(p: f64, remaining: u64, ratio: f64) -> f64 {
    let count_bound = p * (remaining as f64 + 1.0);
    if ratio < 1.0 {
        (p / (1.0 - ratio)).min(count_bound)
    } else {
        count_bound
    }
}

/// Exact hit law for one value of `m`, indexed from `first`.
pub fn exact_hit_row(inst: &Instance, m: u64) -> (u64, Vec<BigRational>) {
    let (lo, hi) = hit_support(inst, m);
    let row = (lo..=hi)
        .map(|j| hypergeom_step_pmf_exact(m, inst, j as i64).expect("m <= n"))
        .collect();
    (lo, row)
}
