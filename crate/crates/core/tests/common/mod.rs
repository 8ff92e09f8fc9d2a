//! Independent oracles for the exact engines. Nothing here calls the
//! library's combinatorics or step law; binomials are recomputed locally.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

/// Binomial coefficient by Pascal's triangle in `u128`.
pub fn choose(n: u64, k: i64) -> u128 {
    if k < 0 || k as u64 > n {
        return 0;
    }
    let k = k as usize;
    let mut row = vec![0u128; k + 1];
    row[0] = 1;
    for i in 1..=n as usize {
        for j in (1..=k.min(i)).rev() {
            row[j] += row[j - 1];
        }
    }
    row[k]
}

fn ratio(num: u128, den: u128) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Expected absorption time of the missing-count chain, by back substitution
/// of `T(m) (1 - P(m,0)) = 1 + sum_{j>=1} P(m,j) T(m-j)`.
pub fn absorbing_chain_expectation(n: u64, s: u64) -> BigRational {
    let total = choose(n, s as i64);
    let mut t = vec![BigRational::zero(); n as usize + 1];
    for m in 1..=n {
        let p = |j: u64| {
            ratio(
                choose(m, j as i64) * choose(n - m, s as i64 - j as i64),
                total,
            )
        };
        let mut rhs = BigRational::one();
        for j in 1..=m.min(s) {
            rhs += p(j) * &t[(m - j) as usize];
        }
        t[m as usize] = rhs / (BigRational::one() - p(0));
    }
    t[n as usize].clone()
}

/// All `s`-subsets of `{0..n}` as bitmasks.
pub fn subsets(n: u32, s: u32) -> Vec<u32> {
    (0u32..1 << n).filter(|m| m.count_ones() == s).collect()
}

/// Expected collection time by solving the chain on the full set of
/// collected coupons (all `2^n` states, every subset drawn explicitly).
pub fn subset_chain_expectation(n: u32, s: u32) -> BigRational {
    let draws = subsets(n, s);
    let per = ratio(1, draws.len() as u128);
    let full = (1u32 << n) - 1;
    let mut t = vec![BigRational::zero(); 1 << n];
    let mut states: Vec<u32> = (0..=full).collect();
    states.sort_by_key(|m| std::cmp::Reverse(m.count_ones()));
    for a in states {
        if a == full {
            continue;
        }
        let mut stay = BigRational::zero();
        let mut rhs = BigRational::one();
        for &b in &draws {
            let next = a | b;
            if next == a {
                stay += &per;
            } else {
                rhs += &per * &t[next as usize];
            }
        }
        t[a as usize] = rhs / (BigRational::one() - stay);
    }
    t[0].clone()
}

/// `P[Y > i]` by enumerating every sequence of `i` draws.
pub fn enumerated_survival(n: u32, s: u32, i: u32) -> BigRational {
    let draws = subsets(n, s);
    let full = (1u32 << n) - 1;
    // distribution over collected sets after k draws
    let mut dist = std::collections::BTreeMap::from([(0u32, 1u128)]);
    for _ in 0..i {
        let mut next = std::collections::BTreeMap::new();
        for (&a, &w) in &dist {
            for &b in &draws {
                *next.entry(a | b).or_insert(0u128) += w;
            }
        }
        dist = next;
    }
    let total: u128 = dist.values().sum();
    let incomplete: u128 = dist
        .iter()
        .filter(|(a, _)| **a != full)
        .map(|(_, w)| *w)
        .sum();
    ratio(incomplete, total)
}

/// Signed inclusion-exclusion terms `((-1)^{r+1} C(n,r), C(n-r,s)/C(n,s))`.
pub fn ie_terms(n: u64, s: u64) -> Vec<(BigRational, BigRational)> {
    let total = choose(n, s as i64);
    (1..=n)
        .map(|r| {
            let c = ratio(choose(n, r as i64), 1);
            let c = if r % 2 == 1 { c } else { -c };
            (c, ratio(choose(n - r, s as i64), total))
        })
        .collect()
}

/// `sum_{i > h} P[Y > i]` in closed form: geometric sums of each term.
pub fn geometric_closure(n: u64, s: u64, h: u64) -> BigRational {
    ie_terms(n, s)
        .into_iter()
        .filter(|(_, qr)| !qr.is_zero())
        .map(|(c, qr)| c * num_traits::pow(qr.clone(), h as usize + 1) / (BigRational::one() - qr))
        .sum()
}
