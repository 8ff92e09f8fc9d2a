//! The law of the collection time `Y` and of the missing count `X_k`, by two
//! independent routes:
//!
//! * inclusion-exclusion in exact rationals, `P[Y > i] = sum_{r>=1} (-1)^{r+1}
//!   C(n, r) q_r^i` with `q_r = C(n - r, s) / C(n, s)`;
//! * a forward recursion over the missing count, one hypergeometric
//!   convolution per draw, in floating point with certified truncation.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::combinatorics::binomial_rational;
use crate::error::{Error, Result};
use crate::hypergeom::{exact_hit_row, HitRow};
use crate::instance::{Instance, TruncationControl};
use crate::pmf::{ExactPmf, PmfTable};
use crate::sum::{compensated_sum, NeumaierSum};

pub const DEFAULT_EXACT_CEILING: u64 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    InclusionExclusion,
    ForwardRecursion,
}

/// Expectation and survival function of `Y`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactSummary {
    #[serde(serialize_with = "serialize_rational_opt")]
    pub expectation_rational: Option<BigRational>,
    pub expectation_float: f64,
    /// `P[Y > i]` for `i = 0..=horizon`.
    pub survival: Vec<f64>,
    pub horizon: u64,
    pub truncation_error_bound: f64,
    pub method: Method,
}

fn serialize_rational_opt<S: Serializer>(
    value: &Option<BigRational>,
    serializer: S,
) -> std::result::Result<S::Ok, S::Error> {
    match value {
        Some(r) => serializer.serialize_some(&r.to_string()),
        None => serializer.serialize_none(),
    }
}

/// Exact-arithmetic engine with a ceiling on `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InclusionExclusion {
    ceiling: u64,
}

impl Default for InclusionExclusion {
    fn default() -> Self {
        InclusionExclusion {
            ceiling: DEFAULT_EXACT_CEILING,
        }
    }
}

impl InclusionExclusion {
    pub fn with_ceiling(ceiling: u64) -> Self {
        InclusionExclusion { ceiling }
    }

    pub fn ceiling(&self) -> u64 {
        self.ceiling
    }

    fn check(&self, inst: &Instance) -> Result<()> {
        if inst.n() > self.ceiling {
            return Err(Error::ExactCeiling {
                n: inst.n(),
                ceiling: self.ceiling,
            });
        }
        Ok(())
    }

    /// `(C(n, r), q_r)` for `r = 1..=n`.
    fn signed_terms(inst: &Instance) -> Vec<(BigRational, BigRational)> {
        let (n, s) = (inst.n(), inst.s() as i64);
        let all = binomial_rational(n, s);
        (1..=n)
            .map(|r| {
                let sign = if r % 2 == 1 {
                    BigRational::one()
                } else {
                    -BigRational::one()
                };
                (
                    sign * binomial_rational(n, r as i64),
                    binomial_rational(n - r, s) / &all,
                )
            })
            .collect()
    }

    /// `P[Y > i]`.
    pub fn survival(&self, inst: &Instance, i: u64) -> Result<BigRational> {
        self.check(inst)?;
        let exp = usize::try_from(i).map_err(|_| Error::InvalidArgument("i too large".into()))?;
        Ok(Self::signed_terms(inst)
            .into_iter()
            .filter(|(_, q)| !q.is_zero() || i == 0)
            .map(|(c, q)| c * num_traits::pow(q, exp))
            .sum())
    }

    /// `P[Y > i]` for `i = 0..=horizon`.
    pub fn survival_table(&self, inst: &Instance, horizon: u64) -> Result<Vec<BigRational>> {
        self.check(inst)?;
        let mut terms = Self::signed_terms(inst);
        let mut out = Vec::with_capacity(horizon as usize + 1);
        for _ in 0..=horizon {
            out.push(terms.iter().map(|(c, _)| c).sum());
            for (c, q) in &mut terms {
                *c *= &*q;
            }
            terms.retain(|(c, _)| !c.is_zero());
        }
        Ok(out)
    }

    /// `E[Y] = sum_r (-1)^{r+1} C(n, r) / (1 - q_r)`.
    pub fn expectation(&self, inst: &Instance) -> Result<BigRational> {
        self.check(inst)?;
        Ok(Self::signed_terms(inst)
            .into_iter()
            .map(|(c, q)| c / (BigRational::one() - q))
            .sum())
    }

    /// `E[C(X_k, r)] = C(n, r) q_r^k`.
    pub fn factorial_moment(&self, inst: &Instance, k: u64, r: u64) -> Result<BigRational> {
        self.check(inst)?;
        let (n, s) = (inst.n(), inst.s() as i64);
        if r > n {
            return Ok(BigRational::zero());
        }
        let q = binomial_rational(n - r, s) / binomial_rational(n, s);
        let exp = usize::try_from(k).map_err(|_| Error::InvalidArgument("k too large".into()))?;
        Ok(binomial_rational(n, r as i64) * num_traits::pow(q, exp))
    }

    /// Exact summary with the survival table listed up to `horizon`.
    pub fn summary(&self, inst: &Instance, horizon: u64) -> Result<ExactSummary> {
        let expectation = self.expectation(inst)?;
        let survival = self
            .survival_table(inst, horizon)?
            .iter()
            .map(|p| p.to_f64().unwrap_or(f64::NAN))
            .collect();
        Ok(ExactSummary {
            expectation_float: expectation.to_f64().unwrap_or(f64::NAN),
            expectation_rational: Some(expectation),
            survival,
            horizon,
            truncation_error_bound: 0.0,
            method: Method::InclusionExclusion,
        })
    }

    /// Law of `X_k` by the forward recursion in exact rationals.
    pub fn xk_distribution(&self, inst: &Instance, k: u64) -> Result<ExactPmf> {
        self.check(inst)?;
        let mut forward = ExactForward::new(*inst);
        for _ in 0..k {
            if !forward.step() {
                break;
            }
        }
        Ok(forward.pmf())
    }
}

/// `P[Y > i]` exactly, under the default ceiling.
pub fn survival_ie(inst: &Instance, i: u64) -> Result<BigRational> {
    InclusionExclusion::default().survival(inst, i)
}

/// `E[Y]` exactly, under the default ceiling.
pub fn expectation_ie(inst: &Instance) -> Result<BigRational> {
    InclusionExclusion::default().expectation(inst)
}

/// `E[C(X_k, r)]` exactly, under the default ceiling.
pub fn factorial_moment(inst: &Instance, k: u64, r: u64) -> Result<BigRational> {
    InclusionExclusion::default().factorial_moment(inst, k, r)
}

/// Law of `X_k` in exact rationals, under the default ceiling.
pub fn xk_distribution_exact(inst: &Instance, k: u64) -> Result<ExactPmf> {
    InclusionExclusion::default().xk_distribution(inst, k)
}

/// Exact forward recursion over the missing count.
pub struct ExactForward {
    inst: Instance,
    rows: Vec<Option<(u64, Vec<BigRational>)>>,
    /// masses[m] = P[X = m]
    masses: Vec<BigRational>,
    steps: u64,
}

impl ExactForward {
    pub fn new(inst: Instance) -> Self {
        let n = inst.n() as usize;
        let mut masses = vec![BigRational::zero(); n + 1];
        masses[n] = BigRational::one();
        ExactForward {
            inst,
            rows: vec![None; n + 1],
            masses,
            steps: 0,
        }
    }

    /// Advances one draw; returns false once all mass sits at zero.
    pub fn step(&mut self) -> bool {
        let n = self.inst.n() as usize;
        if self.masses[1..].iter().all(Zero::is_zero) {
            self.steps += 1;
            return false;
        }
        let mut next = vec![BigRational::zero(); n + 1];
        next[0] = self.masses[0].clone();
        for m in 1..=n {
            if self.masses[m].is_zero() {
                continue;
            }
            let (first, row) =
                self.rows[m].get_or_insert_with(|| exact_hit_row(&self.inst, m as u64));
            for (k, p) in row.iter().enumerate() {
                let j = *first as usize + k;
                next[m - j] += &self.masses[m] * p;
            }
        }
        self.masses = next;
        self.steps += 1;
        true
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn mass(&self, m: u64) -> &BigRational {
        &self.masses[m as usize]
    }

    pub fn pmf(&self) -> ExactPmf {
        let lo = self.masses.iter().position(|p| !p.is_zero()).unwrap_or(0);
        let hi = self.masses.iter().rposition(|p| !p.is_zero()).unwrap_or(0);
        ExactPmf {
            support_offset: lo as u64,
            masses: self.masses[lo..=hi].to_vec(),
        }
    }
}

/// Floating-point forward recursion over the missing count.
///
/// States whose mass falls below the prune floor are dropped and hit-law
/// entries below the floor are trimmed; all dropped mass is accumulated in
/// `pruned`, never renormalised, so every reported probability is a lower
/// bound that is within `pruned` of the truth.
pub struct ForwardRecursion {
    inst: Instance,
    floor: f64,
    rows: Vec<Option<HitRow>>,
    cur: Vec<f64>,
    next: Vec<f64>,
    lo: u64,
    hi: u64,
    pruned: f64,
    steps: u64,
}

impl ForwardRecursion {
    pub fn new(inst: Instance, prune_mass: f64) -> Self {
        let n = inst.n() as usize;
        let mut cur = vec![0.0; n + 1];
        cur[n] = 1.0;
        ForwardRecursion {
            inst,
            floor: prune_mass,
            rows: vec![None; n + 1],
            cur,
            next: vec![0.0; n + 1],
            lo: inst.n(),
            hi: inst.n(),
            pruned: 0.0,
            steps: 0,
        }
    }

    /// Steps taken so far (`k` in `X_k`).
    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Total mass dropped so far.
    pub fn pruned(&self) -> f64 {
        self.pruned
    }

    /// True once no mass remains on a nonzero state.
    pub fn absorbed(&self) -> bool {
        self.hi == 0
    }

    pub fn mass_at_zero(&self) -> f64 {
        if self.lo == 0 {
            self.cur[0]
        } else {
            0.0
        }
    }

    /// `P[X_k > 0]` as currently tracked (a lower bound within `pruned`).
    pub fn survival(&self) -> f64 {
        let start = self.lo.max(1) as usize;
        if self.hi == 0 {
            return 0.0;
        }
        compensated_sum(self.cur[start..=self.hi as usize].iter().copied()).min(1.0)
    }

    /// Advances one draw and returns the mass absorbed at zero during it.
    pub fn step(&mut self) -> f64 {
        self.steps += 1;
        if self.hi == 0 {
            return 0.0;
        }
        let s = self.inst.s();
        let new_lo = self.lo.saturating_sub(s);
        let new_hi = self.hi;
        self.next[new_lo as usize..=new_hi as usize].fill(0.0);

        let before = self.mass_at_zero();
        let mut dropped = NeumaierSum::new();
        for m in self.lo..=self.hi {
            let w = self.cur[m as usize];
            if w == 0.0 {
                continue;
            }
            if m == 0 {
                self.next[0] += w;
                continue;
            }
            let row =
                self.rows[m as usize].get_or_insert_with(|| HitRow::new(&self.inst, m, self.floor));
            if row.dropped_bound > 0.0 {
                dropped.add(w * row.dropped_bound);
            }
            let top = (m - row.first) as usize;
            for (k, p) in row.probs.iter().enumerate() {
                self.next[top - k] += w * p;
            }
        }

        // Drop negligible states and tighten the active window.
        let mut lo = new_lo;
        let mut hi = new_hi;
        for m in lo.max(1)..=hi {
            let w = self.next[m as usize];
            if w != 0.0 && w < self.floor {
                dropped.add(w);
                self.next[m as usize] = 0.0;
            }
        }
        while hi > lo && self.next[hi as usize] == 0.0 {
            hi -= 1;
        }
        while lo < hi && self.next[lo as usize] == 0.0 {
            lo += 1;
        }
        std::mem::swap(&mut self.cur, &mut self.next);
        self.lo = lo;
        self.hi = hi;
        self.pruned += dropped.value();
        self.mass_at_zero() - before
    }

    /// Current law of `X_k`; the tail bound is the pruned mass.
    pub fn table(&self) -> PmfTable {
        PmfTable {
            support_offset: self.lo,
            masses: self.cur[self.lo as usize..=self.hi as usize].to_vec(),
            tail_mass_bound: self.pruned,
        }
    }
}

/// Law of `X_k` by the floating-point forward recursion.
pub fn xk_distribution(inst: &Instance, k: u64, ctl: &TruncationControl) -> PmfTable {
    let mut forward = ForwardRecursion::new(*inst, ctl.prune_mass);
    for _ in 0..k {
        if forward.absorbed() {
            break;
        }
        forward.step();
    }
    forward.table()
}

/// Union-bound tail of the expectation sum: `sum_{i > h} n q^i = n q^{h+1} / (1 - q)`.
fn union_tail(inst: &Instance, h: u64) -> f64 {
    let q = inst.miss_probability();
    let n = inst.n() as f64;
    let ln = (h as f64 + 1.0) * q.ln() + n.ln() - (inst.s() as f64 / n).ln();
    ln.exp()
}

/// Smallest horizon `h` whose union-bound tail is at most `tol`.
pub fn certified_horizon(inst: &Instance, tol: f64) -> u64 {
    if inst.s() == inst.n() {
        return 1;
    }
    let q = inst.miss_probability();
    let n = inst.n() as f64;
    let guess = ((tol.ln() - n.ln() + (inst.s() as f64 / n).ln()) / q.ln() - 1.0).ceil();
    let mut h = if guess.is_finite() && guess > 0.0 {
        guess as u64
    } else {
        0
    };
    while union_tail(inst, h) > tol {
        h += 1;
    }
    while h > 0 && union_tail(inst, h - 1) <= tol {
        h -= 1;
    }
    h
}

fn trivial_summary() -> ExactSummary {
    ExactSummary {
        expectation_rational: Some(BigRational::one()),
        expectation_float: 1.0,
        survival: vec![1.0, 0.0],
        horizon: 1,
        truncation_error_bound: 0.0,
        method: Method::ForwardRecursion,
    }
}

/// `E[Y]` by the tail-sum formula over the forward recursion.
///
/// The reported expectation is a lower bound; the true value lies within
/// `truncation_error_bound` above it.
pub fn expectation_forward(inst: &Instance, ctl: &TruncationControl) -> Result<ExactSummary> {
    if inst.s() == inst.n() {
        return Ok(trivial_summary());
    }
    let horizon = certified_horizon(inst, ctl.abs_tol);
    if horizon > ctl.max_terms {
        return Err(Error::HorizonExceeded {
            needed: horizon,
            max_terms: ctl.max_terms,
        });
    }
    let mut forward = ForwardRecursion::new(*inst, ctl.prune_mass);
    let mut survival = Vec::with_capacity(horizon as usize + 1);
    survival.push(1.0);
    let mut prune_accum = NeumaierSum::new();
    for i in 1..=horizon {
        if forward.absorbed() {
            prune_accum.add(forward.pruned() * (horizon - i + 1) as f64);
            survival.resize(horizon as usize + 1, 0.0);
            break;
        }
        forward.step();
        survival.push(forward.survival());
        prune_accum.add(forward.pruned());
    }
    Ok(ExactSummary {
        expectation_rational: None,
        expectation_float: compensated_sum(survival.iter().copied()),
        survival,
        horizon,
        truncation_error_bound: union_tail(inst, horizon) + prune_accum.value(),
        method: Method::ForwardRecursion,
    })
}

/// Law of `Y` from the mass absorbed at zero on each draw.
pub fn pmf_of_y(inst: &Instance, ctl: &TruncationControl) -> Result<PmfTable> {
    if inst.s() == inst.n() {
        return Ok(PmfTable::point_mass(1));
    }
    let horizon = certified_horizon(inst, ctl.abs_tol).max(inst.min_draws());
    if horizon > ctl.max_terms {
        return Err(Error::HorizonExceeded {
            needed: horizon,
            max_terms: ctl.max_terms,
        });
    }
    let offset = inst.min_draws();
    let mut forward = ForwardRecursion::new(*inst, ctl.prune_mass);
    let mut masses = Vec::with_capacity((horizon - offset + 1) as usize);
    for i in 1..=horizon {
        if forward.absorbed() {
            break;
        }
        let absorbed = forward.step();
        if i >= offset {
            masses.push(absorbed.max(0.0));
        }
    }
    while masses.last() == Some(&0.0) && masses.len() > 1 {
        masses.pop();
    }
    Ok(PmfTable {
        support_offset: offset,
        masses,
        tail_mass_bound: forward.survival() + forward.pruned(),
    })
}

/// `E[X_k] = n q^k` and `E[X_k^2] = n q^k + n(n-1) q2^k` exactly, with
/// `q = (n-s)/n` and `q2 = (n-s)(n-s-1) / (n(n-1))`.
pub fn xk_moments_exact(inst: &Instance, k: u64) -> (BigRational, BigRational) {
    let (n, s) = (inst.n() as i64, inst.s() as i64);
    let r = |a: i64, b: i64| BigRational::new(BigInt::from(a), BigInt::from(b));
    let k = k as usize;
    let mean = r(n, 1) * num_traits::pow(r(n - s, n), k);
    let pair = if n > 1 {
        r(n * (n - 1), 1) * num_traits::pow(r((n - s) * (n - s - 1), n * (n - 1)), k)
    } else {
        BigRational::zero()
    };
    (mean.clone(), mean + pair)
}
