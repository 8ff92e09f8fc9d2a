//! Comparisons between exact laws, simulations and asymptotic predictions.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{
    derived_indices, poisson_table, predict_const_s, predict_near_complete, predict_proportional,
    predict_window,
};
use crate::error::{Error, Result};
use crate::exact::{expectation_forward, pmf_of_y, xk_distribution, InclusionExclusion};
use crate::instance::{Instance, RegimeSpec, TruncationControl};
use crate::montecarlo::{run_trials, SimConfig};
use crate::pmf::{ExactPmf, PmfTable};
use crate::sum::NeumaierSum;

/// Total variation distance, with both tables' tail bounds counted as
/// worst-case disagreement.
pub fn tv_distance(p: &PmfTable, q: &PmfTable) -> f64 {
    let lo = p.support_offset.min(q.support_offset);
    let hi = p.support_end().max(q.support_end());
    let mut acc = NeumaierSum::new();
    for i in lo..hi {
        acc.add((p.mass(i) - q.mass(i)).abs());
    }
    (0.5 * (acc.value() + p.tail_mass_bound + q.tail_mass_bound)).min(1.0)
}

fn rational(a: u64, b: u64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Result of checking `P[Y >= i] <= n ((n - s)/n)^{i-1}` for `i = 1..=i_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailBoundReport {
    pub n: u64,
    pub s: u64,
    pub checked: u64,
    /// Smallest `bound - P[Y >= i]` seen (zero when the bound is tight).
    pub min_slack: f64,
    pub max_slack: f64,
    pub violations: Vec<u64>,
}

impl TailBoundReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Union-bound tail check against exact survival values.
pub fn check_tail_bound(inst: &Instance, i_max: u64) -> Result<TailBoundReport> {
    check_tail_bound_with(&InclusionExclusion::default(), inst, i_max)
}

pub fn check_tail_bound_with(
    engine: &InclusionExclusion,
    inst: &Instance,
    i_max: u64,
) -> Result<TailBoundReport> {
    let (n, s) = (inst.n(), inst.s());
    let survival = engine.survival_table(inst, i_max.saturating_sub(1))?;
    let q = rational(n - s, n);
    let mut bound = BigRational::from_integer(BigInt::from(n));
    let mut report = TailBoundReport {
        n,
        s,
        checked: 0,
        min_slack: f64::INFINITY,
        max_slack: f64::NEG_INFINITY,
        violations: Vec::new(),
    };
    for i in 1..=i_max {
        let exact = &survival[(i - 1) as usize];
        let slack = &bound - exact;
        if slack.is_negative() {
            report.violations.push(i);
        }
        let slack = to_f64(&slack);
        report.min_slack = report.min_slack.min(slack);
        report.max_slack = report.max_slack.max(slack);
        report.checked += 1;
        bound *= &q;
    }
    Ok(report)
}

/// Check of the second-moment lower bound `P[X_i > 0] >= 1 - 1/(n q^i)` and
/// of the moment facts it rests on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondMomentReport {
    pub n: u64,
    pub s: u64,
    pub i: u64,
    pub lower_bound: f64,
    pub p_positive: f64,
    pub holds: bool,
    /// Mean of the exact law equals `n q^i`.
    pub mean_matches: bool,
    /// Second moment of the exact law equals the pair-count formula.
    pub second_moment_matches: bool,
    /// `V[X_i] <= E[X_i]`.
    pub variance_le_mean: bool,
}

impl SecondMomentReport {
    pub fn all_hold(&self) -> bool {
        self.holds && self.mean_matches && self.second_moment_matches && self.variance_le_mean
    }
}

fn second_moment_report(inst: &Instance, i: u64, law: &ExactPmf) -> SecondMomentReport {
    let (n, s) = (inst.n(), inst.s());
    let q_i = num_traits::pow(rational(n - s, n), i as usize);
    let mean_formula = BigRational::from_integer(BigInt::from(n)) * &q_i;
    let lower = BigRational::one() - BigRational::one() / &mean_formula;

    let p_zero = law.mass(0);
    let p_positive = BigRational::one() - p_zero;
    let mut mean = BigRational::zero();
    let mut second = BigRational::zero();
    for (m, p) in law.iter() {
        let m = BigRational::from_integer(BigInt::from(m));
        mean += &m * p;
        second += &m * &m * p;
    }
    let (mean_pair, second_pair) = crate::exact::xk_moments_exact(inst, i);
    let variance = &second - &mean * &mean;
    SecondMomentReport {
        n,
        s,
        i,
        lower_bound: to_f64(&lower),
        p_positive: to_f64(&p_positive),
        holds: p_positive >= lower,
        mean_matches: mean == mean_formula && mean == mean_pair,
        second_moment_matches: second == second_pair,
        variance_le_mean: variance <= mean,
    }
}

/// Second-moment check at a single step `i`.
pub fn check_second_moment_bound(inst: &Instance, i: u64) -> Result<SecondMomentReport> {
    if inst.s() >= inst.n() {
        return Err(Error::InvalidArgument(
            "second-moment bound needs s < n".into(),
        ));
    }
    let law = InclusionExclusion::default().xk_distribution(inst, i)?;
    Ok(second_moment_report(inst, i, &law))
}

/// Second-moment checks for `i = 1..=i_max` from one exact forward pass.
pub fn check_second_moment_bounds(inst: &Instance, i_max: u64) -> Result<Vec<SecondMomentReport>> {
    if inst.s() >= inst.n() {
        return Err(Error::InvalidArgument(
            "second-moment bound needs s < n".into(),
        ));
    }
    let engine = InclusionExclusion::default();
    if inst.n() > engine.ceiling() {
        return Err(Error::ExactCeiling {
            n: inst.n(),
            ceiling: engine.ceiling(),
        });
    }
    let mut forward = crate::exact::ExactForward::new(*inst);
    let mut out = Vec::with_capacity(i_max as usize);
    for i in 1..=i_max {
        forward.step();
        out.push(second_moment_report(inst, i, &forward.pmf()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    ExactRational,
    ExactForward,
    MonteCarlo,
}

impl ReferenceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReferenceKind::ExactRational => "exact-rational",
            ReferenceKind::ExactForward => "exact-forward",
            ReferenceKind::MonteCarlo => "monte-carlo",
        }
    }
}

/// One `n` of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: u64,
    pub s: u64,
    pub reference_value: f64,
    pub reference_kind: ReferenceKind,
    pub prediction: f64,
    pub abs_error: f64,
    pub extra: BTreeMap<String, f64>,
}

/// Monte Carlo settings for studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McFallback {
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
    /// Also simulate where the exact reference succeeded.
    pub cross_check: bool,
}

/// How a study obtains its references.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyConfig {
    pub ctl: TruncationControl,
    /// Use exact rationals up to this `n`.
    pub exact_rational_limit: u64,
    pub mc: Option<McFallback>,
}

impl StudyConfig {
    pub fn new(ctl: TruncationControl) -> Self {
        StudyConfig {
            ctl,
            exact_rational_limit: 0,
            mc: None,
        }
    }

    pub fn exact_rational_limit(mut self, limit: u64) -> Self {
        self.exact_rational_limit = limit;
        self
    }

    pub fn monte_carlo(mut self, mc: McFallback) -> Self {
        self.mc = Some(mc);
        self
    }
}

fn predict(
    spec: &RegimeSpec,
    inst: &Instance,
    ctl: &TruncationControl,
) -> Result<(f64, Option<PmfTable>)> {
    Ok(match *spec {
        RegimeSpec::ConstantS { s } => (predict_const_s(inst.n(), s)?.value, None),
        RegimeSpec::Proportional { c } => (predict_proportional(inst.n(), c, ctl)?.value, None),
        RegimeSpec::NearCompleteExact { t, lambda } => {
            let (p, z) = predict_near_complete(t, lambda)?;
            (p.value, Some(z))
        }
        RegimeSpec::NearCompleteWindow { t } => (
            predict_window(t)?.value,
            Some(PmfTable::point_mass(t as u64 + 1)),
        ),
    })
}

fn simulate(
    inst: &Instance,
    mc: &McFallback,
    extra: &mut BTreeMap<String, f64>,
    prefix: &str,
) -> Result<f64> {
    let cfg = SimConfig::new(mc.trials, mc.seed).workers(mc.workers);
    let sim = run_trials(inst, &cfg)?;
    extra.insert(format!("{prefix}ci95_low"), sim.ci95.0);
    extra.insert(format!("{prefix}ci95_high"), sim.ci95.1);
    extra.insert(format!("{prefix}std_error"), sim.standard_error());
    if !prefix.is_empty() {
        extra.insert(format!("{prefix}mean"), sim.mean);
    }
    Ok(sim.mean)
}

fn convergence_row(spec: &RegimeSpec, n: u64, cfg: &StudyConfig) -> Result<ConvergenceRow> {
    let inst = spec.package_size(n)?;
    let (prediction, limit_law) = predict(spec, &inst, &cfg.ctl)?;
    let mut extra = BTreeMap::new();

    let (reference_value, reference_kind) = if inst.n() <= cfg.exact_rational_limit {
        let e = InclusionExclusion::with_ceiling(cfg.exact_rational_limit).expectation(&inst)?;
        (to_f64(&e), ReferenceKind::ExactRational)
    } else {
        match expectation_forward(&inst, &cfg.ctl) {
            Ok(summary) => {
                extra.insert(
                    "truncation_error_bound".into(),
                    summary.truncation_error_bound,
                );
                (summary.expectation_float, ReferenceKind::ExactForward)
            }
            Err(Error::HorizonExceeded { .. }) if cfg.mc.is_some() => {
                let mc = cfg.mc.as_ref().unwrap();
                (
                    simulate(&inst, mc, &mut extra, "")?,
                    ReferenceKind::MonteCarlo,
                )
            }
            Err(e) => return Err(e),
        }
    };
    if reference_kind != ReferenceKind::MonteCarlo {
        if let Some(mc) = cfg.mc.as_ref().filter(|mc| mc.cross_check) {
            simulate(&inst, mc, &mut extra, "mc_")?;
        }
    }
    if let Some(z) = limit_law {
        if reference_kind != ReferenceKind::MonteCarlo {
            let law = pmf_of_y(&inst, &cfg.ctl)?;
            extra.insert("tv_distance".into(), tv_distance(&law, &z));
        }
    }
    Ok(ConvergenceRow {
        n: inst.n(),
        s: inst.s(),
        reference_value,
        reference_kind,
        prediction,
        abs_error: (reference_value - prediction).abs(),
        extra,
    })
}

/// Reference `E[Y]` against the regime's prediction for each `n`, sorted by `n`.
pub fn convergence_study(
    spec: &RegimeSpec,
    n_list: &[u64],
    cfg: &StudyConfig,
) -> Result<Vec<ConvergenceRow>> {
    spec.validate()?;
    let mut rows = n_list
        .par_iter()
        .map(|&n| convergence_row(spec, n, cfg))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| r.n);
    Ok(rows)
}

/// Which Poisson limit a study targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "target", rename_all = "kebab-case")]
pub enum PoissonTarget {
    /// `X_t -> Po(lambda^t)` for `s = n - lambda n^{(t-1)/t}`.
    NearComplete { t: u32, lambda: f64 },
    /// `X_{k(n)+i} -> Po((1-c)^{i - alpha})` for `s = c n`, along `n` with
    /// fixed `alpha`.
    Proportional { c: f64, offset: i64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonRow {
    pub n: u64,
    pub s: u64,
    /// Number of draws `k` in `X_k`.
    pub step: u64,
    pub mu: f64,
    pub p_zero: f64,
    pub tv_distance: f64,
    pub reference_kind: ReferenceKind,
}

fn poisson_row(target: &PoissonTarget, n: u64, cfg: &StudyConfig) -> Result<PoissonRow> {
    let (inst, step, mu) = match *target {
        PoissonTarget::NearComplete { t, lambda } => {
            let inst = RegimeSpec::near_complete(t, lambda)?.package_size(n)?;
            (inst, t as u64, lambda.powi(t as i32))
        }
        PoissonTarget::Proportional { c, offset } => {
            let inst = RegimeSpec::proportional(c)?.package_size(n)?;
            let idx = derived_indices(n, c)?;
            let step = idx.k as i64 + offset;
            if step < 0 {
                return Err(Error::InvalidArgument(format!(
                    "step k(n) + {offset} is negative at n = {n}"
                )));
            }
            (inst, step as u64, (1.0 - c).powf(offset as f64 - idx.alpha))
        }
    };
    let (law, reference_kind) = match cfg.mc {
        Some(mc) if inst.n() > DENSE_FORWARD_LIMIT => {
            let sim_cfg = SimConfig::new(mc.trials, mc.seed)
                .workers(mc.workers)
                .record_k(step);
            let sim = run_trials(&inst, &sim_cfg)?;
            (
                sim.empirical_pmf_xk.expect("recorded").pmf,
                ReferenceKind::MonteCarlo,
            )
        }
        _ => (
            xk_distribution(&inst, step, &cfg.ctl),
            ReferenceKind::ExactForward,
        ),
    };
    let reference = poisson_table(mu, 1e-15)?;
    Ok(PoissonRow {
        n: inst.n(),
        s: inst.s(),
        step,
        mu,
        p_zero: law.mass(0),
        tv_distance: tv_distance(&law, &reference),
        reference_kind,
    })
}

/// Above this many coupons the dense forward recursion is replaced by
/// simulation when a Monte Carlo configuration is supplied.
pub const DENSE_FORWARD_LIMIT: u64 = 1 << 26;

/// Distance from the law of the missing count to its Poisson limit, per `n`.
pub fn poisson_limit_study(
    target: &PoissonTarget,
    n_list: &[u64],
    cfg: &StudyConfig,
) -> Result<Vec<PoissonRow>> {
    let mut rows = n_list
        .par_iter()
        .map(|&n| poisson_row(target, n, cfg))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| r.n);
    Ok(rows)
}

/// Trend test for noisy sequences: the last value is at most half the first.
pub fn decreasing_in_trend(values: &[f64]) -> bool {
    match (values.first(), values.last()) {
        (Some(first), Some(last)) if values.len() >= 2 => *last <= 0.5 * first,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(n: u64, s: u64) -> Instance {
        Instance::new(n, s).unwrap()
    }

    fn table(offset: u64, masses: &[f64]) -> PmfTable {
        PmfTable {
            support_offset: offset,
            masses: masses.to_vec(),
            tail_mass_bound: 0.0,
        }
    }

    #[test]
    fn tv_examples() {
        let p = table(0, &[0.2, 0.3, 0.5]);
        assert_eq!(tv_distance(&p, &p), 0.0);
        let with_tail = PmfTable {
            tail_mass_bound: 0.01,
            ..p.clone()
        };
        assert!((tv_distance(&with_tail, &with_tail) - 0.01).abs() < 1e-18);
        assert_eq!(
            tv_distance(&PmfTable::point_mass(2), &PmfTable::point_mass(7)),
            1.0
        );
        let half = table(0, &[0.5, 0.5]);
        assert_eq!(tv_distance(&PmfTable::point_mass(0), &half), 0.5);
        let tiny = poisson_table(1e-12, 1e-18).unwrap();
        assert!(tv_distance(&PmfTable::point_mass(0), &tiny) < 1e-11);
    }

    #[test]
    fn tail_bound_examples() {
        let r = check_tail_bound(&inst(3, 2), 3).unwrap();
        assert!(r.holds());
        assert_eq!(r.min_slack, 0.0);
        let r = check_tail_bound(&inst(5, 5), 2).unwrap();
        assert!(r.holds());
        assert_eq!(r.min_slack, 0.0);
        let r = check_tail_bound(&inst(4, 2), 2).unwrap();
        assert!(r.holds());
        assert_eq!(r.max_slack, 3.0);
    }

    #[test]
    fn second_moment_examples() {
        let r = check_second_moment_bound(&inst(4, 2), 2).unwrap();
        assert_eq!(r.lower_bound, 0.0);
        assert!((r.p_positive - 5.0 / 6.0).abs() < 1e-15);
        assert!(r.all_hold());
        let r = check_second_moment_bound(&inst(4, 2), 1).unwrap();
        assert_eq!(r.lower_bound, 0.5);
        assert_eq!(r.p_positive, 1.0);
        assert!(r.all_hold());
        assert!(check_second_moment_bound(&inst(4, 4), 1).is_err());
    }

    #[test]
    fn variance_below_mean_small_grid() {
        for n in 2..=12 {
            for s in 1..n {
                let r = check_second_moment_bound(&inst(n, s), 1).unwrap();
                assert!(r.variance_le_mean && r.mean_matches, "n = {n}, s = {s}");
            }
        }
    }

    #[test]
    fn trend() {
        assert!(decreasing_in_trend(&[0.1, 0.2, 0.04]));
        assert!(!decreasing_in_trend(&[0.1, 0.06]));
        assert!(!decreasing_in_trend(&[0.1]));
    }

    #[test]
    fn convergence_rows_sorted_and_consistent() {
        let spec = RegimeSpec::constant_s(2).unwrap();
        let cfg = StudyConfig::new(TruncationControl::default()).exact_rational_limit(40);
        let rows = convergence_study(&spec, &[64, 16, 32], &cfg).unwrap();
        assert_eq!(
            rows.iter().map(|r| r.n).collect::<Vec<_>>(),
            vec![16, 32, 64]
        );
        assert_eq!(rows[0].reference_kind, ReferenceKind::ExactRational);
        assert_eq!(rows[2].reference_kind, ReferenceKind::ExactForward);
        for r in &rows {
            assert!(((r.reference_value - r.prediction).abs() - r.abs_error).abs() <= 1e-12);
        }
    }

    #[test]
    fn monte_carlo_fallback() {
        let spec = RegimeSpec::constant_s(2).unwrap();
        let ctl = TruncationControl::new(1e-8, 10, 0.0).unwrap();
        let mc = McFallback {
            trials: 2000,
            seed: 9,
            workers: 2,
            cross_check: false,
        };
        let rows = convergence_study(&spec, &[50], &StudyConfig::new(ctl).monte_carlo(mc)).unwrap();
        assert_eq!(rows[0].reference_kind, ReferenceKind::MonteCarlo);
        assert!(rows[0].extra.contains_key("ci95_low"));
        assert!(convergence_study(&spec, &[50], &StudyConfig::new(ctl)).is_err());
    }

    #[test]
    fn poisson_study_at_powers_of_two() {
        let target = PoissonTarget::Proportional { c: 0.5, offset: 0 };
        let cfg = StudyConfig::new(TruncationControl::default());
        let rows = poisson_limit_study(&target, &[1 << 8, 1 << 12], &cfg).unwrap();
        for r in &rows {
            assert_eq!(r.mu, 1.0);
            assert_eq!(r.step, r.n.trailing_zeros() as u64);
        }
        assert!(rows[1].tv_distance < rows[0].tv_distance);
    }
}
