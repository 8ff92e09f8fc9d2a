//! Closed-form predictions and limit laws for the three regimes.

use serde::Serialize;

use crate::combinatorics::{harmonic, harmonic_f64, harmonic_range, ln_factorial};
use crate::error::{Error, Result};
use crate::instance::{DerivedIndices, Instance, RegimeSpec, TruncationControl};
use crate::pmf::PmfTable;
use crate::sum::NeumaierSum;

/// Harmonic numbers above this are summed in floating point rather than
/// exactly; the exact rational for larger `n` costs more than it is worth.
const EXACT_HARMONIC_LIMIT: u64 = 5_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    pub name: String,
    pub value: f64,
}

/// An asymptotic prediction of `E[Y]` as a sum of named terms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub value: f64,
    pub terms: Vec<Term>,
    pub regime: RegimeSpec,
    pub error_order: String,
}

impl Prediction {
    fn from_terms(terms: Vec<(&str, f64)>, regime: RegimeSpec, error_order: &str) -> Self {
        let value = terms
            .iter()
            .map(|(_, v)| *v)
            .collect::<NeumaierSum>()
            .value();
        Prediction {
            value,
            terms: terms
                .into_iter()
                .map(|(name, value)| Term {
                    name: name.to_owned(),
                    value,
                })
                .collect(),
            regime,
            error_order: error_order.to_owned(),
        }
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.name == name).map(|t| t.value)
    }
}

/// `g_c(x)` with a certified bound on the omitted tail of the series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GValue {
    pub c: f64,
    pub x: f64,
    pub value: f64,
    pub tail_bound: f64,
    pub terms_used: u64,
}

fn check_c(c: f64) -> Result<()> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "c must lie in (0, 1), got {c}"
        )));
    }
    Ok(())
}

struct GSeries {
    c: f64,
    x: f64,
    // ln(1 - c) < 0
    ln_q: f64,
}

impl GSeries {
    fn new(c: f64, x: f64) -> Result<Self> {
        check_c(c)?;
        if !(0.0..1.0).contains(&x) {
            return Err(Error::InvalidArgument(format!(
                "x must lie in [0, 1), got {x}"
            )));
        }
        Ok(GSeries {
            c,
            x,
            ln_q: (-c).ln_1p(),
        })
    }

    // 1 - exp(-(1-c)^(i-x-1)) - exp(-(1-c)^(-i-x)), with a bound on the
    // absolute rounding error of the computed value.
    fn term(&self, i: u64) -> (f64, f64) {
        let i = i as f64;
        let arg_a = (i - self.x - 1.0) * self.ln_q;
        let arg_b = (-i - self.x) * self.ln_q;
        let (a, b) = (arg_a.exp(), arg_b.exp());
        let p = -(-a).exp_m1();
        let m = (-b).exp();
        let err = (4.0 + arg_a.abs()) * p + (1.0 + (2.0 + arg_b.abs()) * b) * m + (p - m).abs();
        (p - m, f64::EPSILON * err)
    }

    // Bound on the sum of all terms past `terms`.
    fn tail_bound(&self, terms: u64) -> f64 {
        let l = terms as f64;
        // 1 - e^{-a} <= a, and the a_i form a geometric series with ratio 1 - c.
        let first = ((l - self.x) * self.ln_q).exp() / self.c;
        // e^{-b_i} with b_{i+1} = b_i / (1 - c): each term is at most the
        // previous one times e^{-b_{L+1} c / (1 - c)}.
        let b_next = ((-(l + 1.0) - self.x) * self.ln_q).exp();
        let ratio_gap = -(-b_next * self.c / (1.0 - self.c)).exp_m1();
        let second = if ratio_gap > 0.0 {
            (-b_next).exp() / ratio_gap
        } else {
            f64::INFINITY
        };
        first + second
    }
}

#[derive(Default)]
struct Partial {
    sum: NeumaierSum,
    rounding: f64,
}

impl Partial {
    fn add(&mut self, (term, err): (f64, f64)) {
        self.sum.add(term);
        self.rounding += err;
    }

    // Doubled to cover the comparison value's own rounding.
    fn rounding(&self) -> f64 {
        2.0 * (self.rounding + 2.0 * f64::EPSILON * self.sum.value().abs())
    }
}

/// Partial sum of `g` with exactly `terms` terms. The bound covers the
/// truncated tail and the rounding of the partial sum.
pub fn eval_g_terms(c: f64, x: f64, terms: u64) -> Result<GValue> {
    let series = GSeries::new(c, x)?;
    let mut acc = Partial::default();
    (1..=terms).for_each(|i| acc.add(series.term(i)));
    Ok(GValue {
        c,
        x,
        value: acc.sum.value(),
        tail_bound: series.tail_bound(terms) + acc.rounding(),
        terms_used: terms,
    })
}

/// `g_c(x) = sum_{i>=1} (1 - exp(-(1-c)^{i-x-1}) - exp(-(1-c)^{-i-x}))`,
/// summed until the certified error drops below `ctl.abs_tol`.
pub fn eval_g(c: f64, x: f64, ctl: &TruncationControl) -> Result<GValue> {
    let series = GSeries::new(c, x)?;
    let mut acc = Partial::default();
    let mut terms = 0;
    loop {
        let bound = series.tail_bound(terms) + acc.rounding();
        if bound <= ctl.abs_tol {
            return Ok(GValue {
                c,
                x,
                value: acc.sum.value(),
                tail_bound: bound,
                terms_used: terms,
            });
        }
        if terms >= ctl.max_terms {
            return Err(Error::SeriesNotConverged {
                tol: ctl.abs_tol,
                max_terms: ctl.max_terms,
            });
        }
        terms += 1;
        acc.add(series.term(terms));
    }
}

fn harmonic_value(n: u64) -> f64 {
    if n <= EXACT_HARMONIC_LIMIT {
        harmonic(n).map(|h| h.value).unwrap_or(f64::NAN)
    } else {
        harmonic_f64(n)
    }
}

/// Constant package size: `E[Y] = (n/s) H_n - ((s-1)/(2s)) H_n + O(1)`.
pub fn predict_const_s(n: u64, s: u64) -> Result<Prediction> {
    if s < 2 || s >= n {
        return Err(Error::InvalidArgument(format!(
            "constant-s prediction needs 2 <= s < n, got n = {n}, s = {s}"
        )));
    }
    let h = harmonic_value(n);
    let (nf, sf) = (n as f64, s as f64);
    Ok(Prediction::from_terms(
        vec![
            ("(n/s)*H_n", nf / sf * h),
            ("-((s-1)/(2s))*H_n", -(sf - 1.0) / (2.0 * sf) * h),
        ],
        RegimeSpec::ConstantS { s },
        "O(1)",
    ))
}

/// `H_n / (H_n - H_{n-s})`, with the difference summed exactly.
pub fn berend_sher_ratio(n: u64, s: u64) -> Result<f64> {
    if s == 0 || s >= n {
        return Err(Error::InvalidArgument(format!(
            "ratio needs 1 <= s < n, got n = {n}, s = {s}"
        )));
    }
    let gap = harmonic_range(n - s + 1, n);
    if n <= EXACT_HARMONIC_LIMIT {
        let h = harmonic(n)?.rational;
        return Ok(num_traits::ToPrimitive::to_f64(&(h / gap)).unwrap_or(f64::NAN));
    }
    let gap = num_traits::ToPrimitive::to_f64(&gap).unwrap_or(f64::NAN);
    Ok(harmonic_f64(n) / gap)
}

/// `k = floor(log_d x)` and `alpha = {log_d x}` for real `x >= 1`.
pub fn derived_indices_real(x: f64, c: f64) -> Result<DerivedIndices> {
    check_c(c)?;
    if !x.is_finite() || x < 1.0 {
        return Err(Error::InvalidArgument(format!("need x >= 1, got {x}")));
    }
    let ln_d = -(-c).ln_1p();
    let d = 1.0 / (1.0 - c);
    let log = x.ln() / ln_d;
    let nearest = log.round();
    // Exact powers of d must not slip below the floor boundary.
    if (log - nearest).abs() <= 4.0 * f64::EPSILON * nearest.abs().max(1.0) {
        return Ok(DerivedIndices {
            k: nearest as u64,
            alpha: 0.0,
            d,
        });
    }
    let k = log.floor();
    Ok(DerivedIndices {
        k: k as u64,
        alpha: log - k,
        d,
    })
}

/// Integer and fractional parts of `log_{1/(1-c)} n`.
pub fn derived_indices(n: u64, c: f64) -> Result<DerivedIndices> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    derived_indices_real(n as f64, c)
}

/// `E[Y] ~ k + g(alpha)` evaluated at a real argument `x` in place of `n`.
pub fn predict_proportional_real(x: f64, c: f64, ctl: &TruncationControl) -> Result<Prediction> {
    let idx = derived_indices_real(x, c)?;
    let g = eval_g(c, idx.alpha, ctl)?;
    Ok(Prediction::from_terms(
        vec![("k", idx.k as f64), ("g(alpha)", g.value)],
        RegimeSpec::Proportional { c },
        "o(1)",
    ))
}

/// Proportional package size: `E[Y] = floor(log_d n) + g(alpha(n)) + o(1)`.
pub fn predict_proportional(n: u64, c: f64, ctl: &TruncationControl) -> Result<Prediction> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    predict_proportional_real(n as f64, c, ctl)
}

/// Near-complete draws, `s = n - lambda n^{(t-1)/t}`: the limit of `E[Y]` and
/// the two-point limit law of `Y` on `{t, t+1}`.
pub fn predict_near_complete(t: u32, lambda: f64) -> Result<(Prediction, PmfTable)> {
    let regime = RegimeSpec::near_complete(t, lambda)?;
    let mu = lambda.powi(t as i32);
    let at_t = (-mu).exp();
    let at_t1 = -(-mu).exp_m1();
    let tf = t as f64;
    let prediction = Prediction::from_terms(
        vec![
            ("t*P[Z=t]", tf * at_t),
            ("(t+1)*P[Z=t+1]", (tf + 1.0) * at_t1),
        ],
        regime,
        "o(1)",
    );
    let z = PmfTable {
        support_offset: t as u64,
        masses: vec![at_t, at_t1],
        tail_mass_bound: 0.0,
    };
    Ok((prediction, z))
}

/// Window between consecutive near-complete exponents: `E[Y] -> t + 1`.
pub fn predict_window(t: u32) -> Result<Prediction> {
    let regime = RegimeSpec::window(t)?;
    Ok(Prediction::from_terms(
        vec![("t+1", t as f64 + 1.0)],
        regime,
        "limit",
    ))
}

pub const DEFAULT_CLASSIFY_TOL: f64 = 0.02;
pub const DEFAULT_CLASSIFY_T_MAX: u32 = 10;

/// Where a single instance sits relative to the near-complete exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum RegimeReport {
    NearCompleteExact { t: u32, lambda: f64, exponent: f64 },
    Window { t: u32, exponent: f64 },
    Outside { exponent: f64 },
}

/// Classifies `u = n - s` by the exponent `ln u / ln n` against `(t-1)/t`
/// for `t = 2..=t_max`.
pub fn classify_regime(inst: &Instance, tol: f64, t_max: u32) -> Result<RegimeReport> {
    if inst.s() >= inst.n() {
        return Err(Error::InvalidArgument("classification needs s < n".into()));
    }
    let n = inst.n() as f64;
    let u = (inst.n() - inst.s()) as f64;
    let exponent = u.ln() / n.ln();
    for t in 2..=t_max {
        let beta = (t - 1) as f64 / t as f64;
        if (exponent - beta).abs() <= tol {
            return Ok(RegimeReport::NearCompleteExact {
                t,
                lambda: u / n.powf(beta),
                exponent,
            });
        }
    }
    for t in 2..=t_max {
        let lower = (t - 1) as f64 / t as f64 + tol;
        let upper = t as f64 / (t + 1) as f64 - tol;
        if lower < exponent && exponent < upper {
            return Ok(RegimeReport::Window { t, exponent });
        }
    }
    Ok(RegimeReport::Outside { exponent })
}

/// `e^{-mu} mu^j / j!`, in the log domain.
pub fn poisson_pmf(mu: f64, j: u64) -> Result<f64> {
    if !mu.is_finite() || mu < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "Poisson mean must be finite and >= 0, got {mu}"
        )));
    }
    if mu == 0.0 {
        return Ok(if j == 0 { 1.0 } else { 0.0 });
    }
    if j == 0 {
        return Ok((-mu).exp());
    }
    Ok((-mu + j as f64 * mu.ln() - ln_factorial(j)).exp())
}

/// `Po(mu)` listed until the remaining mass is certified below `tol`.
pub fn poisson_table(mu: f64, tol: f64) -> Result<PmfTable> {
    let mut masses = vec![poisson_pmf(mu, 0)?];
    loop {
        let j = masses.len() as u64;
        let p = poisson_pmf(mu, j)?;
        // P[X >= j] <= p_j / (1 - mu / (j + 1)) once j + 1 > mu
        let ratio = mu / (j as f64 + 1.0);
        if ratio < 1.0 {
            let tail = p / (1.0 - ratio);
            if tail <= tol {
                return Ok(PmfTable {
                    support_offset: 0,
                    masses,
                    tail_mass_bound: tail,
                });
            }
        }
        masses.push(p);
    }
}

/// Gumbel distribution function `exp(-e^{-(x - mu)/beta})`.
pub fn gumbel_cdf(x: f64, mu: f64, beta: f64) -> Result<f64> {
    if beta.is_nan() || beta <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "beta must be positive, got {beta}"
        )));
    }
    Ok((-(-(x - mu) / beta).exp()).exp())
}

/// Centering threshold `(n/s)(ln n + (M-1) ln ln n - ln (M-1)! + x)` for the
/// `M`-collection limit.
pub fn sh_centering(n: u64, s: u64, collections: u64, x: f64) -> Result<f64> {
    if n < 3 || s == 0 || collections == 0 {
        return Err(Error::InvalidArgument(format!(
            "need n >= 3, s >= 1, M >= 1; got n = {n}, s = {s}, M = {collections}"
        )));
    }
    let nf = n as f64;
    let extra = collections - 1;
    let shift = if extra == 0 {
        0.0
    } else {
        extra as f64 * nf.ln().ln() - ln_factorial(extra)
    };
    Ok(nf / s as f64 * (nf.ln() + shift + x))
}

#[cfg(test)]
mod tests {
    use super::*;

    const G_HALF_AT_ZERO: f64 = 1.332_747_382_432_899_2;

    fn ctl(tol: f64) -> TruncationControl {
        TruncationControl::new(tol, 100_000, 0.0).unwrap()
    }

    #[test]
    fn g_reference_value() {
        let g = eval_g(0.5, 0.0, &ctl(1e-6)).unwrap();
        assert!((g.value - G_HALF_AT_ZERO).abs() <= 1e-6);
        assert!(g.tail_bound <= 1e-6);
        let g = eval_g(0.5, 0.0, &ctl(1e-14)).unwrap();
        assert!((g.value - G_HALF_AT_ZERO).abs() <= 1e-13);
    }

    #[test]
    fn g_rejects_bad_arguments() {
        assert!(eval_g(0.0, 0.2, &ctl(1e-6)).is_err());
        assert!(eval_g(1.0, 0.2, &ctl(1e-6)).is_err());
        assert!(eval_g(0.5, 1.0, &ctl(1e-6)).is_err());
        assert!(eval_g(0.5, -0.1, &ctl(1e-6)).is_err());
        let tiny = TruncationControl::new(1e-12, 5, 0.0).unwrap();
        assert!(matches!(
            eval_g(0.01, 0.0, &tiny),
            Err(Error::SeriesNotConverged { .. })
        ));
    }

    #[test]
    fn g_boundary_increment() {
        for c in [0.01, 0.3, 0.5, 0.7, 0.99] {
            let at0 = eval_g(c, 0.0, &ctl(1e-9)).unwrap().value;
            let at1 = eval_g(c, 1.0 - 1e-6, &ctl(1e-9)).unwrap().value;
            assert!((at1 - at0 - 1.0).abs() <= 1e-4, "c = {c}");
        }
    }

    #[test]
    fn g_tail_bound_is_sound() {
        for c in [0.01, 0.3, 0.5, 0.7, 0.99] {
            for x in [0.0, 0.25, 0.5, 0.75, 0.99] {
                let g = eval_g(c, x, &ctl(1e-6)).unwrap();
                let doubled = eval_g_terms(c, x, 2 * g.terms_used.max(1)).unwrap();
                assert!(
                    (doubled.value - g.value).abs() <= g.tail_bound,
                    "c = {c}, x = {x}"
                );
            }
        }
    }

    #[test]
    fn g_is_nearly_linear_for_small_c() {
        // Slope-one shape: only c close to 1 departs visibly from a line.
        let devs = |c: f64| {
            let xs: Vec<f64> = (0..64).map(|j| j as f64 / 64.0).collect();
            let d: Vec<f64> = xs
                .iter()
                .map(|&x| eval_g(c, x, &ctl(1e-9)).unwrap().value - x)
                .collect();
            let mean = d.iter().sum::<f64>() / d.len() as f64;
            d.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max)
        };
        assert!(devs(0.01) < 1e-9);
        assert!(devs(0.5) < 1e-5);
        assert!(devs(0.99) > 0.1);
    }

    #[test]
    fn const_s_examples() {
        let p = predict_const_s(100, 2).unwrap();
        let h100 = 5.187_377_517_639_621;
        assert!((p.value - 49.75 * h100).abs() < 1e-10);
        assert!((p.value - 258.07).abs() < 0.01);
        for n in [10, 100, 1000, 10_000] {
            let p = predict_const_s(n, 2).unwrap();
            let h = harmonic_value(n);
            assert!((p.terms[1].value + h / 4.0).abs() < 1e-12 * h);
        }
        for s in [2, 3, 5] {
            let p = predict_const_s(1000, s).unwrap();
            let ratio = (p.terms[1].value / p.terms[0].value).abs();
            assert!((ratio - (s as f64 - 1.0) / 2000.0).abs() < 1e-15);
        }
        assert!(predict_const_s(10, 1).is_err());
        assert!(predict_const_s(10, 10).is_err());
    }

    #[test]
    fn ratio_examples() {
        assert!((berend_sher_ratio(4, 2).unwrap() - 25.0 / 7.0).abs() < 1e-15);
        assert_eq!(berend_sher_ratio(2, 1).unwrap(), 3.0);
        for n in [10u64, 1000, 20_000] {
            let expected = harmonic_value(n) * n as f64;
            assert!((berend_sher_ratio(n, 1).unwrap() - expected).abs() < 1e-12 * expected);
        }
        assert!(berend_sher_ratio(3, 3).is_err());
    }

    #[test]
    fn ratio_tracks_two_term_expansion() {
        for s in [2u64, 3, 5] {
            for n in [100u64, 1000, 10_000, 100_000, 1_000_000] {
                let ratio = berend_sher_ratio(n, s).unwrap();
                let p = predict_const_s(n, s).unwrap();
                assert!((ratio - p.value).abs() < 1.0, "n = {n}, s = {s}");
            }
        }
    }

    #[test]
    fn derived_indices_examples() {
        let d = derived_indices(1024, 0.5).unwrap();
        assert_eq!((d.k, d.alpha, d.d), (10, 0.0, 2.0));
        let d = derived_indices(1000, 0.5).unwrap();
        assert_eq!(d.k, 9);
        assert!((d.alpha - 0.965_784_284_662_087).abs() < 1e-12);
        let d = derived_indices(1, 0.3).unwrap();
        assert_eq!((d.k, d.alpha), (0, 0.0));
        for m in 0..63u32 {
            let d = derived_indices(1u64 << m, 0.5).unwrap();
            assert_eq!((d.k, d.alpha), (m as u64, 0.0));
        }
        for m in 0..30u32 {
            let d = derived_indices(10u64.pow(m / 3), 0.9).unwrap();
            assert_eq!((d.k, d.alpha), ((m / 3) as u64, 0.0));
        }
    }

    #[test]
    fn proportional_examples() {
        let c = ctl(1e-10);
        let p = predict_proportional(1024, 0.5, &c).unwrap();
        assert_eq!(p.term("k"), Some(10.0));
        assert!((p.value - (10.0 + G_HALF_AT_ZERO)).abs() < 1e-9);
        let p = predict_proportional(2, 0.5, &c).unwrap();
        assert!((p.value - (1.0 + G_HALF_AT_ZERO)).abs() < 1e-9);
    }

    #[test]
    fn proportional_is_continuous_across_powers() {
        let c = ctl(1e-12);
        for cc in [0.3f64, 0.5, 0.8] {
            let d = 1.0 / (1.0 - cc);
            for m in [3i32, 7, 12] {
                let base = d.powi(m);
                let eps = 1e-7;
                let below = predict_proportional_real(base * (1.0 - eps), cc, &c).unwrap();
                let above = predict_proportional_real(base * (1.0 + eps), cc, &c).unwrap();
                assert!(
                    (above.value - below.value).abs() < 1e-5,
                    "c = {cc}, m = {m}"
                );
                assert_ne!(above.term("k"), below.term("k"));
            }
        }
    }

    #[test]
    fn proportional_self_similarity() {
        let c = ctl(1e-12);
        for n in [3u64, 5, 100, 777] {
            let a = predict_proportional(n, 0.5, &c).unwrap();
            let b = predict_proportional(2 * n, 0.5, &c).unwrap();
            assert!((b.value - a.value - 1.0).abs() < 1e-9, "n = {n}");
        }
    }

    #[test]
    fn near_complete_examples() {
        let (p, z) = predict_near_complete(2, 1.0).unwrap();
        let e1 = (-1.0f64).exp();
        assert!((p.value - (3.0 - e1)).abs() < 1e-15);
        assert!((p.value - 2.63212).abs() < 1e-5);
        assert_eq!(z.support_offset, 2);
        assert!((z.mass(2) - e1).abs() < 1e-16);
        assert!((z.total() - 1.0).abs() < 1e-16);
        let (low, _) = predict_near_complete(3, 1e-6).unwrap();
        assert!((low.value - 3.0).abs() < 1e-12);
        let (high, _) = predict_near_complete(3, 20.0).unwrap();
        assert_eq!(high.value, 4.0);
        assert!(predict_near_complete(1, 1.0).is_err());
        assert!(predict_near_complete(2, -1.0).is_err());
    }

    #[test]
    fn window_examples() {
        assert_eq!(predict_window(2).unwrap().value, 3.0);
        assert_eq!(predict_window(3).unwrap().value, 4.0);
        for t in 2..6 {
            let w = predict_window(t).unwrap().value;
            assert_eq!(predict_near_complete(t, 50.0).unwrap().0.value, w);
            assert!((predict_near_complete(t + 1, 1e-9).unwrap().0.value - w).abs() < 1e-12);
        }
        assert!(predict_window(1).is_err());
    }

    #[test]
    fn classify_examples() {
        let report = classify_regime(
            &Instance::new(1_000_000, 999_000).unwrap(),
            DEFAULT_CLASSIFY_TOL,
            DEFAULT_CLASSIFY_T_MAX,
        )
        .unwrap();
        let RegimeReport::NearCompleteExact { t, lambda, .. } = report else {
            panic!("{report:?}")
        };
        assert_eq!(t, 2);
        assert!((lambda - 1.0).abs() < 1e-12);

        let u = 10f64.powf(3.6).round() as u64;
        let report = classify_regime(
            &Instance::new(1_000_000, 1_000_000 - u).unwrap(),
            DEFAULT_CLASSIFY_TOL,
            DEFAULT_CLASSIFY_T_MAX,
        )
        .unwrap();
        assert!(
            matches!(report, RegimeReport::Window { t: 2, .. }),
            "{report:?}"
        );

        let report = classify_regime(
            &Instance::new(1_000_000, 500_000).unwrap(),
            DEFAULT_CLASSIFY_TOL,
            DEFAULT_CLASSIFY_T_MAX,
        )
        .unwrap();
        let RegimeReport::Outside { exponent } = report else {
            panic!("{report:?}")
        };
        assert!((exponent - 0.95).abs() < 0.01);
    }

    #[test]
    fn poisson_examples() {
        for mu in [0.3, 1.0, 4.5] {
            assert_eq!(poisson_pmf(mu, 0).unwrap(), (-mu).exp());
        }
        assert!((poisson_pmf(1.0, 1).unwrap() - 0.367_879_441_171_442_3).abs() < 1e-16);
        let total: f64 = (0..=50).map(|j| poisson_pmf(1.0, j).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert!(poisson_pmf(-1.0, 0).is_err());
        assert!(poisson_pmf(1e3, 2000).unwrap() > 0.0);
    }

    #[test]
    fn poisson_factorial_moments() {
        use crate::combinatorics::binomial_exact;
        for mu in [0.5f64, 1.0, 2.0] {
            let table = poisson_table(mu, 1e-18).unwrap();
            for r in 0..=5u64 {
                let moment: f64 = table
                    .masses
                    .iter()
                    .enumerate()
                    .map(|(j, p)| {
                        num_traits::ToPrimitive::to_f64(&binomial_exact(j as u64, r as i64))
                            .unwrap()
                            * p
                    })
                    .sum();
                let target = mu.powi(r as i32) / ln_factorial(r).exp();
                assert!((moment - target).abs() < 1e-10, "mu = {mu}, r = {r}");
            }
        }
    }

    #[test]
    fn gumbel_examples() {
        assert!((gumbel_cdf(0.0, 0.0, 1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-16);
        assert!(gumbel_cdf(0.0, 0.0, 0.0).is_err());
        let x = sh_centering(100, 5, 1, 0.0).unwrap();
        assert!((x - 20.0 * 100f64.ln()).abs() < 1e-12);
        assert!((x - 92.103).abs() < 1e-3);
        let a = sh_centering(100, 5, 1, 1.0).unwrap();
        let b = sh_centering(100, 5, 1, 3.0).unwrap();
        assert!(((b - a) / 2.0 - 20.0).abs() < 1e-12);
        // M = 3: ln ln n times two minus ln 2
        let m3 = sh_centering(1000, 1, 3, 0.0).unwrap();
        let l = 1000f64.ln();
        assert!((m3 - 1000.0 * (l + 2.0 * l.ln() - 2f64.ln())).abs() < 1e-9);
        assert!(sh_centering(1000, 1, 50, 0.0).unwrap().is_finite());
        assert!(sh_centering(2, 1, 1, 0.0).is_err());
    }
}
