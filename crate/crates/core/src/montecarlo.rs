//! Reproducible simulation of the group-drawing process.
//!
//! Trial `i` draws from its own ChaCha stream keyed by `(seed, i)`, and the
//! per-trial results are merged as integer histograms, so the summary does
//! not depend on how trials are spread over workers.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hypergeom::{hit_mode, hit_support, log_hit_pmf, ratio_down, ratio_up};
use crate::instance::Instance;
use crate::pmf::PmfTable;

/// Two-sided 97.5% standard normal quantile.
const Z_975: f64 = 1.959_963_984_540_054;

// Mode tables are precomputed up to this many coupons.
const MODE_TABLE_LIMIT: u64 = 1 << 22;

fn sample_hits_from_mode<R: Rng + ?Sized>(
    inst: &Instance,
    m: u64,
    mode: u64,
    p_mode: f64,
    rng: &mut R,
) -> u64 {
    let (lo, hi) = hit_support(inst, m);
    let mut u: f64 = rng.random();
    u -= p_mode;
    if u < 0.0 {
        return mode;
    }
    // Inverse CDF over the order mode, mode+1, mode-1, mode+2, ...
    let (mut up, mut p_up) = (mode, p_mode);
    let (mut down, mut p_down) = (mode, p_mode);
    loop {
        let mut live = false;
        if up < hi && p_up > 0.0 {
            p_up *= ratio_up(inst, m, up);
            up += 1;
            u -= p_up;
            if u < 0.0 {
                return up;
            }
            live = true;
        }
        if down > lo && p_down > 0.0 {
            p_down *= ratio_down(inst, m, down);
            down -= 1;
            u -= p_down;
            if u < 0.0 {
                return down;
            }
            live = true;
        }
        if !live {
            // Rounding left a sliver of unit mass unassigned.
            return mode;
        }
    }
}

/// Number of the `m` missing coupons hit by one uniform draw of `s` coupons.
pub fn hypergeom_sample<R: Rng + ?Sized>(m: u64, inst: &Instance, rng: &mut R) -> Result<u64> {
    inst.check_uncollected(m)?;
    let (lo, hi) = hit_support(inst, m);
    if lo == hi {
        return Ok(lo);
    }
    let mode = hit_mode(inst, m);
    let p_mode = log_hit_pmf(inst, m, mode as i64).exp();
    Ok(sample_hits_from_mode(inst, m, mode, p_mode, rng))
}

/// Hit sampler with the mode probabilities cached per `m`.
#[derive(Debug, Clone)]
pub struct HitSampler {
    inst: Instance,
    modes: Option<Vec<(u64, f64)>>,
}

impl HitSampler {
    pub fn new(inst: Instance) -> Self {
        let modes = (inst.n() <= MODE_TABLE_LIMIT).then(|| {
            (0..=inst.n())
                .map(|m| {
                    let mode = hit_mode(&inst, m);
                    (mode, log_hit_pmf(&inst, m, mode as i64).exp())
                })
                .collect()
        });
        HitSampler { inst, modes }
    }

    pub fn instance(&self) -> &Instance {
        &self.inst
    }

    pub fn sample<R: Rng + ?Sized>(&self, m: u64, rng: &mut R) -> u64 {
        let (lo, hi) = hit_support(&self.inst, m);
        if lo == hi {
            return lo;
        }
        let (mode, p_mode) = match &self.modes {
            Some(table) => table[m as usize],
            None => {
                let mode = hit_mode(&self.inst, m);
                (mode, log_hit_pmf(&self.inst, m, mode as i64).exp())
            }
        };
        sample_hits_from_mode(&self.inst, m, mode, p_mode, rng)
    }

    /// Runs one collection; returns `Y` and the missing count after
    /// `record_k` draws when requested.
    pub fn run<R: Rng + ?Sized>(&self, record_k: Option<u64>, rng: &mut R) -> (u64, Option<u64>) {
        let mut m = self.inst.n();
        let mut draws = 0;
        let mut recorded = (record_k == Some(0)).then_some(m);
        while m > 0 {
            m -= self.sample(m, rng);
            draws += 1;
            if record_k == Some(draws) {
                recorded = Some(m);
            }
        }
        (draws, record_k.map(|_| recorded.unwrap_or(0)))
    }
}

/// Collection time, simulating only the missing count.
pub fn sample_collection_time<R: Rng + ?Sized>(inst: &Instance, rng: &mut R) -> u64 {
    let mut m = inst.n();
    let mut draws = 0;
    while m > 0 {
        m -= hypergeom_sample(m, inst, rng).expect("m <= n");
        draws += 1;
    }
    draws
}

/// Coupon-level simulator: each draw is an explicit uniform `s`-subset.
#[derive(Debug, Clone)]
pub struct NaiveCollector {
    inst: Instance,
    deck: Vec<u32>,
    seen: Vec<bool>,
}

impl NaiveCollector {
    pub fn new(inst: Instance) -> Self {
        let n = inst.n() as usize;
        NaiveCollector {
            inst,
            deck: (0..n as u32).collect(),
            seen: vec![false; n],
        }
    }

    pub fn run<R: Rng + ?Sized>(
        &mut self,
        record_k: Option<u64>,
        rng: &mut R,
    ) -> (u64, Option<u64>) {
        let n = self.inst.n() as usize;
        let s = self.inst.s() as usize;
        self.seen.fill(false);
        let mut missing = n as u64;
        let mut draws = 0;
        let mut recorded = (record_k == Some(0)).then_some(missing);
        while missing > 0 {
            // Partial Fisher-Yates: the first s slots become a uniform s-subset.
            for i in 0..s {
                let j = rng.random_range(i..n);
                self.deck.swap(i, j);
                let c = self.deck[i] as usize;
                if !self.seen[c] {
                    self.seen[c] = true;
                    missing -= 1;
                }
            }
            draws += 1;
            if record_k == Some(draws) {
                recorded = Some(missing);
            }
        }
        (draws, record_k.map(|_| recorded.unwrap_or(0)))
    }
}

/// Collection time by explicit subset draws.
pub fn sample_collection_time_naive<R: Rng + ?Sized>(inst: &Instance, rng: &mut R) -> u64 {
    NaiveCollector::new(*inst).run(None, rng).0
}

/// The random stream for trial `index`.
pub fn trial_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampler {
    #[default]
    Fast,
    Naive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
    pub record_k: Option<u64>,
    pub sampler: Sampler,
}

impl SimConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        SimConfig {
            trials,
            seed,
            workers: 1,
            record_k: None,
            sampler: Sampler::Fast,
        }
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn record_k(mut self, k: u64) -> Self {
        self.record_k = Some(k);
        self
    }

    pub fn sampler(mut self, sampler: Sampler) -> Self {
        self.sampler = sampler;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordedPmf {
    pub k: u64,
    pub pmf: PmfTable,
}

/// Monte Carlo estimate of `E[Y]` with empirical laws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSummary {
    pub trials: u64,
    pub seed: u64,
    pub sampler: Sampler,
    pub mean: f64,
    pub variance: f64,
    pub ci95: (f64, f64),
    pub empirical_pmf_y: PmfTable,
    pub empirical_pmf_xk: Option<RecordedPmf>,
    /// Not part of the estimate; excluded from serialized results.
    #[serde(skip)]
    pub worker_count_used: usize,
}

impl SimSummary {
    pub fn standard_error(&self) -> f64 {
        (self.variance / self.trials as f64).sqrt()
    }

    /// Equality of everything except the worker count.
    pub fn same_estimates(&self, other: &SimSummary) -> bool {
        SimSummary {
            worker_count_used: 0,
            ..self.clone()
        } == SimSummary {
            worker_count_used: 0,
            ..other.clone()
        }
    }
}

#[derive(Debug, Default)]
struct Tally {
    y: BTreeMap<u64, u64>,
    xk: BTreeMap<u64, u64>,
}

impl Tally {
    fn record(mut self, (y, xk): (u64, Option<u64>)) -> Self {
        *self.y.entry(y).or_default() += 1;
        if let Some(x) = xk {
            *self.xk.entry(x).or_default() += 1;
        }
        self
    }

    fn merge(mut self, other: Tally) -> Self {
        for (v, c) in other.y {
            *self.y.entry(v).or_default() += c;
        }
        for (v, c) in other.xk {
            *self.xk.entry(v).or_default() += c;
        }
        self
    }
}

fn moments(counts: &BTreeMap<u64, u64>, trials: u64) -> (f64, f64) {
    let mut sum: u128 = 0;
    let mut sum_sq: u128 = 0;
    for (&v, &c) in counts {
        sum += v as u128 * c as u128;
        sum_sq += (v as u128) * (v as u128) * c as u128;
    }
    let t = trials as f64;
    let mean = sum as f64 / t;
    if trials < 2 {
        return (mean, 0.0);
    }
    let variance = match (trials as u128).checked_mul(sum_sq) {
        Some(a) => (a - sum * sum) as f64 / (t * (t - 1.0)),
        None => {
            let centered: f64 = counts
                .iter()
                .map(|(&v, &c)| c as f64 * (v as f64 - mean).powi(2))
                .sum();
            centered / (t - 1.0)
        }
    };
    (mean, variance)
}

/// Runs `cfg.trials` independent collections.
pub fn run_trials(inst: &Instance, cfg: &SimConfig) -> Result<SimSummary> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if cfg.workers == 0 {
        return Err(Error::InvalidArgument("workers must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;

    let tally = pool.install(|| match cfg.sampler {
        Sampler::Fast => {
            let sampler = HitSampler::new(*inst);
            (0..cfg.trials)
                .into_par_iter()
                .fold(Tally::default, |t, i| {
                    let mut rng = trial_stream(cfg.seed, i);
                    t.record(sampler.run(cfg.record_k, &mut rng))
                })
                .reduce(Tally::default, Tally::merge)
        }
        Sampler::Naive => (0..cfg.trials)
            .into_par_iter()
            .fold(
                || (Tally::default(), NaiveCollector::new(*inst)),
                |(t, mut collector), i| {
                    let mut rng = trial_stream(cfg.seed, i);
                    let outcome = collector.run(cfg.record_k, &mut rng);
                    (t.record(outcome), collector)
                },
            )
            .map(|(t, _)| t)
            .reduce(Tally::default, Tally::merge),
    });

    let (mean, variance) = moments(&tally.y, cfg.trials);
    let half = Z_975 * (variance / cfg.trials as f64).sqrt();
    Ok(SimSummary {
        trials: cfg.trials,
        seed: cfg.seed,
        sampler: cfg.sampler,
        mean,
        variance,
        ci95: (mean - half, mean + half),
        empirical_pmf_y: PmfTable::from_counts(&tally.y),
        empirical_pmf_xk: cfg.record_k.map(|k| RecordedPmf {
            k,
            pmf: PmfTable::from_counts(&tally.xk),
        }),
        worker_count_used: cfg.workers,
    })
}
