//! Statistical checks of the samplers against exact laws.

use std::collections::BTreeMap;

use ccgroup::analysis::tv_distance;
use ccgroup::asymptotics::poisson_table;
use ccgroup::exact::{expectation_ie, pmf_of_y};
use ccgroup::montecarlo::{
    run_trials, sample_collection_time, sample_collection_time_naive, trial_stream, SimConfig,
};
use ccgroup::{Instance, TruncationControl};
use num_traits::ToPrimitive;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn inst(n: u64, s: u64) -> Instance {
    Instance::new(n, s).unwrap()
}

fn within_three_se(values: &[u64], target: f64) -> bool {
    let n = values.len() as f64;
    let mean = values.iter().sum::<u64>() as f64 / n;
    let var = values
        .iter()
        .map(|&v| (v as f64 - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    (mean - target).abs() < 3.0 * (var / n).sqrt()
}

#[test]
fn fast_sampler_means() {
    let mut rng = trial_stream(2024, 0);
    let ys: Vec<u64> = (0..1_000_000)
        .map(|_| sample_collection_time(&inst(3, 2), &mut rng))
        .collect();
    assert!(within_three_se(&ys, 2.5));
    let ys: Vec<u64> = (0..1_000_000)
        .map(|_| sample_collection_time(&inst(2, 1), &mut rng))
        .collect();
    assert!(within_three_se(&ys, 3.0));
}

#[test]
fn naive_sampler_completion_at_two() {
    let mut rng = trial_stream(77, 0);
    let trials = 200_000;
    let twos = (0..trials)
        .filter(|_| sample_collection_time_naive(&inst(3, 2), &mut rng) == 2)
        .count() as f64;
    let p = 2.0 / 3.0;
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    assert!((twos / trials as f64 - p).abs() < 3.0 * se);
}

// Two-sample chi-squared homogeneity statistic, pooling sparse cells.
fn chi_squared(a: &BTreeMap<u64, u64>, b: &BTreeMap<u64, u64>) -> (f64, usize) {
    let (na, nb) = (
        a.values().sum::<u64>() as f64,
        b.values().sum::<u64>() as f64,
    );
    let keys: Vec<u64> = a
        .keys()
        .chain(b.keys())
        .copied()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut pending = (0.0, 0.0);
    for k in keys {
        pending.0 += *a.get(&k).unwrap_or(&0) as f64;
        pending.1 += *b.get(&k).unwrap_or(&0) as f64;
        if pending.0 + pending.1 >= 20.0 {
            cells.push(pending);
            pending = (0.0, 0.0);
        }
    }
    if pending.0 + pending.1 > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += pending.0;
                last.1 += pending.1;
            }
            None => cells.push(pending),
        }
    }
    let stat = cells
        .iter()
        .map(|&(x, y)| {
            let pooled = (x + y) / (na + nb);
            (x - na * pooled).powi(2) / (na * pooled) + (y - nb * pooled).powi(2) / (nb * pooled)
        })
        .sum();
    (stat, cells.len() - 1)
}

#[test]
fn fast_and_naive_samplers_agree() {
    let trials = 100_000;
    for (k, (n, s)) in [(3, 2), (4, 2), (5, 3), (10, 4)].into_iter().enumerate() {
        let i = inst(n, s);
        let mut fast = BTreeMap::new();
        let mut naive = BTreeMap::new();
        let mut rng_fast = trial_stream(500 + k as u64, 0);
        let mut rng_naive = trial_stream(900 + k as u64, 0);
        for _ in 0..trials {
            *fast
                .entry(sample_collection_time(&i, &mut rng_fast))
                .or_insert(0) += 1;
            *naive
                .entry(sample_collection_time_naive(&i, &mut rng_naive))
                .or_insert(0) += 1;
        }
        let (stat, df) = chi_squared(&fast, &naive);
        let critical = ChiSquared::new(df as f64).unwrap().inverse_cdf(0.999);
        assert!(
            stat < critical,
            "n={n} s={s}: {stat} >= {critical} (df {df})"
        );
    }
}

#[test]
fn two_sample_distance_small() {
    let i = inst(4, 2);
    let fast = run_trials(&i, &SimConfig::new(100_000, 1)).unwrap();
    let naive = run_trials(
        &i,
        &SimConfig::new(100_000, 2).sampler(ccgroup::montecarlo::Sampler::Naive),
    )
    .unwrap();
    assert!(tv_distance(&fast.empirical_pmf_y, &naive.empirical_pmf_y) < 0.01);
    let exact = pmf_of_y(&i, &TruncationControl::exact(1e-12)).unwrap();
    assert!(tv_distance(&fast.empirical_pmf_y, &exact) < 0.01);
}

#[test]
fn determinism_across_workers() {
    for (n, s, record) in [(20, 3, None), (50, 7, Some(4)), (1000, 990, Some(2))] {
        let i = inst(n, s);
        let mut cfg = SimConfig::new(20_000, 123);
        if let Some(k) = record {
            cfg = cfg.record_k(k);
        }
        let one = run_trials(&i, &cfg.workers(1)).unwrap();
        let four = run_trials(&i, &cfg.workers(4)).unwrap();
        assert!(one.same_estimates(&four));
        assert_eq!(one.mean.to_bits(), four.mean.to_bits());
        assert_eq!(four.worker_count_used, 4);
        let naive_cfg = cfg.sampler(ccgroup::montecarlo::Sampler::Naive);
        let a = run_trials(&i, &naive_cfg.workers(1)).unwrap();
        let b = run_trials(&i, &naive_cfg.workers(3)).unwrap();
        assert!(a.same_estimates(&b));
    }
}

#[test]
fn summary_invariants() {
    let s = run_trials(&inst(30, 4), &SimConfig::new(5_000, 8).workers(2)).unwrap();
    assert!(s.variance >= 0.0);
    assert!(s.ci95.0 <= s.mean && s.mean <= s.ci95.1);
    assert!((s.empirical_pmf_y.total() - 1.0).abs() < 1e-12);
    assert!((s.empirical_pmf_y.mean() - s.mean).abs() < 1e-9);
}

#[test]
fn mean_covers_exact_value() {
    let i = inst(100, 10);
    let exact = expectation_ie(&i).unwrap().to_f64().unwrap();
    let s = run_trials(&i, &SimConfig::new(1_000_000, 31).workers(4)).unwrap();
    assert!(
        s.ci95.0 <= exact && exact <= s.ci95.1,
        "{exact} not in {:?}",
        s.ci95
    );
}

#[test]
fn ci_coverage_rate() {
    let i = inst(20, 3);
    let exact = expectation_ie(&i).unwrap().to_f64().unwrap();
    let covered = (0..200u64)
        .filter(|&run| {
            let s = run_trials(&i, &SimConfig::new(10_000, 10_000 + run).workers(4)).unwrap();
            s.ci95.0 <= exact && exact <= s.ci95.1
        })
        .count();
    assert!(covered >= 180, "covered {covered} of 200");
}

#[test]
fn near_complete_missing_count_is_poisson() {
    let i = inst(10_000, 9_900);
    let s = run_trials(&i, &SimConfig::new(100_000, 4).workers(4).record_k(2)).unwrap();
    let xk = s.empirical_pmf_xk.unwrap();
    assert_eq!(xk.k, 2);
    let tv = tv_distance(&xk.pmf, &poisson_table(1.0, 1e-15).unwrap());
    assert!(tv < 0.02, "tv {tv}");
}
