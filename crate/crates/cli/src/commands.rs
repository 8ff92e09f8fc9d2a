use std::io::{self, Write};
use std::time::Instant;

use ccgroup::analysis::{convergence_study, McFallback, StudyConfig};
use ccgroup::asymptotics::{
    classify_regime, eval_g, predict_const_s, predict_near_complete, predict_proportional,
    predict_window, Prediction, RegimeReport, DEFAULT_CLASSIFY_TOL, DEFAULT_CLASSIFY_T_MAX,
};
use ccgroup::exact::{expectation_forward, pmf_of_y, InclusionExclusion, DEFAULT_EXACT_CEILING};
use ccgroup::montecarlo::{run_trials, Sampler, SimConfig};
use ccgroup::{Instance, PmfTable, RegimeSpec, TruncationControl};
use clap::ValueEnum;
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use crate::args::{
    ConvergeArgs, ExactArgs, Format, GtableArgs, PredictArgs, Regime, RegimeArgs, SimulateArgs,
    DEFAULT_MAX_TERMS,
};
use crate::output::{fmt_g17, write_json, write_provenance, Envelope, LongTable};

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(String),
    Io(io::Error),
}

impl From<ccgroup::Error> for Failure {
    fn from(e: ccgroup::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

pub type Outcome = Result<(), Failure>;

fn usage<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

fn control(tol: f64, max_terms: u64) -> Result<TruncationControl, Failure> {
    if !(tol > 0.0 && tol < 1.0) {
        return usage(format!("--tol must lie in (0, 1), got {tol}"));
    }
    let prune = TruncationControl::default().prune_mass.min(tol * 1e-12);
    Ok(TruncationControl::new(tol, max_terms, prune)?)
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn emit(
    envelope: &mut Envelope,
    started: Instant,
    format: Format,
    table: impl FnOnce(&mut io::StdoutLock) -> io::Result<()>,
) -> Outcome {
    envelope.finish(started);
    let mut out = io::stdout().lock();
    match format {
        Format::Json => write_json(&mut out, envelope)?,
        Format::Csv => {
            table(&mut out)?;
            write_provenance(envelope)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn pmf_json(pmf: &PmfTable) -> Value {
    json!({
        "support_offset": pmf.support_offset,
        "masses": pmf.masses,
        "tail_mass_bound": pmf.tail_mass_bound,
    })
}

fn pmf_rows(table: &mut LongTable, name: &str, pmf: &PmfTable) {
    for (i, &p) in pmf.masses.iter().enumerate() {
        table.num(name, pmf.support_offset + i as u64, p);
    }
    table.num(&format!("{name}_tail_bound"), "", pmf.tail_mass_bound);
}

pub fn exact(args: &ExactArgs) -> Outcome {
    let started = Instant::now();
    let inst = Instance::new(args.n, args.s)?;
    let ctl = control(args.tol, args.max_terms)?;
    let mut env = Envelope::new("exact");
    env.param("n", args.n);
    env.param("s", args.s);
    env.param("tol", args.tol);
    env.param("pmf", args.pmf);
    env.param("rational", args.rational);

    let rational = if args.rational {
        Some(InclusionExclusion::with_ceiling(DEFAULT_EXACT_CEILING).expectation(&inst)?)
    } else {
        None
    };
    let summary = expectation_forward(&inst, &ctl)?;
    let pmf = if args.pmf {
        Some(pmf_of_y(&inst, &ctl)?)
    } else {
        None
    };

    let expectation = match &rational {
        Some(r) => Value::String(r.to_string()),
        None => json!(summary.expectation_float),
    };
    let (expectation_float, expectation_error_bound) = match &rational {
        Some(r) => (r.to_f64().unwrap_or(f64::NAN), 0.0),
        None => (summary.expectation_float, summary.truncation_error_bound),
    };
    let mut results = json!({
        "expectation": expectation,
        "expectation_float": expectation_float,
        "expectation_error_bound": expectation_error_bound,
        "survival_error_bound": summary.truncation_error_bound,
        "horizon": summary.horizon,
        "survival": summary.survival,
    });
    if let Some(p) = &pmf {
        results["pmf_y"] = pmf_json(p);
    }
    env.results = results;
    env.provenance
        .tolerances
        .insert("abs_tol".into(), ctl.abs_tol);
    env.provenance
        .tolerances
        .insert("prune_mass".into(), ctl.prune_mass);
    env.provenance.methods.push("forward-recursion".into());
    if rational.is_some() {
        env.provenance.methods.push("inclusion-exclusion".into());
    }

    emit(&mut env, started, args.format, |out| {
        let mut t = LongTable::default();
        match &rational {
            Some(r) => t.text("expectation", "", r),
            None => t.num("expectation", "", expectation_float),
        }
        t.num("expectation_float", "", expectation_float);
        t.num("expectation_error_bound", "", expectation_error_bound);
        t.num("survival_error_bound", "", summary.truncation_error_bound);
        t.text("horizon", "", summary.horizon);
        for (i, &p) in summary.survival.iter().enumerate() {
            t.num("survival", i, p);
        }
        if let Some(p) = &pmf {
            pmf_rows(&mut t, "pmf_y", p);
        }
        t.write(out)
    })
}

pub fn simulate(args: &SimulateArgs) -> Outcome {
    let started = Instant::now();
    let inst = Instance::new(args.n, args.s)?;
    let workers = args.workers.unwrap_or_else(default_workers);
    if workers == 0 {
        return usage("--workers must be at least 1");
    }
    let sampler = if args.naive {
        Sampler::Naive
    } else {
        Sampler::Fast
    };
    let mut cfg = SimConfig::new(args.trials, args.seed)
        .workers(workers)
        .sampler(sampler);
    if let Some(k) = args.record_xk {
        cfg = cfg.record_k(k);
    }
    let summary = run_trials(&inst, &cfg)?;

    let mut env = Envelope::new("simulate");
    env.param("n", args.n);
    env.param("s", args.s);
    env.param("trials", args.trials);
    env.param("seed", args.seed);
    env.param("record_xk", json!(args.record_xk));
    env.param("naive", args.naive);
    let mut results = serde_json::to_value(&summary).expect("summary serializes");
    results["std_error"] = json!(summary.standard_error());
    env.results = results;
    env.provenance.seed = Some(args.seed);
    env.provenance.workers = Some(summary.worker_count_used);
    env.provenance.methods.push(match sampler {
        Sampler::Fast => "hypergeometric-hits".into(),
        Sampler::Naive => "explicit-subsets".into(),
    });

    emit(&mut env, started, args.format, |out| {
        let mut t = LongTable::default();
        t.text("trials", "", summary.trials);
        t.text("seed", "", summary.seed);
        t.num("mean", "", summary.mean);
        t.num("variance", "", summary.variance);
        t.num("std_error", "", summary.standard_error());
        t.num("ci95", "low", summary.ci95.0);
        t.num("ci95", "high", summary.ci95.1);
        pmf_rows(&mut t, "pmf_y", &summary.empirical_pmf_y);
        if let Some(xk) = &summary.empirical_pmf_xk {
            t.text("record_xk", "", xk.k);
            pmf_rows(&mut t, "pmf_xk", &xk.pmf);
        }
        t.write(out)
    })
}

/// Builds the regime, rejecting flags that belong to other regimes.
fn regime_spec(args: &RegimeArgs, allow_s: bool) -> Result<RegimeSpec, Failure> {
    let given = [
        ("--s", args.s.is_some()),
        ("--c", args.c.is_some()),
        ("--t", args.t.is_some()),
        ("--lambda", args.lambda.is_some()),
    ];
    let (needed, name): (&[&str], &str) = match args.regime {
        Regime::ConstS => (&["--s"], "const-s"),
        Regime::Proportional => (&["--c"], "proportional"),
        Regime::NearComplete => (&["--t", "--lambda"], "near-complete"),
        Regime::Window => (&["--t"], "window"),
    };
    for (flag, present) in given {
        let wanted = needed.contains(&flag) || (flag == "--s" && allow_s);
        if present && !wanted {
            return usage(format!("{flag} does not apply to --regime {name}"));
        }
        if !present && needed.contains(&flag) {
            return usage(format!("--regime {name} requires {flag}"));
        }
    }
    Ok(match args.regime {
        Regime::ConstS => RegimeSpec::constant_s(args.s.unwrap())?,
        Regime::Proportional => RegimeSpec::proportional(args.c.unwrap())?,
        Regime::NearComplete => RegimeSpec::near_complete(args.t.unwrap(), args.lambda.unwrap())?,
        Regime::Window => RegimeSpec::window(args.t.unwrap())?,
    })
}

fn regime_params(env: &mut Envelope, args: &RegimeArgs) {
    let name = args
        .regime
        .to_possible_value()
        .expect("regime names are visible");
    env.param("regime", name.get_name());
    if let Some(s) = args.s {
        env.param("s", s);
    }
    if let Some(c) = args.c {
        env.param("c", c);
    }
    if let Some(t) = args.t {
        env.param("t", t);
    }
    if let Some(l) = args.lambda {
        env.param("lambda", l);
    }
}

pub fn predict(args: &PredictArgs) -> Outcome {
    let started = Instant::now();
    let spec = regime_spec(&args.regime, args.classify)?;
    let ctl = control(args.tol, DEFAULT_MAX_TERMS)?;
    let needs_n = matches!(
        spec,
        RegimeSpec::ConstantS { .. } | RegimeSpec::Proportional { .. }
    );
    if needs_n && args.n.is_none() {
        return usage("this regime requires --n");
    }
    if args.classify && args.n.is_none() {
        return usage("--classify requires --n");
    }

    let mut z_table = None;
    let prediction: Prediction = match spec {
        RegimeSpec::ConstantS { s } => predict_const_s(args.n.unwrap(), s)?,
        RegimeSpec::Proportional { c } => predict_proportional(args.n.unwrap(), c, &ctl)?,
        RegimeSpec::NearCompleteExact { t, lambda } => {
            let (p, z) = predict_near_complete(t, lambda)?;
            z_table = Some(z);
            p
        }
        RegimeSpec::NearCompleteWindow { t } => predict_window(t)?,
    };
    let instance = match (args.n, args.regime.s) {
        (Some(n), Some(s)) => Some(Instance::new(n, s)?),
        (Some(n), None) => Some(spec.package_size(n)?),
        _ => None,
    };
    let classification: Option<RegimeReport> = if args.classify {
        let inst = instance.expect("n is present");
        Some(classify_regime(
            &inst,
            DEFAULT_CLASSIFY_TOL,
            DEFAULT_CLASSIFY_T_MAX,
        )?)
    } else {
        None
    };

    let mut env = Envelope::new("predict");
    regime_params(&mut env, &args.regime);
    if let Some(n) = args.n {
        env.param("n", n);
    }
    env.param("classify", args.classify);
    let mut results = json!({
        "prediction": prediction.value,
        "terms": prediction.terms.iter().map(|t| json!({"name": t.name, "value": t.value})).collect::<Vec<_>>(),
        "error_order": prediction.error_order,
    });
    if let Some(inst) = &instance {
        results["instance"] = json!({"n": inst.n(), "s": inst.s()});
    }
    if let Some(z) = &z_table {
        results["limit_law"] = pmf_json(z);
    }
    if let Some(c) = &classification {
        results["classification"] = serde_json::to_value(c).expect("report serializes");
    }
    env.results = results;
    env.provenance
        .tolerances
        .insert("abs_tol".into(), ctl.abs_tol);
    if args.classify {
        env.provenance
            .tolerances
            .insert("classify_tol".into(), DEFAULT_CLASSIFY_TOL);
    }
    env.provenance.methods.push("asymptotic-prediction".into());

    emit(&mut env, started, args.format, |out| {
        let mut t = LongTable::default();
        t.num("prediction", "", prediction.value);
        for term in &prediction.terms {
            t.num("term", &term.name, term.value);
        }
        t.text("error_order", "", &prediction.error_order);
        if let Some(inst) = &instance {
            t.text("instance", "n", inst.n());
            t.text("instance", "s", inst.s());
        }
        if let Some(z) = &z_table {
            pmf_rows(&mut t, "limit_law", z);
        }
        if let Some(report) = &classification {
            let (class, tt, lambda, exponent) = match *report {
                RegimeReport::NearCompleteExact {
                    t,
                    lambda,
                    exponent,
                } => ("near-complete", Some(t), Some(lambda), exponent),
                RegimeReport::Window { t, exponent } => ("window", Some(t), None, exponent),
                RegimeReport::Outside { exponent } => ("outside", None, None, exponent),
            };
            t.text("classification", "class", class);
            if let Some(v) = tt {
                t.text("classification", "t", v);
            }
            if let Some(v) = lambda {
                t.num("classification", "lambda", v);
            }
            t.num("classification", "exponent", exponent);
        }
        t.write(out)
    })
}

pub fn gtable(args: &GtableArgs) -> Outcome {
    let started = Instant::now();
    if let Some(c) = args.c.iter().find(|c| !(**c > 0.0 && **c < 1.0)) {
        return usage(format!("--c values must lie in (0, 1), got {c}"));
    }
    if args.points == 0 {
        return usage("--points must be at least 1");
    }
    let ctl = control(args.tol, DEFAULT_MAX_TERMS)?;
    let mut rows = Vec::with_capacity(args.c.len() * args.points as usize);
    for &c in &args.c {
        for j in 0..args.points {
            rows.push(eval_g(c, j as f64 / args.points as f64, &ctl)?);
        }
    }

    let mut env = Envelope::new("gtable");
    env.param("c", args.c.clone());
    env.param("points", args.points);
    env.param("tol", args.tol);
    env.results = json!({
        "rows": rows.iter().map(|g| json!({"c": g.c, "x": g.x, "g": g.value, "tail_bound": g.tail_bound})).collect::<Vec<_>>(),
    });
    env.provenance
        .tolerances
        .insert("abs_tol".into(), ctl.abs_tol);
    env.provenance.methods.push("g-series".into());

    emit(&mut env, started, args.format, |out| {
        writeln!(out, "c,x,g,tail_bound")?;
        for g in &rows {
            writeln!(
                out,
                "{},{},{},{}",
                fmt_g17(g.c),
                fmt_g17(g.x),
                fmt_g17(g.value),
                fmt_g17(g.tail_bound)
            )?;
        }
        Ok(())
    })
}

pub fn converge(args: &ConvergeArgs) -> Outcome {
    let started = Instant::now();
    let spec = regime_spec(&args.regime, false)?;
    let ctl = control(args.tol, args.max_terms)?;
    let workers = args.workers.unwrap_or_else(default_workers);
    if workers == 0 {
        return usage("--workers must be at least 1");
    }
    if args.n_list.is_empty() {
        return usage("--n-list must not be empty");
    }
    let mut cfg = StudyConfig::new(ctl).exact_rational_limit(DEFAULT_EXACT_CEILING);
    if let (Some(trials), Some(seed)) = (args.trials, args.seed) {
        cfg = cfg.monte_carlo(McFallback {
            trials,
            seed,
            workers,
            cross_check: false,
        });
    }
    let rows = convergence_study(&spec, &args.n_list, &cfg)?;

    let mut env = Envelope::new("converge");
    regime_params(&mut env, &args.regime);
    env.param("n_list", args.n_list.clone());
    env.param("tol", args.tol);
    if let Some(trials) = args.trials {
        env.param("trials", trials);
    }
    env.results = json!({ "rows": rows });
    env.provenance.seed = args.seed;
    env.provenance
        .tolerances
        .insert("abs_tol".into(), ctl.abs_tol);
    env.provenance
        .tolerances
        .insert("prune_mass".into(), ctl.prune_mass);
    let mut methods: Vec<String> = rows
        .iter()
        .map(|r| r.reference_kind.as_str().to_string())
        .collect();
    methods.sort();
    methods.dedup();
    if methods.iter().any(|m| m == "monte-carlo") {
        env.provenance.workers = Some(workers);
    }
    env.provenance.methods = methods;

    emit(&mut env, started, args.format, |out| {
        writeln!(
            out,
            "n,s,reference,reference_kind,prediction,abs_error,tv_distance"
        )?;
        for r in &rows {
            let tv = r
                .extra
                .get("tv_distance")
                .map(|&v| fmt_g17(v))
                .unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.n,
                r.s,
                fmt_g17(r.reference_value),
                r.reference_kind.as_str(),
                fmt_g17(r.prediction),
                fmt_g17(r.abs_error),
                tv
            )?;
        }
        Ok(())
    })
}
