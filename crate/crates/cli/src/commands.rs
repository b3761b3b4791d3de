use std::fmt::Write as _;

use reclab::bounds::{BoundInputs, BoundKind};
use reclab::engine::{
    entropy_estimate, hitting_time_survival, nonconvergence_sweep, run_comparison,
    simulate_counts_at, BoundReport, EmpiricalDistribution, EntropyReport, ExperimentReport,
    HittingReport, NonconvergenceRow, Target,
};
use reclab::measures::{DecayRate, Measure, MeasureConfig, MeasureModel, PsiValue};
use reclab::recurrence::{
    gap_profile, horizon_cap_from_env, horizon_from_log, horizon_n, kappa, minimal_feasible_lag,
    rho, CylinderContext, RecurrenceSpec, Rho,
};
use reclab::symbolic::{overlap_set, principal_period, Word};
use serde::Serialize;

use crate::args::{Command, Options};
use crate::output::{fmt_f64, Table};
use crate::UsageError;

/// What a command produced, ready for any output format.
pub struct Outcome {
    pub result: serde_json::Value,
    pub table: Table,
    pub text: Option<String>,
}

impl Outcome {
    fn new<T: Serialize>(result: &T, table: Table) -> anyhow::Result<Self> {
        Ok(Outcome {
            result: serde_json::to_value(result)?,
            table,
            text: None,
        })
    }
}

pub fn run(command: &Command, o: &Options) -> anyhow::Result<Outcome> {
    if command.needs_seed() {
        o.seed()?;
    }
    match command {
        Command::Analyze(_) => analyze(o),
        Command::Simulate(_) => simulate(o),
        Command::Compare(_) => compare(o),
        Command::Nonconv(_) => nonconv(o),
        Command::Hitting(_) => hitting(o),
        Command::Entropy(_) => entropy(o),
        Command::Bounds(_) => bounds(o),
    }
}

#[derive(Serialize)]
struct PsiEntry {
    m: usize,
    #[serde(flatten)]
    psi: PsiValue,
}

#[derive(Serialize)]
struct Analysis {
    model: MeasureConfig,
    word: Word,
    d: Vec<u64>,
    t: f64,
    n: usize,
    r: usize,
    period_prefix: Word,
    overlaps: Vec<usize>,
    kappa: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    minimal_lag: Option<u64>,
    rho: Rho,
    prob: f64,
    log_prob: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    horizon: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    horizon_note: Option<String>,
    g: Option<u64>,
    gamma_n: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    decay: Option<DecayRate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    decay_note: Option<String>,
    psi_threshold: f64,
    psi: Vec<PsiEntry>,
}

fn psi_indices(n: usize) -> Vec<usize> {
    let mut m: Vec<usize> = (0..=n.min(8)).collect();
    if n > 8 {
        m.push(n);
    }
    m
}

fn analyze(o: &Options) -> anyhow::Result<Outcome> {
    let model = o.measure()?;
    let word = o.require_word()?.word()?;
    let spec = o.spec()?;
    word.check_alphabet(&model.alphabet())?;
    let n = word.len();
    let r = principal_period(&word);
    let prob = model.cylinder_prob(&word)?;
    let log_prob = model.cylinder_log_prob(&word)?;
    let cap = horizon_cap_from_env()?;
    let horizon = if prob > f64::MIN_POSITIVE {
        horizon_n(prob, &spec, cap)
    } else {
        horizon_from_log(log_prob, &spec, cap)
    };
    let (horizon, horizon_note) = match horizon {
        Ok(h) => (Some(h), None),
        Err(e) if e.is_cap_error() => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let (decay, decay_note) = match model.decay_rate() {
        Ok(d) => (Some(d), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let gaps = gap_profile(&spec, n as u64);
    let threshold = 1.5f64.powf(1.0 / (spec.ell() as f64 + 1.0)) - 1.0;
    let a = Analysis {
        model: model.config(),
        word: word.clone(),
        d: spec.d().to_vec(),
        t: spec.t(),
        n,
        r,
        period_prefix: word.prefix(r)?,
        overlaps: overlap_set(&word).into_iter().collect(),
        kappa: kappa(r as u64, &spec),
        minimal_lag: minimal_feasible_lag(&word, &spec).ok(),
        rho: rho(&model, &word, &spec)?,
        prob,
        log_prob,
        horizon,
        horizon_note,
        g: gaps.g,
        gamma_n: gaps.gamma,
        decay,
        decay_note,
        psi_threshold: threshold,
        psi: psi_indices(n)
            .into_iter()
            .map(|m| PsiEntry {
                m,
                psi: model.psi(m),
            })
            .collect(),
    };

    let mut text = String::new();
    let opt = |v: Option<u64>| v.map_or("∞".to_string(), |x| x.to_string());
    let _ = writeln!(text, "word           {}", a.word);
    let _ = writeln!(text, "n              {}", a.n);
    let _ = writeln!(text, "π(A)           {}  (prefix {})", a.r, a.period_prefix);
    let _ = writeln!(text, "overlaps       {:?}", a.overlaps);
    let _ = writeln!(text, "d              {:?}", a.d);
    let _ = writeln!(text, "κ              {}", a.kappa);
    if let Some(lag) = a.minimal_lag {
        let _ = writeln!(text, "minimal lag    {lag}");
    }
    let _ = writeln!(
        text,
        "ρ_A            {}{}",
        fmt_f64(a.rho.value),
        if a.rho.support_exit {
            "  (periodic extension leaves the support)"
        } else {
            ""
        }
    );
    let _ = writeln!(
        text,
        "P(A)           {}  (ln {})",
        fmt_f64(a.prob),
        fmt_f64(a.log_prob)
    );
    match (&a.horizon, &a.horizon_note) {
        (Some(h), _) => {
            let _ = writeln!(text, "{:<15}{h}", format!("N (t = {})", fmt_f64(a.t)));
        }
        (None, Some(note)) => {
            let _ = writeln!(
                text,
                "{:<15}unavailable: {note}",
                format!("N (t = {})", fmt_f64(a.t))
            );
        }
        _ => {}
    }
    let _ = writeln!(text, "g(n)           {}", opt(a.g));
    let _ = writeln!(text, "γ(n)           {}", a.gamma_n);
    match (&a.decay, &a.decay_note) {
        (Some(d), _) => {
            let _ = writeln!(text, "Γ              {}", fmt_f64(d.gamma));
        }
        (None, Some(note)) => {
            let _ = writeln!(text, "Γ              unavailable: {note}");
        }
        _ => {}
    }
    let _ = writeln!(text, "ψ threshold    {}", fmt_f64(a.psi_threshold));
    for e in &a.psi {
        let _ = writeln!(
            text,
            "ψ_{:<12} {}{}",
            e.m,
            fmt_f64(e.psi.value),
            if e.psi.upper_bound {
                "  (upper bound)"
            } else {
                ""
            }
        );
    }

    let mut table = Table::new(&["quantity", "value"]);
    table.push(["n".into(), a.n.to_string()]);
    table.push(["r".into(), a.r.to_string()]);
    table.push(["kappa".into(), a.kappa.to_string()]);
    table.push(["rho".into(), fmt_f64(a.rho.value)]);
    table.push(["prob".into(), fmt_f64(a.prob)]);
    table.push([
        "horizon".into(),
        a.horizon.map(|h| h.to_string()).unwrap_or_default(),
    ]);
    table.push(["g".into(), opt(a.g)]);
    table.push(["gamma_n".into(), a.gamma_n.to_string()]);
    table.push([
        "decay".into(),
        a.decay.map(|d| fmt_f64(d.gamma)).unwrap_or_default(),
    ]);
    for e in &a.psi {
        table.push([format!("psi_{}", e.m), fmt_f64(e.psi.value)]);
    }

    let mut out = Outcome::new(&a, table)?;
    out.text = Some(text);
    Ok(out)
}

fn counts_table(emp: &EmpiricalDistribution) -> Table {
    let mut table = Table::new(&["k", "count", "frequency"]);
    for (k, c) in &emp.counts {
        table.push([k.to_string(), c.to_string(), fmt_f64(emp.frequency(*k))]);
    }
    table
}

#[derive(Serialize)]
struct Simulation {
    horizon: u64,
    mean: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    context: Option<CylinderContext>,
    empirical: EmpiricalDistribution,
}

fn simulate(o: &Options) -> anyhow::Result<Outcome> {
    let model = o.measure()?;
    let word = o.require_word()?.word()?;
    let spec = o.spec()?;
    let (horizon, context) = match o.horizon {
        Some(h) => (h, None),
        None => {
            let ctx = CylinderContext::new(&model, &word, &spec, horizon_cap_from_env()?)?;
            (ctx.horizon, Some(ctx))
        }
    };
    let emp = simulate_counts_at(&model, &word, &spec, horizon, o.trials(), o.seed()?)?;
    let table = counts_table(&emp);
    Outcome::new(
        &Simulation {
            horizon,
            mean: emp.mean(),
            context,
            empirical: emp,
        },
        table,
    )
}

fn compare(o: &Options) -> anyhow::Result<Outcome> {
    if o.horizon.is_some() {
        return Err(UsageError("--horizon is only accepted by simulate".into()).into());
    }
    let model = o.measure()?;
    let word = o.require_word()?.word()?;
    let spec = o.spec()?;
    let target: Target = o.target.as_deref().unwrap_or("poisson").parse()?;
    let mut report: ExperimentReport =
        run_comparison(&model, &word, &spec, target, o.trials(), o.seed()?)?;
    report.context = Some(CylinderContext::new(
        &model,
        &word,
        &spec,
        horizon_cap_from_env()?,
    )?);
    let emp = &report.empirical;
    let mut table = Table::new(&["k", "empirical", "target"]);
    let top = (emp.max_value() as usize).max(report.target.kmax());
    for k in 0..=top {
        table.push([
            k.to_string(),
            fmt_f64(emp.frequency(k as u64)),
            fmt_f64(report.target.get(k)),
        ]);
    }
    Outcome::new(&report, table)
}

#[derive(Serialize)]
struct Nonconvergence {
    p1: f64,
    t: f64,
    trials: u64,
    seed: u64,
    rows: Vec<NonconvergenceRow>,
}

fn nonconv(o: &Options) -> anyhow::Result<Outcome> {
    let p1 = o.p1.unwrap_or(0.75);
    let t = o.t.unwrap_or(1.0);
    let n_list = o.n_list()?.unwrap_or_else(|| (8..=13).collect());
    let seed = o.seed()?;
    let rows = nonconvergence_sweep(p1, t, &n_list, o.trials(), seed)?;
    let mut table = Table::new(&[
        "n",
        "horizon",
        "theta",
        "predicted",
        "limit_even",
        "limit_odd",
    ]);
    for r in &rows {
        table.push([
            r.n.to_string(),
            r.horizon.to_string(),
            fmt_f64(r.theta),
            fmt_f64(r.predicted),
            fmt_f64(r.limit_even),
            fmt_f64(r.limit_odd),
        ]);
    }
    Outcome::new(
        &Nonconvergence {
            p1,
            t,
            trials: o.trials(),
            seed,
            rows,
        },
        table,
    )
}

fn bound_cells(b: &BoundReport) -> [String; 2] {
    [
        b.value.map(fmt_f64).unwrap_or_default(),
        b.unavailable.clone().unwrap_or_default(),
    ]
}

fn hitting(o: &Options) -> anyhow::Result<Outcome> {
    let model = o.measure()?;
    let word = o.require_word()?.word()?;
    let spec = o.spec()?;
    let grid = o
        .t_grid
        .clone()
        .unwrap_or_else(|| (1..=12).map(|i| i as f64 * 0.25).collect());
    let report: HittingReport =
        hitting_time_survival(&model, &word, &spec, &grid, o.trials(), o.seed()?)?;
    let mut table = Table::new(&["t", "survival", "predicted", "cor25", "cor25_unavailable"]);
    for r in &report.rows {
        let [v, why] = bound_cells(&r.bound);
        table.push([
            fmt_f64(r.t),
            fmt_f64(r.survival),
            fmt_f64(r.predicted),
            v,
            why,
        ]);
    }
    Outcome::new(&report, table)
}

fn entropy(o: &Options) -> anyhow::Result<Outcome> {
    let model = o.measure()?;
    let omega = o.require_word()?.word()?;
    let spec = o.spec()?;
    let n_list = o
        .n_list()?
        .unwrap_or_else(|| (1..=omega.len().min(12)).collect());
    let report: EntropyReport =
        entropy_estimate(&model, &omega, &spec, &n_list, o.trials(), o.seed()?)?;
    let mut table = Table::new(&["n", "mean_log_tau", "mean_residual", "censored"]);
    for r in &report.rows {
        table.push([
            r.n.to_string(),
            fmt_f64(r.mean_log_tau),
            fmt_f64(r.mean_residual),
            r.censored.to_string(),
        ]);
    }
    Outcome::new(&report, table)
}

#[derive(Serialize)]
struct BoundsResult {
    inputs: BoundInputs,
    bounds: Vec<BoundReport>,
}

/// Inputs for the bounds from raw numbers: the uniform binary measure unless overridden.
fn raw_inputs(o: &Options, spec: &RecurrenceSpec) -> anyhow::Result<BoundInputs> {
    let n = match o.n_list()?.as_deref() {
        Some([n]) => *n as u64,
        Some(_) => return Err(UsageError("bounds takes a single --n".into()).into()),
        None => return Err(UsageError("bounds needs --word or --n".into()).into()),
    };
    let r = o.r.unwrap_or(n);
    if r == 0 || r > n {
        return Err(UsageError(format!("--r must lie in 1..={n}")).into());
    }
    let prob_period = o.prob_period.unwrap_or(0.5f64.powi(r as i32));
    let kappa = kappa(r, spec);
    let default_rho = {
        let exponent: u64 = spec.d().iter().map(|d| d * kappa / r).sum();
        prob_period.powf(exponent as f64)
    };
    let psi_0 = o.psi0.unwrap_or(0.0);
    let inputs = BoundInputs {
        n,
        ell: spec.ell() as u64,
        t: spec.t(),
        prob: o.prob.unwrap_or(0.5f64.powi(n as i32)),
        prob_period,
        r,
        d_max: spec.d_max(),
        kappa,
        rho: o.rho.unwrap_or(default_rho),
        psi_0,
        psi_n: o.psin.unwrap_or(psi_0),
        decay: o.decay.unwrap_or(std::f64::consts::LN_2),
        gamma_n: gap_profile(spec, n).gamma,
        iid: !o.not_iid.unwrap_or(false),
    };
    inputs.validate()?;
    Ok(inputs)
}

fn bounds(o: &Options) -> anyhow::Result<Outcome> {
    let spec = o.spec()?;
    let inputs = match o.word_spec()? {
        Some(w) => {
            let raw = [
                o.r.is_some(),
                o.psi0.is_some(),
                o.psin.is_some(),
                o.decay.is_some(),
                o.prob.is_some(),
                o.prob_period.is_some(),
                o.rho.is_some(),
                o.not_iid.is_some(),
            ];
            if raw.iter().any(|x| *x) {
                return Err(
                    UsageError("raw bound inputs cannot be combined with --word".into()).into(),
                );
            }
            let model: Measure = o.measure()?;
            BoundInputs::assemble(&model, &w.word()?, &spec)?
        }
        None => raw_inputs(o, &spec)?,
    };
    let bounds = match &o.preset {
        // A single requested bound propagates its failure so the exit code reflects it.
        Some(p) => {
            let kind: BoundKind = p.parse()?;
            vec![BoundReport::from_result(kind, Ok(kind.evaluate(&inputs)?))]
        }
        None => BoundKind::ALL
            .iter()
            .map(|&k| BoundReport::from_result(k, k.evaluate(&inputs)))
            .collect(),
    };
    let mut table = Table::new(&["bound", "value", "unavailable"]);
    let mut text = String::new();
    for b in &bounds {
        let [v, why] = bound_cells(b);
        let _ = match &b.unavailable {
            None => writeln!(text, "{:<6} {v}", b.name),
            Some(_) => writeln!(text, "{:<6} unavailable: {why}", b.name),
        };
        table.push([b.name.clone(), v, why]);
    }
    let mut out = Outcome::new(&BoundsResult { inputs, bounds }, table)?;
    out.text = Some(text);
    Ok(out)
}
