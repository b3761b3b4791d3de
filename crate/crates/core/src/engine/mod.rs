//! Monte Carlo simulation of `S_N^A`, the exact enumeration oracle and comparison reports.
//!
//! Trial `i` draws its path from the ChaCha8 stream `i` of the generator seeded with the base
//! seed, so results do not depend on how trials are scheduled across threads.

mod exact;
mod experiments;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{BoundInputs, BoundKind};
use crate::distributions::{
    poisson_auto_kmax, poisson_pmf, polya_aeppli_auto_kmax, polya_aeppli_pmf, tv_distance, Pmf,
};
use crate::error::{Error, Result};
use crate::measures::{MeasureModel, PathRng};
use crate::recurrence::{
    hit_at, horizon_cap_from_env, matches_at, CylinderContext, RecurrenceSpec,
};
use crate::symbolic::{Symbol, Word};

pub use exact::{exact_distribution, exact_distribution_with_cap, DEFAULT_EXACT_STATE_CAP};
pub use experiments::{
    entropy_estimate, hitting_time_survival, nonconvergence_sweep, EntropyReport, EntropyRow,
    HittingReport, HittingRow, NonconvergenceRow,
};

/// Confidence level of the Monte Carlo radius.
pub const MC_CONFIDENCE: f64 = 0.99;

/// Generator for trial `trial` under base seed `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> PathRng {
    let mut rng = PathRng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    Ok(())
}

/// Observed law of an integer statistic over independent trials.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    pub counts: BTreeMap<u64, u64>,
    pub trials: u64,
    pub seed: u64,
}

impl EmpiricalDistribution {
    pub fn from_values(values: &[u64], seed: u64) -> Self {
        let mut counts = BTreeMap::new();
        for &v in values {
            *counts.entry(v).or_insert(0) += 1;
        }
        EmpiricalDistribution {
            counts,
            trials: values.len() as u64,
            seed,
        }
    }

    pub fn frequency(&self, value: u64) -> f64 {
        self.counts.get(&value).copied().unwrap_or(0) as f64 / self.trials as f64
    }

    pub fn max_value(&self) -> u64 {
        self.counts.keys().next_back().copied().unwrap_or(0)
    }

    pub fn mean(&self) -> f64 {
        self.counts
            .iter()
            .map(|(v, c)| *v as f64 * *c as f64)
            .sum::<f64>()
            / self.trials as f64
    }

    pub fn to_pmf(&self) -> Result<Pmf> {
        let mut weights = vec![0.0; self.max_value() as usize + 1];
        for (v, c) in &self.counts {
            weights[*v as usize] = *c as f64;
        }
        Pmf::from_weights(&weights)
    }
}

/// Per-trial evaluation with a reusable path buffer; results come back in trial order.
fn run_trials<T, F>(trials: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut Vec<Symbol>) -> T + Sync + Send,
{
    (0..trials)
        .into_par_iter()
        .map_init(Vec::new, |buf, i| f(i, buf))
        .collect()
}

/// `S_N^A` over `trials` fresh paths of length `d_ℓ N + n`, with `N` given explicitly.
pub fn simulate_counts_at<M: MeasureModel + ?Sized>(
    model: &M,
    a: &Word,
    spec: &RecurrenceSpec,
    horizon: u64,
    trials: u64,
    seed: u64,
) -> Result<EmpiricalDistribution> {
    check_trials(trials)?;
    a.check_alphabet(&model.alphabet())?;
    let len = (spec.d_max() * horizon) as usize + a.len();
    let (word, d) = (a.symbols(), spec.d());
    let values = run_trials(trials, |i, buf| {
        buf.clear();
        model.source(trial_rng(seed, i)).extend(buf, len);
        (1..=horizon).filter(|&k| hit_at(buf, word, d, k)).count() as u64
    });
    Ok(EmpiricalDistribution::from_values(&values, seed))
}

/// `S_N^A` with `N = ⌊t P(A)^{−ℓ}⌋` capped by `RECLAB_MAX_HORIZON`.
pub fn simulate_counts<M: MeasureModel + ?Sized>(
    model: &M,
    a: &Word,
    spec: &RecurrenceSpec,
    trials: u64,
    seed: u64,
) -> Result<EmpiricalDistribution> {
    let ctx = CylinderContext::new(model, a, spec, horizon_cap_from_env()?)?;
    simulate_counts_at(model, a, spec, ctx.horizon, trials, seed)
}

/// Least `k ≤ max_k` with `X_k = 1` on a path generated chunk by chunk; stops at the first hit
/// and drops the prefix no longer read by any window.
pub(crate) fn first_hit_streaming<M: MeasureModel + ?Sized>(
    model: &M,
    a: &[Symbol],
    d: &[u64],
    max_k: u64,
    rng: PathRng,
    buf: &mut Vec<Symbol>,
) -> Option<u64> {
    const FIRST_CHUNK: u64 = 256;
    const MAX_CHUNK: u64 = 1 << 16;
    let n = a.len() as u64;
    let (d_min, d_max) = (d[0], *d.last().expect("nonempty"));
    let mut source = model.source(rng);
    buf.clear();
    // buf[j] holds the path symbol at position offset + j
    let mut offset = 0u64;
    let mut k = 1u64;
    let mut chunk = FIRST_CHUNK;
    while k <= max_k {
        let k_end = max_k.min(k + chunk - 1);
        let needed = d_max * k_end + n - offset;
        source.extend(buf, (needed - buf.len() as u64) as usize);
        for kk in k..=k_end {
            let hit = d
                .iter()
                .all(|&di| matches_at(buf, (di * kk - offset) as usize, a));
            if hit {
                return Some(kk);
            }
        }
        k = k_end + 1;
        chunk = (chunk * 2).min(MAX_CHUNK);
        let drop = d_min * k - offset;
        if drop as usize > buf.len() / 2 {
            buf.drain(..drop as usize);
            offset += drop;
        }
    }
    None
}

/// Law the empirical counts are compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Poisson,
    PolyaAeppli,
    Exact,
}

impl std::str::FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poisson" => Ok(Target::Poisson),
            "polya-aeppli" => Ok(Target::PolyaAeppli),
            "exact" => Ok(Target::Exact),
            _ => Err(Error::invalid(format!(
                "unknown target '{s}' (poisson, polya-aeppli, exact)"
            ))),
        }
    }
}

/// A theorem bound evaluated for a report, or the reason it is unavailable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    #[serde(with = "float_or_inf")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub unavailable: Option<String>,
}

impl BoundReport {
    pub fn from_result(kind: BoundKind, r: Result<f64>) -> Self {
        match r {
            Ok(v) => BoundReport {
                name: kind.name().into(),
                value: Some(v),
                unavailable: None,
            },
            Err(e) => BoundReport {
                name: kind.name().into(),
                value: None,
                unavailable: Some(e.to_string()),
            },
        }
    }

    pub fn evaluate<M: MeasureModel + ?Sized>(
        kind: BoundKind,
        model: &M,
        a: &Word,
        spec: &RecurrenceSpec,
    ) -> Self {
        let r = BoundInputs::assemble(model, a, spec).and_then(|x| kind.evaluate(&x));
        BoundReport::from_result(kind, r)
    }
}

/// Serializes `Some(±∞)` as the strings `"inf"` / `"-inf"`, which JSON cannot hold as numbers.
pub mod float_or_inf {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            None => s.serialize_none(),
            Some(x) if x.is_infinite() => s.serialize_str(if *x > 0.0 { "inf" } else { "-inf" }),
            Some(x) => s.serialize_f64(*x),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(match Option::<Repr>::deserialize(d)? {
            None => None,
            Some(Repr::Num(x)) => Some(x),
            Some(Repr::Text(t)) => match t.as_str() {
                "inf" => Some(f64::INFINITY),
                "-inf" => Some(f64::NEG_INFINITY),
                _ => return Err(serde::de::Error::custom(format!("bad float '{t}'"))),
            },
        })
    }
}

/// Empirical law against a target law, with certified and statistical radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub empirical: EmpiricalDistribution,
    pub target: Pmf,
    /// Sup-form total variation between the empirical and target laws.
    pub tv: f64,
    /// Half the target's truncation tail.
    pub tv_radius: f64,
    /// 99% radius for the deviation of the empirical TV from its expectation.
    pub mc_radius: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bound: Option<BoundReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub context: Option<CylinderContext>,
}

/// Per-cell Hoeffding radius `√(ln(2/δ)/(2·trials))` summed over the observed support plus one
/// cell for everything unobserved, clipped at 1.
pub fn mc_radius(emp: &EmpiricalDistribution) -> f64 {
    let delta = 1.0 - MC_CONFIDENCE;
    let cell = ((2.0 / delta).ln() / (2.0 * emp.trials as f64)).sqrt();
    ((emp.counts.len() + 1) as f64 * cell).min(1.0)
}

pub fn compare_to_target(emp: &EmpiricalDistribution, target: &Pmf) -> Result<ExperimentReport> {
    if emp.trials == 0 {
        return Err(Error::invalid("empirical distribution has no trials"));
    }
    let tv = tv_distance(&emp.to_pmf()?, target)?;
    Ok(ExperimentReport {
        empirical: emp.clone(),
        target: target.clone(),
        tv: tv.value,
        tv_radius: tv.radius,
        mc_radius: mc_radius(emp),
        bound: None,
        context: None,
    })
}

/// Simulates `S_N^A`, builds the requested target and attaches the matching theorem bound
/// (Poisson: thm21, Pólya–Aeppli: thm26).
pub fn run_comparison<M: MeasureModel + ?Sized>(
    model: &M,
    a: &Word,
    spec: &RecurrenceSpec,
    target: Target,
    trials: u64,
    seed: u64,
) -> Result<ExperimentReport> {
    let ctx = CylinderContext::new(model, a, spec, horizon_cap_from_env()?)?;
    let emp = simulate_counts_at(model, a, spec, ctx.horizon, trials, seed)?;
    let floor = emp.max_value() as usize;
    let (pmf, bound) = match target {
        Target::Poisson => {
            let k = poisson_auto_kmax(spec.t())?.max(floor);
            (poisson_pmf(spec.t(), k)?, Some(BoundKind::Thm21))
        }
        Target::PolyaAeppli => {
            let rho = ctx.rho.value;
            let k = polya_aeppli_auto_kmax(spec.t(), rho)?.max(floor);
            (polya_aeppli_pmf(spec.t(), rho, k)?, Some(BoundKind::Thm26))
        }
        Target::Exact => (exact_distribution(model, a, spec, ctx.horizon)?, None),
    };
    let mut report = compare_to_target(&emp, &pmf)?;
    report.bound = bound.map(|kind| BoundReport::evaluate(kind, model, a, spec));
    report.context = Some(ctx);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{BernoulliMeasure, Measure};
    use crate::recurrence::count_hits;

    fn spec(d: &[u64], t: f64) -> RecurrenceSpec {
        RecurrenceSpec::new(d.to_vec(), t).unwrap()
    }

    #[test]
    fn deterministic_model_puts_all_mass_at_horizon() {
        let m = BernoulliMeasure::new(vec![0.0, 1.0]).unwrap();
        let emp =
            simulate_counts(&m, &Word::repeat(1, 3).unwrap(), &spec(&[1], 1.0), 50, 1).unwrap();
        assert_eq!(emp.counts.len(), 1);
        assert_eq!(emp.counts[&1], 50);
        let emp =
            simulate_counts(&m, &Word::repeat(1, 3).unwrap(), &spec(&[1, 2], 7.5), 10, 1).unwrap();
        assert_eq!(emp.counts[&7], 10);
    }

    #[test]
    fn same_seed_same_distribution() {
        let m = Measure::uniform(2).unwrap();
        let a = Word::from_digits("101").unwrap();
        let s = spec(&[1, 3], 1.0);
        let x = simulate_counts(&m, &a, &s, 2000, 99).unwrap();
        let y = simulate_counts(&m, &a, &s, 2000, 99).unwrap();
        assert_eq!(x, y);
        assert_ne!(x, simulate_counts(&m, &a, &s, 2000, 100).unwrap());
        assert_eq!(x.counts.values().sum::<u64>(), 2000);
    }

    #[test]
    fn simulated_counts_match_path_evaluator() {
        let m = Measure::uniform(2).unwrap();
        let a = Word::from_digits("11").unwrap();
        let s = spec(&[1, 2], 1.0);
        let emp = simulate_counts_at(&m, &a, &s, 16, 40, 5).unwrap();
        let mut expected = Vec::new();
        for i in 0..40 {
            let mut buf = Vec::new();
            m.source(trial_rng(5, i)).extend(&mut buf, 2 * 16 + 2);
            expected.push(count_hits(&Word::new(buf).unwrap(), &a, &s, 16).unwrap());
        }
        assert_eq!(emp, EmpiricalDistribution::from_values(&expected, 5));
    }

    #[test]
    fn uniform_single_symbol_two_steps() {
        let m = Measure::uniform(2).unwrap();
        let emp = simulate_counts_at(
            &m,
            &Word::from_digits("1").unwrap(),
            &spec(&[1], 1.0),
            2,
            100_000,
            3,
        )
        .unwrap();
        let exact = Pmf::new(vec![0.25, 0.5, 0.25], 0.0).unwrap();
        assert!(compare_to_target(&emp, &exact).unwrap().tv <= 0.01);
    }

    #[test]
    fn streaming_first_hit_agrees_with_full_path() {
        let m = Measure::uniform(2).unwrap();
        for (d, word) in [(&[1u64][..], "1011"), (&[1, 2], "11"), (&[2, 5, 7], "1")] {
            let a = Word::from_digits(word).unwrap();
            let s = spec(d, 1.0);
            for i in 0..200 {
                let max_k = 3000;
                let mut buf = Vec::new();
                let streamed =
                    first_hit_streaming(&m, a.symbols(), d, max_k, trial_rng(8, i), &mut buf);
                let mut path = Vec::new();
                m.source(trial_rng(8, i))
                    .extend(&mut path, (s.d_max() * max_k) as usize + a.len());
                let full =
                    crate::recurrence::hitting_time(&Word::new(path).unwrap(), &a, &s, max_k)
                        .unwrap();
                assert_eq!(streamed, full, "d={d:?} trial {i}");
            }
        }
    }

    #[test]
    fn comparison_report_shape() {
        let emp = EmpiricalDistribution::from_values(&vec![0; 1000], 1);
        let r = compare_to_target(&emp, &poisson_pmf(1.0, 40).unwrap()).unwrap();
        assert!((r.tv - (1.0 - (-1f64).exp())).abs() < 1e-12);
        assert!(r.mc_radius > 0.0 && r.tv_radius >= 0.0);
        let same = Pmf::new(vec![1.0], 0.0).unwrap();
        assert_eq!(compare_to_target(&emp, &same).unwrap().tv, 0.0);
    }

    #[test]
    fn infinite_bounds_serialize_as_text() {
        let b = BoundReport::from_result(BoundKind::Cor25, Ok(f64::INFINITY));
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(s, r#"{"name":"cor25","value":"inf"}"#);
        assert_eq!(serde_json::from_str::<BoundReport>(&s).unwrap(), b);
    }

    #[test]
    fn run_comparison_attaches_bound_and_context() {
        let m: Measure = serde_json::from_str(r#"{"type":"bernoulli","probs":[0.4,0.6]}"#).unwrap();
        let r = run_comparison(
            &m,
            &Word::repeat(1, 10).unwrap(),
            &spec(&[1], 1.0),
            Target::PolyaAeppli,
            2000,
            4,
        )
        .unwrap();
        let ctx = r.context.unwrap();
        assert!((ctx.rho.value - 0.6).abs() < 1e-12);
        assert_eq!(r.bound.unwrap().name, "thm26");
    }
}
