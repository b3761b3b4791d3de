use serde::{Deserialize, Serialize};

use super::{check_trials, first_hit_streaming, run_trials, trial_rng, BoundReport};
use crate::bounds::{BoundInputs, BoundKind};
use crate::error::{Error, Result};
use crate::measures::{MeasureModel, XorCoupledMeasure};
use crate::recurrence::{horizon_cap_from_env, horizon_n, rho, RecurrenceSpec};
use crate::symbolic::Word;

/// One row of the nonconvergence table for `A = 1^n` under the XOR-coupled measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonconvergenceRow {
    pub n: usize,
    pub horizon: u64,
    /// Empirical `P₀{S_N = 0}`.
    pub theta: f64,
    /// `e^{−t(1 − 2 p1 p0)}` for even `n`, `e^{−t/2}` for odd `n`.
    pub predicted: f64,
    pub limit_even: f64,
    pub limit_odd: f64,
}

/// `θ_n = P₀{S_N^{1^n} = 0}` with `ℓ = 1`, `d = (1)`, estimated from `trials` paths per `n`.
pub fn nonconvergence_sweep(
    p1: f64,
    t: f64,
    n_list: &[usize],
    trials: u64,
    seed: u64,
) -> Result<Vec<NonconvergenceRow>> {
    check_trials(trials)?;
    let model = XorCoupledMeasure::new(p1)?;
    if p1 == 0.5 {
        return Err(Error::DegenerateParameters(
            "p1 = p0 = 1/2 makes the even and odd limits coincide".into(),
        ));
    }
    let spec = RecurrenceSpec::new(vec![1], t)?;
    let cap = horizon_cap_from_env()?;
    let p0 = 1.0 - p1;
    let limit_even = (-t * (1.0 - 2.0 * p1 * p0)).exp();
    let limit_odd = (-t / 2.0).exp();
    n_list
        .iter()
        .map(|&n| {
            let a = Word::repeat(1, n)?;
            let horizon = horizon_n(model.cylinder_prob(&a)?, &spec, cap)?;
            let hits = run_trials(trials, |i, buf| {
                first_hit_streaming(
                    &model,
                    a.symbols(),
                    spec.d(),
                    horizon,
                    trial_rng(seed, i),
                    buf,
                )
                .is_some()
            });
            let zeros = hits.iter().filter(|h| !**h).count();
            Ok(NonconvergenceRow {
                n,
                horizon,
                theta: zeros as f64 / trials as f64,
                predicted: if n % 2 == 0 { limit_even } else { limit_odd },
                limit_even,
                limit_odd,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingRow {
    pub t: f64,
    /// Empirical `P{P(A)^ℓ τ_A > t}`.
    pub survival: f64,
    /// `e^{−(1 − ρ_A) t}`.
    pub predicted: f64,
    pub bound: BoundReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingReport {
    pub rho: f64,
    pub prob: f64,
    /// Largest `k` searched for a hit.
    pub max_k: u64,
    /// Trials without a hit up to `max_k`; they count as survivors at every grid point.
    pub censored: u64,
    pub trials: u64,
    pub seed: u64,
    pub rows: Vec<HittingRow>,
}

impl HittingReport {
    pub fn max_deviation(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.survival - r.predicted).abs())
            .fold(0.0, f64::max)
    }
}

/// Survival of the rescaled hitting time on a grid of `t`, with the exponential prediction and
/// the corresponding bound at each grid point. The intensity in `spec` is not used.
pub fn hitting_time_survival<M: MeasureModel + ?Sized>(
    model: &M,
    a: &Word,
    spec: &RecurrenceSpec,
    t_grid: &[f64],
    trials: u64,
    seed: u64,
) -> Result<HittingReport> {
    check_trials(trials)?;
    if t_grid.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(Error::invalid(
            "t grid values must be finite and nonnegative",
        ));
    }
    let t_max = t_grid.iter().cloned().fold(0.0, f64::max);
    let rho = rho(model, a, spec)?.value;
    let prob = model.cylinder_prob(a)?;
    let cap = horizon_cap_from_env()?;
    let max_k = if t_max > 0.0 {
        horizon_n(prob, &spec.with_t(t_max)?, cap)?
    } else {
        0
    };
    let taus = run_trials(trials, |i, buf| {
        first_hit_streaming(model, a.symbols(), spec.d(), max_k, trial_rng(seed, i), buf)
    });
    let censored = taus.iter().filter(|t| t.is_none()).count() as u64;
    let scale = prob.powi(spec.ell() as i32);
    let inputs = BoundInputs::assemble(model, a, spec);
    let rows = t_grid
        .iter()
        .map(|&t| {
            let survivors = taus
                .iter()
                .filter(|tau| tau.is_none_or(|k| k as f64 * scale > t))
                .count();
            let bound = match &inputs {
                Ok(x) => BoundKind::Cor25.evaluate(&BoundInputs { t, ..x.clone() }),
                Err(e) => Err(e.clone()),
            };
            HittingRow {
                t,
                survival: survivors as f64 / trials as f64,
                predicted: (-(1.0 - rho) * t).exp(),
                bound: BoundReport::from_result(BoundKind::Cor25, bound),
            }
        })
        .collect();
    Ok(HittingReport {
        rho,
        prob,
        max_k,
        censored,
        trials,
        seed,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    pub n: usize,
    /// Mean of `(1/n) ln τ` over uncensored trials.
    pub mean_log_tau: f64,
    /// Mean of `(1/n)(ln τ + ℓ ln P(A_n))` over uncensored trials.
    pub mean_residual: f64,
    pub censored: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    /// Entropy `h` of the shift in nats.
    pub h: f64,
    /// `ℓ h`, the limit of `(1/n) ln τ` implied by the residual tending to 0.
    pub ell_h: f64,
    pub max_k: u64,
    pub trials: u64,
    pub seed: u64,
    pub rows: Vec<EntropyRow>,
}

/// Return-time entropy estimates for the prefixes `A_n` of `omega`; `τ` is searched up to the
/// horizon cap and misses are counted as censored.
pub fn entropy_estimate<M: MeasureModel + ?Sized>(
    model: &M,
    omega: &Word,
    spec: &RecurrenceSpec,
    n_list: &[usize],
    trials: u64,
    seed: u64,
) -> Result<EntropyReport> {
    check_trials(trials)?;
    let h = model
        .entropy()
        .ok_or_else(|| Error::WrongModel("the model has no closed-form entropy".into()))?;
    let max_k = horizon_cap_from_env()?;
    let ell = spec.ell() as f64;
    let rows = n_list
        .iter()
        .map(|&n| {
            if n == 0 || n > omega.len() {
                return Err(Error::invalid(format!(
                    "prefix length {n} must lie in 1..={}",
                    omega.len()
                )));
            }
            let a = omega.prefix(n)?;
            let log_p = model.cylinder_log_prob(&a)?;
            if log_p == f64::NEG_INFINITY {
                return Err(Error::Conditioning(format!("P([{a}]) = 0")));
            }
            let taus = run_trials(trials, |i, buf| {
                first_hit_streaming(model, a.symbols(), spec.d(), max_k, trial_rng(seed, i), buf)
            });
            let logs: Vec<f64> = taus.iter().flatten().map(|&k| (k as f64).ln()).collect();
            let censored = trials - logs.len() as u64;
            let count = logs.len().max(1) as f64;
            let nf = n as f64;
            let mean_log = logs.iter().sum::<f64>() / count / nf;
            let mean_residual = logs.iter().map(|l| (l + ell * log_p) / nf).sum::<f64>() / count;
            Ok(EntropyRow {
                n,
                mean_log_tau: if logs.is_empty() { f64::NAN } else { mean_log },
                mean_residual: if logs.is_empty() {
                    f64::NAN
                } else {
                    mean_residual
                },
                censored,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EntropyReport {
        h,
        ell_h: ell * h,
        max_k,
        trials,
        seed,
        rows,
    })
}
