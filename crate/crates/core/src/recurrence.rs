//! The linear recurrence family `q_i(k) = d_i k`, the cluster quantities `κ` and `ρ_A`, the
//! horizon `N`, the gap functions `g`, `γ`, and the path evaluators `S_N^A` and `τ_A`.
//!
//! Paths are 0-based. `X_k` reads the windows starting at `d_i k` for `k ≥ 1`.

use std::collections::HashMap;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::MeasureModel;
use crate::symbolic::{overlap_set, periodic_extension, principal_period, Symbol, Word};

/// Default cap on the horizon `N`.
pub const DEFAULT_MAX_HORIZON: u64 = 100_000_000;

/// Environment variable overriding [`DEFAULT_MAX_HORIZON`].
pub const MAX_HORIZON_ENV: &str = "RECLAB_MAX_HORIZON";

/// The horizon cap, read from `RECLAB_MAX_HORIZON` when set (integer or float notation).
pub fn horizon_cap_from_env() -> Result<u64> {
    match std::env::var(MAX_HORIZON_ENV) {
        Err(_) => Ok(DEFAULT_MAX_HORIZON),
        Ok(raw) => {
            let v: f64 = raw.trim().parse().map_err(|_| {
                Error::invalid(format!("{MAX_HORIZON_ENV} must be a number, got '{raw}'"))
            })?;
            if !(v >= 1.0 && v.is_finite()) {
                return Err(Error::invalid(format!(
                    "{MAX_HORIZON_ENV} must be at least 1"
                )));
            }
            Ok(v as u64)
        }
    }
}

/// `ℓ` strictly increasing multipliers `1 ≤ d_1 < … < d_ℓ` and the intensity `t > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct RecurrenceSpec {
    d: Vec<u64>,
    t: f64,
}

#[derive(Deserialize)]
struct RawSpec {
    d: Vec<u64>,
    t: f64,
}

impl TryFrom<RawSpec> for RecurrenceSpec {
    type Error = Error;
    fn try_from(r: RawSpec) -> Result<Self> {
        RecurrenceSpec::new(r.d, r.t)
    }
}

impl RecurrenceSpec {
    pub fn new(d: Vec<u64>, t: f64) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::invalid("need at least one multiplier d_i"));
        }
        if d[0] < 1 || d.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(format!(
                "multipliers must satisfy 1 ≤ d_1 < … < d_ℓ, got {d:?}"
            )));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invalid(format!(
                "intensity t must be positive, got {t}"
            )));
        }
        Ok(RecurrenceSpec { d, t })
    }

    pub fn ell(&self) -> usize {
        self.d.len()
    }

    pub fn d(&self) -> &[u64] {
        &self.d
    }

    pub fn d_max(&self) -> u64 {
        *self.d.last().expect("nonempty")
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Same multipliers with a different intensity.
    pub fn with_t(&self, t: f64) -> Result<Self> {
        RecurrenceSpec::new(self.d.clone(), t)
    }

    /// `min_i (d_{i+1} − d_i)`, or `None` when `ℓ = 1`.
    fn min_gap(&self) -> Option<u64> {
        self.d.windows(2).map(|w| w[1] - w[0]).min()
    }
}

/// `κ = lcm{ r / gcd(r, d_i) : 1 ≤ i ≤ ℓ }`.
pub fn kappa(r: u64, spec: &RecurrenceSpec) -> u64 {
    spec.d
        .iter()
        .map(|&d| r / r.gcd(&d))
        .fold(1, |acc, x| acc.lcm(&x))
}

/// Least lag `l ∈ {1,…,n}` for which `{X_m = 1, X_{m+l} = 1}` is nonempty on the full shift,
/// found by placing all `2ℓ` windows symbol by symbol and looking for conflicts.
///
/// Requires `n ≥ r(d_ℓ + 1)` with `r = π(A)`. Uses `m = 2 d_ℓ n + 1`.
pub fn minimal_feasible_lag(a: &Word, spec: &RecurrenceSpec) -> Result<u64> {
    let n = a.len() as u64;
    let r = principal_period(a) as u64;
    let required = r * (spec.d_max() + 1);
    if n < required {
        return Err(Error::Precondition(format!(
            "minimal_feasible_lag needs n ≥ π(A)(d_ℓ + 1) = {required}, got n = {n}"
        )));
    }
    let m = 2 * spec.d_max() * n + 1;
    let symbols = a.symbols();
    let feasible = |l: u64| {
        let mut placed: HashMap<u64, Symbol> = HashMap::new();
        for k in [m, m + l] {
            for &d in spec.d() {
                let start = d * k;
                for (j, &s) in symbols.iter().enumerate() {
                    match placed.insert(start + j as u64, s) {
                        Some(prev) if prev != s => return false,
                        _ => {}
                    }
                }
            }
        }
        true
    };
    Ok((1..=n).find(|&l| feasible(l)).unwrap_or(n))
}

/// `ρ_A = Π_i P(R^{(n + d_i κ)/r} | A)` together with a support-exit flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rho {
    pub value: f64,
    /// Set when some extension `R^{(n + d_i κ)/r}` is a null cylinder although `P(A) > 0`.
    pub support_exit: bool,
}

pub fn rho<M: MeasureModel + ?Sized>(model: &M, a: &Word, spec: &RecurrenceSpec) -> Result<Rho> {
    let log_pa = model.cylinder_log_prob(a)?;
    if log_pa == f64::NEG_INFINITY {
        return Err(Error::Conditioning(format!("P([{a}]) = 0")));
    }
    let r = principal_period(a);
    let base = a.prefix(r)?;
    let k = kappa(r as u64, spec);
    let mut log_rho = 0.0;
    let mut support_exit = false;
    for &d in spec.d() {
        let ext = periodic_extension(&base, a.len() + (d * k) as usize)?;
        let lp = model.cylinder_log_prob(&ext)?;
        if lp == f64::NEG_INFINITY {
            support_exit = true;
        }
        log_rho += lp - log_pa;
    }
    Ok(Rho {
        value: log_rho.exp().min(1.0),
        support_exit,
    })
}

/// `N = ⌊t · P(A)^{-ℓ}⌋`, refusing horizons above `cap`.
pub fn horizon_n(prob: f64, spec: &RecurrenceSpec, cap: u64) -> Result<u64> {
    if !(prob > 0.0 && prob <= 1.0) {
        return Err(Error::invalid(format!(
            "probability must lie in (0, 1], got {prob}"
        )));
    }
    let x = spec.t / prob.powi(spec.ell() as i32);
    if !x.is_finite() || x.floor() > cap as f64 {
        return horizon_from_log(prob.ln(), spec, cap);
    }
    Ok(x.floor() as u64)
}

/// [`horizon_n`] from `ln P(A)`, usable when `P(A)` underflows.
pub fn horizon_from_log(log_prob: f64, spec: &RecurrenceSpec, cap: u64) -> Result<u64> {
    let ell = spec.ell() as f64;
    let log_n = spec.t.ln() - ell * log_prob;
    if log_n > (cap as f64).ln() + 1e-9 {
        return Err(Error::HorizonTooLarge {
            horizon: log_n.exp(),
            cap,
        });
    }
    let x = spec.t / log_prob.exp().powi(spec.ell() as i32);
    let n = x.floor();
    if n > cap as f64 {
        return Err(Error::HorizonTooLarge { horizon: x, cap });
    }
    Ok(n as u64)
}

/// `(g(n), γ(n))`; `g = None` encodes `+∞` (the `ℓ = 1` convention, where `γ ≡ 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapProfile {
    pub g: Option<u64>,
    pub gamma: u64,
}

pub fn gap_profile(spec: &RecurrenceSpec, n: u64) -> GapProfile {
    match spec.min_gap() {
        None => GapProfile { g: None, gamma: 0 },
        Some(delta) => GapProfile {
            g: Some(n * delta),
            gamma: (2 * n).div_ceil(delta),
        },
    }
}

/// `γ(n) = min{k ≥ 0 : g(k) ≥ 2n}` for a caller-supplied nondecreasing gap function
/// (`None` meaning `+∞`), searching `k ≤ max_k`.
pub fn gamma_from_gap<F>(g: F, n: u64, max_k: u64) -> Option<u64>
where
    F: Fn(u64) -> Option<u64>,
{
    (0..=max_k).find(|&k| g(k).is_none_or(|v| v >= 2 * n))
}

fn check_path_len(path: &Word, needed: u64) -> Result<()> {
    if (path.len() as u64) < needed {
        return Err(Error::invalid(format!(
            "path has length {} but at least {needed} symbols are needed",
            path.len()
        )));
    }
    Ok(())
}

/// `X_k = Π_i 1_A(T^{d_i k} ω)` on a raw symbol slice long enough for every window.
#[inline]
pub(crate) fn hit_at(path: &[Symbol], a: &[Symbol], d: &[u64], k: u64) -> bool {
    d.iter().all(|&di| matches_at(path, (di * k) as usize, a))
}

/// `path[start..start + a.len()] == a`, written as an early-exit loop (most windows fail on
/// their first symbol).
#[inline]
pub(crate) fn matches_at(path: &[Symbol], start: usize, a: &[Symbol]) -> bool {
    let window = &path[start..start + a.len()];
    window.iter().zip(a).all(|(x, y)| x == y)
}

/// Minimal path length for evaluating `X_1, …, X_k`.
pub fn required_path_len(a: &Word, spec: &RecurrenceSpec, k: u64) -> u64 {
    spec.d_max() * k + a.len() as u64
}

/// `S_N^A(ω) = Σ_{k=1}^N X_k`.
pub fn count_hits(path: &Word, a: &Word, spec: &RecurrenceSpec, n_horizon: u64) -> Result<u64> {
    check_path_len(path, required_path_len(a, spec, n_horizon))?;
    Ok((1..=n_horizon)
        .filter(|&k| hit_at(path.symbols(), a.symbols(), spec.d(), k))
        .count() as u64)
}

/// `τ_A(ω) = min{k ≥ 1 : X_k = 1}`, searched up to `max_k`.
pub fn hitting_time(
    path: &Word,
    a: &Word,
    spec: &RecurrenceSpec,
    max_k: u64,
) -> Result<Option<u64>> {
    check_path_len(path, required_path_len(a, spec, max_k))?;
    Ok((1..=max_k).find(|&k| hit_at(path.symbols(), a.symbols(), spec.d(), k)))
}

/// All derived quantities of a target cylinder under a model and recurrence family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderContext {
    pub word: Word,
    pub n: usize,
    pub r: usize,
    pub period_prefix: Word,
    pub kappa: u64,
    pub rho: Rho,
    pub prob: f64,
    pub log_prob: f64,
    pub horizon: u64,
}

impl CylinderContext {
    pub fn new<M: MeasureModel + ?Sized>(
        model: &M,
        word: &Word,
        spec: &RecurrenceSpec,
        cap: u64,
    ) -> Result<Self> {
        let r = principal_period(word);
        let rho = rho(model, word, spec)?;
        let log_prob = model.cylinder_log_prob(word)?;
        let prob = model.cylinder_prob(word)?;
        let horizon = if prob > f64::MIN_POSITIVE {
            horizon_n(prob, spec, cap)?
        } else {
            horizon_from_log(log_prob, spec, cap)?
        };
        Ok(CylinderContext {
            word: word.clone(),
            n: word.len(),
            r,
            period_prefix: word.prefix(r)?,
            kappa: kappa(r as u64, spec),
            rho,
            prob,
            log_prob,
            horizon,
        })
    }

    pub fn overlaps(&self) -> Vec<usize> {
        overlap_set(&self.word).into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{Measure, XorCoupledMeasure};

    fn spec(d: &[u64]) -> RecurrenceSpec {
        RecurrenceSpec::new(d.to_vec(), 1.0).unwrap()
    }

    fn w(s: &str) -> Word {
        Word::from_digits(s).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(RecurrenceSpec::new(vec![], 1.0).is_err());
        assert!(RecurrenceSpec::new(vec![0, 1], 1.0).is_err());
        assert!(RecurrenceSpec::new(vec![2, 2], 1.0).is_err());
        assert!(RecurrenceSpec::new(vec![1, 2], 0.0).is_err());
        let s: RecurrenceSpec = serde_json::from_str(r#"{"d":[1,2],"t":1.0}"#).unwrap();
        assert_eq!(s.ell(), 2);
        assert!(serde_json::from_str::<RecurrenceSpec>(r#"{"d":[2,1],"t":1.0}"#).is_err());
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa(1, &spec(&[1, 2, 5])), 1);
        assert_eq!(kappa(2, &spec(&[1, 2])), 2);
        assert_eq!(kappa(6, &spec(&[2, 3])), 6);
    }

    #[test]
    fn kappa_properties() {
        for r in 1..=30u64 {
            for d in [&[1, 2][..], &[1, 3], &[2, 3], &[1, 2, 3], &[4, 6, 9]] {
                let k = kappa(r, &spec(d));
                assert!(k >= 1 && k <= r);
                assert!(d.iter().all(|&di| (di * k).is_multiple_of(r)));
            }
        }
    }

    #[test]
    fn minimal_lag_examples() {
        assert_eq!(
            minimal_feasible_lag(&w("11111111"), &spec(&[1, 2])).unwrap(),
            1
        );
        assert_eq!(
            minimal_feasible_lag(&w("10101010"), &spec(&[1, 2])).unwrap(),
            2
        );
        assert_eq!(
            minimal_feasible_lag(&w("10101010"), &spec(&[1, 3])).unwrap(),
            2
        );
        let err = minimal_feasible_lag(&w("100"), &spec(&[1, 2])).unwrap_err();
        assert!(matches!(err, Error::Precondition(ref m) if m.contains("9")));
    }

    #[test]
    fn rho_examples() {
        let b: Measure = serde_json::from_str(r#"{"type":"bernoulli","probs":[0.4,0.6]}"#).unwrap();
        let r = rho(&b, &Word::repeat(1, 10).unwrap(), &spec(&[1])).unwrap();
        assert!((r.value - 0.6).abs() < 1e-12);
        assert!(!r.support_exit);

        let x = XorCoupledMeasure::new(0.75).unwrap();
        for n in [2, 8, 10, 40] {
            let r = rho(&x, &Word::repeat(1, n).unwrap(), &spec(&[1])).unwrap();
            assert!((r.value - 0.375).abs() < 1e-12, "n={n}");
        }
        for n in [1, 9, 13, 41] {
            let r = rho(&x, &Word::repeat(1, n).unwrap(), &spec(&[1])).unwrap();
            assert!((r.value - 0.5).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn rho_of_null_cylinder_is_a_conditioning_error() {
        let m: Measure =
            serde_json::from_str(r#"{"type":"markov","transition":[[0.5,0.5],[1.0,0.0]]}"#)
                .unwrap();
        assert!(matches!(
            rho(&m, &w("011"), &spec(&[1])),
            Err(Error::Conditioning(_))
        ));
    }

    #[test]
    fn rho_flags_support_exit() {
        // 2 → 1 is forbidden, so [12] extends to the null cylinder [121]
        let m: Measure = serde_json::from_str(
            r#"{"type":"markov","transition":[[0.5,0.5,0.0],[0.0,0.5,0.5],[1.0,0.0,0.0]]}"#,
        )
        .unwrap();
        let r = rho(&m, &w("12"), &spec(&[1])).unwrap();
        assert!(r.support_exit);
        assert_eq!(r.value, 0.0);
        let r = rho(&m, &w("0120"), &spec(&[1])).unwrap();
        assert!(!r.support_exit && r.value > 0.0);
    }

    #[test]
    fn horizon_examples() {
        assert_eq!(
            horizon_n(0.5, &spec(&[1, 2]), DEFAULT_MAX_HORIZON).unwrap(),
            4
        );
        let s = RecurrenceSpec::new(vec![1], 0.5).unwrap();
        assert_eq!(horizon_n(0.1, &s, DEFAULT_MAX_HORIZON).unwrap(), 5);
        assert!(matches!(
            horizon_n(2f64.powi(-40), &spec(&[1, 2]), DEFAULT_MAX_HORIZON),
            Err(Error::HorizonTooLarge { .. })
        ));
        assert_eq!(
            horizon_n(2f64.powi(-12), &spec(&[1]), DEFAULT_MAX_HORIZON).unwrap(),
            4096
        );
        assert!(horizon_n(0.0, &spec(&[1]), DEFAULT_MAX_HORIZON).is_err());
    }

    #[test]
    fn gap_examples() {
        assert_eq!(
            gap_profile(&spec(&[1, 2]), 7),
            GapProfile {
                g: Some(7),
                gamma: 14
            }
        );
        assert_eq!(
            gap_profile(&spec(&[2, 5]), 6),
            GapProfile {
                g: Some(18),
                gamma: 4
            }
        );
        assert_eq!(
            gap_profile(&spec(&[3]), 6),
            GapProfile { g: None, gamma: 0 }
        );
        // the callback form agrees with the closed form on linear families
        for d in [&[1, 2][..], &[2, 5], &[1, 4, 6]] {
            let s = spec(d);
            let delta = d.windows(2).map(|w| w[1] - w[0]).min().unwrap();
            for n in 1..20 {
                let g = gamma_from_gap(|k| Some(k * delta), n, 1000).unwrap();
                assert_eq!(g, gap_profile(&s, n).gamma);
            }
        }
        assert_eq!(gamma_from_gap(|_| None, 5, 10), Some(0));
    }

    #[test]
    fn count_examples() {
        let ones = Word::repeat(1, 10).unwrap();
        assert_eq!(count_hits(&ones, &w("1"), &spec(&[1, 2]), 3).unwrap(), 3);
        let path = w("0110100");
        // X_1 = ω_1 ω_2 = 1, X_2 = ω_2 ω_4 = 1
        assert_eq!(count_hits(&path, &w("1"), &spec(&[1, 2]), 2).unwrap(), 2);
        assert_eq!(count_hits(&path, &w("1"), &spec(&[1, 2]), 0).unwrap(), 0);
        let err = count_hits(&w("0110"), &w("1"), &spec(&[1, 2]), 2).unwrap_err();
        assert!(err.to_string().contains('5'));
    }

    #[test]
    fn hitting_examples() {
        let ones = Word::repeat(1, 10).unwrap();
        assert_eq!(
            hitting_time(&ones, &w("1"), &spec(&[1]), 5).unwrap(),
            Some(1)
        );
        assert_eq!(
            hitting_time(&w("00010"), &w("1"), &spec(&[1]), 3).unwrap(),
            Some(3)
        );
        let zeros = Word::repeat(0, 60).unwrap();
        assert_eq!(
            hitting_time(&zeros, &w("1"), &spec(&[1]), 50).unwrap(),
            None
        );
        assert!(hitting_time(&zeros, &w("1"), &spec(&[1]), 60).is_err());
    }

    #[test]
    fn context_fields() {
        let m = Measure::uniform(2).unwrap();
        let ctx = CylinderContext::new(
            &m,
            &Word::repeat(1, 10).unwrap(),
            &spec(&[1, 2]),
            DEFAULT_MAX_HORIZON,
        )
        .unwrap();
        assert_eq!(ctx.r, 1);
        assert_eq!(ctx.kappa, 1);
        assert_eq!(ctx.horizon, 1 << 20);
        // ρ = P(1)^{k0} with k0 = (κ/r)(d_1 + d_2) = 3
        assert!((ctx.rho.value - 0.125).abs() < 1e-12);
    }
}
