//! Right-hand sides of the approximation theorems, evaluated exactly as printed.
//!
//! Bounds larger than 1 are returned unchanged.

use serde::{Deserialize, Serialize};

use crate::distributions::wp;
use crate::error::{Error, Result};
use crate::measures::MeasureModel;
use crate::recurrence::{gap_profile, kappa, rho, RecurrenceSpec};
use crate::symbolic::{principal_period, Word};

/// Every symbol that appears in the four bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub n: u64,
    pub ell: u64,
    pub t: f64,
    /// `P(A)`.
    pub prob: f64,
    /// `P(A(π))`, the cylinder of the first `π(A)` symbols.
    pub prob_period: f64,
    /// `π(A)`.
    pub r: u64,
    pub d_max: u64,
    pub kappa: u64,
    pub rho: f64,
    pub psi_0: f64,
    pub psi_n: f64,
    /// Decay rate `Γ`.
    pub decay: f64,
    /// `γ(n)`.
    pub gamma_n: u64,
    pub iid: bool,
}

impl BoundInputs {
    /// Collects the inputs for target word `word` under `model` and the family `spec`.
    pub fn assemble<M: MeasureModel + ?Sized>(
        model: &M,
        word: &Word,
        spec: &RecurrenceSpec,
    ) -> Result<Self> {
        let n = word.len();
        let r = principal_period(word);
        let inputs = BoundInputs {
            n: n as u64,
            ell: spec.ell() as u64,
            t: spec.t(),
            prob: model.cylinder_prob(word)?,
            prob_period: model.cylinder_prob(&word.prefix(r)?)?,
            r: r as u64,
            d_max: spec.d_max(),
            kappa: kappa(r as u64, spec),
            rho: rho(model, word, spec)?.value,
            psi_0: model.psi(0).value,
            psi_n: model.psi(n).value,
            decay: model.decay_rate()?.gamma,
            gamma_n: gap_profile(spec, n as u64).gamma,
            iid: model.is_iid(),
        };
        inputs.validate()?;
        Ok(inputs)
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |p: f64| p > 0.0 && p <= 1.0;
        if !in_unit(self.prob) || !in_unit(self.prob_period) {
            return Err(Error::invalid("probabilities must lie in (0, 1]"));
        }
        if !(self.decay > 0.0) {
            return Err(Error::invalid(format!(
                "decay rate must be positive, got {}",
                self.decay
            )));
        }
        if !(self.psi_n >= 0.0 && self.psi_n <= self.psi_0) {
            return Err(Error::invalid(format!(
                "need 0 ≤ ψ_n ≤ ψ_0, got ψ_n = {}, ψ_0 = {}",
                self.psi_n, self.psi_0
            )));
        }
        if self.n == 0 || self.ell == 0 || self.r == 0 || self.d_max == 0 || self.kappa == 0 {
            return Err(Error::invalid("n, ℓ, r, d_ℓ and κ must be positive"));
        }
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return Err(Error::invalid(format!(
                "t must be nonnegative, got {}",
                self.t
            )));
        }
        Ok(())
    }

    /// `(3/2)^{1/(ℓ+1)} − 1`.
    pub fn psi_threshold(&self) -> f64 {
        1.5f64.powf(1.0 / (self.ell as f64 + 1.0)) - 1.0
    }

    fn check_psi(&self) -> Result<()> {
        let threshold = self.psi_threshold();
        if self.psi_n < threshold {
            Ok(())
        } else {
            Err(Error::HypothesisFailed {
                hypothesis: "ψ_n < (3/2)^{1/(ℓ+1)} − 1",
                value: self.psi_n,
                threshold,
            })
        }
    }

    fn check_length(&self) -> Result<()> {
        let threshold = self.r * (self.d_max + 6);
        if self.n > threshold {
            Ok(())
        } else {
            Err(Error::HypothesisFailed {
                hypothesis: "n > r(d_ℓ + 6)",
                value: self.n as f64,
                threshold: threshold as f64,
            })
        }
    }

    fn mixing_factor(&self) -> f64 {
        (1.0 + self.psi_0).powi(2 * self.ell as i32)
    }
}

/// Poisson approximation of `S_N^A` for general words.
pub fn thm21_bound(x: &BoundInputs) -> Result<f64> {
    x.validate()?;
    x.check_psi()?;
    let (l, n, t, p) = (x.ell as f64, x.n as f64, x.t, x.prob);
    let g = x.gamma_n as f64;
    Ok(16.0 * p * (l * l * n * t + g * (1.0 + 1.0 / t))
        + 6.0 * x.prob_period * t * n * l * l * (1.0 + x.psi_0)
        + 2.0 * wp(2f64.powi(x.ell as i32) * t * x.psi_n + g * p))
}

/// Compound Poisson approximation of `S_N^A`.
pub fn thm23_bound(x: &BoundInputs) -> Result<f64> {
    x.validate()?;
    x.check_psi()?;
    x.check_length()?;
    let (l, n, t, d) = (x.ell as f64, x.n as f64, x.t, x.d_max as f64);
    let decay = (-x.decay * n / 2.0).exp();
    let mix = x.mixing_factor();
    Ok(2f64.powi(2 * x.ell as i32 + 7)
        * mix
        * (d * l * l * n.powi(4) * decay + x.psi_n / (1.0 - (-x.decay).exp()))
        + 2.0
            * wp(10.0 * mix * d * n * n * (t + 1.0) * decay + 2f64.powi(x.ell as i32) * t * x.psi_n))
}

/// Exponential approximation of the hitting-time survival `P{P(A)^ℓ τ_A > t}`.
///
/// Returns `+∞` for `t < 1e-9`, where the `1 + t⁻¹` factor diverges.
pub fn cor25_bound(x: &BoundInputs) -> Result<f64> {
    x.validate()?;
    x.check_psi()?;
    if x.t < 1e-9 {
        return Ok(f64::INFINITY);
    }
    let (l, n, t, d) = (x.ell as f64, x.n as f64, x.t, x.d_max as f64);
    let mix = x.mixing_factor();
    Ok(2f64.powi(2 * x.ell as i32 + 8)
        * mix
        * (t + 1.0)
        * (x.psi_n / (1.0 - (-x.decay).exp())
            + d * l * l * n.powi(4) * (1.0 + 1.0 / t) * (-x.decay * n / (d + 6.0)).exp())
        + 2.0
            * wp(2f64.powi(x.ell as i32) * t * x.psi_n
                + 10.0 * (-x.decay * n / 2.0).exp() * mix * d * n * n * (t + 1.0)))
}

/// Pólya–Aeppli approximation of `S_N^A` under an i.i.d. measure.
pub fn thm26_bound(x: &BoundInputs) -> Result<f64> {
    x.validate()?;
    if !x.iid {
        return Err(Error::WrongModel(
            "this bound holds for i.i.d. (Bernoulli) measures only".into(),
        ));
    }
    x.check_length()?;
    let (l, n, t, d) = (x.ell as f64, x.n as f64, x.t, x.d_max as f64);
    let decay = (-x.decay * n / 2.0).exp();
    let k = x.n / x.r + 1;
    let poisson_term = if t == 0.0 {
        0.0
    } else {
        let ln_fact: f64 = (1..=k).map(|j| (j as f64).ln()).sum();
        (k as f64 * t.ln() - ln_fact).exp()
    };
    Ok(
        2f64.powi(2 * x.ell as i32 + 8) * (t + 1.0) * l * l * d * n.powi(4) * decay
            + 2.0 * wp(12.0 * d * n * n * (t + 1.0) * decay)
            + poisson_term,
    )
}

/// The four printed bounds, addressable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Thm21,
    Thm23,
    Cor25,
    Thm26,
}

impl BoundKind {
    pub const ALL: [BoundKind; 4] = [
        BoundKind::Thm21,
        BoundKind::Thm23,
        BoundKind::Cor25,
        BoundKind::Thm26,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Thm21 => "thm21",
            BoundKind::Thm23 => "thm23",
            BoundKind::Cor25 => "cor25",
            BoundKind::Thm26 => "thm26",
        }
    }

    pub fn evaluate(self, x: &BoundInputs) -> Result<f64> {
        match self {
            BoundKind::Thm21 => thm21_bound(x),
            BoundKind::Thm23 => thm23_bound(x),
            BoundKind::Cor25 => cor25_bound(x),
            BoundKind::Thm26 => thm26_bound(x),
        }
    }
}

impl std::str::FromStr for BoundKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        BoundKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!("unknown bound '{s}' (thm21, thm23, cor25, thm26)"))
            })
    }
}

impl std::fmt::Display for BoundKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
