//! Shift-invariant measures on the sequence space with exact cylinder probabilities.
//!
//! Three families are shipped: i.i.d. (Bernoulli) product measures, stationary Markov chains,
//! and the XOR image `P₀ = S·P` of a binary Bernoulli measure under `(Sω)_n = ω_n ⊕ ω_{n+1}`.

mod bernoulli;
mod markov;
mod xor;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbolic::{Alphabet, Symbol, Word};

pub use bernoulli::BernoulliMeasure;
pub use markov::MarkovMeasure;
pub use xor::XorCoupledMeasure;

/// Random source used for every sampled path.
pub type PathRng = ChaCha8Rng;

/// Cylinders longer than this are evaluated in log space.
pub(crate) const LINEAR_SPACE_MAX_LEN: usize = 50;

/// One value of the ψ-mixing coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiValue {
    pub value: f64,
    /// Set when `value` is a proven upper bound rather than the exact coefficient.
    pub upper_bound: bool,
}

impl PsiValue {
    pub(crate) fn exact(value: f64) -> Self {
        PsiValue {
            value,
            upper_bound: false,
        }
    }
}

/// Cylinder decay rate `Γ` with `max_{|A|=n} P(A) ≤ e^{-Γ n}` for every `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRate {
    pub gamma: f64,
    /// A sharper rate that only holds eventually (or along a subsequence of lengths), if known.
    pub eventual: Option<f64>,
}

/// `ψ_m` for `m = 0..=max_m` together with the decay rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingProfile {
    pub psi: BTreeMap<usize, PsiValue>,
    pub gamma: f64,
}

/// Incremental path generator; successive calls continue the same path.
pub trait SymbolSource {
    fn extend(&mut self, out: &mut Vec<Symbol>, count: usize);
}

/// Law of the symbols at a fixed, strictly increasing set of positions.
pub trait JointLaw {
    /// Probability that position `positions[i]` carries `symbols[i]` for every `i`.
    fn prob(&self, symbols: &[Symbol]) -> f64;
}

/// Contract shared by all shipped measures.
pub trait MeasureModel: Send + Sync {
    fn alphabet(&self) -> Alphabet;

    /// `P([w])`, exact up to floating point.
    fn cylinder_prob(&self, w: &Word) -> Result<f64>;

    /// `ln P([w])`; `-∞` for null cylinders.
    fn cylinder_log_prob(&self, w: &Word) -> Result<f64>;

    /// Joint law of the coordinates at `positions` (strictly increasing).
    fn joint_law<'a>(&'a self, positions: &[u64]) -> Result<Box<dyn JointLaw + 'a>>;

    /// A path generator driven by `rng`.
    fn source<'a>(&'a self, rng: PathRng) -> Box<dyn SymbolSource + 'a>;

    /// `ψ_m = sup_n ψ(F_{0,n}, F_{n+m+1,∞})`.
    fn psi(&self, m: usize) -> PsiValue;

    fn decay_rate(&self) -> Result<DecayRate>;

    /// True when coordinates are i.i.d.
    fn is_iid(&self) -> bool;

    /// Kolmogorov–Sinai entropy in nats, when available in closed form.
    fn entropy(&self) -> Option<f64>;
}

/// A sampled path of the given length, deterministic in `seed`.
pub fn sample_path<M: MeasureModel + ?Sized>(model: &M, length: usize, seed: u64) -> Result<Word> {
    if length < 1 {
        return Err(Error::invalid("path length must be at least 1"));
    }
    let mut out = Vec::with_capacity(length);
    model
        .source(PathRng::seed_from_u64(seed))
        .extend(&mut out, length);
    Word::new(out)
}

pub fn mixing_profile<M: MeasureModel + ?Sized>(model: &M, max_m: usize) -> Result<MixingProfile> {
    Ok(MixingProfile {
        psi: (0..=max_m).map(|m| (m, model.psi(m))).collect(),
        gamma: model.decay_rate()?.gamma,
    })
}

/// Serializable model definition, e.g. `{"type":"xor","p1":0.75}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MeasureConfig {
    Bernoulli { probs: Vec<f64> },
    Markov { transition: Vec<Vec<f64>> },
    Xor { p1: f64 },
}

/// Any of the shipped measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureConfig", into = "MeasureConfig")]
pub enum Measure {
    Bernoulli(BernoulliMeasure),
    Markov(MarkovMeasure),
    Xor(XorCoupledMeasure),
}

impl Measure {
    /// Uniform i.i.d. measure on `size` symbols.
    pub fn uniform(size: u32) -> Result<Self> {
        Ok(Measure::Bernoulli(BernoulliMeasure::uniform(size)?))
    }

    pub fn config(&self) -> MeasureConfig {
        self.clone().into()
    }

    fn inner(&self) -> &dyn MeasureModel {
        match self {
            Measure::Bernoulli(m) => m,
            Measure::Markov(m) => m,
            Measure::Xor(m) => m,
        }
    }
}

impl TryFrom<MeasureConfig> for Measure {
    type Error = Error;

    fn try_from(c: MeasureConfig) -> Result<Self> {
        Ok(match c {
            MeasureConfig::Bernoulli { probs } => Measure::Bernoulli(BernoulliMeasure::new(probs)?),
            MeasureConfig::Markov { transition } => {
                Measure::Markov(MarkovMeasure::new(transition)?)
            }
            MeasureConfig::Xor { p1 } => Measure::Xor(XorCoupledMeasure::new(p1)?),
        })
    }
}

impl From<Measure> for MeasureConfig {
    fn from(m: Measure) -> Self {
        match m {
            Measure::Bernoulli(b) => MeasureConfig::Bernoulli {
                probs: b.probs().to_vec(),
            },
            Measure::Markov(mk) => MeasureConfig::Markov {
                transition: mk.transition_rows(),
            },
            Measure::Xor(x) => MeasureConfig::Xor { p1: x.p1() },
        }
    }
}

impl MeasureModel for Measure {
    fn alphabet(&self) -> Alphabet {
        self.inner().alphabet()
    }
    fn cylinder_prob(&self, w: &Word) -> Result<f64> {
        self.inner().cylinder_prob(w)
    }
    fn cylinder_log_prob(&self, w: &Word) -> Result<f64> {
        self.inner().cylinder_log_prob(w)
    }
    fn joint_law<'a>(&'a self, positions: &[u64]) -> Result<Box<dyn JointLaw + 'a>> {
        self.inner().joint_law(positions)
    }
    fn source<'a>(&'a self, rng: PathRng) -> Box<dyn SymbolSource + 'a> {
        self.inner().source(rng)
    }
    fn psi(&self, m: usize) -> PsiValue {
        self.inner().psi(m)
    }
    fn decay_rate(&self) -> Result<DecayRate> {
        self.inner().decay_rate()
    }
    fn is_iid(&self) -> bool {
        self.inner().is_iid()
    }
    fn entropy(&self) -> Option<f64> {
        self.inner().entropy()
    }
}

// ---- shared helpers -------------------------------------------------------------------------

const U32_SCALE: f64 = 4_294_967_296.0;

/// Cumulative thresholds on the `u32` grid; `pick` maps a uniform `u32` to a symbol.
/// The resolution of 2^-32 per symbol is far below any Monte Carlo error used here.
pub(crate) fn thresholds(probs: &[f64]) -> Vec<u64> {
    let mut acc = 0.0;
    let mut out: Vec<u64> = probs
        .iter()
        .map(|p| {
            acc += p;
            (acc * U32_SCALE).round().min(U32_SCALE) as u64
        })
        .collect();
    *out.last_mut().expect("nonempty") = 1 << 32;
    out
}

#[inline]
pub(crate) fn pick(th: &[u64], u: u32) -> Symbol {
    let u = u as u64;
    // The last threshold is 2^32, so the scan always terminates.
    th.iter()
        .position(|&t| u < t)
        .expect("thresholds end at 2^32") as Symbol
}

pub(crate) fn check_symbols(w: &Word, alphabet: &Alphabet) -> Result<()> {
    w.check_alphabet(alphabet)
}

pub(crate) fn check_positions(positions: &[u64]) -> Result<()> {
    if positions.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::invalid("positions must be strictly increasing"));
    }
    Ok(())
}

pub(crate) fn check_probability_vector(probs: &[f64], what: &str) -> Result<()> {
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::invalid(format!(
            "{what}: entries must be finite and ≥ 0"
        )));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "{what}: entries sum to {sum}, not 1"
        )));
    }
    Ok(())
}

/// `ln(e^a + e^b)` with `-∞` handled.
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}
