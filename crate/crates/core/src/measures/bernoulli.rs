use rand::RngCore;

use super::{
    check_positions, check_probability_vector, check_symbols, pick, thresholds, DecayRate,
    JointLaw, MeasureModel, PathRng, PsiValue, SymbolSource, LINEAR_SPACE_MAX_LEN,
};
use crate::error::{Error, Result};
use crate::symbolic::{Alphabet, Symbol, Word};

/// Product measure with i.i.d. coordinates of law `probs`.
///
/// Zero entries are admitted so that degenerate (deterministic) models can be simulated; such
/// a model has no positive decay rate.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliMeasure {
    probs: Vec<f64>,
    thresholds: Vec<u64>,
}

impl BernoulliMeasure {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::invalid(
                "a Bernoulli measure needs at least two symbols",
            ));
        }
        check_probability_vector(&probs, "Bernoulli probabilities")?;
        let thresholds = thresholds(&probs);
        Ok(BernoulliMeasure { probs, thresholds })
    }

    pub fn uniform(size: u32) -> Result<Self> {
        Alphabet::finite(size)?;
        BernoulliMeasure::new(vec![1.0 / size as f64; size as usize])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

struct Marginals<'a>(&'a [f64]);

impl JointLaw for Marginals<'_> {
    fn prob(&self, symbols: &[Symbol]) -> f64 {
        symbols.iter().map(|&s| self.0[s as usize]).product()
    }
}

struct IidSource<'a> {
    thresholds: &'a [u64],
    rng: PathRng,
}

impl SymbolSource for IidSource<'_> {
    fn extend(&mut self, out: &mut Vec<Symbol>, count: usize) {
        let start = out.len();
        out.resize(start + count, 0);
        let slots = &mut out[start..];
        if let [t0, _] = self.thresholds {
            let t0 = *t0;
            for slot in slots {
                *slot = ((self.rng.next_u32() as u64) >= t0) as Symbol;
            }
        } else {
            for slot in slots {
                *slot = pick(self.thresholds, self.rng.next_u32());
            }
        }
    }
}

impl MeasureModel for BernoulliMeasure {
    fn alphabet(&self) -> Alphabet {
        Alphabet::Finite(self.probs.len() as u32)
    }

    fn cylinder_prob(&self, w: &Word) -> Result<f64> {
        check_symbols(w, &self.alphabet())?;
        if w.len() > LINEAR_SPACE_MAX_LEN {
            return Ok(self.cylinder_log_prob(w)?.exp());
        }
        Ok(w.symbols()
            .iter()
            .map(|&s| self.probs[s as usize])
            .product())
    }

    fn cylinder_log_prob(&self, w: &Word) -> Result<f64> {
        check_symbols(w, &self.alphabet())?;
        Ok(w.symbols()
            .iter()
            .map(|&s| self.probs[s as usize].ln())
            .sum())
    }

    fn joint_law<'a>(&'a self, positions: &[u64]) -> Result<Box<dyn JointLaw + 'a>> {
        check_positions(positions)?;
        Ok(Box::new(Marginals(&self.probs)))
    }

    fn source<'a>(&'a self, rng: PathRng) -> Box<dyn SymbolSource + 'a> {
        Box::new(IidSource {
            thresholds: &self.thresholds,
            rng,
        })
    }

    fn psi(&self, _m: usize) -> PsiValue {
        PsiValue::exact(0.0)
    }

    fn decay_rate(&self) -> Result<DecayRate> {
        let max = self.probs.iter().cloned().fold(0.0, f64::max);
        if max >= 1.0 {
            return Err(Error::NoPositiveRate(
                "a symbol has probability 1, so cylinders do not shrink".into(),
            ));
        }
        Ok(DecayRate {
            gamma: -max.ln(),
            eventual: None,
        })
    }

    fn is_iid(&self) -> bool {
        true
    }

    fn entropy(&self) -> Option<f64> {
        Some(
            -self
                .probs
                .iter()
                .filter(|&&p| p > 0.0)
                .map(|p| p * p.ln())
                .sum::<f64>(),
        )
    }
}
