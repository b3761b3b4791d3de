use rand::RngCore;

use super::{
    check_positions, check_symbols, log_add_exp, thresholds, DecayRate, JointLaw, MeasureModel,
    PathRng, PsiValue, SymbolSource, LINEAR_SPACE_MAX_LEN,
};
use crate::error::{Error, Result};
use crate::symbolic::{Alphabet, Symbol, Word};

/// `P₀ = S·P` where `P` is the binary Bernoulli measure with `P{ω_0 = 1} = p1` and
/// `(Sω)_n = ω_n ⊕ ω_{n+1}`.
///
/// Each cylinder `[a_0 … a_{n-1}]` has exactly two preimage cylinders of length `n + 1`,
/// `[α_0 … α_n]` and `[β_0 … β_n]` with `α_0 = 0`, `β_0 = 1`, `α_{i+1} = α_i ⊕ a_i` and
/// `β = 1 − α` coordinatewise.
#[derive(Debug, Clone, PartialEq)]
pub struct XorCoupledMeasure {
    p: [f64; 2],
    threshold: u64,
}

impl XorCoupledMeasure {
    pub fn new(p1: f64) -> Result<Self> {
        if !(p1 > 0.0 && p1 < 1.0) {
            return Err(Error::invalid(format!(
                "XOR-coupled measure needs 0 < p1 < 1, got {p1}"
            )));
        }
        let p = [1.0 - p1, p1];
        Ok(XorCoupledMeasure {
            threshold: thresholds(&p)[0],
            p,
        })
    }

    pub fn p1(&self) -> f64 {
        self.p[1]
    }

    pub fn p0(&self) -> f64 {
        self.p[0]
    }

    /// The two preimage products `(Π p_{α_i}, Π p_{β_i})`, in linear or log space.
    fn preimage_terms(&self, symbols: &[Symbol], log: bool) -> (f64, f64) {
        let weight = |bit: u32| {
            if log {
                self.p[bit as usize].ln()
            } else {
                self.p[bit as usize]
            }
        };
        let (mut alpha, mut beta) = (0u32, 1u32);
        let (mut pa, mut pb) = (weight(alpha), weight(beta));
        for &a in symbols {
            alpha ^= a;
            beta ^= a;
            if log {
                pa += weight(alpha);
                pb += weight(beta);
            } else {
                pa *= weight(alpha);
                pb *= weight(beta);
            }
        }
        (pa, pb)
    }

    fn block_prob(&self, symbols: &[Symbol]) -> f64 {
        let (a, b) = self.preimage_terms(symbols, false);
        a + b
    }
}

/// Coordinates split into maximal runs of consecutive positions; distinct runs read disjoint
/// preimage coordinates and are therefore independent.
struct XorJoint<'a> {
    model: &'a XorCoupledMeasure,
    runs: Vec<(usize, usize)>,
}

impl JointLaw for XorJoint<'_> {
    fn prob(&self, symbols: &[Symbol]) -> f64 {
        self.runs
            .iter()
            .map(|&(start, end)| self.model.block_prob(&symbols[start..end]))
            .product()
    }
}

struct XorSource {
    threshold: u64,
    prev: Option<u32>,
    rng: PathRng,
}

impl XorSource {
    #[inline]
    fn bit(&mut self) -> u32 {
        ((self.rng.next_u32() as u64) >= self.threshold) as u32
    }
}

impl SymbolSource for XorSource {
    fn extend(&mut self, out: &mut Vec<Symbol>, count: usize) {
        let mut prev = match self.prev {
            Some(b) => b,
            None => self.bit(),
        };
        let start = out.len();
        out.resize(start + count, 0);
        for slot in &mut out[start..] {
            let next = self.bit();
            *slot = prev ^ next;
            prev = next;
        }
        self.prev = Some(prev);
    }
}

impl MeasureModel for XorCoupledMeasure {
    fn alphabet(&self) -> Alphabet {
        Alphabet::Finite(2)
    }

    fn cylinder_prob(&self, w: &Word) -> Result<f64> {
        check_symbols(w, &self.alphabet())?;
        if w.len() > LINEAR_SPACE_MAX_LEN {
            return Ok(self.cylinder_log_prob(w)?.exp());
        }
        Ok(self.block_prob(w.symbols()))
    }

    fn cylinder_log_prob(&self, w: &Word) -> Result<f64> {
        check_symbols(w, &self.alphabet())?;
        let (a, b) = self.preimage_terms(w.symbols(), true);
        Ok(log_add_exp(a, b))
    }

    fn joint_law<'a>(&'a self, positions: &[u64]) -> Result<Box<dyn JointLaw + 'a>> {
        check_positions(positions)?;
        let mut runs = Vec::new();
        let mut start = 0;
        for i in 1..=positions.len() {
            if i == positions.len() || positions[i] != positions[i - 1] + 1 {
                runs.push((start, i));
                start = i;
            }
        }
        Ok(Box::new(XorJoint { model: self, runs }))
    }

    fn source<'a>(&'a self, rng: PathRng) -> Box<dyn SymbolSource + 'a> {
        Box::new(XorSource {
            threshold: self.threshold,
            prev: None,
            rng,
        })
    }

    /// Exact zero for `m ≥ 1`: preimages of sets separated by a gap read disjoint coordinates.
    /// For `m = 0` the bound `1 + 2(p0⁻¹ + p1⁻¹)` is returned, flagged as an upper bound.
    fn psi(&self, m: usize) -> PsiValue {
        if m >= 1 {
            PsiValue::exact(0.0)
        } else {
            PsiValue {
                value: 1.0 + 2.0 * (1.0 / self.p[0] + 1.0 / self.p[1]),
                upper_bound: true,
            }
        }
    }

    /// `−ln max(p0, p1)` holds for every length; `−½ ln(p0 p1)` is reported as the sharper
    /// eventual rate (attained by `1^n` for even `n`).
    fn decay_rate(&self) -> Result<DecayRate> {
        let max = self.p[0].max(self.p[1]);
        Ok(DecayRate {
            gamma: -max.ln(),
            eventual: Some(-0.5 * (self.p[0] * self.p[1]).ln()),
        })
    }

    fn is_iid(&self) -> bool {
        false
    }

    fn entropy(&self) -> Option<f64> {
        None
    }
}
