use nalgebra::{DMatrix, DVector};
use rand::RngCore;

use super::{
    check_positions, check_probability_vector, check_symbols, pick, thresholds, DecayRate,
    JointLaw, MeasureModel, PathRng, PsiValue, SymbolSource, LINEAR_SPACE_MAX_LEN,
};
use crate::error::{Error, Result};
use crate::symbolic::{Alphabet, Symbol, Word};

/// Cylinder lengths checked directly when computing the safe decay rate.
const DECAY_CHECK_LEN: usize = 64;

/// Stationary Markov chain with a primitive (irreducible and aperiodic) transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovMeasure {
    transition: DMatrix<f64>,
    stationary: Vec<f64>,
    init_thresholds: Vec<u64>,
    row_thresholds: Vec<Vec<u64>>,
}

fn mat_pow(m: &DMatrix<f64>, mut e: u64) -> DMatrix<f64> {
    let mut result = DMatrix::identity(m.nrows(), m.ncols());
    let mut base = m.clone();
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

fn bool_mul(a: &[Vec<bool>], b: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let s = a.len();
    (0..s)
        .map(|i| (0..s).map(|j| (0..s).any(|k| a[i][k] && b[k][j])).collect())
        .collect()
}

/// A nonnegative matrix is primitive iff its `(s-1)^2 + 1`-th power is positive (Wielandt).
fn is_primitive(support: &[Vec<bool>]) -> bool {
    let s = support.len();
    let mut e = (s - 1) * (s - 1) + 1;
    let mut result: Option<Vec<Vec<bool>>> = None;
    let mut base = support.to_vec();
    while e > 0 {
        if e & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => bool_mul(&r, &base),
            });
        }
        e >>= 1;
        if e > 0 {
            base = bool_mul(&base, &base);
        }
    }
    result.is_some_and(|r| r.iter().all(|row| row.iter().all(|&x| x)))
}

impl MarkovMeasure {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let s = rows.len();
        if s < 2 {
            return Err(Error::invalid("a Markov chain needs at least two states"));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != s {
                return Err(Error::invalid(format!(
                    "transition matrix must be square; row {i} has {} entries",
                    row.len()
                )));
            }
            check_probability_vector(row, &format!("transition row {i}"))?;
        }
        let support: Vec<Vec<bool>> = rows
            .iter()
            .map(|r| r.iter().map(|&p| p > 0.0).collect())
            .collect();
        if !is_primitive(&support) {
            return Err(Error::invalid(
                "transition matrix must be irreducible and aperiodic",
            ));
        }
        let transition = DMatrix::from_fn(s, s, |i, j| rows[i][j]);

        // πP = π with Σπ = 1: solve (Pᵀ - I)π = 0 with the last equation replaced by Σπ = 1.
        let mut a = transition.transpose() - DMatrix::identity(s, s);
        for j in 0..s {
            a[(s - 1, j)] = 1.0;
        }
        let mut b = DVector::zeros(s);
        b[s - 1] = 1.0;
        let pi = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::invalid("could not solve for the stationary vector"))?;
        let stationary: Vec<f64> = pi.iter().map(|&x| x.max(0.0)).collect();
        for j in 0..s {
            let image: f64 = (0..s).map(|i| stationary[i] * rows[i][j]).sum();
            if (image - stationary[j]).abs() > 1e-10 {
                return Err(Error::invalid("stationary vector failed the πP = π check"));
            }
        }
        Ok(MarkovMeasure {
            init_thresholds: thresholds(&stationary),
            row_thresholds: rows.iter().map(|r| thresholds(r)).collect(),
            transition,
            stationary,
        })
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn transition_rows(&self) -> Vec<Vec<f64>> {
        (0..self.states())
            .map(|i| self.transition.row(i).iter().cloned().collect())
            .collect()
    }

    pub fn states(&self) -> usize {
        self.stationary.len()
    }

    fn p(&self, i: Symbol, j: Symbol) -> f64 {
        self.transition[(i as usize, j as usize)]
    }

    /// Maximum cycle mean of `ln P` (Karp), i.e. the max-times spectral rate of the chain.
    fn max_log_cycle_mean(&self) -> f64 {
        let s = self.states();
        let w = |u: usize, v: usize| {
            let p = self.transition[(u, v)];
            if p > 0.0 {
                p.ln()
            } else {
                f64::NEG_INFINITY
            }
        };
        // d[k][v]: heaviest walk with exactly k edges ending at v
        let mut d = vec![vec![0.0f64; s]];
        for k in 1..=s {
            let prev = &d[k - 1];
            let next: Vec<f64> = (0..s)
                .map(|v| {
                    (0..s)
                        .map(|u| prev[u] + w(u, v))
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            d.push(next);
        }
        (0..s)
            .filter(|&v| d[s][v].is_finite())
            .map(|v| {
                (0..s)
                    .filter(|&k| d[k][v].is_finite())
                    .map(|k| (d[s][v] - d[k][v]) / (s - k) as f64)
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `ln max_{|A|=n} P(A)` for `n = 1..=max_len`, by max-times dynamic programming.
    fn log_max_cylinder_probs(&self, max_len: usize) -> Vec<f64> {
        let s = self.states();
        let mut cur: Vec<f64> = self.stationary.iter().map(|p| p.ln()).collect();
        let mut out = Vec::with_capacity(max_len);
        out.push(cur.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        for _ in 1..max_len {
            cur = (0..s)
                .map(|v| {
                    (0..s)
                        .map(|u| cur[u] + self.transition[(u, v)].ln())
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            out.push(cur.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        }
        out
    }
}

struct MarkovJoint<'a> {
    stationary: &'a [f64],
    states: usize,
    /// Row-major `P^{gap}` between consecutive positions.
    gaps: Vec<Vec<f64>>,
}

impl JointLaw for MarkovJoint<'_> {
    fn prob(&self, symbols: &[Symbol]) -> f64 {
        let Some(&first) = symbols.first() else {
            return 1.0;
        };
        let mut p = self.stationary[first as usize];
        for (g, pair) in self.gaps.iter().zip(symbols.windows(2)) {
            p *= g[pair[0] as usize * self.states + pair[1] as usize];
        }
        p
    }
}

struct MarkovSource<'a> {
    model: &'a MarkovMeasure,
    state: Option<Symbol>,
    rng: PathRng,
}

impl SymbolSource for MarkovSource<'_> {
    fn extend(&mut self, out: &mut Vec<Symbol>, count: usize) {
        out.reserve(count);
        for _ in 0..count {
            let u = self.rng.next_u32();
            let next = match self.state {
                None => pick(&self.model.init_thresholds, u),
                Some(s) => pick(&self.model.row_thresholds[s as usize], u),
            };
            self.state = Some(next);
            out.push(next);
        }
    }
}

impl MeasureModel for MarkovMeasure {
    fn alphabet(&self) -> Alphabet {
        Alphabet::Finite(self.states() as u32)
    }

    fn cylinder_prob(&self, w: &Word) -> Result<f64> {
        check_symbols(w, &self.alphabet())?;
        if w.len() > LINEAR_SPACE_MAX_LEN {
            return Ok(self.cylinder_log_prob(w)?.exp());
        }
        let s = w.symbols();
        Ok(s.windows(2).fold(self.stationary[s[0] as usize], |acc, p| {
            acc * self.p(p[0], p[1])
        }))
    }

    fn cylinder_log_prob(&self, w: &Word) -> Result<f64> {
        check_symbols(w, &self.alphabet())?;
        let s = w.symbols();
        Ok(s.windows(2)
            .fold(self.stationary[s[0] as usize].ln(), |acc, p| {
                acc + self.p(p[0], p[1]).ln()
            }))
    }

    fn joint_law<'a>(&'a self, positions: &[u64]) -> Result<Box<dyn JointLaw + 'a>> {
        check_positions(positions)?;
        let s = self.states();
        let gaps = positions
            .windows(2)
            .map(|p| {
                let m = mat_pow(&self.transition, p[1] - p[0]);
                (0..s * s).map(|k| m[(k / s, k % s)]).collect()
            })
            .collect();
        Ok(Box::new(MarkovJoint {
            stationary: &self.stationary,
            states: s,
            gaps,
        }))
    }

    fn source<'a>(&'a self, rng: PathRng) -> Box<dyn SymbolSource + 'a> {
        Box::new(MarkovSource {
            model: self,
            state: None,
            rng,
        })
    }

    /// By the Markov property the supremum over σ-algebras reduces to single-state atoms
    /// on either side of the gap: `max_{i,j} |P^{m+1}(i,j)/π_j − 1|`.
    fn psi(&self, m: usize) -> PsiValue {
        let pm = mat_pow(&self.transition, m as u64 + 1);
        let s = self.states();
        let mut worst: f64 = 0.0;
        for i in 0..s {
            for j in 0..s {
                if self.stationary[j] > 0.0 {
                    worst = worst.max((pm[(i, j)] / self.stationary[j] - 1.0).abs());
                }
            }
        }
        PsiValue::exact(worst)
    }

    /// The max-times spectral rate `−max cycle mean(ln P)`, lowered if necessary so that
    /// `max_{|A|=n} P(A) ≤ e^{−Γn}` also holds for every `n ≤ 64` (checked by DP).
    fn decay_rate(&self) -> Result<DecayRate> {
        let spectral = -self.max_log_cycle_mean();
        let finite = self
            .log_max_cylinder_probs(DECAY_CHECK_LEN)
            .iter()
            .enumerate()
            .map(|(k, lp)| -lp / (k + 1) as f64)
            .fold(f64::INFINITY, f64::min);
        let gamma = spectral.min(finite);
        if !(gamma > 0.0) {
            return Err(Error::NoPositiveRate(
                "the chain has a probability-one cycle".into(),
            ));
        }
        Ok(DecayRate {
            gamma,
            eventual: (spectral > gamma).then_some(spectral),
        })
    }

    fn is_iid(&self) -> bool {
        let s = self.states();
        (0..s).all(|i| (0..s).all(|j| (self.transition[(i, j)] - self.stationary[j]).abs() < 1e-15))
    }

    fn entropy(&self) -> Option<f64> {
        let s = self.states();
        let mut h = 0.0;
        for i in 0..s {
            for j in 0..s {
                let p = self.transition[(i, j)];
                if p > 0.0 {
                    h -= self.stationary[i] * p * p.ln();
                }
            }
        }
        Some(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> MarkovMeasure {
        MarkovMeasure::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap()
    }

    #[test]
    fn stationary_vector() {
        let m = two_state();
        assert!((m.stationary()[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.stationary()[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn cylinder_probability() {
        let m = two_state();
        let p = m.cylinder_prob(&Word::from_digits("001").unwrap()).unwrap();
        assert!((p - 2.0 / 3.0 * 0.9 * 0.1).abs() < 1e-15);
    }

    #[test]
    fn decay_rate_is_the_self_loop() {
        let g = two_state().decay_rate().unwrap();
        assert!((g.gamma - 0.10536051565782628).abs() < 1e-12);
        assert_eq!(g.eventual, None);
    }

    #[test]
    fn decay_rate_drops_below_spectral_rate_when_a_transient_edge_is_heavy() {
        // cycle means: self loop at 1 is 0.5; 0→1→0 is sqrt(0.99·0.5); the path 0→1 at 0.99 beats both.
        let m = MarkovMeasure::new(vec![vec![0.01, 0.99], vec![0.5, 0.5]]).unwrap();
        let g = m.decay_rate().unwrap();
        let logs = m.log_max_cylinder_probs(12);
        for (k, lp) in logs.iter().enumerate() {
            assert!(*lp <= -g.gamma * (k + 1) as f64 + 1e-12);
        }
    }

    #[test]
    fn psi_of_independent_rows_vanishes() {
        let m = MarkovMeasure::new(vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        assert!(m.psi(0).value < 1e-12);
        assert!(m.is_iid());
        assert!(!two_state().is_iid());
    }

    #[test]
    fn psi_matches_atom_formula() {
        let m = two_state();
        // P(0→0) = 0.9, π_0 = 2/3: |0.9/(2/3) − 1| = 0.35; P(1→1)/π_1 − 1 = 1.4 is the max.
        assert!((m.psi(0).value - 1.4).abs() < 1e-12);
        // second eigenvalue 0.7 drives the decay
        assert!((m.psi(1).value - 1.4 * 0.7).abs() < 1e-12);
    }

    #[test]
    fn rejects_reducible_or_periodic() {
        assert!(MarkovMeasure::new(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).is_err());
        assert!(MarkovMeasure::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).is_err());
        assert!(MarkovMeasure::new(vec![vec![0.5, 0.5]]).is_err());
        assert!(MarkovMeasure::new(vec![vec![0.5, 0.5], vec![0.5, 0.4]]).is_err());
        assert!(MarkovMeasure::new(vec![vec![0.5, 0.5], vec![1.0, 0.0]]).is_ok());
    }

    #[test]
    fn entropy_rate() {
        let m = two_state();
        let h = -(2.0 / 3.0) * (0.9f64 * 0.9f64.ln() + 0.1 * 0.1f64.ln())
            - (1.0 / 3.0) * (0.2f64 * 0.2f64.ln() + 0.8 * 0.8f64.ln());
        assert!((m.entropy().unwrap() - h).abs() < 1e-12);
    }
}
