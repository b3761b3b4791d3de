use std::collections::BTreeSet;

use crate::distributions::Pmf;
use crate::error::{Error, Result};
use crate::measures::MeasureModel;
use crate::recurrence::RecurrenceSpec;
use crate::symbolic::{Symbol, Word};

/// Largest number of symbol assignments enumerated by default (`2^24`).
pub const DEFAULT_EXACT_STATE_CAP: u64 = 1 << 24;

pub fn exact_distribution<M: MeasureModel + ?Sized>(
    model: &M,
    a: &Word,
    spec: &RecurrenceSpec,
    horizon: u64,
) -> Result<Pmf> {
    exact_distribution_with_cap(model, a, spec, horizon, DEFAULT_EXACT_STATE_CAP)
}

/// Exact law of `S_N^A`: every assignment of symbols to the read positions
/// `∪_{k ≤ N, i} {d_i k, …, d_i k + n − 1}` is weighted by the model's joint law.
pub fn exact_distribution_with_cap<M: MeasureModel + ?Sized>(
    model: &M,
    a: &Word,
    spec: &RecurrenceSpec,
    horizon: u64,
    state_cap: u64,
) -> Result<Pmf> {
    a.check_alphabet(&model.alphabet())?;
    if horizon == 0 {
        return Ok(Pmf::point_mass(0));
    }
    let size = model
        .alphabet()
        .size()
        .ok_or_else(|| Error::invalid("exact enumeration needs a finite alphabet"))?;
    let n = a.len() as u64;
    let positions: Vec<u64> = (1..=horizon)
        .flat_map(|k| spec.d().iter().flat_map(move |&d| d * k..d * k + n))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let states = (size as f64).powi(positions.len() as i32);
    if states > state_cap as f64 {
        return Err(Error::TooLarge(format!(
            "{} read positions give {states:.3e} assignments, above the cap {state_cap}",
            positions.len()
        )));
    }
    // window start (k, i) → index of its first position in `positions`
    let starts: Vec<Vec<usize>> = (1..=horizon)
        .map(|k| {
            spec.d()
                .iter()
                .map(|&d| {
                    positions
                        .binary_search(&(d * k))
                        .expect("window start is read")
                })
                .collect()
        })
        .collect();
    let law = model.joint_law(&positions)?;
    let word = a.symbols();
    let mut mass = vec![0.0; horizon as usize + 1];
    let mut symbols: Vec<Symbol> = vec![0; positions.len()];
    for _ in 0..states as u64 {
        let p = law.prob(&symbols);
        if p > 0.0 {
            let hits = starts
                .iter()
                .filter(|ws| ws.iter().all(|&s| &symbols[s..s + word.len()] == word))
                .count();
            mass[hits] += p;
        }
        // odometer increment
        for s in symbols.iter_mut() {
            *s += 1;
            if *s < size {
                break;
            }
            *s = 0;
        }
    }
    Pmf::new(mass, 0.0)
}
