//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use reclab::symbolic::{Symbol, Word};

/// Every binary word of length `n`, least significant symbol first.
pub fn binary_words(n: usize) -> impl Iterator<Item = Word> {
    (0..1u32 << n).map(move |code| Word::new((0..n).map(|i| (code >> i) & 1).collect()).unwrap())
}

/// `{k ∈ 1..=n : A_{i+k} = A_i for all valid i}` by direct comparison.
pub fn naive_overlaps(a: &[Symbol]) -> Vec<usize> {
    let n = a.len();
    (1..=n)
        .filter(|&k| (0..n - k).all(|i| a[i] == a[i + k]))
        .collect()
}

pub fn naive_period(a: &[Symbol]) -> usize {
    naive_overlaps(a)[0]
}

/// `κ` by searching the least `k ≥ 1` with `r | d_i k` for every `i`.
pub fn naive_kappa(r: u64, d: &[u64]) -> u64 {
    (1..)
        .find(|k| d.iter().all(|di| (di * k) % r == 0))
        .unwrap()
}

/// `S_N^A` by a double loop over `k` and the multipliers.
pub fn naive_count(path: &[Symbol], a: &[Symbol], d: &[u64], horizon: u64) -> u64 {
    let mut total = 0;
    for k in 1..=horizon {
        let mut all = true;
        for &di in d {
            for (j, &s) in a.iter().enumerate() {
                if path[(di * k) as usize + j] != s {
                    all = false;
                }
            }
        }
        total += all as u64;
    }
    total
}

/// Poisson masses by the product recursion `p_k = p_{k−1} t / k`.
pub fn poisson_masses(t: f64, kmax: usize) -> Vec<f64> {
    let mut out = vec![(-t).exp()];
    for k in 1..=kmax {
        out.push(out[k - 1] * t / k as f64);
    }
    out
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}
