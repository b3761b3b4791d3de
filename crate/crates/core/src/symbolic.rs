//! Alphabets, words (cylinders) and the self-overlap structure of words.
//!
//! A word `w = a_0 … a_{n-1}` stands for the cylinder of all one-sided sequences starting with
//! it. The cylinder meets its own `k`-shift preimage on the full shift exactly when `k` is a
//! period of `w`, i.e. the length `n-k` suffix equals the length `n-k` prefix (vacuously for
//! `k = n`). Everything here is therefore combinatorial and measure free.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Symbol index. Alphabet identity is kept outside the word.
pub type Symbol = u32;

/// A finite alphabet `{0, …, size-1}` or the countable alphabet of all `u32` indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alphabet {
    Finite(u32),
    Countable,
}

impl Alphabet {
    pub fn finite(size: u32) -> Result<Self> {
        if size < 2 {
            return Err(Error::invalid(format!(
                "alphabet must have at least two symbols, got {size}"
            )));
        }
        Ok(Alphabet::Finite(size))
    }

    pub fn size(&self) -> Option<u32> {
        match self {
            Alphabet::Finite(s) => Some(*s),
            Alphabet::Countable => None,
        }
    }

    pub fn contains(&self, symbol: Symbol) -> bool {
        match self {
            Alphabet::Finite(s) => symbol < *s,
            Alphabet::Countable => true,
        }
    }
}

/// A nonempty word over symbol indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Symbol>);

impl Word {
    pub fn new(symbols: Vec<Symbol>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::invalid("words must be nonempty"));
        }
        Ok(Word(symbols))
    }

    /// Parse the compact digit form, e.g. `"1011"`; only meaningful for alphabets of size ≤ 10.
    pub fn from_digits(s: &str) -> Result<Self> {
        let symbols = s
            .chars()
            .map(|c| {
                c.to_digit(10)
                    .ok_or_else(|| Error::invalid(format!("'{c}' is not a decimal digit")))
            })
            .collect::<Result<Vec<_>>>()?;
        Word::new(symbols)
    }

    /// The constant word `s^n`.
    pub fn repeat(symbol: Symbol, n: usize) -> Result<Self> {
        Word::new(vec![symbol; n])
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn into_symbols(self) -> Vec<Symbol> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false; present for API symmetry with slices.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The prefix of length `k` (`1 ≤ k ≤ len`).
    pub fn prefix(&self, k: usize) -> Result<Word> {
        if k == 0 || k > self.len() {
            return Err(Error::invalid(format!(
                "prefix length {k} outside 1..={}",
                self.len()
            )));
        }
        Ok(Word(self.0[..k].to_vec()))
    }

    /// The word with `symbol` prepended.
    pub fn prepend(&self, symbol: Symbol) -> Word {
        let mut v = Vec::with_capacity(self.len() + 1);
        v.push(symbol);
        v.extend_from_slice(&self.0);
        Word(v)
    }

    /// The word with `symbol` appended.
    pub fn append(&self, symbol: Symbol) -> Word {
        let mut v = self.0.clone();
        v.push(symbol);
        Word(v)
    }

    pub fn check_alphabet(&self, alphabet: &Alphabet) -> Result<()> {
        match self.0.iter().find(|&&s| !alphabet.contains(s)) {
            Some(s) => Err(Error::invalid(format!(
                "symbol {s} is not in the alphabet {alphabet:?}"
            ))),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|&s| s < 10) {
            for s in &self.0 {
                write!(f, "{s}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
            write!(f, "[{}]", parts.join(","))
        }
    }
}

impl FromStr for Word {
    type Err = Error;

    /// Accepts `"101"` or a JSON array such as `"[1,0,12]"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('[') {
            let symbols: Vec<Symbol> = serde_json::from_str(s)
                .map_err(|e| Error::invalid(format!("bad word array {s:?}: {e}")))?;
            Word::new(symbols)
        } else {
            Word::from_digits(s)
        }
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Array(Vec<Symbol>),
            Compact(String),
        }
        let word = match Repr::deserialize(deserializer)? {
            Repr::Array(v) => Word::new(v),
            Repr::Compact(s) => Word::from_digits(&s),
        };
        word.map_err(serde::de::Error::custom)
    }
}

/// Principal periods of the prefixes of a word: `values[k-1] = π(prefix of length k)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodProfile {
    pub values: Vec<usize>,
}

impl PeriodProfile {
    /// The last (largest) recorded period.
    pub fn last(&self) -> usize {
        *self.values.last().expect("profiles are nonempty")
    }
}

/// Failure function: `border[i]` is the length of the longest proper border of `s[..=i]`.
pub fn border_array(s: &[Symbol]) -> Vec<usize> {
    let mut border = vec![0usize; s.len()];
    for i in 1..s.len() {
        let mut b = border[i - 1];
        while b > 0 && s[i] != s[b] {
            b = border[b - 1];
        }
        if s[i] == s[b] {
            b += 1;
        }
        border[i] = b;
    }
    border
}

/// `π(w)`: the least `k ∈ {1,…,n}` such that the cylinder of `w` meets its `k`-shift.
///
/// Equal to the shortest period of `w`, computed in linear time from the border array.
pub fn principal_period(w: &Word) -> usize {
    let border = border_array(w.symbols());
    w.len() - border[w.len() - 1]
}

/// All overlap shifts `{k ∈ 1..=n : [w] ∩ T^{-k}[w] ≠ ∅}`, i.e. every period of `w`
/// (including `n` itself). Obtained by walking the border chain.
pub fn overlap_set(w: &Word) -> BTreeSet<usize> {
    let n = w.len();
    let border = border_array(w.symbols());
    let mut out = BTreeSet::new();
    out.insert(n);
    let mut b = border[n - 1];
    while b > 0 {
        out.insert(n - b);
        b = border[b - 1];
    }
    out
}

/// Length-`n` cyclic repetition of `base`: `out[i] = base[i mod |base|]`.
pub fn periodic_extension(base: &Word, n: usize) -> Result<Word> {
    if n < 1 {
        return Err(Error::invalid(
            "periodic extension length must be at least 1",
        ));
    }
    let r = base.len();
    Ok(Word((0..n).map(|i| base.0[i % r]).collect()))
}

/// `π` of every prefix of `w`, in one linear pass.
pub fn prefix_period_profile(w: &Word) -> PeriodProfile {
    let border = border_array(w.symbols());
    PeriodProfile {
        values: border.iter().enumerate().map(|(i, b)| i + 1 - b).collect(),
    }
}

/// First `n` symbols of the Thue–Morse sequence `0110 1001 …` (parity of the binary digit sum).
pub fn thue_morse(n: usize) -> Result<Word> {
    Word::new((0..n as u64).map(|i| i.count_ones() % 2).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::from_digits(s).unwrap()
    }

    fn naive_period(s: &[Symbol]) -> usize {
        let n = s.len();
        (1..=n).find(|&k| s[k..] == s[..n - k]).unwrap()
    }

    #[test]
    fn principal_period_examples() {
        assert_eq!(principal_period(&w("111")), 1);
        assert_eq!(principal_period(&w("101")), 2);
        assert_eq!(principal_period(&w("100")), 3);
    }

    #[test]
    fn overlap_set_examples() {
        assert_eq!(overlap_set(&w("11")), BTreeSet::from([1, 2]));
        assert_eq!(overlap_set(&w("101")), BTreeSet::from([2, 3]));
        assert_eq!(overlap_set(&w("100")), BTreeSet::from([3]));
    }

    #[test]
    fn periodic_extension_examples() {
        assert_eq!(periodic_extension(&w("10"), 5).unwrap(), w("10101"));
        assert_eq!(periodic_extension(&w("1"), 3).unwrap(), w("111"));
        assert_eq!(periodic_extension(&w("110"), 4).unwrap(), w("1101"));
        assert!(periodic_extension(&w("1"), 0).is_err());
    }

    #[test]
    fn extension_of_period_prefix_recovers_word() {
        for s in ["10101", "110110", "0100", "1111", "1001001"] {
            let a = w(s);
            let r = principal_period(&a);
            assert_eq!(
                periodic_extension(&a.prefix(r).unwrap(), a.len()).unwrap(),
                a
            );
        }
    }

    #[test]
    fn profile_examples() {
        assert_eq!(prefix_period_profile(&w("1111")).values, vec![1, 1, 1, 1]);
        assert_eq!(
            prefix_period_profile(&w("100100")).values,
            vec![1, 2, 3, 3, 3, 3]
        );
        assert_eq!(prefix_period_profile(&w("0100")).values, vec![1, 2, 2, 3]);
    }

    #[test]
    fn empty_words_are_rejected() {
        assert!(matches!(Word::new(vec![]), Err(Error::InvalidInput(_))));
        assert!(Word::from_digits("").is_err());
        assert!(Word::from_digits("1a").is_err());
    }

    #[test]
    fn alphabet_needs_two_symbols() {
        assert!(Alphabet::finite(1).is_err());
        let a = Alphabet::finite(2).unwrap();
        assert!(w("0101").check_alphabet(&a).is_ok());
        assert!(w("012").check_alphabet(&a).is_err());
        assert!(Word::new(vec![7_000_000])
            .unwrap()
            .check_alphabet(&Alphabet::Countable)
            .is_ok());
    }

    #[test]
    fn word_json_accepts_both_forms() {
        let a: Word = serde_json::from_str("[1,0,1]").unwrap();
        let b: Word = serde_json::from_str("\"101\"").unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a).unwrap(), "[1,0,1]");
        assert_eq!("[1,0,12]".parse::<Word>().unwrap().symbols(), &[1, 0, 12]);
        assert!(serde_json::from_str::<Word>("[]").is_err());
    }

    #[test]
    fn thue_morse_prefix() {
        assert_eq!(thue_morse(8).unwrap(), w("01101001"));
    }

    #[test]
    fn ternary_periods_match_naive_scan() {
        for code in 0..3u32.pow(7) {
            let mut c = code;
            let s: Vec<Symbol> = (0..7)
                .map(|_| {
                    let d = c % 3;
                    c /= 3;
                    d
                })
                .collect();
            assert_eq!(principal_period(&Word(s.clone())), naive_period(&s));
        }
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn profile_is_nondecreasing_and_bounded(s in proptest::collection::vec(0u32..3, 1..60)) {
                let p = prefix_period_profile(&Word::new(s).unwrap());
                for (k, pair) in p.values.windows(2).enumerate() {
                    prop_assert!(pair[0] <= pair[1]);
                    prop_assert!(pair[1] <= k + 2);
                }
                prop_assert!(p.values[0] == 1);
            }

            #[test]
            fn overlap_set_contains_length_and_starts_at_period(s in proptest::collection::vec(0u32..2, 1..40)) {
                let word = Word::new(s).unwrap();
                let o = overlap_set(&word);
                prop_assert!(o.contains(&word.len()));
                prop_assert_eq!(*o.iter().next().unwrap(), principal_period(&word));
            }
        }
    }
}
