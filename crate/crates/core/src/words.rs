//! Target-word specifications: explicit words, `ones:n`, `thue-morse:n`, and base-`m` digit
//! strings of rationals or named constants (`digits:m:n:value`).

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::symbolic::{thue_morse, Symbol, Word};

// Decimal expansions truncated (not rounded) after the last listed digit.
const NAMED_CONSTANTS: &[(&str, &str)] = &[
    ("pi", "3.141592653589793238462643383279502884197169399375105820974944592307816406286208998628034"),
    ("e", "2.718281828459045235360287471352662497757247093699959574966967627724076630353547594571382"),
    ("sqrt2", "1.414213562373095048801688724209698078569671875376948073176679737990732478462107038850387"),
    ("phi", "1.618033988749894848204586834365638117720309179805762862135448622705260462818902449707207"),
    ("ln2", "0.6931471805599453094172321214581765680755001343602552541206800094933936219696947156058633"),
];

/// How the target word is given.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WordSpec {
    Explicit(Word),
    Ones(usize),
    ThueMorse(usize),
    /// First `len` base-`base` digits of the fractional part of `value`.
    Digits {
        base: u32,
        len: usize,
        value: String,
    },
}

impl WordSpec {
    pub fn word(&self) -> Result<Word> {
        match self {
            WordSpec::Explicit(w) => Ok(w.clone()),
            WordSpec::Ones(n) => Word::repeat(1, *n),
            WordSpec::ThueMorse(n) => thue_morse(*n),
            WordSpec::Digits { base, len, value } => base_digits(value, *base, *len),
        }
    }

    /// Alphabet size implied by a `digits:` spec, which always targets the uniform measure.
    pub fn digit_base(&self) -> Option<u32> {
        match self {
            WordSpec::Digits { base, .. } => Some(*base),
            _ => None,
        }
    }
}

impl FromStr for WordSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse_len = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| Error::invalid(format!("bad word length {v:?}")))
        };
        if let Some(rest) = s.strip_prefix("ones:") {
            return Ok(WordSpec::Ones(parse_len(rest)?));
        }
        if let Some(rest) = s.strip_prefix("thue-morse:") {
            return Ok(WordSpec::ThueMorse(parse_len(rest)?));
        }
        if let Some(rest) = s.strip_prefix("digits:") {
            let parts: Vec<&str> = rest.splitn(3, ':').collect();
            if parts.len() != 3 {
                return Err(Error::invalid(
                    "digits spec must look like digits:<base>:<length>:<value>",
                ));
            }
            let base = parts[0]
                .parse::<u32>()
                .ok()
                .filter(|&b| b >= 2)
                .ok_or_else(|| Error::invalid(format!("bad digit base {:?}", parts[0])))?;
            return Ok(WordSpec::Digits {
                base,
                len: parse_len(parts[1])?,
                value: parts[2].to_string(),
            });
        }
        Ok(WordSpec::Explicit(s.parse()?))
    }
}

impl fmt::Display for WordSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WordSpec::Explicit(w) => {
                if w.symbols().iter().all(|&s| s < 10) {
                    write!(f, "{w}")
                } else {
                    write!(f, "{}", serde_json::to_string(w).map_err(|_| fmt::Error)?)
                }
            }
            WordSpec::Ones(n) => write!(f, "ones:{n}"),
            WordSpec::ThueMorse(n) => write!(f, "thue-morse:{n}"),
            WordSpec::Digits { base, len, value } => write!(f, "digits:{base}:{len}:{value}"),
        }
    }
}

impl Serialize for WordSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for WordSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Array(Vec<Symbol>),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Repr::Array(v) => Word::new(v)
                .map(WordSpec::Explicit)
                .map_err(serde::de::Error::custom),
        }
    }
}

/// Parse `value` into an interval `[num/den, (num+slack)/den]` that contains it.
fn parse_value(value: &str) -> Result<(BigUint, BigUint, BigUint)> {
    let value = value.trim();
    if let Some((_, digits)) = NAMED_CONSTANTS.iter().find(|(name, _)| *name == value) {
        let (num, den) = parse_decimal(digits)?;
        return Ok((num, den, BigUint::from(1u32)));
    }
    if let Some((p, q)) = value.split_once('/') {
        let p: BigUint = p
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad numerator in {value:?}")))?;
        let q: BigUint = q
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad denominator in {value:?}")))?;
        if q == BigUint::from(0u32) {
            return Err(Error::invalid("zero denominator"));
        }
        return Ok((p, q, BigUint::from(0u32)));
    }
    let (num, den) = parse_decimal(value)?;
    Ok((num, den, BigUint::from(0u32)))
}

fn parse_decimal(s: &str) -> Result<(BigUint, BigUint)> {
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    let all = format!("{int}{frac}");
    if all.is_empty() || !all.chars().all(|c| c.is_ascii_digit()) {
        return Err(Error::invalid(format!(
            "{s:?} is neither p/q, a nonnegative decimal, nor a known constant (pi, e, sqrt2, phi, ln2)"
        )));
    }
    let num: BigUint = all.parse().expect("digits checked");
    let den = BigUint::from(10u32).pow(frac.len() as u32);
    Ok((num, den))
}

/// First `len` digits of the base-`base` expansion of the fractional part of `value`.
///
/// Rationals and finite decimals are expanded exactly. Named constants carry a truncated
/// decimal expansion; digits are emitted only while both ends of its uncertainty interval agree.
pub fn base_digits(value: &str, base: u32, len: usize) -> Result<Word> {
    if base < 2 {
        return Err(Error::invalid("digit base must be at least 2"));
    }
    let (num, den, slack) = parse_value(value)?;
    let lo = num.mod_floor(&den);
    let m = BigUint::from(base);
    if slack > BigUint::from(0u32) {
        // value lies in [lo, lo + slack) / den; the first `len` digits are pinned down iff
        // floor(lo·m^len / den) = ceil((lo + slack)·m^len / den) - 1.
        let scale = m.pow(len as u32);
        let floor_lo = (&lo * &scale) / &den;
        let ceil_hi = (&(&lo + &slack) * &scale).div_ceil(&den);
        if floor_lo + 1u32 != ceil_hi {
            return Err(Error::invalid(format!(
                "{value} is not known to {len} base-{base} digits"
            )));
        }
    }
    let mut rem = lo;
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        rem *= &m;
        let (digit, r) = rem.div_mod_floor(&den);
        out.push(u32::try_from(digit).expect("digit below base"));
        rem = r;
    }
    Word::new(out)
}
