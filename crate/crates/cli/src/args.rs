use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use reclab::measures::{Measure, MeasureConfig};
use reclab::recurrence::RecurrenceSpec;
use reclab::words::WordSpec;
use serde::{Deserialize, Serialize};

use crate::UsageError;

#[derive(Debug, Parser)]
#[command(
    name = "reclab",
    version,
    about = "Poisson and compound Poisson laws for nonconventional recurrence counts on shift spaces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Period, overlaps, κ, ρ_A, P(A), horizon N, gaps and mixing data of a target word.
    Analyze(Options),
    /// Monte Carlo law of S_N^A.
    Simulate(Options),
    /// Monte Carlo law of S_N^A against a Poisson, Pólya–Aeppli or exact target.
    Compare(Options),
    /// Even/odd nonconvergence sweep under the XOR-coupled measure.
    Nonconv(Options),
    /// Survival of the rescaled hitting time against its exponential law.
    Hitting(Options),
    /// Return-time entropy estimates along prefixes of a word.
    Entropy(Options),
    /// Evaluate the theorem bounds.
    Bounds(Options),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Analyze(_) => "analyze",
            Command::Simulate(_) => "simulate",
            Command::Compare(_) => "compare",
            Command::Nonconv(_) => "nonconv",
            Command::Hitting(_) => "hitting",
            Command::Entropy(_) => "entropy",
            Command::Bounds(_) => "bounds",
        }
    }

    pub fn options(&self) -> &Options {
        match self {
            Command::Analyze(o)
            | Command::Simulate(o)
            | Command::Compare(o)
            | Command::Nonconv(o)
            | Command::Hitting(o)
            | Command::Entropy(o)
            | Command::Bounds(o) => o,
        }
    }

    /// Commands whose output depends on random draws and therefore need `--seed`.
    pub fn needs_seed(&self) -> bool {
        !matches!(self, Command::Analyze(_) | Command::Bounds(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

/// Every option of every command. The resolved set (minus the output location) is embedded
/// in each report and can be fed back with `--config`.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    /// uniform:<m>, bernoulli:<p0>,<p1>,…, xor:<p1>, markov:<row>;<row>… or a JSON model.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub model: Option<String>,

    /// Explicit word (e.g. 0110), ones:<n>, thue-morse:<n> or digits:<base>:<length>:<value>.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub word: Option<String>,

    /// Multipliers d_1 < … < d_ℓ, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub d: Option<Vec<u64>>,

    /// Intensity t.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t: Option<f64>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trials: Option<u64>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,

    /// Explicit horizon N instead of ⌊t P(A)^{-ℓ}⌋ (simulate).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub horizon: Option<u64>,

    /// poisson, polya-aeppli or exact (compare).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub target: Option<String>,

    /// P{ω_0 = 1} of the underlying Bernoulli measure (nonconv).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p1: Option<f64>,

    /// Word lengths: a single value, an inclusive range a..b, or a comma list.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n: Option<String>,

    /// Grid of t values, comma separated (hitting).
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t_grid: Option<Vec<f64>>,

    /// thm21, thm23, cor25 or thm26 (bounds; all four when omitted).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub preset: Option<String>,

    /// Principal period π(A) (bounds from raw inputs).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub r: Option<u64>,

    /// ψ_0 (bounds from raw inputs).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub psi0: Option<f64>,

    /// ψ_n (bounds from raw inputs).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub psin: Option<f64>,

    /// Decay rate Γ (bounds from raw inputs).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub decay: Option<f64>,

    /// P(A) (bounds from raw inputs; default 2^-n).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub prob: Option<f64>,

    /// P(A(π)) (bounds from raw inputs; default 2^-r).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub prob_period: Option<f64>,

    /// ρ_A (bounds from raw inputs; default P(A(π))^{κ Σ d_i / r}).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rho: Option<f64>,

    /// Treat the raw-input model as not i.i.d. (bounds).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub not_iid: Option<bool>,

    /// JSON config, or a previous report whose embedded config is reused.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Write the report here instead of standard output.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,

    /// Output format (text only for analyze and bounds; default text for analyze, json otherwise).
    #[arg(long, value_enum)]
    #[serde(skip)]
    pub format: Option<Format>,
}

macro_rules! fill_from {
    ($dst:ident, $src:ident; $($field:ident),*) => {
        $( if $dst.$field.is_none() { $dst.$field = $src.$field; } )*
    };
}

impl Options {
    /// Command-line values win; missing ones are taken from `file`.
    pub fn merged_with(mut self, file: Options) -> Options {
        fill_from!(self, file; model, word, d, t, trials, seed, horizon, target, p1, n, t_grid,
            preset, r, psi0, psin, decay, prob, prob_period, rho, not_iid);
        self
    }

    /// Copy without the output location, as embedded in reports.
    pub fn embedded(&self) -> Options {
        Options {
            config: None,
            out: None,
            format: None,
            ..self.clone()
        }
    }

    pub fn word_spec(&self) -> Result<Option<WordSpec>, reclab::Error> {
        self.word.as_deref().map(str::parse).transpose()
    }

    pub fn require_word(&self) -> anyhow::Result<WordSpec> {
        self.word_spec()?
            .ok_or_else(|| UsageError("--word is required".into()).into())
    }

    /// The model, defaulting to the uniform measure on the digit base of a `digits:` word
    /// and to the uniform binary measure otherwise.
    pub fn measure(&self) -> anyhow::Result<Measure> {
        match &self.model {
            Some(text) => Ok(parse_model(text)?),
            None => {
                let base = self.word_spec()?.and_then(|w| w.digit_base()).unwrap_or(2);
                Ok(Measure::uniform(base)?)
            }
        }
    }

    pub fn spec(&self) -> anyhow::Result<RecurrenceSpec> {
        Ok(RecurrenceSpec::new(
            self.d.clone().unwrap_or_else(|| vec![1]),
            self.t.unwrap_or(1.0),
        )?)
    }

    pub fn trials(&self) -> u64 {
        self.trials.unwrap_or(10_000)
    }

    pub fn seed(&self) -> anyhow::Result<u64> {
        self.seed
            .ok_or_else(|| UsageError("--seed is required for this command".into()).into())
    }

    pub fn n_list(&self) -> anyhow::Result<Option<Vec<usize>>> {
        self.n.as_deref().map(parse_n_list).transpose()
    }
}

fn parse_numbers(text: &str, what: &str) -> Result<Vec<f64>, reclab::Error> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| reclab::Error::InvalidInput(format!("bad {what} entry {v:?}")))
        })
        .collect()
}

/// `uniform:m`, `bernoulli:p0,p1,…`, `xor:p1`, `markov:r0;r1;…` (rows comma separated) or JSON.
pub fn parse_model(text: &str) -> Result<Measure, reclab::Error> {
    let text = text.trim();
    if text.starts_with('{') {
        return serde_json::from_str(text)
            .map_err(|e| reclab::Error::InvalidInput(format!("bad model JSON: {e}")));
    }
    let (kind, rest) = text.split_once(':').ok_or_else(|| {
        reclab::Error::InvalidInput(format!(
            "model {text:?} must look like uniform:m, bernoulli:…, xor:p or markov:…"
        ))
    })?;
    let config = match kind {
        "uniform" => {
            let m = rest
                .trim()
                .parse::<u32>()
                .map_err(|_| reclab::Error::InvalidInput(format!("bad alphabet size {rest:?}")))?;
            return Measure::uniform(m);
        }
        "bernoulli" => MeasureConfig::Bernoulli {
            probs: parse_numbers(rest, "probability")?,
        },
        "xor" => {
            let p = parse_numbers(rest, "probability")?;
            if p.len() != 1 {
                return Err(reclab::Error::InvalidInput("xor takes a single p1".into()));
            }
            MeasureConfig::Xor { p1: p[0] }
        }
        "markov" => MeasureConfig::Markov {
            transition: rest
                .split(';')
                .map(|row| parse_numbers(row, "transition"))
                .collect::<Result<_, _>>()?,
        },
        other => {
            return Err(reclab::Error::InvalidInput(format!(
                "unknown model kind {other:?}"
            )))
        }
    };
    Measure::try_from(config)
}

/// `10`, `8..13` (inclusive) or `6,9,12`.
pub fn parse_n_list(text: &str) -> anyhow::Result<Vec<usize>> {
    let bad = || UsageError(format!("bad --n value {text:?}; use 10, 8..13 or 6,9,12"));
    let text = text.trim();
    if let Some((a, b)) = text.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|_| bad())?;
        if a > b {
            return Err(bad().into());
        }
        return Ok((a..=b).collect());
    }
    text.split(',')
        .map(|v| v.trim().parse::<usize>().map_err(|_| bad().into()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use reclab::measures::MeasureModel;

    #[test]
    fn model_shortcuts() {
        assert_eq!(
            parse_model("uniform:3").unwrap(),
            Measure::uniform(3).unwrap()
        );
        let b = parse_model("bernoulli:0.4,0.6").unwrap();
        assert!(b.is_iid());
        assert!(matches!(parse_model("xor:0.75").unwrap(), Measure::Xor(_)));
        assert!(matches!(
            parse_model("markov:0.9,0.1;0.2,0.8").unwrap(),
            Measure::Markov(_)
        ));
        assert_eq!(
            parse_model(r#"{"type":"xor","p1":0.75}"#).unwrap(),
            parse_model("xor:0.75").unwrap()
        );
        assert!(parse_model("xor:0.5,0.5").is_err());
        assert!(parse_model("gauss:1").is_err());
        assert!(parse_model("bernoulli:0.3,0.3").is_err());
    }

    #[test]
    fn n_lists() {
        assert_eq!(parse_n_list("10").unwrap(), vec![10]);
        assert_eq!(parse_n_list("8..13").unwrap(), vec![8, 9, 10, 11, 12, 13]);
        assert_eq!(parse_n_list("6, 9,12").unwrap(), vec![6, 9, 12]);
        assert!(parse_n_list("9..3").is_err());
        assert!(parse_n_list("x").is_err());
    }

    #[test]
    fn merge_prefers_command_line() {
        let cli = Options {
            seed: Some(1),
            ..Default::default()
        };
        let file = Options {
            seed: Some(2),
            trials: Some(5),
            ..Default::default()
        };
        let m = cli.merged_with(file);
        assert_eq!((m.seed, m.trials), (Some(1), Some(5)));
    }

    #[test]
    fn digits_word_selects_uniform_measure() {
        let o = Options {
            word: Some("digits:10:6:pi".into()),
            ..Default::default()
        };
        assert_eq!(o.measure().unwrap(), Measure::uniform(10).unwrap());
    }
}
