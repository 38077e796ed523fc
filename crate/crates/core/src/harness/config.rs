use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;

use super::WindowMode;
use crate::corpus::{CorpusFormat, StreamSpec, StreamVariant, TokenizerConfig};
use crate::oracle::DEFAULT_TIMEOUT;
use crate::sampling::Strategy;

pub const DEFAULT_WINDOW: usize = 100;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config key `{key}`: {message}")]
    Key { key: &'static str, message: String },
}

fn key_err(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Key {
        key,
        message: message.into(),
    }
}

/// Accepts both TOML integers and floats.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
enum Number {
    Float(f64),
    Int(i64),
}

impl Number {
    fn get(self) -> f64 {
        match self {
            Number::Float(f) => f,
            Number::Int(i) => i as f64,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    stream: PathBuf,
    #[serde(default)]
    variant: StreamVariant,
    #[serde(default)]
    format: Option<String>,
    #[serde(default)]
    min_token_len: Option<usize>,
    seed_size: usize,
    strategy: String,
    alpha: Option<Number>,
    log_alpha: Option<Number>,
    budget: Option<Number>,
    rng_seed: Option<u64>,
    window: Option<usize>,
    #[serde(default)]
    window_mode: WindowMode,
    output_dir: PathBuf,
    timeout_secs: Option<Number>,
}

/// A validated experiment description.
///
/// Read from a flat key/value TOML file:
///
/// ```toml
/// stream = "data/stream.tsv"
/// variant = "original"        # original | reordered | fixed-vocab
/// seed_size = 200
/// strategy = "uncertainty"    # ig | uncertainty | random | always | never
/// alpha = 2.061153622438558e-9
/// window = 100
/// window_mode = "sliding"     # sliding | tumbling
/// output_dir = "runs/u-20"
/// ```
///
/// `uncertainty` takes exactly one of `alpha` or `log_alpha`; `random`
/// takes `budget` and optionally `rng_seed`. `format = "raw"` tokenizes the
/// text column instead of splitting it on whitespace.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub stream: StreamSpec,
    pub format: CorpusFormat,
    pub strategy: Strategy,
    pub window: usize,
    pub window_mode: WindowMode,
    pub output_dir: PathBuf,
    pub timeout: Duration,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let alpha = raw.alpha.map(Number::get);
        let log_alpha = raw.log_alpha.map(Number::get);
        let budget = raw.budget.map(Number::get);

        let strategy = match raw.strategy.as_str() {
            "ig" => Strategy::InformationGain,
            "uncertainty" => match (alpha, log_alpha) {
                (Some(a), None) => Strategy::uncertainty(a).map_err(|e| key_err("alpha", e.to_string()))?,
                (None, Some(l)) => {
                    Strategy::uncertainty_log(l).map_err(|e| key_err("log_alpha", e.to_string()))?
                }
                (Some(_), Some(_)) => return Err(key_err("log_alpha", "give either alpha or log_alpha, not both")),
                (None, None) => return Err(key_err("alpha", "required when strategy = \"uncertainty\"")),
            },
            "random" => {
                let budget = budget.ok_or_else(|| key_err("budget", "required when strategy = \"random\""))?;
                Strategy::random(budget, raw.rng_seed.unwrap_or(0))
                    .map_err(|e| key_err("budget", e.to_string()))?
            }
            "always" => Strategy::Always,
            "never" => Strategy::Never,
            other => {
                return Err(key_err(
                    "strategy",
                    format!("unknown strategy `{other}` (expected ig, uncertainty, random, always or never)"),
                ))
            }
        };
        if !matches!(strategy, Strategy::Uncertainty { .. }) {
            if raw.alpha.is_some() {
                return Err(key_err("alpha", "only valid with strategy = \"uncertainty\""));
            }
            if raw.log_alpha.is_some() {
                return Err(key_err("log_alpha", "only valid with strategy = \"uncertainty\""));
            }
        }
        if !matches!(strategy, Strategy::Random { .. }) {
            if raw.budget.is_some() {
                return Err(key_err("budget", "only valid with strategy = \"random\""));
            }
            if raw.rng_seed.is_some() {
                return Err(key_err("rng_seed", "only valid with strategy = \"random\""));
            }
        }

        let format = match raw.format.as_deref() {
            None | Some("tokens") => {
                if raw.min_token_len.is_some() {
                    return Err(key_err("min_token_len", "only valid with format = \"raw\""));
                }
                CorpusFormat::Tokens
            }
            Some("raw") => CorpusFormat::Raw(TokenizerConfig {
                casefold: true,
                min_len: raw.min_token_len.unwrap_or(1),
            }),
            Some(other) => return Err(key_err("format", format!("unknown format `{other}` (expected tokens or raw)"))),
        };

        if raw.seed_size < 2 {
            return Err(key_err("seed_size", "must be at least 2"));
        }
        let window = raw.window.unwrap_or(DEFAULT_WINDOW);
        if window == 0 {
            return Err(key_err("window", "must be positive"));
        }
        let timeout = match raw.timeout_secs.map(Number::get) {
            None => DEFAULT_TIMEOUT,
            Some(s) if s.is_finite() && s > 0.0 => Duration::from_secs_f64(s),
            Some(_) => return Err(key_err("timeout_secs", "must be a positive number of seconds")),
        };

        Ok(ExperimentConfig {
            stream: StreamSpec {
                path: raw.stream,
                variant: raw.variant,
                seed_size: raw.seed_size,
            },
            format,
            strategy,
            window,
            window_mode: raw.window_mode,
            output_dir: raw.output_dir,
            timeout,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "stream = \"s.tsv\"\nseed_size = 10\noutput_dir = \"out\"\n";

    fn parse(extra: &str) -> Result<ExperimentConfig, ConfigError> {
        ExperimentConfig::parse(&format!("{BASE}{extra}"))
    }

    fn key_of(err: ConfigError) -> &'static str {
        match err {
            ConfigError::Key { key, .. } => key,
            other => panic!("expected key error, got {other}"),
        }
    }

    #[test]
    fn defaults() {
        let cfg = parse("strategy = \"ig\"\n").unwrap();
        assert_eq!(cfg.strategy, Strategy::InformationGain);
        assert_eq!(cfg.window, DEFAULT_WINDOW);
        assert_eq!(cfg.window_mode, WindowMode::Sliding);
        assert_eq!(cfg.stream.variant, StreamVariant::Original);
        assert_eq!(cfg.format, CorpusFormat::Tokens);
        assert_eq!(cfg.timeout, DEFAULT_TIMEOUT);
    }

    #[test]
    fn uncertainty_alpha_forms() {
        let cfg = parse("strategy = \"uncertainty\"\nalpha = 1e-5\n").unwrap();
        assert_eq!(cfg.strategy, Strategy::Uncertainty { log_alpha: 1e-5f64.ln() });
        let cfg = parse("strategy = \"uncertainty\"\nlog_alpha = -40\n").unwrap();
        assert_eq!(cfg.strategy, Strategy::Uncertainty { log_alpha: -40.0 });
        let cfg = parse("strategy = \"uncertainty\"\nlog_alpha = -40.0\n").unwrap();
        assert_eq!(cfg.strategy, Strategy::Uncertainty { log_alpha: -40.0 });
        assert_eq!(key_of(parse("strategy = \"uncertainty\"\n").unwrap_err()), "alpha");
        assert_eq!(key_of(parse("strategy = \"uncertainty\"\nalpha = 2.0\n").unwrap_err()), "alpha");
    }

    #[test]
    fn random_needs_budget() {
        let cfg = parse("strategy = \"random\"\nbudget = 0.3\nrng_seed = 9\n").unwrap();
        assert_eq!(cfg.strategy, Strategy::Random { budget: 0.3, rng_seed: 9 });
        assert_eq!(key_of(parse("strategy = \"random\"\n").unwrap_err()), "budget");
    }

    #[test]
    fn stray_parameters_rejected() {
        assert_eq!(key_of(parse("strategy = \"ig\"\nalpha = 0.1\n").unwrap_err()), "alpha");
        assert_eq!(key_of(parse("strategy = \"never\"\nbudget = 0.1\n").unwrap_err()), "budget");
        assert_eq!(key_of(parse("strategy = \"bogus\"\n").unwrap_err()), "strategy");
    }

    #[test]
    fn parse_errors_name_keys() {
        let err = parse("strategy = \"ig\"\nwindow = \"wide\"\n").unwrap_err();
        assert!(err.to_string().contains("window"), "{err}");
        let err = parse("strategy = \"ig\"\nwindoww = 3\n").unwrap_err();
        assert!(err.to_string().contains("windoww"), "{err}");
        let err = ExperimentConfig::parse("seed_size = 3\n").unwrap_err();
        assert!(err.to_string().contains("stream"), "{err}");
    }

    #[test]
    fn variants_and_modes() {
        let cfg = parse("strategy = \"always\"\nvariant = \"fixed-vocab\"\nwindow_mode = \"tumbling\"\nwindow = 5000\n").unwrap();
        assert_eq!(cfg.stream.variant, StreamVariant::FixedVocab);
        assert_eq!(cfg.window_mode, WindowMode::Tumbling);
        assert_eq!(cfg.window, 5000);
    }
}
