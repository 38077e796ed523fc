use serde::{Deserialize, Serialize};

/// Settings for turning raw text into word tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub casefold: bool,
    /// Tokens with fewer characters than this are dropped.
    pub min_len: usize,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            casefold: true,
            min_len: 1,
        }
    }
}

/// Splits `text` on every non-alphabetic character.
///
/// Order and duplicates are preserved, since the classifier counts every
/// occurrence. Casefolding happens before splitting so that characters whose
/// lowercase form is not alphabetic still act as separators, which keeps the
/// tokenizer idempotent.
pub fn tokenize(text: &str, cfg: &TokenizerConfig) -> Vec<String> {
    let folded;
    let source = if cfg.casefold {
        folded = text.to_lowercase();
        folded.as_str()
    } else {
        text
    };
    source
        .split(|c: char| !c.is_alphabetic())
        .filter(|tok| !tok.is_empty() && tok.chars().count() >= cfg.min_len)
        .map(str::to_owned)
        .collect()
}
