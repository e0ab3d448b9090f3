//! Utterance-level decisions and a lexicon stand-in scorer.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::{logistic, Scalar};

/// Default utterance threshold.
pub const DEFAULT_TAU_T: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtteranceDecision<T> {
    pub score: T,
    pub hateful: bool,
    pub threshold_used: T,
}

/// Binarizes a post score: hateful iff `score >= tau_t`.
pub fn classify_utterance<T: Scalar>(score: T, tau_t: T) -> Result<UtteranceDecision<T>> {
    if !(score >= T::zero() && score <= T::one()) {
        return Err(Error::InvalidValue(format!("score {score} outside [0, 1]")));
    }
    if !(tau_t > T::zero() && tau_t <= T::one()) {
        return Err(Error::InvalidValue(format!("tau_t {tau_t} outside (0, 1]")));
    }
    Ok(UtteranceDecision {
        score,
        hateful: score >= tau_t,
        threshold_used: tau_t,
    })
}

/// Bag-of-words logistic scorer used when no upstream model is available.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LexiconScorer<T> {
    pub term_weights: HashMap<String, T>,
    pub bias: T,
}

/// Lowercased maximal alphanumeric runs.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

impl<T: Scalar> LexiconScorer<T> {
    pub fn new(term_weights: HashMap<String, T>, bias: T) -> Self {
        let term_weights = term_weights.into_iter().map(|(k, v)| (k.to_lowercase(), v)).collect();
        LexiconScorer { term_weights, bias }
    }

    /// `logistic(bias + sum of weights of matched tokens)`. Every occurrence
    /// of a term contributes.
    pub fn score(&self, text: &str) -> T {
        let z = tokenize(text).fold(self.bias, |acc, tok| acc + self.term_weights.get(&tok).copied().unwrap_or_else(T::zero));
        logistic(z)
    }

    /// Reads a `term,weight` CSV; the row `__bias__` sets the bias.
    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Format(e.to_string()))?
            .iter()
            .map(|s| s.trim().to_owned())
            .collect();
        if header != ["term", "weight"] {
            return Err(Error::Format("expected header `term,weight`".into()));
        }
        let mut weights = HashMap::new();
        let mut bias = T::zero();
        for record in rdr.records() {
            let record = record.map_err(|e| Error::Parse {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let weight = record[1]
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|w| w.is_finite())
                .ok_or_else(|| Error::Validation {
                    line,
                    message: format!("weight `{}` is not a finite number", &record[1]),
                })?;
            let term = record[0].trim();
            if term == "__bias__" {
                bias = T::lit(weight);
            } else {
                weights.insert(term.to_lowercase(), T::lit(weight));
            }
        }
        Ok(LexiconScorer::new(weights, bias))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::read(std::fs::File::open(path).map_err(|e| Error::io(path, e))?)
    }
}

/// Scores `text` with `scorer`.
pub fn stub_score<T: Scalar>(text: &str, scorer: &LexiconScorer<T>) -> T {
    scorer.score(text)
}
