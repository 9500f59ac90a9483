//! Tokenization, stopword handling and the shipped word lists.
//!
//! Tokens are produced by splitting on Unicode whitespace, trimming leading
//! and trailing punctuation, and lowercasing. Tokens that are empty after
//! trimming are dropped. Every word-list consumer in the crate goes through
//! [`tokenize`] so counts stay consistent between scoring and baselines.

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};

const STOPWORDS_EN: &str = include_str!("../data/stopwords_en.txt");
const POSITIVE_EMOTION: &str = include_str!("../data/positive_emotion.txt");
const TOXIC_KEYWORDS: &str = include_str!("../data/toxic_keywords.txt");
const GENERIC_REPLIES: &str = include_str!("../data/generic_replies.txt");

/// Squashing constant for the lexicon emotion score: `x / (x + c)`.
pub const LEXICON_SQUASH: f64 = 0.05;

fn is_trim_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}'
                | '\u{2019}'
                | '\u{201C}'
                | '\u{201D}'
                | '\u{2026}'
                | '\u{2013}'
                | '\u{2014}'
                | '\u{00AB}'
                | '\u{00BB}'
                | '\u{00BF}'
                | '\u{00A1}'
        )
}

/// Lowercased tokens of `text`.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace()
        .map(|raw| raw.trim_matches(is_trim_punct))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// A set of lowercase words read from a one-word-per-line list.
#[derive(Debug, Clone)]
pub struct WordList {
    words: HashSet<String>,
}

impl WordList {
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Self { words }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let list = Self::parse(&text);
        if list.is_empty() {
            return Err(Error::file(path, "word list is empty"));
        }
        Ok(list)
    }

    /// Case-insensitive membership.
    pub fn contains(&self, token: &str) -> bool {
        if self.words.contains(token) {
            return true;
        }
        let folded = token.to_lowercase();
        folded != token && self.words.contains(&folded)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// English stopwords used for specificity.
pub type StopwordList = WordList;

impl StopwordList {
    pub fn english() -> Self {
        Self::parse(STOPWORDS_EN)
    }
}

pub fn positive_emotion_lexicon() -> WordList {
    WordList::parse(POSITIVE_EMOTION)
}

pub fn toxic_keywords() -> WordList {
    WordList::parse(TOXIC_KEYWORDS)
}

/// Generic, low-information replies used for synthetic negatives.
pub fn generic_replies() -> Vec<String> {
    GENERIC_REPLIES
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect()
}

/// Number of non-stopword tokens.
pub fn specificity(text: &str, stopwords: &StopwordList) -> u32 {
    tokenize(text).filter(|t| !stopwords.contains(t)).count() as u32
}

/// Fraction of tokens found in `lexicon`, squashed through `x / (x + 0.05)`.
pub fn lexicon_emotion(text: &str, lexicon: &WordList) -> f64 {
    let (mut hits, mut total) = (0usize, 0usize);
    for token in tokenize(text) {
        total += 1;
        if lexicon.contains(&token) {
            hits += 1;
        }
    }
    if total == 0 || hits == 0 {
        return 0.0;
    }
    let frac = hits as f64 / total as f64;
    frac / (frac + LEXICON_SQUASH)
}
