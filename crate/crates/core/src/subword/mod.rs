//! Phoneme and syllable decompositions of words: pronouncing-dictionary
//! lookup with a letter-rule fallback, and pattern-based hyphenation.

mod distance;
mod hyphen;
mod inventory;
mod lexicon;

use thiserror::Error;

pub use distance::{edit_distance, edit_distance_within, phoneme_edit_distance};
pub use hyphen::SyllablePatterns;
pub use inventory::{Phoneme, PhonemeInventory, ARPABET, PAD_SYMBOL};
pub use lexicon::{normalize_word, PronunciationLexicon};

#[derive(Debug, Error)]
pub enum SubwordError {
    #[error("word is empty after normalization")]
    EmptyWord,
    #[error("invalid phoneme inventory: {0}")]
    InvalidInventory(String),
    #[error("lexicon line {line}: unknown phoneme {symbol:?}")]
    UnknownPhoneme { line: usize, symbol: String },
    #[error("lexicon line {line}: {reason}")]
    MalformedLexicon { line: usize, reason: String },
    #[error("pattern line {line}: cannot parse {pattern:?}")]
    MalformedPattern { line: usize, pattern: String },
    #[error("pattern line {line}: {pattern:?} conflicts with an earlier pattern")]
    PatternConflict { line: usize, pattern: String },
}

/// Convenience wrapper: phoneme sequence of `word`.
pub fn g2p(word: &str, lexicon: &PronunciationLexicon) -> Result<Vec<Phoneme>, SubwordError> {
    lexicon.g2p(word)
}

/// Convenience wrapper: syllables of `word`.
pub fn syllabify(word: &str, patterns: &SyllablePatterns) -> Result<Vec<String>, SubwordError> {
    patterns.syllabify(word)
}
