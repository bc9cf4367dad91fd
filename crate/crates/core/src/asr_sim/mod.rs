//! Simulated recognizer: a calibrated word-level error channel, WER
//! alignment, and synthetic word timestamps.

mod align;
mod channel;
mod spoken;
mod timing;

use thiserror::Error;

pub use align::{levenshtein_align, replay, wer, EditKind, EditOp};
pub use channel::{
    calibrate, corrupt, Calibration, ChannelConfig, ErrorChannel, CALIBRATION_TOLERANCE, ERROR_MIX,
    MIN_CALIBRATION_TOKENS,
};
pub use spoken::{synthesize_corpus, SpokenCorpus, SpokenDocument, SpokenHeader, SPOKEN_FORMAT};
pub use timing::{synthesize_timestamps, timestamps_valid, TimedWord, DEFAULT_PHONES_PER_SECOND, WORD_GAP};

#[derive(Debug, Error)]
pub enum AsrError {
    #[error("reference is empty")]
    EmptyReference,
    #[error("lexicon is empty")]
    EmptyLexicon,
    #[error("invalid channel config: {0}")]
    InvalidConfig(String),
    #[error("target WER {target} unreachable (closest measured {best:.4})")]
    Unreachable { target: f64, best: f64 },
    #[error("calibration corpus has {tokens} tokens, needs at least {required}")]
    CorpusTooSmall { tokens: usize, required: usize },
    #[error("malformed spoken corpus: {0}")]
    Malformed(String),
}
