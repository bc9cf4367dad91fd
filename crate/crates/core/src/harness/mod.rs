//! Experiment harness: synthetic corpus, noise tiers, the
//! synthesize → filter → train → evaluate pipeline and report rendering.

pub mod experiment;
pub mod fixture;
pub mod pipeline;
pub mod tiers;

use thiserror::Error;

pub use experiment::{
    render_report, render_summary_csv, run_experiment, write_outputs, ExperimentData, ExperimentSpec, ModelSpec,
    RowSpec, RunRecord, TrainingSpec,
};
pub use pipeline::{
    evaluate_model, evaluate_with, filter, locate_answer, speech_training_corpus, synthesize, text_training_corpus,
    ChannelRequest, Evaluation, Prediction,
};
pub use tiers::{parse_embeddings, Embedding, Tier, TrainSide};

use crate::asr_sim::AsrError;
use crate::corpus::CorpusError;
use crate::metrics::MetricsError;
use crate::neural::{NeuralError, Resources};
use crate::subword::{PronunciationLexicon, SubwordError, SyllablePatterns};

/// CMUdict subset covering the most frequent English words and the fixture vocabulary.
pub const BUNDLED_LEXICON: &str = include_str!("../../data/lexicon.dict");
/// English hyphenation patterns (hyph_en_US), used as the syllabifier.
pub const BUNDLED_PATTERNS: &str = include_str!("../../data/hyph_en_US.dic");

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Asr(#[from] AsrError),
    #[error(transparent)]
    Subword(#[from] SubwordError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error("vocabulary mismatch: {0}")]
    VocabularyMismatch(String),
    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Short machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Corpus(_) => "corpus",
            HarnessError::Asr(_) => "asr_sim",
            HarnessError::Subword(_) => "subword",
            HarnessError::Metrics(_) => "metrics",
            HarnessError::Neural(NeuralError::VocabularyMismatch(_)) | HarnessError::VocabularyMismatch(_) => {
                "vocabulary_mismatch"
            }
            HarnessError::Neural(_) => "neural",
            HarnessError::InvalidSpec(_) => "invalid_spec",
            HarnessError::Io(_) => "io",
        }
    }
}

pub fn load_resources(lexicon: &str, patterns: &str) -> Result<Resources, HarnessError> {
    Ok(Resources::new(PronunciationLexicon::parse_arpabet(lexicon)?, SyllablePatterns::parse(patterns)?))
}

pub fn bundled_resources() -> Result<Resources, HarnessError> {
    load_resources(BUNDLED_LEXICON, BUNDLED_PATTERNS)
}
