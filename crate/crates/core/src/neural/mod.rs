//! Small reverse-mode autodiff core, subword CNN embeddings and the
//! extractive span model built on them.

pub mod checkpoint;
mod features;
mod graph;
mod model;
mod subword_cnn;
mod tensor;
mod train;

use thiserror::Error;

pub use features::{word_key, Resources, SeqFeatures, Vocab, Vocabularies};
pub use graph::{softmax, Graph, Var};
pub use model::{predict_span, Mode, SpanModel, SpanModelConfig};
pub use subword_cnn::{
    conv_output_len, phoneme_cnn_forward, subword_cnn_forward, PhonemeCnnParams, SubwordCnn, SubwordCnnParams,
    SubwordConfig, SubwordGrads, SubwordUnit, PAD_ID,
};
pub use tensor::{ParamId, ParamStore, Tensor};
pub use train::{train, SpanCorpus, SpanExample, TrainConfig};

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("unit id {id} outside a table of {vocab_size} rows")]
    UnknownPhonemeId { id: usize, vocab_size: usize },
    #[error("backward called before forward")]
    NoForwardState,
    #[error("document is empty")]
    EmptyDocument,
    #[error("empty input")]
    EmptyInput,
    #[error("example {id}: span {span:?} invalid for a document of {doc_len} tokens")]
    InvalidSpan { id: String, span: (usize, usize), doc_len: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("vocabulary mismatch: {0}")]
    VocabularyMismatch(String),
}
