//! QA corpus data model: SQuAD-layout ingestion, a canonical token-anchored
//! dataset file, and the answer-presence filter applied after the ASR stage.

mod filter;
mod squad;
mod tokenize;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use filter::{filter_answerable, FilterOutcome};
pub use squad::parse_squad;
pub use tokenize::{is_punctuation, tokenize, Token};

pub const DATASET_FORMAT: &str = "sqa-dataset/1";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("answer of question {question_id} starts at {answer_start} with length {answer_len}, beyond context length {context_len}")]
    OffsetOutOfRange {
        question_id: String,
        answer_start: usize,
        answer_len: usize,
        context_len: usize,
    },
    #[error("no transcript for document {0}")]
    MissingTranscript(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub title: String,
    /// Position of the source article, kept so the SQuAD layout can be rebuilt.
    pub article_index: usize,
    pub text: String,
    pub tokens: Vec<Token>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRef {
    pub text: String,
    pub char_start: usize,
    /// First and last (inclusive) document token touched by the answer.
    pub token_span: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAPair {
    pub id: String,
    pub doc_id: String,
    pub question: String,
    pub question_tokens: Vec<Token>,
    pub answers: Vec<AnswerRef>,
}

impl QAPair {
    pub fn answer_texts(&self) -> Vec<&str> {
        self.answers.iter().map(|a| a.text.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QADataset {
    pub split: Split,
    pub documents: Vec<Document>,
    pub pairs: Vec<QAPair>,
}

#[derive(Serialize, Deserialize)]
struct DatasetFile {
    format: String,
    #[serde(flatten)]
    dataset: QADataset,
}

impl QADataset {
    pub fn document(&self, id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id == id)
    }

    pub fn document_index(&self) -> std::collections::HashMap<&str, &Document> {
        self.documents.iter().map(|d| (d.id.as_str(), d)).collect()
    }

    pub fn token_count(&self) -> usize {
        self.documents.iter().map(|d| d.tokens.len()).sum()
    }

    /// Checks that every pair references a document and every span fits it.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let docs = self.document_index();
        if docs.len() != self.documents.len() {
            return Err(CorpusError::MalformedInput("duplicate document id".into()));
        }
        for pair in &self.pairs {
            let doc = docs.get(pair.doc_id.as_str()).ok_or_else(|| {
                CorpusError::MalformedInput(format!(
                    "question {} references unknown document {}",
                    pair.id, pair.doc_id
                ))
            })?;
            if pair.answers.is_empty() {
                return Err(CorpusError::MalformedInput(format!("question {} has no answers", pair.id)));
            }
            for a in &pair.answers {
                let (s, e) = a.token_span;
                if s > e || e >= doc.tokens.len() {
                    return Err(CorpusError::MalformedInput(format!(
                        "question {} has span ({s},{e}) outside document of {} tokens",
                        pair.id,
                        doc.tokens.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Canonical dataset file: explicit token lists and token-anchored answers.
    pub fn to_json(&self) -> Vec<u8> {
        let file = DatasetFile { format: DATASET_FORMAT.to_string(), dataset: self.clone() };
        serde_json::to_vec_pretty(&file).expect("dataset serializes")
    }

    pub fn from_json(raw: &[u8]) -> Result<Self, CorpusError> {
        let file: DatasetFile =
            serde_json::from_slice(raw).map_err(|e| CorpusError::MalformedInput(e.to_string()))?;
        if file.format != DATASET_FORMAT {
            return Err(CorpusError::MalformedInput(format!("unknown dataset format {:?}", file.format)));
        }
        file.dataset.validate()?;
        Ok(file.dataset)
    }

    /// Serializes back into the SQuAD v1.1 layout.
    pub fn to_squad_json(&self) -> Vec<u8> {
        squad::to_squad(self)
    }

    /// Reads either a canonical dataset file or a SQuAD-layout file.
    pub fn load(raw: &[u8], split: Split) -> Result<Self, CorpusError> {
        let probe: serde_json::Value =
            serde_json::from_slice(raw).map_err(|e| CorpusError::MalformedInput(e.to_string()))?;
        if probe.get("format").is_some() {
            Self::from_json(raw)
        } else {
            parse_squad(raw, split)
        }
    }
}

/// Tokens whose character range intersects `[char_start, char_end)`.
pub fn covering_span(tokens: &[Token], char_start: usize, char_end: usize) -> Option<(usize, usize)> {
    let mut first = None;
    let mut last = None;
    for (i, t) in tokens.iter().enumerate() {
        if t.char_start < char_end && char_start < t.char_end {
            first.get_or_insert(i);
            last = Some(i);
        }
    }
    first.zip(last)
}
