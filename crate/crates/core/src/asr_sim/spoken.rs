use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::align::{levenshtein_align, replay, EditOp};
use super::channel::{ChannelConfig, ErrorChannel};
use super::timing::{synthesize_timestamps, timestamps_valid, TimedWord};
use super::AsrError;
use crate::corpus::{QADataset, Split, Token};

pub const SPOKEN_FORMAT: &str = "sqa-spoken/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpokenDocument {
    pub doc_id: String,
    pub ref_tokens: Vec<Token>,
    pub hyp_words: Vec<TimedWord>,
    pub alignment: Vec<EditOp>,
    pub wer: f64,
}

impl SpokenDocument {
    pub fn ref_texts(&self) -> Vec<&str> {
        self.ref_tokens.iter().map(|t| t.text.as_str()).collect()
    }

    pub fn hyp_texts(&self) -> Vec<&str> {
        self.hyp_words.iter().map(|w| w.text.as_str()).collect()
    }

    pub fn errors(&self) -> usize {
        self.alignment.iter().filter(|o| o.is_error()).count()
    }

    /// For each reference token, the hypothesis word it maps to (MATCH or SUB).
    pub fn ref_to_hyp(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.ref_tokens.len()];
        for op in &self.alignment {
            if let (Some(r), Some(h)) = (op.ref_index, op.hyp_index) {
                out[r] = Some(h);
            }
        }
        out
    }

    pub fn check(&self) -> Result<(), AsrError> {
        let refs = self.ref_texts();
        let hyps = self.hyp_texts();
        if replay(&self.alignment, &refs, &hyps).as_deref() != Some(&hyps[..]) {
            return Err(AsrError::Malformed(format!("alignment of {} does not replay", self.doc_id)));
        }
        let expected = if refs.is_empty() { 0.0 } else { self.errors() as f64 / refs.len() as f64 };
        if (expected - self.wer).abs() > 1e-9 {
            return Err(AsrError::Malformed(format!("wer of {} disagrees with its alignment", self.doc_id)));
        }
        if !timestamps_valid(&self.hyp_words) {
            return Err(AsrError::Malformed(format!("timestamps of {} overlap", self.doc_id)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpokenHeader {
    pub format: String,
    pub split: Split,
    pub channel: ChannelConfig,
    pub seed: u64,
    pub phones_per_second: f64,
    pub lexicon_fingerprint: String,
    pub corpus_wer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpokenCorpus {
    pub header: SpokenHeader,
    pub documents: Vec<SpokenDocument>,
}

impl SpokenCorpus {
    pub fn get(&self, doc_id: &str) -> Option<&SpokenDocument> {
        self.documents.iter().find(|d| d.doc_id == doc_id)
    }

    pub fn by_doc(&self) -> std::collections::HashMap<String, SpokenDocument> {
        self.documents.iter().map(|d| (d.doc_id.clone(), d.clone())).collect()
    }

    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec_pretty(self).expect("spoken corpus serializes")
    }

    pub fn from_json(raw: &[u8]) -> Result<Self, AsrError> {
        let c: Self = serde_json::from_slice(raw).map_err(|e| AsrError::Malformed(e.to_string()))?;
        if c.header.format != SPOKEN_FORMAT {
            return Err(AsrError::Malformed(format!("unknown spoken-corpus format {:?}", c.header.format)));
        }
        for d in &c.documents {
            d.check()?;
        }
        Ok(c)
    }
}

/// Runs every document of `dataset` through the channel with one generator
/// seeded from `cfg.seed`, then aligns and timestamps the output.
pub fn synthesize_corpus(
    dataset: &QADataset,
    channel: &ErrorChannel,
    cfg: &ChannelConfig,
    phones_per_second: f64,
) -> Result<SpokenCorpus, AsrError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut errors = 0usize;
    let mut total = 0usize;
    let mut documents = Vec::with_capacity(dataset.documents.len());
    for doc in &dataset.documents {
        let refs: Vec<&str> = doc.tokens.iter().map(|t| t.text.as_str()).collect();
        let hyp = channel.corrupt(&refs, cfg, &mut rng)?;
        let hyp_refs: Vec<&str> = hyp.iter().map(String::as_str).collect();
        let (d, alignment) = levenshtein_align(&refs, &hyp_refs);
        errors += d;
        total += refs.len();
        documents.push(SpokenDocument {
            doc_id: doc.id.clone(),
            ref_tokens: doc.tokens.clone(),
            hyp_words: synthesize_timestamps(&hyp, channel.lexicon(), phones_per_second),
            alignment,
            wer: if refs.is_empty() { 0.0 } else { d as f64 / refs.len() as f64 },
        });
    }
    Ok(SpokenCorpus {
        header: SpokenHeader {
            format: SPOKEN_FORMAT.to_string(),
            split: dataset.split,
            channel: *cfg,
            seed: cfg.seed,
            phones_per_second,
            lexicon_fingerprint: channel.lexicon().fingerprint(),
            corpus_wer: if total == 0 { 0.0 } else { errors as f64 / total as f64 },
        },
        documents,
    })
}
