use std::collections::HashMap;

use super::{CorpusError, QADataset};
use crate::asr_sim::SpokenDocument;
use crate::metrics::{ground_truth_interval, normalize_answer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FilterOutcome {
    pub kept: usize,
    /// Answer text absent from the transcript.
    pub removed_absent: usize,
    /// Answer text present somewhere, but every answer token was deleted at
    /// its own position, so no time span can be grounded.
    pub removed_unalignable: usize,
}

impl FilterOutcome {
    pub fn removed(&self) -> usize {
        self.removed_absent + self.removed_unalignable
    }
}

fn contains_run(haystack: &[String], needle: &[String]) -> bool {
    needle.is_empty() || haystack.windows(needle.len()).any(|w| w == needle)
}

/// Keeps the pairs whose first reference answer survives recognition: its
/// normalized tokens occur contiguously in the normalized transcript and at
/// least one of its reference tokens is aligned to a hypothesis word.
pub fn filter_answerable(
    dataset: &QADataset,
    transcripts: &HashMap<String, SpokenDocument>,
) -> Result<(QADataset, FilterOutcome), CorpusError> {
    let mut normalized: HashMap<&str, Vec<String>> = HashMap::new();
    for doc in &dataset.documents {
        let spoken = transcripts.get(&doc.id).ok_or_else(|| CorpusError::MissingTranscript(doc.id.clone()))?;
        normalized.insert(&doc.id, normalize_answer(&spoken.hyp_texts().join(" ")));
    }
    let mut outcome = FilterOutcome::default();
    let mut pairs = Vec::new();
    for pair in &dataset.pairs {
        let Some(first) = pair.answers.first() else {
            outcome.removed_absent += 1;
            continue;
        };
        let hyp = normalized
            .get(pair.doc_id.as_str())
            .ok_or_else(|| CorpusError::MissingTranscript(pair.doc_id.clone()))?;
        if !contains_run(hyp, &normalize_answer(&first.text)) {
            outcome.removed_absent += 1;
        } else if ground_truth_interval(first.token_span, &transcripts[&pair.doc_id]).is_err() {
            outcome.removed_unalignable += 1;
        } else {
            outcome.kept += 1;
            pairs.push(pair.clone());
        }
    }
    Ok((QADataset { split: dataset.split, documents: dataset.documents.clone(), pairs }, outcome))
}
