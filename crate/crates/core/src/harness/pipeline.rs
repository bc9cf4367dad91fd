//! The stages between a QA dataset and a metric report: synthesize
//! transcripts, filter, build training material, train, evaluate.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::asr_sim::{
    synthesize_corpus, Calibration, ChannelConfig, ErrorChannel, SpokenCorpus, SpokenDocument,
};
use crate::corpus::{filter_answerable, FilterOutcome, QADataset, QAPair};
use crate::metrics::{
    aggregate, aos, exact_match, f1, ground_truth_interval, normalize_answer, predicted_interval, ExampleRecord,
    MetricReport, TimeInterval,
};
use crate::neural::{word_key, SpanCorpus, SpanExample, SpanModel};

/// Channel settings for one synthesis run: either explicit rates or a target
/// WER to calibrate against the dataset itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ChannelRequest {
    Target(f64),
    Explicit(ChannelConfig),
}

/// Runs the dataset's documents through the channel. With a positive target
/// the overall error scale is calibrated on the same documents and seed, so
/// the header WER is the calibrated measurement.
pub fn synthesize(
    dataset: &QADataset,
    channel: &ErrorChannel,
    request: ChannelRequest,
    seed: u64,
    phones_per_second: f64,
) -> Result<(SpokenCorpus, Option<Calibration>), HarnessError> {
    let (cfg, calibration) = match request {
        ChannelRequest::Explicit(cfg) => (ChannelConfig { seed, ..cfg }, None),
        ChannelRequest::Target(t) if t == 0.0 => {
            (ChannelConfig { target_wer: Some(0.0), ..ChannelConfig::identity(seed) }.with_pool(channel.pool_size()), None)
        }
        ChannelRequest::Target(t) => {
            let tokens: Vec<Vec<&str>> = dataset
                .documents
                .iter()
                .map(|d| d.tokens.iter().map(|t| t.text.as_str()).collect())
                .collect();
            let template = ChannelConfig::identity(seed).with_pool(channel.pool_size());
            let cal = channel.calibrate(t, &tokens, &template)?;
            (cal.config, Some(cal))
        }
    };
    Ok((synthesize_corpus(dataset, channel, &cfg, phones_per_second)?, calibration))
}

pub fn filter(dataset: &QADataset, spoken: &SpokenCorpus) -> Result<(QADataset, FilterOutcome), HarnessError> {
    Ok(filter_answerable(dataset, &spoken.by_doc())?)
}

/// Reference documents with the first answer's token span.
pub fn text_training_corpus(dataset: &QADataset) -> SpanCorpus {
    let index: HashMap<&str, usize> = dataset.documents.iter().enumerate().map(|(i, d)| (d.id.as_str(), i)).collect();
    SpanCorpus {
        documents: dataset.documents.iter().map(|d| d.tokens.iter().map(|t| t.text.clone()).collect()).collect(),
        examples: dataset
            .pairs
            .iter()
            .filter_map(|p| {
                Some(SpanExample {
                    id: p.id.clone(),
                    doc: *index.get(p.doc_id.as_str())?,
                    question: p.question_tokens.iter().map(|t| t.text.clone()).collect(),
                    span: p.answers.first()?.token_span,
                })
            })
            .collect(),
    }
}

/// Where the answer sits in the transcript: the occurrence of its normalized
/// tokens closest to the position the alignment projects the reference span to.
pub fn locate_answer(answer: &str, ref_span: (usize, usize), spoken: &SpokenDocument) -> Option<(usize, usize)> {
    let target = normalize_answer(answer);
    if target.is_empty() {
        return None;
    }
    // normalized words of the transcript with their hypothesis positions
    let mut words: Vec<(String, usize)> = Vec::new();
    for (i, w) in spoken.hyp_words.iter().enumerate() {
        for n in normalize_answer(&w.text) {
            words.push((n, i));
        }
    }
    let map = spoken.ref_to_hyp();
    let anchor = map[ref_span.0.min(map.len())..]
        .iter()
        .flatten()
        .next()
        .copied()
        .unwrap_or(spoken.hyp_words.len());
    let mut best: Option<(usize, (usize, usize))> = None;
    for s in 0..words.len().saturating_sub(target.len() - 1) {
        if words[s..s + target.len()].iter().map(|(w, _)| w).eq(target.iter()) {
            let span = (words[s].1, words[s + target.len() - 1].1);
            let dist = span.0.abs_diff(anchor);
            if best.is_none_or(|(d, _)| dist < d) {
                best = Some((dist, span));
            }
        }
    }
    best.map(|(_, s)| s)
}

/// Transcripts with answer spans located in them; pairs whose answer did
/// not survive recognition are dropped and counted.
pub fn speech_training_corpus(dataset: &QADataset, spoken: &SpokenCorpus) -> Result<(SpanCorpus, usize), HarnessError> {
    let by_doc = spoken.by_doc();
    let mut documents = Vec::with_capacity(dataset.documents.len());
    let mut index = HashMap::new();
    for d in &dataset.documents {
        let s = by_doc.get(&d.id).ok_or_else(|| crate::corpus::CorpusError::MissingTranscript(d.id.clone()))?;
        index.insert(d.id.as_str(), documents.len());
        documents.push(s.hyp_words.iter().map(|w| w.text.clone()).collect::<Vec<_>>());
    }
    let mut examples = Vec::new();
    let mut dropped = 0;
    for p in &dataset.pairs {
        let located = p.answers.first().and_then(|a| locate_answer(&a.text, a.token_span, &by_doc[&p.doc_id]));
        match (located, index.get(p.doc_id.as_str())) {
            (Some(span), Some(&doc)) => examples.push(SpanExample {
                id: p.id.clone(),
                doc,
                question: p.question_tokens.iter().map(|t| t.text.clone()).collect(),
                span,
            }),
            _ => dropped += 1,
        }
    }
    Ok((SpanCorpus { documents, examples }, dropped))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub question: String,
    pub answers: Vec<String>,
    pub predicted: String,
    pub span: (usize, usize),
    pub interval: TimeInterval,
    pub gold_interval: TimeInterval,
    pub em: u8,
    pub f1: f64,
    pub aos: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub report: MetricReport,
    pub predictions: Vec<Prediction>,
    /// Questions with no answer reference that can be grounded in time.
    pub skipped: usize,
}

/// Scores span predictions over transcripts. `predict` receives one
/// transcript and the questions asked about it and returns one
/// hypothesis-word span per question.
pub fn evaluate_with<F>(dataset: &QADataset, spoken: &SpokenCorpus, mut predict: F) -> Result<Evaluation, HarnessError>
where
    F: FnMut(&SpokenDocument, &[&QAPair]) -> Result<Vec<(usize, usize)>, HarnessError>,
{
    let by_doc = spoken.by_doc();
    let mut grouped: BTreeMap<&str, Vec<&QAPair>> = BTreeMap::new();
    let mut order: Vec<&str> = Vec::new();
    for p in &dataset.pairs {
        let e = grouped.entry(p.doc_id.as_str()).or_default();
        if e.is_empty() {
            order.push(p.doc_id.as_str());
        }
        e.push(p);
    }
    let mut by_id: HashMap<String, Prediction> = HashMap::new();
    let mut skipped = 0;
    for doc_id in order {
        let doc = by_doc.get(doc_id).ok_or_else(|| crate::corpus::CorpusError::MissingTranscript(doc_id.to_string()))?;
        let mut scorable = Vec::new();
        let mut gold = Vec::new();
        for &p in &grouped[doc_id] {
            match p.answers.iter().find_map(|a| ground_truth_interval(a.token_span, doc).ok()) {
                Some(iv) if !doc.hyp_words.is_empty() => {
                    scorable.push(p);
                    gold.push(iv);
                }
                _ => skipped += 1,
            }
        }
        if scorable.is_empty() {
            continue;
        }
        let spans = predict(doc, &scorable)?;
        for ((p, span), gold_interval) in scorable.iter().zip(spans).zip(gold) {
            let words = doc.hyp_texts();
            let predicted = words[span.0..=span.1].join(" ");
            let answers: Vec<String> = p.answer_texts().iter().map(|s| s.to_string()).collect();
            let interval = predicted_interval(span, doc)?;
            by_id.insert(
                p.id.clone(),
                Prediction {
                    id: p.id.clone(),
                    question: p.question.clone(),
                    em: exact_match(&predicted, &answers)?,
                    f1: f1(&predicted, &answers)?,
                    aos: aos(interval, gold_interval)?,
                    answers,
                    predicted,
                    span,
                    interval,
                    gold_interval,
                },
            );
        }
    }
    // dataset order
    let predictions: Vec<Prediction> = dataset.pairs.iter().filter_map(|p| by_id.remove(&p.id)).collect();
    let records = predictions
        .iter()
        .map(|p| ExampleRecord { id: p.id.clone(), em: p.em, f1: p.f1, aos: p.aos })
        .collect();
    let report = aggregate(records)?.with_wer(spoken.header.corpus_wer);
    Ok(Evaluation { report, predictions, skipped })
}

/// Evaluates a trained model. Fails with a vocabulary mismatch when none of
/// the transcript words are known to the model.
pub fn evaluate_model(model: &SpanModel, dataset: &QADataset, spoken: &SpokenCorpus) -> Result<Evaluation, HarnessError> {
    let known = spoken
        .documents
        .iter()
        .flat_map(|d| d.hyp_words.iter())
        .any(|w| model.vocab.words.get(&word_key(&w.text)).is_some_and(|i| i > 0));
    if !known {
        return Err(HarnessError::VocabularyMismatch("no transcript word is in the model vocabulary".into()));
    }
    evaluate_with(dataset, spoken, |doc, pairs| {
        let questions: Vec<Vec<&str>> = pairs.iter().map(|p| p.question_tokens.iter().map(|t| t.text.as_str()).collect()).collect();
        Ok(model.predict_all(&doc.hyp_texts(), &questions)?)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::fixture::{generate, FixtureConfig};
    use crate::harness::{bundled_resources, BUNDLED_LEXICON};
    use crate::subword::PronunciationLexicon;

    fn lexicon() -> PronunciationLexicon {
        PronunciationLexicon::parse_arpabet(BUNDLED_LEXICON).unwrap()
    }

    #[test]
    fn gold_oracle_on_clean_corpus_is_perfect() {
        let fx = generate(&FixtureConfig::tiny(2)).unwrap();
        let lex = lexicon();
        let ch = ErrorChannel::new(&lex, 8).unwrap();
        let (spoken, cal) = synthesize(&fx.test, &ch, ChannelRequest::Target(0.0), 1, 12.0).unwrap();
        assert!(cal.is_none());
        for d in &spoken.documents {
            assert_eq!(d.hyp_texts(), d.ref_texts());
        }
        let eval = evaluate_with(&fx.test, &spoken, |_, pairs| Ok(pairs.iter().map(|p| p.answers[0].token_span).collect())).unwrap();
        assert_eq!((eval.report.em, eval.report.f1, eval.report.aos), (100.0, 100.0, 1.0));
        assert_eq!(eval.skipped, 0);
        assert!(eval.predictions.iter().all(|p| p.em == 1 && p.aos == 1.0));
    }

    #[test]
    fn shifted_prediction_loses_overlap() {
        let fx = generate(&FixtureConfig::tiny(2)).unwrap();
        let lex = lexicon();
        let ch = ErrorChannel::new(&lex, 8).unwrap();
        let (spoken, _) = synthesize(&fx.test, &ch, ChannelRequest::Target(0.0), 1, 12.0).unwrap();
        // grow each span one word to the left: still overlaps, text no longer exact
        let eval = evaluate_with(&fx.test, &spoken, |_, pairs| {
            Ok(pairs.iter().map(|p| (p.answers[0].token_span.0.saturating_sub(1), p.answers[0].token_span.1)).collect())
        })
        .unwrap();
        assert!(eval.report.aos < 1.0 && eval.report.aos > 0.0);
        assert!(eval.report.f1 > 0.0 && eval.report.f1 < 100.0);
    }

    #[test]
    fn speech_corpus_spans_match_answers() {
        let fx = generate(&FixtureConfig::tiny(4)).unwrap();
        let lex = lexicon();
        let ch = ErrorChannel::new(&lex, 8).unwrap();
        let cfg = ChannelConfig::identity(3).scaled(0.4);
        let (spoken, _) = synthesize(&fx.train, &ch, ChannelRequest::Explicit(cfg), 3, 12.0).unwrap();
        let (corpus, dropped) = speech_training_corpus(&fx.train, &spoken).unwrap();
        assert_eq!(corpus.examples.len() + dropped, fx.train.pairs.len());
        assert!(dropped > 0 && !corpus.examples.is_empty());
        corpus.validate().unwrap();
        for ex in &corpus.examples {
            let pair = fx.train.pairs.iter().find(|p| p.id == ex.id).unwrap();
            let text = corpus.documents[ex.doc][ex.span.0..=ex.span.1].join(" ");
            assert_eq!(normalize_answer(&text), normalize_answer(&pair.answers[0].text));
        }
        let _ = bundled_resources().unwrap();
    }
}
