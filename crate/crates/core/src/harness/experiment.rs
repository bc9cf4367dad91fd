//! Experiment grid: embedding sets × seeds, trained on one side, evaluated
//! on several test tiers, summarised as a comparison table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::fixture::{generate, FixtureConfig};
use super::pipeline::{
    evaluate_model, filter, speech_training_corpus, synthesize, text_training_corpus, ChannelRequest, Evaluation,
};
use super::tiers::{Embedding, Tier, TrainSide};
use super::HarnessError;
use crate::asr_sim::{ErrorChannel, SpokenCorpus, DEFAULT_PHONES_PER_SECOND};
use crate::corpus::QADataset;
use crate::metrics::MetricReport;
use crate::neural::{train, Resources, SpanModelConfig, TrainConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowSpec {
    pub embeddings: Vec<Embedding>,
    #[serde(default)]
    pub dropout: bool,
}

impl RowSpec {
    pub fn new(embeddings: &[Embedding], dropout: bool) -> Self {
        let mut e = embeddings.to_vec();
        e.push(Embedding::Word);
        e.sort();
        e.dedup();
        Self { embeddings: e, dropout }
    }

    pub fn label(&self) -> String {
        let mut s = self.embeddings.iter().map(|e| e.name()).collect::<Vec<_>>().join("+");
        if self.dropout {
            s.push_str("+dropout");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub word_dim: usize,
    pub hidden: usize,
    pub min_count: usize,
}

impl Default for ModelSpec {
    fn default() -> Self {
        let d = SpanModelConfig::default();
        Self { word_dim: d.word_dim, hidden: d.hidden, min_count: d.min_count }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSpec {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Rate used by rows with the dropout flag.
    pub dropout_rate: f64,
    pub clip_norm: Option<f64>,
}

impl Default for TrainingSpec {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            learning_rate: d.learning_rate,
            epochs: d.epochs,
            batch_size: d.batch_size,
            dropout_rate: d.dropout,
            clip_norm: d.clip_norm,
        }
    }
}

fn default_pool() -> usize {
    8
}

fn default_rate() -> f64 {
    DEFAULT_PHONES_PER_SECOND
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub train_side: TrainSide,
    pub test_tiers: Vec<Tier>,
    pub rows: Vec<RowSpec>,
    pub seeds: Vec<u64>,
    /// Seeds the recognizer channel; training seeds come from `seeds`.
    #[serde(default)]
    pub corpus_seed: u64,
    #[serde(default)]
    pub fixture: FixtureConfig,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub training: TrainingSpec,
    #[serde(default = "default_pool")]
    pub confusion_pool_size: usize,
    #[serde(default = "default_rate")]
    pub phones_per_second: f64,
}

impl ExperimentSpec {
    pub fn new(train_side: TrainSide, test_tiers: &[Tier], rows: Vec<RowSpec>, seeds: &[u64]) -> Self {
        Self {
            train_side,
            test_tiers: test_tiers.to_vec(),
            rows,
            seeds: seeds.to_vec(),
            corpus_seed: 0,
            fixture: FixtureConfig::default(),
            model: ModelSpec::default(),
            training: TrainingSpec::default(),
            confusion_pool_size: default_pool(),
            phones_per_second: default_rate(),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |m: &str| Err(HarnessError::InvalidSpec(m.to_string()));
        if self.seeds.is_empty() {
            return fail("seed list is empty");
        }
        if self.test_tiers.is_empty() {
            return fail("no test tiers");
        }
        if self.rows.is_empty() {
            return fail("no embedding rows");
        }
        if self.rows.iter().any(|r| !r.embeddings.contains(&Embedding::Word)) {
            return fail("every embedding set must include word");
        }
        if !(self.phones_per_second > 0.0) {
            return fail("phones_per_second must be positive");
        }
        Ok(())
    }

    fn model_config(&self, row: &RowSpec) -> SpanModelConfig {
        let units: Vec<_> = row.embeddings.iter().filter_map(|e| e.unit()).collect();
        SpanModelConfig { word_dim: self.model.word_dim, hidden: self.model.hidden, min_count: self.model.min_count, units: Vec::new() }
            .with_units(&units)
    }

    fn train_config(&self, row: &RowSpec, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.training.learning_rate,
            epochs: self.training.epochs,
            batch_size: self.training.batch_size,
            dropout: if row.dropout { self.training.dropout_rate } else { 0.0 },
            seed,
            clip_norm: self.training.clip_norm,
        }
    }

    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("spec serializes")))
    }
}

/// Channel seed for one tier and split.
pub fn channel_seed(corpus_seed: u64, tier: Tier, split: u64) -> u64 {
    corpus_seed.wrapping_mul(1_000_003).wrapping_add(tier.index() * 2 + split)
}

#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub train: QADataset,
    pub test: QADataset,
}

impl ExperimentData {
    pub fn fixture(cfg: &FixtureConfig) -> Result<Self, HarnessError> {
        let f = generate(cfg)?;
        Ok(Self { train: f.train, test: f.test })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigHashes {
    pub spec: String,
    pub train_data: String,
    pub test_data: String,
    pub lexicon: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierSummary {
    pub tier: Tier,
    pub corpus_wer: f64,
    pub channel_scale: Option<f64>,
    pub retained: usize,
    pub removed_absent: usize,
    pub removed_unalignable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub side: TrainSide,
    pub corpus_wer: f64,
    pub examples: usize,
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub row: String,
    pub seed: u64,
    pub tier: Tier,
    pub report: MetricReport,
    pub skipped: usize,
    pub losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Qualitative {
    pub tier: Tier,
    pub seed: u64,
    pub question_id: String,
    pub document: String,
    pub transcript: String,
    pub question: String,
    pub answers: Vec<String>,
    pub predictions: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub spec: ExperimentSpec,
    pub hashes: ConfigHashes,
    pub training: TrainingSummary,
    pub tiers: Vec<TierSummary>,
    pub runs: Vec<RunEntry>,
    pub qualitative: Option<Qualitative>,
    /// Kept out of the serialized record so reruns compare byte for byte.
    #[serde(skip)]
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanScores {
    pub em: f64,
    pub f1: f64,
    pub aos: f64,
}

impl RunRecord {
    pub fn reports(&self, row: &str, tier: Tier) -> Vec<&MetricReport> {
        self.runs.iter().filter(|r| r.row == row && r.tier == tier).map(|r| &r.report).collect()
    }

    /// Seed-averaged EM, F1 and AOS for one row and tier.
    pub fn mean(&self, row: &str, tier: Tier) -> Option<MeanScores> {
        let reps = self.reports(row, tier);
        if reps.is_empty() {
            return None;
        }
        let n = reps.len() as f64;
        Some(MeanScores {
            em: reps.iter().map(|r| r.em).sum::<f64>() / n,
            f1: reps.iter().map(|r| r.f1).sum::<f64>() / n,
            aos: reps.iter().map(|r| r.aos).sum::<f64>() / n,
        })
    }

    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec_pretty(self).expect("run record serializes")
    }

    pub fn from_json(raw: &[u8]) -> Result<Self, HarnessError> {
        serde_json::from_slice(raw).map_err(|e| HarnessError::InvalidSpec(format!("run record: {e}")))
    }
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct TierData {
    spoken: SpokenCorpus,
    retained: QADataset,
}

/// Trains every (row, seed) pair and evaluates it on every requested tier.
pub fn run_experiment(
    spec: &ExperimentSpec,
    data: &ExperimentData,
    resources: &Resources,
    mut progress: impl FnMut(&str),
) -> Result<RunRecord, HarnessError> {
    spec.validate()?;
    let started = Instant::now();
    let channel = ErrorChannel::new(&resources.lexicon, spec.confusion_pool_size)?;

    let mut tiers = Vec::new();
    let mut tier_data = Vec::new();
    for &tier in &spec.test_tiers {
        let seed = channel_seed(spec.corpus_seed, tier, 1);
        let (spoken, cal) = synthesize(&data.test, &channel, ChannelRequest::Target(tier.target_wer()), seed, spec.phones_per_second)?;
        let (retained, outcome) = filter(&data.test, &spoken)?;
        progress(&format!("{tier}: test WER {:.4}, {} questions kept", spoken.header.corpus_wer, outcome.kept));
        tiers.push(TierSummary {
            tier,
            corpus_wer: spoken.header.corpus_wer,
            channel_scale: cal.map(|c| c.scale),
            retained: outcome.kept,
            removed_absent: outcome.removed_absent,
            removed_unalignable: outcome.removed_unalignable,
        });
        tier_data.push(TierData { spoken, retained });
    }

    let (corpus, training) = match spec.train_side {
        TrainSide::Text => {
            let c = text_training_corpus(&data.train);
            let n = c.examples.len();
            (c, TrainingSummary { side: TrainSide::Text, corpus_wer: 0.0, examples: n, dropped: data.train.pairs.len() - n })
        }
        TrainSide::Speech => {
            let seed = channel_seed(spec.corpus_seed, Tier::Wer2273, 0);
            let (spoken, _) = synthesize(&data.train, &channel, ChannelRequest::Target(Tier::Wer2273.target_wer()), seed, spec.phones_per_second)?;
            let (c, dropped) = speech_training_corpus(&data.train, &spoken)?;
            let n = c.examples.len();
            (c, TrainingSummary { side: TrainSide::Speech, corpus_wer: spoken.header.corpus_wer, examples: n, dropped })
        }
    };

    let mut runs = Vec::new();
    // predictions of the first seed, by tier then row, for the qualitative section
    let mut first_seed: BTreeMap<(Tier, usize), Evaluation> = BTreeMap::new();
    for (ri, row) in spec.rows.iter().enumerate() {
        for (si, &seed) in spec.seeds.iter().enumerate() {
            let t0 = Instant::now();
            let (model, losses) = train(&corpus, &spec.model_config(row), &spec.train_config(row, seed), resources)?;
            for (tier, td) in spec.test_tiers.iter().zip(&tier_data) {
                let eval = evaluate_model(&model, &td.retained, &td.spoken)?;
                progress(&format!(
                    "{} seed {seed} {tier}: EM {:.2} F1 {:.2} AOS {:.4} ({:.1}s)",
                    row.label(),
                    eval.report.em,
                    eval.report.f1,
                    eval.report.aos,
                    t0.elapsed().as_secs_f64()
                ));
                runs.push(RunEntry {
                    row: row.label(),
                    seed,
                    tier: *tier,
                    report: eval.report.clone(),
                    skipped: eval.skipped,
                    losses: losses.clone(),
                });
                if si == 0 {
                    first_seed.insert((*tier, ri), eval);
                }
            }
        }
    }

    let qualitative = pick_qualitative(spec, data, &tier_data, &first_seed);
    Ok(RunRecord {
        spec: spec.clone(),
        hashes: ConfigHashes {
            spec: spec.fingerprint(),
            train_data: digest(&data.train.to_json()),
            test_data: digest(&data.test.to_json()),
            lexicon: resources.lexicon.fingerprint(),
        },
        training,
        tiers,
        runs,
        qualitative,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    })
}

/// First question on the first noisy tier whose predictions differ between
/// rows (or simply the first question when they never do).
fn pick_qualitative(
    spec: &ExperimentSpec,
    data: &ExperimentData,
    tier_data: &[TierData],
    evals: &BTreeMap<(Tier, usize), Evaluation>,
) -> Option<Qualitative> {
    let ti = spec.test_tiers.iter().position(|&t| t != Tier::CleanRef).unwrap_or(0);
    let tier = spec.test_tiers[ti];
    let row_evals: Vec<&Evaluation> = (0..spec.rows.len()).filter_map(|ri| evals.get(&(tier, ri))).collect();
    let first = row_evals.first()?;
    let differs = |i: usize| row_evals.iter().any(|e| e.predictions.get(i).map(|p| &p.predicted) != first.predictions.get(i).map(|p| &p.predicted));
    let idx = (0..first.predictions.len()).find(|&i| differs(i)).unwrap_or(0);
    let pred = first.predictions.get(idx)?;
    let pair = tier_data[ti].retained.pairs.iter().find(|p| p.id == pred.id)?;
    let doc = data.test.document(&pair.doc_id)?;
    let spoken = tier_data[ti].spoken.get(&pair.doc_id)?;
    Some(Qualitative {
        tier,
        seed: spec.seeds[0],
        question_id: pair.id.clone(),
        document: doc.text.clone(),
        transcript: spoken.hyp_texts().join(" "),
        question: pair.question.clone(),
        answers: pair.answer_texts().iter().map(|s| s.to_string()).collect(),
        predictions: spec
            .rows
            .iter()
            .zip(&row_evals)
            .map(|(r, e)| (r.label(), e.predictions.iter().find(|p| p.id == pair.id).map_or(String::new(), |p| p.predicted.clone())))
            .collect(),
    })
}

/// Markdown report: tier summary, the comparison table (rows are embedding
/// sets, column groups are tiers) and the qualitative example.
pub fn render_report(record: &RunRecord) -> String {
    let spec = &record.spec;
    let mut out = String::new();
    let _ = writeln!(out, "# Experiment report\n");
    let _ = writeln!(
        out,
        "Training side: {} ({} examples, {} dropped, transcript WER {:.4}). Seeds: {}.\n",
        match record.training.side {
            TrainSide::Text => "text",
            TrainSide::Speech => "speech",
        },
        record.training.examples,
        record.training.dropped,
        record.training.corpus_wer,
        spec.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(", ")
    );
    let _ = writeln!(out, "| Tier | Test WER | Questions kept | Removed (absent) | Removed (unalignable) |");
    let _ = writeln!(out, "|---|---|---|---|---|");
    for t in &record.tiers {
        let _ = writeln!(out, "| {} | {:.4} | {} | {} | {} |", t.tier, t.corpus_wer, t.retained, t.removed_absent, t.removed_unalignable);
    }
    let _ = writeln!(out);
    let mut header = String::from("| Embeddings |");
    let mut rule = String::from("|---|");
    for t in &spec.test_tiers {
        let _ = write!(header, " {t} EM | {t} F1 | {t} AOS |");
        rule.push_str("---|---|---|");
    }
    let _ = writeln!(out, "{header}\n{rule}");
    for (i, row) in spec.rows.iter().enumerate() {
        let label = row.label();
        let mut line = format!("| ({}) {label} |", (b'a' + (i % 26) as u8) as char);
        for &t in &spec.test_tiers {
            match record.mean(&label, t) {
                Some(m) => {
                    let _ = write!(line, " {:.2} | {:.2} | {:.4} |", m.em, m.f1, m.aos);
                }
                None => line.push_str(" - | - | - |"),
            }
        }
        let _ = writeln!(out, "{line}");
    }
    if let Some(q) = &record.qualitative {
        let _ = writeln!(out, "\n## Example predictions ({}, seed {})\n", q.tier, q.seed);
        let _ = writeln!(out, "Document: {}\n", q.document);
        let _ = writeln!(out, "ASR transcript: {}\n", q.transcript);
        let _ = writeln!(out, "Question: {}\n", q.question);
        let _ = writeln!(out, "Gold answer: {}\n", q.answers.join(" | "));
        let _ = writeln!(out, "| Embeddings | Prediction |\n|---|---|");
        for (row, pred) in &q.predictions {
            let _ = writeln!(out, "| {row} | {pred} |");
        }
    }
    out
}

/// One line per (row, tier): seed-averaged EM, F1 and AOS.
pub fn render_summary_csv(record: &RunRecord) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["row", "tier", "seeds", "em", "f1", "aos", "test_wer"]).expect("in-memory write");
    for row in &record.spec.rows {
        let label = row.label();
        for t in &record.tiers {
            if let Some(m) = record.mean(&label, t.tier) {
                w.write_record([
                    label.clone(),
                    t.tier.to_string(),
                    record.reports(&label, t.tier).len().to_string(),
                    format!("{:.4}", m.em),
                    format!("{:.4}", m.f1),
                    format!("{:.6}", m.aos),
                    format!("{:.4}", t.corpus_wer),
                ])
                .expect("in-memory write");
            }
        }
    }
    w.into_inner().expect("in-memory flush")
}

/// Writes `run_record.json`, `report.md`, `summary.csv` and `timing.json` into `dir`.
pub fn write_outputs(record: &RunRecord, dir: &std::path::Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("run_record.json"), record.to_json())?;
    std::fs::write(dir.join("report.md"), render_report(record))?;
    std::fs::write(dir.join("summary.csv"), render_summary_csv(record))?;
    let timing = serde_json::json!({ "wall_clock_seconds": record.wall_clock_seconds });
    std::fs::write(dir.join("timing.json"), serde_json::to_vec_pretty(&timing).expect("timing serializes"))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::bundled_resources;

    fn small_spec() -> ExperimentSpec {
        let mut spec = ExperimentSpec::new(TrainSide::Text, &[Tier::CleanRef], vec![RowSpec::new(&[], false)], &[1]);
        spec.fixture = FixtureConfig { train_documents: 30, test_documents: 80, ..FixtureConfig::default() };
        spec.model = ModelSpec { word_dim: 8, hidden: 6, min_count: 1 };
        spec.training.epochs = 2;
        spec
    }

    #[test]
    fn single_seed_single_tier_gives_one_report() {
        let spec = small_spec();
        let data = ExperimentData::fixture(&spec.fixture).unwrap();
        let r = bundled_resources().unwrap();
        let record = run_experiment(&spec, &data, &r, |_| {}).unwrap();
        assert_eq!(record.runs.len(), 1);
        assert_eq!(record.reports("word", Tier::CleanRef).len(), 1);
        let report = render_report(&record);
        assert!(report.contains("| (a) word |"));
        assert!(report.contains("ASR transcript:"));
        let back = RunRecord::from_json(&record.to_json()).unwrap();
        assert_eq!(back.to_json(), record.to_json());
    }

    #[test]
    fn spec_validation() {
        let mut spec = small_spec();
        spec.seeds.clear();
        assert!(matches!(spec.validate(), Err(HarnessError::InvalidSpec(_))));
        let mut spec = small_spec();
        spec.rows = vec![RowSpec { embeddings: vec![Embedding::Phoneme], dropout: false }];
        assert!(spec.validate().is_err());
        assert_eq!(RowSpec::new(&[Embedding::Syllable, Embedding::Char], true).label(), "word+char+syllable+dropout");
    }
}
