//! `sqa`: command-line front end for the spoken QA toolkit.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use sqa_core::asr_sim::{ChannelConfig, ErrorChannel, SpokenCorpus, DEFAULT_PHONES_PER_SECOND};
use sqa_core::corpus::{QADataset, Split};
use sqa_core::harness::fixture::{generate, FixtureConfig};
use sqa_core::harness::{
    bundled_resources, evaluate_model, filter, load_resources, parse_embeddings, render_report, render_summary_csv,
    run_experiment, speech_training_corpus, synthesize, text_training_corpus, write_outputs, ChannelRequest,
    ExperimentData, ExperimentSpec, HarnessError, RunRecord, Tier,
};
use sqa_core::neural::{checkpoint, train, Resources, SpanModelConfig, TrainConfig};

#[derive(Parser)]
#[command(name = "sqa", version, about = "Spoken extractive QA benchmark toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ResourceArgs {
    /// ARPAbet pronunciation dictionary (defaults to the bundled one).
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,
    /// Hyphenation pattern file used for syllables (defaults to the bundled one).
    #[arg(long, global = true)]
    patterns: Option<PathBuf>,
}

#[derive(Args)]
struct NoiseArgs {
    /// Named noise tier: clean-ref, wer-22.73, wer-44.22 or wer-54.82.
    #[arg(long, conflicts_with = "target_wer")]
    tier: Option<Tier>,
    /// Corpus WER to calibrate the channel to.
    #[arg(long)]
    target_wer: Option<f64>,
    /// Explicit per-token substitution rate (with --del-rate, --ins-rate).
    #[arg(long, conflicts_with_all = ["tier", "target_wer"])]
    sub_rate: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    del_rate: f64,
    #[arg(long, default_value_t = 0.0)]
    ins_rate: f64,
    #[arg(long, default_value_t = 8)]
    confusion_pool: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic train/test corpus in SQuAD layout.
    Fixture {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 400)]
        train_docs: usize,
        #[arg(long, default_value_t = 100)]
        test_docs: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Find the channel error scale for a target corpus WER.
    Calibrate {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        target_wer: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        confusion_pool: usize,
        #[command(flatten)]
        resources: ResourceArgs,
    },
    /// Run a dataset's documents through the recognizer channel.
    Synthesize {
        #[arg(long)]
        dataset: PathBuf,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_PHONES_PER_SECOND)]
        phones_per_second: f64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        resources: ResourceArgs,
    },
    /// Keep only questions whose answer survives in the transcript.
    Filter {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        spoken: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a span model and write a checkpoint.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        /// Train on these transcripts instead of the reference text.
        #[arg(long)]
        spoken: Option<PathBuf>,
        /// Comma-separated subword units added to the word embedding: char, phoneme, syllable.
        #[arg(long, default_value = "")]
        embeddings: String,
        /// Apply dropout to word representations.
        #[arg(long)]
        dropout: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        hidden: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        resources: ResourceArgs,
    },
    /// Score a checkpoint on a dataset and its transcripts (EM, F1, AOS).
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        spoken: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        resources: ResourceArgs,
    },
    /// Run an experiment grid described by a JSON spec.
    Experiment {
        #[arg(long)]
        spec: PathBuf,
        /// Train split (defaults to the fixture named in the spec).
        #[arg(long, requires = "test")]
        train: Option<PathBuf>,
        #[arg(long, requires = "train")]
        test: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        quiet: bool,
        #[command(flatten)]
        resources: ResourceArgs,
    },
    /// Re-render report.md and summary.csv from a run record.
    Report {
        #[arg(long)]
        record: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

struct Failure {
    kind: &'static str,
    message: String,
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Self { kind: e.kind(), message: e.to_string() }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure { kind: "invalid_input", message: message.into() }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure { kind: "io", message: format!("{}: {e}", path.display()) })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure { kind: "io", message: format!("{}: {e}", dir.display()) })?;
    }
    std::fs::write(path, bytes).map_err(|e| Failure { kind: "io", message: format!("{}: {e}", path.display()) })
}

fn read_text(path: &Path) -> Result<String, Failure> {
    String::from_utf8(read(path)?).map_err(|_| invalid(format!("{} is not UTF-8", path.display())))
}

fn load_dataset(path: &Path, split: Split) -> Result<QADataset, Failure> {
    Ok(QADataset::load(&read(path)?, split).map_err(HarnessError::from)?)
}

fn load_spoken(path: &Path) -> Result<SpokenCorpus, Failure> {
    Ok(SpokenCorpus::from_json(&read(path)?).map_err(HarnessError::from)?)
}

fn resources(args: &ResourceArgs) -> Result<Resources, Failure> {
    match (&args.lexicon, &args.patterns) {
        (None, None) => Ok(bundled_resources()?),
        (lex, pat) => {
            let lex = match lex {
                Some(p) => read_text(p)?,
                None => sqa_core::harness::BUNDLED_LEXICON.to_string(),
            };
            let pat = match pat {
                Some(p) => read_text(p)?,
                None => sqa_core::harness::BUNDLED_PATTERNS.to_string(),
            };
            Ok(load_resources(&lex, &pat)?)
        }
    }
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json value serializes"));
}

fn channel_request(noise: &NoiseArgs) -> Result<ChannelRequest, Failure> {
    if let Some(sub) = noise.sub_rate {
        let cfg = ChannelConfig {
            sub_rate: sub,
            del_rate: noise.del_rate,
            ins_rate: noise.ins_rate,
            ..ChannelConfig::identity(0)
        }
        .with_pool(noise.confusion_pool);
        return Ok(ChannelRequest::Explicit(cfg));
    }
    match (noise.tier, noise.target_wer) {
        (Some(t), _) => Ok(ChannelRequest::Target(t.target_wer())),
        (None, Some(w)) => Ok(ChannelRequest::Target(w)),
        (None, None) => Err(invalid("one of --tier, --target-wer or --sub-rate is required")),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Fixture { out, train_docs, test_docs, seed } => {
            let cfg = FixtureConfig { train_documents: train_docs, test_documents: test_docs, seed, ..FixtureConfig::default() };
            let fx = generate(&cfg).map_err(HarnessError::from)?;
            write(&out.join("train.json"), &fx.train_json)?;
            write(&out.join("test.json"), &fx.test_json)?;
            print_json(&json!({
                "train": { "documents": fx.train.documents.len(), "questions": fx.train.pairs.len(), "tokens": fx.train.token_count() },
                "test": { "documents": fx.test.documents.len(), "questions": fx.test.pairs.len(), "tokens": fx.test.token_count() },
            }));
        }
        Command::Calibrate { dataset, target_wer, seed, confusion_pool, resources: r } => {
            let ds = load_dataset(&dataset, Split::Test)?;
            let res = resources(&r)?;
            let channel = ErrorChannel::new(&res.lexicon, confusion_pool).map_err(HarnessError::from)?;
            let tokens: Vec<Vec<&str>> =
                ds.documents.iter().map(|d| d.tokens.iter().map(|t| t.text.as_str()).collect()).collect();
            let template = ChannelConfig::identity(seed).with_pool(confusion_pool);
            let cal = channel.calibrate(target_wer, &tokens, &template).map_err(HarnessError::from)?;
            print_json(&json!({
                "config": cal.config,
                "scale": cal.scale,
                "measured_wer": cal.measured_wer,
                "steps": cal.steps,
            }));
        }
        Command::Synthesize { dataset, noise, seed, phones_per_second, out, resources: r } => {
            let ds = load_dataset(&dataset, Split::Test)?;
            let res = resources(&r)?;
            let channel = ErrorChannel::new(&res.lexicon, noise.confusion_pool).map_err(HarnessError::from)?;
            let (spoken, _) = synthesize(&ds, &channel, channel_request(&noise)?, seed, phones_per_second)?;
            write(&out, &spoken.to_json())?;
            print_json(&json!({ "documents": spoken.documents.len(), "corpus_wer": spoken.header.corpus_wer }));
        }
        Command::Filter { dataset, spoken, out } => {
            let ds = load_dataset(&dataset, Split::Test)?;
            let sp = load_spoken(&spoken)?;
            let (kept, outcome) = filter(&ds, &sp)?;
            write(&out, &kept.to_json())?;
            print_json(&json!({
                "kept": outcome.kept,
                "removed_absent": outcome.removed_absent,
                "removed_unalignable": outcome.removed_unalignable,
            }));
        }
        Command::Train { dataset, spoken, embeddings, dropout, seed, epochs, learning_rate, hidden, out, resources: r } => {
            let ds = load_dataset(&dataset, Split::Train)?;
            let res = resources(&r)?;
            let (corpus, dropped) = match spoken {
                Some(p) => speech_training_corpus(&ds, &load_spoken(&p)?)?,
                None => (text_training_corpus(&ds), 0),
            };
            let embs = parse_embeddings(&embeddings).map_err(invalid)?;
            let units: Vec<_> = embs.iter().filter_map(|e| e.unit()).collect();
            let mut model_cfg = SpanModelConfig::default().with_units(&units);
            if let Some(h) = hidden {
                model_cfg.hidden = h;
            }
            let defaults = TrainConfig::default();
            let cfg = TrainConfig {
                seed,
                dropout: if dropout { defaults.dropout } else { 0.0 },
                epochs: epochs.unwrap_or(defaults.epochs),
                learning_rate: learning_rate.unwrap_or(defaults.learning_rate),
                ..defaults
            };
            let (model, losses) = train(&corpus, &model_cfg, &cfg, &res).map_err(HarnessError::from)?;
            write(&out, &checkpoint::to_bytes(&model))?;
            print_json(&json!({ "examples": corpus.examples.len(), "dropped": dropped, "losses": losses }));
        }
        Command::Evaluate { checkpoint: ckpt, dataset, spoken, out, resources: r } => {
            let res = resources(&r)?;
            let model = checkpoint::from_bytes(&read(&ckpt)?, &res).map_err(HarnessError::from)?;
            let ds = load_dataset(&dataset, Split::Test)?;
            let sp = load_spoken(&spoken)?;
            let eval = evaluate_model(&model, &ds, &sp)?;
            write(&out.join("metrics.json"), &eval.report.to_json())?;
            write(&out.join("metrics.csv"), &eval.report.to_csv())?;
            write(&out.join("predictions.json"), &serde_json::to_vec_pretty(&eval.predictions).expect("predictions serialize"))?;
            print_json(&json!({
                "em": eval.report.em,
                "f1": eval.report.f1,
                "aos": eval.report.aos,
                "corpus_wer": eval.report.corpus_wer,
                "questions": eval.report.records.len(),
                "skipped": eval.skipped,
            }));
        }
        Command::Experiment { spec, train: train_path, test, out, quiet, resources: r } => {
            let spec: ExperimentSpec =
                serde_json::from_slice(&read(&spec)?).map_err(|e| invalid(format!("experiment spec: {e}")))?;
            spec.validate()?;
            let res = resources(&r)?;
            let data = match (train_path, test) {
                (Some(tr), Some(te)) => ExperimentData { train: load_dataset(&tr, Split::Train)?, test: load_dataset(&te, Split::Test)? },
                _ => ExperimentData::fixture(&spec.fixture)?,
            };
            let record = run_experiment(&spec, &data, &res, |m| {
                if !quiet {
                    eprintln!("{m}");
                }
            })?;
            write_outputs(&record, &out)?;
            print!("{}", render_report(&record));
        }
        Command::Report { record, out } => {
            let record = RunRecord::from_json(&read(&record)?)?;
            write(&out.join("report.md"), render_report(&record).as_bytes())?;
            write(&out.join("summary.csv"), &render_summary_csv(&record))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({ "error": { "kind": f.kind, "message": f.message } }));
            ExitCode::FAILURE
        }
    }
}
