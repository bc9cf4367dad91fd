use sqa_core::asr_sim::{replay, timestamps_valid, ChannelConfig, ErrorChannel, SpokenCorpus};
use sqa_core::corpus::{QADataset, Split};
use sqa_core::harness::fixture::{generate, FixtureConfig};
use sqa_core::harness::{bundled_resources, evaluate_model, filter, synthesize, text_training_corpus, ChannelRequest};
use sqa_core::neural::{checkpoint, train, SpanModelConfig, SubwordUnit, TrainConfig};
use sqa_core::subword::{g2p, syllabify};

#[test]
fn squad_layout_and_canonical_files_agree() {
    let fx = generate(&FixtureConfig::tiny(2)).unwrap();
    let from_squad = QADataset::load(&fx.test_json, Split::Test).unwrap();
    assert_eq!(from_squad, fx.test);
    let canonical = QADataset::load(&fx.test.to_json(), Split::Test).unwrap();
    assert_eq!(canonical, fx.test);
    let again = QADataset::load(&fx.test.to_squad_json(), Split::Test).unwrap();
    assert_eq!(again, fx.test);
}

#[test]
fn spoken_corpus_is_consistent_and_round_trips() {
    let fx = generate(&FixtureConfig { train_documents: 2, test_documents: 30, ..FixtureConfig::default() }).unwrap();
    let r = bundled_resources().unwrap();
    let ch = ErrorChannel::new(&r.lexicon, 8).unwrap();
    let cfg = ChannelConfig::identity(0).scaled(0.5);
    let (spoken, cal) = synthesize(&fx.test, &ch, ChannelRequest::Explicit(cfg), 4, 12.0).unwrap();
    assert!(cal.is_none());
    let mut errors = 0;
    let mut tokens = 0;
    for doc in &spoken.documents {
        let refs = doc.ref_texts();
        let hyps = doc.hyp_texts();
        assert_eq!(replay(&doc.alignment, &refs, &hyps).unwrap(), hyps);
        assert!(timestamps_valid(&doc.hyp_words));
        errors += doc.errors();
        tokens += refs.len();
    }
    assert!((spoken.header.corpus_wer - errors as f64 / tokens as f64).abs() < 1e-12);
    assert!(spoken.header.corpus_wer > 0.1);
    let back = SpokenCorpus::from_json(&spoken.to_json()).unwrap();
    assert_eq!(back.to_json(), spoken.to_json());
}

#[test]
fn bundled_lexicon_and_patterns() {
    let r = bundled_resources().unwrap();
    let cat: Vec<&str> = g2p("cat", &r.lexicon).unwrap().into_iter().map(|p| r.lexicon.inventory().symbol(p)).collect();
    assert_eq!(cat, ["K", "AE", "T"]);
    assert_eq!(syllabify("hyphenation", &r.patterns).unwrap().concat(), "hyphenation");
    assert!(syllabify("hyphenation", &r.patterns).unwrap().len() >= 3);
    for w in ["Riverside", "Bernardino", "newspaper"] {
        assert_eq!(syllabify(w, &r.patterns).unwrap().concat(), w);
    }
}

#[test]
fn checkpoint_reproduces_evaluation() {
    let fx = generate(&FixtureConfig { train_documents: 20, test_documents: 80, ..FixtureConfig::default() }).unwrap();
    let r = bundled_resources().unwrap();
    let corpus = text_training_corpus(&fx.train);
    let cfg = SpanModelConfig { word_dim: 12, hidden: 6, ..SpanModelConfig::default() }.with_units(&[SubwordUnit::Phoneme]);
    let (model, losses) = train(&corpus, &cfg, &TrainConfig { epochs: 2, ..TrainConfig::default() }, &r).unwrap();
    assert_eq!(losses.len(), 2);
    let ch = ErrorChannel::new(&r.lexicon, 8).unwrap();
    let (spoken, _) = synthesize(&fx.test, &ch, ChannelRequest::Target(0.2273), 1, 12.0).unwrap();
    let (kept, _) = filter(&fx.test, &spoken).unwrap();
    let before = evaluate_model(&model, &kept, &spoken).unwrap();
    let loaded = checkpoint::from_bytes(&checkpoint::to_bytes(&model), &r).unwrap();
    let after = evaluate_model(&loaded, &kept, &spoken).unwrap();
    assert_eq!(before, after);
}
