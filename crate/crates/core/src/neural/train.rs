use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{Resources, SeqFeatures, Vocabularies};
use super::graph::{Graph, Var};
use super::model::{predict_span, Mode, SpanModel, SpanModelConfig};
use super::NeuralError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Questions per update; documents are never split across updates.
    pub batch_size: usize,
    pub dropout: f64,
    pub seed: u64,
    /// Global gradient-norm ceiling applied before each step.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 0.2, epochs: 12, batch_size: 16, dropout: 0.1, seed: 0, clip_norm: Some(5.0) }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(NeuralError::InvalidConfig(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(NeuralError::InvalidConfig(format!("dropout {} outside [0,1)", self.dropout)));
        }
        if self.batch_size == 0 {
            return Err(NeuralError::InvalidConfig("batch size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanExample {
    pub id: String,
    /// Index into [`SpanCorpus::documents`].
    pub doc: usize,
    pub question: Vec<String>,
    /// Inclusive token span in the document.
    pub span: (usize, usize),
}

/// Training material: tokenized documents (reference text or transcripts)
/// and questions with answer spans in those documents.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpanCorpus {
    pub documents: Vec<Vec<String>>,
    pub examples: Vec<SpanExample>,
}

impl SpanCorpus {
    pub fn validate(&self) -> Result<(), NeuralError> {
        for ex in &self.examples {
            let (i, j) = ex.span;
            let len = self.documents.get(ex.doc).map_or(0, Vec::len);
            if i > j || j >= len {
                return Err(NeuralError::InvalidSpan { id: ex.id.clone(), span: ex.span, doc_len: len });
            }
        }
        Ok(())
    }

    fn by_document(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.documents.len()];
        for (i, ex) in self.examples.iter().enumerate() {
            out[ex.doc].push(i);
        }
        out
    }
}

impl SpanModel {
    fn example_loss(&self, g: &mut Graph, dh: Var, q: &SeqFeatures, span: (usize, usize), mode: Mode, dropout: f64, rng: &mut impl Rng) -> Var {
        let mut qx = self.embed(g, q);
        if mode == Mode::Train {
            qx = g.dropout(qx, dropout, rng);
        }
        let qh = self.encode(g, qx);
        let qv = self.pool_question(g, qh);
        let (s, e) = self.pointers(g, dh, qv);
        let ls = g.nll_logits(s, span.0);
        let le = g.nll_logits(e, span.1);
        g.add(ls, le)
    }

    /// `-log p(start) - log p(end)` in eval mode.
    pub fn loss(&self, doc: &SeqFeatures, question: &SeqFeatures, span: (usize, usize)) -> Result<f64, NeuralError> {
        self.check_span(doc, question, span)?;
        let mut g = Graph::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let dx = self.embed(&mut g, doc);
        let dh = self.encode(&mut g, dx);
        let l = self.example_loss(&mut g, dh, question, span, Mode::Eval, 0.0, &mut rng);
        Ok(g.value(l).data()[0])
    }

    /// Adds the gradient of [`SpanModel::loss`] to the parameter gradient buffers.
    pub fn accumulate_gradients(&mut self, doc: &SeqFeatures, question: &SeqFeatures, span: (usize, usize)) -> Result<f64, NeuralError> {
        self.check_span(doc, question, span)?;
        let mut g = Graph::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let dx = self.embed(&mut g, doc);
        let dh = self.encode(&mut g, dx);
        let l = self.example_loss(&mut g, dh, question, span, Mode::Eval, 0.0, &mut rng);
        g.backward(l, &mut self.params);
        Ok(g.value(l).data()[0])
    }

    fn check_span(&self, doc: &SeqFeatures, question: &SeqFeatures, span: (usize, usize)) -> Result<(), NeuralError> {
        if doc.is_empty() {
            return Err(NeuralError::EmptyDocument);
        }
        if question.is_empty() {
            return Err(NeuralError::EmptyInput);
        }
        if span.0 > span.1 || span.1 >= doc.len() {
            return Err(NeuralError::InvalidSpan { id: String::new(), span, doc_len: doc.len() });
        }
        Ok(())
    }

    /// Predicted spans for several questions over one document, encoding the
    /// document once.
    pub fn predict_all<S: AsRef<str>, Q: AsRef<str>>(&self, doc: &[S], questions: &[Vec<Q>]) -> Result<Vec<(usize, usize)>, NeuralError> {
        if doc.is_empty() {
            return Err(NeuralError::EmptyDocument);
        }
        let df = self.featurize(doc);
        let mut g = Graph::new();
        let dx = self.embed(&mut g, &df);
        let dh = self.encode(&mut g, dx);
        let mut out = Vec::with_capacity(questions.len());
        for q in questions {
            if q.is_empty() {
                return Err(NeuralError::EmptyInput);
            }
            let mark = g.len();
            let qf = self.featurize(q);
            let qx = self.embed(&mut g, &qf);
            let qh = self.encode(&mut g, qx);
            let qv = self.pool_question(&mut g, qh);
            let (s, e) = self.pointers(&mut g, dh, qv);
            let ps = super::graph::softmax(g.value(s).data());
            let pe = super::graph::softmax(g.value(e).data());
            out.push(predict_span(&ps, &pe));
            g.truncate(mark);
        }
        Ok(out)
    }
}

/// Mini-batch gradient descent on the mean start/end negative log-likelihood.
/// Returns the model and the mean training loss of every epoch.
pub fn train(
    corpus: &SpanCorpus,
    model_config: &SpanModelConfig,
    config: &TrainConfig,
    resources: &Resources,
) -> Result<(SpanModel, Vec<f64>), NeuralError> {
    config.validate()?;
    corpus.validate()?;
    if corpus.examples.is_empty() {
        return Err(NeuralError::EmptyInput);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut seqs: Vec<&[String]> = corpus.documents.iter().map(Vec::as_slice).collect();
    seqs.extend(corpus.examples.iter().map(|e| e.question.as_slice()));
    let vocab = Vocabularies::build(&seqs, model_config.min_count, resources);
    let mut model = SpanModel::new(model_config.clone(), vocab, resources.clone(), &mut rng)?;

    let doc_feats: Vec<SeqFeatures> = corpus.documents.iter().map(|d| model.featurize(d)).collect();
    let q_feats: Vec<SeqFeatures> = corpus.examples.iter().map(|e| model.featurize(&e.question)).collect();
    let by_doc = corpus.by_document();
    let mut order: Vec<usize> = (0..by_doc.len()).filter(|&d| !by_doc[d].is_empty()).collect();

    let mut losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batch: Vec<usize> = Vec::new();
        let mut in_batch = 0;
        for (pos, &d) in order.iter().enumerate() {
            batch.push(d);
            in_batch += by_doc[d].len();
            if in_batch >= config.batch_size || pos + 1 == order.len() {
                for &bd in &batch {
                    let mut g = Graph::new();
                    let mut dx = model.embed(&mut g, &doc_feats[bd]);
                    dx = g.dropout(dx, config.dropout, &mut rng);
                    let dh = model.encode(&mut g, dx);
                    let mut sum: Option<Var> = None;
                    for &ex in &by_doc[bd] {
                        let l = model.example_loss(&mut g, dh, &q_feats[ex], corpus.examples[ex].span, Mode::Train, config.dropout, &mut rng);
                        total += g.value(l).data()[0];
                        sum = Some(match sum {
                            Some(s) => g.add(s, l),
                            None => l,
                        });
                    }
                    let scaled = g.scale(sum.expect("documents in the order have examples"), 1.0 / in_batch as f64);
                    g.backward(scaled, &mut model.params);
                }
                model.params.sgd_step(config.learning_rate, config.clip_norm);
                model.params.zero_grads();
                batch.clear();
                in_batch = 0;
            }
        }
        losses.push(total / corpus.examples.len() as f64);
    }
    Ok((model, losses))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subword::{PronunciationLexicon, SyllablePatterns};

    fn toy() -> (SpanCorpus, Resources) {
        let lex = PronunciationLexicon::parse_arpabet("CAT  K AE1 T\nDOG  D AO1 G\n").unwrap();
        let r = Resources::new(lex, SyllablePatterns::empty());
        let words = |s: &str| s.split(' ').map(String::from).collect::<Vec<_>>();
        let documents = vec![
            words("anna owns a cat and bruce owns a dog ."),
            words("carol owns a dog and frank owns a cat ."),
        ];
        let qs = [
            (0, "who owns a cat ?", (0, 0)),
            (0, "who owns a dog ?", (5, 5)),
            (0, "what does anna own ?", (3, 3)),
            (0, "what does bruce own ?", (8, 8)),
            (1, "who owns a dog ?", (0, 0)),
            (1, "who owns a cat ?", (5, 5)),
            (1, "what does carol own ?", (3, 3)),
            (1, "what does frank own ?", (8, 8)),
            (0, "what do anna and bruce own ?", (3, 8)),
            (1, "who are the owners ?", (0, 5)),
        ];
        let examples = qs
            .iter()
            .enumerate()
            .map(|(i, &(doc, q, span))| SpanExample { id: format!("q{i}"), doc, question: words(q), span })
            .collect();
        (SpanCorpus { documents, examples }, r)
    }

    #[test]
    fn overfits_toy_set_deterministically() {
        let (corpus, r) = toy();
        let mc = SpanModelConfig { word_dim: 16, hidden: 12, min_count: 1, ..SpanModelConfig::default() };
        let tc = TrainConfig { epochs: 200, batch_size: 4, dropout: 0.0, learning_rate: 0.3, seed: 3, ..TrainConfig::default() };
        let (model, losses) = train(&corpus, &mc, &tc, &r).unwrap();
        assert!(losses[199] < losses[0]);
        let mut correct = 0;
        for ex in &corpus.examples {
            let pred = model.predict(&corpus.documents[ex.doc], &ex.question).unwrap();
            correct += usize::from(pred == ex.span);
        }
        assert_eq!(correct, corpus.examples.len(), "final loss {}", losses[199]);
        let (_, again) = train(&corpus, &mc, &TrainConfig { epochs: 5, ..tc }, &r).unwrap();
        assert_eq!(again, losses[..5]);
    }

    #[test]
    fn rejects_bad_spans_and_configs() {
        let (mut corpus, r) = toy();
        corpus.examples[0].span = (3, 20);
        let err = train(&corpus, &SpanModelConfig::default(), &TrainConfig::default(), &r).unwrap_err();
        assert!(matches!(err, NeuralError::InvalidSpan { .. }));
        let (corpus, r) = toy();
        let bad = TrainConfig { learning_rate: 0.0, ..TrainConfig::default() };
        assert!(matches!(train(&corpus, &SpanModelConfig::default(), &bad, &r), Err(NeuralError::InvalidConfig(_))));
    }
}
