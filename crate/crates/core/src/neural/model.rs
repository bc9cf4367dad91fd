//! Extractive span model: shared bidirectional recurrent encoder, question
//! pooled by self-attention, bilinear start and end pointers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{Resources, SeqFeatures, Vocabularies};
use super::graph::{Graph, Var};
use super::subword_cnn::{SubwordConfig, SubwordUnit};
use super::tensor::{ParamId, ParamStore, Tensor};
use super::NeuralError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanModelConfig {
    pub word_dim: usize,
    /// State size of each encoder direction.
    pub hidden: usize,
    /// Active subword units, kept in phoneme, syllable, char order.
    pub units: Vec<SubwordConfig>,
    pub min_count: usize,
}

impl Default for SpanModelConfig {
    fn default() -> Self {
        Self { word_dim: 100, hidden: 32, units: Vec::new(), min_count: 2 }
    }
}

impl SpanModelConfig {
    pub fn with_units(mut self, units: &[SubwordUnit]) -> Self {
        self.units = units.iter().map(|&u| SubwordConfig::default_for(u)).collect();
        self.units.sort_by_key(|u| u.unit);
        self.units.dedup_by_key(|u| u.unit);
        self
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        if self.word_dim == 0 || self.hidden == 0 {
            return Err(NeuralError::InvalidConfig("word_dim and hidden must be positive".into()));
        }
        for u in &self.units {
            u.validate()?;
        }
        if self.units.windows(2).any(|w| w[0].unit >= w[1].unit) {
            return Err(NeuralError::InvalidConfig("subword units must be distinct and in phoneme, syllable, char order".into()));
        }
        Ok(())
    }

    /// Width of one word representation: word dim plus every unit's filter count.
    pub fn input_dim(&self) -> usize {
        self.word_dim + self.units.iter().map(|u| u.n_filters).sum::<usize>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone, Copy)]
struct RnnIds {
    wx: ParamId,
    wh: ParamId,
    b: ParamId,
}

#[derive(Debug, Clone)]
struct UnitIds {
    config: SubwordConfig,
    table: ParamId,
    filters: ParamId,
}

#[derive(Debug, Clone)]
pub struct SpanModel {
    pub config: SpanModelConfig,
    pub vocab: Vocabularies,
    pub params: ParamStore,
    resources: Resources,
    word: ParamId,
    units: Vec<UnitIds>,
    fwd: RnnIds,
    bwd: RnnIds,
    attn: ParamId,
    start: ParamId,
    end: ParamId,
}

fn xavier(rows: usize, cols: usize, rng: &mut impl Rng) -> Tensor {
    Tensor::uniform(&[rows, cols], (6.0 / (rows + cols) as f64).sqrt(), rng)
}

fn rnn_params(dir: &str, p: &mut ParamStore, input: usize, h: usize, rng: &mut impl Rng) -> RnnIds {
    RnnIds {
        wx: p.add(&format!("encoder.{dir}.wx"), xavier(input, h, rng)),
        wh: p.add(&format!("encoder.{dir}.wh"), Tensor::uniform(&[h, h], (1.0 / h as f64).sqrt(), rng)),
        b: p.add(&format!("encoder.{dir}.b"), Tensor::zeros(&[1, h])),
    }
}

impl SpanModel {
    /// Fresh parameters drawn from `rng`. Row 0 of the word table (unknown
    /// words) starts at zero.
    pub fn new(config: SpanModelConfig, vocab: Vocabularies, resources: Resources, rng: &mut impl Rng) -> Result<Self, NeuralError> {
        config.validate()?;
        let mut p = ParamStore::new();
        let mut word_table = Tensor::uniform(&[vocab.words.len(), config.word_dim], 0.5, rng);
        word_table.data_mut()[..config.word_dim].iter_mut().for_each(|v| *v = 0.0);
        let word = p.add("word.table", word_table);
        let mut units = Vec::new();
        for u in &config.units {
            let name = unit_name(u.unit);
            let c = vocab.unit(u.unit).len();
            let kd = u.k * u.d;
            let table = p.add(&format!("{name}.table"), Tensor::uniform(&[c, u.d], 0.5, rng));
            let filters = p.add(&format!("{name}.filters"), Tensor::uniform(&[u.n_filters, kd], (3.0 / kd as f64).sqrt(), rng));
            units.push(UnitIds { config: *u, table, filters });
        }
        let (i, h) = (config.input_dim(), config.hidden);
        let fwd = rnn_params("fwd", &mut p, i, h, rng);
        let bwd = rnn_params("bwd", &mut p, i, h, rng);
        let attn = p.add("question.attention", xavier(2 * h, 1, rng));
        let start = p.add("pointer.start", xavier(2 * h, 2 * h, rng));
        let end = p.add("pointer.end", xavier(2 * h, 2 * h, rng));
        Ok(Self { config, vocab, params: p, resources, word, units, fwd, bwd, attn, start, end })
    }

    /// Same architecture with parameters taken from `params` by name.
    pub(crate) fn with_params(config: SpanModelConfig, vocab: Vocabularies, resources: Resources, params: &[(String, Tensor)]) -> Result<Self, NeuralError> {
        let mut m = Self::new(config, vocab, resources, &mut ChaCha8Rng::seed_from_u64(0))?;
        if params.len() != m.params.len() {
            return Err(NeuralError::Checkpoint(format!("expected {} parameter blocks, found {}", m.params.len(), params.len())));
        }
        for (name, t) in params {
            let id = m.params.find(name).ok_or_else(|| NeuralError::Checkpoint(format!("unexpected block {name}")))?;
            if m.params.get(id).shape() != t.shape() {
                return Err(NeuralError::Checkpoint(format!("block {name} has shape {:?}, expected {:?}", t.shape(), m.params.get(id).shape())));
            }
            m.params.get_mut(id).data_mut().copy_from_slice(t.data());
        }
        Ok(m)
    }

    pub fn resources(&self) -> &Resources {
        &self.resources
    }

    pub fn featurize<S: AsRef<str>>(&self, tokens: &[S]) -> SeqFeatures {
        SeqFeatures {
            word_ids: tokens.iter().map(|t| self.vocab.word_id(t.as_ref())).collect(),
            units: self
                .units
                .iter()
                .map(|u| tokens.iter().map(|t| self.vocab.unit_ids(t.as_ref(), u.config.unit, &self.resources)).collect())
                .collect(),
        }
    }

    /// Word representations `[word ‖ phoneme ‖ syllable ‖ char]`, one row per token.
    pub(crate) fn embed(&self, g: &mut Graph, f: &SeqFeatures) -> Var {
        let mut parts = vec![g.gather(&self.params, self.word, &f.word_ids)];
        for (u, ids) in self.units.iter().zip(&f.units) {
            parts.push(g.subword_conv(&self.params, u.table, u.filters, u.config.k, ids));
        }
        if parts.len() == 1 {
            parts[0]
        } else {
            g.concat_cols(&parts)
        }
    }

    pub(crate) fn encode(&self, g: &mut Graph, x: Var) -> Var {
        let f = g.rnn(&self.params, x, self.fwd.wx, self.fwd.wh, self.fwd.b, false);
        let b = g.rnn(&self.params, x, self.bwd.wx, self.bwd.wh, self.bwd.b, true);
        g.concat_cols(&[f, b])
    }

    /// `q = Qᵀ softmax(Q w)`.
    pub(crate) fn pool_question(&self, g: &mut Graph, qh: Var) -> Var {
        let w = g.param(&self.params, self.attn);
        let scores = g.matmul(qh, w);
        let alpha = g.softmax(scores);
        g.matmul_tn(qh, alpha)
    }

    /// Start and end logits `H W q`, each T×1.
    pub(crate) fn pointers(&self, g: &mut Graph, dh: Var, q: Var) -> (Var, Var) {
        let ws = g.param(&self.params, self.start);
        let we = g.param(&self.params, self.end);
        let sq = g.matmul(ws, q);
        let eq = g.matmul(we, q);
        (g.matmul(dh, sq), g.matmul(dh, eq))
    }

    /// Encoded document and question inputs, with dropout on the word
    /// representations in training mode.
    pub(crate) fn forward(
        &self,
        g: &mut Graph,
        doc: &SeqFeatures,
        question: &SeqFeatures,
        mode: Mode,
        dropout: f64,
        rng: &mut impl Rng,
    ) -> Result<(Var, Var), NeuralError> {
        if doc.is_empty() {
            return Err(NeuralError::EmptyDocument);
        }
        if question.is_empty() {
            return Err(NeuralError::EmptyInput);
        }
        let mut dx = self.embed(g, doc);
        let mut qx = self.embed(g, question);
        if mode == Mode::Train {
            dx = g.dropout(dx, dropout, rng);
            qx = g.dropout(qx, dropout, rng);
        }
        let dh = self.encode(g, dx);
        let qh = self.encode(g, qx);
        let q = self.pool_question(g, qh);
        Ok(self.pointers(g, dh, q))
    }

    /// Start and end distributions over document tokens.
    pub fn span_scores(
        &self,
        doc: &SeqFeatures,
        question: &SeqFeatures,
        mode: Mode,
        dropout: f64,
        rng: &mut impl Rng,
    ) -> Result<(Vec<f64>, Vec<f64>), NeuralError> {
        let mut g = Graph::new();
        let (s, e) = self.forward(&mut g, doc, question, mode, dropout, rng)?;
        let ps = g.softmax(s);
        let pe = g.softmax(e);
        Ok((g.value(ps).data().to_vec(), g.value(pe).data().to_vec()))
    }

    /// Most probable span of `doc` for `question`.
    pub fn predict<S: AsRef<str>>(&self, doc: &[S], question: &[S]) -> Result<(usize, usize), NeuralError> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (s, e) = self.span_scores(&self.featurize(doc), &self.featurize(question), Mode::Eval, 0.0, &mut rng)?;
        Ok(predict_span(&s, &e))
    }

    /// The concatenated input vector for a single word.
    pub fn word_representation(&self, word: &str) -> Vec<f64> {
        let mut g = Graph::new();
        let x = self.embed(&mut g, &self.featurize(&[word]));
        g.value(x).data().to_vec()
    }
}

pub(crate) fn unit_name(u: SubwordUnit) -> &'static str {
    match u {
        SubwordUnit::Phoneme => "phoneme",
        SubwordUnit::Syllable => "syllable",
        SubwordUnit::Char => "char",
    }
}

/// `argmax_{i ≤ j} start[i] · end[j]`; ties go to the smallest `i`, then the
/// shortest span.
pub fn predict_span(start: &[f64], end: &[f64]) -> (usize, usize) {
    let n = start.len().min(end.len());
    let mut best = (0, 0);
    let mut best_score = f64::NEG_INFINITY;
    for i in 0..n {
        for j in i..n {
            let s = start[i] * end[j];
            if s > best_score {
                best_score = s;
                best = (i, j);
            }
        }
    }
    best
}
