//! Convolution over subword-unit embeddings followed by max-over-time
//! pooling: one scalar per filter, concatenated into the word's vector.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use super::NeuralError;

pub const PAD_ID: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubwordUnit {
    Phoneme,
    Syllable,
    Char,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubwordConfig {
    pub unit: SubwordUnit,
    /// Embedding width of one unit.
    pub d: usize,
    /// Filter height in units.
    pub k: usize,
    pub n_filters: usize,
}

impl SubwordConfig {
    pub fn phoneme() -> Self {
        Self { unit: SubwordUnit::Phoneme, d: 6, k: 3, n_filters: 80 }
    }

    pub fn syllable() -> Self {
        Self { unit: SubwordUnit::Syllable, d: 20, k: 2, n_filters: 100 }
    }

    pub fn char() -> Self {
        Self { unit: SubwordUnit::Char, d: 8, k: 3, n_filters: 50 }
    }

    pub fn default_for(unit: SubwordUnit) -> Self {
        match unit {
            SubwordUnit::Phoneme => Self::phoneme(),
            SubwordUnit::Syllable => Self::syllable(),
            SubwordUnit::Char => Self::char(),
        }
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        if self.d == 0 || self.k == 0 || self.n_filters == 0 {
            return Err(NeuralError::InvalidConfig(format!("subword geometry {self:?} has a zero dimension")));
        }
        Ok(())
    }
}

/// Length of the valid stride-1 convolution over `l` units (after PAD-extending to `k`).
pub fn conv_output_len(l: usize, k: usize) -> usize {
    l.max(k) - k + 1
}

/// `ids` PAD-extended to at least `k` entries.
pub(crate) fn padded(ids: &[usize], k: usize) -> Vec<usize> {
    let mut v = ids.to_vec();
    if v.len() < k {
        v.resize(k, PAD_ID);
    }
    v
}

/// Stacked embedding rows `E` (l×d) for a padded id sequence.
pub(crate) fn embed(table: &[f64], d: usize, ids: &[usize]) -> Vec<f64> {
    let mut e = Vec::with_capacity(ids.len() * d);
    for &i in ids {
        e.extend_from_slice(&table[i * d..(i + 1) * d]);
    }
    e
}

/// Max-pooled filter responses for one word. `ids` must already be padded.
/// Each window of `k` rows is a contiguous slice of `E`, so every response is
/// a single dot product with the flattened k×d filter.
pub(crate) fn conv_maxpool(e: &[f64], d: usize, filters: &[f64], n: usize, k: usize, out: &mut [f64], argmax: &mut [usize]) {
    let kd = k * d;
    let positions = e.len() / d - k + 1;
    for f in 0..n {
        let w = &filters[f * kd..(f + 1) * kd];
        let mut best = f64::NEG_INFINITY;
        let mut at = 0;
        for p in 0..positions {
            let z: f64 = w.iter().zip(&e[p * d..p * d + kd]).map(|(a, b)| a * b).sum();
            if z > best {
                best = z;
                at = p;
            }
        }
        out[f] = best;
        argmax[f] = at;
    }
}

/// Routes `upstream` (one value per filter) through the recorded argmax windows.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_maxpool_backward(
    e: &[f64],
    ids: &[usize],
    d: usize,
    filters: &[f64],
    k: usize,
    argmax: &[usize],
    upstream: &[f64],
    d_table: &mut [f64],
    d_filters: &mut [f64],
) {
    let kd = k * d;
    for (f, (&g, &p)) in upstream.iter().zip(argmax).enumerate() {
        if g == 0.0 {
            continue;
        }
        let w = &filters[f * kd..(f + 1) * kd];
        let window = &e[p * d..p * d + kd];
        for (df, &x) in d_filters[f * kd..(f + 1) * kd].iter_mut().zip(window) {
            *df += g * x;
        }
        for r in 0..k {
            let row = ids[p + r];
            for c in 0..d {
                d_table[row * d + c] += g * w[r * d + c];
            }
        }
    }
}

/// Lookup table `H` (C×d) plus `n` filters, each k×d flattened to one row.
#[derive(Debug, Clone, PartialEq)]
pub struct SubwordCnnParams {
    pub config: SubwordConfig,
    pub table: Tensor,
    pub filters: Tensor,
}

pub type PhonemeCnnParams = SubwordCnnParams;

impl SubwordCnnParams {
    pub fn new(config: SubwordConfig, vocab_size: usize, rng: &mut impl Rng) -> Result<Self, NeuralError> {
        config.validate()?;
        let kd = config.k * config.d;
        Ok(Self {
            config,
            table: Tensor::uniform(&[vocab_size, config.d], 0.5, rng),
            filters: Tensor::uniform(&[config.n_filters, kd], 1.0 / (kd as f64).sqrt(), rng),
        })
    }

    pub fn zeros(config: SubwordConfig, vocab_size: usize) -> Self {
        Self {
            config,
            table: Tensor::zeros(&[vocab_size, config.d]),
            filters: Tensor::zeros(&[config.n_filters, config.k * config.d]),
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.table.rows()
    }

    fn check_ids(&self, ids: &[usize]) -> Result<(), NeuralError> {
        if ids.is_empty() {
            return Err(NeuralError::EmptyInput);
        }
        match ids.iter().find(|&&i| i >= self.vocab_size()) {
            Some(&i) => Err(NeuralError::UnknownPhonemeId { id: i, vocab_size: self.vocab_size() }),
            None => Ok(()),
        }
    }

    /// Full convolution map `Z`: one row of `l - k + 1` responses per filter.
    pub fn feature_map(&self, ids: &[usize]) -> Result<Vec<Vec<f64>>, NeuralError> {
        self.check_ids(ids)?;
        let SubwordConfig { d, k, n_filters, .. } = self.config;
        let ids = padded(ids, k);
        let e = embed(self.table.data(), d, &ids);
        let kd = k * d;
        let positions = conv_output_len(ids.len(), k);
        Ok((0..n_filters)
            .map(|f| {
                let w = &self.filters.data()[f * kd..(f + 1) * kd];
                (0..positions).map(|p| w.iter().zip(&e[p * d..p * d + kd]).map(|(a, b)| a * b).sum()).collect()
            })
            .collect())
    }
}

/// Word vector from unit ids: `output[f] = max_p Z[f][p]`.
pub fn subword_cnn_forward(ids: &[usize], params: &SubwordCnnParams) -> Result<Vec<f64>, NeuralError> {
    let mut cnn = SubwordCnn::new(params.clone());
    cnn.forward(ids)
}

pub fn phoneme_cnn_forward(ids: &[usize], params: &PhonemeCnnParams) -> Result<Vec<f64>, NeuralError> {
    subword_cnn_forward(ids, params)
}

struct ForwardState {
    ids: Vec<usize>,
    e: Vec<f64>,
    argmax: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubwordGrads {
    pub table: Vec<f64>,
    pub filters: Vec<f64>,
}

/// Stateful wrapper that remembers the last forward pass for `backward`.
pub struct SubwordCnn {
    pub params: SubwordCnnParams,
    state: Option<ForwardState>,
}

impl SubwordCnn {
    pub fn new(params: SubwordCnnParams) -> Self {
        Self { params, state: None }
    }

    pub fn forward(&mut self, ids: &[usize]) -> Result<Vec<f64>, NeuralError> {
        self.params.check_ids(ids)?;
        let SubwordConfig { d, k, n_filters, .. } = self.params.config;
        let ids = padded(ids, k);
        let e = embed(self.params.table.data(), d, &ids);
        let mut out = vec![0.0; n_filters];
        let mut argmax = vec![0; n_filters];
        conv_maxpool(&e, d, self.params.filters.data(), n_filters, k, &mut out, &mut argmax);
        self.state = Some(ForwardState { ids, e, argmax });
        Ok(out)
    }

    /// Positions selected by the max-pool in the last forward pass.
    pub fn argmax(&self) -> Option<&[usize]> {
        self.state.as_ref().map(|s| s.argmax.as_slice())
    }

    pub fn backward(&self, upstream: &[f64]) -> Result<SubwordGrads, NeuralError> {
        let st = self.state.as_ref().ok_or(NeuralError::NoForwardState)?;
        let SubwordConfig { d, k, n_filters, .. } = self.params.config;
        if upstream.len() != n_filters {
            return Err(NeuralError::ShapeMismatch(format!("upstream has {} values, expected {n_filters}", upstream.len())));
        }
        let mut g = SubwordGrads { table: vec![0.0; self.params.table.len()], filters: vec![0.0; self.params.filters.len()] };
        conv_maxpool_backward(&st.e, &st.ids, d, self.params.filters.data(), k, &st.argmax, upstream, &mut g.table, &mut g.filters);
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(d: usize, k: usize, n: usize) -> SubwordConfig {
        SubwordConfig { unit: SubwordUnit::Phoneme, d, k, n_filters: n }
    }

    #[test]
    fn defaults() {
        assert_eq!((SubwordConfig::phoneme().d, SubwordConfig::phoneme().k, SubwordConfig::phoneme().n_filters), (6, 3, 80));
        assert_eq!((SubwordConfig::syllable().d, SubwordConfig::syllable().k, SubwordConfig::syllable().n_filters), (20, 2, 100));
    }

    #[test]
    fn map_length_and_padding() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = SubwordCnnParams::new(cfg(7, 3, 5), 12, &mut rng).unwrap();
        let z = p.feature_map(&[1, 2, 3, 4, 5, 6]).unwrap();
        assert_eq!(z.len(), 5);
        assert!(z.iter().all(|row| row.len() == 4));
        assert_eq!(p.feature_map(&[3]).unwrap()[0].len(), 1);
        assert_eq!(subword_cnn_forward(&[3], &p).unwrap().len(), 5);
        assert!(matches!(subword_cnn_forward(&[12], &p), Err(NeuralError::UnknownPhonemeId { id: 12, .. })));
    }

    #[test]
    fn zero_params_give_zero_vector() {
        let p = SubwordCnnParams::zeros(cfg(6, 3, 80), 40);
        assert_eq!(subword_cnn_forward(&[4, 9, 2, 7], &p).unwrap(), vec![0.0; 80]);
    }

    #[test]
    fn one_hot_trigram_detector() {
        // E one-hot over 5 units, one filter equal to the stacked one-hots of (2,3,4)
        let d = 5;
        let mut p = SubwordCnnParams::zeros(cfg(d, 3, 1), d);
        for i in 0..d {
            p.table.data_mut()[i * d + i] = 1.0;
        }
        for (r, u) in [2usize, 3, 4].iter().enumerate() {
            p.filters.data_mut()[r * d + u] = 1.0;
        }
        assert_eq!(subword_cnn_forward(&[1, 2, 3, 4], &p).unwrap(), [3.0]);
        assert_eq!(subword_cnn_forward(&[2, 3, 1, 4], &p).unwrap(), [2.0]);
        assert!(subword_cnn_forward(&[4, 3, 2, 1], &p).unwrap()[0] < 3.0);
    }

    #[test]
    fn backward_needs_forward() {
        let p = SubwordCnnParams::zeros(cfg(2, 2, 3), 4);
        let mut cnn = SubwordCnn::new(p);
        assert!(matches!(cnn.backward(&[1.0; 3]), Err(NeuralError::NoForwardState)));
        cnn.forward(&[1, 2]).unwrap();
        let g = cnn.backward(&[0.0; 3]).unwrap();
        assert!(g.table.iter().chain(&g.filters).all(|&v| v == 0.0));
    }

    #[test]
    fn unused_rows_get_no_gradient_and_fd_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let params = SubwordCnnParams::new(cfg(3, 2, 4), 6, &mut rng).unwrap();
        let ids = [1, 4, 2, 4];
        let up: Vec<f64> = (0..4).map(|i| 0.3 + i as f64).collect();
        let mut cnn = SubwordCnn::new(params.clone());
        cnn.forward(&ids).unwrap();
        let g = cnn.backward(&up).unwrap();
        for row in [0, 3, 5] {
            assert!(g.table[row * 3..row * 3 + 3].iter().all(|&v| v == 0.0));
        }
        let loss = |p: &SubwordCnnParams| -> f64 {
            subword_cnn_forward(&ids, p).unwrap().iter().zip(&up).map(|(a, b)| a * b).sum()
        };
        let eps = 1e-5;
        for i in 0..params.table.len() {
            let mut a = params.clone();
            a.table.data_mut()[i] += eps;
            let mut b = params.clone();
            b.table.data_mut()[i] -= eps;
            let fd = (loss(&a) - loss(&b)) / (2.0 * eps);
            assert!((fd - g.table[i]).abs() < 1e-6 * (1.0 + fd.abs()), "table {i}: {fd} vs {}", g.table[i]);
        }
        for i in 0..params.filters.len() {
            let mut a = params.clone();
            a.filters.data_mut()[i] += eps;
            let mut b = params.clone();
            b.filters.data_mut()[i] -= eps;
            let fd = (loss(&a) - loss(&b)) / (2.0 * eps);
            assert!((fd - g.filters[i]).abs() < 1e-6 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn non_argmax_perturbation_is_invisible() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let params = SubwordCnnParams::new(cfg(4, 2, 1), 8, &mut rng).unwrap();
        let ids = [1, 2, 3, 4, 5, 6];
        let z = params.feature_map(&ids).unwrap().remove(0);
        let mut cnn = SubwordCnn::new(params.clone());
        let out = cnn.forward(&ids).unwrap();
        let at = cnn.argmax().unwrap()[0];
        let mut sorted = z.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let margin = sorted[0] - sorted[1];
        // nudge the embedding of a unit that appears only outside the argmax window
        let outside = (0..ids.len()).find(|&r| r + 1 < at || r > at + 1).unwrap();
        let mut p2 = params.clone();
        let w_norm: f64 = params.filters.data().iter().map(|v| v.abs()).sum();
        let delta = 0.4 * margin / w_norm;
        for c in 0..4 {
            p2.table.data_mut()[ids[outside] * 4 + c] += delta;
        }
        assert_eq!(subword_cnn_forward(&ids, &p2).unwrap(), out);
    }
}
