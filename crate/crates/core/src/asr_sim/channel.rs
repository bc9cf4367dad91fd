//! Word-level noisy channel standing in for the recognizer: phonetically
//! nearest-neighbour substitutions, deletions and random insertions.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::align::levenshtein_align;
use super::AsrError;
use crate::subword::{edit_distance_within, normalize_word, Phoneme, PronunciationLexicon};

/// Substitution : deletion : insertion mix used by calibration.
pub const ERROR_MIX: (f64, f64, f64) = (0.7, 0.2, 0.1);
pub const MIN_CALIBRATION_TOKENS: usize = 5_000;
pub const CALIBRATION_TOLERANCE: f64 = 0.01;
const MAX_BISECTION_STEPS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub sub_rate: f64,
    pub del_rate: f64,
    pub ins_rate: f64,
    #[serde(default)]
    pub target_wer: Option<f64>,
    pub confusion_pool_size: usize,
    pub seed: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self { sub_rate: 0.0, del_rate: 0.0, ins_rate: 0.0, target_wer: None, confusion_pool_size: 8, seed: 0 }
    }
}

impl ChannelConfig {
    pub fn identity(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), AsrError> {
        let rates = [self.sub_rate, self.del_rate, self.ins_rate];
        if rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(AsrError::InvalidConfig(format!("rates must lie in [0,1], got {rates:?}")));
        }
        if self.sub_rate + self.del_rate > 1.0 + 1e-12 {
            return Err(AsrError::InvalidConfig("sub_rate + del_rate exceeds 1".into()));
        }
        if self.confusion_pool_size == 0 {
            return Err(AsrError::InvalidConfig("confusion_pool_size must be positive".into()));
        }
        Ok(())
    }

    /// Rates at `scale` times the fixed error mix.
    pub fn scaled(&self, scale: f64) -> Self {
        Self {
            sub_rate: ERROR_MIX.0 * scale,
            del_rate: ERROR_MIX.1 * scale,
            ins_rate: ERROR_MIX.2 * scale,
            ..*self
        }
    }

    pub fn with_pool(self, confusion_pool_size: usize) -> Self {
        Self { confusion_pool_size, ..self }
    }

    pub fn is_identity(&self) -> bool {
        self.sub_rate == 0.0 && self.del_rate == 0.0 && self.ins_rate == 0.0
    }
}

/// Lexicon view with memoised confusion pools.
pub struct ErrorChannel<'a> {
    lexicon: &'a PronunciationLexicon,
    words: Vec<&'a str>,
    phones: Vec<&'a [Phoneme]>,
    pool_size: usize,
    pools: RefCell<HashMap<String, Rc<Vec<u32>>>>,
}

impl<'a> ErrorChannel<'a> {
    pub fn new(lexicon: &'a PronunciationLexicon, pool_size: usize) -> Result<Self, AsrError> {
        if lexicon.is_empty() {
            return Err(AsrError::EmptyLexicon);
        }
        if pool_size == 0 {
            return Err(AsrError::InvalidConfig("confusion_pool_size must be positive".into()));
        }
        let (words, phones) = lexicon.iter().unzip();
        Ok(Self { lexicon, words, phones, pool_size, pools: RefCell::new(HashMap::new()) })
    }

    pub fn lexicon(&self) -> &PronunciationLexicon {
        self.lexicon
    }

    pub fn pool_size(&self) -> usize {
        self.pool_size
    }

    /// Nearest lexicon words to `word` under phoneme edit distance, excluding
    /// the word itself. All words tied with the last admitted distance are kept.
    pub fn confusions(&self, word: &str) -> Rc<Vec<u32>> {
        let key = normalize_word(word);
        if let Some(p) = self.pools.borrow().get(&key) {
            return Rc::clone(p);
        }
        let pool = Rc::new(self.compute_pool(&key));
        self.pools.borrow_mut().insert(key, Rc::clone(&pool));
        pool
    }

    pub fn word(&self, index: u32) -> &'a str {
        self.words[index as usize]
    }

    fn compute_pool(&self, key: &str) -> Vec<u32> {
        let Ok(src) = self.lexicon.g2p(key) else {
            return Vec::new();
        };
        let k = self.pool_size;
        let mut best: Vec<(usize, u32)> = Vec::new();
        let mut bound = usize::MAX;
        for (i, (w, p)) in self.words.iter().zip(&self.phones).enumerate() {
            if *w == key {
                continue;
            }
            if let Some(d) = edit_distance_within(&src, p, bound) {
                best.push((d, i as u32));
                if best.len() >= 4 * k {
                    best.sort_unstable();
                    bound = best[k - 1].0;
                    best.retain(|(d, _)| *d <= bound);
                }
            }
        }
        best.sort_unstable();
        if best.len() > k {
            let cutoff = best[k - 1].0;
            best.retain(|(d, _)| *d <= cutoff);
        }
        best.into_iter().map(|(_, i)| i).collect()
    }

    /// Passes `reference` through the channel. Every token consumes exactly
    /// four uniform draws, so outputs for different rates share randomness.
    pub fn corrupt<S: AsRef<str>>(
        &self,
        reference: &[S],
        cfg: &ChannelConfig,
        rng: &mut impl Rng,
    ) -> Result<Vec<String>, AsrError> {
        cfg.validate()?;
        if cfg.confusion_pool_size != self.pool_size {
            return Err(AsrError::InvalidConfig(format!(
                "channel built for pool size {}, config asks for {}",
                self.pool_size, cfg.confusion_pool_size
            )));
        }
        let mut out = Vec::with_capacity(reference.len() + reference.len() / 8);
        for tok in reference {
            let tok = tok.as_ref();
            let event: f64 = rng.gen();
            let pick: f64 = rng.gen();
            let insert: f64 = rng.gen();
            let insert_pick: f64 = rng.gen();

            // Punctuation has no acoustic realisation; it passes through untouched.
            if normalize_word(tok).is_empty() {
                out.push(tok.to_string());
            } else if event < cfg.sub_rate {
                let pool = self.confusions(tok);
                if pool.is_empty() {
                    out.push(tok.to_string());
                } else {
                    let idx = ((pick * pool.len() as f64) as usize).min(pool.len() - 1);
                    out.push(self.word(pool[idx]).to_string());
                }
            } else if event < cfg.sub_rate + cfg.del_rate {
                // deleted
            } else {
                out.push(tok.to_string());
            }

            if insert < cfg.ins_rate {
                let idx = ((insert_pick * self.words.len() as f64) as usize).min(self.words.len() - 1);
                out.push(self.words[idx].to_string());
            }
        }
        Ok(out)
    }

    /// Corpus WER of one seeded pass over `corpus` with `cfg`.
    pub fn measure<S: AsRef<str> + PartialEq>(&self, corpus: &[Vec<S>], cfg: &ChannelConfig) -> Result<f64, AsrError> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut errors = 0usize;
        let mut total = 0usize;
        for doc in corpus {
            let hyp = self.corrupt(doc, cfg, &mut rng)?;
            let refs: Vec<&str> = doc.iter().map(AsRef::as_ref).collect();
            let hyps: Vec<&str> = hyp.iter().map(String::as_str).collect();
            errors += levenshtein_align(&refs, &hyps).0;
            total += doc.len();
        }
        if total == 0 {
            return Err(AsrError::EmptyReference);
        }
        Ok(errors as f64 / total as f64)
    }

    /// Finds the overall error scale (sub:del:ins fixed at 7:2:1) whose measured
    /// corpus WER lands within ±0.01 of `target_wer`, by bisection.
    pub fn calibrate<S: AsRef<str> + PartialEq>(
        &self,
        target_wer: f64,
        corpus: &[Vec<S>],
        template: &ChannelConfig,
    ) -> Result<Calibration, AsrError> {
        if !(0.0..1.0).contains(&target_wer) {
            return Err(AsrError::InvalidConfig(format!("target WER {target_wer} outside [0,1)")));
        }
        let tokens: usize = corpus.iter().map(Vec::len).sum();
        if tokens < MIN_CALIBRATION_TOKENS {
            return Err(AsrError::CorpusTooSmall { tokens, required: MIN_CALIBRATION_TOKENS });
        }
        let base = ChannelConfig { target_wer: Some(target_wer), confusion_pool_size: self.pool_size, ..*template };
        if target_wer == 0.0 {
            let cfg = base.scaled(0.0);
            return Ok(Calibration { measured_wer: self.measure(corpus, &cfg)?, config: cfg, scale: 0.0, steps: 0 });
        }

        // sub + del = 0.9 * scale must stay ≤ 1
        let max_scale = 1.0 / (ERROR_MIX.0 + ERROR_MIX.1);
        let (mut lo, mut hi) = (0.0, max_scale);
        let mut best: Option<(f64, f64)> = None; // (|error|, scale)
        let mut best_wer = 0.0;
        for step in 1..=MAX_BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            let measured = self.measure(corpus, &base.scaled(mid))?;
            let err = (measured - target_wer).abs();
            if best.is_none_or(|(e, _)| err < e) {
                best = Some((err, mid));
                best_wer = measured;
            }
            if err <= CALIBRATION_TOLERANCE / 10.0 {
                return Ok(Calibration { config: base.scaled(mid), scale: mid, measured_wer: measured, steps: step });
            }
            if measured < target_wer {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (err, scale) = best.expect("at least one bisection step");
        if err > CALIBRATION_TOLERANCE {
            return Err(AsrError::Unreachable { target: target_wer, best: best_wer });
        }
        Ok(Calibration { config: base.scaled(scale), scale, measured_wer: best_wer, steps: MAX_BISECTION_STEPS })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub config: ChannelConfig,
    pub scale: f64,
    pub measured_wer: f64,
    pub steps: usize,
}

/// One-shot form of [`ErrorChannel::corrupt`].
pub fn corrupt<S: AsRef<str>>(
    reference: &[S],
    cfg: &ChannelConfig,
    lexicon: &PronunciationLexicon,
    rng: &mut impl Rng,
) -> Result<Vec<String>, AsrError> {
    ErrorChannel::new(lexicon, cfg.confusion_pool_size)?.corrupt(reference, cfg, rng)
}

/// One-shot form of [`ErrorChannel::calibrate`]; returns the calibrated config.
pub fn calibrate<S: AsRef<str> + PartialEq>(
    target_wer: f64,
    corpus: &[Vec<S>],
    template: &ChannelConfig,
    lexicon: &PronunciationLexicon,
) -> Result<ChannelConfig, AsrError> {
    Ok(ErrorChannel::new(lexicon, template.confusion_pool_size)?.calibrate(target_wer, corpus, template)?.config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subword::phoneme_edit_distance;

    const LEX: &str = "AREA  EH1 R IY0 AH0
HARRY  HH EH1 R IY0
BUREAU  B Y UH1 R OW0
CAT  K AE1 T
BAT  B AE1 T
HAT  HH AE1 T
DOG  D AO1 G
";

    fn lex() -> PronunciationLexicon {
        PronunciationLexicon::parse_arpabet(LEX).unwrap()
    }

    #[test]
    fn identity_channel() {
        let lex = lex();
        let input = ["The", "area", ",", "cat", "zzyq"];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = corrupt(&input, &ChannelConfig::identity(1), &lex, &mut rng).unwrap();
        assert_eq!(out, input);
    }

    #[test]
    fn same_seed_same_output() {
        let lex = lex();
        let cfg = ChannelConfig { sub_rate: 0.4, del_rate: 0.2, ins_rate: 0.2, ..ChannelConfig::default() };
        let input: Vec<&str> = "cat bat area dog hat cat area".split(' ').collect();
        let a = corrupt(&input, &cfg, &lex, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = corrupt(&input, &cfg, &lex, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, input);
    }

    #[test]
    fn area_confuses_with_harry() {
        let lex = PronunciationLexicon::parse_arpabet(
            "AREA  EH1 R IY0 AH0\nHARRY  HH EH1 R IY0\nBUREAU  B Y UH1 R OW0\n",
        )
        .unwrap();
        let d = |a: &str, b: &str| phoneme_edit_distance(&lex.g2p(a).unwrap(), &lex.g2p(b).unwrap());
        assert_eq!(d("area", "harry"), 2);
        assert_eq!(d("area", "bureau"), 5);

        let cfg = ChannelConfig { sub_rate: 1.0, confusion_pool_size: 1, ..ChannelConfig::default() };
        let channel = ErrorChannel::new(&lex, 1).unwrap();
        assert_eq!(*channel.confusions("area"), vec![2]); // sorted: area, bureau, harry
        for seed in 0..20 {
            let out = channel.corrupt(&["area"], &cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert_eq!(out, ["harry"]);
        }
    }

    #[test]
    fn pool_keeps_ties_and_excludes_self() {
        let lex = lex();
        let channel = ErrorChannel::new(&lex, 1).unwrap();
        // bat and hat are both one substitution away from cat
        let pool: Vec<&str> = channel.confusions("cat").iter().map(|&i| channel.word(i)).collect();
        assert_eq!(pool, ["bat", "hat"]);
    }

    #[test]
    fn errors() {
        let empty = PronunciationLexicon::parse_arpabet(";;; nothing\n").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(corrupt(&["a"], &ChannelConfig::default(), &empty, &mut rng), Err(AsrError::EmptyLexicon)));
        let bad = ChannelConfig { sub_rate: 0.8, del_rate: 0.3, ..ChannelConfig::default() };
        assert!(matches!(corrupt(&["cat"], &bad, &lex(), &mut rng), Err(AsrError::InvalidConfig(_))));
        let small = vec![vec!["cat"; 100]];
        assert!(matches!(
            calibrate(0.2, &small, &ChannelConfig::default(), &lex()),
            Err(AsrError::CorpusTooSmall { tokens: 100, .. })
        ));
    }
}
