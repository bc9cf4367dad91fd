//! Mapping tokens to word ids and per-unit id sequences.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::subword_cnn::SubwordUnit;
use crate::subword::{normalize_word, PronunciationLexicon, SyllablePatterns};

pub const UNK: &str = "<unk>";
pub const PAD: &str = "<pad>";

/// Lexicon and hyphenation patterns shared by every model.
#[derive(Debug, Clone)]
pub struct Resources {
    pub lexicon: Arc<PronunciationLexicon>,
    pub patterns: Arc<SyllablePatterns>,
}

impl Resources {
    pub fn new(lexicon: PronunciationLexicon, patterns: SyllablePatterns) -> Self {
        Self { lexicon: Arc::new(lexicon), patterns: Arc::new(patterns) }
    }
}

/// Key used for the word table: the token lowercased.
pub fn word_key(token: &str) -> String {
    token.to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    items: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocab {
    /// `reserved` come first, then `items` in the given order (duplicates dropped).
    pub fn new(reserved: &[&str], items: impl IntoIterator<Item = String>) -> Self {
        let mut v = Self { items: Vec::new(), index: HashMap::new() };
        for r in reserved {
            v.push(r.to_string());
        }
        for it in items {
            v.push(it);
        }
        v
    }

    fn push(&mut self, s: String) {
        if !self.index.contains_key(&s) {
            self.index.insert(s.clone(), self.items.len());
            self.items.push(s);
        }
    }

    pub fn rebuild_index(&mut self) {
        self.index = self.items.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, s: &str) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabularies {
    pub words: Vocab,
    pub phonemes: Vocab,
    pub syllables: Vocab,
    pub chars: Vocab,
}

impl Vocabularies {
    /// Words seen at least `min_count` times (lowercased); syllables of every
    /// corpus and lexicon word; characters of the corpus.
    pub fn build<S: AsRef<str>>(sequences: &[&[S]], min_count: usize, resources: &Resources) -> Self {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for seq in sequences {
            for t in seq.iter() {
                *counts.entry(word_key(t.as_ref())).or_default() += 1;
            }
        }
        let words = Vocab::new(&[UNK], counts.iter().filter(|(_, &c)| c >= min_count.max(1)).map(|(w, _)| w.clone()));

        let mut syllables = std::collections::BTreeSet::new();
        let mut chars = std::collections::BTreeSet::new();
        let lexicon_words = resources.lexicon.iter().map(|(w, _)| w.to_string());
        for w in counts.keys().cloned().chain(lexicon_words) {
            let norm = normalize_word(&w);
            if !norm.is_empty() {
                if let Ok(s) = resources.patterns.syllabify(&norm) {
                    syllables.extend(s);
                }
            }
        }
        for w in counts.keys() {
            chars.extend(w.chars().map(String::from));
        }
        Self {
            words,
            phonemes: Vocab::new(&[], resources.lexicon.inventory().symbols().iter().cloned()),
            syllables: Vocab::new(&[PAD, UNK], syllables),
            chars: Vocab::new(&[PAD, UNK], chars),
        }
    }

    pub fn rebuild_indexes(&mut self) {
        for v in [&mut self.words, &mut self.phonemes, &mut self.syllables, &mut self.chars] {
            v.rebuild_index();
        }
    }

    pub fn unit(&self, unit: SubwordUnit) -> &Vocab {
        match unit {
            SubwordUnit::Phoneme => &self.phonemes,
            SubwordUnit::Syllable => &self.syllables,
            SubwordUnit::Char => &self.chars,
        }
    }

    pub fn word_id(&self, token: &str) -> usize {
        self.words.get(&word_key(token)).unwrap_or(0)
    }

    /// Unit ids of one token; punctuation yields an empty sequence (all PAD
    /// after extension), except for characters.
    pub fn unit_ids(&self, token: &str, unit: SubwordUnit, resources: &Resources) -> Vec<usize> {
        let norm = normalize_word(token);
        match unit {
            SubwordUnit::Phoneme => match resources.lexicon.g2p(&norm) {
                Ok(p) if !norm.is_empty() => p.iter().map(|ph| ph.index()).collect(),
                _ => Vec::new(),
            },
            SubwordUnit::Syllable => match resources.patterns.syllabify(&norm) {
                Ok(s) if !norm.is_empty() => s.iter().map(|x| self.syllables.get(x).unwrap_or(1)).collect(),
                _ => Vec::new(),
            },
            SubwordUnit::Char => word_key(token).chars().map(|c| self.chars.get(&c.to_string()).unwrap_or(1)).collect(),
        }
    }
}

/// Ids for one token sequence: the word ids plus one id list per token for
/// each active unit.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqFeatures {
    pub word_ids: Vec<usize>,
    pub units: Vec<Vec<Vec<usize>>>,
}

impl SeqFeatures {
    pub fn len(&self) -> usize {
        self.word_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word_ids.is_empty()
    }
}
