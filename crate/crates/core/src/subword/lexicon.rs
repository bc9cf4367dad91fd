use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use super::inventory::{Phoneme, PhonemeInventory};
use super::SubwordError;

/// Word → phoneme sequence map loaded from a pronouncing dictionary.
///
/// Accepted line format is the CMU convention: `WORD  PH1 PH2 ...`, with `;;;`
/// comment lines, `(2)`-style variant suffixes (only the first pronunciation
/// is kept), optional trailing `# comment`, and stress digits on vowels.
#[derive(Debug, Clone)]
pub struct PronunciationLexicon {
    inventory: PhonemeInventory,
    entries: BTreeMap<String, Vec<Phoneme>>,
}

/// Lowercases and keeps letters, digits and apostrophes. Returns an empty
/// string when nothing alphanumeric remains.
pub fn normalize_word(word: &str) -> String {
    let norm: String = word
        .chars()
        .flat_map(char::to_lowercase)
        .filter(|c| c.is_alphanumeric() || *c == '\'')
        .collect();
    if norm.chars().any(char::is_alphanumeric) {
        norm
    } else {
        String::new()
    }
}

fn strip_stress(symbol: &str) -> &str {
    symbol.trim_end_matches(|c: char| c.is_ascii_digit())
}

impl PronunciationLexicon {
    pub fn parse(text: &str, inventory: PhonemeInventory) -> Result<Self, SubwordError> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() || line.starts_with(";;;") {
                continue;
            }
            let mut fields = line.split_whitespace();
            let head = fields.next().expect("non-empty line has a field");
            let is_variant = head.ends_with(')') && head.contains('(');
            let word = normalize_word(head.split('(').next().unwrap_or(head));
            if word.is_empty() {
                return Err(SubwordError::MalformedLexicon { line: n + 1, reason: format!("bad word {head:?}") });
            }
            let phones = fields
                .map(|sym| {
                    let bare = strip_stress(sym);
                    inventory
                        .get(bare)
                        .filter(|p| *p != inventory.pad())
                        .ok_or_else(|| SubwordError::UnknownPhoneme { line: n + 1, symbol: sym.to_string() })
                })
                .collect::<Result<Vec<_>, _>>()?;
            if phones.is_empty() {
                return Err(SubwordError::MalformedLexicon { line: n + 1, reason: "no phonemes".into() });
            }
            if is_variant {
                continue;
            }
            entries.entry(word).or_insert(phones);
        }
        Ok(Self { inventory, entries })
    }

    pub fn parse_arpabet(text: &str) -> Result<Self, SubwordError> {
        Self::parse(text, PhonemeInventory::arpabet())
    }

    pub fn inventory(&self) -> &PhonemeInventory {
        &self.inventory
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Lookup by normalized word.
    pub fn get(&self, word: &str) -> Option<&[Phoneme]> {
        self.entries.get(&normalize_word(word)).map(Vec::as_slice)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.get(word).is_some()
    }

    /// Entries in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[Phoneme])> {
        self.entries.iter().map(|(w, p)| (w.as_str(), p.as_slice()))
    }

    /// Content hash over inventory and entries, for provenance records.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for s in self.inventory.symbols() {
            h.update(s.as_bytes());
            h.update([0]);
        }
        for (w, p) in &self.entries {
            h.update(w.as_bytes());
            for ph in p {
                h.update(ph.0.to_le_bytes());
            }
            h.update([0xff]);
        }
        hex::encode(h.finalize())
    }

    /// Phonemes of `word`: the lexicon entry when present, otherwise the
    /// letter-to-phoneme fallback.
    pub fn g2p(&self, word: &str) -> Result<Vec<Phoneme>, SubwordError> {
        let norm = normalize_word(word);
        if norm.is_empty() {
            return Err(SubwordError::EmptyWord);
        }
        if let Some(p) = self.entries.get(&norm) {
            return Ok(p.clone());
        }
        Ok(self.fallback(&norm))
    }

    /// Phoneme count for timing; words with no alphanumeric content have none.
    pub fn phoneme_count(&self, word: &str) -> usize {
        self.g2p(word).map(|p| p.len()).unwrap_or(0)
    }

    fn fallback(&self, norm: &str) -> Vec<Phoneme> {
        let chars: Vec<char> = norm.chars().filter(|c| c.is_alphanumeric()).collect();
        let mut out = Vec::with_capacity(chars.len());
        let mut i = 0;
        while i < chars.len() {
            let digraph = match (chars[i], chars.get(i + 1)) {
                ('t', Some('h')) => Some("TH"),
                ('s', Some('h')) => Some("SH"),
                ('c', Some('h')) => Some("CH"),
                _ => None,
            };
            let (symbol, step) = match digraph {
                Some(s) => (s, 2),
                None => (letter_phoneme(chars[i]), 1),
            };
            // Non-ARPAbet inventories may lack a symbol; skip rather than fail.
            if let Some(p) = self.inventory.get(symbol) {
                out.push(p);
            }
            i += step;
        }
        if out.is_empty() {
            // keep g2p total even for exotic inventories
            let first = (0..self.inventory.size() as u16)
                .map(Phoneme)
                .find(|p| *p != self.inventory.pad())
                .expect("inventory has a non-PAD symbol");
            out.push(first);
        }
        out
    }
}

fn letter_phoneme(c: char) -> &'static str {
    match c {
        'a' => "AE",
        'b' => "B",
        'c' => "K",
        'd' => "D",
        'e' => "EH",
        'f' => "F",
        'g' => "G",
        'h' => "HH",
        'i' => "IH",
        'j' => "JH",
        'k' => "K",
        'l' => "L",
        'm' => "M",
        'n' => "N",
        'o' => "AA",
        'p' => "P",
        'q' => "K",
        'r' => "R",
        's' => "S",
        't' => "T",
        'u' => "AH",
        'v' => "V",
        'w' => "W",
        'x' => "S",
        'y' => "Y",
        'z' => "Z",
        // first sound of the spoken digit
        '0' => "Z",
        '1' => "W",
        '2' => "T",
        '3' => "TH",
        '4' | '5' => "F",
        '6' | '7' => "S",
        '8' => "EY",
        '9' => "N",
        _ => "AH",
    }
}
