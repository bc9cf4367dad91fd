use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::SubwordError;

pub const PAD_SYMBOL: &str = "<pad>";

/// The 39 ARPAbet phonemes used by the CMU pronouncing dictionary, stress removed.
pub const ARPABET: [&str; 39] = [
    "AA", "AE", "AH", "AO", "AW", "AY", "B", "CH", "D", "DH", "EH", "ER", "EY", "F", "G", "HH", "IH", "IY",
    "JH", "K", "L", "M", "N", "NG", "OW", "OY", "P", "R", "S", "SH", "T", "TH", "UH", "UW", "V", "W", "Y",
    "Z", "ZH",
];

/// Index of a phoneme within its inventory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Phoneme(pub u16);

impl Phoneme {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct PhonemeInventory {
    symbols: Vec<String>,
    #[serde(skip)]
    lookup: HashMap<String, Phoneme>,
    pad: Phoneme,
}

impl PhonemeInventory {
    /// Builds an inventory; `PAD_SYMBOL` is added at index 0 when absent.
    pub fn new<S: AsRef<str>>(symbols: &[S]) -> Result<Self, SubwordError> {
        let mut all: Vec<String> = Vec::with_capacity(symbols.len() + 1);
        if !symbols.iter().any(|s| s.as_ref() == PAD_SYMBOL) {
            all.push(PAD_SYMBOL.to_string());
        }
        all.extend(symbols.iter().map(|s| s.as_ref().to_string()));
        let mut lookup = HashMap::with_capacity(all.len());
        for (i, s) in all.iter().enumerate() {
            if lookup.insert(s.clone(), Phoneme(i as u16)).is_some() {
                return Err(SubwordError::InvalidInventory(format!("duplicate symbol {s}")));
            }
        }
        if all.len() < 2 {
            return Err(SubwordError::InvalidInventory("need at least one phoneme besides PAD".into()));
        }
        let pad = lookup[PAD_SYMBOL];
        Ok(Self { symbols: all, lookup, pad })
    }

    pub fn arpabet() -> Self {
        Self::new(&ARPABET).expect("ARPAbet inventory is valid")
    }

    /// Number of symbols including PAD.
    pub fn size(&self) -> usize {
        self.symbols.len()
    }

    pub fn pad(&self) -> Phoneme {
        self.pad
    }

    pub fn get(&self, symbol: &str) -> Option<Phoneme> {
        self.lookup.get(symbol).copied()
    }

    pub fn symbol(&self, p: Phoneme) -> &str {
        &self.symbols[p.index()]
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }
}

impl TryFrom<Vec<String>> for PhonemeInventory {
    type Error = SubwordError;

    fn try_from(symbols: Vec<String>) -> Result<Self, Self::Error> {
        Self::new(&symbols)
    }
}

impl From<PhonemeInventory> for Vec<String> {
    fn from(inv: PhonemeInventory) -> Self {
        inv.symbols
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arpabet_has_pad_and_39_phonemes() {
        let inv = PhonemeInventory::arpabet();
        assert_eq!(inv.size(), 40);
        assert_eq!(inv.symbol(inv.pad()), PAD_SYMBOL);
        assert_eq!(inv.symbol(inv.get("ZH").unwrap()), "ZH");
    }

    #[test]
    fn duplicates_rejected() {
        assert!(PhonemeInventory::new(&["AA", "AA"]).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let inv = PhonemeInventory::arpabet();
        let json = serde_json::to_string(&inv).unwrap();
        let back: PhonemeInventory = serde_json::from_str(&json).unwrap();
        assert_eq!(back, inv);
        assert_eq!(back.get("K"), inv.get("K"));
    }
}
