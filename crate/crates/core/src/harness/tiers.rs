use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::neural::SubwordUnit;

/// Test conditions: the reference transcript, then three recognizer noise levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tier {
    #[serde(rename = "clean-ref")]
    CleanRef,
    #[serde(rename = "wer-22.73")]
    Wer2273,
    #[serde(rename = "wer-44.22")]
    Wer4422,
    #[serde(rename = "wer-54.82")]
    Wer5482,
}

impl Tier {
    pub const ALL: [Tier; 4] = [Tier::CleanRef, Tier::Wer2273, Tier::Wer4422, Tier::Wer5482];

    pub fn target_wer(self) -> f64 {
        match self {
            Tier::CleanRef => 0.0,
            Tier::Wer2273 => 0.2273,
            Tier::Wer4422 => 0.4422,
            Tier::Wer5482 => 0.5482,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Tier::CleanRef => "clean-ref",
            Tier::Wer2273 => "wer-22.73",
            Tier::Wer4422 => "wer-44.22",
            Tier::Wer5482 => "wer-54.82",
        }
    }

    pub fn index(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Tier {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "clean-ref" | "clean" | "wer-0" | "0" => Ok(Tier::CleanRef),
            "wer-22.73" | "v1" | "22.73" => Ok(Tier::Wer2273),
            "wer-44.22" | "v2" | "44.22" => Ok(Tier::Wer4422),
            "wer-54.82" | "v3" | "54.82" => Ok(Tier::Wer5482),
            other => Err(format!("unknown tier {other:?}; expected clean-ref, wer-22.73, wer-44.22 or wer-54.82")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainSide {
    /// Reference documents.
    Text,
    /// Recognizer transcripts of the training documents at the first noise tier.
    Speech,
}

impl FromStr for TrainSide {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "text" => Ok(TrainSide::Text),
            "speech" => Ok(TrainSide::Speech),
            other => Err(format!("unknown train side {other:?}; expected text or speech")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Embedding {
    Word,
    Char,
    Phoneme,
    Syllable,
}

impl Embedding {
    pub fn unit(self) -> Option<SubwordUnit> {
        match self {
            Embedding::Word => None,
            Embedding::Char => Some(SubwordUnit::Char),
            Embedding::Phoneme => Some(SubwordUnit::Phoneme),
            Embedding::Syllable => Some(SubwordUnit::Syllable),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Embedding::Word => "word",
            Embedding::Char => "char",
            Embedding::Phoneme => "phoneme",
            Embedding::Syllable => "syllable",
        }
    }
}

impl FromStr for Embedding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "word" => Ok(Embedding::Word),
            "char" => Ok(Embedding::Char),
            "phoneme" => Ok(Embedding::Phoneme),
            "syllable" => Ok(Embedding::Syllable),
            other => Err(format!("unknown embedding {other:?}; expected word, char, phoneme or syllable")),
        }
    }
}

/// Comma-separated embedding list; `word` is always added.
pub fn parse_embeddings(s: &str) -> Result<Vec<Embedding>, String> {
    let mut out = vec![Embedding::Word];
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        out.push(part.parse()?);
    }
    out.sort();
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parsing() {
        assert_eq!("wer-22.73".parse::<Tier>(), Ok(Tier::Wer2273));
        assert_eq!("wer-0".parse::<Tier>(), Ok(Tier::CleanRef));
        assert!("wer-99".parse::<Tier>().is_err());
        assert_eq!(
            parse_embeddings("syllable,phoneme").unwrap(),
            [Embedding::Word, Embedding::Phoneme, Embedding::Syllable]
        );
        assert_eq!(parse_embeddings("").unwrap(), [Embedding::Word]);
        assert!(parse_embeddings("word,bpe").is_err());
        assert_eq!(serde_json::to_string(&Tier::Wer5482).unwrap(), "\"wer-54.82\"");
    }
}
