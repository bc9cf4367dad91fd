//! Binary checkpoint: magic, version, JSON header (config and vocabularies),
//! then named parameter blocks with shapes and little-endian f64 payloads.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::features::{Resources, Vocabularies};
use super::model::{SpanModel, SpanModelConfig};
use super::tensor::Tensor;
use super::NeuralError;

pub const MAGIC: &[u8; 8] = b"SQASPAN\0";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    config: SpanModelConfig,
    vocab: Vocabularies,
    lexicon_fingerprint: String,
}

fn bad(msg: impl Into<String>) -> NeuralError {
    NeuralError::Checkpoint(msg.into())
}

pub fn save(model: &SpanModel, mut w: impl Write) -> Result<(), NeuralError> {
    let header = Header {
        config: model.config.clone(),
        vocab: model.vocab.clone(),
        lexicon_fingerprint: model.resources().lexicon.fingerprint(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| bad(e.to_string()))?;
    let io = |e: std::io::Error| bad(e.to_string());
    w.write_all(MAGIC).map_err(io)?;
    w.write_all(&VERSION.to_le_bytes()).map_err(io)?;
    w.write_all(&(json.len() as u64).to_le_bytes()).map_err(io)?;
    w.write_all(&json).map_err(io)?;
    w.write_all(&(model.params.len() as u32).to_le_bytes()).map_err(io)?;
    for id in model.params.ids() {
        let name = model.params.name(id).as_bytes();
        let t = model.params.get(id);
        w.write_all(&(name.len() as u32).to_le_bytes()).map_err(io)?;
        w.write_all(name).map_err(io)?;
        w.write_all(&(t.shape().len() as u32).to_le_bytes()).map_err(io)?;
        for &d in t.shape() {
            w.write_all(&(d as u64).to_le_bytes()).map_err(io)?;
        }
        for v in t.data() {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
    }
    Ok(())
}

pub fn to_bytes(model: &SpanModel) -> Vec<u8> {
    let mut out = Vec::new();
    save(model, &mut out).expect("writing to memory");
    out
}

struct Cursor<'a>(&'a [u8]);

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], NeuralError> {
        if self.0.len() < n {
            return Err(bad("truncated checkpoint"));
        }
        let (a, b) = self.0.split_at(n);
        self.0 = b;
        Ok(a)
    }

    fn u32(&mut self) -> Result<u32, NeuralError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, NeuralError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Reads a checkpoint and rebinds it to `resources`. The phoneme inventory of
/// the lexicon must match the one the model was trained with.
pub fn load(mut r: impl Read, resources: &Resources) -> Result<SpanModel, NeuralError> {
    let mut raw = Vec::new();
    r.read_to_end(&mut raw).map_err(|e| bad(e.to_string()))?;
    from_bytes(&raw, resources)
}

pub fn from_bytes(raw: &[u8], resources: &Resources) -> Result<SpanModel, NeuralError> {
    let mut c = Cursor(raw);
    if c.take(MAGIC.len())? != MAGIC {
        return Err(bad("not a span-model checkpoint"));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(bad(format!("unsupported checkpoint version {version}")));
    }
    let len = usize::try_from(c.u64()?).map_err(|_| bad("header too large"))?;
    let mut header: Header = serde_json::from_slice(c.take(len)?).map_err(|e| bad(e.to_string()))?;
    header.vocab.rebuild_indexes();
    let inventory = resources.lexicon.inventory().symbols();
    if header.vocab.phonemes.items() != inventory {
        return Err(NeuralError::VocabularyMismatch(format!(
            "checkpoint phoneme inventory has {} symbols, lexicon has {}",
            header.vocab.phonemes.len(),
            inventory.len()
        )));
    }
    let blocks = c.u32()? as usize;
    let mut params = Vec::with_capacity(blocks);
    for _ in 0..blocks {
        let n = c.u32()? as usize;
        let name = String::from_utf8(c.take(n)?.to_vec()).map_err(|_| bad("block name is not UTF-8"))?;
        let ndim = c.u32()? as usize;
        let shape = (0..ndim).map(|_| c.u64().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
        let count: usize = shape.iter().product();
        let bytes = c.take(count.checked_mul(8).ok_or_else(|| bad("block too large"))?)?;
        let data = bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))).collect();
        params.push((name, Tensor::from_vec(&shape, data)?));
    }
    if !c.0.is_empty() {
        return Err(bad("trailing bytes after parameter blocks"));
    }
    SpanModel::with_params(header.config, header.vocab, resources.clone(), &params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::model::tests::tiny_model;
    use crate::neural::SubwordUnit;
    use crate::subword::{PhonemeInventory, PronunciationLexicon, SyllablePatterns};

    #[test]
    fn round_trip_is_exact() {
        let m = tiny_model(&[SubwordUnit::Phoneme, SubwordUnit::Syllable], 5);
        let bytes = to_bytes(&m);
        assert_eq!(&bytes[..8], MAGIC);
        let back = from_bytes(&bytes, m.resources()).unwrap();
        assert_eq!(back.params, m.params);
        assert_eq!(back.vocab, m.vocab);
        let doc = ["the", "cat", "area"];
        let q = ["harry", "?"];
        assert_eq!(back.predict(&doc, &q).unwrap(), m.predict(&doc, &q).unwrap());
        assert_eq!(to_bytes(&back), bytes);
    }

    #[test]
    fn corrupt_and_mismatched_inputs() {
        let m = tiny_model(&[SubwordUnit::Phoneme], 5);
        let bytes = to_bytes(&m);
        assert!(matches!(from_bytes(&bytes[..bytes.len() - 3], m.resources()), Err(NeuralError::Checkpoint(_))));
        assert!(matches!(from_bytes(b"nonsense", m.resources()), Err(NeuralError::Checkpoint(_))));
        let inv = PhonemeInventory::new(&["A", "B"]).unwrap();
        let other = Resources::new(PronunciationLexicon::parse("X  A B\n", inv).unwrap(), SyllablePatterns::empty());
        assert!(matches!(from_bytes(&bytes, &other), Err(NeuralError::VocabularyMismatch(_))));
    }
}
