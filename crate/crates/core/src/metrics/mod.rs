//! Text-answer EM/F1 and the time-span Audio Overlapping Score.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asr_sim::SpokenDocument;
use crate::corpus::is_punctuation;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no reference answers")]
    EmptyReferences,
    #[error("degenerate interval [{0}, {1}]")]
    DegenerateInterval(f64, f64),
    #[error("every token of answer span ({0},{1}) was deleted by the channel")]
    AnswerUnalignable(usize, usize),
    #[error("span ({i},{j}) outside a transcript of {len} words")]
    IndexOutOfRange { i: usize, j: usize, len: usize },
    #[error("no records to aggregate")]
    EmptyRecords,
}

/// Lowercase, drop punctuation and the articles a/an/the, split on whitespace.
pub fn normalize_answer(text: &str) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .flat_map(char::to_lowercase)
        .filter(|&c| !is_punctuation(c))
        .collect();
    cleaned
        .split_whitespace()
        .filter(|w| !matches!(*w, "a" | "an" | "the"))
        .map(str::to_string)
        .collect()
}

pub fn exact_match<S: AsRef<str>>(pred: &str, refs: &[S]) -> Result<u8, MetricsError> {
    if refs.is_empty() {
        return Err(MetricsError::EmptyReferences);
    }
    let p = normalize_answer(pred);
    Ok(u8::from(refs.iter().any(|r| normalize_answer(r.as_ref()) == p)))
}

fn token_f1(pred: &[String], gold: &[String]) -> f64 {
    if pred.is_empty() || gold.is_empty() {
        return f64::from(u8::from(pred.is_empty() && gold.is_empty()));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for g in gold {
        *counts.entry(g).or_default() += 1;
    }
    let mut common = 0usize;
    for p in pred {
        if let Some(c) = counts.get_mut(p.as_str()) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / pred.len() as f64;
    let recall = common as f64 / gold.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Token-overlap F1, maximised over references.
pub fn f1<S: AsRef<str>>(pred: &str, refs: &[S]) -> Result<f64, MetricsError> {
    if refs.is_empty() {
        return Err(MetricsError::EmptyReferences);
    }
    let p = normalize_answer(pred);
    Ok(refs.iter().map(|r| token_f1(&p, &normalize_answer(r.as_ref()))).fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeInterval {
    pub t_start: f64,
    pub t_end: f64,
}

impl TimeInterval {
    pub fn new(t_start: f64, t_end: f64) -> Result<Self, MetricsError> {
        let iv = Self { t_start, t_end };
        iv.validate()?;
        Ok(iv)
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        if self.t_start < self.t_end && self.t_start.is_finite() && self.t_end.is_finite() {
            Ok(())
        } else {
            Err(MetricsError::DegenerateInterval(self.t_start, self.t_end))
        }
    }

    pub fn length(&self) -> f64 {
        self.t_end - self.t_start
    }
}

/// Duration of the intersection over duration of the union.
pub fn aos(x: TimeInterval, y: TimeInterval) -> Result<f64, MetricsError> {
    x.validate()?;
    y.validate()?;
    let inter = (x.t_end.min(y.t_end) - x.t_start.max(y.t_start)).max(0.0);
    Ok(inter / (x.length() + y.length() - inter))
}

/// Time span of the hypothesis words aligned (MATCH or SUB) to reference
/// tokens `span.0..=span.1`.
pub fn ground_truth_interval(span: (usize, usize), spoken: &SpokenDocument) -> Result<TimeInterval, MetricsError> {
    let (s, e) = span;
    let mut first = None;
    let mut last = None;
    for op in &spoken.alignment {
        if let (Some(r), Some(h)) = (op.ref_index, op.hyp_index) {
            if (s..=e).contains(&r) {
                first.get_or_insert(h);
                last = Some(h);
            }
        }
    }
    match first.zip(last) {
        Some((i, j)) => {
            let (a, b) = (&spoken.hyp_words[i], &spoken.hyp_words[j]);
            TimeInterval::new(a.t_start, b.t_end)
        }
        None => Err(MetricsError::AnswerUnalignable(s, e)),
    }
}

/// `[t_start(word_i), t_end(word_j)]`, gaps between the words included.
pub fn predicted_interval(span: (usize, usize), spoken: &SpokenDocument) -> Result<TimeInterval, MetricsError> {
    let (i, j) = span;
    let len = spoken.hyp_words.len();
    if i > j || j >= len {
        return Err(MetricsError::IndexOutOfRange { i, j, len });
    }
    TimeInterval::new(spoken.hyp_words[i].t_start, spoken.hyp_words[j].t_end)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub id: String,
    pub em: u8,
    pub f1: f64,
    pub aos: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub records: Vec<ExampleRecord>,
    /// Percent.
    pub em: f64,
    /// Percent.
    pub f1: f64,
    /// Fraction.
    pub aos: f64,
    pub corpus_wer: Option<f64>,
}

pub fn aggregate(records: Vec<ExampleRecord>) -> Result<MetricReport, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::EmptyRecords);
    }
    let n = records.len() as f64;
    let (mut em, mut f, mut a) = (0.0, 0.0, 0.0);
    for r in &records {
        em += f64::from(r.em);
        f += r.f1;
        a += r.aos;
    }
    Ok(MetricReport { em: 100.0 * em / n, f1: 100.0 * f / n, aos: a / n, corpus_wer: None, records })
}

impl MetricReport {
    pub fn with_wer(mut self, wer: f64) -> Self {
        self.corpus_wer = Some(wer);
        self
    }

    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec_pretty(self).expect("report serializes")
    }

    /// `id,em,f1,aos` per example, then a `mean` row with EM and F1 in
    /// percent and AOS as a fraction.
    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["id", "em", "f1", "aos"]).expect("in-memory write");
        for r in &self.records {
            w.write_record([r.id.clone(), r.em.to_string(), format!("{:.6}", r.f1), format!("{:.6}", r.aos)])
                .expect("in-memory write");
        }
        w.write_record(["mean".to_string(), format!("{:.2}", self.em), format!("{:.2}", self.f1), format!("{:.4}", self.aos)])
            .expect("in-memory write");
        w.into_inner().expect("in-memory flush")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asr_sim::{levenshtein_align, TimedWord};
    use crate::corpus::tokenize;
    use proptest::prelude::*;

    fn iv(a: f64, b: f64) -> TimeInterval {
        TimeInterval::new(a, b).unwrap()
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_answer("The Answer."), ["answer"]);
        assert_eq!(normalize_answer("United States Census Bureau"), ["united", "states", "census", "bureau"]);
        assert!(normalize_answer("").is_empty());
        assert_eq!(normalize_answer("an apple, a pear"), ["apple", "pear"]);
    }

    #[test]
    fn em_and_f1() {
        assert_eq!(exact_match("United States Census Bureau", &["United States Census Bureau"]), Ok(1));
        assert_eq!(exact_match("riverside san bernardino harry", &["United States Census Bureau"]), Ok(0));
        assert_eq!(exact_match("the answer", &["answer"]), Ok(1));
        assert_eq!(exact_match("x", &[] as &[&str]), Err(MetricsError::EmptyReferences));
        assert_eq!(f1("census bureau", &["united states census bureau"]).unwrap(), 2.0 / 3.0);
        assert_eq!(f1("a b", &["c d"]).unwrap(), 0.0);
        assert_eq!(f1("The", &["an"]).unwrap(), 1.0);
        assert_eq!(f1("The", &["x"]).unwrap(), 0.0);
        assert_eq!(f1("x y", &["q", "y x"]).unwrap(), 1.0);
        assert_eq!(f1("x", &[] as &[&str]), Err(MetricsError::EmptyReferences));
    }

    #[test]
    fn aos_examples() {
        assert_eq!(aos(iv(1.0, 2.0), iv(1.0, 2.0)).unwrap(), 1.0);
        assert_eq!(aos(iv(0.0, 1.0), iv(2.0, 3.0)).unwrap(), 0.0);
        assert!((aos(iv(2.0, 4.0), iv(3.0, 5.0)).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let bad = TimeInterval { t_start: 1.0, t_end: 1.0 };
        assert_eq!(aos(bad, iv(0.0, 1.0)), Err(MetricsError::DegenerateInterval(1.0, 1.0)));
        assert!(TimeInterval::new(2.0, 1.0).is_err());
    }

    fn spoken(refs: &str, hyp: &[(&str, f64, f64)]) -> SpokenDocument {
        let ref_tokens = tokenize(refs);
        let r: Vec<&str> = ref_tokens.iter().map(|t| t.text.as_str()).collect();
        let h: Vec<&str> = hyp.iter().map(|w| w.0).collect();
        let (d, alignment) = levenshtein_align(&r, &h);
        SpokenDocument {
            doc_id: "d".into(),
            wer: d as f64 / r.len() as f64,
            ref_tokens,
            hyp_words: hyp.iter().map(|&(t, a, b)| TimedWord { text: t.into(), t_start: a, t_end: b }).collect(),
            alignment,
        }
    }

    const STAMPS: [(f64, f64); 5] = [(0.0, 0.5), (0.55, 1.15), (1.2, 1.5), (1.5, 1.9), (1.95, 2.3)];

    fn stamped(words: [&'static str; 5]) -> Vec<(&'static str, f64, f64)> {
        words.iter().zip(STAMPS).map(|(w, (a, b))| (*w, a, b)).collect()
    }

    #[test]
    fn ground_truth_through_alignment() {
        let clean = spoken("a b c d e", &stamped(["a", "b", "c", "d", "e"]));
        assert_eq!(ground_truth_interval((3, 4), &clean).unwrap(), iv(1.5, 2.3));
        assert_eq!(ground_truth_interval((2, 3), &clean).unwrap(), iv(1.2, 1.9));
        // a substitution keeps its slot
        let sub = spoken("a b c d e", &stamped(["a", "b", "x", "d", "e"]));
        assert_eq!(ground_truth_interval((2, 3), &sub).unwrap(), iv(1.2, 1.9));
        // d and e deleted
        let del = spoken("a b c d e", &[("a", 0.0, 0.5), ("b", 0.55, 1.15), ("c", 1.2, 1.5)]);
        assert_eq!(ground_truth_interval((3, 4), &del), Err(MetricsError::AnswerUnalignable(3, 4)));
        assert_eq!(ground_truth_interval((2, 4), &del).unwrap(), iv(1.2, 1.5));
    }

    #[test]
    fn predicted_bounds() {
        let doc = spoken("a b c d e", &stamped(["a", "b", "c", "d", "e"]));
        assert_eq!(predicted_interval((1, 1), &doc).unwrap(), iv(0.55, 1.15));
        assert_eq!(predicted_interval((0, 4), &doc).unwrap(), iv(0.0, 2.3));
        assert_eq!(predicted_interval((2, 4), &doc).unwrap(), iv(1.2, 2.3));
        assert_eq!(predicted_interval((3, 5), &doc), Err(MetricsError::IndexOutOfRange { i: 3, j: 5, len: 5 }));
        assert!(predicted_interval((3, 2), &doc).is_err());
    }

    fn rec(id: &str, em: u8, f1: f64, aos: f64) -> ExampleRecord {
        ExampleRecord { id: id.into(), em, f1, aos }
    }

    #[test]
    fn aggregation() {
        let r = aggregate(vec![rec("q", 1, 1.0, 1.0)]).unwrap();
        assert_eq!((r.em, r.f1, r.aos), (100.0, 100.0, 1.0));
        let r = aggregate(vec![rec("a", 1, 1.0, 0.5), rec("b", 0, 0.5, 0.0)]).unwrap();
        assert_eq!(r.em, 50.0);
        assert_eq!(aggregate(vec![]), Err(MetricsError::EmptyRecords));
        let csv = String::from_utf8(r.to_csv()).unwrap();
        assert_eq!(csv.lines().collect::<Vec<_>>(), ["id,em,f1,aos", "a,1,1.000000,0.500000", "b,0,0.500000,0.000000", "mean,50.00,75.00,0.2500"]);
    }

    fn interval() -> impl Strategy<Value = TimeInterval> {
        (0.0f64..100.0, 0.001f64..50.0).prop_map(|(a, l)| TimeInterval { t_start: a, t_end: a + l })
    }

    proptest! {
        #[test]
        fn aos_symmetric_and_bounded(x in interval(), y in interval()) {
            let a = aos(x, y).unwrap();
            prop_assert_eq!(a, aos(y, x).unwrap());
            prop_assert!((0.0..=1.0).contains(&a));
            if x == y { prop_assert_eq!(a, 1.0); } else { prop_assert!(a < 1.0); }
        }

        #[test]
        fn aos_shrinks_as_prediction_grows(y in interval(), l in 0.0f64..10.0, r in 0.0f64..10.0, extra in 0.01f64..10.0) {
            let x = TimeInterval { t_start: y.t_start - l, t_end: y.t_end + r };
            let wider = TimeInterval { t_start: x.t_start, t_end: x.t_end + extra };
            prop_assert!(aos(wider, y).unwrap() < aos(x, y).unwrap());
        }

        #[test]
        fn f1_bounds_em(p in "[a-c ]{0,8}", g in "[a-c ]{0,8}") {
            let e = exact_match(&p, &[&g]).unwrap();
            let f = f1(&p, &[&g]).unwrap();
            prop_assert!(f >= f64::from(e));
            prop_assert!((0.0..=1.0).contains(&f));
        }
    }
}
