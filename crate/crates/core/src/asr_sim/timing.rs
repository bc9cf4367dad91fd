use serde::{Deserialize, Serialize};

use crate::subword::PronunciationLexicon;

pub const WORD_GAP: f64 = 0.05;
pub const DEFAULT_PHONES_PER_SECOND: f64 = 12.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedWord {
    pub text: String,
    pub t_start: f64,
    pub t_end: f64,
}

fn round3(t: f64) -> f64 {
    (t * 1000.0).round() / 1000.0
}

/// Lays `hyp` out on a time axis starting at 0: each word lasts
/// `max(1, phonemes) / phones_per_second` seconds, followed by a fixed gap.
/// Bounds are rounded to milliseconds.
///
/// # Panics
/// If `phones_per_second` is not a positive finite number.
pub fn synthesize_timestamps<S: AsRef<str>>(
    hyp: &[S],
    lexicon: &PronunciationLexicon,
    phones_per_second: f64,
) -> Vec<TimedWord> {
    assert!(
        phones_per_second.is_finite() && phones_per_second > 0.0,
        "phones_per_second must be positive, got {phones_per_second}"
    );
    let mut cursor = 0.0;
    hyp.iter()
        .map(|w| {
            let w = w.as_ref();
            let dur = lexicon.phoneme_count(w).max(1) as f64 / phones_per_second;
            let t_start = round3(cursor);
            let t_end = round3(cursor + dur).max(t_start + 0.001);
            cursor = t_end + WORD_GAP;
            TimedWord { text: w.to_string(), t_start, t_end }
        })
        .collect()
}

/// Every word has positive length and none overlaps its successor.
pub fn timestamps_valid(words: &[TimedWord]) -> bool {
    words.iter().all(|w| w.t_start < w.t_end && w.t_start >= 0.0)
        && words.windows(2).all(|p| p[0].t_end <= p[1].t_start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lex() -> PronunciationLexicon {
        PronunciationLexicon::parse_arpabet("AREA  EH1 R IY0 AH0\nAT  AE1 T\nIN  IH0 N\n").unwrap()
    }

    #[test]
    fn empty() {
        assert!(synthesize_timestamps::<&str>(&[], &lex(), 10.0).is_empty());
    }

    #[test]
    fn durations_and_gap() {
        let t = synthesize_timestamps(&["area"], &lex(), 10.0);
        assert_eq!((t[0].t_start, t[0].t_end), (0.0, 0.4));
        let t = synthesize_timestamps(&["area", "at"], &lex(), 10.0);
        assert_eq!((t[1].t_start, t[1].t_end), (0.45, 0.65));
        // punctuation lasts one phone
        let t = synthesize_timestamps(&[",", "in"], &lex(), 10.0);
        assert_eq!((t[0].t_end, t[1].t_start, t[1].t_end), (0.1, 0.15, 0.35));
    }

    proptest! {
        #[test]
        fn increasing_and_disjoint(words in proptest::collection::vec("[a-z]{1,9}|[,.]", 0..40),
                                   rate in 1.0f64..600.0) {
            let t = synthesize_timestamps(&words, &lex(), rate);
            prop_assert!(timestamps_valid(&t));
            prop_assert_eq!(t, synthesize_timestamps(&words, &lex(), rate));
        }
    }
}
