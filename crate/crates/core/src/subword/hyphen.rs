//! Liang-style hyphenation over Hunspell `hyph_*.dic` pattern files, used as
//! the syllabifier.

use std::collections::{HashMap, HashSet};

use super::SubwordError;

#[derive(Debug, Clone)]
pub struct SyllablePatterns {
    /// Pattern letters (with `.` word boundaries) → inter-letter levels,
    /// `levels.len() == letters.len() + 1`.
    patterns: HashMap<String, Vec<u8>>,
    alphabet: HashSet<char>,
    max_len: usize,
    left_min: usize,
    right_min: usize,
}

impl Default for SyllablePatterns {
    fn default() -> Self {
        Self::empty()
    }
}

fn is_directive(line: &str) -> bool {
    let head = line.split_whitespace().next().unwrap_or("");
    head.chars().all(|c| c.is_ascii_uppercase())
        && matches!(
            head,
            "LEFTHYPHENMIN" | "RIGHTHYPHENMIN" | "COMPOUNDLEFTHYPHENMIN" | "COMPOUNDRIGHTHYPHENMIN" | "NEXTLEVEL"
        )
}

impl SyllablePatterns {
    /// No patterns: every word goes through the vowel-group fallback.
    pub fn empty() -> Self {
        Self { patterns: HashMap::new(), alphabet: HashSet::new(), max_len: 0, left_min: 2, right_min: 2 }
    }

    /// Parses one pattern per line. An optional charset declaration on the
    /// first line, `%`/`#` comments and `LEFTHYPHENMIN`-style directives are
    /// recognised; the two min-length directives are honoured.
    pub fn parse(text: &str) -> Result<Self, SubwordError> {
        let mut out = Self::empty();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('%') || line.starts_with('#') {
                continue;
            }
            if n == 0 && line.chars().any(|c| c.is_ascii_uppercase()) && !is_directive(line) {
                // charset line, e.g. "UTF-8" or "ISO8859-1"
                continue;
            }
            if is_directive(line) {
                let mut it = line.split_whitespace();
                let key = it.next().unwrap_or("");
                let value = it.next().and_then(|v| v.parse::<usize>().ok());
                match (key, value) {
                    ("LEFTHYPHENMIN", Some(v)) => out.left_min = v.max(1),
                    ("RIGHTHYPHENMIN", Some(v)) => out.right_min = v.max(1),
                    _ => {}
                }
                continue;
            }
            let (letters, levels) = parse_pattern(line)
                .ok_or_else(|| SubwordError::MalformedPattern { line: n + 1, pattern: line.to_string() })?;
            if let Some(prev) = out.patterns.get(&letters) {
                if *prev != levels {
                    return Err(SubwordError::PatternConflict { line: n + 1, pattern: line.to_string() });
                }
                continue;
            }
            out.max_len = out.max_len.max(letters.chars().count());
            out.alphabet.extend(letters.chars().filter(|c| c.is_alphabetic()));
            out.patterns.insert(letters, levels);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    fn covers(&self, c: char) -> bool {
        self.alphabet.contains(&c)
    }

    /// Break positions (character offsets, exclusive of 0 and len) allowed by
    /// the patterns, or `None` when the word falls outside the pattern alphabet.
    pub fn break_points(&self, word: &str) -> Option<Vec<usize>> {
        if self.patterns.is_empty() {
            return None;
        }
        let lower: Vec<char> = word.chars().flat_map(char::to_lowercase).collect();
        if lower.len() != word.chars().count() || !lower.iter().all(|&c| self.covers(c)) {
            return None;
        }
        let mut dotted = Vec::with_capacity(lower.len() + 2);
        dotted.push('.');
        dotted.extend_from_slice(&lower);
        dotted.push('.');
        let mut levels = vec![0u8; dotted.len() + 1];
        let mut key = String::new();
        for i in 0..dotted.len() {
            key.clear();
            for j in i..dotted.len().min(i + self.max_len) {
                key.push(dotted[j]);
                if let Some(pat) = self.patterns.get(&key) {
                    for (k, &v) in pat.iter().enumerate() {
                        let slot = &mut levels[i + k];
                        *slot = (*slot).max(v);
                    }
                }
            }
        }
        // levels[p + 1] sits between word chars p-1 and p (offset by the leading dot)
        let n = lower.len();
        Some(
            (1..n)
                .filter(|&p| levels[p + 1] % 2 == 1 && p >= self.left_min && n - p >= self.right_min)
                .collect(),
        )
    }

    /// Splits `word` into syllables; concatenating them returns `word`.
    pub fn syllabify(&self, word: &str) -> Result<Vec<String>, SubwordError> {
        if word.is_empty() {
            return Err(SubwordError::EmptyWord);
        }
        let points = self.break_points(word).unwrap_or_else(|| vowel_group_breaks(word));
        Ok(split_at_chars(word, &points))
    }
}

/// Parses `"hy3ph"` into letters `"hyph"` and levels `[0,0,3,0,0]`.
fn parse_pattern(pattern: &str) -> Option<(String, Vec<u8>)> {
    let mut letters = String::new();
    let mut levels = Vec::new();
    let mut pending = 0u8;
    for c in pattern.chars() {
        if let Some(d) = c.to_digit(10) {
            pending = d as u8;
        } else if c == '.' || c.is_alphabetic() || matches!(c, '\'' | '’' | '-') {
            levels.push(pending);
            pending = 0;
            letters.extend(c.to_lowercase());
        } else {
            return None;
        }
    }
    levels.push(pending);
    if letters.is_empty() {
        return None;
    }
    Some((letters, levels))
}

fn is_vowel(c: char) -> bool {
    matches!(c.to_ascii_lowercase(), 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Fallback: a break before the consonant that precedes each vowel group
/// after the first, e.g. `banana` → `ba|na|na`.
fn vowel_group_breaks(word: &str) -> Vec<usize> {
    let chars: Vec<char> = word.chars().collect();
    let mut points = Vec::new();
    let mut seen_group = false;
    let mut i = 0;
    while i < chars.len() {
        if is_vowel(chars[i]) {
            if seen_group && i > 0 && !is_vowel(chars[i - 1]) {
                let at = i - 1;
                if at > *points.last().unwrap_or(&0) {
                    points.push(at);
                }
            }
            seen_group = true;
            while i < chars.len() && is_vowel(chars[i]) {
                i += 1;
            }
        } else {
            i += 1;
        }
    }
    points
}

fn split_at_chars(word: &str, points: &[usize]) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let mut out = Vec::with_capacity(points.len() + 1);
    let mut prev = 0;
    for &p in points {
        out.push(chars[prev..p].iter().collect());
        prev = p;
    }
    out.push(chars[prev..].iter().collect());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_pattern_levels() {
        assert_eq!(parse_pattern("hy3ph"), Some(("hyph".into(), vec![0, 0, 3, 0, 0])));
        assert_eq!(parse_pattern(".ad4der"), Some((".adder".into(), vec![0, 0, 0, 4, 0, 0, 0])));
        assert_eq!(parse_pattern("2ph"), Some(("ph".into(), vec![2, 0, 0])));
        assert_eq!(parse_pattern("a/b=c"), None);
    }

    #[test]
    fn fallback_rule() {
        let p = SyllablePatterns::empty();
        assert_eq!(p.syllabify("banana").unwrap(), ["ba", "na", "na"]);
        assert_eq!(p.syllabify("a").unwrap(), ["a"]);
        assert_eq!(p.syllabify("strength").unwrap(), ["strength"]);
        assert_eq!(p.syllabify("Audio").unwrap(), ["Au", "dio"]);
        assert_eq!(p.syllabify("computer").unwrap(), ["com", "pu", "ter"]);
        assert!(matches!(p.syllabify(""), Err(SubwordError::EmptyWord)));
    }

    #[test]
    fn small_pattern_set() {
        // classic example: hy-phen-ation with a handful of patterns
        let p = SyllablePatterns::parse("UTF-8\nLEFTHYPHENMIN 2\nRIGHTHYPHENMIN 2\nhy3ph\nhe2n\nhena4\nhen5at\n1na\nn2at\n1tio\n2io\no2n\n")
            .unwrap();
        assert_eq!(p.len(), 9);
        assert_eq!(p.syllabify("hyphenation").unwrap(), ["hy", "phen", "ation"]);
        // digits are outside the pattern alphabet → fallback
        assert_eq!(p.syllabify("b4nana").unwrap(), ["b4na", "na"]);
    }

    #[test]
    fn conflicting_patterns_rejected() {
        assert!(matches!(
            SyllablePatterns::parse("ab1c\nab2c\n"),
            Err(SubwordError::PatternConflict { line: 2, .. })
        ));
        assert!(SyllablePatterns::parse("ab1c\nab1c\n").is_ok());
        assert!(matches!(SyllablePatterns::parse("a/b\n"), Err(SubwordError::MalformedPattern { .. })));
    }
}
