use serde::{Deserialize, Serialize};

/// A token anchored to character (not byte) offsets of its source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub char_start: usize,
    pub char_end: usize,
}

impl Token {
    pub fn len(&self) -> usize {
        self.char_end - self.char_start
    }

    pub fn is_empty(&self) -> bool {
        self.char_end == self.char_start
    }
}

/// Punctuation that is split off into its own single-character token.
pub fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}' | '\u{2019}' | '\u{201C}' | '\u{201D}' | '\u{2013}' | '\u{2014}' | '\u{2026}'
                | '\u{00AB}' | '\u{00BB}' | '\u{00BF}' | '\u{00A1}'
        )
}

/// Whitespace tokenizer that detaches every punctuation character as its own token.
///
/// The rule is frozen: token-level F1 depends on it.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current: Option<(usize, String)> = None;

    let flush = |current: &mut Option<(usize, String)>, end: usize, tokens: &mut Vec<Token>| {
        if let Some((start, word)) = current.take() {
            tokens.push(Token { text: word, char_start: start, char_end: end });
        }
    };

    for (i, c) in text.chars().enumerate() {
        if c.is_whitespace() {
            flush(&mut current, i, &mut tokens);
        } else if is_punctuation(c) {
            flush(&mut current, i, &mut tokens);
            tokens.push(Token { text: c.to_string(), char_start: i, char_end: i + 1 });
        } else {
            match current.as_mut() {
                Some((_, word)) => word.push(c),
                None => current = Some((i, c.to_string())),
            }
        }
    }
    let n = text.chars().count();
    flush(&mut current, n, &mut tokens);
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn texts(tokens: &[Token]) -> Vec<&str> {
        tokens.iter().map(|t| t.text.as_str()).collect()
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("   \n\t").is_empty());
    }

    #[test]
    fn detaches_trailing_period() {
        let toks = tokenize("Los Angeles county.");
        assert_eq!(texts(&toks), ["Los", "Angeles", "county", "."]);
        assert_eq!((toks[1].char_start, toks[1].char_end), (4, 11));
        assert_eq!((toks[3].char_start, toks[3].char_end), (18, 19));
    }

    #[test]
    fn hyphen_and_unicode_offsets() {
        let toks = tokenize("Riverside-San café’s");
        assert_eq!(texts(&toks), ["Riverside", "-", "San", "café", "’", "s"]);
        // offsets count chars, not bytes
        assert_eq!(toks[3].char_start, 14);
        assert_eq!(toks[3].char_end, 18);
        assert_eq!(toks[4].char_start, 18);
    }

    proptest! {
        #[test]
        fn reconstructs_input(s in "[a-zA-Z .,;'é’\\-\n]{0,60}") {
            let chars: Vec<char> = s.chars().collect();
            let toks = tokenize(&s);
            let mut rebuilt = String::new();
            let mut cursor = 0;
            for t in &toks {
                prop_assert!(t.char_start < t.char_end);
                prop_assert!(cursor <= t.char_start);
                let gap: String = chars[cursor..t.char_start].iter().collect();
                prop_assert!(gap.chars().all(char::is_whitespace));
                rebuilt.push_str(&gap);
                let span: String = chars[t.char_start..t.char_end].iter().collect();
                prop_assert_eq!(&span, &t.text);
                rebuilt.push_str(&t.text);
                cursor = t.char_end;
            }
            rebuilt.extend(chars[cursor..].iter());
            prop_assert_eq!(rebuilt, s);
        }
    }
}
