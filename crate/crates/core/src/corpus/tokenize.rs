//! Lyric text normalization.
//!
//! Rules, applied in order:
//! 1. Unicode NFC normalization, so composed and decomposed accents agree.
//! 2. Bracketed annotation segments such as `[Chorus]` or `[Verse 2: Artist]`
//!    are removed. An unmatched `[` is treated as ordinary punctuation.
//! 3. Lowercasing.
//! 4. Tokens are maximal runs of alphanumeric characters, optionally joined by
//!    single apostrophes between two alphanumerics (`don't`, `rock'n'roll`).
//!    Leading and trailing apostrophes are dropped, as is all other punctuation.

use unicode_normalization::UnicodeNormalization;

const APOSTROPHES: [char; 3] = ['\'', '\u{2019}', '\u{02BC}'];

pub fn tokenize(text: &str) -> Vec<String> {
    let normalized: String = text.nfc().collect();
    let stripped = strip_brackets(&normalized);
    let lowered = stripped.to_lowercase();

    let chars: Vec<char> = lowered.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            current.push(c);
        } else if APOSTROPHES.contains(&c)
            && !current.is_empty()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric())
        {
            current.push('\'');
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

fn strip_brackets(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find('[') {
        match rest[open..].find(']') {
            Some(close) => {
                out.push_str(&rest[..open]);
                // Keep the segment boundary so words on either side do not fuse.
                out.push(' ');
                rest = &rest[open + close + 1..];
            }
            None => break,
        }
    }
    out.push_str(rest);
    out
}
