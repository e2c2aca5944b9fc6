//! Deterministic whitespace/word tokenizer.
//!
//! A token is a maximal run of letters, digits or underscores, or a single
//! other non-whitespace character. The count only has to be a stable,
//! order-of-magnitude-correct length signal; it makes no attempt to match
//! any vendor subword vocabulary.

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Number of tokens in `text` under the word-run rule.
pub fn tokenize_count(text: &str) -> u64 {
    tokens(text).count() as u64
}

/// Iterator over the tokens of `text`.
pub fn tokens(text: &str) -> impl Iterator<Item = &str> {
    let mut rest = text;
    std::iter::from_fn(move || {
        rest = rest.trim_start_matches(char::is_whitespace);
        let mut chars = rest.char_indices();
        let (_, first) = chars.next()?;
        let end = if is_word_char(first) {
            chars
                .find(|(_, c)| !is_word_char(*c))
                .map(|(i, _)| i)
                .unwrap_or(rest.len())
        } else {
            first.len_utf8()
        };
        let (tok, tail) = rest.split_at(end);
        rest = tail;
        Some(tok)
    })
}
