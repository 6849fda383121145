//! Comment and layout normalization used by exact-match hashing.

use super::lexer::{lex, LexError};

/// Removes every line and block comment, keeping all other bytes in order.
pub fn strip_comments(source: &str) -> Result<String, LexError> {
    let tokens = lex(source)?;
    let mut out = String::with_capacity(source.len());
    for t in tokens.iter().filter(|t| !t.kind.is_comment()) {
        out.push_str(&t.lexeme);
    }
    Ok(out)
}

/// Removes every whitespace character (space, tab, CR, LF, FF).
///
/// String literal contents are not protected: `"a b"` and `"ab"` normalize
/// to the same text.
pub fn normalize_layout(source: &str) -> String {
    source
        .chars()
        .filter(|c| !matches!(c, ' ' | '\t' | '\r' | '\n' | '\x0c'))
        .collect()
}
