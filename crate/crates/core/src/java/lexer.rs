//! Lossless Java tokenizer.
//!
//! Every byte of the input belongs to exactly one token, including comments
//! and whitespace, so concatenating the lexemes reproduces the source.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Identifier,
    Keyword,
    Operator,
    Separator,
    IntegerLiteral,
    FloatLiteral,
    CharLiteral,
    StringLiteral,
    BooleanLiteral,
    NullLiteral,
    LineComment,
    BlockComment,
    Whitespace,
}

impl TokenKind {
    pub fn is_trivia(self) -> bool {
        matches!(
            self,
            TokenKind::LineComment | TokenKind::BlockComment | TokenKind::Whitespace
        )
    }

    pub fn is_comment(self) -> bool {
        matches!(self, TokenKind::LineComment | TokenKind::BlockComment)
    }

    pub fn is_literal(self) -> bool {
        matches!(
            self,
            TokenKind::IntegerLiteral
                | TokenKind::FloatLiteral
                | TokenKind::CharLiteral
                | TokenKind::StringLiteral
                | TokenKind::BooleanLiteral
                | TokenKind::NullLiteral
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    /// 1-based line of the first character.
    pub line: usize,
    /// 1-based column (in characters) of the first character.
    pub col: usize,
    /// Byte offset of the first character in the source.
    pub offset: usize,
}

impl Token {
    pub fn is(&self, lexeme: &str) -> bool {
        self.lexeme == lexeme && !self.kind.is_trivia() && !self.kind.is_literal()
    }

    pub fn end_offset(&self) -> usize {
        self.offset + self.lexeme.len()
    }

    /// Line of the last character of the lexeme.
    pub fn end_line(&self) -> usize {
        self.line + self.lexeme.matches('\n').count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("unterminated string literal at {line}:{col}")]
    UnterminatedString { line: usize, col: usize },
    #[error("unterminated character literal at {line}:{col}")]
    UnterminatedChar { line: usize, col: usize },
    #[error("unterminated comment at {line}:{col}")]
    UnterminatedComment { line: usize, col: usize },
    #[error("invalid character {ch:?} at {line}:{col}")]
    InvalidCharacter { ch: char, line: usize, col: usize },
}

impl LexError {
    pub fn position(&self) -> (usize, usize) {
        match *self {
            LexError::UnterminatedString { line, col }
            | LexError::UnterminatedChar { line, col }
            | LexError::UnterminatedComment { line, col }
            | LexError::InvalidCharacter { line, col, .. } => (line, col),
        }
    }
}

/// Reserved words from the Java Language Specification. `true`, `false` and
/// `null` are literals and handled separately.
pub const KEYWORDS: &[&str] = &[
    "abstract",
    "assert",
    "boolean",
    "break",
    "byte",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extends",
    "final",
    "finally",
    "float",
    "for",
    "goto",
    "if",
    "implements",
    "import",
    "instanceof",
    "int",
    "interface",
    "long",
    "native",
    "new",
    "package",
    "private",
    "protected",
    "public",
    "return",
    "short",
    "static",
    "strictfp",
    "super",
    "switch",
    "synchronized",
    "this",
    "throw",
    "throws",
    "transient",
    "try",
    "void",
    "volatile",
    "while",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

// Longest first so that maximal munch falls out of a linear scan.
const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "->", "++", "--", "&&", "||", "==", "!=", "<=", ">=", "+=", "-=",
    "*=", "/=", "&=", "|=", "^=", "%=", "<<", ">>", "=", ">", "<", "!", "~", "?", ":", "+", "-",
    "*", "/", "&", "|", "^", "%",
];

const SEPARATORS: &[&str] = &[
    "...", "::", "(", ")", "{", "}", "[", "]", ";", ",", ".", "@",
];

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn bump_str(&mut self, s: &str) {
        for _ in s.chars() {
            self.bump();
        }
    }
}

fn is_java_whitespace(c: char) -> bool {
    matches!(c, ' ' | '\t' | '\n' | '\r' | '\x0c')
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphabetic()
}

fn is_ident_part(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphanumeric()
}

/// Tokenizes `source` losslessly.
pub fn lex(source: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor {
        src: source,
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut tokens = Vec::new();

    while let Some(c) = cur.peek() {
        let (start, line, col) = (cur.pos, cur.line, cur.col);
        let kind = if is_java_whitespace(c) {
            while cur.peek().is_some_and(is_java_whitespace) {
                cur.bump();
            }
            TokenKind::Whitespace
        } else if cur.rest().starts_with("//") {
            while cur.peek().is_some_and(|c| c != '\n' && c != '\r') {
                cur.bump();
            }
            TokenKind::LineComment
        } else if cur.rest().starts_with("/*") {
            match cur.rest()[2..].find("*/") {
                Some(idx) => {
                    let len = idx + 4;
                    let text = &cur.rest()[..len];
                    cur.bump_str(text);
                }
                None => return Err(LexError::UnterminatedComment { line, col }),
            }
            TokenKind::BlockComment
        } else if cur.rest().starts_with("\"\"\"") {
            lex_text_block(&mut cur, line, col)?;
            TokenKind::StringLiteral
        } else if c == '"' {
            lex_quoted(&mut cur, '"').map_err(|_| LexError::UnterminatedString { line, col })?;
            TokenKind::StringLiteral
        } else if c == '\'' {
            lex_quoted(&mut cur, '\'').map_err(|_| LexError::UnterminatedChar { line, col })?;
            TokenKind::CharLiteral
        } else if c.is_ascii_digit()
            || (c == '.' && cur.peek_at(1).is_some_and(|d| d.is_ascii_digit()))
        {
            lex_number(&mut cur)
        } else if is_ident_start(c) {
            while cur.peek().is_some_and(is_ident_part) {
                cur.bump();
            }
            match &source[start..cur.pos] {
                "true" | "false" => TokenKind::BooleanLiteral,
                "null" => TokenKind::NullLiteral,
                w if is_keyword(w) => TokenKind::Keyword,
                _ => TokenKind::Identifier,
            }
        } else if let Some(sep) = SEPARATORS.iter().find(|s| cur.rest().starts_with(**s)) {
            cur.bump_str(sep);
            TokenKind::Separator
        } else if let Some(op) = OPERATORS.iter().find(|s| cur.rest().starts_with(**s)) {
            cur.bump_str(op);
            TokenKind::Operator
        } else {
            return Err(LexError::InvalidCharacter { ch: c, line, col });
        };
        tokens.push(Token {
            kind,
            lexeme: source[start..cur.pos].to_string(),
            line,
            col,
            offset: start,
        });
    }
    Ok(tokens)
}

/// Consumes a quoted literal. Newlines terminate the literal unsuccessfully.
fn lex_quoted(cur: &mut Cursor<'_>, quote: char) -> Result<(), ()> {
    cur.bump();
    loop {
        match cur.peek() {
            None | Some('\n') | Some('\r') => return Err(()),
            Some('\\') => {
                cur.bump();
                if matches!(cur.peek(), None | Some('\n') | Some('\r')) {
                    return Err(());
                }
                cur.bump();
            }
            Some(c) if c == quote => {
                cur.bump();
                return Ok(());
            }
            Some(_) => {
                cur.bump();
            }
        }
    }
}

fn lex_text_block(cur: &mut Cursor<'_>, line: usize, col: usize) -> Result<(), LexError> {
    cur.bump_str("\"\"\"");
    loop {
        if cur.rest().starts_with("\"\"\"") {
            cur.bump_str("\"\"\"");
            return Ok(());
        }
        match cur.bump() {
            None => return Err(LexError::UnterminatedString { line, col }),
            Some('\\') => {
                cur.bump();
            }
            Some(_) => {}
        }
    }
}

fn lex_number(cur: &mut Cursor<'_>) -> TokenKind {
    let rest = cur.rest();
    let is_prefixed = |p: &[char]| {
        rest.starts_with('0') && rest[1..].chars().next().is_some_and(|c| p.contains(&c))
    };
    if is_prefixed(&['x', 'X']) {
        cur.bump();
        cur.bump();
        let mut float = false;
        while cur
            .peek()
            .is_some_and(|c| c.is_ascii_hexdigit() || c == '_' || c == '.')
        {
            if cur.peek() == Some('.') {
                float = true;
            }
            cur.bump();
        }
        if matches!(cur.peek(), Some('p' | 'P')) {
            float = true;
            cur.bump();
            if matches!(cur.peek(), Some('+' | '-')) {
                cur.bump();
            }
            while cur.peek().is_some_and(|c| c.is_ascii_digit() || c == '_') {
                cur.bump();
            }
        }
        return finish_suffix(cur, float);
    }
    if is_prefixed(&['b', 'B']) {
        cur.bump();
        cur.bump();
        while cur.peek().is_some_and(|c| c == '0' || c == '1' || c == '_') {
            cur.bump();
        }
        return finish_suffix(cur, false);
    }

    let mut float = false;
    let digits = |cur: &mut Cursor<'_>| {
        while cur.peek().is_some_and(|c| c.is_ascii_digit() || c == '_') {
            cur.bump();
        }
    };
    digits(cur);
    // `1.5` and `1.` are floats; `1..` and `1.foo` leave the dot alone.
    if cur.peek() == Some('.')
        && cur
            .peek_at(1)
            .is_none_or(|c| c.is_ascii_digit() || (!is_ident_start(c) && c != '.'))
    {
        float = true;
        cur.bump();
        digits(cur);
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        let sign = matches!(cur.peek_at(1), Some('+' | '-'));
        let digit_at = if sign { 2 } else { 1 };
        if cur.peek_at(digit_at).is_some_and(|c| c.is_ascii_digit()) {
            float = true;
            cur.bump();
            if sign {
                cur.bump();
            }
            digits(cur);
        }
    }
    finish_suffix(cur, float)
}

fn finish_suffix(cur: &mut Cursor<'_>, float: bool) -> TokenKind {
    match cur.peek() {
        Some('l' | 'L') if !float => {
            cur.bump();
            TokenKind::IntegerLiteral
        }
        Some('f' | 'F' | 'd' | 'D') => {
            cur.bump();
            TokenKind::FloatLiteral
        }
        _ if float => TokenKind::FloatLiteral,
        _ => TokenKind::IntegerLiteral,
    }
}

/// Returns only the tokens that carry language content (no comments or whitespace).
pub fn language_tokens(tokens: &[Token]) -> impl Iterator<Item = &Token> {
    tokens.iter().filter(|t| !t.kind.is_trivia())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(TokenKind, String)> {
        lex(src)
            .unwrap()
            .into_iter()
            .map(|t| (t.kind, t.lexeme))
            .collect()
    }

    #[test]
    fn empty_input_is_empty_stream() {
        assert!(lex("").unwrap().is_empty());
    }

    #[test]
    fn declaration_with_trailing_comment() {
        use TokenKind::*;
        let toks = kinds("int x = 1; // c");
        let lang: Vec<_> = toks
            .iter()
            .filter(|(k, _)| !k.is_trivia())
            .cloned()
            .collect();
        assert_eq!(
            lang,
            vec![
                (Keyword, "int".to_string()),
                (Identifier, "x".to_string()),
                (Operator, "=".to_string()),
                (IntegerLiteral, "1".to_string()),
                (Separator, ";".to_string()),
            ]
        );
        let tail: Vec<_> = toks[toks.len() - 2..].to_vec();
        assert_eq!(
            tail,
            vec![
                (Whitespace, " ".to_string()),
                (LineComment, "// c".to_string())
            ]
        );
    }

    #[test]
    fn unterminated_comment_reports_start() {
        assert_eq!(
            lex("/* a"),
            Err(LexError::UnterminatedComment { line: 1, col: 1 })
        );
    }

    #[test]
    fn unterminated_string_reports_start() {
        assert_eq!(
            lex("x = \"abc\n"),
            Err(LexError::UnterminatedString { line: 1, col: 5 })
        );
    }

    #[test]
    fn invalid_character() {
        assert!(matches!(
            lex("a # b"),
            Err(LexError::InvalidCharacter {
                ch: '#',
                line: 1,
                col: 3
            })
        ));
    }

    #[test]
    fn literal_classification() {
        use TokenKind::*;
        let cases = [
            ("true", BooleanLiteral),
            ("null", NullLiteral),
            ("0x1F", IntegerLiteral),
            ("10L", IntegerLiteral),
            ("0b1010", IntegerLiteral),
            ("1_000", IntegerLiteral),
            ("1.5", FloatLiteral),
            (".5", FloatLiteral),
            ("1e10", FloatLiteral),
            ("2f", FloatLiteral),
            ("3.0d", FloatLiteral),
            ("'\\n'", CharLiteral),
            ("\"a\\\"b\"", StringLiteral),
        ];
        for (src, kind) in cases {
            let toks = lex(src).unwrap();
            assert_eq!(toks.len(), 1, "{src}");
            assert_eq!(toks[0].kind, kind, "{src}");
        }
    }

    #[test]
    fn maximal_munch_operators() {
        let toks = kinds("a>>>=b");
        assert_eq!(toks[1], (TokenKind::Operator, ">>>=".to_string()));
        let toks = kinds("x->y::z...");
        let lex: Vec<_> = toks.iter().map(|(_, l)| l.as_str()).collect();
        assert_eq!(lex, vec!["x", "->", "y", "::", "z", "..."]);
    }

    #[test]
    fn member_access_on_integer_is_not_float() {
        let toks = kinds("1.0.toString");
        assert_eq!(toks[0], (TokenKind::FloatLiteral, "1.0".to_string()));
    }

    #[test]
    fn text_block() {
        let src = "s = \"\"\"\n  hi \"there\"\n  \"\"\";";
        let toks = lex(src).unwrap();
        assert!(toks
            .iter()
            .any(|t| t.kind == TokenKind::StringLiteral && t.lexeme.starts_with("\"\"\"")));
    }

    #[test]
    fn positions_track_lines_and_unicode_columns() {
        let toks = lex("é x\n  y").unwrap();
        let y = toks.iter().find(|t| t.lexeme == "y").unwrap();
        assert_eq!((y.line, y.col), (2, 3));
        let x = toks.iter().find(|t| t.lexeme == "x").unwrap();
        assert_eq!((x.line, x.col), (1, 3));
    }
}
