//! Structural scan of a compilation unit that finds every method and
//! constructor declaration with a body, including those of nested, local and
//! anonymous classes.

use thiserror::Error;

use super::lexer::{lex, LexError, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("unbalanced structure at line {line}: {message}")]
    Structure { line: usize, message: String },
}

/// Location of one declaration within the token stream of its file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodSpan {
    pub name: String,
    /// Byte offset of the first token (annotation, modifier or type).
    pub start_offset: usize,
    /// Byte offset just past the closing brace.
    pub end_offset: usize,
    pub start_line: usize,
    pub end_line: usize,
    /// Significant (non-comment, non-whitespace) tokens in the declaration.
    pub language_token_count: usize,
}

struct Scanner<'a> {
    toks: Vec<&'a Token>,
    found: Vec<MethodSpan>,
}

type SResult<T> = Result<T, ExtractError>;

impl<'a> Scanner<'a> {
    fn is(&self, i: usize, text: &str) -> bool {
        self.toks.get(i).is_some_and(|t| {
            t.lexeme == text
                && matches!(
                    t.kind,
                    TokenKind::Separator | TokenKind::Operator | TokenKind::Keyword
                )
        })
    }

    fn is_ident(&self, i: usize) -> bool {
        self.toks
            .get(i)
            .is_some_and(|t| t.kind == TokenKind::Identifier)
    }

    fn err<T>(&self, i: usize, message: &str) -> SResult<T> {
        let line = self
            .toks
            .get(i)
            .or(self.toks.last())
            .map(|t| t.line)
            .unwrap_or(1);
        Err(ExtractError::Structure {
            line,
            message: message.to_string(),
        })
    }

    /// Index just past the token that closes the group opened at `i`.
    fn skip_balanced(&self, i: usize, open: &str, close: &str) -> SResult<usize> {
        let mut depth = 0usize;
        let mut j = i;
        while j < self.toks.len() {
            if self.is(j, open) {
                depth += 1;
            } else if self.is(j, close) {
                depth -= 1;
                if depth == 0 {
                    return Ok(j + 1);
                }
            }
            j += 1;
        }
        self.err(i, &format!("unclosed `{open}`"))
    }

    /// Skips a generic argument list starting at `<`.
    fn skip_angles(&self, i: usize) -> SResult<usize> {
        let mut depth = 0isize;
        let mut j = i;
        while j < self.toks.len() {
            let t = self.toks[j];
            if t.kind == TokenKind::Operator {
                match t.lexeme.as_str() {
                    "<" => depth += 1,
                    ">" => depth -= 1,
                    ">>" => depth -= 2,
                    ">>>" => depth -= 3,
                    _ => {}
                }
            }
            if matches!(t.lexeme.as_str(), ";" | "{" | "}") && t.kind == TokenKind::Separator {
                return self.err(i, "unterminated type arguments");
            }
            j += 1;
            if depth <= 0 {
                return Ok(j);
            }
        }
        self.err(i, "unterminated type arguments")
    }

    fn skip_annotation(&self, i: usize) -> SResult<usize> {
        // `@` Name(.Name)* [ (...) ]
        let mut j = i + 1;
        if self.is(j, "interface") {
            return Ok(j);
        }
        while self.is_ident(j) {
            j += 1;
            if self.is(j, ".") && self.is_ident(j + 1) {
                j += 1;
            } else {
                break;
            }
        }
        if self.is(j, "(") {
            j = self.skip_balanced(j, "(", ")")?;
        }
        Ok(j)
    }

    fn at_type_decl(&self, mut i: usize) -> bool {
        while let Some(t) = self.toks.get(i) {
            match (t.kind, t.lexeme.as_str()) {
                (TokenKind::Keyword, "class" | "interface" | "enum") => return true,
                (TokenKind::Separator, "@") if self.is(i + 1, "interface") => return true,
                (TokenKind::Identifier, "record") => {
                    return self.is_ident(i + 1) && (self.is(i + 2, "(") || self.is(i + 2, "<"))
                }
                (
                    TokenKind::Keyword,
                    "public" | "protected" | "private" | "static" | "abstract" | "final"
                    | "strictfp",
                ) => i += 1,
                // `sealed`, `non-sealed`
                (TokenKind::Identifier, "sealed" | "non") | (TokenKind::Operator, "-") => i += 1,
                (TokenKind::Separator, "@") => match self.skip_annotation(i) {
                    Ok(j) => i = j,
                    Err(_) => return false,
                },
                _ => return false,
            }
        }
        false
    }

    /// Scans a type declaration starting at `i`; returns the index past its body.
    fn type_decl(&mut self, i: usize) -> SResult<usize> {
        let mut j = i;
        let mut is_enum = false;
        while j < self.toks.len() && !self.is(j, "{") {
            if self.is(j, "enum") {
                is_enum = true;
            }
            if self.is(j, "@") && !self.is(j + 1, "interface") {
                j = self.skip_annotation(j)?;
                continue;
            }
            if self.is(j, "(") {
                j = self.skip_balanced(j, "(", ")")?;
                continue;
            }
            if self.is(j, ";") {
                return self.err(j, "type declaration without body");
            }
            j += 1;
        }
        if j >= self.toks.len() {
            return self.err(i, "type declaration without body");
        }
        self.class_body(j, is_enum)
    }

    /// Scans a class body whose `{` is at `i`; returns the index past `}`.
    fn class_body(&mut self, i: usize, is_enum: bool) -> SResult<usize> {
        let mut j = i + 1;
        if is_enum {
            // Constants up to the first top-level `;` or the closing brace.
            loop {
                if j >= self.toks.len() {
                    return self.err(i, "unterminated enum body");
                }
                if self.is(j, "}") {
                    return Ok(j + 1);
                }
                if self.is(j, ";") {
                    j += 1;
                    break;
                }
                if self.is(j, "(") {
                    j = self.skip_balanced(j, "(", ")")?;
                } else if self.is(j, "{") {
                    j = self.class_body(j, false)?;
                } else if self.is(j, "@") {
                    j = self.skip_annotation(j)?;
                } else {
                    j += 1;
                }
            }
        }
        loop {
            if j >= self.toks.len() {
                return self.err(i, "unterminated class body");
            }
            if self.is(j, "}") {
                return Ok(j + 1);
            }
            if self.is(j, ";") {
                j += 1;
                continue;
            }
            j = self.member(j)?;
        }
    }

    /// Scans one member declaration at `start`; returns the index past it.
    fn member(&mut self, start: usize) -> SResult<usize> {
        if self.at_type_decl(start) {
            return self.type_decl(start);
        }
        let mut j = start;
        loop {
            if j >= self.toks.len() {
                return self.err(start, "unterminated member");
            }
            let t = self.toks[j];
            match (t.kind, t.lexeme.as_str()) {
                (TokenKind::Separator, "@") => j = self.skip_annotation(j)?,
                (TokenKind::Operator, "<") => j = self.skip_angles(j)?,
                (TokenKind::Separator, "{") => {
                    // Initializer block or compact record constructor.
                    return self.code(j + 1, Stop::Brace);
                }
                (TokenKind::Operator, "=") => return self.code(j + 1, Stop::Semicolon),
                (TokenKind::Separator, ";") => return Ok(j + 1),
                (TokenKind::Separator, "(") if self.is_ident(j.wrapping_sub(1)) && j > start => {
                    let name = self.toks[j - 1].lexeme.clone();
                    let mut k = self.skip_balanced(j, "(", ")")?;
                    // Dimensions, throws clause, annotation default values.
                    while k < self.toks.len() && !self.is(k, "{") && !self.is(k, ";") {
                        if self.is(k, "<") {
                            k = self.skip_angles(k)?;
                        } else if self.is(k, "(") {
                            k = self.skip_balanced(k, "(", ")")?;
                        } else if self.is(k, "}") {
                            return self.err(k, "unexpected `}` in method header");
                        } else {
                            k += 1;
                        }
                    }
                    if self.is(k, ";") {
                        return Ok(k + 1);
                    }
                    if k >= self.toks.len() {
                        return self.err(start, "method without body");
                    }
                    let end = self.code(k + 1, Stop::Brace)?;
                    let first = self.toks[start];
                    let last = self.toks[end - 1];
                    self.found.push(MethodSpan {
                        name,
                        start_offset: first.offset,
                        end_offset: last.end_offset(),
                        start_line: first.line,
                        end_line: last.end_line(),
                        language_token_count: end - start,
                    });
                    return Ok(end);
                }
                _ => j += 1,
            }
        }
    }

    /// Scans code (a block body or an initializer expression), descending into
    /// anonymous and local class bodies. With `Stop::Brace` it ends past the
    /// `}` closing the enclosing block; with `Stop::Semicolon` past the first
    /// `;` at nesting depth zero.
    fn code(&mut self, i: usize, stop: Stop) -> SResult<usize> {
        let mut depth = 0usize;
        let mut j = i;
        while j < self.toks.len() {
            let t = self.toks[j];
            match (t.kind, t.lexeme.as_str()) {
                (TokenKind::Separator, "{") => {
                    depth += 1;
                    j += 1;
                }
                (TokenKind::Separator, "}") => {
                    if depth == 0 {
                        if stop == Stop::Brace {
                            return Ok(j + 1);
                        }
                        return self.err(j, "unexpected `}`");
                    }
                    depth -= 1;
                    j += 1;
                }
                (TokenKind::Separator, ";") if depth == 0 && stop == Stop::Semicolon => {
                    return Ok(j + 1)
                }
                (TokenKind::Keyword, "new") => j = self.creation(j)?,
                (TokenKind::Keyword, "class" | "interface" | "enum")
                    if !self.is(j.wrapping_sub(1), ".") && self.is_ident(j + 1) =>
                {
                    j = self.type_decl(j)?;
                }
                (TokenKind::Identifier, "record")
                    if self.is_ident(j + 1)
                        && self.is(j + 2, "(")
                        && !self.is(j.wrapping_sub(1), ".") =>
                {
                    j = self.type_decl(j)?;
                }
                _ => j += 1,
            }
        }
        self.err(i, "unterminated block")
    }

    /// At `new`: skips the created type and arguments, scanning an anonymous
    /// class body if present. Returns where ordinary scanning resumes.
    fn creation(&mut self, i: usize) -> SResult<usize> {
        let mut j = i + 1;
        loop {
            if self.is(j, "@") {
                j = self.skip_annotation(j)?;
            } else if self.is(j, "<") {
                j = self.skip_angles(j)?;
            } else if self.is_ident(j) || self.is(j, ".") {
                j += 1;
            } else {
                break;
            }
        }
        if !self.is(j, "(") {
            // Array creation or primitive element type; braces are array initializers.
            return Ok(j);
        }
        j = self.skip_balanced(j, "(", ")")?;
        if self.is(j, "{") {
            // Arguments may contain lambdas or anonymous classes too; rescan them.
            self.rescan_args(i, j)?;
            return self.class_body(j, false);
        }
        self.rescan_args(i, j)?;
        Ok(j)
    }

    fn rescan_args(&mut self, from: usize, to: usize) -> SResult<()> {
        let mut k = from + 1;
        while k < to {
            if self.is(k, "new") {
                k = self.creation(k)?;
            } else {
                k += 1;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stop {
    Brace,
    Semicolon,
}

/// Finds all method and constructor declarations with bodies, in source order.
pub fn find_methods(source: &str) -> Result<Vec<MethodSpan>, ExtractError> {
    let tokens = lex(source)?;
    find_methods_in(&tokens)
}

pub fn find_methods_in(tokens: &[Token]) -> Result<Vec<MethodSpan>, ExtractError> {
    let mut sc = Scanner {
        toks: tokens.iter().filter(|t| !t.kind.is_trivia()).collect(),
        found: Vec::new(),
    };
    let mut i = 0;
    while i < sc.toks.len() {
        if sc.at_type_decl(i) {
            i = sc.type_decl(i)?;
        } else if sc.is(i, "{") {
            // Stray block at top level: treat as a class body so members are still found.
            i = sc.class_body(i, false)?;
        } else {
            i += 1;
        }
    }
    sc.found.sort_by_key(|m| m.start_offset);
    sc.found.dedup_by_key(|m| (m.start_offset, m.end_offset));
    Ok(sc.found)
}
