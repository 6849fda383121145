//! Recursive-descent parser for a single method or constructor declaration.

use thiserror::Error;

use super::ast::*;
use super::lexer::{lex, LexError, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("parse error at line {line}: {message}")]
    Syntax { line: usize, message: String },
}

const PRIMITIVES: &[&str] = &[
    "boolean", "byte", "char", "short", "int", "long", "float", "double", "void",
];

const MODIFIERS: &[&str] = &[
    "public",
    "protected",
    "private",
    "static",
    "abstract",
    "final",
    "native",
    "synchronized",
    "transient",
    "volatile",
    "strictfp",
    "default",
];

#[derive(Debug, Clone)]
struct PTok {
    kind: TokenKind,
    text: String,
    line: usize,
    /// No characters separate this token from the next one.
    joined: bool,
}

/// Splits `>>`-family operators into single `>` tokens so type arguments can
/// close one level at a time. The expression parser re-joins adjacent ones.
fn prepare(tokens: &[Token]) -> Vec<PTok> {
    let sig: Vec<&Token> = tokens.iter().filter(|t| !t.kind.is_trivia()).collect();
    let mut out = Vec::with_capacity(sig.len());
    for (i, t) in sig.iter().enumerate() {
        let joined = sig.get(i + 1).is_some_and(|n| n.offset == t.end_offset());
        let parts: &[&str] = match (t.kind, t.lexeme.as_str()) {
            (TokenKind::Operator, ">>") => &[">", ">"],
            (TokenKind::Operator, ">>>") => &[">", ">", ">"],
            (TokenKind::Operator, ">>=") => &[">", ">="],
            (TokenKind::Operator, ">>>=") => &[">", ">", ">="],
            _ => &[],
        };
        if parts.is_empty() {
            out.push(PTok {
                kind: t.kind,
                text: t.lexeme.clone(),
                line: t.line,
                joined,
            });
        } else {
            for (j, p) in parts.iter().enumerate() {
                out.push(PTok {
                    kind: TokenKind::Operator,
                    text: (*p).to_string(),
                    line: t.line,
                    joined: j + 1 < parts.len() || joined,
                });
            }
        }
    }
    out
}

pub struct Parser {
    toks: Vec<PTok>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    pub fn new(source: &str) -> Result<Self, LexError> {
        Ok(Self::from_tokens(&lex(source)?))
    }

    pub fn from_tokens(tokens: &[Token]) -> Self {
        Self {
            toks: prepare(tokens),
            pos: 0,
        }
    }

    fn peek(&self) -> Option<&PTok> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&PTok> {
        self.toks.get(self.pos + n)
    }

    fn at(&self, text: &str) -> bool {
        self.peek_is(0, text)
    }

    fn peek_is(&self, n: usize, text: &str) -> bool {
        self.peek_at(n).is_some_and(|t| {
            t.text == text && !t.kind.is_literal() && t.kind != TokenKind::Identifier
        })
    }

    fn at_ident(&self) -> bool {
        self.peek().is_some_and(|t| t.kind == TokenKind::Identifier)
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.at(text) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn line(&self) -> usize {
        self.peek()
            .or_else(|| self.toks.last())
            .map(|t| t.line)
            .unwrap_or(1)
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        let found = self
            .peek()
            .map(|t| format!(" (found {:?})", t.text))
            .unwrap_or_else(|| " (found end of input)".to_string());
        Err(ParseError::Syntax {
            line: self.line(),
            message: format!("{}{}", message.into(), found),
        })
    }

    fn expect(&mut self, text: &str) -> PResult<()> {
        if self.eat(text) {
            Ok(())
        } else {
            self.error(format!("expected `{text}`"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        if self.at_ident() {
            let t = self.toks[self.pos].text.clone();
            self.pos += 1;
            Ok(t)
        } else {
            self.error("expected identifier")
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    // ---------------------------------------------------------------------
    // Declarations

    fn skip_annotation(&mut self) -> PResult<()> {
        self.expect("@")?;
        self.ident()?;
        while self.at(".")
            && self
                .peek_at(1)
                .is_some_and(|t| t.kind == TokenKind::Identifier)
        {
            self.pos += 2;
        }
        if self.at("(") {
            self.skip_balanced("(", ")")?;
        }
        Ok(())
    }

    fn skip_modifiers(&mut self) -> PResult<()> {
        loop {
            if self.at("@") && !self.peek_is(1, "interface") {
                self.skip_annotation()?;
            } else if MODIFIERS.iter().any(|m| self.at(m)) {
                self.pos += 1;
            } else {
                return Ok(());
            }
        }
    }

    fn skip_balanced(&mut self, open: &str, close: &str) -> PResult<()> {
        self.expect(open)?;
        let mut depth = 1usize;
        while depth > 0 {
            if self.at_end() {
                return self.error(format!("unbalanced `{open}`"));
            }
            if self.at(open) {
                depth += 1;
            } else if self.at(close) {
                depth -= 1;
            }
            self.pos += 1;
        }
        Ok(())
    }

    /// Parses a complete method or constructor declaration.
    pub fn parse_method(&mut self) -> PResult<MethodDecl> {
        self.skip_modifiers()?;
        if self.at("<") {
            self.type_args()?;
            self.skip_modifiers()?;
        }
        let (return_type, name, is_constructor) = if self.at_ident() && self.peek_is(1, "(") {
            (None, self.ident()?, true)
        } else {
            let ty = self.parse_type()?;
            (Some(ty), self.ident()?, false)
        };
        let params = self.formal_params()?;
        while self.at("[") && self.peek_is(1, "]") {
            self.pos += 2;
        }
        let mut throws = Vec::new();
        if self.eat("throws") {
            loop {
                throws.push(self.parse_type()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        if !self.at("{") {
            return self.error("expected method body");
        }
        let body = self.block()?;
        if !self.at_end() {
            return self.error("trailing tokens after method body");
        }
        Ok(MethodDecl {
            name,
            is_constructor,
            return_type,
            params,
            throws,
            body,
        })
    }

    fn formal_params(&mut self) -> PResult<Vec<Param>> {
        self.expect("(")?;
        let mut params = Vec::new();
        if self.eat(")") {
            return Ok(params);
        }
        loop {
            self.skip_modifiers()?;
            let mut ty = self.parse_type()?;
            let varargs = self.eat("...");
            // Receiver parameter: `Foo this`.
            if self.eat("this") {
                if !self.eat(",") {
                    break;
                }
                continue;
            }
            let name = self.ident()?;
            while self.at("[") && self.peek_is(1, "]") {
                self.pos += 2;
                ty.dims += 1;
            }
            params.push(Param { name, ty, varargs });
            if !self.eat(",") {
                break;
            }
        }
        self.expect(")")?;
        Ok(params)
    }

    // ---------------------------------------------------------------------
    // Types

    fn type_args(&mut self) -> PResult<Vec<TypeRef>> {
        self.expect("<")?;
        let mut args = Vec::new();
        if self.eat(">") {
            return Ok(args);
        }
        loop {
            while self.at("@") {
                self.skip_annotation()?;
            }
            if self.eat("?") {
                let mut wildcard = TypeRef {
                    name: "?".to_string(),
                    args: Vec::new(),
                    dims: 0,
                    primitive: false,
                };
                if self.eat("extends") || self.eat("super") {
                    wildcard.args.push(self.parse_type()?);
                }
                args.push(wildcard);
            } else {
                args.push(self.parse_type()?);
            }
            // Bounds in type parameter declarations: `<T extends A & B>`.
            if self.eat("extends") {
                self.parse_type()?;
                while self.eat("&") {
                    self.parse_type()?;
                }
            }
            if !self.eat(",") {
                break;
            }
        }
        self.expect(">")?;
        Ok(args)
    }

    pub(crate) fn parse_type(&mut self) -> PResult<TypeRef> {
        while self.at("@") {
            self.skip_annotation()?;
        }
        let tok = match self.peek() {
            Some(t) => t.clone(),
            None => return self.error("expected type"),
        };
        let mut ty = if tok.kind == TokenKind::Keyword && PRIMITIVES.contains(&tok.text.as_str()) {
            self.pos += 1;
            TypeRef {
                name: tok.text,
                args: Vec::new(),
                dims: 0,
                primitive: true,
            }
        } else if tok.kind == TokenKind::Identifier {
            self.pos += 1;
            let mut name = tok.text;
            let mut args = Vec::new();
            loop {
                if self.at("<") {
                    args = self.type_args()?;
                }
                if self.at(".")
                    && self
                        .peek_at(1)
                        .is_some_and(|t| t.kind == TokenKind::Identifier)
                {
                    self.pos += 1;
                    name.push('.');
                    name.push_str(&self.ident()?);
                } else {
                    break;
                }
            }
            TypeRef {
                name,
                args,
                dims: 0,
                primitive: false,
            }
        } else {
            return self.error("expected type");
        };
        while self.at("[") && self.peek_is(1, "]") {
            self.pos += 2;
            ty.dims += 1;
        }
        Ok(ty)
    }

    /// Runs `f` and rewinds on failure.
    fn attempt<T>(&mut self, f: impl FnOnce(&mut Self) -> PResult<T>) -> Option<T> {
        let saved = self.pos;
        match f(self) {
            Ok(v) => Some(v),
            Err(_) => {
                self.pos = saved;
                None
            }
        }
    }

    /// Whether a local variable declaration starts at the cursor.
    fn looks_like_local_decl(&mut self) -> bool {
        let saved = self.pos;
        let ok = (|| {
            self.skip_modifiers().ok()?;
            let ty = self.parse_type().ok()?;
            if ty.name == "void" {
                return None;
            }
            if !self.at_ident() {
                return None;
            }
            self.pos += 1;
            let next = self.peek()?;
            matches!(next.text.as_str(), "=" | ";" | "," | "[" | ":").then_some(())
        })()
        .is_some();
        self.pos = saved;
        ok
    }

    // ---------------------------------------------------------------------
    // Statements

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect("{")?;
        let mut stmts = Vec::new();
        while !self.at("}") {
            if self.at_end() {
                return self.error("unterminated block");
            }
            stmts.push(self.statement()?);
        }
        self.pos += 1;
        Ok(stmts)
    }

    fn local_var_rest(&mut self) -> PResult<Stmt> {
        self.skip_modifiers()?;
        let mut ty = self.parse_type()?;
        let mut vars = Vec::new();
        loop {
            let name = self.ident()?;
            while self.at("[") && self.peek_is(1, "]") {
                self.pos += 2;
                ty.dims += 1;
            }
            let init = if self.eat("=") {
                Some(self.var_initializer()?)
            } else {
                None
            };
            vars.push(VarDeclarator { name, init });
            if !self.eat(",") {
                break;
            }
        }
        Ok(Stmt::LocalVar { ty, vars })
    }

    fn var_initializer(&mut self) -> PResult<Expr> {
        if self.at("{") {
            self.array_init()
        } else {
            self.expr()
        }
    }

    fn array_init(&mut self) -> PResult<Expr> {
        self.expect("{")?;
        let mut items = Vec::new();
        while !self.at("}") {
            items.push(self.var_initializer()?);
            if !self.eat(",") {
                break;
            }
        }
        self.expect("}")?;
        Ok(Expr::ArrayInit(items))
    }

    fn at_local_class(&self) -> bool {
        let mut i = 0;
        while let Some(t) = self.peek_at(i) {
            match t.text.as_str() {
                "abstract" | "final" | "static" | "strictfp" if t.kind == TokenKind::Keyword => {
                    i += 1
                }
                "class" | "interface" | "enum" if t.kind == TokenKind::Keyword => return true,
                "record" if t.kind == TokenKind::Identifier => {
                    return self
                        .peek_at(i + 1)
                        .is_some_and(|n| n.kind == TokenKind::Identifier)
                        && self.peek_is(i + 2, "(");
                }
                _ => return false,
            }
        }
        false
    }

    fn skip_local_class(&mut self) -> PResult<()> {
        while !self.at("{") {
            if self.at_end() {
                return self.error("expected class body");
            }
            if self.at("(") {
                self.skip_balanced("(", ")")?;
                continue;
            }
            self.pos += 1;
        }
        self.skip_balanced("{", "}")
    }

    fn statement(&mut self) -> PResult<Stmt> {
        let tok = match self.peek() {
            Some(t) => t.clone(),
            None => return self.error("expected statement"),
        };
        if tok.kind == TokenKind::Keyword {
            match tok.text.as_str() {
                "if" => {
                    self.pos += 1;
                    let cond = self.paren_expr()?;
                    let then = Box::new(self.statement()?);
                    let otherwise = if self.eat("else") {
                        Some(Box::new(self.statement()?))
                    } else {
                        None
                    };
                    return Ok(Stmt::If {
                        cond,
                        then,
                        otherwise,
                    });
                }
                "while" => {
                    self.pos += 1;
                    let cond = self.paren_expr()?;
                    let body = Box::new(self.statement()?);
                    return Ok(Stmt::While { cond, body });
                }
                "do" => {
                    self.pos += 1;
                    let body = Box::new(self.statement()?);
                    self.expect("while")?;
                    let cond = self.paren_expr()?;
                    self.expect(";")?;
                    return Ok(Stmt::Do { body, cond });
                }
                "for" => return self.for_statement(),
                "switch" => {
                    self.pos += 1;
                    let selector = self.paren_expr()?;
                    let cases = self.switch_body()?;
                    return Ok(Stmt::Switch { selector, cases });
                }
                "try" => return self.try_statement(),
                "return" => {
                    self.pos += 1;
                    let value = if self.at(";") {
                        None
                    } else {
                        Some(self.expr()?)
                    };
                    self.expect(";")?;
                    return Ok(Stmt::Return(value));
                }
                "throw" => {
                    self.pos += 1;
                    let e = self.expr()?;
                    self.expect(";")?;
                    return Ok(Stmt::Throw(e));
                }
                "break" | "continue" => {
                    self.pos += 1;
                    let label = if self.at_ident() {
                        Some(self.ident()?)
                    } else {
                        None
                    };
                    self.expect(";")?;
                    return Ok(if tok.text == "break" {
                        Stmt::Break(label)
                    } else {
                        Stmt::Continue(label)
                    });
                }
                "synchronized" if self.peek_is(1, "(") => {
                    self.pos += 1;
                    let lock = self.paren_expr()?;
                    let body = self.block()?;
                    return Ok(Stmt::Synchronized { lock, body });
                }
                "assert" => {
                    self.pos += 1;
                    let cond = self.expr()?;
                    let message = if self.eat(":") {
                        Some(self.expr()?)
                    } else {
                        None
                    };
                    self.expect(";")?;
                    return Ok(Stmt::Assert { cond, message });
                }
                _ => {}
            }
        }
        if self.at("{") {
            return Ok(Stmt::Block(self.block()?));
        }
        if self.eat(";") {
            return Ok(Stmt::Empty);
        }
        if tok.kind == TokenKind::Identifier {
            if self.peek_is(1, ":") {
                let label = self.ident()?;
                self.pos += 1;
                let body = Box::new(self.statement()?);
                return Ok(Stmt::Labeled { label, body });
            }
            if tok.text == "yield"
                && !self.peek_is(1, "=")
                && !self.peek_is(1, "(")
                && !self.peek_is(1, ".")
            {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(";")?;
                return Ok(Stmt::Yield(e));
            }
        }
        if self.at_local_class() {
            self.skip_local_class()?;
            return Ok(Stmt::LocalClass);
        }
        if self.looks_like_local_decl() {
            let s = self.local_var_rest()?;
            self.expect(";")?;
            return Ok(s);
        }
        let e = self.expr()?;
        self.expect(";")?;
        Ok(Stmt::Expr(e))
    }

    fn paren_expr(&mut self) -> PResult<Expr> {
        self.expect("(")?;
        let e = self.expr()?;
        self.expect(")")?;
        Ok(e)
    }

    fn for_statement(&mut self) -> PResult<Stmt> {
        self.expect("for")?;
        self.expect("(")?;
        // Enhanced for: `for (T x : expr)`.
        let enhanced = self.attempt(|p| {
            p.skip_modifiers()?;
            let ty = p.parse_type()?;
            let name = p.ident()?;
            p.expect(":")?;
            Ok((ty, name))
        });
        if let Some((ty, name)) = enhanced {
            let iterable = self.expr()?;
            self.expect(")")?;
            let body = Box::new(self.statement()?);
            return Ok(Stmt::ForEach {
                ty,
                name,
                iterable,
                body,
            });
        }
        let mut init = Vec::new();
        if !self.at(";") {
            if self.looks_like_local_decl() {
                init.push(self.local_var_rest()?);
            } else {
                loop {
                    init.push(Stmt::Expr(self.expr()?));
                    if !self.eat(",") {
                        break;
                    }
                }
            }
        }
        self.expect(";")?;
        let cond = if self.at(";") {
            None
        } else {
            Some(self.expr()?)
        };
        self.expect(";")?;
        let mut update = Vec::new();
        if !self.at(")") {
            loop {
                update.push(self.expr()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        let body = Box::new(self.statement()?);
        Ok(Stmt::For {
            init,
            cond,
            update,
            body,
        })
    }

    fn try_statement(&mut self) -> PResult<Stmt> {
        self.expect("try")?;
        let mut resources = Vec::new();
        if self.eat("(") {
            while !self.at(")") {
                if self.looks_like_local_decl() {
                    resources.push(self.local_var_rest()?);
                } else {
                    resources.push(Stmt::Expr(self.expr()?));
                }
                if !self.eat(";") {
                    break;
                }
            }
            self.expect(")")?;
        }
        let body = self.block()?;
        let mut catches = Vec::new();
        while self.eat("catch") {
            self.expect("(")?;
            self.skip_modifiers()?;
            let mut types = vec![self.parse_type()?];
            while self.eat("|") {
                types.push(self.parse_type()?);
            }
            let name = self.ident()?;
            self.expect(")")?;
            let body = self.block()?;
            catches.push(CatchClause { types, name, body });
        }
        let finally = if self.eat("finally") {
            Some(self.block()?)
        } else {
            None
        };
        if catches.is_empty() && finally.is_none() && resources.is_empty() {
            return self.error("try without catch or finally");
        }
        Ok(Stmt::Try {
            resources,
            body,
            catches,
            finally,
        })
    }

    fn switch_body(&mut self) -> PResult<Vec<SwitchCase>> {
        self.expect("{")?;
        let mut cases = Vec::new();
        while !self.eat("}") {
            if self.at_end() {
                return self.error("unterminated switch");
            }
            let mut case = SwitchCase {
                labels: Vec::new(),
                is_default: false,
                binding: None,
                body: Vec::new(),
            };
            if self.eat("default") {
                case.is_default = true;
            } else {
                self.expect("case")?;
                loop {
                    if self.eat("default") {
                        case.is_default = true;
                    } else if self.at_ident()
                        && (self.peek_is(1, "->") || self.peek_is(1, ",") || self.peek_is(1, ":"))
                    {
                        // Enum constant label; must not be read as a lambda.
                        case.labels.push(Expr::Name(self.ident()?));
                    } else if let Some((ty, name)) = self.attempt(|p| {
                        let ty = p.parse_type()?;
                        let name = p.ident()?;
                        Ok((ty, name))
                    }) {
                        // Type pattern: `case Foo f ->`.
                        case.labels.push(Expr::ClassLit(ty));
                        case.binding = Some(name);
                    } else {
                        case.labels.push(self.ternary()?);
                    }
                    if !self.eat(",") {
                        break;
                    }
                }
            }
            if self.eat("->") {
                if self.at("{") {
                    case.body.push(Stmt::Block(self.block()?));
                } else if self.at("throw") {
                    case.body.push(self.statement()?);
                } else {
                    let e = self.expr()?;
                    self.expect(";")?;
                    case.body.push(Stmt::Expr(e));
                }
            } else {
                self.expect(":")?;
                while !self.at("case") && !self.at("default") && !self.at("}") {
                    if self.at_end() {
                        return self.error("unterminated switch");
                    }
                    case.body.push(self.statement()?);
                }
                // `default:` followed by a guard-less case with arrow is not mixed in practice.
            }
            cases.push(case);
        }
        Ok(cases)
    }

    // ---------------------------------------------------------------------
    // Expressions

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        let lhs = self.ternary()?;
        if let Some((op, width)) = self.assign_op() {
            self.pos += width;
            let value = if self.at("{") {
                self.array_init()?
            } else {
                self.expr()?
            };
            return Ok(Expr::Assign {
                op,
                target: Box::new(lhs),
                value: Box::new(value),
            });
        }
        Ok(lhs)
    }

    fn assign_op(&self) -> Option<(String, usize)> {
        let t = self.peek()?;
        if t.kind != TokenKind::Operator {
            return None;
        }
        match t.text.as_str() {
            "=" | "+=" | "-=" | "*=" | "/=" | "%=" | "&=" | "|=" | "^=" | "<<=" => {
                Some((t.text.clone(), 1))
            }
            ">" => match self.shift_op() {
                Some((op, w)) if op.ends_with('=') => Some((op, w)),
                _ => None,
            },
            _ => None,
        }
    }

    /// Recognizes split `>` runs: `>>`, `>>>`, `>>=`, `>>>=`.
    fn shift_op(&self) -> Option<(String, usize)> {
        let t0 = self.peek()?;
        if t0.text != ">" || !t0.joined {
            return None;
        }
        let t1 = self.peek_at(1)?;
        match t1.text.as_str() {
            ">=" => Some((">>=".to_string(), 2)),
            ">" if t1.joined => match self.peek_at(2).map(|t| t.text.as_str()) {
                Some(">=") => Some((">>>=".to_string(), 3)),
                Some(">") => Some((">>>".to_string(), 3)),
                _ => Some((">>".to_string(), 2)),
            },
            ">" => Some((">>".to_string(), 2)),
            _ => None,
        }
    }

    fn ternary(&mut self) -> PResult<Expr> {
        let cond = self.binary(0)?;
        if self.eat("?") {
            let then = self.ternary_branch()?;
            self.expect(":")?;
            let otherwise = self.ternary_branch()?;
            return Ok(Expr::Conditional {
                cond: Box::new(cond),
                then: Box::new(then),
                otherwise: Box::new(otherwise),
            });
        }
        Ok(cond)
    }

    fn ternary_branch(&mut self) -> PResult<Expr> {
        if self.lambda_ahead() {
            return self.lambda();
        }
        self.ternary()
    }

    /// Current binary operator with its precedence and token width.
    fn binary_op(&self) -> Option<(String, u8, usize)> {
        let t = self.peek()?;
        if t.kind == TokenKind::Keyword && t.text == "instanceof" {
            return Some(("instanceof".to_string(), 6, 1));
        }
        if t.kind != TokenKind::Operator {
            return None;
        }
        if t.text == ">" {
            if let Some((op, w)) = self.shift_op() {
                if op.ends_with('=') {
                    return None;
                }
                return Some((op, 7, w));
            }
        }
        let prec = match t.text.as_str() {
            "||" => 0,
            "&&" => 1,
            "|" => 2,
            "^" => 3,
            "&" => 4,
            "==" | "!=" => 5,
            "<" | ">" | "<=" | ">=" => 6,
            "<<" => 7,
            "+" | "-" => 8,
            "*" | "/" | "%" => 9,
            _ => return None,
        };
        Some((t.text.clone(), prec, 1))
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some((op, prec, width)) = self.binary_op() {
            if prec < min_prec {
                break;
            }
            self.pos += width;
            if op == "instanceof" {
                self.eat("final");
                let ty = self.parse_type()?;
                let binding = if self.at_ident() {
                    Some(self.ident()?)
                } else {
                    None
                };
                lhs = Expr::InstanceOf {
                    expr: Box::new(lhs),
                    ty,
                    binding,
                };
                continue;
            }
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let t = match self.peek() {
            Some(t) => t.clone(),
            None => return self.error("expected expression"),
        };
        if t.kind == TokenKind::Operator {
            if let "+" | "-" | "++" | "--" | "!" | "~" = t.text.as_str() {
                self.pos += 1;
                let operand = self.unary()?;
                return Ok(Expr::Unary {
                    op: t.text,
                    operand: Box::new(operand),
                    postfix: false,
                });
            }
        }
        if self.at("(") && !self.lambda_ahead() {
            if let Some(cast) = self.try_cast()? {
                return Ok(cast);
            }
        }
        let mut e = self.postfix()?;
        while self.at("++") || self.at("--") {
            let op = self.toks[self.pos].text.clone();
            self.pos += 1;
            e = Expr::Unary {
                op,
                operand: Box::new(e),
                postfix: true,
            };
        }
        Ok(e)
    }

    fn try_cast(&mut self) -> PResult<Option<Expr>> {
        let saved = self.pos;
        self.pos += 1;
        let ty = match self.parse_type() {
            Ok(ty) => ty,
            Err(_) => {
                self.pos = saved;
                return Ok(None);
            }
        };
        // Intersection casts: `(A & B) x`.
        while self.at("&") {
            self.pos += 1;
            if self.parse_type().is_err() {
                self.pos = saved;
                return Ok(None);
            }
        }
        if !self.eat(")") {
            self.pos = saved;
            return Ok(None);
        }
        let next = match self.peek() {
            Some(n) => n.clone(),
            None => {
                self.pos = saved;
                return Ok(None);
            }
        };
        let starts_operand = match next.kind {
            TokenKind::Identifier => true,
            k if k.is_literal() => true,
            TokenKind::Keyword => {
                matches!(next.text.as_str(), "this" | "super" | "new" | "switch")
                    || PRIMITIVES.contains(&next.text.as_str())
            }
            TokenKind::Separator => next.text == "(",
            TokenKind::Operator => {
                matches!(next.text.as_str(), "!" | "~")
                    || (ty.primitive && matches!(next.text.as_str(), "+" | "-" | "++" | "--"))
            }
            _ => false,
        };
        if !starts_operand {
            self.pos = saved;
            return Ok(None);
        }
        let expr = if self.lambda_ahead() {
            self.lambda()?
        } else {
            self.unary()?
        };
        Ok(Some(Expr::Cast {
            ty,
            expr: Box::new(expr),
        }))
    }

    fn lambda_ahead(&self) -> bool {
        if self.at_ident() && self.peek_is(1, "->") {
            return true;
        }
        if !self.at("(") {
            return false;
        }
        let mut depth = 0usize;
        let mut i = 0;
        while let Some(t) = self.peek_at(i) {
            if t.kind == TokenKind::Separator && t.text == "(" {
                depth += 1;
            } else if t.kind == TokenKind::Separator && t.text == ")" {
                depth -= 1;
                if depth == 0 {
                    return self.peek_is(i + 1, "->");
                }
            }
            i += 1;
        }
        false
    }

    fn lambda(&mut self) -> PResult<Expr> {
        let mut params = Vec::new();
        if self.at_ident() {
            params.push(self.ident()?);
        } else {
            self.expect("(")?;
            let mut depth = 0usize;
            let mut last_ident: Option<String> = None;
            loop {
                let t = match self.peek() {
                    Some(t) => t.clone(),
                    None => return self.error("unterminated lambda parameters"),
                };
                self.pos += 1;
                match t.text.as_str() {
                    "(" | "<" | "[" => depth += 1,
                    ")" if depth == 0 => {
                        params.extend(last_ident.take());
                        break;
                    }
                    ")" | ">" | "]" => depth = depth.saturating_sub(1),
                    "," if depth == 0 => params.extend(last_ident.take()),
                    _ if t.kind == TokenKind::Identifier && depth == 0 => last_ident = Some(t.text),
                    _ => {}
                }
            }
        }
        self.expect("->")?;
        let body = if self.at("{") {
            LambdaBody::Block(self.block()?)
        } else {
            LambdaBody::Expr(Box::new(self.expr()?))
        };
        Ok(Expr::Lambda { params, body })
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect("(")?;
        let mut args = Vec::new();
        if self.eat(")") {
            return Ok(args);
        }
        loop {
            if self.lambda_ahead() {
                args.push(self.lambda()?);
            } else {
                args.push(self.expr()?);
            }
            if !self.eat(",") {
                break;
            }
        }
        self.expect(")")?;
        Ok(args)
    }

    fn primary(&mut self) -> PResult<Expr> {
        if self.lambda_ahead() {
            return self.lambda();
        }
        let t = match self.peek() {
            Some(t) => t.clone(),
            None => return self.error("expected expression"),
        };
        let start = self.pos;
        match t.kind {
            TokenKind::IntegerLiteral
            | TokenKind::FloatLiteral
            | TokenKind::CharLiteral
            | TokenKind::StringLiteral
            | TokenKind::BooleanLiteral
            | TokenKind::NullLiteral => {
                self.pos += 1;
                let kind = match t.kind {
                    TokenKind::IntegerLiteral => LiteralKind::Integer,
                    TokenKind::FloatLiteral => LiteralKind::Float,
                    TokenKind::CharLiteral => LiteralKind::Char,
                    TokenKind::StringLiteral => LiteralKind::String,
                    TokenKind::BooleanLiteral => LiteralKind::Boolean,
                    _ => LiteralKind::Null,
                };
                Ok(Expr::Literal { kind, text: t.text })
            }
            TokenKind::Identifier => {
                self.pos += 1;
                if self.at("(") {
                    let args = self.args()?;
                    return Ok(Expr::Call {
                        target: None,
                        name: t.text,
                        args,
                        pos: start,
                    });
                }
                // Array type in expression position: `String[].class`, `int[][]::new`.
                if self.at("[") && self.peek_is(1, "]") {
                    self.pos = start;
                    let ty = self.parse_type()?;
                    return self.type_suffix(ty);
                }
                // Generic type before a method reference: `List<String>::new`.
                if self.at("<") {
                    let saved = self.pos;
                    self.pos = start;
                    if let Some(ty) = self.attempt(|p| {
                        let ty = p.parse_type()?;
                        if p.at("::") {
                            Ok(ty)
                        } else {
                            p.error("not a type")
                        }
                    }) {
                        return self.type_suffix(ty);
                    }
                    self.pos = saved;
                }
                Ok(Expr::Name(t.text))
            }
            TokenKind::Keyword => match t.text.as_str() {
                "this" => {
                    self.pos += 1;
                    if self.at("(") {
                        let args = self.args()?;
                        return Ok(Expr::ConstructorCall {
                            is_super: false,
                            args,
                        });
                    }
                    Ok(Expr::This)
                }
                "super" => {
                    self.pos += 1;
                    if self.at("(") {
                        let args = self.args()?;
                        return Ok(Expr::ConstructorCall {
                            is_super: true,
                            args,
                        });
                    }
                    Ok(Expr::Super)
                }
                "new" => self.creation(None),
                "switch" => {
                    self.pos += 1;
                    let selector = self.paren_expr()?;
                    let cases = self.switch_body()?;
                    Ok(Expr::Switch {
                        selector: Box::new(selector),
                        cases,
                    })
                }
                p if PRIMITIVES.contains(&p) => {
                    let ty = self.parse_type()?;
                    self.type_suffix(ty)
                }
                _ => self.error("unexpected keyword in expression"),
            },
            TokenKind::Separator if t.text == "(" => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            _ => self.error("expected expression"),
        }
    }

    /// `T.class` or `T::name` after a type in expression position.
    fn type_suffix(&mut self, ty: TypeRef) -> PResult<Expr> {
        if self.at(".") && self.peek_is(1, "class") {
            self.pos += 2;
            return Ok(Expr::ClassLit(ty));
        }
        if self.eat("::") {
            let name = if self.eat("new") {
                "new".to_string()
            } else {
                self.ident()?
            };
            return Ok(Expr::MethodRef {
                target: None,
                ty: Some(ty),
                name,
            });
        }
        self.error("expected `.class` or `::` after type")
    }

    fn creation(&mut self, outer: Option<Box<Expr>>) -> PResult<Expr> {
        self.expect("new")?;
        if self.at("<") {
            self.type_args()?;
        }
        while self.at("@") {
            self.skip_annotation()?;
        }
        // Element type without dimensions; dimensions are parsed below.
        let mut ty = {
            let t = match self.peek() {
                Some(t) => t.clone(),
                None => return self.error("expected type after `new`"),
            };
            if t.kind == TokenKind::Keyword && PRIMITIVES.contains(&t.text.as_str()) {
                self.pos += 1;
                TypeRef {
                    name: t.text,
                    args: Vec::new(),
                    dims: 0,
                    primitive: true,
                }
            } else {
                let mut name = self.ident()?;
                let mut args = Vec::new();
                loop {
                    if self.at("<") {
                        args = self.type_args()?;
                    }
                    if self.at(".")
                        && self
                            .peek_at(1)
                            .is_some_and(|t| t.kind == TokenKind::Identifier)
                    {
                        self.pos += 1;
                        name.push('.');
                        name.push_str(&self.ident()?);
                    } else {
                        break;
                    }
                }
                TypeRef {
                    name,
                    args,
                    dims: 0,
                    primitive: false,
                }
            }
        };
        if self.at("[") {
            let mut dims = Vec::new();
            while self.eat("[") {
                if self.eat("]") {
                    ty.dims += 1;
                } else {
                    dims.push(self.expr()?);
                    self.expect("]")?;
                    ty.dims += 1;
                }
            }
            let init = if self.at("{") {
                match self.array_init()? {
                    Expr::ArrayInit(items) => Some(items),
                    _ => unreachable!(),
                }
            } else {
                None
            };
            return Ok(Expr::NewArray { ty, dims, init });
        }
        let args = self.args()?;
        let anonymous_body = self.at("{");
        if anonymous_body {
            self.skip_balanced("{", "}")?;
        }
        Ok(Expr::New {
            outer,
            ty,
            args,
            anonymous_body,
        })
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            if self.at(".") {
                self.pos += 1;
                if self.at("<") {
                    self.type_args()?;
                }
                let t = match self.peek() {
                    Some(t) => t.clone(),
                    None => return self.error("expected member after `.`"),
                };
                let pos = self.pos;
                match (t.kind, t.text.as_str()) {
                    (TokenKind::Identifier, _) => {
                        self.pos += 1;
                        if self.at("(") {
                            let args = self.args()?;
                            e = Expr::Call {
                                target: Some(Box::new(e)),
                                name: t.text,
                                args,
                                pos,
                            };
                        } else {
                            e = Expr::FieldAccess {
                                target: Box::new(e),
                                name: t.text,
                                pos,
                            };
                        }
                    }
                    (TokenKind::Keyword, "new") => {
                        e = self.creation(Some(Box::new(e)))?;
                    }
                    (TokenKind::Keyword, "class") => {
                        self.pos += 1;
                        e = Expr::ClassLit(TypeRef {
                            name: expr_dotted_name(&e).unwrap_or_default(),
                            args: Vec::new(),
                            dims: 0,
                            primitive: false,
                        });
                    }
                    (TokenKind::Keyword, "this") => {
                        // Qualified `Outer.this`.
                        self.pos += 1;
                        e = Expr::This;
                    }
                    (TokenKind::Keyword, "super") => {
                        self.pos += 1;
                        if self.at("(") {
                            let args = self.args()?;
                            e = Expr::ConstructorCall {
                                is_super: true,
                                args,
                            };
                        } else {
                            e = Expr::Super;
                        }
                    }
                    _ => return self.error("expected member after `.`"),
                }
            } else if self.at("[") {
                let pos = self.pos;
                self.pos += 1;
                let index = self.expr()?;
                self.expect("]")?;
                e = Expr::Index {
                    array: Box::new(e),
                    index: Box::new(index),
                    pos,
                };
            } else if self.at("::") {
                self.pos += 1;
                let name = if self.eat("new") {
                    "new".to_string()
                } else {
                    self.ident()?
                };
                e = Expr::MethodRef {
                    target: Some(Box::new(e)),
                    ty: None,
                    name,
                };
            } else {
                return Ok(e);
            }
        }
    }
}

fn expr_dotted_name(e: &Expr) -> Option<String> {
    match e {
        Expr::Name(n) => Some(n.clone()),
        Expr::FieldAccess { target, name, .. } => {
            Some(format!("{}.{}", expr_dotted_name(target)?, name))
        }
        _ => None,
    }
}

/// Parses `source` as a single method or constructor declaration.
pub fn parse_method_decl(source: &str) -> Result<MethodDecl, ParseError> {
    Parser::new(source)?.parse_method()
}
