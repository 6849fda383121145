//! Java front end: lexing, normalization, method extraction and method-body
//! summaries.

pub mod ast;
pub mod extract;
pub mod lexer;
pub mod normalize;
pub mod parser;
pub mod summary;

pub use extract::{find_methods, ExtractError, MethodSpan};
pub use lexer::{lex, LexError, Token, TokenKind};
pub use normalize::{normalize_layout, strip_comments};
pub use parser::ParseError;
pub use summary::{parse_method, MethodSummary};
