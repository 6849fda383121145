//! Everything the resolvers need to know about one method, computed once.

use std::collections::HashMap;

use sha2::{Digest, Sha256};

use crate::action::{extract_action_tokens, ActionTokenSequence};
use crate::corpus::{CorpusIndex, MethodRecord};
use crate::java::lexer::{lex, TokenKind};
use crate::java::{normalize_layout, parse_method, strip_comments};
use crate::key::Endpoint;
use crate::metrics::{compute_metrics, MetricsVector};

/// SHA-256 of the method text with comments and all whitespace removed.
pub fn type1_digest(source: &str) -> Result<[u8; 32], String> {
    let stripped = strip_comments(source).map_err(|e| e.to_string())?;
    Ok(Sha256::digest(normalize_layout(&stripped).as_bytes()).into())
}

/// Language tokens with identifiers blinded and literals reduced to their kind.
pub fn syntax_tokens(source: &str) -> Result<ActionTokenSequence, String> {
    let tokens = lex(source).map_err(|e| e.to_string())?;
    Ok(ActionTokenSequence::from_tokens(
        tokens
            .iter()
            .filter(|t| !t.kind.is_trivia())
            .map(|t| match t.kind {
                TokenKind::Identifier => "<id>".to_string(),
                TokenKind::IntegerLiteral | TokenKind::FloatLiteral => "<num>".to_string(),
                TokenKind::CharLiteral => "<char>".to_string(),
                TokenKind::StringLiteral => "<str>".to_string(),
                TokenKind::BooleanLiteral => "<bool>".to_string(),
                TokenKind::NullLiteral => "<null>".to_string(),
                _ => t.lexeme.clone(),
            }),
    ))
}

#[derive(Debug, Clone)]
pub struct Parsed {
    pub actions: ActionTokenSequence,
    pub metrics: MetricsVector,
}

#[derive(Debug, Clone)]
pub struct MethodFacts {
    pub record: MethodRecord,
    pub digest: Result<[u8; 32], String>,
    pub parsed: Result<Parsed, String>,
    pub syntax: Result<ActionTokenSequence, String>,
}

impl MethodFacts {
    pub fn new(record: MethodRecord) -> Self {
        let digest = type1_digest(&record.source);
        let parsed = parse_method(&record.source)
            .map(|s| Parsed {
                actions: extract_action_tokens(&s),
                metrics: compute_metrics(&s),
            })
            .map_err(|e| e.to_string());
        let syntax = syntax_tokens(&record.source);
        Self {
            record,
            digest,
            parsed,
            syntax,
        }
    }

    pub fn endpoint(&self) -> Endpoint {
        self.record.endpoint()
    }
}

/// Facts for every method in a corpus, keyed by span.
pub fn analyze_corpus(index: &CorpusIndex) -> HashMap<Endpoint, MethodFacts> {
    use rayon::prelude::*;
    let records: Vec<MethodRecord> = index.methods().cloned().collect();
    records
        .into_par_iter()
        .map(|r| (r.endpoint(), MethodFacts::new(r)))
        .collect()
}
