//! The 24 method-level metrics. Counting rules live in
//! `docs/metric-dictionary.md`; bump [`DICTIONARY_VERSION`] when they change.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::java::ast::{Expr, LambdaBody, LiteralKind, Stmt, SwitchCase};
use crate::java::summary::{MethodSummary, Receiver};

pub const DICTIONARY_VERSION: &str = "1";

pub const METRIC_COUNT: usize = 24;

pub const METRIC_NAMES: [&str; METRIC_COUNT] = [
    "XMET", "VREF", "VDEC", "NOS", "NOPR", "NOA", "NEXP", "NAND", "MDN", "LOOP", "LMET", "HVOC",
    "HEFF", "HDIF", "EXCT", "EXCR", "CREF", "COMP", "CAST", "NBLTRL", "NCLTRL", "NSLTRL", "NNLTRL",
    "NNULLTRL",
];

#[allow(clippy::upper_case_acronyms)]
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub struct MetricsVector {
    pub xmet: u32,
    pub vref: u32,
    pub vdec: u32,
    pub nos: u32,
    pub nopr: u32,
    pub noa: u32,
    pub nexp: u32,
    pub nand: u32,
    pub mdn: u32,
    pub loop_: u32,
    pub lmet: u32,
    pub hvoc: u32,
    pub heff: f64,
    pub hdif: f64,
    pub exct: u32,
    pub excr: u32,
    pub cref: u32,
    pub comp: u32,
    pub cast: u32,
    pub nbltrl: u32,
    pub ncltrl: u32,
    pub nsltrl: u32,
    pub nnltrl: u32,
    pub nnulltrl: u32,
}

impl MetricsVector {
    /// Values in table order (see [`METRIC_NAMES`]).
    pub fn to_array(&self) -> [f64; METRIC_COUNT] {
        [
            self.xmet.into(),
            self.vref.into(),
            self.vdec.into(),
            self.nos.into(),
            self.nopr.into(),
            self.noa.into(),
            self.nexp.into(),
            self.nand.into(),
            self.mdn.into(),
            self.loop_.into(),
            self.lmet.into(),
            self.hvoc.into(),
            self.heff,
            self.hdif,
            self.exct.into(),
            self.excr.into(),
            self.cref.into(),
            self.comp.into(),
            self.cast.into(),
            self.nbltrl.into(),
            self.ncltrl.into(),
            self.nsltrl.into(),
            self.nnltrl.into(),
            self.nnulltrl.into(),
        ]
    }
}

/// Exact equality on all 24 fields. The two Halstead ratios are computed
/// deterministically from integer counts, so bitwise comparison is sound.
pub fn metrics_equal(a: &MetricsVector, b: &MetricsVector) -> bool {
    a.to_array()
        .iter()
        .zip(b.to_array().iter())
        .all(|(x, y)| x.to_bits() == y.to_bits())
}

fn count(n: usize) -> u32 {
    u32::try_from(n).unwrap_or(u32::MAX)
}

pub fn compute_metrics(s: &MethodSummary) -> MetricsVector {
    let mut shape = Shape::default();
    shape.stmts(&s.statements, 0);

    let op_count = |names: &[&str]| {
        count(
            s.operators
                .iter()
                .filter(|o| names.contains(&o.as_str()))
                .count(),
        )
    };

    let n1 = s.operators.iter().collect::<HashSet<_>>().len();
    let n2 = s.operands.iter().collect::<HashSet<_>>().len();
    let big_n1 = s.operators.len();
    let big_n2 = s.operands.len();
    let hdif = if n2 == 0 {
        0.0
    } else {
        (n1 as f64 / 2.0) * (big_n2 as f64 / n2 as f64)
    };
    let vocabulary = n1 + n2;
    let volume = if vocabulary == 0 {
        0.0
    } else {
        (big_n1 + big_n2) as f64 * (vocabulary as f64).log2()
    };
    let heff = if n2 == 0 { 0.0 } else { hdif * volume };

    let lit = |k: LiteralKind| count(s.literals.iter().filter(|l| **l == k).count());
    let local_calls = s
        .call_sites
        .iter()
        .filter(|c| c.receiver == Receiver::Local)
        .count();

    MetricsVector {
        xmet: count(s.call_sites.len() - local_calls),
        vref: count(s.referenced_variables.len()),
        vdec: count(s.declared_variables.len()),
        nos: shape.statements,
        nopr: count(big_n1),
        noa: count(s.parameters.len()),
        nexp: count(s.expression_count),
        nand: count(big_n2),
        mdn: shape.max_depth,
        loop_: op_count(&["for", "while", "do"]),
        lmet: count(local_calls),
        hvoc: count(vocabulary),
        heff,
        hdif,
        exct: count(s.thrown_exception_types.len()),
        excr: count(s.referenced_exception_types.len()),
        cref: count(s.referenced_classes.len()),
        comp: 1 + op_count(&[
            "if", "for", "while", "do", "case", "catch", "&&", "||", "?:",
        ]),
        cast: count(s.casts.len()),
        nbltrl: lit(LiteralKind::Boolean),
        ncltrl: lit(LiteralKind::Char),
        nsltrl: lit(LiteralKind::String),
        nnltrl: lit(LiteralKind::Integer) + lit(LiteralKind::Float),
        nnulltrl: lit(LiteralKind::Null),
    }
}

/// Statement count and nesting depth.
#[derive(Default)]
struct Shape {
    statements: u32,
    max_depth: u32,
}

impl Shape {
    fn stmts(&mut self, stmts: &[Stmt], depth: u32) {
        for s in stmts {
            self.stmt(s, depth);
        }
    }

    fn nested(&mut self, depth: u32) -> u32 {
        let d = depth + 1;
        self.max_depth = self.max_depth.max(d);
        d
    }

    fn stmt(&mut self, s: &Stmt, depth: u32) {
        match s {
            Stmt::Block(b) => return self.stmts(b, depth),
            Stmt::Empty => return,
            Stmt::Labeled { body, .. } => return self.stmt(body, depth),
            _ => {}
        }
        self.statements += 1;
        match s {
            Stmt::Block(_) | Stmt::Empty | Stmt::Labeled { .. } | Stmt::LocalClass => {}
            Stmt::Break(_) | Stmt::Continue(_) => {}
            Stmt::LocalVar { vars, .. } => {
                for v in vars.iter().filter_map(|v| v.init.as_ref()) {
                    self.expr(v, depth);
                }
            }
            Stmt::Expr(e) | Stmt::Throw(e) | Stmt::Yield(e) => self.expr(e, depth),
            Stmt::Return(e) => {
                if let Some(e) = e {
                    self.expr(e, depth);
                }
            }
            Stmt::Assert { cond, message } => {
                self.expr(cond, depth);
                if let Some(m) = message {
                    self.expr(m, depth);
                }
            }
            Stmt::If { .. } => self.if_chain(s, depth),
            Stmt::While { cond, body } | Stmt::Do { body, cond } => {
                self.expr(cond, depth);
                let d = self.nested(depth);
                self.stmt(body, d);
            }
            Stmt::For {
                init,
                cond,
                update,
                body,
            } => {
                self.header(init, depth);
                if let Some(c) = cond {
                    self.expr(c, depth);
                }
                for u in update {
                    self.expr(u, depth);
                }
                let d = self.nested(depth);
                self.stmt(body, d);
            }
            Stmt::ForEach { iterable, body, .. } => {
                self.expr(iterable, depth);
                let d = self.nested(depth);
                self.stmt(body, d);
            }
            Stmt::Switch { selector, cases } => {
                self.expr(selector, depth);
                self.cases(cases, depth);
            }
            Stmt::Try {
                resources,
                body,
                catches,
                finally,
            } => {
                self.header(resources, depth);
                let d = self.nested(depth);
                self.stmts(body, d);
                for c in catches {
                    self.stmts(&c.body, d);
                }
                if let Some(f) = finally {
                    self.stmts(f, d);
                }
            }
            Stmt::Synchronized { lock, body } => {
                self.expr(lock, depth);
                let d = self.nested(depth);
                self.stmts(body, d);
            }
        }
    }

    /// `if / else if / else` chains nest their branches one level deep.
    fn if_chain(&mut self, s: &Stmt, depth: u32) {
        let Stmt::If {
            cond,
            then,
            otherwise,
        } = s
        else {
            return self.stmt(s, depth);
        };
        self.expr(cond, depth);
        let d = self.nested(depth);
        self.stmt(then, d);
        match otherwise.as_deref() {
            Some(next @ Stmt::If { .. }) => {
                self.statements += 1;
                self.if_chain(next, depth);
            }
            Some(other) => self.stmt(other, d),
            None => {}
        }
    }

    /// Loop and resource headers: expressions only, not counted as statements.
    fn header(&mut self, stmts: &[Stmt], depth: u32) {
        for s in stmts {
            match s {
                Stmt::LocalVar { vars, .. } => {
                    for e in vars.iter().filter_map(|v| v.init.as_ref()) {
                        self.expr(e, depth);
                    }
                }
                Stmt::Expr(e) => self.expr(e, depth),
                other => self.stmt(other, depth),
            }
        }
    }

    fn cases(&mut self, cases: &[SwitchCase], depth: u32) {
        let d = self.nested(depth);
        for c in cases {
            self.stmts(&c.body, d);
        }
    }

    /// Statements hidden inside expressions: lambda blocks and switch expressions.
    fn expr(&mut self, e: &Expr, depth: u32) {
        match e {
            Expr::Lambda {
                body: LambdaBody::Block(stmts),
                ..
            } => {
                let d = self.nested(depth);
                self.stmts(stmts, d);
            }
            Expr::Switch { cases, .. } => self.cases(cases, depth),
            _ => {}
        }
        e.for_each_child(|c| self.expr(c, depth));
    }
}
