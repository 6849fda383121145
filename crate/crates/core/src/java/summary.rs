//! Per-method facts consumed by the metrics and Action-token modules.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::parser::{parse_method_decl, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Receiver {
    /// No receiver, `this.` or `super.`.
    Local,
    External,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallSite {
    pub name: String,
    pub arg_count: usize,
    pub receiver: Receiver,
    pub pos: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldAccess {
    pub name: String,
    pub pos: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrayAccessKind {
    SimpleIndex,
    BinaryIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayAccess {
    pub kind: ArrayAccessKind,
    pub pos: usize,
}

/// Halstead operand classes. Operands are distinct only within a class, so
/// renaming a local never collides with a member of the same name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperandRole {
    Variable,
    Member,
    Type,
    Keyword,
    IntegerLiteral,
    FloatLiteral,
    CharLiteral,
    StringLiteral,
    BooleanLiteral,
    NullLiteral,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Operand {
    pub role: OperandRole,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub name: String,
    pub is_constructor: bool,
    pub parameters: Vec<Param>,
    pub statements: Vec<Stmt>,
    /// Halstead operator occurrences in the body.
    pub operators: Vec<String>,
    /// Halstead operand occurrences in the body.
    pub operands: Vec<Operand>,
    /// Composite (non-leaf) expression nodes in the body.
    pub expression_count: usize,
    pub call_sites: Vec<CallSite>,
    pub field_accesses: Vec<FieldAccess>,
    pub array_accesses: Vec<ArrayAccess>,
    pub declared_variables: Vec<String>,
    /// Occurrences of simple names used as variables (locals, parameters, fields).
    pub referenced_variables: Vec<String>,
    pub referenced_classes: BTreeSet<String>,
    pub thrown_exception_types: BTreeSet<String>,
    pub referenced_exception_types: BTreeSet<String>,
    /// Target type of each cast, in order.
    pub casts: Vec<String>,
    pub literals: Vec<LiteralKind>,
}

/// Parses a method's source text and summarizes it.
pub fn parse_method(source: &str) -> Result<MethodSummary, ParseError> {
    Ok(summarize(&parse_method_decl(source)?))
}

/// A simple name that reads as a type rather than a variable:
/// an upper-case initial followed by at least one lower-case letter.
fn is_class_like(name: &str) -> bool {
    name.chars().next().is_some_and(char::is_uppercase) && name.chars().any(char::is_lowercase)
}

pub fn summarize(decl: &MethodDecl) -> MethodSummary {
    let mut declared = Vec::new();
    for s in &decl.body {
        collect_decls_stmt(s, &mut declared);
    }
    let mut w = Walker {
        known_vars: decl
            .params
            .iter()
            .map(|p| p.name.clone())
            .chain(declared.iter().cloned())
            .collect(),
        s: MethodSummary {
            name: decl.name.clone(),
            is_constructor: decl.is_constructor,
            parameters: decl.params.clone(),
            statements: decl.body.clone(),
            operators: Vec::new(),
            operands: Vec::new(),
            expression_count: 0,
            call_sites: Vec::new(),
            field_accesses: Vec::new(),
            array_accesses: Vec::new(),
            declared_variables: declared,
            referenced_variables: Vec::new(),
            referenced_classes: BTreeSet::new(),
            thrown_exception_types: BTreeSet::new(),
            referenced_exception_types: BTreeSet::new(),
            casts: Vec::new(),
            literals: Vec::new(),
        },
    };
    for p in &decl.params {
        w.add_type(&p.ty);
    }
    if let Some(rt) = &decl.return_type {
        w.add_type(rt);
    }
    for t in &decl.throws {
        w.add_type(t);
        w.s.thrown_exception_types
            .insert(t.simple_name().to_string());
        w.s.referenced_exception_types
            .insert(t.simple_name().to_string());
    }
    for st in &decl.body {
        w.stmt(st);
    }
    w.s.call_sites.sort_by_key(|c| c.pos);
    w.s.field_accesses.sort_by_key(|f| f.pos);
    w.s.array_accesses.sort_by_key(|a| a.pos);
    w.s
}

fn collect_decls_stmt(s: &Stmt, out: &mut Vec<String>) {
    match s {
        Stmt::Block(b) => b.iter().for_each(|s| collect_decls_stmt(s, out)),
        Stmt::LocalVar { vars, .. } => {
            for v in vars {
                out.push(v.name.clone());
                if let Some(i) = &v.init {
                    collect_decls_expr(i, out);
                }
            }
        }
        Stmt::LocalClass | Stmt::Empty | Stmt::Break(_) | Stmt::Continue(_) => {}
        Stmt::Expr(e) | Stmt::Throw(e) | Stmt::Yield(e) => collect_decls_expr(e, out),
        Stmt::Return(e) => {
            if let Some(e) = e {
                collect_decls_expr(e, out);
            }
        }
        Stmt::If {
            cond,
            then,
            otherwise,
        } => {
            collect_decls_expr(cond, out);
            collect_decls_stmt(then, out);
            if let Some(o) = otherwise {
                collect_decls_stmt(o, out);
            }
        }
        Stmt::While { cond, body } | Stmt::Do { body, cond } => {
            collect_decls_expr(cond, out);
            collect_decls_stmt(body, out);
        }
        Stmt::For {
            init,
            cond,
            update,
            body,
        } => {
            init.iter().for_each(|s| collect_decls_stmt(s, out));
            if let Some(c) = cond {
                collect_decls_expr(c, out);
            }
            update.iter().for_each(|e| collect_decls_expr(e, out));
            collect_decls_stmt(body, out);
        }
        Stmt::ForEach {
            name,
            iterable,
            body,
            ..
        } => {
            out.push(name.clone());
            collect_decls_expr(iterable, out);
            collect_decls_stmt(body, out);
        }
        Stmt::Switch { selector, cases } => {
            collect_decls_expr(selector, out);
            collect_decls_cases(cases, out);
        }
        Stmt::Try {
            resources,
            body,
            catches,
            finally,
        } => {
            resources.iter().for_each(|s| collect_decls_stmt(s, out));
            body.iter().for_each(|s| collect_decls_stmt(s, out));
            for c in catches {
                out.push(c.name.clone());
                c.body.iter().for_each(|s| collect_decls_stmt(s, out));
            }
            if let Some(f) = finally {
                f.iter().for_each(|s| collect_decls_stmt(s, out));
            }
        }
        Stmt::Synchronized { lock, body } => {
            collect_decls_expr(lock, out);
            body.iter().for_each(|s| collect_decls_stmt(s, out));
        }
        Stmt::Assert { cond, message } => {
            collect_decls_expr(cond, out);
            if let Some(m) = message {
                collect_decls_expr(m, out);
            }
        }
        Stmt::Labeled { body, .. } => collect_decls_stmt(body, out),
    }
}

fn collect_decls_cases(cases: &[SwitchCase], out: &mut Vec<String>) {
    for c in cases {
        if let Some(b) = &c.binding {
            out.push(b.clone());
        }
        c.body.iter().for_each(|s| collect_decls_stmt(s, out));
    }
}

fn collect_decls_expr(e: &Expr, out: &mut Vec<String>) {
    match e {
        Expr::Lambda { params, body } => {
            out.extend(params.iter().cloned());
            if let LambdaBody::Block(stmts) = body {
                stmts.iter().for_each(|s| collect_decls_stmt(s, out));
            }
        }
        Expr::InstanceOf {
            binding: Some(b), ..
        } => out.push(b.clone()),
        Expr::Switch { cases, .. } => collect_decls_cases(cases, out),
        _ => {}
    }
    e.for_each_child(|c| collect_decls_expr(c, out));
}

struct Walker {
    known_vars: HashSet<String>,
    s: MethodSummary,
}

impl Walker {
    fn op(&mut self, op: &str) {
        self.s.operators.push(op.to_string());
    }

    fn operand(&mut self, role: OperandRole, text: &str) {
        self.s.operands.push(Operand {
            role,
            text: text.to_string(),
        });
    }

    fn add_type(&mut self, ty: &TypeRef) {
        let mut names = Vec::new();
        ty.class_names(&mut names);
        self.s.referenced_classes.extend(names);
    }

    fn stmts(&mut self, stmts: &[Stmt]) {
        for s in stmts {
            self.stmt(s);
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match s {
            Stmt::Block(b) => self.stmts(b),
            Stmt::LocalVar { ty, vars } => {
                self.add_type(ty);
                for v in vars {
                    self.operand(OperandRole::Variable, &v.name);
                    if let Some(init) = &v.init {
                        self.op("=");
                        self.expr(init);
                    }
                }
            }
            Stmt::LocalClass | Stmt::Empty => {}
            Stmt::Expr(e) => self.expr(e),
            Stmt::If {
                cond,
                then,
                otherwise,
            } => {
                self.op("if");
                self.expr(cond);
                self.stmt(then);
                if let Some(o) = otherwise {
                    self.op("else");
                    self.stmt(o);
                }
            }
            Stmt::While { cond, body } => {
                self.op("while");
                self.expr(cond);
                self.stmt(body);
            }
            Stmt::Do { body, cond } => {
                self.op("do");
                self.stmt(body);
                self.expr(cond);
            }
            Stmt::For {
                init,
                cond,
                update,
                body,
            } => {
                self.op("for");
                self.stmts(init);
                if let Some(c) = cond {
                    self.expr(c);
                }
                for u in update {
                    self.expr(u);
                }
                self.stmt(body);
            }
            Stmt::ForEach {
                ty,
                name,
                iterable,
                body,
            } => {
                self.op("for");
                self.add_type(ty);
                self.operand(OperandRole::Variable, name);
                self.expr(iterable);
                self.stmt(body);
            }
            Stmt::Switch { selector, cases } => {
                self.op("switch");
                self.expr(selector);
                self.cases(cases);
            }
            Stmt::Try {
                resources,
                body,
                catches,
                finally,
            } => {
                self.op("try");
                self.stmts(resources);
                self.stmts(body);
                for c in catches {
                    self.op("catch");
                    for t in &c.types {
                        self.add_type(t);
                        self.s
                            .referenced_exception_types
                            .insert(t.simple_name().to_string());
                    }
                    self.operand(OperandRole::Variable, &c.name);
                    self.stmts(&c.body);
                }
                if let Some(f) = finally {
                    self.op("finally");
                    self.stmts(f);
                }
            }
            Stmt::Return(e) => {
                self.op("return");
                if let Some(e) = e {
                    self.expr(e);
                }
            }
            Stmt::Throw(e) => {
                self.op("throw");
                if let Expr::New { ty, .. } = e {
                    self.s
                        .thrown_exception_types
                        .insert(ty.simple_name().to_string());
                }
                self.expr(e);
            }
            Stmt::Break(_) => self.op("break"),
            Stmt::Continue(_) => self.op("continue"),
            Stmt::Yield(e) => {
                self.op("yield");
                self.expr(e);
            }
            Stmt::Synchronized { lock, body } => {
                self.op("synchronized");
                self.expr(lock);
                self.stmts(body);
            }
            Stmt::Assert { cond, message } => {
                self.op("assert");
                self.expr(cond);
                if let Some(m) = message {
                    self.expr(m);
                }
            }
            Stmt::Labeled { body, .. } => self.stmt(body),
        }
    }

    fn cases(&mut self, cases: &[SwitchCase]) {
        for c in cases {
            if c.is_default {
                self.op("default");
            }
            for l in &c.labels {
                self.op("case");
                match l {
                    Expr::ClassLit(ty) => self.add_type(ty),
                    other => self.expr(other),
                }
            }
            if let Some(b) = &c.binding {
                self.operand(OperandRole::Variable, b);
            }
            self.stmts(&c.body);
        }
    }

    fn expr(&mut self, e: &Expr) {
        if !e.is_leaf() {
            self.s.expression_count += 1;
        }
        match e {
            Expr::Name(n) => {
                if self.known_vars.contains(n) || !is_class_like(n) {
                    self.s.referenced_variables.push(n.clone());
                    self.operand(OperandRole::Variable, n);
                } else {
                    self.s.referenced_classes.insert(n.clone());
                    self.operand(OperandRole::Type, n);
                }
            }
            Expr::Literal { kind, text } => {
                self.s.literals.push(*kind);
                let role = match kind {
                    LiteralKind::Integer => OperandRole::IntegerLiteral,
                    LiteralKind::Float => OperandRole::FloatLiteral,
                    LiteralKind::Char => OperandRole::CharLiteral,
                    LiteralKind::String => OperandRole::StringLiteral,
                    LiteralKind::Boolean => OperandRole::BooleanLiteral,
                    LiteralKind::Null => OperandRole::NullLiteral,
                };
                self.operand(role, text);
            }
            Expr::This => self.operand(OperandRole::Keyword, "this"),
            Expr::Super => self.operand(OperandRole::Keyword, "super"),
            Expr::FieldAccess { target, name, pos } => {
                self.expr(target);
                self.op(".");
                self.operand(OperandRole::Member, name);
                self.s.field_accesses.push(FieldAccess {
                    name: name.clone(),
                    pos: *pos,
                });
            }
            Expr::Call {
                target,
                name,
                args,
                pos,
            } => {
                let receiver = match target.as_deref() {
                    None | Some(Expr::This) | Some(Expr::Super) => Receiver::Local,
                    Some(_) => Receiver::External,
                };
                if let Some(t) = target {
                    self.expr(t);
                }
                self.op("()");
                self.operand(OperandRole::Member, name);
                self.s.call_sites.push(CallSite {
                    name: name.clone(),
                    arg_count: args.len(),
                    receiver,
                    pos: *pos,
                });
                for a in args {
                    self.expr(a);
                }
            }
            Expr::ConstructorCall { is_super, args } => {
                self.op(if *is_super { "super()" } else { "this()" });
                for a in args {
                    self.expr(a);
                }
            }
            Expr::New {
                outer, ty, args, ..
            } => {
                self.op("new");
                self.add_type(ty);
                if let Some(o) = outer {
                    self.expr(o);
                }
                for a in args {
                    self.expr(a);
                }
            }
            Expr::NewArray { ty, dims, init } => {
                self.op("new");
                self.add_type(ty);
                for d in dims {
                    self.expr(d);
                }
                if let Some(items) = init {
                    self.op("{}");
                    for i in items {
                        self.expr(i);
                    }
                }
            }
            Expr::ArrayInit(items) => {
                self.op("{}");
                for i in items {
                    self.expr(i);
                }
            }
            Expr::Index { array, index, pos } => {
                self.expr(array);
                self.op("[]");
                self.expr(index);
                let kind = if index.contains_binary() {
                    ArrayAccessKind::BinaryIndex
                } else {
                    ArrayAccessKind::SimpleIndex
                };
                self.s.array_accesses.push(ArrayAccess { kind, pos: *pos });
            }
            Expr::Unary { op, operand, .. } => {
                self.op(op);
                self.expr(operand);
            }
            Expr::Binary { op, lhs, rhs } => {
                self.expr(lhs);
                self.op(op);
                self.expr(rhs);
            }
            Expr::Assign { op, target, value } => {
                self.expr(target);
                self.op(op);
                self.expr(value);
            }
            Expr::Conditional {
                cond,
                then,
                otherwise,
            } => {
                self.expr(cond);
                self.op("?:");
                self.expr(then);
                self.expr(otherwise);
            }
            Expr::Cast { ty, expr } => {
                self.op("(cast)");
                self.add_type(ty);
                self.s.casts.push(ty.simple_name().to_string());
                self.expr(expr);
            }
            Expr::InstanceOf { expr, ty, binding } => {
                self.expr(expr);
                self.op("instanceof");
                self.add_type(ty);
                if let Some(b) = binding {
                    self.operand(OperandRole::Variable, b);
                }
            }
            Expr::Lambda { params, body } => {
                self.op("->");
                for p in params {
                    self.operand(OperandRole::Variable, p);
                }
                match body {
                    LambdaBody::Expr(e) => self.expr(e),
                    LambdaBody::Block(stmts) => self.stmts(stmts),
                }
            }
            Expr::MethodRef { target, ty, name } => {
                if let Some(t) = target {
                    self.expr(t);
                }
                if let Some(ty) = ty {
                    self.add_type(ty);
                }
                self.op("::");
                self.operand(OperandRole::Member, name);
            }
            Expr::ClassLit(ty) => {
                self.add_type(ty);
                self.operand(OperandRole::Type, &format!("{}.class", ty.name));
            }
            Expr::Switch { selector, cases } => {
                self.op("switch");
                self.expr(selector);
                self.cases(cases);
            }
        }
    }
}
