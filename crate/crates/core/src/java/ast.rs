//! Syntax tree for a single Java method declaration.
//!
//! The tree covers the statement and expression grammar of method bodies.
//! Anonymous and local class bodies are recorded as opaque nodes; their
//! members are extracted as methods of their own.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiteralKind {
    Integer,
    Float,
    Char,
    String,
    Boolean,
    Null,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeRef {
    /// Dotted name as written, without type arguments.
    pub name: String,
    pub args: Vec<TypeRef>,
    pub dims: usize,
    pub primitive: bool,
}

impl TypeRef {
    pub fn simple_name(&self) -> &str {
        self.name.rsplit('.').next().unwrap_or(&self.name)
    }

    pub fn is_var(&self) -> bool {
        self.name == "var" && self.args.is_empty()
    }

    /// All non-primitive class names mentioned by this type, including type arguments.
    pub fn class_names(&self, out: &mut Vec<String>) {
        if !self.primitive && !self.is_var() && self.name != "?" {
            out.push(self.simple_name().to_string());
        }
        for a in &self.args {
            a.class_names(out);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub ty: TypeRef,
    pub varargs: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodDecl {
    pub name: String,
    pub is_constructor: bool,
    pub return_type: Option<TypeRef>,
    pub params: Vec<Param>,
    pub throws: Vec<TypeRef>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarDeclarator {
    pub name: String,
    pub init: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchCase {
    /// Empty for `default`.
    pub labels: Vec<Expr>,
    pub is_default: bool,
    pub binding: Option<String>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatchClause {
    pub types: Vec<TypeRef>,
    pub name: String,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Stmt {
    Block(Vec<Stmt>),
    LocalVar {
        ty: TypeRef,
        vars: Vec<VarDeclarator>,
    },
    LocalClass,
    Expr(Expr),
    If {
        cond: Expr,
        then: Box<Stmt>,
        otherwise: Option<Box<Stmt>>,
    },
    While {
        cond: Expr,
        body: Box<Stmt>,
    },
    Do {
        body: Box<Stmt>,
        cond: Expr,
    },
    For {
        init: Vec<Stmt>,
        cond: Option<Expr>,
        update: Vec<Expr>,
        body: Box<Stmt>,
    },
    ForEach {
        ty: TypeRef,
        name: String,
        iterable: Expr,
        body: Box<Stmt>,
    },
    Switch {
        selector: Expr,
        cases: Vec<SwitchCase>,
    },
    Try {
        resources: Vec<Stmt>,
        body: Vec<Stmt>,
        catches: Vec<CatchClause>,
        finally: Option<Vec<Stmt>>,
    },
    Return(Option<Expr>),
    Throw(Expr),
    Break(Option<String>),
    Continue(Option<String>),
    Yield(Expr),
    Synchronized {
        lock: Expr,
        body: Vec<Stmt>,
    },
    Assert {
        cond: Expr,
        message: Option<Expr>,
    },
    Labeled {
        label: String,
        body: Box<Stmt>,
    },
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LambdaBody {
    Expr(Box<Expr>),
    Block(Vec<Stmt>),
}

/// `pos` fields hold the index of the significant token within the method,
/// which orders events by their position in the source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Name(String),
    Literal {
        kind: LiteralKind,
        text: String,
    },
    This,
    Super,
    FieldAccess {
        target: Box<Expr>,
        name: String,
        pos: usize,
    },
    Call {
        target: Option<Box<Expr>>,
        name: String,
        args: Vec<Expr>,
        pos: usize,
    },
    /// `this(...)` or `super(...)` inside a constructor.
    ConstructorCall {
        is_super: bool,
        args: Vec<Expr>,
    },
    New {
        outer: Option<Box<Expr>>,
        ty: TypeRef,
        args: Vec<Expr>,
        anonymous_body: bool,
    },
    NewArray {
        ty: TypeRef,
        dims: Vec<Expr>,
        init: Option<Vec<Expr>>,
    },
    ArrayInit(Vec<Expr>),
    Index {
        array: Box<Expr>,
        index: Box<Expr>,
        pos: usize,
    },
    Unary {
        op: String,
        operand: Box<Expr>,
        postfix: bool,
    },
    Binary {
        op: String,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Assign {
        op: String,
        target: Box<Expr>,
        value: Box<Expr>,
    },
    Conditional {
        cond: Box<Expr>,
        then: Box<Expr>,
        otherwise: Box<Expr>,
    },
    Cast {
        ty: TypeRef,
        expr: Box<Expr>,
    },
    InstanceOf {
        expr: Box<Expr>,
        ty: TypeRef,
        binding: Option<String>,
    },
    Lambda {
        params: Vec<String>,
        body: LambdaBody,
    },
    MethodRef {
        target: Option<Box<Expr>>,
        ty: Option<TypeRef>,
        name: String,
    },
    ClassLit(TypeRef),
    Switch {
        selector: Box<Expr>,
        cases: Vec<SwitchCase>,
    },
}

impl Expr {
    /// Calls `f` on every direct child expression, in source order.
    pub fn for_each_child<'a>(&'a self, mut f: impl FnMut(&'a Expr)) {
        match self {
            Expr::Name(_) | Expr::Literal { .. } | Expr::This | Expr::Super | Expr::ClassLit(_) => {
            }
            Expr::FieldAccess { target, .. } => f(target),
            Expr::Call { target, args, .. } => {
                if let Some(t) = target {
                    f(t);
                }
                args.iter().for_each(f);
            }
            Expr::ConstructorCall { args, .. } => args.iter().for_each(f),
            Expr::New { outer, args, .. } => {
                if let Some(o) = outer {
                    f(o);
                }
                args.iter().for_each(f);
            }
            Expr::NewArray { dims, init, .. } => {
                dims.iter().for_each(&mut f);
                if let Some(i) = init {
                    i.iter().for_each(f);
                }
            }
            Expr::ArrayInit(items) => items.iter().for_each(f),
            Expr::Index { array, index, .. } => {
                f(array);
                f(index);
            }
            Expr::Unary { operand, .. } => f(operand),
            Expr::Binary { lhs, rhs, .. } => {
                f(lhs);
                f(rhs);
            }
            Expr::Assign { target, value, .. } => {
                f(target);
                f(value);
            }
            Expr::Conditional {
                cond,
                then,
                otherwise,
            } => {
                f(cond);
                f(then);
                f(otherwise);
            }
            Expr::Cast { expr, .. } | Expr::InstanceOf { expr, .. } => f(expr),
            Expr::Lambda { body, .. } => {
                if let LambdaBody::Expr(e) = body {
                    f(e);
                }
            }
            Expr::MethodRef { target, .. } => {
                if let Some(t) = target {
                    f(t);
                }
            }
            Expr::Switch { selector, .. } => f(selector),
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(
            self,
            Expr::Name(_) | Expr::Literal { .. } | Expr::This | Expr::Super | Expr::ClassLit(_)
        )
    }

    pub fn contains_binary(&self) -> bool {
        if matches!(self, Expr::Binary { .. }) {
            return true;
        }
        let mut found = false;
        self.for_each_child(|c| found |= c.contains_binary());
        found
    }
}
