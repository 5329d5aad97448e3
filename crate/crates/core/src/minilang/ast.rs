use std::fmt;

use serde::{Deserialize, Serialize};

/// Built-in statement that captures a heap snapshot.
pub const BUILTIN_SNAPSHOT: &str = "snapshot";
/// Built-in expression returning the `i`-th invocation argument.
pub const BUILTIN_ARG: &str = "arg";
/// Built-in expression returning the number of invocation arguments.
pub const BUILTIN_ARGC: &str = "argc";

/// Arity of a built-in call, or `None` if `name` is not a built-in.
pub fn builtin_arity(name: &str) -> Option<usize> {
    match name {
        BUILTIN_SNAPSHOT | BUILTIN_ARGC => Some(0),
        BUILTIN_ARG => Some(1),
        _ => None,
    }
}

/// Globals are spelled with a leading `@`; everything else is function-local.
pub fn is_global(name: &str) -> bool {
    name.starts_with('@')
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Program {
    pub functions: Vec<Function>,
}

impl Program {
    pub fn function(&self, name: &str) -> Option<&Function> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn function_mut(&mut self, name: &str) -> Option<&mut Function> {
        self.functions.iter_mut().find(|f| f.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Function {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
}

impl Function {
    pub fn new(name: impl Into<String>, params: Vec<String>, body: Vec<Stmt>) -> Self {
        Function {
            name: name.into(),
            params,
            body,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Left,
    Right,
    Data,
}

impl Field {
    pub fn as_str(self) -> &'static str {
        match self {
            Field::Left => "left",
            Field::Right => "right",
            Field::Data => "data",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Assign { var: String, value: Expr },
    /// `var = node();`
    Alloc { var: String },
    FieldStore { var: String, field: Field, value: Expr },
    If { cond: Expr, then_body: Vec<Stmt>, else_body: Vec<Stmt> },
    While { cond: Expr, body: Vec<Stmt> },
    Call { name: String, args: Vec<Expr> },
    Return(Expr),
    Print(Expr),
}

impl Stmt {
    pub fn assign(var: impl Into<String>, value: Expr) -> Self {
        Stmt::Assign {
            var: var.into(),
            value,
        }
    }

    pub fn alloc(var: impl Into<String>) -> Self {
        Stmt::Alloc { var: var.into() }
    }

    pub fn store(var: impl Into<String>, field: Field, value: Expr) -> Self {
        Stmt::FieldStore {
            var: var.into(),
            field,
            value,
        }
    }

    pub fn call(name: impl Into<String>, args: Vec<Expr>) -> Self {
        Stmt::Call {
            name: name.into(),
            args,
        }
    }

    /// If, while and return end a basic block.
    pub fn is_control(&self) -> bool {
        matches!(self, Stmt::If { .. } | Stmt::While { .. } | Stmt::Return(_))
    }

    /// Expressions owned directly by this statement, excluding nested bodies,
    /// in source order.
    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            Stmt::Assign { value, .. } | Stmt::FieldStore { value, .. } => vec![value],
            Stmt::Alloc { .. } => vec![],
            Stmt::If { cond, .. } | Stmt::While { cond, .. } => vec![cond],
            Stmt::Call { args, .. } => args.iter().collect(),
            Stmt::Return(e) | Stmt::Print(e) => vec![e],
        }
    }

    pub fn exprs_mut(&mut self) -> Vec<&mut Expr> {
        match self {
            Stmt::Assign { value, .. } | Stmt::FieldStore { value, .. } => vec![value],
            Stmt::Alloc { .. } => vec![],
            Stmt::If { cond, .. } | Stmt::While { cond, .. } => vec![cond],
            Stmt::Call { args, .. } => args.iter_mut().collect(),
            Stmt::Return(e) | Stmt::Print(e) => vec![e],
        }
    }

    /// Nested statement bodies: `[then, else]` for if, `[body]` for while.
    pub fn bodies(&self) -> Vec<&Vec<Stmt>> {
        match self {
            Stmt::If {
                then_body,
                else_body,
                ..
            } => vec![then_body, else_body],
            Stmt::While { body, .. } => vec![body],
            _ => vec![],
        }
    }

    pub fn bodies_mut(&mut self) -> Vec<&mut Vec<Stmt>> {
        match self {
            Stmt::If {
                then_body,
                else_body,
                ..
            } => vec![then_body, else_body],
            Stmt::While { body, .. } => vec![body],
            _ => vec![],
        }
    }

    /// True if any expression of this statement (not nested bodies) contains a call.
    pub fn has_call(&self) -> bool {
        matches!(self, Stmt::Call { .. }) || self.exprs().iter().any(|e| e.has_call())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }

    /// Binding strength; higher binds tighter. All levels are left-associative.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }
}

impl fmt::Display for BinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(i64),
    Null,
    Var(String),
    Field(String, Field),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
    IsNull(String),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Self {
        Expr::Var(name.into())
    }

    pub fn field(var: impl Into<String>, field: Field) -> Self {
        Expr::Field(var.into(), field)
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn call(name: impl Into<String>, args: Vec<Expr>) -> Self {
        Expr::Call(name.into(), args)
    }

    /// Preorder traversal.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Binary(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.walk(f)),
            _ => {}
        }
    }

    pub fn walk_mut(&mut self, f: &mut impl FnMut(&mut Expr)) {
        f(self);
        match self {
            Expr::Binary(_, a, b) => {
                a.walk_mut(f);
                b.walk_mut(f);
            }
            Expr::Call(_, args) => args.iter_mut().for_each(|a| a.walk_mut(f)),
            _ => {}
        }
    }

    pub fn has_call(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| found |= matches!(e, Expr::Call(..)));
        found
    }

    /// Variables read by this expression, in order of appearance (may repeat).
    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |e| match e {
            Expr::Var(v) | Expr::Field(v, _) | Expr::IsNull(v) => out.push(v.as_str()),
            _ => {}
        });
        out
    }
}

/// Visit every statement in a body, recursing into nested bodies, in preorder.
pub fn for_each_stmt<'a>(body: &'a [Stmt], f: &mut impl FnMut(&'a Stmt)) {
    for s in body {
        f(s);
        for b in s.bodies() {
            for_each_stmt(b, f);
        }
    }
}

pub fn for_each_stmt_mut(body: &mut [Stmt], f: &mut impl FnMut(&mut Stmt)) {
    for s in body.iter_mut() {
        f(s);
        for b in s.bodies_mut() {
            for_each_stmt_mut(b, f);
        }
    }
}
