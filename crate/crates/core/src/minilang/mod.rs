//! The program substrate: a small imperative language with integer locals,
//! `@`-prefixed globals, heap nodes carrying `left`/`right`/`data` fields, and
//! a deterministic interpreter.

use thiserror::Error;

pub mod ast;
pub mod blocks;
pub mod check;
pub mod heap;
pub mod interp;
pub mod parser;
pub mod printer;

pub use ast::{BinOp, Expr, Field, Function, Program, Stmt};
pub use blocks::{basic_blocks, BasicBlock};
pub use heap::{HeapSnapshot, NodeId, SnapNode};
pub use interp::{interpret, Limits, RunResult, RuntimeError, Value};
pub use parser::parse;
pub use printer::serialize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("program has no `main` function")]
    NoMain,
    #[error("function `{0}` is defined more than once")]
    DuplicateFunction(String),
    #[error("parameter `{param}` repeated in `{function}`")]
    DuplicateParam { function: String, param: String },
    #[error("`{0}` is a reserved name")]
    ReservedName(String),
    #[error("`{caller}` calls undefined function `{name}`")]
    UndefinedFunction { caller: String, name: String },
    #[error("`{name}` takes {expected} arguments, {found} given")]
    Arity { name: String, expected: usize, found: usize },
    #[error("`{var}` may be used before assignment in `{function}`")]
    UseBeforeAssign { function: String, var: String },
}

/// Code-size metric: byte length of the canonical serialization.
pub fn code_size(p: &Program) -> usize {
    serialize(p).len()
}
