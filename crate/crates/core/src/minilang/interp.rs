//! Deterministic tree-walking interpreter.
//!
//! Cost model: every executed statement is one step, and a `while` costs one
//! step per evaluation of its condition. Expression evaluation is free. Live
//! nodes are counted by reachability from every frame, every global and any
//! in-flight temporaries, sampled at each allocation.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ast::*;
use super::heap::{HeapSnapshot, NodeId, SnapNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub max_steps: u64,
    pub max_allocations: u64,
    pub max_call_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_steps: 5_000_000,
            max_allocations: 1_000_000,
            max_call_depth: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum RuntimeError {
    #[error("step limit exceeded")]
    StepLimit,
    #[error("heap limit exceeded")]
    HeapLimit,
    #[error("call depth limit exceeded")]
    CallDepth,
    #[error("division by zero")]
    DivisionByZero,
    #[error("null dereference")]
    NullDereference,
    #[error("integer overflow")]
    Overflow,
    #[error("type error: {0}")]
    TypeError(String),
    #[error("variable `{0}` read before assignment")]
    Unbound(String),
    #[error("main expects {expected} arguments, got {found}")]
    BadArguments { expected: usize, found: usize },
    #[error("argument index {0} out of range")]
    ArgumentOutOfRange(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Value {
    Int(i64),
    Null,
    Ref(NodeId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    /// Printed integers, one per `print`.
    pub output: Vec<i64>,
    pub steps: u64,
    pub peak_live_nodes: u64,
    pub total_allocations: u64,
    pub status: Result<(), RuntimeError>,
    /// First snapshot captured by `snapshot()`, if any.
    pub snapshot: Option<HeapSnapshot>,
}

impl RunResult {
    pub fn is_ok(&self) -> bool {
        self.status.is_ok()
    }

    pub fn output_lines(&self) -> Vec<String> {
        self.output.iter().map(|n| n.to_string()).collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct HeapNode {
    left: Value,
    right: Value,
    data: i64,
}

enum Flow {
    Normal,
    Return(Value),
}

struct Machine<'p> {
    funcs: HashMap<&'p str, &'p Function>,
    args: &'p [i64],
    limits: Limits,
    heap: Vec<HeapNode>,
    globals: HashMap<&'p str, Value>,
    frames: Vec<HashMap<&'p str, Value>>,
    temps: Vec<Value>,
    steps: u64,
    peak_live: u64,
    output: Vec<i64>,
    snapshot: Option<HeapSnapshot>,
    marks: Vec<u32>,
    epoch: u32,
}

type Exec<T> = Result<T, RuntimeError>;

fn type_error(msg: &str) -> RuntimeError {
    RuntimeError::TypeError(msg.to_string())
}

impl<'p> Machine<'p> {
    fn tick(&mut self) -> Exec<()> {
        self.steps += 1;
        if self.steps > self.limits.max_steps {
            return Err(RuntimeError::StepLimit);
        }
        Ok(())
    }

    fn read(&self, name: &str) -> Exec<Value> {
        if is_global(name) {
            return Ok(self.globals.get(name).copied().unwrap_or(Value::Null));
        }
        self.frames
            .last()
            .and_then(|f| f.get(name))
            .copied()
            .ok_or_else(|| RuntimeError::Unbound(name.to_string()))
    }

    fn write(&mut self, name: &'p str, v: Value) {
        if is_global(name) {
            self.globals.insert(name, v);
        } else {
            self.frames.last_mut().expect("active frame").insert(name, v);
        }
    }

    fn deref(&self, name: &str) -> Exec<usize> {
        match self.read(name)? {
            Value::Ref(id) => Ok(id.0 as usize),
            Value::Null => Err(RuntimeError::NullDereference),
            Value::Int(_) => Err(type_error("field access on an integer")),
        }
    }

    fn int(v: Value, what: &str) -> Exec<i64> {
        match v {
            Value::Int(n) => Ok(n),
            _ => Err(RuntimeError::TypeError(format!("{what} must be an integer"))),
        }
    }

    fn truthy(&mut self, e: &'p Expr) -> Exec<bool> {
        let v = self.eval(e)?;
        Ok(Self::int(v, "condition")? != 0)
    }

    fn alloc(&mut self) -> Exec<Value> {
        if self.heap.len() as u64 >= self.limits.max_allocations {
            return Err(RuntimeError::HeapLimit);
        }
        self.heap.push(HeapNode {
            left: Value::Null,
            right: Value::Null,
            data: 0,
        });
        self.marks.push(0);
        Ok(Value::Ref(NodeId((self.heap.len() - 1) as u32)))
    }

    fn count_live(&mut self) -> u64 {
        self.epoch += 1;
        let epoch = self.epoch;
        let mut stack: Vec<usize> = Vec::new();
        let roots = self
            .frames
            .iter()
            .flat_map(|f| f.values())
            .chain(self.globals.values())
            .chain(self.temps.iter());
        for v in roots {
            if let Value::Ref(id) = v {
                stack.push(id.0 as usize);
            }
        }
        let mut live = 0;
        while let Some(i) = stack.pop() {
            if self.marks[i] == epoch {
                continue;
            }
            self.marks[i] = epoch;
            live += 1;
            let n = self.heap[i];
            for v in [n.left, n.right] {
                if let Value::Ref(id) = v {
                    stack.push(id.0 as usize);
                }
            }
        }
        live
    }

    fn capture(&self) -> HeapSnapshot {
        let as_id = |v: Value| match v {
            Value::Ref(id) => Some(id),
            _ => None,
        };
        let nodes = self
            .heap
            .iter()
            .enumerate()
            .map(|(i, n)| {
                (
                    NodeId(i as u32),
                    SnapNode {
                        left: as_id(n.left),
                        right: as_id(n.right),
                        data: n.data,
                    },
                )
            })
            .collect();
        let anchors: BTreeMap<String, NodeId> = self
            .globals
            .iter()
            .filter_map(|(k, v)| as_id(*v).map(|id| (k.to_string(), id)))
            .collect();
        HeapSnapshot { nodes, anchors }
    }

    fn exec_body(&mut self, body: &'p [Stmt]) -> Exec<Flow> {
        for s in body {
            if let Flow::Return(v) = self.exec_stmt(s)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn exec_stmt(&mut self, s: &'p Stmt) -> Exec<Flow> {
        if !matches!(s, Stmt::While { .. }) {
            self.tick()?;
        }
        match s {
            Stmt::Assign { var, value } => {
                let v = self.eval(value)?;
                self.write(var, v);
            }
            Stmt::Alloc { var } => {
                let v = self.alloc()?;
                self.write(var, v);
                let live = self.count_live();
                self.peak_live = self.peak_live.max(live);
            }
            Stmt::FieldStore { var, field, value } => {
                let v = self.eval(value)?;
                let idx = self.deref(var)?;
                match field {
                    Field::Data => self.heap[idx].data = Self::int(v, "data field")?,
                    Field::Left | Field::Right => {
                        if let Value::Int(_) = v {
                            return Err(type_error("pointer field must hold a node or null"));
                        }
                        if *field == Field::Left {
                            self.heap[idx].left = v;
                        } else {
                            self.heap[idx].right = v;
                        }
                    }
                }
            }
            Stmt::If {
                cond,
                then_body,
                else_body,
            } => {
                let body = if self.truthy(cond)? { then_body } else { else_body };
                return self.exec_body(body);
            }
            Stmt::While { cond, body } => loop {
                self.tick()?;
                if !self.truthy(cond)? {
                    break;
                }
                if let Flow::Return(v) = self.exec_body(body)? {
                    return Ok(Flow::Return(v));
                }
            },
            Stmt::Call { name, args } => {
                self.call(name, args)?;
            }
            Stmt::Return(e) => {
                let v = self.eval(e)?;
                return Ok(Flow::Return(v));
            }
            Stmt::Print(e) => {
                let v = self.eval(e)?;
                let n = Self::int(v, "printed value")?;
                self.output.push(n);
            }
        }
        Ok(Flow::Normal)
    }

    fn call(&mut self, name: &'p str, args: &'p [Expr]) -> Exec<Value> {
        match name {
            BUILTIN_SNAPSHOT => {
                if self.snapshot.is_none() {
                    self.snapshot = Some(self.capture());
                }
                return Ok(Value::Int(0));
            }
            BUILTIN_ARGC => return Ok(Value::Int(self.args.len() as i64)),
            BUILTIN_ARG => {
                let i = Self::int(self.eval(&args[0])?, "argument index")?;
                return usize::try_from(i)
                    .ok()
                    .and_then(|i| self.args.get(i))
                    .map(|&n| Value::Int(n))
                    .ok_or(RuntimeError::ArgumentOutOfRange(i));
            }
            _ => {}
        }
        let f = *self
            .funcs
            .get(name)
            .ok_or_else(|| type_error("call to undefined function"))?;
        let base = self.temps.len();
        for a in args {
            let v = self.eval(a)?;
            self.temps.push(v);
        }
        let values: Vec<Value> = self.temps.drain(base..).collect();
        self.invoke(f, values)
    }

    fn invoke(&mut self, f: &'p Function, values: Vec<Value>) -> Exec<Value> {
        if self.frames.len() >= self.limits.max_call_depth {
            return Err(RuntimeError::CallDepth);
        }
        let frame = f.params.iter().map(String::as_str).zip(values).collect();
        self.frames.push(frame);
        let flow = self.exec_body(&f.body);
        self.frames.pop();
        Ok(match flow? {
            Flow::Return(v) => v,
            Flow::Normal => Value::Int(0),
        })
    }

    fn eval(&mut self, e: &'p Expr) -> Exec<Value> {
        Ok(match e {
            Expr::Int(n) => Value::Int(*n),
            Expr::Null => Value::Null,
            Expr::Var(v) => self.read(v)?,
            Expr::Field(v, f) => {
                let n = self.heap[self.deref(v)?];
                match f {
                    Field::Left => n.left,
                    Field::Right => n.right,
                    Field::Data => Value::Int(n.data),
                }
            }
            Expr::IsNull(v) => Value::Int(matches!(self.read(v)?, Value::Null) as i64),
            Expr::Call(name, args) => self.call(name, args)?,
            Expr::Binary(BinOp::And, a, b) => {
                let l = Self::int(self.eval(a)?, "operand of `and`")?;
                if l == 0 {
                    Value::Int(0)
                } else {
                    Value::Int((Self::int(self.eval(b)?, "operand of `and`")? != 0) as i64)
                }
            }
            Expr::Binary(BinOp::Or, a, b) => {
                let l = Self::int(self.eval(a)?, "operand of `or`")?;
                if l != 0 {
                    Value::Int(1)
                } else {
                    Value::Int((Self::int(self.eval(b)?, "operand of `or`")? != 0) as i64)
                }
            }
            Expr::Binary(op, a, b) => {
                let l = self.eval(a)?;
                self.temps.push(l);
                let r = self.eval(b);
                self.temps.pop();
                binary(*op, l, r?)?
            }
        })
    }
}

fn binary(op: BinOp, l: Value, r: Value) -> Exec<Value> {
    match op {
        BinOp::Eq => return Ok(Value::Int((l == r) as i64)),
        BinOp::Ne => return Ok(Value::Int((l != r) as i64)),
        _ => {}
    }
    let a = Machine::int(l, "arithmetic operand")?;
    let b = Machine::int(r, "arithmetic operand")?;
    let n = match op {
        BinOp::Add => a.checked_add(b).ok_or(RuntimeError::Overflow)?,
        BinOp::Sub => a.checked_sub(b).ok_or(RuntimeError::Overflow)?,
        BinOp::Mul => a.checked_mul(b).ok_or(RuntimeError::Overflow)?,
        BinOp::Div | BinOp::Rem if b == 0 => return Err(RuntimeError::DivisionByZero),
        BinOp::Div => a.checked_div(b).ok_or(RuntimeError::Overflow)?,
        BinOp::Rem => a.checked_rem(b).ok_or(RuntimeError::Overflow)?,
        BinOp::Lt => (a < b) as i64,
        BinOp::Le => (a <= b) as i64,
        BinOp::Gt => (a > b) as i64,
        BinOp::Ge => (a >= b) as i64,
        BinOp::Eq | BinOp::Ne | BinOp::And | BinOp::Or => unreachable!(),
    };
    Ok(Value::Int(n))
}

/// Runs `main` with `args`. Extra arguments beyond main's parameters are
/// still visible through `arg(i)` and `argc()`.
pub fn interpret(p: &Program, args: &[i64], limits: Limits) -> RunResult {
    let mut m = Machine {
        funcs: p.functions.iter().map(|f| (f.name.as_str(), f)).collect(),
        args,
        limits,
        heap: Vec::new(),
        globals: HashMap::new(),
        frames: Vec::new(),
        temps: Vec::new(),
        steps: 0,
        peak_live: 0,
        output: Vec::new(),
        snapshot: None,
        marks: Vec::new(),
        epoch: 0,
    };
    let status = match p.function("main") {
        None => Err(type_error("program has no main")),
        Some(main) if main.params.len() > args.len() => Err(RuntimeError::BadArguments {
            expected: main.params.len(),
            found: args.len(),
        }),
        Some(main) => {
            let values = args[..main.params.len()].iter().map(|&n| Value::Int(n)).collect();
            m.invoke(main, values).map(|_| ())
        }
    };
    RunResult {
        output: m.output,
        steps: m.steps,
        peak_live_nodes: m.peak_live,
        total_allocations: m.heap.len() as u64,
        status,
        snapshot: m.snapshot,
    }
}
