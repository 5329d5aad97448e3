//! Embedding and extraction of a numeric dynamic graph watermark.
//!
//! The watermark value `W` is unranked into a plane tree, and a generated
//! straight-line function builds that tree on the heap at the start of every
//! run. A separate guard takes a heap snapshot when the program is invoked
//! with the secret trigger arguments; extraction recognizes the tree in that
//! snapshot and ranks it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minilang::ast::{is_global, BUILTIN_ARG, BUILTIN_ARGC, BUILTIN_SNAPSHOT};
use crate::minilang::{interpret, BinOp, Expr, Field, Function, Limits, Program, RuntimeError, Stmt};
use crate::ppct::{self, recognize_heap_ppct, PlaneTree, PpctError};

/// Every generated watermark function starts with this prefix.
pub const RESERVED_PREFIX: &str = "__wm_";
pub const BUILD_FN: &str = "__wm_build";
pub const ANCHOR_FN: &str = "__wm_anchor";
pub const TRIGGER_FN: &str = "__wm_trigger";
pub const DEFAULT_ANCHOR: &str = "@__wm_root";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WatermarkSpec {
    pub value: u128,
    /// Invocation arguments that make the program snapshot its heap.
    pub trigger: Vec<i64>,
    /// Global that holds the tree root.
    pub anchor: String,
    pub max_leaves: usize,
}

impl WatermarkSpec {
    pub fn new(value: u128, trigger: Vec<i64>) -> Self {
        WatermarkSpec {
            value,
            trigger,
            anchor: DEFAULT_ANCHOR.to_string(),
            max_leaves: ppct::DEFAULT_MAX_LEAVES,
        }
    }

    pub fn tree(&self) -> Result<PlaneTree, WatermarkError> {
        Ok(ppct::unrank_capped(self.value, self.max_leaves)?)
    }

    fn validate(&self) -> Result<(), WatermarkError> {
        if self.trigger.is_empty() {
            return Err(WatermarkError::EmptyTrigger);
        }
        if !is_global(&self.anchor) || self.anchor.len() < 2 {
            return Err(WatermarkError::BadAnchor(self.anchor.clone()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WatermarkError {
    #[error(transparent)]
    Codec(#[from] PpctError),
    #[error("trigger argument list must not be empty")]
    EmptyTrigger,
    #[error("anchor `{0}` must be a global name such as `@root`")]
    BadAnchor(String),
    #[error("program already uses reserved name `{0}`")]
    ReservedName(String),
    #[error("program has no main function")]
    NoMain,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("no watermark found")]
    NotFound,
    #[error("program failed on the trigger input: {0}")]
    Run(RuntimeError),
}

fn node_var(i: usize) -> String {
    format!("n{i}")
}

/// Generates `__wm_build`: allocate every node (preorder), wire internal
/// children, wire the leaf self-loops and leaf cycle, store the root.
pub fn synthesize_builder(spec: &WatermarkSpec) -> Result<Function, WatermarkError> {
    spec.validate()?;
    let tree = spec.tree()?;

    let mut ids = 0usize;
    let mut internals = Vec::new();
    let mut leaves = Vec::new();
    fn number(t: &PlaneTree, ids: &mut usize, internals: &mut Vec<(usize, usize, usize)>, leaves: &mut Vec<usize>) -> usize {
        let me = *ids;
        *ids += 1;
        match t {
            PlaneTree::Leaf => leaves.push(me),
            PlaneTree::Node(l, r) => {
                let slot = internals.len();
                internals.push((me, 0, 0));
                let li = number(l, ids, internals, leaves);
                let ri = number(r, ids, internals, leaves);
                internals[slot] = (me, li, ri);
            }
        }
        me
    }
    number(&tree, &mut ids, &mut internals, &mut leaves);

    let mut body: Vec<Stmt> = (0..ids).map(|i| Stmt::alloc(node_var(i))).collect();
    for &(me, l, r) in &internals {
        body.push(Stmt::store(node_var(me), Field::Left, Expr::var(node_var(l))));
        body.push(Stmt::store(node_var(me), Field::Right, Expr::var(node_var(r))));
    }
    for (i, &leaf) in leaves.iter().enumerate() {
        let next = leaves[(i + 1) % leaves.len()];
        body.push(Stmt::store(node_var(leaf), Field::Left, Expr::var(node_var(leaf))));
        body.push(Stmt::store(node_var(leaf), Field::Right, Expr::var(node_var(next))));
    }
    body.push(Stmt::assign(spec.anchor.clone(), Expr::var(node_var(0))));
    Ok(Function::new(BUILD_FN, vec![], body))
}

/// `__wm_anchor()` returns the stored tree root.
pub fn synthesize_anchor(spec: &WatermarkSpec) -> Function {
    Function::new(ANCHOR_FN, vec![], vec![Stmt::Return(Expr::var(spec.anchor.clone()))])
}

/// `__wm_trigger()` snapshots the heap iff the invocation arguments equal the trigger.
pub fn synthesize_trigger(spec: &WatermarkSpec) -> Function {
    let eq = |a: Expr, b: i64| Expr::binary(BinOp::Eq, a, Expr::Int(b));
    let mut cond = eq(Expr::call(BUILTIN_ARGC, vec![]), spec.trigger.len() as i64);
    for (i, &t) in spec.trigger.iter().enumerate() {
        let arg = Expr::call(BUILTIN_ARG, vec![Expr::Int(i as i64)]);
        cond = Expr::binary(BinOp::And, cond, eq(arg, t));
    }
    let guard = Stmt::If {
        cond,
        then_body: vec![Stmt::call(BUILTIN_SNAPSHOT, vec![])],
        else_body: vec![],
    };
    Function::new(TRIGGER_FN, vec![], vec![guard])
}

fn uses_global(p: &Program, name: &str) -> bool {
    let mut found = false;
    for f in &p.functions {
        crate::minilang::ast::for_each_stmt(&f.body, &mut |s| {
            if let Stmt::Assign { var, .. } = s {
                found |= var == name;
            }
            for e in s.exprs() {
                found |= e.vars().contains(&name);
            }
        });
    }
    found
}

/// Adds the builder, accessor and trigger functions, and calls the builder and
/// trigger as the first two statements of `main`.
pub fn embed(p: &Program, spec: &WatermarkSpec) -> Result<Program, WatermarkError> {
    spec.validate()?;
    if let Some(f) = p.functions.iter().find(|f| f.name.starts_with(RESERVED_PREFIX)) {
        return Err(WatermarkError::ReservedName(f.name.clone()));
    }
    if uses_global(p, &spec.anchor) {
        return Err(WatermarkError::ReservedName(spec.anchor.clone()));
    }
    let builder = synthesize_builder(spec)?;
    let mut out = p.clone();
    let main = out.function_mut("main").ok_or(WatermarkError::NoMain)?;
    main.body.insert(0, Stmt::call(TRIGGER_FN, vec![]));
    main.body.insert(0, Stmt::call(BUILD_FN, vec![]));
    out.functions.push(builder);
    out.functions.push(synthesize_anchor(spec));
    out.functions.push(synthesize_trigger(spec));
    Ok(out)
}

/// Runs the program on the trigger input and recognizes the watermark tree in
/// the captured snapshot.
pub fn extract_tree(p: &Program, trigger: &[i64], limits: Limits) -> Result<PlaneTree, ExtractError> {
    let run = interpret(p, trigger, limits);
    if let Err(e) = run.status {
        return Err(ExtractError::Run(e));
    }
    let snap = run.snapshot.ok_or(ExtractError::NotFound)?;
    snap.anchors
        .values()
        .find_map(|&root| recognize_heap_ppct(&snap, root).ok())
        .map(|found| found.shape)
        .ok_or(ExtractError::NotFound)
}

pub fn extract(p: &Program, trigger: &[i64], limits: Limits) -> Result<u128, ExtractError> {
    let tree = extract_tree(p, trigger, limits)?;
    ppct::rank(&tree).map_err(|_| ExtractError::NotFound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::{parse, serialize};

    fn spec(w: u128) -> WatermarkSpec {
        WatermarkSpec::new(w, vec![9, 9])
    }

    const PROG: &str = "fn main(a) { x = a * 3; print(x + 1); }";

    #[test]
    fn single_leaf_builder() {
        let f = synthesize_builder(&spec(0)).unwrap();
        let text = crate::minilang::printer::serialize_function(&f);
        assert_eq!(
            text,
            "fn __wm_build() {\n    n0 = node();\n    n0.left = n0;\n    n0.right = n0;\n    @__wm_root = n0;\n}\n"
        );
    }

    #[test]
    fn builder_statement_count() {
        for w in [0u128, 1, 5, 472, 99_999] {
            let t = ppct::unrank(w).unwrap();
            let f = synthesize_builder(&spec(w)).unwrap();
            let expected = 1 + t.node_count() + 2 * t.internal_count() + 2 * t.leaf_count();
            assert_eq!(f.body.len(), expected, "W = {w}");
        }
    }

    #[test]
    fn embed_preserves_output_off_trigger() {
        let p = parse(PROG).unwrap();
        let wm = embed(&p, &spec(472)).unwrap();
        crate::minilang::check::check_program(&wm).unwrap();
        for a in [0, 1, 7, -4] {
            let before = interpret(&p, &[a], Limits::default());
            let after = interpret(&wm, &[a], Limits::default());
            assert_eq!(before.output, after.output);
            assert!(after.snapshot.is_none());
        }
    }

    #[test]
    fn round_trip_472() {
        let p = parse(PROG).unwrap();
        let wm = embed(&p, &spec(472)).unwrap();
        assert_eq!(extract(&wm, &[9, 9], Limits::default()), Ok(472));
        // Wrong trigger: no snapshot.
        assert_eq!(extract(&wm, &[9, 8], Limits::default()), Err(ExtractError::NotFound));
    }

    #[test]
    fn unwatermarked_is_not_found() {
        let p = parse(PROG).unwrap();
        assert_eq!(extract(&p, &[9, 9], Limits::default()), Err(ExtractError::NotFound));
    }

    #[test]
    fn run_failure_propagates() {
        let p = parse("fn main(a) { print(1 / (a - 9)); }").unwrap();
        let wm = embed(&p, &spec(3)).unwrap();
        assert_eq!(
            extract(&wm, &[9, 9], Limits::default()),
            Err(ExtractError::Run(RuntimeError::DivisionByZero))
        );
    }

    #[test]
    fn embedding_twice_is_rejected() {
        let p = parse(PROG).unwrap();
        let wm = embed(&p, &spec(472)).unwrap();
        assert!(matches!(embed(&wm, &spec(5)), Err(WatermarkError::ReservedName(_))));
    }

    #[test]
    fn invalid_specs() {
        let p = parse(PROG).unwrap();
        assert_eq!(
            embed(&p, &WatermarkSpec::new(1, vec![])),
            Err(WatermarkError::EmptyTrigger)
        );
        let mut big = spec(1u128 << 100);
        big.max_leaves = 10;
        assert!(matches!(embed(&p, &big), Err(WatermarkError::Codec(PpctError::TooLarge { .. }))));
    }

    #[test]
    fn code_size_delta_depends_only_on_w() {
        let a = parse(PROG).unwrap();
        let b = parse("fn main() { i = 0; while (i < 4) { i = i + 1; } print(i); }\nfn g(x) { return x; }").unwrap();
        let delta = |p: &Program| serialize(&embed(p, &spec(472)).unwrap()).len() as i64 - serialize(p).len() as i64;
        assert_eq!(delta(&a), delta(&b));
    }

    #[test]
    fn mutated_builder_breaks_extraction() {
        let p = parse(PROG).unwrap();
        let wm = embed(&p, &spec(472)).unwrap();
        let builder = wm.function(BUILD_FN).unwrap();
        let stores: Vec<usize> = builder
            .body
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, Stmt::FieldStore { .. }))
            .map(|(i, _)| i)
            .collect();
        let node_count = builder.body.iter().filter(|s| matches!(s, Stmt::Alloc { .. })).count();
        for &i in &stores {
            let mut m = wm.clone();
            let f = m.function_mut(BUILD_FN).unwrap();
            let Stmt::FieldStore { value: Expr::Var(target), .. } = &mut f.body[i] else { panic!() };
            let cur: usize = target[1..].parse().unwrap();
            *target = node_var((cur + 1) % node_count);
            assert_ne!(extract(&m, &[9, 9], Limits::default()), Ok(472), "store {i}");
        }
    }
}
