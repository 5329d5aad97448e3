//! Dependence, liveness and type analyses shared by the transformations.

use std::collections::{BTreeMap, BTreeSet};

use crate::minilang::ast::{builtin_arity, for_each_stmt, is_global};
use crate::minilang::{Expr, Field, Function, Program, Stmt};

pub(crate) type VarSet = BTreeSet<String>;

/// Variable written by the statement itself (nested bodies excluded).
pub(crate) fn def_of(s: &Stmt) -> Option<&str> {
    match s {
        Stmt::Assign { var, .. } | Stmt::Alloc { var } => Some(var),
        _ => None,
    }
}

/// Variables read by the statement itself, including a field-store target.
pub(crate) fn uses_of(s: &Stmt) -> Vec<&str> {
    let mut out: Vec<&str> = s.exprs().into_iter().flat_map(|e| e.vars()).collect();
    if let Stmt::FieldStore { var, .. } = s {
        out.push(var);
    }
    out
}

fn has_field_load(s: &Stmt) -> bool {
    let mut found = false;
    for e in s.exprs() {
        e.walk(&mut |e| found |= matches!(e, Expr::Field(..)));
    }
    found
}

fn touches_heap(s: &Stmt) -> bool {
    matches!(s, Stmt::Alloc { .. } | Stmt::FieldStore { .. }) || has_field_load(s)
}

fn mentions_global(s: &Stmt) -> bool {
    def_of(s).is_some_and(is_global) || uses_of(s).into_iter().any(is_global)
}

/// True if swapping two adjacent straight-line statements could change what
/// a completing run prints. Heap statements are ordered among themselves,
/// prints among themselves, and calls against everything with side effects.
pub(crate) fn conflicts(a: &Stmt, b: &Stmt) -> bool {
    let (da, db) = (def_of(a), def_of(b));
    let (ua, ub) = (uses_of(a), uses_of(b));
    if let Some(d) = da {
        if db == Some(d) || ub.contains(&d) {
            return true;
        }
    }
    if let Some(d) = db {
        if ua.contains(&d) {
            return true;
        }
    }
    if touches_heap(a) && touches_heap(b) {
        return true;
    }
    let print = |s: &Stmt| matches!(s, Stmt::Print(_));
    if print(a) && print(b) {
        return true;
    }
    let effects = |s: &Stmt| s.has_call() || touches_heap(s) || print(s) || mentions_global(s);
    (a.has_call() && effects(b)) || (b.has_call() && effects(a))
}

/// Every local (non-global) name a function mentions, params first, then in
/// order of first appearance.
pub(crate) fn locals_in_order(f: &Function) -> Vec<String> {
    let mut seen = VarSet::new();
    let mut out = Vec::new();
    let mut add = |v: &str| {
        if !is_global(v) && seen.insert(v.to_string()) {
            out.push(v.to_string());
        }
    };
    for p in &f.params {
        add(p);
    }
    for_each_stmt(&f.body, &mut |s| {
        for u in uses_of(s) {
            add(u);
        }
        if let Some(d) = def_of(s) {
            add(d);
        }
    });
    out
}

/// A name `{base}{n}` (n ≥ 2) not in `taken`.
pub(crate) fn fresh_name(base: &str, taken: &VarSet) -> String {
    (2..)
        .map(|n| format!("{base}{n}"))
        .find(|c| !taken.contains(c))
        .expect("unbounded")
}

fn local_uses(s: &Stmt) -> impl Iterator<Item = String> + '_ {
    uses_of(s).into_iter().filter(|v| !is_global(v)).map(str::to_string)
}

/// Live-variable analysis over the structured body, recording for every
/// definition the variables live just after it.
pub(crate) struct Liveness<'g> {
    pub interference: &'g mut BTreeSet<(String, String)>,
}

impl Liveness<'_> {
    fn interfere(&mut self, a: &str, b: &str) {
        if a != b {
            let (x, y) = if a < b { (a, b) } else { (b, a) };
            self.interference.insert((x.to_string(), y.to_string()));
        }
    }

    pub fn body(&mut self, body: &[Stmt], out: &VarSet) -> VarSet {
        let mut live = out.clone();
        for s in body.iter().rev() {
            live = self.stmt(s, &live);
        }
        live
    }

    fn stmt(&mut self, s: &Stmt, out: &VarSet) -> VarSet {
        match s {
            Stmt::Assign { var, .. } | Stmt::Alloc { var } => {
                let mut live = out.clone();
                if !is_global(var) {
                    for o in out {
                        self.interfere(var, o);
                    }
                    live.remove(var);
                }
                live.extend(local_uses(s));
                live
            }
            Stmt::FieldStore { .. } | Stmt::Call { .. } | Stmt::Print(_) => {
                let mut live = out.clone();
                live.extend(local_uses(s));
                live
            }
            Stmt::Return(_) => local_uses(s).collect(),
            Stmt::If {
                then_body,
                else_body,
                ..
            } => {
                let mut live = self.body(then_body, out);
                live.extend(self.body(else_body, out));
                live.extend(local_uses(s));
                live
            }
            Stmt::While { body, .. } => {
                let mut head: VarSet = out.clone();
                head.extend(local_uses(s));
                loop {
                    let mut next = out.clone();
                    next.extend(local_uses(s));
                    next.extend(self.body(body, &head));
                    if next == head {
                        return head;
                    }
                    head = next;
                }
            }
        }
    }
}

/// Variables read before being written on some path through `body`.
pub(crate) fn live_in(body: &[Stmt]) -> VarSet {
    let mut scratch = BTreeSet::new();
    Liveness {
        interference: &mut scratch,
    }
    .body(body, &VarSet::new())
}

/// Flow-insensitive value kinds. `Ref` covers both nodes and null.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Ty {
    Bottom,
    Int,
    Ref,
    Top,
}

impl Ty {
    fn join(self, other: Ty) -> Ty {
        match (self, other) {
            (Ty::Bottom, x) | (x, Ty::Bottom) => x,
            (a, b) if a == b => a,
            _ => Ty::Top,
        }
    }
}

/// Interprocedural kind inference: every variable's kind is the join of all
/// values ever assigned to it, parameters joining the arguments of every call.
#[derive(Debug, Default)]
pub(crate) struct Types {
    vars: BTreeMap<(String, String), Ty>,
    returns: BTreeMap<String, Ty>,
}

impl Types {
    fn key(function: &str, var: &str) -> (String, String) {
        let scope = if is_global(var) { "" } else { function };
        (scope.to_string(), var.to_string())
    }

    pub fn var(&self, function: &str, var: &str) -> Ty {
        self.vars.get(&Self::key(function, var)).copied().unwrap_or(Ty::Bottom)
    }

    fn ret(&self, function: &str) -> Ty {
        self.returns.get(function).copied().unwrap_or(Ty::Bottom)
    }

    fn raise_var(&mut self, function: &str, var: &str, t: Ty) -> bool {
        let slot = self.vars.entry(Self::key(function, var)).or_insert(Ty::Bottom);
        let joined = slot.join(t);
        let changed = joined != *slot;
        *slot = joined;
        changed
    }

    fn raise_ret(&mut self, function: &str, t: Ty) -> bool {
        let slot = self.returns.entry(function.to_string()).or_insert(Ty::Bottom);
        let joined = slot.join(t);
        let changed = joined != *slot;
        *slot = joined;
        changed
    }

    fn expr(&self, function: &str, e: &Expr) -> Ty {
        match e {
            Expr::Int(_) | Expr::Binary(..) | Expr::IsNull(_) => Ty::Int,
            Expr::Null => Ty::Ref,
            Expr::Var(v) => self.var(function, v),
            Expr::Field(_, Field::Data) => Ty::Int,
            Expr::Field(..) => Ty::Ref,
            Expr::Call(name, _) if builtin_arity(name).is_some() => Ty::Int,
            Expr::Call(name, _) => self.ret(name),
        }
    }

    pub fn infer(p: &Program) -> Types {
        let mut t = Types::default();
        if let Some(main) = p.function("main") {
            for param in &main.params {
                t.raise_var("main", param, Ty::Int);
            }
        }
        loop {
            let mut changed = false;
            for f in &p.functions {
                if !matches!(f.body.last(), Some(Stmt::Return(_))) {
                    changed |= t.raise_ret(&f.name, Ty::Int);
                }
                let mut updates: Vec<Update> = Vec::new();
                for_each_stmt(&f.body, &mut |s| {
                    match s {
                        Stmt::Assign { var, value } => updates.push(Update::Var(var.clone(), t.expr(&f.name, value))),
                        Stmt::Alloc { var } => updates.push(Update::Var(var.clone(), Ty::Ref)),
                        Stmt::Return(e) => updates.push(Update::Ret(t.expr(&f.name, e))),
                        Stmt::Call { name, args } => updates.extend(t.call_args(p, &f.name, name, args)),
                        _ => {}
                    }
                    for e in s.exprs() {
                        e.walk(&mut |e| {
                            if let Expr::Call(name, args) = e {
                                updates.extend(t.call_args(p, &f.name, name, args));
                            }
                        });
                    }
                });
                for u in updates {
                    changed |= match u {
                        Update::Var(v, ty) => t.raise_var(&f.name, &v, ty),
                        Update::Ret(ty) => t.raise_ret(&f.name, ty),
                        Update::Param(callee, v, ty) => t.raise_var(&callee, &v, ty),
                    };
                }
            }
            if !changed {
                return t;
            }
        }
    }

    fn call_args(&self, p: &Program, caller: &str, name: &str, args: &[Expr]) -> Vec<Update> {
        let Some(callee) = p.function(name) else {
            return Vec::new();
        };
        callee
            .params
            .iter()
            .zip(args)
            .map(|(param, a)| Update::Param(name.to_string(), param.clone(), self.expr(caller, a)))
            .collect()
    }
}

enum Update {
    Var(String, Ty),
    Ret(Ty),
    Param(String, String, Ty),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::parse;

    fn stmts(src: &str) -> Vec<Stmt> {
        parse(&format!("fn main(a) {{ {src} }}")).unwrap().functions.remove(0).body
    }

    #[test]
    fn dependence_rules() {
        let s = stmts("x = 1; y = 2; z = x; x = 3; n = node(); m = node(); print(1); print(2); f = a;");
        assert!(!conflicts(&s[0], &s[1]));
        assert!(conflicts(&s[0], &s[2]), "def-use");
        assert!(conflicts(&s[2], &s[3]), "use-def");
        assert!(conflicts(&s[0], &s[3]), "def-def");
        assert!(conflicts(&s[4], &s[5]), "heap");
        assert!(conflicts(&s[6], &s[7]), "print");
        assert!(!conflicts(&s[6], &s[8]));
    }

    #[test]
    fn calls_order_against_effects() {
        let p = parse("fn main() { x = g(); y = 2; print(y); @h = 1; } fn g() { return 1; }").unwrap();
        let s = &p.functions[0].body;
        assert!(!conflicts(&s[0], &s[1]));
        assert!(conflicts(&s[0], &s[2]));
        assert!(conflicts(&s[0], &s[3]));
    }

    #[test]
    fn liveness_through_loops() {
        let body = stmts("i = 0; s = 0; while (i < a) { s = s + i; i = i + 1; } print(s);");
        assert_eq!(live_in(&body), VarSet::from(["a".to_string()]));
        assert_eq!(live_in(&body[2..]), VarSet::from(["a".into(), "i".into(), "s".into()]));
    }

    #[test]
    fn interference_graph() {
        let body = stmts("x = 1; print(x); y = 2; print(y); z = a + y; print(z + y);");
        let mut g = BTreeSet::new();
        Liveness { interference: &mut g }.body(&body, &VarSet::new());
        let has = |a: &str, b: &str| g.contains(&(a.to_string(), b.to_string()));
        assert!(!has("x", "y"));
        assert!(has("y", "z"));
        assert!(has("a", "y"));
    }

    #[test]
    fn kind_inference() {
        let p = parse(
            "fn main(a) { n = node(); k = f(n, a); m = n.left; d = n.data; q = null; q = 3; print(k + d); }
             fn f(x, y) { return y; }",
        )
        .unwrap();
        let t = Types::infer(&p);
        assert_eq!(t.var("main", "n"), Ty::Ref);
        assert_eq!(t.var("main", "k"), Ty::Int);
        assert_eq!(t.var("main", "m"), Ty::Ref);
        assert_eq!(t.var("main", "d"), Ty::Int);
        assert_eq!(t.var("main", "q"), Ty::Top);
        assert_eq!(t.var("f", "x"), Ty::Ref);
        assert_eq!(t.var("f", "y"), Ty::Int);
    }
}
