use std::collections::{BTreeMap, BTreeSet};

use super::analysis::{locals_in_order, Liveness, VarSet};
use crate::minilang::{Expr, Function, Program, Stmt};

fn rename_body(body: &mut [Stmt], map: &BTreeMap<String, String>) {
    let rename = |name: &mut String| {
        if let Some(to) = map.get(name.as_str()) {
            *name = to.clone();
        }
    };
    for s in body.iter_mut() {
        match s {
            Stmt::Assign { var, .. } | Stmt::Alloc { var } | Stmt::FieldStore { var, .. } => rename(var),
            _ => {}
        }
        for e in s.exprs_mut() {
            e.walk_mut(&mut |e| match e {
                Expr::Var(n) | Expr::Field(n, _) | Expr::IsNull(n) => rename(n),
                _ => {}
            });
        }
        for b in s.bodies_mut() {
            rename_body(b, map);
        }
    }
}

/// Greedy coloring of the interference graph in first-appearance order; each
/// color takes the name of its first member.
pub(crate) fn coalesce(f: &Function) -> BTreeMap<String, String> {
    let mut graph = BTreeSet::new();
    let entry_live = Liveness { interference: &mut graph }.body(&f.body, &VarSet::new());
    // Parameters are all defined together at entry.
    for (i, a) in f.params.iter().enumerate() {
        for b in f.params[i + 1..].iter().chain(entry_live.iter()) {
            if a != b {
                let (x, y) = if a < b { (a, b) } else { (b, a) };
                graph.insert((x.clone(), y.clone()));
            }
        }
    }
    let interferes = |a: &str, b: &str| {
        let (x, y) = if a < b { (a, b) } else { (b, a) };
        graph.contains(&(x.to_string(), y.to_string()))
    };
    let mut colors: Vec<Vec<String>> = Vec::new();
    let mut map = BTreeMap::new();
    for v in locals_in_order(f) {
        let slot = colors.iter().position(|members| members.iter().all(|m| !interferes(m, &v)));
        match slot {
            Some(c) => {
                map.insert(v.clone(), colors[c][0].clone());
                colors[c].push(v);
            }
            None => {
                map.insert(v.clone(), v.clone());
                colors.push(vec![v]);
            }
        }
    }
    map.retain(|k, v| k != v);
    map
}

/// Merges locals with disjoint live ranges into shared names.
pub fn reassign_variables(p: &Program) -> Program {
    let mut out = p.clone();
    for f in &mut out.functions {
        let map = coalesce(f);
        rename_body(&mut f.body, &map);
    }
    out
}
