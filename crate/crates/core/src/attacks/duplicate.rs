use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::analysis::{def_of, fresh_name, locals_in_order, VarSet};
use super::rng;
use crate::minilang::ast::for_each_stmt;
use crate::minilang::{Expr, Program, Stmt};

fn redirect_uses(body: &mut [Stmt], v: &str, v2: &str, rng: &mut ChaCha8Rng) {
    for s in body.iter_mut() {
        if let Stmt::FieldStore { var, .. } = s {
            if var == v && rng.gen_bool(0.5) {
                *var = v2.to_string();
            }
        }
        for e in s.exprs_mut() {
            e.walk_mut(&mut |e| {
                let name = match e {
                    Expr::Var(n) | Expr::Field(n, _) | Expr::IsNull(n) => n,
                    _ => return,
                };
                if name == v && rng.gen_bool(0.5) {
                    *name = v2.to_string();
                }
            });
        }
        for b in s.bodies_mut() {
            redirect_uses(b, v, v2, rng);
        }
    }
}

fn insert_copies(body: &mut Vec<Stmt>, v: &str, v2: &str) {
    let mut out = Vec::with_capacity(body.len());
    for mut s in body.drain(..) {
        for b in s.bodies_mut() {
            insert_copies(b, v, v2);
        }
        let defines = def_of(&s) == Some(v);
        out.push(s);
        if defines {
            out.push(Stmt::assign(v2, Expr::var(v)));
        }
    }
    *body = out;
}

/// Gives one local a shadow copy kept in sync after every definition, and
/// reads the shadow at a random half of the original's uses.
pub fn duplicate_variable(p: &Program, seed: u64) -> Program {
    let mut rng = rng(seed);
    let candidates: Vec<usize> = (0..p.functions.len())
        .filter(|&i| !locals_in_order(&p.functions[i]).is_empty())
        .collect();
    if candidates.is_empty() {
        return p.clone();
    }
    let mut out = p.clone();
    let f = &mut out.functions[candidates[rng.gen_range(0..candidates.len())]];
    let locals = locals_in_order(f);
    let v = locals[rng.gen_range(0..locals.len())].clone();
    let mut taken: VarSet = locals.iter().cloned().collect();
    for_each_stmt(&f.body, &mut |s| {
        if let Some(d) = def_of(s) {
            taken.insert(d.to_string());
        }
    });
    let v2 = fresh_name(&v, &taken);
    redirect_uses(&mut f.body, &v, &v2, &mut rng);
    insert_copies(&mut f.body, &v, &v2);
    if f.params.contains(&v) {
        f.body.insert(0, Stmt::assign(v2.as_str(), Expr::var(v.as_str())));
    }
    out
}
