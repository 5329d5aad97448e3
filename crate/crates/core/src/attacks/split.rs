use rand::Rng;

use super::analysis::{live_in, locals_in_order, Ty, Types, VarSet};
use super::rng;
use crate::minilang::ast::for_each_stmt;
use crate::minilang::check::check_program;
use crate::minilang::{Expr, Field, Function, Program, Stmt};

fn has_return(body: &[Stmt]) -> bool {
    let mut found = false;
    for_each_stmt(body, &mut |s| found |= matches!(s, Stmt::Return(_)));
    found
}

fn unique_fn_name(p: &Program, base: &str) -> String {
    (1..)
        .map(|n| format!("{base}_part{n}"))
        .find(|c| p.function(c).is_none())
        .expect("unbounded")
}

fn fresh(base: &str, taken: &mut VarSet) -> String {
    let name = if taken.contains(base) {
        super::analysis::fresh_name(base, taken)
    } else {
        base.to_string()
    };
    taken.insert(name.clone());
    name
}

/// Splits function `idx` at its midpoint, or returns `None` if that is not
/// possible.
fn split_at_midpoint(p: &Program, types: &Types, idx: usize) -> Option<Program> {
    let f = &p.functions[idx];
    if f.body.len() < 2 {
        return None;
    }
    let cut = f.body.len() / 2;
    let (first, rest) = f.body.split_at(cut);
    if has_return(first) {
        return None;
    }
    // Values the second half reads that the first half may have produced.
    let carried: Vec<(String, Field)> = live_in(rest)
        .into_iter()
        .map(|v| match types.var(&f.name, &v) {
            Ty::Int => Some((v, Field::Data)),
            Ty::Ref => Some((v, Field::Left)),
            Ty::Bottom | Ty::Top => None,
        })
        .collect::<Option<_>>()?;

    let helper_name = unique_fn_name(p, &f.name);
    let mut taken: VarSet = locals_in_order(f).into_iter().collect();
    let chain = fresh("carry", &mut taken);
    let link = fresh("link", &mut taken);

    let mut helper_body = first.to_vec();
    let mut main_body = Vec::new();
    let args: Vec<Expr> = f.params.iter().map(|a| Expr::var(a.as_str())).collect();
    if carried.is_empty() {
        main_body.push(Stmt::call(helper_name.as_str(), args));
    } else {
        helper_body.push(Stmt::assign(chain.as_str(), Expr::Null));
        for (v, field) in carried.iter().rev() {
            helper_body.push(Stmt::alloc(link.as_str()));
            helper_body.push(Stmt::store(link.as_str(), *field, Expr::var(v.as_str())));
            helper_body.push(Stmt::store(link.as_str(), Field::Right, Expr::var(chain.as_str())));
            helper_body.push(Stmt::assign(chain.as_str(), Expr::var(link.as_str())));
        }
        helper_body.push(Stmt::Return(Expr::var(chain.as_str())));
        main_body.push(Stmt::assign(chain.as_str(), Expr::call(helper_name.as_str(), args)));
        for (i, (v, field)) in carried.iter().enumerate() {
            main_body.push(Stmt::assign(v.as_str(), Expr::field(chain.as_str(), *field)));
            if i + 1 < carried.len() {
                main_body.push(Stmt::assign(chain.as_str(), Expr::field(chain.as_str(), Field::Right)));
            }
        }
    }
    main_body.extend_from_slice(rest);

    let mut out = p.clone();
    let helper = Function::new(helper_name, f.params.clone(), helper_body);
    out.functions[idx].body = main_body;
    out.functions.insert(idx + 1, helper);
    check_program(&out).ok()?;
    Some(out)
}

/// Moves the first half of a randomly chosen function into a new helper.
/// Returns `None` when no function can be split.
pub fn split_function_checked(p: &Program, seed: u64) -> Option<Program> {
    let types = Types::infer(p);
    let candidates: Vec<Program> = (0..p.functions.len())
        .filter_map(|i| split_at_midpoint(p, &types, i))
        .collect();
    if candidates.is_empty() {
        return None;
    }
    let pick = rng(seed).gen_range(0..candidates.len());
    candidates.into_iter().nth(pick)
}

/// [`split_function_checked`], falling back to the unchanged program.
pub fn split_function(p: &Program, seed: u64) -> Program {
    split_function_checked(p, seed).unwrap_or_else(|| p.clone())
}
