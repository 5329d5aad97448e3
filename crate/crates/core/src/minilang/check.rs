//! Static well-formedness checks: unique names, resolvable calls with the
//! right arity, and conservative definite assignment of locals.

use std::collections::{BTreeSet, HashMap};

use super::ast::*;
use super::parser::is_keyword;
use super::LangError;

pub fn check_program(p: &Program) -> Result<(), LangError> {
    let mut arities: HashMap<&str, usize> = HashMap::new();
    for f in &p.functions {
        if builtin_arity(&f.name).is_some() || is_keyword(&f.name) || is_global(&f.name) {
            return Err(LangError::ReservedName(f.name.clone()));
        }
        if arities.insert(&f.name, f.params.len()).is_some() {
            return Err(LangError::DuplicateFunction(f.name.clone()));
        }
        let mut seen = BTreeSet::new();
        for param in &f.params {
            if !seen.insert(param) {
                return Err(LangError::DuplicateParam {
                    function: f.name.clone(),
                    param: param.clone(),
                });
            }
        }
    }
    if !arities.contains_key("main") {
        return Err(LangError::NoMain);
    }

    for f in &p.functions {
        let mut calls = Ok(());
        for_each_stmt(&f.body, &mut |s| {
            if calls.is_err() {
                return;
            }
            if let Stmt::Call { name, args } = s {
                calls = check_call(&arities, &f.name, name, args.len());
            }
            for e in s.exprs() {
                e.walk(&mut |e| {
                    if let (Expr::Call(name, args), Ok(())) = (e, &calls) {
                        calls = check_call(&arities, &f.name, name, args.len());
                    }
                });
            }
        });
        calls?;

        let assigned: BTreeSet<String> = f.params.iter().cloned().collect();
        check_body(&f.name, &f.body, Some(assigned))?;
    }
    Ok(())
}

fn check_call(arities: &HashMap<&str, usize>, caller: &str, name: &str, argc: usize) -> Result<(), LangError> {
    let expected = builtin_arity(name)
        .or_else(|| arities.get(name).copied())
        .ok_or_else(|| LangError::UndefinedFunction {
            caller: caller.to_string(),
            name: name.to_string(),
        })?;
    if expected != argc {
        return Err(LangError::Arity {
            name: name.to_string(),
            expected,
            found: argc,
        });
    }
    Ok(())
}

/// `None` means the point is unreachable (after a return); everything counts
/// as assigned there.
type Assigned = Option<BTreeSet<String>>;

fn require(function: &str, assigned: &Assigned, e: &Expr) -> Result<(), LangError> {
    let Some(set) = assigned else { return Ok(()) };
    for v in e.vars() {
        if !is_global(v) && !set.contains(v) {
            return Err(LangError::UseBeforeAssign {
                function: function.to_string(),
                var: v.to_string(),
            });
        }
    }
    Ok(())
}

fn define(assigned: &mut Assigned, var: &str) {
    if let Some(set) = assigned {
        if !is_global(var) {
            set.insert(var.to_string());
        }
    }
}

fn check_body(function: &str, body: &[Stmt], mut assigned: Assigned) -> Result<Assigned, LangError> {
    for s in body {
        match s {
            Stmt::Assign { var, value } => {
                require(function, &assigned, value)?;
                define(&mut assigned, var);
            }
            Stmt::Alloc { var } => define(&mut assigned, var),
            Stmt::FieldStore { var, value, .. } => {
                require(function, &assigned, &Expr::Var(var.clone()))?;
                require(function, &assigned, value)?;
            }
            Stmt::If {
                cond,
                then_body,
                else_body,
            } => {
                require(function, &assigned, cond)?;
                let a = check_body(function, then_body, assigned.clone())?;
                let b = check_body(function, else_body, assigned.clone())?;
                assigned = match (a, b) {
                    (None, x) | (x, None) => x,
                    (Some(a), Some(b)) => Some(a.intersection(&b).cloned().collect()),
                };
            }
            Stmt::While { cond, body } => {
                require(function, &assigned, cond)?;
                check_body(function, body, assigned.clone())?;
            }
            Stmt::Call { args, .. } => {
                for a in args {
                    require(function, &assigned, a)?;
                }
            }
            Stmt::Return(e) => {
                require(function, &assigned, e)?;
                assigned = None;
            }
            Stmt::Print(e) => require(function, &assigned, e)?,
        }
    }
    Ok(assigned)
}
