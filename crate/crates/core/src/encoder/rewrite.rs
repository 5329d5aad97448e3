use super::plan::EncodingPlan;
use super::support::{gen_runtime_support, RESERVED_PREFIX};
use super::{stmt_at_mut, EncodeError};
use crate::minilang::{code_size, Expr, Program, Stmt};
use crate::watermark::ANCHOR_FN;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rewritten {
    pub program: Program,
    /// Bytes each plan entry added, in plan order; 0 for entries left alone.
    pub site_deltas: Vec<i64>,
    /// Bytes added by the runtime support block (0 if it was not needed).
    pub support_bytes: i64,
}

/// Replaces the `k`-th integer literal (preorder) of `stmt`.
fn replace_literal(stmt: &mut Stmt, k: usize, expect: i64, with: Expr) -> bool {
    let mut seen = 0;
    let mut slot: Option<&mut Expr> = None;
    for e in stmt.exprs_mut() {
        find_nth(e, k, &mut seen, &mut slot);
        if slot.is_some() {
            break;
        }
    }
    match slot {
        Some(e) if *e == Expr::Int(expect) => {
            *e = with;
            true
        }
        _ => false,
    }
}

fn find_nth<'a>(e: &'a mut Expr, k: usize, seen: &mut usize, slot: &mut Option<&'a mut Expr>) {
    if slot.is_some() {
        return;
    }
    match e {
        Expr::Int(_) => {
            if *seen == k {
                *slot = Some(e);
            }
            *seen += 1;
        }
        Expr::Binary(_, a, b) => {
            find_nth(a, k, seen, slot);
            find_nth(b, k, seen, slot);
        }
        Expr::Call(_, args) => {
            for a in args {
                find_nth(a, k, seen, slot);
            }
        }
        _ => {}
    }
}

pub fn rewrite(p: &Program, plan: &EncodingPlan) -> Result<Program, EncodeError> {
    rewrite_measured(p, plan).map(|r| r.program)
}

/// [`rewrite`], also reporting the code-size contribution of every site and
/// of the support block. `size(out) - size(p)` is their exact sum.
pub fn rewrite_measured(p: &Program, plan: &EncodingPlan) -> Result<Rewritten, EncodeError> {
    if let Some(f) = p.functions.iter().find(|f| f.name.starts_with(RESERVED_PREFIX)) {
        return Err(EncodeError::AlreadyProtected(f.name.clone()));
    }
    let needs_support = plan.entries.iter().any(|e| e.is_protected());
    if needs_support && p.function(ANCHOR_FN).is_none() {
        return Err(EncodeError::NoWatermark);
    }

    let mut out = p.clone();
    let mut deltas = vec![0i64; plan.entries.len()];
    // Later literals of a statement first, so earlier ordinals stay valid.
    let mut order: Vec<usize> = (0..plan.entries.len()).collect();
    order.sort_by(|&a, &b| plan.entries[b].site.cmp(&plan.entries[a].site));
    for i in order {
        let entry = &plan.entries[i];
        let site = &entry.site;
        let drift = || EncodeError::SiteDrift(site.clone());
        let with = if entry.is_protected() {
            entry.to_expr()
        } else {
            Expr::Int(site.value)
        };
        let before = code_size(&out) as i64;
        let f = out.function_mut(&site.function).ok_or_else(drift)?;
        let stmt = stmt_at_mut(&mut f.body, &site.stmt_path).ok_or_else(drift)?;
        if !replace_literal(stmt, site.literal, site.value, with) {
            return Err(drift());
        }
        deltas[i] = code_size(&out) as i64 - before;
    }

    let mut support_bytes = 0;
    if needs_support {
        let before = code_size(&out) as i64;
        out.functions.extend(gen_runtime_support());
        support_bytes = code_size(&out) as i64 - before;
    }
    Ok(Rewritten {
        program: out,
        site_deltas: deltas,
        support_bytes,
    })
}
