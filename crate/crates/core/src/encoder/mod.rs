//! Tamper-proofing by constant encoding: integer literals are replaced with
//! calls that decode subtrees of the embedded watermark tree, so the program
//! computes wrong values (or traps) once the tree is modified.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minilang::{Expr, Program, Stmt};
use crate::ppct::PlaneTree;
use crate::watermark;

pub mod plan;
pub mod rewrite;
pub mod split;
pub mod support;

pub use plan::{encodable_index, plan_encoding, EncExpr, EncodingPlan, PlanEntry};
pub use rewrite::{rewrite, rewrite_measured, Rewritten};
pub use split::{split_constant, split_constant_observed, split_loop, Split, SplitExpr, SplitState, MAX_SPLIT_DEPTH};
pub use support::{gen_runtime_support, support_size, DECODE_FN, MAX_LOOKUP_LEAVES};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("site {0} no longer matches the program")]
    SiteDrift(ConstantSite),
    #[error("program already contains runtime support function `{0}`")]
    AlreadyProtected(String),
    #[error("program has no watermark accessor `{}`", watermark::ANCHOR_FN)]
    NoWatermark,
    #[error("bad policy `{0}`: expected `all` or `list:v1,v2,...`")]
    BadPolicy(String),
}

/// Location of one integer literal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConstantSite {
    pub function: String,
    /// Statement index, then alternating (body index, statement index) pairs
    /// for each nested body entered.
    pub stmt_path: Vec<usize>,
    /// Preorder position among the statement's integer literals.
    pub literal: usize,
    pub value: i64,
}

impl fmt::Display for ConstantSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path: Vec<String> = self.stmt_path.iter().map(|i| i.to_string()).collect();
        write!(f, "{}[{}]#{}={}", self.function, path.join("."), self.literal, self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Selection {
    All,
    Values(Vec<i64>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy {
    pub selection: Selection,
    /// Also select 0, 1 and -1 under [`Selection::All`].
    pub include_trivial: bool,
}

impl Policy {
    pub fn all() -> Self {
        Policy {
            selection: Selection::All,
            include_trivial: false,
        }
    }

    pub fn values(values: Vec<i64>) -> Self {
        Policy {
            selection: Selection::Values(values),
            include_trivial: false,
        }
    }

    fn accepts(&self, v: i64) -> bool {
        if v == i64::MIN {
            return false;
        }
        match &self.selection {
            Selection::All => self.include_trivial || v.unsigned_abs() > 1,
            // Listed values are taken as asked, trivial or not.
            Selection::Values(vs) => vs.contains(&v),
        }
    }
}

impl FromStr for Policy {
    type Err = EncodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || EncodeError::BadPolicy(s.to_string());
        if s == "all" {
            return Ok(Policy::all());
        }
        let list = s.strip_prefix("list:").ok_or_else(bad)?;
        let values = list
            .split(',')
            .map(|v| v.trim().parse::<i64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| bad())?;
        Ok(Policy::values(values))
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.selection {
            Selection::All => f.write_str("all"),
            Selection::Values(vs) => {
                let vs: Vec<String> = vs.iter().map(|v| v.to_string()).collect();
                write!(f, "list:{}", vs.join(","))
            }
        }
    }
}

/// True for functions generated by the toolchain, whose literals are never
/// selected.
pub fn is_generated(name: &str) -> bool {
    name.starts_with(watermark::RESERVED_PREFIX) || name.starts_with(support::RESERVED_PREFIX)
}

fn literals_of(stmt: &Stmt) -> Vec<i64> {
    let mut out = Vec::new();
    for e in stmt.exprs() {
        e.walk(&mut |e| {
            if let Expr::Int(v) = e {
                out.push(*v);
            }
        });
    }
    out
}

fn collect_sites(function: &str, body: &[Stmt], prefix: &mut Vec<usize>, policy: &Policy, out: &mut Vec<ConstantSite>) {
    for (i, s) in body.iter().enumerate() {
        prefix.push(i);
        for (k, v) in literals_of(s).into_iter().enumerate() {
            if policy.accepts(v) {
                out.push(ConstantSite {
                    function: function.to_string(),
                    stmt_path: prefix.clone(),
                    literal: k,
                    value: v,
                });
            }
        }
        for (b, body) in s.bodies().into_iter().enumerate() {
            prefix.push(b);
            collect_sites(function, body, prefix, policy, out);
            prefix.pop();
        }
        prefix.pop();
    }
}

/// Literal sites in program order.
pub fn select_constants(p: &Program, policy: &Policy) -> Vec<ConstantSite> {
    let mut out = Vec::new();
    for f in p.functions.iter().filter(|f| !is_generated(&f.name)) {
        collect_sites(&f.name, &f.body, &mut Vec::new(), policy, &mut out);
    }
    out
}

pub(crate) fn stmt_at_mut<'a>(body: &'a mut [Stmt], path: &[usize]) -> Option<&'a mut Stmt> {
    let (&first, rest) = path.split_first()?;
    let stmt = body.get_mut(first)?;
    match rest {
        [] => Some(stmt),
        [b, tail @ ..] => {
            let inner = stmt.bodies_mut().into_iter().nth(*b)?;
            stmt_at_mut(inner, tail)
        }
    }
}

/// Result of [`protect`].
#[derive(Debug, Clone)]
pub struct Protected {
    pub program: Program,
    pub plan: EncodingPlan,
    pub rewritten: Rewritten,
}

/// Selects, plans and rewrites in one go. `tree` is the watermark tree
/// embedded in `p`.
pub fn protect(p: &Program, tree: &PlaneTree, policy: &Policy) -> Result<Protected, EncodeError> {
    let sites = select_constants(p, policy);
    let plan = plan_encoding(tree, &sites);
    let rewritten = rewrite_measured(p, &plan)?;
    Ok(Protected {
        program: rewritten.program.clone(),
        plan,
        rewritten,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::parse;

    #[test]
    fn no_literals_no_sites() {
        let p = parse("fn main(a) { print(a); }").unwrap();
        assert!(select_constants(&p, &Policy::all()).is_empty());
    }

    #[test]
    fn policy_all_and_list() {
        let p = parse("fn main() { print(13); print(6); }").unwrap();
        assert_eq!(select_constants(&p, &Policy::all()).len(), 2);
        let sites = select_constants(&p, &"list:13".parse().unwrap());
        assert_eq!(sites.len(), 1);
        assert_eq!(sites[0].value, 13);
        assert_eq!(sites[0].stmt_path, vec![0]);
    }

    #[test]
    fn trivial_literals_are_opt_in() {
        let p = parse("fn main() { x = 0 + 1 - -1 + 2; print(x); }").unwrap();
        assert_eq!(select_constants(&p, &Policy::all()).len(), 1);
        let mut all = Policy::all();
        all.include_trivial = true;
        let sites = select_constants(&p, &all);
        assert_eq!(sites.iter().map(|s| s.literal).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn nested_paths_and_generated_functions() {
        let p = parse(
            "fn main(a) { if (a < 10) { print(7); } else { while (a > 20) { a = a - 3; } } }
             fn __tp_x() { return 99; }",
        )
        .unwrap();
        let sites = select_constants(&p, &Policy::all());
        let found: Vec<_> = sites.iter().map(|s| (s.stmt_path.clone(), s.literal, s.value)).collect();
        assert_eq!(
            found,
            vec![
                (vec![0], 0, 10),
                (vec![0, 0, 0], 0, 7),
                (vec![0, 1, 0], 0, 20),
                (vec![0, 1, 0, 0, 0], 0, 3),
            ]
        );
    }

    #[test]
    fn policy_text_round_trip() {
        for s in ["all", "list:13,6", "list:-4"] {
            assert_eq!(s.parse::<Policy>().unwrap().to_string(), s);
        }
        assert!("some".parse::<Policy>().is_err());
        assert!("list:x".parse::<Policy>().is_err());
    }
}
