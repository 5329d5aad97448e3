use serde::{Deserialize, Serialize};

use super::split::{split_constant, SplitExpr};
use super::support::{DECODE_FN, MAX_LOOKUP_LEAVES};
use super::ConstantSite;
use crate::minilang::{BinOp, Expr};
use crate::ppct::{PlaneTree, SubtreeIndex, TreePath};

/// Encoding of a non-negative constant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EncExpr {
    /// Rank of the watermark subtree at `pathcode`.
    Lookup { path: String, pathcode: i64, expected: i64 },
    Literal { value: i64 },
    Add { lhs: Box<EncExpr>, rhs: Box<EncExpr> },
    Mul { lhs: Box<EncExpr>, rhs: Box<EncExpr> },
}

impl EncExpr {
    /// Evaluates with `decode` standing in for the runtime lookup.
    pub fn eval(&self, decode: &mut impl FnMut(i64) -> Option<i64>) -> Option<i64> {
        match self {
            EncExpr::Lookup { pathcode, .. } => decode(*pathcode),
            EncExpr::Literal { value } => Some(*value),
            EncExpr::Add { lhs, rhs } => lhs.eval(decode)?.checked_add(rhs.eval(decode)?),
            EncExpr::Mul { lhs, rhs } => lhs.eval(decode)?.checked_mul(rhs.eval(decode)?),
        }
    }

    pub fn eval_expected(&self) -> Option<i64> {
        self.eval(&mut |code| self.expected_at(code))
    }

    fn expected_at(&self, code: i64) -> Option<i64> {
        match self {
            EncExpr::Lookup { pathcode, expected, .. } if *pathcode == code => Some(*expected),
            EncExpr::Add { lhs, rhs } | EncExpr::Mul { lhs, rhs } => {
                lhs.expected_at(code).or_else(|| rhs.expected_at(code))
            }
            _ => None,
        }
    }

    /// `(pathcode, expected)` for every lookup, left to right.
    pub fn lookups(&self) -> Vec<(i64, i64)> {
        match self {
            EncExpr::Lookup { pathcode, expected, .. } => vec![(*pathcode, *expected)],
            EncExpr::Literal { .. } => vec![],
            EncExpr::Add { lhs, rhs } | EncExpr::Mul { lhs, rhs } => {
                let mut v = lhs.lookups();
                v.extend(rhs.lookups());
                v
            }
        }
    }

    pub fn residuals(&self) -> Vec<i64> {
        match self {
            EncExpr::Lookup { .. } => vec![],
            EncExpr::Literal { value } => vec![*value],
            EncExpr::Add { lhs, rhs } | EncExpr::Mul { lhs, rhs } => {
                let mut v = lhs.residuals();
                v.extend(rhs.residuals());
                v
            }
        }
    }

    pub fn to_expr(&self) -> Expr {
        match self {
            EncExpr::Lookup { pathcode, .. } => Expr::call(DECODE_FN, vec![Expr::Int(*pathcode)]),
            EncExpr::Literal { value } => Expr::Int(*value),
            EncExpr::Add { lhs, rhs } => Expr::binary(BinOp::Add, lhs.to_expr(), rhs.to_expr()),
            EncExpr::Mul { lhs, rhs } => Expr::binary(BinOp::Mul, lhs.to_expr(), rhs.to_expr()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub site: ConstantSite,
    /// Encodes the absolute value of the literal.
    pub expr: EncExpr,
    /// The literal is negative; the rewrite emits `0 - expr`.
    pub negated: bool,
    /// Splitting hit the depth cap somewhere.
    pub depth_capped: bool,
    /// No lookup at all; the literal stays in place.
    pub residual_only: bool,
}

impl PlanEntry {
    pub fn is_protected(&self) -> bool {
        !self.residual_only
    }

    /// The replacement expression for the literal.
    pub fn to_expr(&self) -> Expr {
        let e = self.expr.to_expr();
        if self.negated {
            Expr::binary(BinOp::Sub, Expr::Int(0), e)
        } else {
            e
        }
    }

    /// Value the replacement produces when every lookup decodes as planned.
    pub fn eval_expected(&self) -> Option<i64> {
        let v = self.expr.eval_expected()?;
        Some(if self.negated { -v } else { v })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingPlan {
    /// Watermark tree the lookups refer to, in `*`/`(LR)` notation.
    pub tree: String,
    pub entries: Vec<PlanEntry>,
}

impl EncodingPlan {
    pub fn lookup_count(&self) -> usize {
        self.entries.iter().map(|e| e.expr.lookups().len()).sum()
    }

    pub fn protected_sites(&self) -> usize {
        self.entries.iter().filter(|e| e.is_protected()).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }
}

/// Subtrees usable as lookups: reachable by an `i64` pathcode and small enough
/// for the in-language rank computation.
pub fn encodable_index(tree: &PlaneTree) -> SubtreeIndex {
    SubtreeIndex::with_filter(tree, |path, sub| {
        path.pathcode().is_some() && sub.leaf_count() <= MAX_LOOKUP_LEAVES
    })
}

fn path_string(path: &TreePath) -> String {
    path.steps().iter().map(|s| format!("{s:?}")).collect()
}

fn to_enc(e: &SplitExpr, index: &SubtreeIndex) -> EncExpr {
    match e {
        SplitExpr::Encoded(v) => {
            let path = index.path_for_rank(*v as u128).expect("encoded values are indexed");
            EncExpr::Lookup {
                path: path_string(path),
                pathcode: path.pathcode().expect("indexed paths fit"),
                expected: *v as i64,
            }
        }
        SplitExpr::Literal(v) => EncExpr::Literal { value: *v as i64 },
        SplitExpr::Add(a, b) => EncExpr::Add {
            lhs: Box::new(to_enc(a, index)),
            rhs: Box::new(to_enc(b, index)),
        },
        SplitExpr::Mul(a, b) => EncExpr::Mul {
            lhs: Box::new(to_enc(a, index)),
            rhs: Box::new(to_enc(b, index)),
        },
    }
}

/// Plans every site against `tree`. Sites whose value has no matching
/// subtree are split; sites that end up with no lookup are flagged
/// `residual_only`.
pub fn plan_encoding(tree: &PlaneTree, sites: &[ConstantSite]) -> EncodingPlan {
    let index = encodable_index(tree);
    let entries = sites
        .iter()
        .map(|site| {
            let magnitude = site.value.unsigned_abs();
            let split = split_constant(magnitude, |v| index.contains(v as u128));
            let expr = to_enc(&split.expr, &index);
            PlanEntry {
                site: site.clone(),
                residual_only: expr.lookups().is_empty(),
                expr,
                negated: site.value < 0,
                depth_capped: split.depth_capped,
            }
        })
        .collect();
    EncodingPlan {
        tree: tree.to_string(),
        entries,
    }
}
