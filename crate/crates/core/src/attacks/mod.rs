//! Semantics-preserving transformations used to probe watermark resilience,
//! and the assessment that runs them against watermarked and protected builds.
//!
//! Every transformation preserves the printed output of runs that complete.
//! The function splitter and the variable duplicator are adaptations of
//! class splitting and register duplication to a language with functions and
//! locals.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::minilang::{interpret, Limits, Program};
use crate::watermark::extract;

mod analysis;
mod bogus;
mod duplicate;
mod reassign;
mod reorder;
mod split;

pub use bogus::bogus_field;
pub use duplicate::duplicate_variable;
pub use reassign::reassign_variables;
pub use reorder::reorder;
pub use split::{split_function, split_function_checked};

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    Reorder,
    SplitFunction,
    DuplicateVariable,
    BogusField,
    ReassignVariables,
}

impl AttackKind {
    pub const ALL: [AttackKind; 5] = [
        AttackKind::Reorder,
        AttackKind::SplitFunction,
        AttackKind::DuplicateVariable,
        AttackKind::BogusField,
        AttackKind::ReassignVariables,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttackKind::Reorder => "reorder",
            AttackKind::SplitFunction => "split_function",
            AttackKind::DuplicateVariable => "duplicate_variable",
            AttackKind::BogusField => "bogus_field",
            AttackKind::ReassignVariables => "reassign_variables",
        }
    }

    /// Attacks translated from JVM class or register vocabulary.
    pub fn is_adapted(self) -> bool {
        matches!(self, AttackKind::SplitFunction | AttackKind::DuplicateVariable)
    }

    /// Applies the attack. `seed` is ignored by the deterministic reassigner.
    pub fn apply(self, p: &Program, seed: u64) -> Program {
        match self {
            AttackKind::Reorder => reorder(p, seed),
            AttackKind::SplitFunction => split_function(p, seed),
            AttackKind::DuplicateVariable => duplicate_variable(p, seed),
            AttackKind::BogusField => bogus_field(p, seed),
            AttackKind::ReassignVariables => reassign_variables(p),
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AttackKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown attack `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    NotAffected,
    Affected,
}

impl Verdict {
    pub fn from_flags(runs_ok: bool, watermark_survives: bool) -> Self {
        if runs_ok && watermark_survives {
            Verdict::NotAffected
        } else {
            Verdict::Affected
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::NotAffected => "Not affected",
            Verdict::Affected => "Affected",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub kind: AttackKind,
    /// The transformation changed the program.
    pub changed: bool,
    /// Every input ran to completion with the pre-attack output.
    pub runs_ok: bool,
    /// Extraction on the trigger input still yields the watermark.
    pub watermark_survives: bool,
    /// Printed output matched on every input, regardless of run status.
    pub constants_intact: bool,
    pub verdict: Verdict,
}

impl AttackOutcome {
    pub fn verdict_consistent(&self) -> bool {
        self.verdict == Verdict::from_flags(self.runs_ok, self.watermark_survives)
    }
}

/// Inputs and limits shared by every assessment in a run.
#[derive(Debug, Clone)]
pub struct AssessConfig<'a> {
    pub watermark: u128,
    pub trigger: &'a [i64],
    pub inputs: &'a [Vec<i64>],
    pub limits: Limits,
}

fn outcome(kind: AttackKind, before: &Program, after: &Program, cfg: &AssessConfig) -> AttackOutcome {
    let mut runs_ok = true;
    let mut constants_intact = true;
    for args in cfg.inputs {
        let want = interpret(before, args, cfg.limits);
        let got = interpret(after, args, cfg.limits);
        let same = got.output == want.output;
        constants_intact &= same;
        runs_ok &= same && got.is_ok() && want.is_ok();
    }
    let watermark_survives = extract(after, cfg.trigger, cfg.limits) == Ok(cfg.watermark);
    AttackOutcome {
        kind,
        changed: after != before,
        runs_ok,
        watermark_survives,
        constants_intact,
        verdict: Verdict::from_flags(runs_ok, watermark_survives),
    }
}

/// Applies `transform` to both builds and assesses each. Run failures are
/// recorded as `runs_ok = false`, never propagated.
pub fn assess_with(
    p_wm: &Program,
    p_tp: &Program,
    kind: AttackKind,
    cfg: &AssessConfig,
    transform: impl Fn(&Program) -> Program,
) -> (AttackOutcome, AttackOutcome) {
    let wm = outcome(kind, p_wm, &transform(p_wm), cfg);
    let tp = outcome(kind, p_tp, &transform(p_tp), cfg);
    (wm, tp)
}

/// Outcomes of attack `kind` with `seed` on the watermarked and protected
/// builds, in that order.
pub fn assess(
    p_wm: &Program,
    p_tp: &Program,
    kind: AttackKind,
    seed: u64,
    cfg: &AssessConfig,
) -> (AttackOutcome, AttackOutcome) {
    assess_with(p_wm, p_tp, kind, cfg, |p| kind.apply(p, seed))
}
