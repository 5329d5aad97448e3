//! Recursive constant splitting.
//!
//! A constant `c` that has no matching subtree is decomposed as
//! `even * current + odd` by repeatedly halving (even values) or decrementing
//! (odd values) until `current` is encodable or at most 1. The `even` and
//! `odd` components are then split the same way.

use std::fmt;

/// Maximum recursion depth before a component is left as a bare literal.
pub const MAX_SPLIT_DEPTH: usize = 8;

/// Loop state. `original == even * current + odd` after every step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitState {
    pub current: u64,
    pub even: u64,
    pub odd: u64,
}

impl SplitState {
    pub fn start(c: u64) -> Self {
        SplitState {
            current: c,
            even: 1,
            odd: 0,
        }
    }

    pub fn value(&self) -> Option<u64> {
        self.even.checked_mul(self.current)?.checked_add(self.odd)
    }

    /// One loop iteration; `None` once the loop would stop on size alone.
    pub fn step(&self) -> Option<SplitState> {
        if self.current <= 1 {
            return None;
        }
        let mut next = *self;
        if self.current % 2 == 0 {
            next.current /= 2;
            next.even *= 2;
        } else {
            next.current -= 1;
            next.odd += self.even;
        }
        Some(next)
    }
}

/// Expression produced by splitting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SplitExpr {
    /// A value that has a matching subtree.
    Encoded(u64),
    /// A value left in the program text.
    Literal(u64),
    Add(Box<SplitExpr>, Box<SplitExpr>),
    Mul(Box<SplitExpr>, Box<SplitExpr>),
}

impl SplitExpr {
    pub fn eval(&self) -> Option<u64> {
        match self {
            SplitExpr::Encoded(v) | SplitExpr::Literal(v) => Some(*v),
            SplitExpr::Add(a, b) => a.eval()?.checked_add(b.eval()?),
            SplitExpr::Mul(a, b) => a.eval()?.checked_mul(b.eval()?),
        }
    }

    pub fn encoded_values(&self) -> Vec<u64> {
        let mut out = Vec::new();
        self.collect(&mut out, true);
        out
    }

    pub fn literals(&self) -> Vec<u64> {
        let mut out = Vec::new();
        self.collect(&mut out, false);
        out
    }

    fn collect(&self, out: &mut Vec<u64>, encoded: bool) {
        match self {
            SplitExpr::Encoded(v) if encoded => out.push(*v),
            SplitExpr::Literal(v) if !encoded => out.push(*v),
            SplitExpr::Add(a, b) | SplitExpr::Mul(a, b) => {
                a.collect(out, encoded);
                b.collect(out, encoded);
            }
            _ => {}
        }
    }
}

impl fmt::Display for SplitExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitExpr::Encoded(v) => write!(f, "[{v}]"),
            SplitExpr::Literal(v) => write!(f, "{v}"),
            SplitExpr::Add(a, b) => write!(f, "{a}+{b}"),
            SplitExpr::Mul(a, b) => {
                let wrap = |e: &SplitExpr| matches!(e, SplitExpr::Add(..));
                if wrap(a) {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                f.write_str("×")?;
                if wrap(b) {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub expr: SplitExpr,
    /// Some component was left as a literal because the depth cap was hit.
    pub depth_capped: bool,
}

/// Runs the halving/decrementing loop on `c` alone, without recursion.
pub fn split_loop(c: u64, encodable: &mut impl FnMut(u64) -> bool) -> SplitState {
    split_loop_observed(c, encodable, &mut |_, _| {})
}

/// Like [`split_loop`], reporting `(c, state)` for the initial state and every
/// state after a step.
pub fn split_loop_observed(
    c: u64,
    encodable: &mut impl FnMut(u64) -> bool,
    observe: &mut impl FnMut(u64, &SplitState),
) -> SplitState {
    let mut state = SplitState::start(c);
    observe(c, &state);
    while !encodable(state.current) {
        match state.step() {
            Some(next) => state = next,
            None => break,
        }
        observe(c, &state);
    }
    state
}

pub fn split_constant(c: u64, mut encodable: impl FnMut(u64) -> bool) -> Split {
    split_constant_observed(c, &mut encodable, &mut |_, _| {})
}

/// [`split_constant`] with an observer called with `(value being split, state)`
/// on every loop state at every recursion level.
pub fn split_constant_observed(
    c: u64,
    encodable: &mut impl FnMut(u64) -> bool,
    observe: &mut impl FnMut(u64, &SplitState),
) -> Split {
    let mut capped = false;
    let expr = split_value(c, 0, encodable, observe, &mut capped);
    Split {
        expr,
        depth_capped: capped,
    }
}

fn split_value(
    x: u64,
    depth: usize,
    encodable: &mut impl FnMut(u64) -> bool,
    observe: &mut impl FnMut(u64, &SplitState),
    capped: &mut bool,
) -> SplitExpr {
    if encodable(x) {
        return SplitExpr::Encoded(x);
    }
    if x <= 1 {
        return SplitExpr::Literal(x);
    }
    if depth >= MAX_SPLIT_DEPTH {
        *capped = true;
        return SplitExpr::Literal(x);
    }
    let st = split_loop_observed(x, encodable, observe);
    // A power of two halves all the way down to 1 and comes back as
    // `x * 1 + 0`; splitting `even` again would repeat forever.
    if st.even == x {
        return SplitExpr::Literal(x);
    }
    let current = if encodable(st.current) {
        SplitExpr::Encoded(st.current)
    } else {
        SplitExpr::Literal(st.current)
    };
    let product = if st.even == 1 {
        current
    } else {
        let even = split_value(st.even, depth + 1, encodable, observe, capped);
        SplitExpr::Mul(Box::new(even), Box::new(current))
    };
    if st.odd == 0 {
        product
    } else {
        let odd = split_value(st.odd, depth + 1, encodable, observe, capped);
        SplitExpr::Add(Box::new(product), Box::new(odd))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn never(_: u64) -> bool {
        false
    }

    #[test]
    fn six_traces_to_4x1_plus_2() {
        let mut trace = Vec::new();
        let st = split_loop_observed(6, &mut never, &mut |_, s| trace.push(*s));
        let triples: Vec<_> = trace.iter().map(|s| (s.current, s.even, s.odd)).collect();
        assert_eq!(triples, vec![(6, 1, 0), (3, 2, 0), (2, 2, 2), (1, 4, 2)]);
        assert_eq!((st.even, st.current, st.odd), (4, 1, 2));
        assert_eq!(split_constant(6, never).expr.to_string(), "4×1+2");
    }

    #[test]
    fn thirteen_traces_to_8x1_plus_5() {
        let st = split_loop(13, &mut never);
        assert_eq!((st.even, st.current, st.odd), (8, 1, 5));
        let s = split_constant(13, never);
        assert_eq!(s.expr.eval(), Some(13));
        assert_eq!(s.expr.to_string(), "8×1+4×1+1");
    }

    #[test]
    fn literal_odd_step_does_not_reconstruct() {
        // Adding 1 instead of `even` on odd steps loses information for 6.
        let (mut c, mut even, mut odd) = (6u64, 1u64, 0u64);
        while c > 1 {
            if c % 2 == 0 {
                c /= 2;
                even *= 2;
            } else {
                c -= 1;
                odd += 1;
            }
        }
        assert_eq!(even * c + odd, 5);
    }

    #[test]
    fn zero_and_one_are_plain_literals() {
        assert_eq!(split_constant(0, never).expr, SplitExpr::Literal(0));
        assert_eq!(split_constant(1, never).expr, SplitExpr::Literal(1));
        let st = split_loop(0, &mut never);
        assert_eq!(st, SplitState::start(0));
    }

    #[test]
    fn encodable_value_is_used_directly() {
        let s = split_constant(472, |v| v == 472);
        assert_eq!(s.expr, SplitExpr::Encoded(472));
    }

    #[test]
    fn loop_stops_at_encodable_current() {
        // 20 -> 10 (even 2) -> 5 (even 4); 5 is encodable.
        let s = split_constant(20, |v| v == 5);
        assert_eq!(s.expr.to_string(), "4×[5]");
        let s = split_constant(21, |v| v == 5);
        assert_eq!(s.expr.eval(), Some(21));
        assert_eq!(s.expr.encoded_values(), vec![5]);
    }

    #[test]
    fn powers_of_two_terminate() {
        for k in 0..63 {
            let s = split_constant(1u64 << k, never);
            assert_eq!(s.expr, SplitExpr::Literal(1u64 << k));
            assert!(!s.depth_capped);
        }
    }

    #[test]
    fn depth_cap_is_flagged() {
        // Only 3 is encodable, so every component of a large value keeps
        // splitting its odd part.
        let s = split_constant(u64::MAX >> 1, |v| v == 3);
        assert_eq!(s.expr.eval(), Some(u64::MAX >> 1));
        assert!(s.depth_capped);
    }

    #[test]
    fn exhaustive_small_reconstruction() {
        for c in 0..5000u64 {
            let s = split_constant_observed(c, &mut |v| v % 7 == 3, &mut |orig, st| {
                assert_eq!(st.value(), Some(orig));
            });
            assert_eq!(s.expr.eval(), Some(c), "c = {c}");
        }
    }
}
