//! Fixed runtime support appended to protected programs.

use std::sync::OnceLock;

use crate::minilang::parser::parse_unchecked;
use crate::minilang::printer::serialize_function;
use crate::minilang::Function;

pub const RESERVED_PREFIX: &str = "__tp_";
pub const DECODE_FN: &str = "__tp_decode";

/// Largest subtree, in leaves, whose rank the support code computes without
/// overflowing 64-bit arithmetic.
pub const MAX_LOOKUP_LEAVES: usize = 30;

// `__tp_leaves` walks the subtree with an explicit heap-allocated stack, so
// decoding shows up in the heap metrics as well as the step count.
const SUPPORT_SRC: &str = r#"
fn __tp_cat(n) {
    c = 1;
    i = 0;
    while (i < n) {
        c = c * (4 * i + 2) / (i + 2);
        i = i + 1;
    }
    return c;
}

fn __tp_leaves(t) {
    n = 0;
    stack = node();
    stack.left = t;
    stack.right = null;
    while (is_null(stack) == 0) {
        cur = stack.left;
        stack = stack.right;
        l = cur.left;
        if (l == cur) {
            n = n + 1;
        } else {
            a = node();
            a.left = cur.right;
            a.right = stack;
            b = node();
            b.left = l;
            b.right = a;
            stack = b;
        }
    }
    return n;
}

fn __tp_local(t) {
    l = t.left;
    if (l == t) {
        return 0;
    }
    r = t.right;
    i = __tp_leaves(l);
    j = __tp_leaves(r);
    k = i + j;
    acc = 0;
    s = 1;
    while (s < i) {
        acc = acc + __tp_cat(s - 1) * __tp_cat(k - s - 1);
        s = s + 1;
    }
    return acc + __tp_local(l) * __tp_cat(j - 1) + __tp_local(r);
}

fn __tp_rank(t) {
    k = __tp_leaves(t);
    off = 0;
    j = 1;
    while (j < k) {
        off = off + __tp_cat(j - 1);
        j = j + 1;
    }
    return off + __tp_local(t);
}

fn __tp_nav(t, code) {
    m = 1;
    while (m <= code / 2) {
        m = m * 2;
    }
    m = m / 2;
    while (m > 0) {
        if (code / m % 2 == 1) {
            t = t.right;
        } else {
            t = t.left;
        }
        m = m / 2;
    }
    return t;
}

fn __tp_decode(code) {
    return __tp_rank(__tp_nav(__wm_anchor(), code));
}
"#;

/// The support functions. Identical for every program.
pub fn gen_runtime_support() -> Vec<Function> {
    static FUNCS: OnceLock<Vec<Function>> = OnceLock::new();
    FUNCS
        .get_or_init(|| {
            parse_unchecked(SUPPORT_SRC)
                .expect("support source parses")
                .functions
        })
        .clone()
}

/// Bytes the support block adds to a serialized non-empty program.
pub fn support_size() -> usize {
    gen_runtime_support()
        .iter()
        .map(|f| 1 + serialize_function(f).len())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::{interpret, parse, serialize, Limits, Program};
    use crate::ppct::{rank, unrank, PlaneTree};
    use crate::watermark::{embed, WatermarkSpec};

    #[test]
    fn support_is_constant() {
        assert_eq!(gen_runtime_support(), gen_runtime_support());
        let names: Vec<_> = gen_runtime_support().into_iter().map(|f| f.name).collect();
        assert!(names.iter().all(|n| n.starts_with(RESERVED_PREFIX)));
        assert!(names.contains(&DECODE_FN.to_string()));
    }

    #[test]
    fn support_size_matches_appended_bytes() {
        for src in ["fn main() { }", "fn main(a) { print(a * 2); } fn f() { return 1; }"] {
            let p = parse(src).unwrap();
            let mut q = p.clone();
            q.functions.extend(gen_runtime_support());
            assert_eq!(serialize(&q).len() - serialize(&p).len(), support_size());
        }
    }

    /// Runs `__tp_rank` on the subtree at every pathcode of `t` and compares
    /// with the host codec.
    fn check_tree(t: &PlaneTree) {
        let w = rank(t).unwrap();
        let mut main = String::from("fn main() {\n");
        let mut expected = Vec::new();
        t.for_each_preorder(|path, sub| {
            let code = path.pathcode().unwrap();
            main.push_str(&format!("print(__tp_decode({code}));\n"));
            expected.push(rank(sub).unwrap() as i64);
        });
        main.push('}');
        let mut prog: Program = crate::minilang::parser::parse_unchecked(&main).unwrap();
        prog = embed(&prog, &WatermarkSpec::new(w, vec![9, 9])).unwrap();
        prog.functions.extend(gen_runtime_support());
        crate::minilang::check::check_program(&prog).unwrap();
        let run = interpret(&prog, &[], Limits::default());
        assert!(run.is_ok(), "{:?}", run.status);
        assert_eq!(run.output, expected, "tree {t}");
    }

    #[test]
    fn in_language_rank_agrees_with_codec_up_to_six_leaves() {
        // Ranks 0..65 are every tree with at most 6 leaves.
        for n in 0..65u128 {
            let t = unrank(n).unwrap();
            assert!(t.leaf_count() <= 6);
            check_tree(&t);
        }
        assert_eq!(unrank(65).unwrap().leaf_count(), 7);
    }

    #[test]
    fn in_language_rank_near_the_leaf_limit() {
        // A left comb and a right comb with the maximum leaf count.
        let mut left = PlaneTree::Leaf;
        let mut right = PlaneTree::Leaf;
        for _ in 1..MAX_LOOKUP_LEAVES {
            left = PlaneTree::node(left, PlaneTree::Leaf);
            right = PlaneTree::node(PlaneTree::Leaf, right);
        }
        let both = PlaneTree::node(left.clone(), right.clone());
        let w = rank(&both).unwrap();
        let p = parse("fn main() { }").unwrap();
        let mut prog = embed(&p, &WatermarkSpec::new(w, vec![9, 9])).unwrap();
        prog.functions.extend(gen_runtime_support());
        let main = prog.function_mut("main").unwrap();
        for code in [2, 3] {
            main.body.push(crate::minilang::Stmt::Print(crate::minilang::Expr::call(
                DECODE_FN,
                vec![crate::minilang::Expr::Int(code)],
            )));
        }
        let run = interpret(&prog, &[], Limits::default());
        assert!(run.is_ok(), "{:?}", run.status);
        assert_eq!(run.output, vec![rank(&left).unwrap() as i64, rank(&right).unwrap() as i64]);
    }
}
