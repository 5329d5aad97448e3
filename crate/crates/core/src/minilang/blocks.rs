use std::ops::Range;

use super::ast::{Function, Stmt};

/// Location of a statement body inside a function: alternating statement
/// index and body index (`0` = then / loop body, `1` = else). The function
/// body itself is the empty path.
pub type BodyPath = Vec<usize>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicBlock<'a> {
    pub body: BodyPath,
    pub range: Range<usize>,
    pub stmts: &'a [Stmt],
}

/// Maximal runs of non-control statements in one body (nested bodies excluded).
pub fn straight_runs(body: &[Stmt]) -> Vec<Range<usize>> {
    let mut runs = Vec::new();
    let mut start = 0;
    for (i, s) in body.iter().enumerate() {
        if s.is_control() {
            if start < i {
                runs.push(start..i);
            }
            start = i + 1;
        }
    }
    if start < body.len() {
        runs.push(start..body.len());
    }
    runs
}

/// All basic blocks of `f`, in source order.
pub fn basic_blocks(f: &Function) -> Vec<BasicBlock<'_>> {
    fn walk<'a>(body: &'a [Stmt], path: &mut BodyPath, out: &mut Vec<BasicBlock<'a>>) {
        let mut start = 0;
        for (i, s) in body.iter().enumerate() {
            if !s.is_control() {
                continue;
            }
            if start < i {
                out.push(BasicBlock {
                    body: path.clone(),
                    range: start..i,
                    stmts: &body[start..i],
                });
            }
            start = i + 1;
            for (b, nested) in s.bodies().into_iter().enumerate() {
                path.extend([i, b]);
                walk(nested, path, out);
                path.truncate(path.len() - 2);
            }
        }
        if start < body.len() {
            out.push(BasicBlock {
                body: path.clone(),
                range: start..body.len(),
                stmts: &body[start..],
            });
        }
    }
    let mut out = Vec::new();
    walk(&f.body, &mut Vec::new(), &mut out);
    out
}

/// Resolves a [`BodyPath`] to the body it names.
pub fn body_at<'a>(f: &'a Function, path: &[usize]) -> Option<&'a [Stmt]> {
    let mut body: &[Stmt] = &f.body;
    for pair in path.chunks(2) {
        let [i, b] = pair else { return None };
        body = body.get(*i)?.bodies().get(*b)?.as_slice();
    }
    Some(body)
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn straight_line_body_is_one_block() {
        let p = parse("fn main() { a = 1; b = 2; c = 3; }").unwrap();
        let blocks = basic_blocks(&p.functions[0]);
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].stmts.len(), 3);
    }

    #[test]
    fn control_flow_splits_blocks() {
        let p = parse("fn main(x) { a = 1; if (x) { b = 2; c = 3; } else { d = 4; } e = 5; return e; }")
            .unwrap();
        let blocks = basic_blocks(&p.functions[0]);
        let shape: Vec<(BodyPath, usize)> = blocks.iter().map(|b| (b.body.clone(), b.stmts.len())).collect();
        assert_eq!(
            shape,
            vec![(vec![], 1), (vec![1, 0], 2), (vec![1, 1], 1), (vec![], 1)]
        );
        assert_eq!(body_at(&p.functions[0], &[1, 1]).unwrap().len(), 1);
    }

    #[test]
    fn runs_skip_control_statements() {
        let p = parse("fn main(x) { while (x) { x = 0; } if (x) { } else { } a = 1; }").unwrap();
        assert_eq!(straight_runs(&p.functions[0].body), vec![2..3]);
    }
}
