use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::analysis::conflicts;
use super::rng;
use crate::minilang::blocks::straight_runs;
use crate::minilang::{Program, Stmt};

/// Seeded random topological order of one straight-line run.
fn shuffle_run(run: &[Stmt], rng: &mut ChaCha8Rng) -> Vec<Stmt> {
    let n = run.len();
    let preds: Vec<Vec<usize>> = (0..n)
        .map(|j| (0..j).filter(|&i| conflicts(&run[i], &run[j])).collect())
        .collect();
    let mut placed = vec![false; n];
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let ready: Vec<usize> = (0..n)
            .filter(|&j| !placed[j] && preds[j].iter().all(|&i| placed[i]))
            .collect();
        let pick = ready[rng.gen_range(0..ready.len())];
        placed[pick] = true;
        out.push(run[pick].clone());
    }
    out
}

fn reorder_body(body: &mut [Stmt], rng: &mut ChaCha8Rng) {
    for r in straight_runs(body) {
        let shuffled = shuffle_run(&body[r.clone()], rng);
        body[r].clone_from_slice(&shuffled);
    }
    for s in body.iter_mut() {
        for b in s.bodies_mut() {
            reorder_body(b, rng);
        }
    }
}

/// Permutes statements within every basic block, respecting data, heap,
/// print and call dependences.
pub fn reorder(p: &Program, seed: u64) -> Program {
    let mut rng = rng(seed);
    let mut out = p.clone();
    for f in &mut out.functions {
        reorder_body(&mut f.body, &mut rng);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::{interpret, parse, serialize, Limits};

    #[test]
    fn independent_statements_can_swap() {
        let p = parse("fn main() { a = 1; b = 2; print(a + b); }").unwrap();
        let texts: std::collections::BTreeSet<String> = (0..20).map(|s| serialize(&reorder(&p, s))).collect();
        assert_eq!(texts.len(), 2);
    }

    #[test]
    fn dependent_statements_never_swap() {
        let p = parse("fn main() { a = 1; b = a; print(b); }").unwrap();
        for seed in 0..20 {
            assert_eq!(reorder(&p, seed), p);
        }
    }

    #[test]
    fn nested_blocks_and_output() {
        let p = parse(
            "fn main(n) { s = 0; i = 0; while (i < n) { x = i * 2; y = i + 7; s = s + x * y; i = i + 1; }
             t = 4; u = 5; print(s); print(t * u); }",
        )
        .unwrap();
        let want = interpret(&p, &[6], Limits::default()).output;
        let mut changed = false;
        for seed in 0..20 {
            let q = reorder(&p, seed);
            changed |= q != p;
            assert_eq!(interpret(&q, &[6], Limits::default()).output, want);
        }
        assert!(changed);
    }

    #[test]
    fn deterministic() {
        let p = parse("fn main() { a = 1; b = 2; c = 3; d = 4; print(a + b + c + d); }").unwrap();
        assert_eq!(reorder(&p, 7), reorder(&p, 7));
    }
}
