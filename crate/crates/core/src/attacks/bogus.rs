use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::analysis::{def_of, uses_of};
use super::rng;
use crate::minilang::ast::for_each_stmt;
use crate::minilang::{Expr, Field, Program, Stmt};

fn reads_data(p: &Program) -> bool {
    let mut found = false;
    for f in &p.functions {
        for_each_stmt(&f.body, &mut |s| {
            for e in s.exprs() {
                e.walk(&mut |e| found |= matches!(e, Expr::Field(_, Field::Data)));
            }
        });
    }
    found
}

/// True if the fresh node in `x` gets its `data` overwritten, or `x` is
/// rebound, before anything else can see it.
fn data_is_dead(x: &str, rest: &[Stmt]) -> bool {
    for s in rest {
        if s.is_control() {
            return false;
        }
        if let Stmt::FieldStore {
            var,
            field: Field::Data,
            value,
        } = s
        {
            if var == x && !value.vars().contains(&x) {
                return true;
            }
        }
        if uses_of(s).contains(&x) {
            return false;
        }
        if def_of(s) == Some(x) {
            return true;
        }
    }
    false
}

fn insert_stores(body: &mut Vec<Stmt>, any_reads: bool, rng: &mut ChaCha8Rng) {
    let old = std::mem::take(body);
    for (i, mut s) in old.iter().cloned().enumerate() {
        for b in s.bodies_mut() {
            insert_stores(b, any_reads, rng);
        }
        let alloc = match &s {
            Stmt::Alloc { var } => Some(var.clone()),
            _ => None,
        };
        body.push(s);
        if let Some(var) = alloc {
            let chosen = rng.gen_bool(0.5);
            let k: i64 = rng.gen_range(1..=1000);
            if chosen && (!any_reads || data_is_dead(&var, &old[i + 1..])) {
                body.push(Stmt::store(var, Field::Data, Expr::Int(k)));
            }
        }
    }
}

/// Inserts `x.data = k;` after a random subset of allocations whose data
/// field is never observed.
pub fn bogus_field(p: &Program, seed: u64) -> Program {
    let mut rng = rng(seed);
    let any_reads = reads_data(p);
    let mut out = p.clone();
    for f in &mut out.functions {
        insert_stores(&mut f.body, any_reads, &mut rng);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::{interpret, parse, serialize, Limits};

    #[test]
    fn no_allocs_is_identity() {
        let p = parse("fn main() { print(3); }").unwrap();
        assert_eq!(bogus_field(&p, 5), p);
    }

    #[test]
    fn inserts_stores_when_data_is_never_read() {
        let p = parse("fn main() { a = node(); b = node(); c = node(); d = node(); a.left = b; print(1); }").unwrap();
        let texts: Vec<String> = (0..10).map(|s| serialize(&bogus_field(&p, s))).collect();
        assert!(texts.iter().any(|t| t.contains(".data = ")));
    }

    #[test]
    fn respects_data_reads() {
        let p = parse("fn main() { a = node(); print(a.data); b = node(); b.data = 4; print(b.data); }").unwrap();
        for seed in 0..20 {
            let q = bogus_field(&p, seed);
            assert_eq!(interpret(&q, &[], Limits::default()).output, vec![0, 4]);
            let text = serialize(&q);
            assert!(!text.contains("a.data = "), "{text}");
        }
    }

    #[test]
    fn dead_data_analysis() {
        let s = parse("fn main() { x = node(); y = 1; x.data = y; print(x.data); }").unwrap();
        let body = &s.functions[0].body;
        assert!(data_is_dead("x", &body[1..]));
        let s = parse("fn main() { x = node(); y = x; x.data = 2; print(y.data); }").unwrap();
        assert!(!data_is_dead("x", &s.functions[0].body[1..]));
    }
}
