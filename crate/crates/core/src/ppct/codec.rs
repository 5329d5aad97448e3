//! Integer <-> tree bijection.
//!
//! Trees are ordered first by leaf count, then within a size by
//! `(leaves in left subtree, rank of left, rank of right)`. A tree with `k`
//! leaves therefore has global rank `offset(k) + local`, where `offset(k)` is
//! the number of trees with fewer leaves and `local < catalan(k - 1)`.

use std::sync::OnceLock;

use super::{PlaneTree, PpctError};

/// Default cap on the number of leaves a decoded tree may have.
pub const DEFAULT_MAX_LEAVES: usize = 64;

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Every Catalan number representable in a `u128`.
fn catalan_table() -> &'static [u128] {
    static TABLE: OnceLock<Vec<u128>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = vec![1u128];
        loop {
            let n = (table.len() - 1) as u128;
            let c = *table.last().unwrap();
            // C(n+1) = C(n) * (4n+2) / (n+2), reduced first so the only overflow
            // reported is a genuine one.
            let g = gcd(c, n + 2);
            let den = (n + 2) / g;
            debug_assert_eq!((4 * n + 2) % den, 0);
            match (c / g).checked_mul((4 * n + 2) / den) {
                Some(next) => table.push(next),
                None => break,
            }
        }
        table
    })
}

/// The `k`-th Catalan number, i.e. the number of plane trees with `k + 1` leaves.
pub fn catalan(k: usize) -> Result<u128, PpctError> {
    catalan_table()
        .get(k)
        .copied()
        .ok_or(PpctError::Overflow)
}

/// Number of trees with fewer than `k` leaves (`k >= 1`).
fn offset(k: usize) -> Result<u128, PpctError> {
    let mut sum: u128 = 0;
    for j in 1..k {
        sum = sum
            .checked_add(catalan(j - 1)?)
            .ok_or(PpctError::Overflow)?;
    }
    Ok(sum)
}

/// Rank of `t` among the trees with the same leaf count.
fn local_rank(t: &PlaneTree) -> Result<(usize, u128), PpctError> {
    match t {
        PlaneTree::Leaf => Ok((1, 0)),
        PlaneTree::Node(l, r) => {
            let (i, lr) = local_rank(l)?;
            let (j, rr) = local_rank(r)?;
            let k = i + j;
            let mut acc: u128 = 0;
            for split in 1..i {
                let block = catalan(split - 1)?
                    .checked_mul(catalan(k - split - 1)?)
                    .ok_or(PpctError::Overflow)?;
                acc = acc.checked_add(block).ok_or(PpctError::Overflow)?;
            }
            let within = lr
                .checked_mul(catalan(j - 1)?)
                .and_then(|x| x.checked_add(rr))
                .ok_or(PpctError::Overflow)?;
            Ok((k, acc.checked_add(within).ok_or(PpctError::Overflow)?))
        }
    }
}

/// Global rank of a tree. Fails only when the rank does not fit a `u128`.
pub fn rank(t: &PlaneTree) -> Result<u128, PpctError> {
    let (k, local) = local_rank(t)?;
    offset(k)?
        .checked_add(local)
        .ok_or(PpctError::Overflow)
}

/// Leaf count of the tree with global rank `n`.
pub fn leaves_for_rank(n: u128) -> usize {
    let mut k = 1;
    let mut start: u128 = 0;
    loop {
        match catalan(k - 1) {
            Ok(c) if n - start >= c => {
                start += c;
                k += 1;
            }
            // Past the table every remaining n falls in this size class.
            _ => return k,
        }
    }
}

fn unrank_local(k: usize, mut r: u128) -> PlaneTree {
    if k == 1 {
        return PlaneTree::Leaf;
    }
    for i in 1..k {
        let right = catalan(k - i - 1).expect("size already validated");
        let block = catalan(i - 1).expect("size already validated") * right;
        if r < block {
            return PlaneTree::node(unrank_local(i, r / right), unrank_local(k - i, r % right));
        }
        r -= block;
    }
    unreachable!("local rank exceeds catalan(k - 1)")
}

pub fn unrank(n: u128) -> Result<PlaneTree, PpctError> {
    unrank_capped(n, DEFAULT_MAX_LEAVES)
}

/// Inverse of [`rank`], refusing trees with more than `max_leaves` leaves.
pub fn unrank_capped(n: u128, max_leaves: usize) -> Result<PlaneTree, PpctError> {
    let k = leaves_for_rank(n);
    if k > max_leaves {
        return Err(PpctError::TooLarge {
            leaves: k,
            max: max_leaves,
        });
    }
    // Once C(k-1) is representable every lookup in unrank_local is too.
    catalan(k - 1)?;
    let local = n - offset(k)?;
    Ok(unrank_local(k, local))
}
