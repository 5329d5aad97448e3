use std::collections::BTreeMap;

use super::codec::rank;
use super::{PlaneTree, TreePath};

/// True iff the two trees are identical as ordered trees.
pub fn shape_equal(a: &PlaneTree, b: &PlaneTree) -> bool {
    a == b
}

/// Path to the first node, in preorder, whose complete subtree has the same
/// shape as `needle`.
pub fn find_substructure(haystack: &PlaneTree, needle: &PlaneTree) -> Option<TreePath> {
    let want = needle.leaf_count();
    let mut found = None;
    haystack.for_each_preorder(|path, sub| {
        if found.is_none() && sub.leaf_count() == want && shape_equal(sub, needle) {
            found = Some(path.clone());
        }
    });
    found
}

/// Every distinct subtree shape of a tree, keyed by rank, mapped to the
/// preorder-first path where it occurs.
///
/// Answers the same question as [`find_substructure`] for many needles at once.
#[derive(Debug, Clone)]
pub struct SubtreeIndex {
    by_rank: BTreeMap<u128, TreePath>,
}

impl SubtreeIndex {
    pub fn new(tree: &PlaneTree) -> Self {
        Self::with_filter(tree, |_, _| true)
    }

    /// Builds the index, keeping only subtrees accepted by `keep`.
    pub fn with_filter(tree: &PlaneTree, mut keep: impl FnMut(&TreePath, &PlaneTree) -> bool) -> Self {
        let mut by_rank = BTreeMap::new();
        tree.for_each_preorder(|path, sub| {
            if !keep(path, sub) {
                return;
            }
            if let Ok(r) = rank(sub) {
                by_rank.entry(r).or_insert_with(|| path.clone());
            }
        });
        SubtreeIndex { by_rank }
    }

    pub fn path_for_rank(&self, value: u128) -> Option<&TreePath> {
        self.by_rank.get(&value)
    }

    pub fn contains(&self, value: u128) -> bool {
        self.by_rank.contains_key(&value)
    }

    pub fn find(&self, needle: &PlaneTree) -> Option<&TreePath> {
        rank(needle).ok().and_then(|r| self.path_for_rank(r))
    }

    pub fn ranks(&self) -> impl Iterator<Item = u128> + '_ {
        self.by_rank.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.by_rank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_rank.is_empty()
    }
}
