//! Recognition of planted plane cubic trees in a heap snapshot.
//!
//! Heap layout: an internal node points to its two children through `left`
//! and `right`. A leaf's `left` points to itself and its `right` points to the
//! next leaf in left-to-right order, the last leaf wrapping around to the
//! first. The `data` field plays no part.

use std::collections::HashSet;

use thiserror::Error;

use super::PlaneTree;
use crate::minilang::{HeapSnapshot, NodeId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeapPpct {
    pub root: NodeId,
    pub shape: PlaneTree,
    /// Leaves in left-to-right order.
    pub leaves: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecognizeError {
    #[error("node {0} is not in the snapshot")]
    MissingNode(NodeId),
    #[error("node {0} has a null child pointer")]
    NullChild(NodeId),
    #[error("node {0} is reached twice while descending")]
    NotATree(NodeId),
    #[error("leaf {leaf} links to {found:?}, expected {expected}")]
    BrokenLeafCycle {
        leaf: NodeId,
        expected: NodeId,
        found: Option<NodeId>,
    },
}

/// Validates the structure rooted at `root` and returns its shape.
pub fn recognize_heap_ppct(snapshot: &HeapSnapshot, root: NodeId) -> Result<HeapPpct, RecognizeError> {
    enum Work {
        Visit(NodeId),
        Join,
    }
    let mut seen = HashSet::new();
    let mut leaves = Vec::new();
    let mut built: Vec<PlaneTree> = Vec::new();
    let mut work = vec![Work::Visit(root)];

    while let Some(item) = work.pop() {
        match item {
            Work::Join => {
                let right = built.pop().expect("two children built");
                let left = built.pop().expect("two children built");
                built.push(PlaneTree::node(left, right));
            }
            Work::Visit(id) => {
                if !seen.insert(id) {
                    return Err(RecognizeError::NotATree(id));
                }
                let node = snapshot.node(id).ok_or(RecognizeError::MissingNode(id))?;
                let left = node.left.ok_or(RecognizeError::NullChild(id))?;
                if left == id {
                    leaves.push(id);
                    built.push(PlaneTree::Leaf);
                    continue;
                }
                let right = node.right.ok_or(RecognizeError::NullChild(id))?;
                work.push(Work::Join);
                work.push(Work::Visit(right));
                work.push(Work::Visit(left));
            }
        }
    }

    for (i, &leaf) in leaves.iter().enumerate() {
        let expected = leaves[(i + 1) % leaves.len()];
        let found = snapshot.node(leaf).and_then(|n| n.right);
        if found != Some(expected) {
            return Err(RecognizeError::BrokenLeafCycle { leaf, expected, found });
        }
    }

    let shape = built.pop().expect("root built");
    Ok(HeapPpct { root, shape, leaves })
}
