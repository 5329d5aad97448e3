use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Heap node identifier; ids are handed out in allocation order starting at 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapNode {
    pub left: Option<NodeId>,
    pub right: Option<NodeId>,
    pub data: i64,
}

/// Copy of the heap taken when a program executes `snapshot()`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeapSnapshot {
    pub nodes: BTreeMap<NodeId, SnapNode>,
    /// Globals that held a node reference at capture time.
    pub anchors: BTreeMap<String, NodeId>,
}

impl HeapSnapshot {
    pub fn node(&self, id: NodeId) -> Option<&SnapNode> {
        self.nodes.get(&id)
    }

    pub fn node_mut(&mut self, id: NodeId) -> Option<&mut SnapNode> {
        self.nodes.get_mut(&id)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}
