use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PpctError;

/// A rooted, ordered, full binary tree.
///
/// This is the shape-level view of a planted plane cubic tree: pointer layout
/// (self-loops, leaf cycle) only exists on the heap, see [`super::heap`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PlaneTree {
    Leaf,
    Node(Box<PlaneTree>, Box<PlaneTree>),
}

impl PlaneTree {
    pub fn leaf() -> Self {
        PlaneTree::Leaf
    }

    pub fn node(left: PlaneTree, right: PlaneTree) -> Self {
        PlaneTree::Node(Box::new(left), Box::new(right))
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, PlaneTree::Leaf)
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            PlaneTree::Leaf => 1,
            PlaneTree::Node(l, r) => l.leaf_count() + r.leaf_count(),
        }
    }

    pub fn internal_count(&self) -> usize {
        match self {
            PlaneTree::Leaf => 0,
            PlaneTree::Node(l, r) => 1 + l.internal_count() + r.internal_count(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.leaf_count() + self.internal_count()
    }

    pub fn depth(&self) -> usize {
        match self {
            PlaneTree::Leaf => 0,
            PlaneTree::Node(l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    /// Left-right mirror image.
    pub fn mirror(&self) -> PlaneTree {
        match self {
            PlaneTree::Leaf => PlaneTree::Leaf,
            PlaneTree::Node(l, r) => PlaneTree::node(r.mirror(), l.mirror()),
        }
    }

    /// The subtree reached by following `path` from the root, if the path
    /// stays inside the tree.
    pub fn subtree_at(&self, path: &TreePath) -> Option<&PlaneTree> {
        let mut cur = self;
        for step in path.steps() {
            cur = match (cur, step) {
                (PlaneTree::Leaf, _) => return None,
                (PlaneTree::Node(l, _), Step::L) => l,
                (PlaneTree::Node(_, r), Step::R) => r,
            };
        }
        Some(cur)
    }

    /// Visit every node in preorder together with its root-relative path.
    pub fn for_each_preorder<'a>(&'a self, mut f: impl FnMut(&TreePath, &'a PlaneTree)) {
        fn walk<'a>(
            t: &'a PlaneTree,
            path: &mut TreePath,
            f: &mut impl FnMut(&TreePath, &'a PlaneTree),
        ) {
            f(path, t);
            if let PlaneTree::Node(l, r) = t {
                path.push(Step::L);
                walk(l, path, f);
                path.pop();
                path.push(Step::R);
                walk(r, path, f);
                path.pop();
            }
        }
        let mut path = TreePath::root();
        walk(self, &mut path, &mut f);
    }
}

impl fmt::Display for PlaneTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlaneTree::Leaf => f.write_str("*"),
            PlaneTree::Node(l, r) => write!(f, "({l}{r})"),
        }
    }
}

impl FromStr for PlaneTree {
    type Err = PpctError;

    /// Parses the canonical parenthesis form: leaf = `*`, internal = `(` left right `)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bytes = s.as_bytes();
        let mut pos = 0;
        let tree = parse_tree(bytes, &mut pos)?;
        if pos != bytes.len() {
            return Err(PpctError::Syntax { offset: pos });
        }
        Ok(tree)
    }
}

fn parse_tree(bytes: &[u8], pos: &mut usize) -> Result<PlaneTree, PpctError> {
    // Explicit stack so very deep inputs cannot overflow the native stack.
    enum Frame {
        Open,
        Left(PlaneTree),
    }
    let mut stack: Vec<Frame> = Vec::new();
    loop {
        let mut done = match bytes.get(*pos) {
            Some(b'*') => {
                *pos += 1;
                PlaneTree::Leaf
            }
            Some(b'(') => {
                *pos += 1;
                stack.push(Frame::Open);
                continue;
            }
            _ => return Err(PpctError::Syntax { offset: *pos }),
        };
        loop {
            match stack.pop() {
                None => return Ok(done),
                Some(Frame::Open) => {
                    stack.push(Frame::Left(done));
                    break;
                }
                Some(Frame::Left(left)) => {
                    if bytes.get(*pos) != Some(&b')') {
                        return Err(PpctError::Syntax { offset: *pos });
                    }
                    *pos += 1;
                    done = PlaneTree::node(left, done);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Step {
    L,
    R,
}

/// Root-relative location of a node, as a sequence of left/right steps.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TreePath(Vec<Step>);

impl TreePath {
    pub fn root() -> Self {
        TreePath(Vec::new())
    }

    pub fn from_steps(steps: Vec<Step>) -> Self {
        TreePath(steps)
    }

    pub fn steps(&self) -> &[Step] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, step: Step) {
        self.0.push(step);
    }

    pub fn pop(&mut self) -> Option<Step> {
        self.0.pop()
    }

    /// Packs the path into an integer: a leading 1 bit followed by one bit per
    /// step (0 = L, 1 = R), most significant first. The empty path is 1.
    ///
    /// Returns `None` when the path is too long to fit a signed 64-bit value,
    /// which is the integer width of the generated decoder.
    pub fn pathcode(&self) -> Option<i64> {
        if self.0.len() > 62 {
            return None;
        }
        let mut code: i64 = 1;
        for step in &self.0 {
            code = (code << 1) | matches!(step, Step::R) as i64;
        }
        Some(code)
    }

    pub fn from_pathcode(code: i64) -> Option<TreePath> {
        if code < 1 {
            return None;
        }
        let bits = 63 - code.leading_zeros() as usize;
        let steps = (0..bits)
            .rev()
            .map(|i| if (code >> i) & 1 == 1 { Step::R } else { Step::L })
            .collect();
        Some(TreePath(steps))
    }
}

impl fmt::Display for TreePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("<root>");
        }
        for s in &self.0 {
            f.write_str(match s {
                Step::L => "L",
                Step::R => "R",
            })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serialization_forms() {
        assert_eq!(PlaneTree::leaf().to_string(), "*");
        let t = PlaneTree::node(
            PlaneTree::leaf(),
            PlaneTree::node(PlaneTree::leaf(), PlaneTree::leaf()),
        );
        assert_eq!(t.to_string(), "(*(**))");
        assert_eq!("(*(**))".parse::<PlaneTree>().unwrap(), t);
    }

    #[test]
    fn rejects_malformed_text() {
        for bad in ["", "(", "(*)", "(***)", "**", "( * * )", "x"] {
            assert!(bad.parse::<PlaneTree>().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn counts_obey_cubic_law() {
        let t: PlaneTree = "((**)((**)*))".parse().unwrap();
        assert_eq!(t.leaf_count(), 5);
        assert_eq!(t.internal_count(), 4);
        assert_eq!(t.leaf_count(), t.internal_count() + 1);
    }

    #[test]
    fn mirror_of_asymmetric_tree_differs() {
        let t: PlaneTree = "(*(**))".parse().unwrap();
        assert_ne!(t.mirror(), t);
        assert_eq!(t.mirror().mirror(), t);
    }

    #[test]
    fn pathcode_round_trip() {
        assert_eq!(TreePath::root().pathcode(), Some(1));
        let p = TreePath::from_steps(vec![Step::L, Step::R, Step::R]);
        assert_eq!(p.pathcode(), Some(0b1011));
        assert_eq!(TreePath::from_pathcode(0b1011), Some(p));
        assert_eq!(TreePath::from_pathcode(0), None);
        let long = TreePath::from_steps(vec![Step::R; 63]);
        assert_eq!(long.pathcode(), None);
    }

    #[test]
    fn subtree_lookup_stops_at_leaves() {
        let t: PlaneTree = "(*(**))".parse().unwrap();
        let p = TreePath::from_steps(vec![Step::R, Step::L]);
        assert_eq!(t.subtree_at(&p), Some(&PlaneTree::Leaf));
        let off = TreePath::from_steps(vec![Step::L, Step::L]);
        assert_eq!(t.subtree_at(&off), None);
    }
}
