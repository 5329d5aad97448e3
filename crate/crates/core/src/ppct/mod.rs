//! Planted plane cubic tree shapes: representation, ranking, subtree search
//! and recognition of the heap-resident form.

use thiserror::Error;

pub mod codec;
pub mod heap;
pub mod search;
mod tree;

pub use codec::{catalan, leaves_for_rank, rank, unrank, unrank_capped, DEFAULT_MAX_LEAVES};
pub use heap::{recognize_heap_ppct, HeapPpct, RecognizeError};
pub use search::{find_substructure, shape_equal, SubtreeIndex};
pub use tree::{PlaneTree, Step, TreePath};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PpctError {
    #[error("integer overflow in tree codec")]
    Overflow,
    #[error("tree would need {leaves} leaves, limit is {max}")]
    TooLarge { leaves: usize, max: usize },
    #[error("malformed tree text at byte {offset}")]
    Syntax { offset: usize },
}
