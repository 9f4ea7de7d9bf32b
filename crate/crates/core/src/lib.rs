//! Batch-dynamic graph connectivity.
//!
//! The engine keeps a hierarchy of `L = ceil(log2 n)` spanning forests, one
//! per edge level, each stored as a set of skip-list backed Euler tours. New
//! edges enter at the top level; replacement searches after tree-edge
//! deletions push examined edges one level down, which is what pays for the
//! search. Batches of insertions, deletions and connectivity queries are
//! processed as units.
//!
//! Module map:
//!
//! - [`primitives`]: semisort, pack, batch dictionary, static spanning forest.
//! - [`adjstore`]: per-(vertex, level, kind) dense adjacency arrays.
//! - [`etforest`]: one level's Euler tour forest with augmented edge counts.
//! - [`connectivity`]: the level structure and the batch algorithms.
//! - [`oracle`]: brute-force reference graph for differential testing.
//! - [`workload`]: script format, generator, replay runner and reports.

pub mod adjstore;
pub mod connectivity;
pub mod etforest;
pub mod oracle;
pub mod primitives;
pub mod workload;

use serde::{Deserialize, Serialize};

/// Vertices are dense indices `0..n`.
pub type VertexId = u32;

/// Edge levels are 1-based; level `L` is the top.
pub type Level = usize;

/// Handle to an edge slot inside the level structure.
///
/// Ids are recycled after deletion, so an id only names an edge while it is
/// live.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeId(pub u32);

impl EdgeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for EdgeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// Whether an edge currently belongs to the spanning forest.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    Tree,
    NonTree,
}

impl EdgeKind {
    #[inline]
    pub(crate) fn slot(self) -> usize {
        match self {
            EdgeKind::Tree => 0,
            EdgeKind::NonTree => 1,
        }
    }
}

/// Orders an undirected edge as `(min, max)`.
#[inline]
pub fn canonical(u: VertexId, v: VertexId) -> (VertexId, VertexId) {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

/// `max(1, ceil(log2 n))`.
pub fn level_count(n: usize) -> usize {
    if n <= 2 {
        return 1;
    }
    (usize::BITS - (n - 1).leading_zeros()) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_count_matches_ceil_log2() {
        assert_eq!(level_count(1), 1);
        assert_eq!(level_count(2), 1);
        assert_eq!(level_count(3), 2);
        assert_eq!(level_count(8), 3);
        assert_eq!(level_count(9), 4);
        assert_eq!(level_count(1000), 10);
        assert_eq!(level_count(1024), 10);
        assert_eq!(level_count(1025), 11);
    }

    #[test]
    fn canonical_orders_endpoints() {
        assert_eq!(canonical(5, 2), (2, 5));
        assert_eq!(canonical(2, 5), (2, 5));
        assert_eq!(canonical(3, 3), (3, 3));
    }
}
