use serde::{Deserialize, Serialize};

use crate::Level;

/// Work accounting for the amortized analysis.
///
/// A push is one level decrease of one edge. Pushes are attributed to the
/// deletion batch that caused them and to the level the edge left.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkCounters {
    pub levels: usize,
    /// m: edges ever inserted.
    pub inserted: u64,
    /// K: edges ever deleted.
    pub deleted: u64,
    /// P: total level decreases.
    pub pushes: u64,
    /// Of `pushes`, those applied to tree edges.
    pub tree_pushes: u64,
    /// d: deletion batches.
    pub delete_batches: u64,
    /// k_b per deletion batch.
    pub batch_sizes: Vec<u64>,
    /// p_{b,i}: row per deletion batch, column `i - 1` for pushes out of level `i`.
    pub batch_pushes: Vec<Vec<u64>>,
    /// Search rounds, indexed by `level - 1`.
    pub rounds_per_level: Vec<u64>,
    /// Doubling phases of the simple search.
    pub phases: u64,
    /// Representative lookups issued by the searches.
    pub repr_queries: u64,
    /// Replacement edges promoted to tree edges.
    pub replacements: u64,
    /// Interleaved search: active components whose previous-round buffer was
    /// checked against `2^(r-1)`, and how many fell short.
    pub buffer_checks: u64,
    pub buffer_shortfalls: u64,
}

impl WorkCounters {
    pub fn new(levels: usize) -> Self {
        WorkCounters {
            levels,
            rounds_per_level: vec![0; levels],
            ..Default::default()
        }
    }

    /// Δ = K / d, the average deletion batch size (0 with no batches).
    pub fn delta(&self) -> f64 {
        if self.delete_batches == 0 {
            0.0
        } else {
            self.deleted as f64 / self.delete_batches as f64
        }
    }

    /// m·L, the cap on `pushes`.
    pub fn push_bound(&self) -> u64 {
        self.inserted * self.levels as u64
    }

    pub fn pushes_per_deleted_edge(&self) -> f64 {
        if self.deleted == 0 {
            0.0
        } else {
            self.pushes as f64 / self.deleted as f64
        }
    }

    pub(crate) fn open_delete_batch(&mut self, k: usize) {
        self.deleted += k as u64;
        self.delete_batches += 1;
        self.batch_sizes.push(k as u64);
        self.batch_pushes.push(vec![0; self.levels]);
    }

    pub(crate) fn record_push(&mut self, from: Level, tree: bool) {
        self.pushes += 1;
        if tree {
            self.tree_pushes += 1;
        }
        if let Some(row) = self.batch_pushes.last_mut() {
            row[from - 1] += 1;
        }
    }
}
