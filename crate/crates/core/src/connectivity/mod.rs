//! The level structure: `L` nested spanning forests plus per-level adjacency,
//! maintained under batches of insertions, deletions and queries.
//!
//! Every edge has a level in `1..=L`. Edges start at `L` and only move down.
//! `G_i` is the subgraph of edges with level `<= i` and `F_i` its spanning
//! forest; a tree edge of level `l` therefore sits in `F_l, ..., F_L`.
//! Counts of level-`i` edges are charged to the vertex loops of `F_i`, so
//! each forest can enumerate its own level's edges without touching the
//! others.

mod audit;
mod counters;
mod search;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adjstore::AdjacencyStore;
use crate::etforest::EulerTourForest;
use crate::primitives::{semisort, spanning_forest, BatchDictionary, DictOp};
use crate::{canonical, level_count, EdgeId, EdgeKind, Level, VertexId};

pub use audit::AuditFailure;
pub use counters::WorkCounters;

/// Which replacement search runs after tree-edge deletions.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SearchStrategy {
    /// Per-round doubling search that restarts every round.
    Simple,
    /// One doubling schedule per level with deferred pushes.
    #[default]
    Interleaved,
}

impl fmt::Display for SearchStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SearchStrategy::Simple => "simple",
            SearchStrategy::Interleaved => "interleaved",
        })
    }
}

impl FromStr for SearchStrategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "simple" => Ok(SearchStrategy::Simple),
            "interleaved" => Ok(SearchStrategy::Interleaved),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

/// Why a batch was rejected. Rejected batches leave no trace.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UpdateError {
    #[error("graph needs at least one vertex")]
    NoVertices,
    #[error("vertex {vertex} out of range (n = {n})")]
    VertexOutOfRange { vertex: VertexId, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(VertexId),
    #[error("edge ({0}, {1}) occurs twice in the batch")]
    DuplicateInBatch(VertexId, VertexId),
    #[error("edge ({0}, {1}) is already present")]
    EdgeExists(VertexId, VertexId),
    #[error("edge ({0}, {1}) is not present")]
    MissingEdge(VertexId, VertexId),
}

/// One live edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeRecord {
    pub u: VertexId,
    pub v: VertexId,
    pub level: Level,
    pub kind: EdgeKind,
    /// Index into the level-history ledger.
    instance: u32,
}

pub struct LevelStructure {
    n: usize,
    levels: usize,
    seed: u64,
    strategy: SearchStrategy,
    forests: Vec<EulerTourForest>,
    adj: AdjacencyStore,
    dict: BatchDictionary<(VertexId, VertexId), EdgeId>,
    records: Vec<Option<EdgeRecord>>,
    free_ids: Vec<u32>,
    /// Level sequence of every edge ever inserted, by insertion order.
    history: Vec<Vec<u8>>,
    counters: WorkCounters,
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl fmt::Debug for LevelStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevelStructure")
            .field("n", &self.n)
            .field("levels", &self.levels)
            .field("strategy", &self.strategy)
            .field("edges", &self.dict.len())
            .finish()
    }
}

impl LevelStructure {
    pub fn new(n: usize, seed: u64, strategy: SearchStrategy) -> Result<Self, UpdateError> {
        if n == 0 {
            return Err(UpdateError::NoVertices);
        }
        let levels = level_count(n);
        let forests = (1..=levels)
            .map(|i| EulerTourForest::new(n, i, seed.wrapping_add(i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
            .collect();
        Ok(LevelStructure {
            n,
            levels,
            seed,
            strategy,
            forests,
            adj: AdjacencyStore::new(n, levels),
            dict: BatchDictionary::new(),
            records: Vec::new(),
            free_ids: Vec::new(),
            history: Vec::new(),
            counters: WorkCounters::new(levels),
            pool: None,
        })
    }

    /// Uses a private pool of `threads` workers for read-only phases. `1`
    /// (the default) runs everything on the calling thread.
    pub fn with_threads(mut self, threads: usize) -> Self {
        self.pool = if threads > 1 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .ok()
                .map(Arc::new)
        } else {
            None
        };
        self
    }

    pub fn vertices(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn strategy(&self) -> SearchStrategy {
        self.strategy
    }

    pub fn counters(&self) -> &WorkCounters {
        &self.counters
    }

    pub fn edge_count(&self) -> usize {
        self.dict.len()
    }

    /// `F_i`, 1-based.
    pub fn forest(&self, i: Level) -> &EulerTourForest {
        &self.forests[i - 1]
    }

    pub fn adjacency(&self) -> &AdjacencyStore {
        &self.adj
    }

    /// Level and kind of a live edge.
    pub fn edge_state(&self, u: VertexId, v: VertexId) -> Option<(Level, EdgeKind)> {
        let id = *self.dict.get(&canonical(u, v))?;
        let r = self.rec(id);
        Some((r.level, r.kind))
    }

    /// All live edges, sorted by endpoints.
    pub fn edges(&self) -> Vec<EdgeRecord> {
        let mut out: Vec<EdgeRecord> = self.records.iter().flatten().copied().collect();
        out.sort_unstable_by_key(|r| (r.u, r.v));
        out
    }

    /// Per-edge level sequences, one per inserted edge, in insertion order.
    pub fn level_history(&self) -> impl Iterator<Item = &[u8]> + '_ {
        self.history.iter().map(|h| h.as_slice())
    }

    fn check_vertex(&self, v: VertexId) -> Result<(), UpdateError> {
        if (v as usize) < self.n {
            Ok(())
        } else {
            Err(UpdateError::VertexOutOfRange { vertex: v, n: self.n })
        }
    }

    fn run<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        match &self.pool {
            Some(pool) => pool.install(f),
            None => f(),
        }
    }

    pub(crate) fn parallel(&self) -> bool {
        self.pool.is_some()
    }

    // ---- queries ----

    pub fn batch_connected(&self, queries: &[(VertexId, VertexId)]) -> Result<Vec<bool>, UpdateError> {
        for &(u, v) in queries {
            self.check_vertex(u)?;
            self.check_vertex(v)?;
        }
        let top = self.forest(self.levels);
        let answer = |&(u, v): &(VertexId, VertexId)| u == v || top.repr_of(u) == top.repr_of(v);
        Ok(if self.parallel() {
            self.run(|| queries.par_iter().map(answer).collect())
        } else {
            queries.iter().map(answer).collect()
        })
    }

    // ---- insertion ----

    pub fn batch_insert(&mut self, edges: &[(VertexId, VertexId)]) -> Result<(), UpdateError> {
        let mut seen = HashSet::with_capacity(edges.len());
        for &(u, v) in edges {
            self.check_vertex(u)?;
            self.check_vertex(v)?;
            if u == v {
                return Err(UpdateError::SelfLoop(u));
            }
            let key = canonical(u, v);
            if !seen.insert(key) {
                return Err(UpdateError::DuplicateInBatch(key.0, key.1));
            }
            if self.dict.contains_key(&key) {
                return Err(UpdateError::EdgeExists(key.0, key.1));
            }
        }
        if edges.is_empty() {
            return Ok(());
        }

        let top = self.levels;
        let mut ids = Vec::with_capacity(edges.len());
        let mut ops = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            let (u, v) = canonical(u, v);
            let id = self.alloc_edge(u, v, top);
            ops.push(DictOp::Insert((u, v), id));
            ids.push(id);
        }
        self.dict.apply(ops).expect("batch validated");
        self.counters.inserted += ids.len() as u64;
        self.attach(&ids, top, EdgeKind::NonTree);

        let forest = &self.forests[top - 1];
        let pairs: Vec<_> = ids
            .iter()
            .map(|&e| {
                let r = self.rec(e);
                (forest.repr_of(r.u), forest.repr_of(r.v))
            })
            .collect();
        let chosen: Vec<EdgeId> = spanning_forest(&pairs).edges.into_iter().map(|k| ids[k]).collect();
        self.relocate(&chosen, (top, EdgeKind::NonTree), (top, EdgeKind::Tree));
        self.link(top, &chosen);
        Ok(())
    }

    fn alloc_edge(&mut self, u: VertexId, v: VertexId, level: Level) -> EdgeId {
        let instance = self.history.len() as u32;
        self.history.push(vec![level as u8]);
        let rec = EdgeRecord {
            u,
            v,
            level,
            kind: EdgeKind::NonTree,
            instance,
        };
        match self.free_ids.pop() {
            Some(id) => {
                self.records[id as usize] = Some(rec);
                EdgeId(id)
            }
            None => {
                self.records.push(Some(rec));
                EdgeId(self.records.len() as u32 - 1)
            }
        }
    }

    // ---- deletion ----

    pub fn batch_delete(&mut self, edges: &[(VertexId, VertexId)]) -> Result<(), UpdateError> {
        let mut seen = HashSet::with_capacity(edges.len());
        let mut ids = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            self.check_vertex(u)?;
            self.check_vertex(v)?;
            let key = canonical(u, v);
            if !seen.insert(key) {
                return Err(UpdateError::DuplicateInBatch(key.0, key.1));
            }
            match self.dict.get(&key) {
                Some(&id) => ids.push(id),
                None => return Err(UpdateError::MissingEdge(key.0, key.1)),
            }
        }
        self.counters.open_delete_batch(ids.len());
        if ids.is_empty() {
            return Ok(());
        }

        // drop from adjacency, grouped by (level, kind)
        let keyed: Vec<((Level, EdgeKind), EdgeId)> = ids
            .iter()
            .map(|&e| {
                let r = self.rec(e);
                ((r.level, r.kind), e)
            })
            .collect();
        for run in crate::primitives::runs(&semisort(keyed)) {
            let (level, kind) = run[0].0;
            let group: Vec<EdgeId> = run.iter().map(|&(_, e)| e).collect();
            self.detach(&group, level, kind);
        }

        // cut tree edges out of every forest that holds them
        let tree: Vec<EdgeRecord> = ids
            .iter()
            .map(|&e| *self.rec(e))
            .filter(|r| r.kind == EdgeKind::Tree)
            .collect();
        for i in 1..=self.levels {
            let cuts: Vec<_> = tree.iter().filter(|r| r.level <= i).map(|r| (r.u, r.v)).collect();
            if !cuts.is_empty() {
                self.forests[i - 1].batch_cut(&cuts).expect("tree edge present in forest");
            }
        }

        self.dict
            .apply(ids.iter().map(|&e| DictOp::Delete(self.key(e))).collect())
            .expect("batch validated");
        for &e in &ids {
            self.records[e.index()] = None;
            self.free_ids.push(e.0);
        }

        if tree.is_empty() {
            return Ok(());
        }
        let mut buckets: Vec<Vec<VertexId>> = vec![Vec::new(); self.levels + 1];
        for r in &tree {
            buckets[r.level].extend([r.u, r.v]);
        }
        let min_level = tree.iter().map(|r| r.level).min().expect("non-empty");
        let mut carried: Vec<VertexId> = Vec::new();
        let mut found: Vec<EdgeId> = Vec::new();
        for (i, bucket) in buckets.iter_mut().enumerate().skip(min_level) {
            carried.append(bucket);
            carried = match self.strategy {
                SearchStrategy::Simple => self.parallel_level_search(i, carried, &mut found),
                SearchStrategy::Interleaved => self.interleaved_level_search(i, carried, &mut found),
            };
        }
        Ok(())
    }

    // ---- edge bookkeeping shared by the searches ----

    #[inline]
    pub(crate) fn rec(&self, e: EdgeId) -> &EdgeRecord {
        self.records[e.index()].as_ref().expect("live edge")
    }

    fn key(&self, e: EdgeId) -> (VertexId, VertexId) {
        let r = self.rec(e);
        (r.u, r.v)
    }

    fn triples(&self, edges: &[EdgeId]) -> Vec<(EdgeId, VertexId, VertexId)> {
        edges
            .iter()
            .map(|&e| {
                let r = self.rec(e);
                (e, r.u, r.v)
            })
            .collect()
    }

    /// Puts edges into the adjacency arrays of `level` as `kind` and sets
    /// their records, counting a push for each level decrease.
    pub(crate) fn attach(&mut self, edges: &[EdgeId], level: Level, kind: EdgeKind) {
        if edges.is_empty() {
            return;
        }
        let t = self.triples(edges);
        self.forests[level - 1]
            .add_level_edges(&t, kind, &mut self.adj)
            .expect("edge not yet attached");
        for &e in edges {
            let r = self.records[e.index()].as_mut().expect("live edge");
            let from = r.level;
            r.level = level;
            r.kind = kind;
            let instance = r.instance as usize;
            if level < from {
                debug_assert_eq!(level + 1, from);
                self.counters.record_push(from, kind == EdgeKind::Tree);
                self.history[instance].push(level as u8);
            }
        }
    }

    /// Takes edges out of the adjacency arrays of `level`. Records keep their
    /// old level until the edges are attached again.
    pub(crate) fn detach(&mut self, edges: &[EdgeId], level: Level, kind: EdgeKind) {
        if edges.is_empty() {
            return;
        }
        let t = self.triples(edges);
        self.forests[level - 1]
            .detach_level_edges(&t, kind, &mut self.adj)
            .expect("edge attached at this level");
    }

    pub(crate) fn relocate(&mut self, edges: &[EdgeId], from: (Level, EdgeKind), to: (Level, EdgeKind)) {
        self.detach(edges, from.0, from.1);
        self.attach(edges, to.0, to.1);
    }

    /// Links edges into `F_i`.
    pub(crate) fn link(&mut self, i: Level, edges: &[EdgeId]) {
        if edges.is_empty() {
            return;
        }
        let pairs: Vec<_> = edges.iter().map(|&e| self.key(e)).collect();
        self.forests[i - 1].batch_link(&pairs).expect("forest edges stay acyclic");
    }

    /// Overwrites an edge's recorded level without moving it, leaving the
    /// structure inconsistent. Only for exercising the audit.
    #[doc(hidden)]
    pub fn corrupt_level_for_test(&mut self, u: VertexId, v: VertexId, level: Level) {
        if let Some(&id) = self.dict.get(&canonical(u, v)) {
            self.records[id.index()].as_mut().expect("live edge").level = level;
        }
    }
}
