use std::collections::HashSet;

use thiserror::Error;

use super::LevelStructure;
use crate::oracle::OracleGraph;
use crate::primitives::DisjointSets;
use crate::{canonical, EdgeKind, Level, VertexId};

/// First violation found by [`LevelStructure::audit`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuditFailure {
    #[error("size bound: a component of G_{level} has {size} vertices, limit {limit}")]
    ComponentTooLarge { level: Level, size: usize, limit: usize },
    #[error("minimum forest: non-tree edge ({u}, {v}) at level {level} is not spanned by tree edges of level <= {level}")]
    NotMinimumSpanningForest { u: VertexId, v: VertexId, level: Level },
    #[error("tree edges close a cycle at ({u}, {v})")]
    TreeCycle { u: VertexId, v: VertexId },
    #[error("forest F_{level} does not match the tree edges of level <= {level}: {detail}")]
    Nesting { level: Level, detail: String },
    #[error("Euler tour forest F_{level}: {detail}")]
    EulerTour { level: Level, detail: String },
    #[error("vertex {vertex} at level {level}: forest counts {kind:?} {stored}, adjacency holds {actual}")]
    CountMismatch {
        level: Level,
        vertex: VertexId,
        kind: EdgeKind,
        stored: usize,
        actual: usize,
    },
    #[error("adjacency: {0}")]
    Adjacency(String),
    #[error("edge dictionary: {0}")]
    Dictionary(String),
    #[error("level ledger: {0}")]
    Ledger(String),
    #[error("pushes {pushes} exceed m*L = {bound}")]
    PushBound { pushes: u64, bound: u64 },
}

impl LevelStructure {
    /// Checks every structural invariant; returns the first violation.
    pub fn audit(&self) -> Result<(), AuditFailure> {
        let edges = self.edges();

        // component size bound
        for i in 1..=self.levels {
            let limit = 1usize << i;
            let g = OracleGraph::from_edges(
                self.n,
                edges.iter().filter(|r| r.level <= i).map(|r| (r.u, r.v)),
            );
            if let Some(big) = g.components().into_iter().find(|c| c.len() > limit) {
                return Err(AuditFailure::ComponentTooLarge {
                    level: i,
                    size: big.len(),
                    limit,
                });
            }
        }

        // minimum spanning forest: per level, tree edges of level <= l span every
        // non-tree edge of level l
        let mut spans: Vec<DisjointSets> = (0..=self.levels).map(|_| DisjointSets::new(self.n)).collect();
        for r in edges.iter().filter(|r| r.kind == EdgeKind::Tree) {
            for dsu in spans.iter_mut().skip(r.level) {
                if !dsu.union(r.u as usize, r.v as usize) {
                    return Err(AuditFailure::TreeCycle { u: r.u, v: r.v });
                }
            }
        }
        for r in edges.iter().filter(|r| r.kind == EdgeKind::NonTree) {
            if spans[r.level].find(r.u as usize) != spans[r.level].find(r.v as usize) {
                return Err(AuditFailure::NotMinimumSpanningForest {
                    u: r.u,
                    v: r.v,
                    level: r.level,
                });
            }
        }

        // nesting
        for i in 1..=self.levels {
            let expect: HashSet<(VertexId, VertexId)> = edges
                .iter()
                .filter(|r| r.kind == EdgeKind::Tree && r.level <= i)
                .map(|r| (r.u, r.v))
                .collect();
            let f = self.forest(i);
            if f.edge_count() != expect.len() {
                return Err(AuditFailure::Nesting {
                    level: i,
                    detail: format!("{} forest edges, {} expected", f.edge_count(), expect.len()),
                });
            }
            if let Some((u, v)) = f.edges().find(|e| !expect.contains(e)) {
                return Err(AuditFailure::Nesting {
                    level: i,
                    detail: format!("unexpected edge ({u}, {v})"),
                });
            }
            f.audit()
                .map_err(|detail| AuditFailure::EulerTour { level: i, detail })?;
        }

        // augmented counts agree with the adjacency arrays
        for i in 1..=self.levels {
            let f = self.forest(i);
            for v in 0..self.n as VertexId {
                let val = f.vertex_value(v).expect("valid vertex");
                for kind in [EdgeKind::Tree, EdgeKind::NonTree] {
                    let stored = val.count(kind) as usize;
                    let actual = self.adj.count(v, i, kind);
                    if stored != actual {
                        return Err(AuditFailure::CountMismatch {
                            level: i,
                            vertex: v,
                            kind,
                            stored,
                            actual,
                        });
                    }
                }
            }
        }

        // adjacency back-indices, and every record sits where it claims
        self.adj.audit().map_err(AuditFailure::Adjacency)?;
        let mut slots = 0usize;
        for (id, r) in self.records.iter().enumerate() {
            let Some(r) = r else { continue };
            let e = crate::EdgeId(id as u32);
            for x in [r.u, r.v] {
                match self.adj.locate(e, x) {
                    Some((level, kind, _)) if level == r.level && kind == r.kind => slots += 1,
                    other => {
                        return Err(AuditFailure::Adjacency(format!(
                            "{e} ({}, {}) recorded at level {} {:?}, found {:?} at vertex {x}",
                            r.u, r.v, r.level, r.kind, other
                        )))
                    }
                }
            }
            if self.dict.get(&canonical(r.u, r.v)) != Some(&e) {
                return Err(AuditFailure::Dictionary(format!("({}, {}) not mapped to {e}", r.u, r.v)));
            }
        }
        if self.dict.len() != edges.len() || slots != 2 * edges.len() {
            return Err(AuditFailure::Dictionary(format!(
                "{} dictionary entries, {} live records",
                self.dict.len(),
                edges.len()
            )));
        }

        // level ledger
        let mut pushes = 0u64;
        for (k, h) in self.history.iter().enumerate() {
            if h.first() != Some(&(self.levels as u8)) {
                return Err(AuditFailure::Ledger(format!("edge instance {k} did not start at the top level")));
            }
            if h.windows(2).any(|w| w[1] >= w[0]) || h.last().is_some_and(|&l| l == 0) {
                return Err(AuditFailure::Ledger(format!("edge instance {k} has levels {h:?}")));
            }
            pushes += h.len() as u64 - 1;
        }
        for r in &edges {
            if self.history[r.instance as usize].last() != Some(&(r.level as u8)) {
                return Err(AuditFailure::Ledger(format!("({}, {}) level disagrees with its ledger", r.u, r.v)));
            }
        }
        if pushes != self.counters.pushes {
            return Err(AuditFailure::Ledger(format!(
                "ledger holds {pushes} level decreases, counter says {}",
                self.counters.pushes
            )));
        }
        if self.counters.pushes > self.counters.push_bound() {
            return Err(AuditFailure::PushBound {
                pushes: self.counters.pushes,
                bound: self.counters.push_bound(),
            });
        }
        Ok(())
    }
}
