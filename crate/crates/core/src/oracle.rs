//! Brute-force reference graph: an edge set, with connectivity recomputed by
//! BFS on every question. Shares no code with the level structure beyond the
//! error type, so the two can be checked against each other.

use std::collections::{BTreeSet, VecDeque};

use crate::connectivity::UpdateError;
use crate::workload::{Batch, BatchKind};
use crate::VertexId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleGraph {
    n: usize,
    edges: BTreeSet<(VertexId, VertexId)>,
}

impl OracleGraph {
    pub fn new(n: usize) -> Self {
        OracleGraph {
            n,
            edges: BTreeSet::new(),
        }
    }

    /// Graph over an explicit edge list; no validation.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (VertexId, VertexId)>) -> Self {
        OracleGraph {
            n,
            edges: edges.into_iter().map(|(u, v)| (u.min(v), u.max(v))).collect(),
        }
    }

    pub fn vertices(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &BTreeSet<(VertexId, VertexId)> {
        &self.edges
    }

    fn in_range(&self, v: VertexId) -> Result<(), UpdateError> {
        if (v as usize) < self.n {
            Ok(())
        } else {
            Err(UpdateError::VertexOutOfRange { vertex: v, n: self.n })
        }
    }

    /// Applies a batch atomically. Query batches are answered and leave the
    /// edge set alone; update batches return no answers.
    pub fn apply(&mut self, batch: &Batch) -> Result<Vec<bool>, UpdateError> {
        let mut staged = BTreeSet::new();
        for &(u, v) in &batch.edges {
            self.in_range(u)?;
            self.in_range(v)?;
            let key = (u.min(v), u.max(v));
            match batch.kind {
                BatchKind::Insert => {
                    if u == v {
                        return Err(UpdateError::SelfLoop(u));
                    }
                    if !staged.insert(key) {
                        return Err(UpdateError::DuplicateInBatch(key.0, key.1));
                    }
                    if self.edges.contains(&key) {
                        return Err(UpdateError::EdgeExists(key.0, key.1));
                    }
                }
                BatchKind::Delete => {
                    if !staged.insert(key) {
                        return Err(UpdateError::DuplicateInBatch(key.0, key.1));
                    }
                    if !self.edges.contains(&key) {
                        return Err(UpdateError::MissingEdge(key.0, key.1));
                    }
                }
                BatchKind::Query => {}
            }
        }
        match batch.kind {
            BatchKind::Insert => self.edges.extend(staged),
            BatchKind::Delete => self.edges.retain(|e| !staged.contains(e)),
            BatchKind::Query => {
                let label = self.labels();
                return Ok(batch
                    .edges
                    .iter()
                    .map(|&(u, v)| label[u as usize] == label[v as usize])
                    .collect());
            }
        }
        Ok(Vec::new())
    }

    pub fn connected(&self, u: VertexId, v: VertexId) -> Result<bool, UpdateError> {
        self.in_range(u)?;
        self.in_range(v)?;
        if u == v {
            return Ok(true);
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.n];
        seen[u as usize] = true;
        let mut queue = VecDeque::from([u]);
        while let Some(x) = queue.pop_front() {
            for &y in &adj[x as usize] {
                if y == v {
                    return Ok(true);
                }
                if !std::mem::replace(&mut seen[y as usize], true) {
                    queue.push_back(y);
                }
            }
        }
        Ok(false)
    }

    fn adjacency(&self) -> Vec<Vec<VertexId>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
        adj
    }

    /// Component label per vertex: the smallest vertex of its component.
    pub fn labels(&self) -> Vec<VertexId> {
        let adj = self.adjacency();
        let mut label = vec![VertexId::MAX; self.n];
        for s in 0..self.n {
            if label[s] != VertexId::MAX {
                continue;
            }
            label[s] = s as VertexId;
            let mut queue = VecDeque::from([s as VertexId]);
            while let Some(x) = queue.pop_front() {
                for &y in &adj[x as usize] {
                    if label[y as usize] == VertexId::MAX {
                        label[y as usize] = s as VertexId;
                        queue.push_back(y);
                    }
                }
            }
        }
        label
    }

    /// Connected components, each sorted, ordered by smallest vertex.
    pub fn components(&self) -> Vec<Vec<VertexId>> {
        let label = self.labels();
        let mut index = vec![usize::MAX; self.n];
        let mut out: Vec<Vec<VertexId>> = Vec::new();
        for (v, &l) in label.iter().enumerate() {
            let slot = &mut index[l as usize];
            if *slot == usize::MAX {
                *slot = out.len();
                out.push(Vec::new());
            }
            out[*slot].push(v as VertexId);
        }
        out
    }
}
