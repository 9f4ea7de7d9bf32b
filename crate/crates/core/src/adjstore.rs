//! Dense per-(vertex, level, kind) adjacency arrays.
//!
//! Every edge remembers its slot in both endpoint arrays, so a batch delete
//! touches only the deleted slots and the tail window. Fetching a prefix is
//! a slice borrow.

use thiserror::Error;

use crate::{EdgeId, EdgeKind, Level, VertexId};

const MIN_CAPACITY: usize = 4;
const NO_SLOT: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdjacencyError {
    #[error("{edge} is already stored at vertex {vertex}")]
    DuplicateEdge { edge: EdgeId, vertex: VertexId },
    #[error("{edge} is not stored at vertex {vertex}, level {level}, {kind:?}")]
    MissingEdge {
        edge: EdgeId,
        vertex: VertexId,
        level: Level,
        kind: EdgeKind,
    },
    #[error("requested {requested} edges but only {available} are stored")]
    FetchTooMany { requested: usize, available: usize },
    #[error("vertex {vertex} or level {level} out of range")]
    OutOfRange { vertex: VertexId, level: Level },
}

/// One resizable dense array. `capacity` is the logical capacity used for
/// the grow/shrink policy and write accounting.
#[derive(Debug, Clone, Default)]
pub struct AdjacencyArray {
    slots: Vec<EdgeId>,
    capacity: usize,
}

impl AdjacencyArray {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn as_slice(&self) -> &[EdgeId] {
        &self.slots
    }
}

/// Position of an edge in one endpoint array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Slot {
    array: u32,
    index: u32,
}

const EMPTY_SIDE: Slot = Slot {
    array: NO_SLOT,
    index: NO_SLOT,
};

#[derive(Debug, Clone)]
pub struct AdjacencyStore {
    n: usize,
    levels: usize,
    arrays: Vec<AdjacencyArray>,
    /// Back-indices per edge id: one entry per endpoint array holding it.
    back: Vec<[Slot; 2]>,
    slot_writes: u64,
}

impl AdjacencyStore {
    pub fn new(n: usize, levels: usize) -> Self {
        Self {
            n,
            levels,
            arrays: vec![AdjacencyArray::default(); n * levels * 2],
            back: Vec::new(),
            slot_writes: 0,
        }
    }

    pub fn vertices(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Total element writes so far, including copies made by resizing.
    pub fn slot_writes(&self) -> u64 {
        self.slot_writes
    }

    fn key(&self, vertex: VertexId, level: Level, kind: EdgeKind) -> Result<usize, AdjacencyError> {
        if vertex as usize >= self.n || level == 0 || level > self.levels {
            return Err(AdjacencyError::OutOfRange { vertex, level });
        }
        Ok(((vertex as usize * self.levels) + (level - 1)) * 2 + kind.slot())
    }

    fn decode(&self, array: usize) -> (VertexId, Level, EdgeKind) {
        let kind = if array.is_multiple_of(2) {
            EdgeKind::Tree
        } else {
            EdgeKind::NonTree
        };
        let rest = array / 2;
        ((rest / self.levels) as VertexId, rest % self.levels + 1, kind)
    }

    pub fn array(&self, vertex: VertexId, level: Level, kind: EdgeKind) -> &[EdgeId] {
        match self.key(vertex, level, kind) {
            Ok(k) => self.arrays[k].as_slice(),
            Err(_) => &[],
        }
    }

    pub fn count(&self, vertex: VertexId, level: Level, kind: EdgeKind) -> usize {
        self.array(vertex, level, kind).len()
    }

    /// Where `edge` sits in `vertex`'s arrays, if anywhere.
    pub fn locate(&self, edge: EdgeId, vertex: VertexId) -> Option<(Level, EdgeKind, usize)> {
        let sides = self.back.get(edge.index())?;
        sides.iter().find_map(|s| {
            if s.array == NO_SLOT {
                return None;
            }
            let (v, level, kind) = self.decode(s.array as usize);
            (v == vertex).then_some((level, kind, s.index as usize))
        })
    }

    fn side_mut(&mut self, edge: EdgeId, array: u32) -> Option<&mut Slot> {
        self.back
            .get_mut(edge.index())?
            .iter_mut()
            .find(|s| s.array == array)
    }

    /// Appends `edges` to the array of `(vertex, level, kind)`.
    pub fn insert_edges(
        &mut self,
        vertex: VertexId,
        level: Level,
        kind: EdgeKind,
        edges: &[EdgeId],
    ) -> Result<(), AdjacencyError> {
        let key = self.key(vertex, level, kind)?;
        if edges.is_empty() {
            return Ok(());
        }
        // Validate first so a failed batch leaves nothing behind.
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for &e in edges {
            if self.locate(e, vertex).is_some() || !seen.insert(e) {
                return Err(AdjacencyError::DuplicateEdge { edge: e, vertex });
            }
            if let Some(sides) = self.back.get(e.index()) {
                if sides.iter().all(|s| s.array != NO_SLOT) {
                    return Err(AdjacencyError::DuplicateEdge { edge: e, vertex });
                }
            }
        }

        let max_id = edges.iter().map(|e| e.index()).max().unwrap_or(0);
        if self.back.len() <= max_id {
            self.back.resize(max_id + 1, [EMPTY_SIDE; 2]);
        }

        let arr = &mut self.arrays[key];
        let needed = arr.slots.len() + edges.len();
        if needed > arr.capacity {
            let mut cap = arr.capacity.max(MIN_CAPACITY);
            while cap < needed {
                cap *= 2;
            }
            self.slot_writes += arr.slots.len() as u64;
            arr.capacity = cap;
            arr.slots.reserve_exact(cap - arr.slots.len());
        }
        let start = arr.slots.len();
        arr.slots.extend_from_slice(edges);
        self.slot_writes += edges.len() as u64;

        for (offset, &e) in edges.iter().enumerate() {
            let side = self.back[e.index()]
                .iter_mut()
                .find(|s| s.array == NO_SLOT)
                .expect("validated free side");
            *side = Slot {
                array: key as u32,
                index: (start + offset) as u32,
            };
        }
        Ok(())
    }

    /// Removes `edges` from the array of `(vertex, level, kind)`.
    ///
    /// Edges already inside the final `edges.len()` slots are compacted away;
    /// the rest are overwritten with the surviving tail elements.
    pub fn delete_edges(
        &mut self,
        vertex: VertexId,
        level: Level,
        kind: EdgeKind,
        edges: &[EdgeId],
    ) -> Result<(), AdjacencyError> {
        let key = self.key(vertex, level, kind)?;
        if edges.is_empty() {
            return Ok(());
        }
        let mut positions = Vec::with_capacity(edges.len());
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for &e in edges {
            let slot = self
                .back
                .get(e.index())
                .and_then(|sides| sides.iter().find(|s| s.array == key as u32).copied());
            match slot {
                Some(s) if seen.insert(e) => positions.push(s.index as usize),
                _ => {
                    return Err(AdjacencyError::MissingEdge {
                        edge: e,
                        vertex,
                        level,
                        kind,
                    })
                }
            }
        }

        let len = self.arrays[key].slots.len();
        let new_len = len - edges.len();
        let mut in_tail = vec![false; edges.len()];
        let mut holes = Vec::new();
        for &p in &positions {
            if p >= new_len {
                in_tail[p - new_len] = true;
            } else {
                holes.push(p);
            }
        }
        let survivors: Vec<EdgeId> = self.arrays[key].slots[new_len..]
            .iter()
            .zip(&in_tail)
            .filter_map(|(&e, &gone)| (!gone).then_some(e))
            .collect();
        debug_assert_eq!(survivors.len(), holes.len());

        for &e in edges {
            if let Some(side) = self.side_mut(e, key as u32) {
                *side = EMPTY_SIDE;
            }
        }
        for (&hole, &e) in holes.iter().zip(&survivors) {
            self.arrays[key].slots[hole] = e;
            self.side_mut(e, key as u32).expect("survivor is indexed").index = hole as u32;
        }
        self.slot_writes += survivors.len() as u64;

        let arr = &mut self.arrays[key];
        arr.slots.truncate(new_len);
        if arr.capacity > MIN_CAPACITY && new_len <= arr.capacity / 4 {
            while arr.capacity > MIN_CAPACITY && new_len <= arr.capacity / 4 {
                arr.capacity /= 2;
            }
            arr.slots.shrink_to(arr.capacity);
            self.slot_writes += new_len as u64;
        }
        if new_len == 0 && arr.capacity <= MIN_CAPACITY {
            arr.slots = Vec::new();
            arr.capacity = 0;
        }
        Ok(())
    }

    /// The first `l` live slots of the array, in slot order.
    pub fn fetch_edges(
        &self,
        vertex: VertexId,
        level: Level,
        kind: EdgeKind,
        l: usize,
    ) -> Result<&[EdgeId], AdjacencyError> {
        let key = self.key(vertex, level, kind)?;
        let slots = self.arrays[key].as_slice();
        if l > slots.len() {
            return Err(AdjacencyError::FetchTooMany {
                requested: l,
                available: slots.len(),
            });
        }
        Ok(&slots[..l])
    }

    /// Checks every back-index against the arrays. Returns a description of
    /// the first inconsistency.
    pub fn audit(&self) -> Result<(), String> {
        let mut entries = 0usize;
        for (key, arr) in self.arrays.iter().enumerate() {
            for (idx, &e) in arr.slots.iter().enumerate() {
                entries += 1;
                let ok = self.back.get(e.index()).is_some_and(|sides| {
                    sides
                        .iter()
                        .any(|s| s.array == key as u32 && s.index == idx as u32)
                });
                if !ok {
                    let (v, level, kind) = self.decode(key);
                    return Err(format!(
                        "{e} at vertex {v} level {level} {kind:?} slot {idx} has a stale back-index"
                    ));
                }
            }
        }
        let indexed: usize = self
            .back
            .iter()
            .map(|sides| sides.iter().filter(|s| s.array != NO_SLOT).count())
            .sum();
        if indexed != entries {
            return Err(format!("{indexed} back-indices for {entries} array entries"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn ids(v: &[u32]) -> Vec<EdgeId> {
        v.iter().map(|&x| EdgeId(x)).collect()
    }

    #[test]
    fn insert_then_fetch_in_order() {
        let mut s = AdjacencyStore::new(4, 2);
        s.insert_edges(0, 1, EdgeKind::NonTree, &ids(&[5, 6, 7])).unwrap();
        assert_eq!(s.count(0, 1, EdgeKind::NonTree), 3);
        assert_eq!(s.fetch_edges(0, 1, EdgeKind::NonTree, 3).unwrap(), &ids(&[5, 6, 7])[..]);
        assert_eq!(s.fetch_edges(0, 1, EdgeKind::NonTree, 2).unwrap(), &ids(&[5, 6])[..]);
        assert!(s.fetch_edges(0, 1, EdgeKind::NonTree, 0).unwrap().is_empty());
        s.audit().unwrap();
    }

    #[test]
    fn empty_batches_are_noops() {
        let mut s = AdjacencyStore::new(2, 1);
        s.insert_edges(1, 1, EdgeKind::Tree, &[]).unwrap();
        s.delete_edges(1, 1, EdgeKind::Tree, &[]).unwrap();
        assert_eq!(s.count(1, 1, EdgeKind::Tree), 0);
        assert!(s.fetch_edges(1, 1, EdgeKind::Tree, 0).unwrap().is_empty());
    }

    #[test]
    fn delete_middle_keeps_back_indices() {
        let mut s = AdjacencyStore::new(2, 1);
        s.insert_edges(0, 1, EdgeKind::Tree, &ids(&[1, 2, 3])).unwrap();
        s.delete_edges(0, 1, EdgeKind::Tree, &ids(&[2])).unwrap();
        assert_eq!(s.count(0, 1, EdgeKind::Tree), 2);
        let left: BTreeSet<_> = s.array(0, 1, EdgeKind::Tree).iter().copied().collect();
        assert_eq!(left, ids(&[1, 3]).into_iter().collect());
        assert_eq!(s.locate(EdgeId(3), 0).unwrap().2, 1);
        s.audit().unwrap();
        s.delete_edges(0, 1, EdgeKind::Tree, &ids(&[1, 3])).unwrap();
        assert_eq!(s.count(0, 1, EdgeKind::Tree), 0);
        s.audit().unwrap();
    }

    #[test]
    fn errors() {
        let mut s = AdjacencyStore::new(2, 1);
        s.insert_edges(0, 1, EdgeKind::Tree, &ids(&[1])).unwrap();
        assert!(matches!(
            s.insert_edges(0, 1, EdgeKind::Tree, &ids(&[1])),
            Err(AdjacencyError::DuplicateEdge { .. })
        ));
        assert!(matches!(
            s.insert_edges(1, 1, EdgeKind::Tree, &ids(&[2, 2])),
            Err(AdjacencyError::DuplicateEdge { .. })
        ));
        assert!(matches!(
            s.delete_edges(0, 1, EdgeKind::NonTree, &ids(&[1])),
            Err(AdjacencyError::MissingEdge { .. })
        ));
        assert!(matches!(
            s.fetch_edges(0, 1, EdgeKind::Tree, 2),
            Err(AdjacencyError::FetchTooMany { requested: 2, available: 1 })
        ));
        // failed batches leave no trace
        assert_eq!(s.count(1, 1, EdgeKind::Tree), 0);
        s.audit().unwrap();
    }

    #[test]
    fn edge_lives_in_two_endpoint_arrays() {
        let mut s = AdjacencyStore::new(3, 2);
        s.insert_edges(0, 2, EdgeKind::NonTree, &ids(&[0])).unwrap();
        s.insert_edges(2, 2, EdgeKind::NonTree, &ids(&[0])).unwrap();
        assert!(s.insert_edges(1, 2, EdgeKind::NonTree, &ids(&[0])).is_err());
        assert_eq!(s.locate(EdgeId(0), 2), Some((2, EdgeKind::NonTree, 0)));
        s.delete_edges(0, 2, EdgeKind::NonTree, &ids(&[0])).unwrap();
        s.insert_edges(0, 1, EdgeKind::NonTree, &ids(&[0])).unwrap();
        assert_eq!(s.locate(EdgeId(0), 0), Some((1, EdgeKind::NonTree, 0)));
        s.audit().unwrap();
    }

    /// Random batched insert/delete script against a set oracle; also checks
    /// the amortised slot-write bound.
    #[test]
    fn random_script_matches_set_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let vertices = 8u32;
        let mut s = AdjacencyStore::new(vertices as usize, 1);
        let mut oracle: Vec<BTreeSet<EdgeId>> = vec![BTreeSet::new(); vertices as usize];
        let mut next_id = 0u32;
        let mut ops = 0u64;
        while ops < 100_000 {
            let v = rng.gen_range(0..vertices);
            let batch = rng.gen_range(1..40);
            if rng.gen_bool(0.55) {
                let new: Vec<EdgeId> = (0..batch).map(|i| EdgeId(next_id + i)).collect();
                next_id += batch;
                s.insert_edges(v, 1, EdgeKind::NonTree, &new).unwrap();
                oracle[v as usize].extend(new);
            } else {
                let live: Vec<EdgeId> = oracle[v as usize].iter().copied().collect();
                let k = (batch as usize).min(live.len());
                let mut picked = live;
                for i in 0..k {
                    let j = rng.gen_range(i..picked.len());
                    picked.swap(i, j);
                }
                picked.truncate(k);
                s.delete_edges(v, 1, EdgeKind::NonTree, &picked).unwrap();
                for e in &picked {
                    oracle[v as usize].remove(e);
                }
            }
            ops += batch as u64;
            let got: BTreeSet<EdgeId> = s.array(v, 1, EdgeKind::NonTree).iter().copied().collect();
            assert_eq!(got, oracle[v as usize]);
            if ops.is_multiple_of(64) {
                s.audit().unwrap();
            }
        }
        s.audit().unwrap();
        let full = s.count(0, 1, EdgeKind::NonTree);
        let all: BTreeSet<EdgeId> = s.fetch_edges(0, 1, EdgeKind::NonTree, full).unwrap().iter().copied().collect();
        assert_eq!(all, oracle[0]);
        assert!(
            s.slot_writes() <= 8 * ops,
            "slot writes {} exceed 8 x {} ops",
            s.slot_writes(),
            ops
        );
    }
}
