//! Bulk primitives shared by the other modules: semisort, pack, a batch
//! dictionary and a static spanning forest.
//!
//! These are contracts first. The realisations here are sequential and
//! deterministic; nothing in the engine depends on inter-key order or on a
//! particular hash function.

use std::collections::HashMap;
use std::hash::Hash;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrimitiveError {
    #[error("pack: {items} items but {flags} flags")]
    LengthMismatch { items: usize, flags: usize },
    #[error("batch dictionary: operations {first} and {second} both mutate the same key")]
    ConflictingMutation { first: usize, second: usize },
}

/// Groups items so that equal keys are contiguous.
///
/// Keys appear in order of their first occurrence and items keep their input
/// order within a run, but callers must not rely on either.
pub fn semisort<K: Hash + Eq + Clone, V>(items: Vec<(K, V)>) -> Vec<(K, V)> {
    if items.len() <= 1 {
        return items;
    }
    let mut bucket_of: HashMap<K, usize> = HashMap::new();
    let mut buckets: Vec<Vec<(K, V)>> = Vec::new();
    for (key, value) in items {
        let next = buckets.len();
        let b = *bucket_of.entry(key.clone()).or_insert(next);
        if b == buckets.len() {
            buckets.push(Vec::new());
        }
        buckets[b].push((key, value));
    }
    buckets.into_iter().flatten().collect()
}

/// Splits a semisorted sequence into its runs of equal keys.
pub fn runs<K: PartialEq, V>(items: &[(K, V)]) -> impl Iterator<Item = &[(K, V)]> + '_ {
    let mut start = 0;
    std::iter::from_fn(move || {
        if start >= items.len() {
            return None;
        }
        let key = &items[start].0;
        let len = items[start..].iter().take_while(|(k, _)| k == key).count();
        let run = &items[start..start + len];
        start += len;
        Some(run)
    })
}

/// Keeps the items whose flag is set, in their original order.
pub fn pack<T>(items: Vec<T>, flags: &[bool]) -> Result<Vec<T>, PrimitiveError> {
    if items.len() != flags.len() {
        return Err(PrimitiveError::LengthMismatch {
            items: items.len(),
            flags: flags.len(),
        });
    }
    Ok(items
        .into_iter()
        .zip(flags)
        .filter_map(|(item, &keep)| keep.then_some(item))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DictOp<K, V> {
    Insert(K, V),
    Delete(K),
    Lookup(K),
}

/// Dictionary driven by batches of insert/delete/lookup operations.
///
/// Lookups in a batch observe the state left by earlier batches. At most one
/// mutation per key is allowed in a batch.
#[derive(Debug, Clone)]
pub struct BatchDictionary<K, V> {
    map: HashMap<K, V>,
}

impl<K: Hash + Eq + Clone, V: Clone> Default for BatchDictionary<K, V> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K: Hash + Eq + Clone, V: Clone> BatchDictionary<K, V> {
    pub fn new() -> Self {
        Self {
            map: HashMap::new(),
        }
    }

    /// Applies one batch. Returns one entry per `Lookup`, in batch order.
    /// A conflicting batch is rejected without side effects.
    pub fn apply(&mut self, ops: Vec<DictOp<K, V>>) -> Result<Vec<Option<V>>, PrimitiveError> {
        let mut mutated: HashMap<&K, usize> = HashMap::new();
        for (idx, op) in ops.iter().enumerate() {
            let key = match op {
                DictOp::Insert(k, _) | DictOp::Delete(k) => k,
                DictOp::Lookup(_) => continue,
            };
            if let Some(&first) = mutated.get(key) {
                return Err(PrimitiveError::ConflictingMutation { first, second: idx });
            }
            mutated.insert(key, idx);
        }

        let answers = ops
            .iter()
            .filter_map(|op| match op {
                DictOp::Lookup(k) => Some(self.map.get(k).cloned()),
                _ => None,
            })
            .collect();
        for op in ops {
            match op {
                DictOp::Insert(k, v) => {
                    self.map.insert(k, v);
                }
                DictOp::Delete(k) => {
                    self.map.remove(&k);
                }
                DictOp::Lookup(_) => {}
            }
        }
        Ok(answers)
    }

    pub fn get(&self, key: &K) -> Option<&V> {
        self.map.get(key)
    }

    pub fn contains_key(&self, key: &K) -> bool {
        self.map.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &V)> {
        self.map.iter()
    }
}

/// Union-find with union by size and path halving.
///
/// Ties in size go to the lower index, which keeps results reproducible.
#[derive(Debug, Clone, Default)]
pub struct DisjointSets {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    /// Adds a singleton with the given weight and returns its index.
    pub fn push(&mut self, weight: u32) -> usize {
        let id = self.parent.len();
        self.parent.push(id as u32);
        self.size.push(weight);
        id
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let grand = self.parent[self.parent[x] as usize];
            self.parent[x] = grand;
            x = grand as usize;
        }
        x
    }

    /// Merges the sets of `a` and `b`. Returns false if already merged.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] || (self.size[ra] == self.size[rb] && rb < ra) {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        true
    }

    /// Total weight of the set containing `x`.
    pub fn set_size(&mut self, x: usize) -> u32 {
        let r = self.find(x);
        self.size[r]
    }
}

/// Result of [`spanning_forest`].
#[derive(Debug, Clone)]
pub struct SpanningForest<L> {
    /// Indices of the selected input edges, ascending.
    pub edges: Vec<usize>,
    /// Component label per node; labels are `0..components` in order of the
    /// node's first appearance in the input.
    pub labels: HashMap<L, usize>,
}

impl<L: Hash + Eq> SpanningForest<L> {
    pub fn components(&self) -> usize {
        self.labels.values().copied().max().map_or(0, |m| m + 1)
    }
}

/// Maximal acyclic subset of a multigraph given as an edge list over
/// arbitrary node labels. Edges are scanned in index order, so the lower
/// index wins among parallel candidates; self-loops are never selected.
pub fn spanning_forest<L: Hash + Eq + Clone>(edges: &[(L, L)]) -> SpanningForest<L> {
    let mut ids: HashMap<L, usize> = HashMap::with_capacity(edges.len() * 2);
    let mut order: Vec<L> = Vec::new();
    let mut intern = |l: &L, ids: &mut HashMap<L, usize>| -> usize {
        if let Some(&id) = ids.get(l) {
            return id;
        }
        let id = order.len();
        order.push(l.clone());
        ids.insert(l.clone(), id);
        id
    };
    let endpoints: Vec<(usize, usize)> = edges
        .iter()
        .map(|(a, b)| {
            let a = intern(a, &mut ids);
            let b = intern(b, &mut ids);
            (a, b)
        })
        .collect();

    let mut dsu = DisjointSets::new(order.len());
    let mut chosen = Vec::new();
    for (idx, &(a, b)) in endpoints.iter().enumerate() {
        if a != b && dsu.union(a, b) {
            chosen.push(idx);
        }
    }

    let mut root_label: HashMap<usize, usize> = HashMap::new();
    let mut labels = HashMap::with_capacity(order.len());
    for (id, l) in order.into_iter().enumerate() {
        let root = dsu.find(id);
        let next = root_label.len();
        let label = *root_label.entry(root).or_insert(next);
        labels.insert(l, label);
    }
    SpanningForest {
        edges: chosen,
        labels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::{HashSet, VecDeque};

    fn assert_contiguous<K: Hash + Eq + Clone + std::fmt::Debug, V>(out: &[(K, V)]) {
        let mut closed: HashSet<K> = HashSet::new();
        let mut current: Option<&K> = None;
        for (k, _) in out {
            if current != Some(k) {
                if let Some(prev) = current {
                    closed.insert(prev.clone());
                }
                assert!(!closed.contains(k), "key {k:?} appears in two runs");
                current = Some(k);
            }
        }
    }

    #[test]
    fn semisort_empty() {
        let out: Vec<(u32, u32)> = semisort(vec![]);
        assert!(out.is_empty());
    }

    #[test]
    fn semisort_groups_small_example() {
        let out = semisort(vec![('a', 1), ('b', 2), ('a', 3)]);
        assert_eq!(out.len(), 3);
        assert_contiguous(&out);
        let mut sorted = out.clone();
        sorted.sort();
        assert_eq!(sorted, vec![('a', 1), ('a', 3), ('b', 2)]);
    }

    #[test]
    fn semisort_random_contiguity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let items: Vec<(u32, u32)> = (0..10_000).map(|i| (rng.gen_range(0..500), i)).collect();
        let out = semisort(items.clone());
        assert_contiguous(&out);
        let mut a = items;
        let mut b = out;
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn runs_split_groups() {
        let items = semisort(vec![(1, 'x'), (2, 'y'), (1, 'z')]);
        let lens: Vec<usize> = runs(&items).map(|r| r.len()).collect();
        assert_eq!(lens, vec![2, 1]);
    }

    #[test]
    fn pack_examples() {
        assert_eq!(pack(vec![1, 2, 3], &[true, false, true]).unwrap(), vec![1, 3]);
        assert_eq!(pack(Vec::<u8>::new(), &[]).unwrap(), Vec::<u8>::new());
        assert_eq!(
            pack(vec![1, 2], &[true]),
            Err(PrimitiveError::LengthMismatch { items: 2, flags: 1 })
        );
    }

    #[test]
    fn pack_random_matches_filter() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let items: Vec<u64> = (0..10_000).map(|_| rng.gen()).collect();
        let flags: Vec<bool> = (0..10_000).map(|_| rng.gen_bool(0.3)).collect();
        let expected: Vec<u64> = items
            .iter()
            .zip(&flags)
            .filter(|(_, f)| **f)
            .map(|(x, _)| *x)
            .collect();
        assert_eq!(pack(items, &flags).unwrap(), expected);
    }

    #[test]
    fn dictionary_basics() {
        let mut d: BatchDictionary<&str, u32> = BatchDictionary::new();
        assert_eq!(d.apply(vec![DictOp::Lookup("e1")]).unwrap(), vec![None]);
        d.apply(vec![DictOp::Insert("e1", 7)]).unwrap();
        assert_eq!(d.apply(vec![DictOp::Lookup("e1")]).unwrap(), vec![Some(7)]);
    }

    #[test]
    fn dictionary_lookup_sees_previous_batch_only() {
        let mut d: BatchDictionary<u32, u32> = BatchDictionary::new();
        let out = d
            .apply(vec![DictOp::Lookup(1), DictOp::Insert(1, 10), DictOp::Lookup(1)])
            .unwrap();
        assert_eq!(out, vec![None, None]);
        assert_eq!(d.get(&1), Some(&10));
    }

    #[test]
    fn dictionary_rejects_conflicts_atomically() {
        let mut d: BatchDictionary<u32, u32> = BatchDictionary::new();
        let err = d
            .apply(vec![DictOp::Insert(2, 1), DictOp::Insert(1, 1), DictOp::Delete(1)])
            .unwrap_err();
        assert_eq!(err, PrimitiveError::ConflictingMutation { first: 1, second: 2 });
        assert!(d.is_empty());
    }

    #[test]
    fn dictionary_random_script_matches_hashmap() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut d: BatchDictionary<u32, u32> = BatchDictionary::new();
        let mut oracle: HashMap<u32, u32> = HashMap::new();
        for _ in 0..500 {
            let mut ops = Vec::new();
            let mut used = HashSet::new();
            for _ in 0..rng.gen_range(1..20) {
                let k = rng.gen_range(0..64);
                match rng.gen_range(0..3) {
                    0 if used.insert(k) => ops.push(DictOp::Insert(k, rng.gen())),
                    1 if used.insert(k) => ops.push(DictOp::Delete(k)),
                    _ => ops.push(DictOp::Lookup(k)),
                }
            }
            let expected: Vec<Option<u32>> = ops
                .iter()
                .filter_map(|op| match op {
                    DictOp::Lookup(k) => Some(oracle.get(k).copied()),
                    _ => None,
                })
                .collect();
            for op in &ops {
                match op {
                    DictOp::Insert(k, v) => {
                        oracle.insert(*k, *v);
                    }
                    DictOp::Delete(k) => {
                        oracle.remove(k);
                    }
                    DictOp::Lookup(_) => {}
                }
            }
            assert_eq!(d.apply(ops).unwrap(), expected);
        }
        assert_eq!(d.len(), oracle.len());
    }

    #[test]
    fn spanning_forest_cycle() {
        let sf = spanning_forest(&[('a', 'b'), ('b', 'c'), ('c', 'd'), ('d', 'a')]);
        assert_eq!(sf.edges, vec![0, 1, 2]);
        let l = sf.labels[&'a'];
        assert!(['b', 'c', 'd'].iter().all(|x| sf.labels[x] == l));
    }

    #[test]
    fn spanning_forest_duplicates_and_loops() {
        let sf = spanning_forest(&[(1, 1), (1, 2), (1, 2)]);
        assert_eq!(sf.edges, vec![1]);
        assert_eq!(sf.components(), 1);
    }

    fn bfs_labels(edges: &[(u32, u32)]) -> HashMap<u32, u32> {
        let mut adj: HashMap<u32, Vec<u32>> = HashMap::new();
        for &(a, b) in edges {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        let mut label = HashMap::new();
        let mut nodes: Vec<u32> = adj.keys().copied().collect();
        nodes.sort();
        for s in nodes {
            if label.contains_key(&s) {
                continue;
            }
            label.insert(s, s);
            let mut q = VecDeque::from([s]);
            while let Some(x) = q.pop_front() {
                for &y in &adj[&x] {
                    if let std::collections::hash_map::Entry::Vacant(e) = label.entry(y) {
                        e.insert(s);
                        q.push_back(y);
                    }
                }
            }
        }
        label
    }

    #[test]
    fn spanning_forest_random_vs_bfs() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let edges: Vec<(u32, u32)> = (0..200)
            .map(|_| (rng.gen_range(0..150), rng.gen_range(0..150)))
            .collect();
        let sf = spanning_forest(&edges);
        let bfs = bfs_labels(&edges);
        let nodes: Vec<u32> = bfs.keys().copied().collect();
        for &a in &nodes {
            for &b in &nodes {
                assert_eq!(bfs[&a] == bfs[&b], sf.labels[&a] == sf.labels[&b]);
            }
        }
        let comps: HashSet<u32> = bfs.values().copied().collect();
        assert_eq!(sf.edges.len(), nodes.len() - comps.len());
    }

    proptest! {
        #[test]
        fn spanning_forest_is_acyclic_and_maximal(
            edges in proptest::collection::vec((0u8..24, 0u8..24), 0..80)
        ) {
            let sf = spanning_forest(&edges);
            let mut dsu = DisjointSets::new(24);
            for &i in &sf.edges {
                let (a, b) = edges[i];
                prop_assert!(dsu.union(a as usize, b as usize), "selected edge closes a cycle");
            }
            for &(a, b) in &edges {
                prop_assert_eq!(dsu.find(a as usize), dsu.find(b as usize));
            }
        }

        #[test]
        fn semisort_preserves_multiset(items in proptest::collection::vec((0u8..16, any::<u16>()), 0..200)) {
            let out = semisort(items.clone());
            assert_contiguous(&out);
            let mut a = items;
            let mut b = out;
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn pack_equals_filter(items in proptest::collection::vec((any::<u32>(), any::<bool>()), 0..200)) {
            let (vals, flags): (Vec<u32>, Vec<bool>) = items.iter().copied().unzip();
            let expected: Vec<u32> = items.iter().filter(|(_, f)| *f).map(|(v, _)| *v).collect();
            prop_assert_eq!(pack(vals, &flags).unwrap(), expected);
        }
    }
}
