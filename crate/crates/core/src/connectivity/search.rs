//! Replacement-edge searches run after tree edges are deleted.
//!
//! Both strategies receive the split components at level `i` as vertex
//! handles, look for level-`i` non-tree edges that reconnect them, and pay for
//! the search by pushing the edges they examine down to level `i - 1`.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use super::LevelStructure;
use crate::etforest::Repr;
use crate::primitives::{spanning_forest, DisjointSets};
use crate::{EdgeId, EdgeKind, Level, VertexId};

/// What one component saw in one interleaved round.
#[derive(Debug, Default)]
struct Window {
    wmax: usize,
    take: usize,
    edges: Vec<EdgeId>,
    replacements: Vec<EdgeId>,
}

impl LevelStructure {
    /// One handle per distinct tree of `F_i`; the first handle of a tree wins.
    fn components_at(&mut self, i: Level, handles: Vec<VertexId>) -> Vec<VertexId> {
        self.counters.repr_queries += handles.len() as u64;
        let f = &self.forests[i - 1];
        let mut seen = HashSet::with_capacity(handles.len());
        handles.into_iter().filter(|&h| seen.insert(f.repr_of(h))).collect()
    }

    fn size_at(&self, i: Level, c: VertexId) -> usize {
        self.forests[i - 1].repr_total(self.forests[i - 1].repr_of(c)).vertices as usize
    }

    fn nontree_at(&self, i: Level, c: VertexId) -> usize {
        self.forests[i - 1].repr_total(self.forests[i - 1].repr_of(c)).nontree as usize
    }

    fn is_replacement(&self, i: Level, e: EdgeId) -> bool {
        let r = self.rec(e);
        let f = &self.forests[i - 1];
        f.repr_of(r.u) != f.repr_of(r.v)
    }

    /// Moves every level-`i` tree edge of the given components to level
    /// `i - 1`. Safe because each component has at most `2^(i-1)` vertices.
    fn push_tree_edges(&mut self, i: Level, comps: &[VertexId]) {
        if i == 1 {
            return;
        }
        let mut edges = Vec::new();
        {
            let f = &self.forests[i - 1];
            for &c in comps {
                let k = f.num_tree_edges(c).expect("valid vertex");
                if k > 0 {
                    edges.extend(f.fetch_level_edges(c, k, EdgeKind::Tree, &self.adj).expect("counts match"));
                }
            }
        }
        self.relocate(&edges, (i, EdgeKind::Tree), (i - 1, EdgeKind::Tree));
        self.link(i - 1, &edges);
    }

    /// Spanning forest over replacement candidates, keyed by their `F_i`
    /// trees. Returns the selected candidates in input order.
    fn select_forest_edges(&mut self, i: Level, candidates: &[EdgeId]) -> Vec<EdgeId> {
        self.counters.repr_queries += 2 * candidates.len() as u64;
        let f = &self.forests[i - 1];
        let pairs: Vec<(Repr, Repr)> = candidates
            .iter()
            .map(|&e| {
                let r = self.rec(e);
                (f.repr_of(r.u), f.repr_of(r.v))
            })
            .collect();
        spanning_forest(&pairs).edges.into_iter().map(|k| candidates[k]).collect()
    }

    /// Doubling search of one component: examines windows of 1, 2, 4, ...
    /// non-tree incidences, pushing non-replacements as it goes, and stops
    /// at the first window holding a replacement edge.
    pub(crate) fn component_search(&mut self, i: Level, c: VertexId) -> Option<EdgeId> {
        let wmax = self.nontree_at(i, c);
        let mut w = 1usize;
        while w <= wmax {
            let available = self.nontree_at(i, c);
            if available == 0 {
                break;
            }
            self.counters.phases += 1;
            let take = w.min(wmax).min(available);
            let window = self.forests[i - 1]
                .fetch_level_edges(c, take, EdgeKind::NonTree, &self.adj)
                .expect("take within count");
            self.counters.repr_queries += 2 * window.len() as u64;
            let (found, rest): (Vec<EdgeId>, Vec<EdgeId>) =
                window.into_iter().partition(|&e| self.is_replacement(i, e));
            if i > 1 {
                self.relocate(&rest, (i, EdgeKind::NonTree), (i - 1, EdgeKind::NonTree));
            } else {
                debug_assert!(rest.is_empty(), "level-1 components are single vertices");
            }
            if let Some(&r) = found.first() {
                return Some(r);
            }
            w *= 2;
        }
        None
    }

    /// Round-based search that restarts the doubling every round and commits
    /// replacement edges as soon as each round ends.
    pub(crate) fn parallel_level_search(
        &mut self,
        i: Level,
        handles: Vec<VertexId>,
        found: &mut Vec<EdgeId>,
    ) -> Vec<VertexId> {
        let limit = 1usize << (i - 1);
        self.link(i, found);
        let comps = self.components_at(i, handles);
        let (mut active, mut done): (Vec<VertexId>, Vec<VertexId>) =
            comps.into_iter().partition(|&c| self.size_at(i, c) <= limit);
        while !active.is_empty() {
            self.counters.rounds_per_level[i - 1] += 1;
            self.push_tree_edges(i, &active);
            let mut candidates = Vec::new();
            for &c in &active {
                candidates.extend(self.component_search(i, c));
            }
            let chosen = self.select_forest_edges(i, &candidates);
            self.relocate(&chosen, (i, EdgeKind::NonTree), (i, EdgeKind::Tree));
            self.link(i, &chosen);
            self.counters.replacements += chosen.len() as u64;
            found.extend_from_slice(&chosen);

            let comps = self.components_at(i, std::mem::take(&mut active));
            for c in comps {
                if self.nontree_at(i, c) == 0 || self.size_at(i, c) > limit {
                    done.push(c);
                } else {
                    active.push(c);
                }
            }
        }
        done
    }

    fn window(&self, i: Level, c: VertexId, w: usize) -> Window {
        let f = &self.forests[i - 1];
        let wmax = self.nontree_at(i, c);
        let take = w.min(wmax);
        let edges = f
            .fetch_level_edges(c, take, EdgeKind::NonTree, &self.adj)
            .expect("take within count");
        let replacements = edges.iter().copied().filter(|&e| self.is_replacement(i, e)).collect();
        Window {
            wmax,
            take,
            edges,
            replacements,
        }
    }

    /// Search with one doubling schedule for the whole level. Tree edges
    /// found here are only committed when the level ends, and examined
    /// windows are buffered and pushed down together at the end.
    pub(crate) fn interleaved_level_search(
        &mut self,
        i: Level,
        handles: Vec<VertexId>,
        found: &mut Vec<EdgeId>,
    ) -> Vec<VertexId> {
        let limit = 1usize << (i - 1);
        self.link(i, found);
        let comps = self.components_at(i, handles);
        let (comps, mut done): (Vec<VertexId>, Vec<VertexId>) =
            comps.into_iter().partition(|&c| self.size_at(i, c) <= limit);
        self.push_tree_edges(i, &comps);

        // Supercomponents over F_i trees. F_i does not change until the end
        // of the level, so its representatives stay valid as keys.
        let mut merged = DisjointSets::default();
        let mut slot: HashMap<Repr, usize> = HashMap::new();
        let mut intern = |r: Repr, ls: &LevelStructure, merged: &mut DisjointSets| -> usize {
            *slot
                .entry(r)
                .or_insert_with(|| merged.push(ls.forests[i - 1].repr_total(r).vertices))
        };
        let comp_slot: Vec<usize> = comps
            .iter()
            .map(|&c| intern(self.forests[i - 1].repr_of(c), self, &mut merged))
            .collect();

        let mut active: Vec<usize> = (0..comps.len()).collect();
        let mut buffered = vec![0usize; comps.len()];
        let mut tree_found: Vec<EdgeId> = Vec::new();
        let mut pushed: Vec<EdgeId> = Vec::new();
        let mut pushed_set: HashSet<EdgeId> = HashSet::new();
        let mut r = 0u32;
        while !active.is_empty() {
            self.counters.rounds_per_level[i - 1] += 1;
            let w = 1usize << r.min(62);
            if r >= 1 {
                let need = 1usize << (r - 1).min(62);
                for &k in &active {
                    self.counters.buffer_checks += 1;
                    if buffered[k] < need {
                        self.counters.buffer_shortfalls += 1;
                    }
                }
            }

            let windows: Vec<Window> = if self.parallel() {
                let this = &*self;
                this.run(|| active.par_iter().map(|&k| this.window(i, comps[k], w)).collect())
            } else {
                active.iter().map(|&k| self.window(i, comps[k], w)).collect()
            };
            self.counters.repr_queries += windows.iter().map(|x| 2 * x.edges.len() as u64).sum::<u64>();

            // replacement edges that join distinct supercomponents
            let f = &self.forests[i - 1];
            let candidates: Vec<EdgeId> = windows.iter().flat_map(|x| x.replacements.iter().copied()).collect();
            let pairs: Vec<(usize, usize)> = candidates
                .iter()
                .map(|&e| {
                    let rec = self.rec(e);
                    let a = intern(f.repr_of(rec.u), self, &mut merged);
                    let b = intern(f.repr_of(rec.v), self, &mut merged);
                    (merged.find(a), merged.find(b))
                })
                .collect();
            self.counters.repr_queries += 2 * candidates.len() as u64;
            for k in spanning_forest(&pairs).edges {
                merged.union(pairs[k].0, pairs[k].1);
                tree_found.push(candidates[k]);
            }

            // buffer windows of components that stay small and have more to see
            let mut keep = Vec::with_capacity(active.len());
            for (&k, win) in active.iter().zip(&windows) {
                let small = merged.set_size(comp_slot[k]) as usize <= limit;
                if i > 1 && small && win.take < win.wmax {
                    let fresh: Vec<EdgeId> = win.edges.iter().copied().filter(|e| pushed_set.insert(*e)).collect();
                    self.detach(&fresh, i, EdgeKind::NonTree);
                    pushed.extend_from_slice(&fresh);
                    buffered[k] = win.take;
                    if self.nontree_at(i, comps[k]) > 0 {
                        keep.push(k);
                        continue;
                    }
                } else {
                    buffered[k] = 0;
                }
                done.push(comps[k]);
            }
            active = keep;
            r += 1;
        }

        // Pushed edges go to level i - 1. Those that join distinct F_i trees
        // become tree edges there, preferring edges already chosen above.
        let chosen_set: HashSet<EdgeId> = tree_found.iter().copied().collect();
        let ordered: Vec<EdgeId> = pushed
            .iter()
            .copied()
            .filter(|e| chosen_set.contains(e))
            .chain(pushed.iter().copied().filter(|e| !chosen_set.contains(e)))
            .collect();
        let lower_tree = self.select_forest_edges(i, &ordered);
        let lower_set: HashSet<EdgeId> = lower_tree.iter().copied().collect();
        let lower_rest: Vec<EdgeId> = pushed.iter().copied().filter(|e| !lower_set.contains(e)).collect();
        self.attach(&lower_tree, i - 1, EdgeKind::Tree);
        self.link(i - 1, &lower_tree);
        self.link(i, &lower_tree);
        self.attach(&lower_rest, i - 1, EdgeKind::NonTree);

        // Remaining chosen edges are promoted at level i unless the pushed
        // tree edges already connect their endpoints.
        let remaining: Vec<EdgeId> = tree_found.into_iter().filter(|e| !pushed_set.contains(e)).collect();
        let promoted = self.select_forest_edges(i, &remaining);
        self.relocate(&promoted, (i, EdgeKind::NonTree), (i, EdgeKind::Tree));
        self.link(i, &promoted);

        self.counters.replacements += (lower_tree.len() + promoted.len()) as u64;
        found.extend_from_slice(&lower_tree);
        found.extend_from_slice(&promoted);
        done
    }
}
