//! Euler tour forest for one level, stored as skip lists.
//!
//! Each tree is kept as the linear sequence of its Euler tour (vertex loop
//! nodes and one node per directed arc), headed by a sentinel that is taller
//! than every element. The sentinel is the tree's representative. Every node
//! carries, per skip-list level `j`, the sum of the element values from the
//! node up to (not including) its level-`j` successor, so the sentinel's top
//! sum is the whole-tree total.
//!
//! Element values only live on vertex loops: the number of level-`i` tree
//! and non-tree edge endpoints stored at that vertex plus a vertex count.

use std::collections::{HashMap, HashSet};
use std::ops::{Add, AddAssign, Sub, SubAssign};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::adjstore::{AdjacencyError, AdjacencyStore};
use crate::primitives::{runs, semisort, DisjointSets};
use crate::{canonical, EdgeId, EdgeKind, Level, VertexId};

/// Height of sentinels; elements are at most one shorter.
pub const MAX_HEIGHT: usize = 20;
const TOP: usize = MAX_HEIGHT - 1;
const NIL: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ForestError {
    #[error("vertex {0} is not in the forest")]
    UnknownVertex(VertexId),
    #[error("self-loop at vertex {0}")]
    SelfLoop(VertexId),
    #[error("edge ({0}, {1}) is already in the forest")]
    EdgeExists(VertexId, VertexId),
    #[error("edge ({0}, {1}) is not in the forest")]
    NotAnEdge(VertexId, VertexId),
    #[error("linking ({0}, {1}) would close a cycle")]
    WouldCreateCycle(VertexId, VertexId),
    #[error("count at vertex {vertex} would become negative")]
    NegativeCount { vertex: VertexId },
    #[error("requested {requested} edges but the tree holds {available}")]
    FetchTooMany { requested: usize, available: usize },
    #[error("{edge} does not touch the tree of vertex {vertex}")]
    ForeignEdge { edge: EdgeId, vertex: VertexId },
    #[error(transparent)]
    Adjacency(#[from] AdjacencyError),
}

/// Augmented value carried by a tour node.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct AugValue {
    pub nontree: u32,
    pub tree: u32,
    pub vertices: u32,
}

impl AugValue {
    pub const ZERO: AugValue = AugValue {
        nontree: 0,
        tree: 0,
        vertices: 0,
    };

    pub fn count(&self, kind: EdgeKind) -> u32 {
        match kind {
            EdgeKind::Tree => self.tree,
            EdgeKind::NonTree => self.nontree,
        }
    }

    fn of_kind(kind: EdgeKind, k: u32) -> Self {
        match kind {
            EdgeKind::Tree => AugValue {
                tree: k,
                ..Self::ZERO
            },
            EdgeKind::NonTree => AugValue {
                nontree: k,
                ..Self::ZERO
            },
        }
    }
}

impl Add for AugValue {
    type Output = AugValue;
    fn add(self, o: AugValue) -> AugValue {
        AugValue {
            nontree: self.nontree + o.nontree,
            tree: self.tree + o.tree,
            vertices: self.vertices + o.vertices,
        }
    }
}

impl Sub for AugValue {
    type Output = AugValue;
    fn sub(self, o: AugValue) -> AugValue {
        AugValue {
            nontree: self.nontree - o.nontree,
            tree: self.tree - o.tree,
            vertices: self.vertices - o.vertices,
        }
    }
}

impl AddAssign for AugValue {
    fn add_assign(&mut self, o: AugValue) {
        *self = *self + o;
    }
}

impl SubAssign for AugValue {
    fn sub_assign(&mut self, o: AugValue) {
        *self = *self - o;
    }
}

/// What a tour node stands for.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum TourElement {
    Vertex(VertexId),
    Arc(VertexId, VertexId),
    Sentinel,
    Free,
}

/// Tree representative. Only meaningful until the forest is next linked or
/// cut.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Repr(pub u32);

#[derive(Clone, Debug)]
struct Node {
    elem: TourElement,
    height: u8,
    base: u32,
}

#[derive(Clone, Copy, Debug)]
struct Link {
    next: u32,
    prev: u32,
    sum: AugValue,
}

const BLANK: Link = Link {
    next: NIL,
    prev: NIL,
    sum: AugValue::ZERO,
};

#[derive(Clone, Debug)]
pub struct EulerTourForest {
    level: Level,
    n: usize,
    seed: u64,
    nodes: Vec<Node>,
    links: Vec<Link>,
    free: Vec<Vec<u32>>,
    /// Canonical edge -> (arc min->max, arc max->min).
    arcs: HashMap<(VertexId, VertexId), [u32; 2]>,
    rng: ChaCha8Rng,
}

impl EulerTourForest {
    /// A forest of `n` isolated vertices.
    pub fn new(n: usize, level: Level, seed: u64) -> Self {
        let mut f = EulerTourForest {
            level,
            n,
            seed,
            nodes: Vec::with_capacity(2 * n),
            links: Vec::with_capacity(4 * n),
            free: vec![Vec::new(); MAX_HEIGHT + 1],
            arcs: HashMap::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        for v in 0..n as VertexId {
            let h = f.random_height();
            let id = f.alloc(TourElement::Vertex(v), h);
            debug_assert_eq!(id, v);
            f.links[f.nodes[id as usize].base as usize].sum = AugValue {
                vertices: 1,
                ..AugValue::ZERO
            };
        }
        for v in 0..n as u32 {
            f.make_singleton(v);
        }
        f
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn vertices(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.arcs.contains_key(&canonical(u, v))
    }

    /// Forest edges as canonical pairs, in no particular order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.arcs.keys().copied()
    }

    // ---- node plumbing ----

    #[inline]
    fn lk(&self, x: u32, j: usize) -> &Link {
        &self.links[self.nodes[x as usize].base as usize + j]
    }

    #[inline]
    fn lk_mut(&mut self, x: u32, j: usize) -> &mut Link {
        let b = self.nodes[x as usize].base as usize;
        &mut self.links[b + j]
    }

    #[inline]
    fn next(&self, x: u32, j: usize) -> u32 {
        self.lk(x, j).next
    }

    #[inline]
    fn prev(&self, x: u32, j: usize) -> u32 {
        self.lk(x, j).prev
    }

    #[inline]
    fn sum(&self, x: u32, j: usize) -> AugValue {
        self.lk(x, j).sum
    }

    #[inline]
    fn height(&self, x: u32) -> usize {
        self.nodes[x as usize].height as usize
    }

    #[inline]
    fn is_sentinel(&self, x: u32) -> bool {
        self.nodes[x as usize].elem == TourElement::Sentinel
    }

    fn random_height(&mut self) -> usize {
        let bits = self.rng.next_u32();
        (1 + bits.trailing_ones() as usize).min(MAX_HEIGHT - 1)
    }

    fn alloc(&mut self, elem: TourElement, height: usize) -> u32 {
        if let Some(id) = self.free[height].pop() {
            let node = &mut self.nodes[id as usize];
            node.elem = elem;
            let base = node.base as usize;
            self.links[base..base + height].fill(BLANK);
            return id;
        }
        let id = self.nodes.len() as u32;
        let base = self.links.len() as u32;
        self.links.extend(std::iter::repeat_n(BLANK, height));
        self.nodes.push(Node {
            elem,
            height: height as u8,
            base,
        });
        id
    }

    fn release(&mut self, x: u32) {
        let h = self.height(x);
        self.nodes[x as usize].elem = TourElement::Free;
        self.free[h].push(x);
    }

    /// Puts an unlinked element into a fresh list of its own.
    fn make_singleton(&mut self, x: u32) -> u32 {
        let s = self.alloc(TourElement::Sentinel, MAX_HEIGHT);
        let hx = self.height(x);
        let val = self.sum(x, 0);
        for j in 0..MAX_HEIGHT {
            if j < hx {
                *self.lk_mut(s, j) = Link {
                    next: x,
                    prev: NIL,
                    sum: AugValue::ZERO,
                };
                *self.lk_mut(x, j) = Link {
                    next: NIL,
                    prev: s,
                    sum: val,
                };
            } else {
                *self.lk_mut(s, j) = Link {
                    next: NIL,
                    prev: NIL,
                    sum: val,
                };
            }
        }
        s
    }

    // ---- skip-list sequence operations ----

    /// The sentinel heading `x`'s list.
    fn head(&self, mut x: u32) -> u32 {
        while !self.is_sentinel(x) {
            x = self.prev(x, self.height(x) - 1);
        }
        x
    }

    /// Cuts the list just before `x`; returns the sentinel of the new list
    /// that starts at `x`.
    fn split_before(&mut self, x: u32) -> u32 {
        debug_assert!(!self.is_sentinel(x));
        let s = self.alloc(TourElement::Sentinel, MAX_HEIGHT);
        let mut p = self.prev(x, 0);
        let mut left = self.sum(p, 0);
        for j in 0..MAX_HEIGHT {
            if j > 0 {
                while self.height(p) <= j {
                    p = self.prev(p, j - 1);
                    left += self.sum(p, j - 1);
                }
            }
            let Link { next: q, sum: old, .. } = *self.lk(p, j);
            {
                let l = self.lk_mut(p, j);
                l.next = NIL;
                l.sum = left;
            }
            *self.lk_mut(s, j) = Link {
                next: q,
                prev: NIL,
                sum: old - left,
            };
            if q != NIL {
                self.lk_mut(q, j).prev = s;
            }
        }
        s
    }

    /// Appends list `b` to list `a` and frees `b`'s sentinel.
    fn join(&mut self, a: u32, b: u32) {
        let mut last = [NIL; MAX_HEIGHT];
        let mut y = a;
        for j in (0..MAX_HEIGHT).rev() {
            loop {
                let nx = self.next(y, j);
                if nx == NIL {
                    break;
                }
                y = nx;
            }
            last[j] = y;
        }
        for (j, &t) in last.iter().enumerate() {
            let Link { next: f, sum: add, .. } = *self.lk(b, j);
            let l = self.lk_mut(t, j);
            l.next = f;
            l.sum += add;
            if f != NIL {
                self.lk_mut(f, j).prev = t;
            }
        }
        self.release(b);
    }

    /// Rotates `x`'s tour so that `x` comes first; returns the sentinel.
    fn rotate_to_front(&mut self, x: u32) -> u32 {
        let s = self.head(x);
        if self.next(s, 0) == x {
            return s;
        }
        let s2 = self.split_before(x);
        self.join(s2, s);
        s2
    }

    /// Adds `add - sub` to the value of element `x` and every sum covering it.
    fn offset(&mut self, x: u32, add: AugValue, sub: AugValue) {
        let mut y = x;
        for j in 0..MAX_HEIGHT {
            if j > 0 {
                while self.height(y) <= j {
                    y = self.prev(y, j - 1);
                }
            }
            let l = self.lk_mut(y, j);
            l.sum = (l.sum + add) - sub;
        }
    }

    fn check_vertex(&self, v: VertexId) -> Result<(), ForestError> {
        if (v as usize) < self.n {
            Ok(())
        } else {
            Err(ForestError::UnknownVertex(v))
        }
    }

    fn link_one(&mut self, u: VertexId, v: VertexId) {
        let su = self.rotate_to_front(u);
        let sv = self.rotate_to_front(v);
        debug_assert_ne!(su, sv);
        let ha = self.random_height();
        let a = self.alloc(TourElement::Arc(u, v), ha);
        let hb = self.random_height();
        let b = self.alloc(TourElement::Arc(v, u), hb);
        let sa = self.make_singleton(a);
        let sb = self.make_singleton(b);
        self.join(su, sa);
        self.join(su, sv);
        self.join(su, sb);
        let key = canonical(u, v);
        let arcs = if key.0 == u { [a, b] } else { [b, a] };
        self.arcs.insert(key, arcs);
    }

    fn cut_one(&mut self, u: VertexId, v: VertexId) {
        let [a, b] = self.arcs.remove(&canonical(u, v)).expect("validated edge");
        // tour becomes: a Y b Z, with Y and Z both non-empty
        let s = self.rotate_to_front(a);
        let sb = self.split_before(b);
        let y_first = self.next(a, 0);
        let _sy = self.split_before(y_first);
        let z_first = self.next(b, 0);
        let _sz = self.split_before(z_first);
        self.release(a);
        self.release(b);
        self.release(s);
        self.release(sb);
    }

    // ---- batch interface ----

    /// Links a batch of edges. The batch is validated as a whole first: no
    /// unknown vertices, self-loops, existing edges, or cycles (including
    /// cycles formed only by edges of this batch).
    pub fn batch_link(&mut self, edges: &[(VertexId, VertexId)]) -> Result<(), ForestError> {
        let mut seen: HashSet<(VertexId, VertexId)> = HashSet::with_capacity(edges.len());
        let mut ids: HashMap<u32, usize> = HashMap::new();
        let mut dsu = DisjointSets::default();
        for &(u, v) in edges {
            self.check_vertex(u)?;
            self.check_vertex(v)?;
            if u == v {
                return Err(ForestError::SelfLoop(u));
            }
            let key = canonical(u, v);
            if self.arcs.contains_key(&key) || !seen.insert(key) {
                return Err(ForestError::EdgeExists(key.0, key.1));
            }
            let mut id = |r: u32| *ids.entry(r).or_insert_with(|| dsu.push(1));
            let (ru, rv) = (id(self.head(u)), id(self.head(v)));
            if !dsu.union(ru, rv) {
                return Err(ForestError::WouldCreateCycle(u, v));
            }
        }
        for &(u, v) in edges {
            self.link_one(u, v);
        }
        Ok(())
    }

    /// Cuts a batch of forest edges.
    pub fn batch_cut(&mut self, edges: &[(VertexId, VertexId)]) -> Result<(), ForestError> {
        let mut seen = HashSet::with_capacity(edges.len());
        for &(u, v) in edges {
            self.check_vertex(u)?;
            self.check_vertex(v)?;
            let key = canonical(u, v);
            if !self.arcs.contains_key(&key) || !seen.insert(key) {
                return Err(ForestError::NotAnEdge(u, v));
            }
        }
        for &(u, v) in edges {
            self.cut_one(u, v);
        }
        Ok(())
    }

    pub fn batch_connected(&self, queries: &[(VertexId, VertexId)]) -> Result<Vec<bool>, ForestError> {
        queries
            .iter()
            .map(|&(u, v)| self.connected(u, v))
            .collect()
    }

    pub fn connected(&self, u: VertexId, v: VertexId) -> Result<bool, ForestError> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        Ok(u == v || self.head(u) == self.head(v))
    }

    pub fn batch_find_repr(&self, vertices: &[VertexId]) -> Result<Vec<Repr>, ForestError> {
        vertices.iter().map(|&v| self.find_repr(v)).collect()
    }

    pub fn find_repr(&self, v: VertexId) -> Result<Repr, ForestError> {
        self.check_vertex(v)?;
        Ok(Repr(self.head(v)))
    }

    /// Unchecked variant for hot loops inside the crate.
    #[inline]
    pub(crate) fn repr_of(&self, v: VertexId) -> Repr {
        Repr(self.head(v))
    }

    fn total(&self, v: VertexId) -> Result<AugValue, ForestError> {
        self.check_vertex(v)?;
        Ok(self.sum(self.head(v), TOP))
    }

    /// Sum over the whole tree named by a representative.
    pub fn repr_total(&self, r: Repr) -> AugValue {
        debug_assert!(self.is_sentinel(r.0));
        self.sum(r.0, TOP)
    }

    pub fn component_size(&self, v: VertexId) -> Result<usize, ForestError> {
        Ok(self.total(v)?.vertices as usize)
    }

    pub fn num_nontree_edges(&self, v: VertexId) -> Result<usize, ForestError> {
        Ok(self.total(v)?.nontree as usize)
    }

    pub fn num_tree_edges(&self, v: VertexId) -> Result<usize, ForestError> {
        Ok(self.total(v)?.tree as usize)
    }

    pub fn num_edges(&self, v: VertexId, kind: EdgeKind) -> Result<usize, ForestError> {
        Ok(self.total(v)?.count(kind) as usize)
    }

    /// Value stored on `v`'s loop node.
    pub fn vertex_value(&self, v: VertexId) -> Result<AugValue, ForestError> {
        self.check_vertex(v)?;
        Ok(self.sum(v, 0))
    }

    /// Applies signed count changes to vertex loops. Rejected as a whole if
    /// any count would go negative.
    pub fn adjust_edge_counts(&mut self, deltas: &[(VertexId, EdgeKind, i64)]) -> Result<(), ForestError> {
        let mut net: HashMap<(VertexId, EdgeKind), i64> = HashMap::new();
        for &(v, kind, d) in deltas {
            self.check_vertex(v)?;
            *net.entry((v, kind)).or_default() += d;
        }
        for (&(v, kind), &d) in &net {
            if (self.sum(v, 0).count(kind) as i64) + d < 0 {
                return Err(ForestError::NegativeCount { vertex: v });
            }
        }
        for &(v, kind, d) in deltas {
            let mag = AugValue::of_kind(kind, d.unsigned_abs() as u32);
            if d >= 0 {
                self.offset(v, mag, AugValue::ZERO);
            } else {
                self.offset(v, AugValue::ZERO, mag);
            }
        }
        Ok(())
    }

    /// Vertices of `v`'s tree that hold edges of `kind`, with how many to take
    /// from each, covering the first `l` edge endpoints in tour order.
    fn plan_fetch(&self, v: VertexId, l: usize, kind: EdgeKind) -> Result<Vec<(VertexId, usize)>, ForestError> {
        let available = self.num_edges(v, kind)?;
        if l > available {
            return Err(ForestError::FetchTooMany {
                requested: l,
                available,
            });
        }
        let mut plan = Vec::new();
        let mut remaining = l;
        if l > 0 {
            self.collect(self.head(v), TOP, kind, &mut remaining, &mut plan);
        }
        debug_assert_eq!(remaining, 0);
        Ok(plan)
    }

    fn collect(&self, y: u32, j: usize, kind: EdgeKind, remaining: &mut usize, out: &mut Vec<(VertexId, usize)>) {
        if j == 0 {
            if let TourElement::Vertex(v) = self.nodes[y as usize].elem {
                let take = (self.sum(y, 0).count(kind) as usize).min(*remaining);
                if take > 0 {
                    out.push((v, take));
                    *remaining -= take;
                }
            }
            return;
        }
        let end = self.next(y, j);
        let mut z = y;
        while z != end && *remaining > 0 {
            if self.sum(z, j - 1).count(kind) > 0 {
                self.collect(z, j - 1, kind, remaining, out);
            }
            z = self.next(z, j - 1);
        }
    }

    /// The first `l` edge endpoints of `kind` in `v`'s tree, ordered by the
    /// tour position of their vertex and then by adjacency slot. An edge
    /// whose both endpoints fall inside the window is reported once, so the
    /// result may be shorter than `l`.
    pub fn fetch_level_edges(
        &self,
        v: VertexId,
        l: usize,
        kind: EdgeKind,
        adj: &AdjacencyStore,
    ) -> Result<Vec<EdgeId>, ForestError> {
        let plan = self.plan_fetch(v, l, kind)?;
        let mut seen = HashSet::with_capacity(l);
        let mut out = Vec::with_capacity(l);
        for (x, take) in plan {
            for &e in adj.fetch_edges(x, self.level, kind, take)? {
                if seen.insert(e) {
                    out.push(e);
                }
            }
        }
        Ok(out)
    }

    /// Adds edges of this level to the adjacency store and charges both
    /// endpoints.
    pub fn add_level_edges(
        &mut self,
        edges: &[(EdgeId, VertexId, VertexId)],
        kind: EdgeKind,
        adj: &mut AdjacencyStore,
    ) -> Result<(), ForestError> {
        let grouped = self.group_endpoints(edges)?;
        for run in runs(&grouped) {
            let x = run[0].0;
            if let Some(&(_, e)) = run.iter().find(|(_, e)| adj.locate(*e, x).is_some()) {
                return Err(AdjacencyError::DuplicateEdge { edge: e, vertex: x }.into());
            }
        }
        for run in runs(&grouped) {
            let x = run[0].0;
            let ids: Vec<EdgeId> = run.iter().map(|&(_, e)| e).collect();
            adj.insert_edges(x, self.level, kind, &ids)?;
            self.offset(x, AugValue::of_kind(kind, ids.len() as u32), AugValue::ZERO);
        }
        Ok(())
    }

    /// Removes edges of this level from the adjacency store and uncharges
    /// both endpoints. `v` names the tree the edges are taken from; every edge
    /// must have at least one endpoint in it.
    pub fn remove_level_edges(
        &mut self,
        v: VertexId,
        edges: &[(EdgeId, VertexId, VertexId)],
        kind: EdgeKind,
        adj: &mut AdjacencyStore,
    ) -> Result<(), ForestError> {
        self.check_vertex(v)?;
        let root = self.head(v);
        for &(e, a, b) in edges {
            self.check_vertex(a)?;
            self.check_vertex(b)?;
            if self.head(a) != root && self.head(b) != root {
                return Err(ForestError::ForeignEdge { edge: e, vertex: v });
            }
        }
        self.detach_level_edges(edges, kind, adj)
    }

    /// Like [`remove_level_edges`](Self::remove_level_edges) without the tree
    /// membership check.
    pub(crate) fn detach_level_edges(
        &mut self,
        edges: &[(EdgeId, VertexId, VertexId)],
        kind: EdgeKind,
        adj: &mut AdjacencyStore,
    ) -> Result<(), ForestError> {
        let grouped = self.group_endpoints(edges)?;
        for &(x, e) in &grouped {
            match adj.locate(e, x) {
                Some((level, k, _)) if level == self.level && k == kind => {}
                _ => {
                    return Err(AdjacencyError::MissingEdge {
                        edge: e,
                        vertex: x,
                        level: self.level,
                        kind,
                    }
                    .into())
                }
            }
        }
        for run in runs(&grouped) {
            let x = run[0].0;
            let ids: Vec<EdgeId> = run.iter().map(|&(_, e)| e).collect();
            adj.delete_edges(x, self.level, kind, &ids)?;
            self.offset(x, AugValue::ZERO, AugValue::of_kind(kind, ids.len() as u32));
        }
        Ok(())
    }

    fn group_endpoints(
        &self,
        edges: &[(EdgeId, VertexId, VertexId)],
    ) -> Result<Vec<(VertexId, EdgeId)>, ForestError> {
        let mut items = Vec::with_capacity(edges.len() * 2);
        for &(e, a, b) in edges {
            self.check_vertex(a)?;
            self.check_vertex(b)?;
            if a == b {
                return Err(ForestError::SelfLoop(a));
            }
            items.push((a, e));
            items.push((b, e));
        }
        Ok(semisort(items))
    }

    // ---- inspection ----

    /// The tour containing `v`, starting after its sentinel, with each
    /// element's skip-list height.
    pub fn tour_layout(&self, v: VertexId) -> Result<Vec<(TourElement, u8)>, ForestError> {
        self.check_vertex(v)?;
        let mut out = Vec::new();
        let mut x = self.next(self.head(v), 0);
        while x != NIL {
            let node = &self.nodes[x as usize];
            out.push((node.elem, node.height));
            x = self.next(x, 0);
        }
        Ok(out)
    }

    /// Full structural check: link symmetry, heights, augmented sums, Euler
    /// tour validity and the arc index.
    pub fn audit(&self) -> Result<(), String> {
        let mut seen_vertex = vec![false; self.n];
        let mut arcs_seen = 0usize;
        for start in 0..self.n as u32 {
            if seen_vertex[start as usize] {
                continue;
            }
            let s = self.head(start);
            self.audit_list(s)?;
            // Euler tour: walk the arcs
            let mut ids = Vec::new();
            let mut x = self.next(s, 0);
            while x != NIL {
                ids.push(x);
                x = self.next(x, 0);
            }
            let source = |x: &u32| match self.nodes[*x as usize].elem {
                TourElement::Vertex(v) => v,
                TourElement::Arc(a, _) => a,
                _ => u32::MAX,
            };
            let first = ids.first().map(source).ok_or("empty tour")?;
            let mut cur = first;
            let mut verts = 0usize;
            let mut arcs = 0usize;
            for &x in &ids {
                match self.nodes[x as usize].elem {
                    TourElement::Vertex(v) => {
                        if v != cur {
                            return Err(format!("loop of {v} visited while at {cur}"));
                        }
                        if std::mem::replace(&mut seen_vertex[v as usize], true) {
                            return Err(format!("vertex {v} appears twice"));
                        }
                        verts += 1;
                    }
                    TourElement::Arc(a, b) => {
                        if a != cur {
                            return Err(format!("arc {a}->{b} leaves from {cur}"));
                        }
                        match self.arcs.get(&canonical(a, b)) {
                            Some(pair) if pair.contains(&x) => {}
                            _ => return Err(format!("arc {a}->{b} missing from arc index")),
                        }
                        cur = b;
                        arcs += 1;
                    }
                    other => return Err(format!("unexpected {other:?} inside a tour")),
                }
            }
            if cur != first {
                return Err(format!("tour does not close: ends at {cur}, started at {first}"));
            }
            if arcs != 2 * (verts - 1) {
                return Err(format!("tour with {verts} vertices has {arcs} arcs"));
            }
            arcs_seen += arcs;
        }
        if arcs_seen != 2 * self.arcs.len() {
            return Err(format!(
                "{} arcs in tours but {} edges indexed",
                arcs_seen,
                self.arcs.len()
            ));
        }
        for (&(u, v), &[a, b]) in &self.arcs {
            if self.nodes[a as usize].elem != TourElement::Arc(u, v)
                || self.nodes[b as usize].elem != TourElement::Arc(v, u)
            {
                return Err(format!("arc index for ({u}, {v}) points at the wrong nodes"));
            }
        }
        Ok(())
    }

    fn audit_list(&self, s: u32) -> Result<(), String> {
        for j in 0..MAX_HEIGHT {
            let mut x = s;
            while x != NIL {
                if self.height(x) <= j {
                    return Err(format!("node {x} of height {} on level {j}", self.height(x)));
                }
                let nx = self.next(x, j);
                if nx != NIL && self.prev(nx, j) != x {
                    return Err(format!("broken prev link at level {j}"));
                }
                let expected = if j == 0 {
                    match self.nodes[x as usize].elem {
                        TourElement::Vertex(_) => {
                            let v = self.sum(x, 0);
                            if v.vertices != 1 {
                                return Err(format!("vertex loop {x} has vertex count {}", v.vertices));
                            }
                            v
                        }
                        _ => AugValue::ZERO,
                    }
                } else {
                    let mut acc = AugValue::ZERO;
                    let mut z = x;
                    loop {
                        acc += self.sum(z, j - 1);
                        z = self.next(z, j - 1);
                        if z == nx {
                            break;
                        }
                        if z == NIL {
                            return Err(format!("level {j} successor not found on level {}", j - 1));
                        }
                    }
                    acc
                };
                if self.sum(x, j) != expected {
                    return Err(format!(
                        "level {} sum at node {x}, height {}: stored {:?}, expected {:?}",
                        j,
                        self.height(x),
                        self.sum(x, j),
                        expected
                    ));
                }
                x = nx;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::collections::VecDeque;

    /// Components of an explicit forest, by BFS.
    fn bfs_labels(n: usize, edges: &HashSet<(VertexId, VertexId)>) -> Vec<u32> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
        let mut label = vec![u32::MAX; n];
        for s in 0..n {
            if label[s] != u32::MAX {
                continue;
            }
            label[s] = s as u32;
            let mut q = VecDeque::from([s as u32]);
            while let Some(x) = q.pop_front() {
                for &y in &adj[x as usize] {
                    if label[y as usize] == u32::MAX {
                        label[y as usize] = s as u32;
                        q.push_back(y);
                    }
                }
            }
        }
        label
    }

    #[test]
    fn link_path_connects_ends() {
        let mut f = EulerTourForest::new(3, 1, 1);
        f.batch_link(&[(0, 1), (1, 2)]).unwrap();
        assert!(f.connected(0, 2).unwrap());
        assert_eq!(f.component_size(0).unwrap(), 3);
        f.audit().unwrap();
    }

    #[test]
    fn empty_link_is_noop() {
        let mut f = EulerTourForest::new(3, 1, 1);
        f.batch_link(&[]).unwrap();
        assert!(!f.connected(0, 1).unwrap());
        f.audit().unwrap();
    }

    #[test]
    fn cycles_are_rejected_atomically() {
        let mut f = EulerTourForest::new(4, 1, 1);
        f.batch_link(&[(0, 1)]).unwrap();
        assert_eq!(f.batch_link(&[(2, 3), (1, 0)]), Err(ForestError::EdgeExists(0, 1)));
        assert_eq!(
            f.batch_link(&[(1, 2), (2, 3), (3, 1)]),
            Err(ForestError::WouldCreateCycle(3, 1))
        );
        assert!(!f.connected(1, 2).unwrap());
        assert_eq!(f.batch_link(&[(2, 2)]), Err(ForestError::SelfLoop(2)));
        assert_eq!(f.batch_link(&[(2, 9)]), Err(ForestError::UnknownVertex(9)));
        f.audit().unwrap();
    }

    #[test]
    fn cut_single_edge() {
        let mut f = EulerTourForest::new(2, 1, 5);
        f.batch_link(&[(0, 1)]).unwrap();
        f.batch_cut(&[(1, 0)]).unwrap();
        assert!(!f.connected(0, 1).unwrap());
        assert_eq!(f.batch_cut(&[(0, 1)]), Err(ForestError::NotAnEdge(0, 1)));
        f.audit().unwrap();
    }

    #[test]
    fn cut_whole_star() {
        let mut f = EulerTourForest::new(4, 1, 5);
        f.batch_link(&[(0, 1), (0, 2), (0, 3)]).unwrap();
        f.batch_cut(&[(0, 1), (0, 2), (0, 3)]).unwrap();
        for v in 0..4 {
            assert_eq!(f.component_size(v).unwrap(), 1);
        }
        f.audit().unwrap();
    }

    #[test]
    fn reprs() {
        let mut f = EulerTourForest::new(3, 1, 5);
        assert_eq!(f.find_repr(2).unwrap(), f.find_repr(2).unwrap());
        assert_ne!(f.find_repr(1).unwrap(), f.find_repr(2).unwrap());
        f.batch_link(&[(1, 2)]).unwrap();
        let r = f.batch_find_repr(&[1, 2]).unwrap();
        assert_eq!(r[0], r[1]);
        assert!(f.connected(0, 0).unwrap());
        assert!(matches!(f.find_repr(3), Err(ForestError::UnknownVertex(3))));
    }

    #[test]
    fn path_sizes() {
        let mut f = EulerTourForest::new(5, 1, 9);
        assert_eq!(f.component_size(4).unwrap(), 1);
        f.batch_link(&[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        for v in 0..5 {
            assert_eq!(f.component_size(v).unwrap(), 5);
        }
    }

    #[test]
    fn count_adjustments() {
        let mut f = EulerTourForest::new(4, 1, 3);
        f.batch_link(&[(0, 1), (1, 2)]).unwrap();
        assert_eq!(f.num_nontree_edges(0).unwrap(), 0);
        f.adjust_edge_counts(&[(2, EdgeKind::NonTree, 3)]).unwrap();
        assert_eq!(f.num_nontree_edges(0).unwrap(), 3);
        assert_eq!(f.num_nontree_edges(3).unwrap(), 0);
        f.adjust_edge_counts(&[(2, EdgeKind::NonTree, 1)]).unwrap();
        f.adjust_edge_counts(&[(2, EdgeKind::NonTree, -1)]).unwrap();
        assert_eq!(f.num_nontree_edges(1).unwrap(), 3);
        assert_eq!(
            f.adjust_edge_counts(&[(1, EdgeKind::Tree, -1)]),
            Err(ForestError::NegativeCount { vertex: 1 })
        );
        f.audit().unwrap();
    }

    #[test]
    fn random_counts_match_recomputation() {
        let n = 64;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut f = EulerTourForest::new(n, 1, 17);
        let mut counts = vec![[0i64; 2]; n];
        let mut live: HashSet<(u32, u32)> = HashSet::new();
        for step in 0..3000 {
            let v = rng.gen_range(0..n as u32);
            let kind = if rng.gen_bool(0.5) { EdgeKind::Tree } else { EdgeKind::NonTree };
            let d = rng.gen_range(-3..6i64);
            let ok = counts[v as usize][kind.slot()] + d >= 0;
            assert_eq!(f.adjust_edge_counts(&[(v, kind, d)]).is_ok(), ok);
            if ok {
                counts[v as usize][kind.slot()] += d;
            }
            // shuffle the forest shape too
            let (a, b) = (rng.gen_range(0..n as u32), rng.gen_range(0..n as u32));
            let key = canonical(a, b);
            if live.contains(&key) {
                f.batch_cut(&[key]).unwrap();
                live.remove(&key);
            } else if a != b && !f.connected(a, b).unwrap() {
                f.batch_link(&[key]).unwrap();
                live.insert(key);
            }
            if step % 100 == 0 {
                f.audit().unwrap();
                let labels = bfs_labels(n, &live);
                for x in 0..n as u32 {
                    let expect_nt: i64 = (0..n)
                        .filter(|&y| labels[y] == labels[x as usize])
                        .map(|y| counts[y][1])
                        .sum();
                    assert_eq!(f.num_nontree_edges(x).unwrap() as i64, expect_nt);
                }
            }
        }
    }

    /// Random interleaved link/cut script against BFS on the true forest.
    #[test]
    fn random_link_cut_vs_bfs() {
        let n = 128;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut f = EulerTourForest::new(n, 1, 42);
        let mut live: HashSet<(u32, u32)> = HashSet::new();
        for round in 0..200 {
            if rng.gen_bool(0.6) {
                let mut batch = Vec::new();
                let mut dsu_ok = DisjointSets::new(n);
                let labels = bfs_labels(n, &live);
                for _ in 0..rng.gen_range(1..10) {
                    let (a, b) = (rng.gen_range(0..n as u32), rng.gen_range(0..n as u32));
                    let (la, lb) = (labels[a as usize] as usize, labels[b as usize] as usize);
                    if dsu_ok.union(la, lb) {
                        batch.push((a, b));
                    }
                }
                f.batch_link(&batch).unwrap();
                live.extend(batch.iter().map(|&(a, b)| canonical(a, b)));
            } else if !live.is_empty() {
                let all: Vec<_> = live.iter().copied().collect();
                let k = rng.gen_range(1..=all.len().min(8));
                let mut batch: Vec<_> = Vec::new();
                for _ in 0..k {
                    let e = all[rng.gen_range(0..all.len())];
                    if !batch.contains(&e) {
                        batch.push(e);
                    }
                }
                f.batch_cut(&batch).unwrap();
                for e in &batch {
                    live.remove(e);
                }
            }
            let labels = bfs_labels(n, &live);
            for _ in 0..50 {
                let (a, b) = (rng.gen_range(0..n as u32), rng.gen_range(0..n as u32));
                assert_eq!(f.connected(a, b).unwrap(), labels[a as usize] == labels[b as usize]);
            }
            if round % 20 == 0 {
                f.audit().unwrap();
            }
        }
        f.audit().unwrap();
    }

    #[test]
    fn seeded_heights_are_reproducible() {
        let build = |seed| {
            let mut f = EulerTourForest::new(32, 2, seed);
            f.batch_link(&[(0, 1), (1, 2), (5, 1), (7, 2)]).unwrap();
            f.tour_layout(0).unwrap()
        };
        assert_eq!(build(3), build(3));
        assert_ne!(build(3), build(4));
    }

    fn star_with_nontree(adj: &mut AdjacencyStore, f: &mut EulerTourForest) {
        // vertex 0 holds e10, e11, e12 in slot order; vertex 2 holds e13
        f.batch_link(&[(0, 1), (1, 2)]).unwrap();
        f.add_level_edges(
            &[
                (EdgeId(10), 0, 3),
                (EdgeId(11), 0, 4),
                (EdgeId(12), 0, 5),
                (EdgeId(13), 2, 6),
            ],
            EdgeKind::NonTree,
            adj,
        )
        .unwrap();
    }

    #[test]
    fn fetch_respects_slot_order() {
        let mut adj = AdjacencyStore::new(8, 1);
        let mut f = EulerTourForest::new(8, 1, 0);
        star_with_nontree(&mut adj, &mut f);
        assert_eq!(f.num_nontree_edges(1).unwrap(), 4);
        assert!(f.fetch_level_edges(1, 0, EdgeKind::NonTree, &adj).unwrap().is_empty());
        let all = f.fetch_level_edges(1, 4, EdgeKind::NonTree, &adj).unwrap();
        let from_zero: Vec<EdgeId> = all.iter().copied().filter(|e| e.0 < 13).collect();
        assert_eq!(from_zero, vec![EdgeId(10), EdgeId(11), EdgeId(12)]);
        let pos = all.iter().position(|&e| e == EdgeId(10)).unwrap();
        assert_eq!(all[pos + 1], EdgeId(11));
        assert!(matches!(
            f.fetch_level_edges(1, 5, EdgeKind::NonTree, &adj),
            Err(ForestError::FetchTooMany { requested: 5, available: 4 })
        ));
    }

    #[test]
    fn remove_fetched_edges_clears_counts() {
        let mut adj = AdjacencyStore::new(8, 1);
        let mut f = EulerTourForest::new(8, 1, 0);
        star_with_nontree(&mut adj, &mut f);
        let ends = |e: EdgeId| match e.0 {
            10 => (0, 3),
            11 => (0, 4),
            12 => (0, 5),
            _ => (2, 6),
        };
        let got = f.fetch_level_edges(0, 4, EdgeKind::NonTree, &adj).unwrap();
        let triples: Vec<_> = got.iter().map(|&e| (e, ends(e).0, ends(e).1)).collect();
        f.remove_level_edges(0, &[], EdgeKind::NonTree, &mut adj).unwrap();
        f.remove_level_edges(0, &triples, EdgeKind::NonTree, &mut adj).unwrap();
        assert_eq!(f.num_nontree_edges(0).unwrap(), 0);
        assert_eq!(f.num_nontree_edges(3).unwrap(), 0);
        assert!(f.remove_level_edges(0, &triples[..1], EdgeKind::NonTree, &mut adj).is_err());
        adj.audit().unwrap();
        f.audit().unwrap();
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

        // candidate links are filtered to keep the graph a forest; cuts pick
        // live edges by index
        #[test]
        fn link_cut_matches_bfs(
            n in 2usize..40,
            seed in proptest::prelude::any::<u64>(),
            steps in proptest::collection::vec((proptest::prelude::any::<bool>(), 0u32..40, 0u32..40, 0usize..64), 1..60),
        ) {
            let mut f = EulerTourForest::new(n, 1, seed);
            let mut live: HashSet<(VertexId, VertexId)> = HashSet::new();
            for (link, a, b, k) in steps {
                let (a, b) = (a % n as u32, b % n as u32);
                if link {
                    let label = bfs_labels(n, &live);
                    if label[a as usize] != label[b as usize] {
                        f.batch_link(&[(a, b)]).unwrap();
                        live.insert(canonical(a, b));
                    }
                } else if !live.is_empty() {
                    let mut all: Vec<_> = live.iter().copied().collect();
                    all.sort_unstable();
                    let e = all[k % all.len()];
                    f.batch_cut(&[e]).unwrap();
                    live.remove(&e);
                }
                let label = bfs_labels(n, &live);
                for v in 0..n as u32 {
                    proptest::prop_assert_eq!(f.connected(a, v).unwrap(), label[a as usize] == label[v as usize]);
                }
            }
            proptest::prop_assert_eq!(f.audit(), Ok(()));
        }
    }
}
