//! Random workload generation with a controlled average batch size.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::script::{Batch, BatchKind, Script};
use crate::VertexId;

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateParams {
    pub n: usize,
    pub batches: usize,
    /// Requested average batch size Δ, per batch kind.
    pub delta: usize,
    pub insert_ratio: f64,
    pub delete_ratio: f64,
    pub query_ratio: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error("infeasible workload: {0}")]
    Infeasible(String),
}

/// Live edge set with O(1) uniform sampling and removal.
#[derive(Default)]
struct LiveEdges {
    list: Vec<(VertexId, VertexId)>,
    index: HashMap<(VertexId, VertexId), usize>,
}

impl LiveEdges {
    fn contains(&self, e: &(VertexId, VertexId)) -> bool {
        self.index.contains_key(e)
    }

    fn insert(&mut self, e: (VertexId, VertexId)) {
        self.index.insert(e, self.list.len());
        self.list.push(e);
    }

    fn remove_at(&mut self, k: usize) -> (VertexId, VertexId) {
        let e = self.list.swap_remove(k);
        self.index.remove(&e);
        if let Some(&moved) = self.list.get(k) {
            self.index.insert(moved, k);
        }
        e
    }
}

/// Sizes follow a bounded random walk whose running total stays within 5%
/// of `delta` times the number of batches drawn so far.
struct SizeWalk {
    delta: usize,
    drawn: usize,
    total: usize,
}

impl SizeWalk {
    fn next(&mut self, rng: &mut ChaCha8Rng) -> usize {
        let d = self.delta as f64;
        let k = (self.drawn + 1) as f64;
        let lo = ((0.95 * d * k).ceil() as usize).saturating_sub(self.total).max(1);
        let hi = ((1.05 * d * k).floor() as usize).saturating_sub(self.total);
        let cap = 2 * self.delta - 1;
        let raw = rng.gen_range(1..=cap);
        raw.clamp(lo.min(cap), hi.clamp(lo.min(cap), cap))
    }

    fn record(&mut self, size: usize) {
        self.drawn += 1;
        self.total += size;
    }
}

pub fn generate(p: &GenerateParams) -> Result<Script, GenerateError> {
    if p.n == 0 || p.batches == 0 || p.delta == 0 {
        return Err(GenerateError::Invalid("n, batches and delta must be positive".into()));
    }
    let ratios = [p.insert_ratio, p.delete_ratio, p.query_ratio];
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
        return Err(GenerateError::Invalid("ratios must be non-negative and sum to 1".into()));
    }
    let max_edges = p.n * (p.n - 1) / 2;
    if p.insert_ratio > 0.0 && max_edges == 0 {
        return Err(GenerateError::Infeasible("a single vertex admits no edges".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut live = LiveEdges::default();
    let mut walks: Vec<SizeWalk> = (0..3)
        .map(|_| SizeWalk {
            delta: p.delta,
            drawn: 0,
            total: 0,
        })
        .collect();
    let mut issued = [0usize; 3];
    let mut script = Script::new(p.n, p.seed);
    let n = p.n as VertexId;

    for b in 0..p.batches {
        // deficit scheduling keeps the realized mix close to the ratios
        let mut kind = (0..3)
            .max_by(|&x, &y| {
                let dx = ratios[x] * (b + 1) as f64 - issued[x] as f64;
                let dy = ratios[y] * (b + 1) as f64 - issued[y] as f64;
                dx.partial_cmp(&dy).unwrap().then(y.cmp(&x))
            })
            .unwrap();
        if kind == 1 && live.list.is_empty() {
            if p.insert_ratio == 0.0 {
                return Err(GenerateError::Infeasible("deletions requested but nothing is ever inserted".into()));
            }
            kind = 0;
        }
        issued[kind] += 1;
        let size = walks[kind].next(&mut rng);

        let edges = match kind {
            0 => {
                let room = max_edges - live.list.len();
                if room == 0 {
                    return Err(GenerateError::Infeasible(format!("graph on {} vertices is complete", p.n)));
                }
                let want = size.min(room);
                let mut batch = Vec::with_capacity(want);
                let mut in_batch = HashSet::with_capacity(want);
                while batch.len() < want {
                    let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
                    let e = (a.min(b), a.max(b));
                    if a != b && !live.contains(&e) && in_batch.insert(e) {
                        batch.push(e);
                    }
                }
                for &e in &batch {
                    live.insert(e);
                }
                batch
            }
            1 => {
                let want = size.min(live.list.len());
                (0..want)
                    .map(|_| {
                        let k = rng.gen_range(0..live.list.len());
                        live.remove_at(k)
                    })
                    .collect()
            }
            _ => (0..size)
                .map(|_| {
                    let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
                    (a.min(b), a.max(b))
                })
                .collect(),
        };
        walks[kind].record(edges.len());
        script.batches.push(Batch {
            kind: [BatchKind::Insert, BatchKind::Delete, BatchKind::Query][kind],
            edges,
        });
    }
    Ok(script)
}
