//! Summaries of run reports and the batch-size sweep.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::runner::{run, Report, RunOptions, Verify};
use super::script::{Batch, BatchKind, Script};
use super::generate::{generate, GenerateParams};
use crate::connectivity::{SearchStrategy, UpdateError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub m: u64,
    pub levels: usize,
    pub pushes: u64,
    pub push_bound: u64,
    pub slack: u64,
    pub deleted: u64,
    pub delete_batches: u64,
    pub delta: f64,
    /// Average level decreases per inserted edge.
    pub pushes_per_edge: f64,
    /// Amortized pushes per deleted edge.
    pub pushes_per_deletion: f64,
    pub rounds_per_level: Vec<u64>,
}

impl Summary {
    pub fn of(report: &Report) -> Summary {
        let c = &report.counters;
        Summary {
            m: c.inserted,
            levels: report.levels,
            pushes: c.pushes,
            push_bound: c.push_bound(),
            slack: c.push_bound().saturating_sub(c.pushes),
            deleted: c.deleted,
            delete_batches: c.delete_batches,
            delta: c.delta(),
            pushes_per_edge: if c.inserted == 0 {
                0.0
            } else {
                c.pushes as f64 / c.inserted as f64
            },
            pushes_per_deletion: c.pushes_per_deleted_edge(),
            rounds_per_level: c.rounds_per_level.clone(),
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "m={}", self.m).unwrap();
        writeln!(out, "L={}", self.levels).unwrap();
        writeln!(out, "P={}", self.pushes).unwrap();
        writeln!(out, "mL={}", self.push_bound).unwrap();
        writeln!(out, "slack={}", self.slack).unwrap();
        writeln!(out, "K={}", self.deleted).unwrap();
        writeln!(out, "d={}", self.delete_batches).unwrap();
        writeln!(out, "delta={:.4}", self.delta).unwrap();
        writeln!(out, "pushes_per_edge={:.4}", self.pushes_per_edge).unwrap();
        writeln!(out, "pushes_per_deletion={:.4}", self.pushes_per_deletion).unwrap();
        for (i, r) in self.rounds_per_level.iter().enumerate() {
            writeln!(out, "rounds[{}]={r}", i + 1).unwrap();
        }
        out
    }
}

/// Builds `m` random edges in insert batches, then deletes all of them in
/// uniformly random order, `delta` per batch.
pub fn teardown_script(n: usize, m: usize, delta: usize, seed: u64) -> Script {
    let insert = generate(&GenerateParams {
        n,
        batches: m.div_ceil(256) * 11 / 10 + 1,
        delta: 256,
        insert_ratio: 1.0,
        delete_ratio: 0.0,
        query_ratio: 0.0,
        seed,
    })
    .expect("insert-only parameters are feasible");
    let mut script = Script::new(n, seed);
    let mut all: Vec<(u32, u32)> = Vec::with_capacity(m);
    for b in insert.batches {
        let room = m - all.len();
        let edges: Vec<_> = b.edges.into_iter().take(room).collect();
        all.extend_from_slice(&edges);
        if !edges.is_empty() {
            script.batches.push(Batch {
                kind: BatchKind::Insert,
                edges,
            });
        }
    }
    // deterministic shuffle for the deletion order
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xD1CE);
    all.shuffle(&mut rng);
    for chunk in all.chunks(delta.max(1)) {
        script.batches.push(Batch {
            kind: BatchKind::Delete,
            edges: chunk.to_vec(),
        });
    }
    script
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub delta: usize,
    pub deleted: u64,
    pub pushes: u64,
    pub pushes_per_deletion: f64,
}

/// Runs [`teardown_script`] for each batch size and reports pushes per
/// deleted edge.
pub fn sweep(
    n: usize,
    m: usize,
    deltas: &[usize],
    strategy: SearchStrategy,
    seed: u64,
    threads: usize,
) -> Result<Vec<SweepPoint>, UpdateError> {
    deltas
        .iter()
        .map(|&delta| {
            let script = teardown_script(n, m, delta, seed);
            let report = run(
                &script,
                &RunOptions {
                    strategy,
                    verify: Verify::None,
                    seed: None,
                    threads,
                    corrupt_after: None,
                },
            )?;
            let c = &report.counters;
            Ok(SweepPoint {
                delta,
                deleted: c.deleted,
                pushes: c.pushes,
                pushes_per_deletion: c.pushes_per_deleted_edge(),
            })
        })
        .collect()
}
