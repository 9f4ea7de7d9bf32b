//! Replays a script through the level structure, optionally checking it
//! against the oracle and the full audit after every batch.

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::script::{BatchKind, Script};
use crate::connectivity::{LevelStructure, SearchStrategy, UpdateError, WorkCounters};
use crate::oracle::OracleGraph;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verify {
    #[default]
    None,
    Oracle,
    FullAudit,
}

impl fmt::Display for Verify {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verify::None => "none",
            Verify::Oracle => "oracle",
            Verify::FullAudit => "full-audit",
        })
    }
}

impl FromStr for Verify {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(Verify::None),
            "oracle" => Ok(Verify::Oracle),
            "full-audit" => Ok(Verify::FullAudit),
            other => Err(format!("unknown verify mode `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub strategy: SearchStrategy,
    pub verify: Verify,
    /// Seed for the skip-list heights; the script's seed when `None`.
    pub seed: Option<u64>,
    pub threads: usize,
    /// Corrupts one edge level after this batch, as a negative control for
    /// the audit.
    #[doc(hidden)]
    pub corrupt_after: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            strategy: SearchStrategy::Interleaved,
            verify: Verify::None,
            seed: None,
            threads: 1,
            corrupt_after: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub batch: usize,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub n: usize,
    pub levels: usize,
    pub seed: u64,
    pub strategy: SearchStrategy,
    pub verify: Verify,
    pub batches: usize,
    pub operations: usize,
    pub queries: u64,
    pub connected_answers: u64,
    /// FNV-1a over all query answers in order.
    pub answer_digest: u64,
    pub counters: WorkCounters,
    pub rejected: Vec<Rejection>,
    /// Verification failures; empty means the run passed.
    pub failures: Vec<String>,
    /// Wall time per batch, microseconds.
    pub batch_micros: Vec<u64>,
    pub total_micros: u64,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// Line-oriented `key=value` rendering. Timing lines are omitted unless
    /// asked for, so that reports of identical runs compare equal.
    pub fn render(&self, include_timing: bool) -> String {
        let c = &self.counters;
        let mut out = String::new();
        let mut kv = |k: &str, v: &dyn fmt::Display| writeln!(out, "{k}={v}").unwrap();
        kv("n", &self.n);
        kv("levels", &self.levels);
        kv("seed", &self.seed);
        kv("strategy", &self.strategy);
        kv("verify", &self.verify);
        kv("batches", &self.batches);
        kv("operations", &self.operations);
        kv("queries", &self.queries);
        kv("connected_answers", &self.connected_answers);
        kv("answer_digest", &format!("{:016x}", self.answer_digest));
        kv("m", &c.inserted);
        kv("K", &c.deleted);
        kv("P", &c.pushes);
        kv("P_tree", &c.tree_pushes);
        kv("d", &c.delete_batches);
        kv("delta", &format!("{:.4}", c.delta()));
        kv("mL", &c.push_bound());
        kv("replacements", &c.replacements);
        kv("phases", &c.phases);
        kv("repr_queries", &c.repr_queries);
        kv("buffer_checks", &c.buffer_checks);
        kv("buffer_shortfalls", &c.buffer_shortfalls);
        kv("rounds_per_level", &join(&c.rounds_per_level));
        for (b, (k, row)) in c.batch_sizes.iter().zip(&c.batch_pushes).enumerate() {
            kv(&format!("p[{b}]"), &format!("k={k} {}", join(row)));
        }
        kv("rejected", &self.rejected.len());
        for r in &self.rejected {
            kv(&format!("rejected[{}]", r.batch), &r.error);
        }
        kv("failures", &self.failures.len());
        for (k, f) in self.failures.iter().enumerate() {
            kv(&format!("failure[{k}]"), f);
        }
        kv("status", &if self.passed() { "pass" } else { "fail" });
        if include_timing {
            kv("total_us", &self.total_micros);
            for (b, t) in self.batch_micros.iter().enumerate() {
                kv(&format!("time_us[{b}]"), t);
            }
        }
        out
    }
}

fn join(xs: &[u64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn fnv(hash: u64, byte: u8) -> u64 {
    (hash ^ byte as u64).wrapping_mul(0x0000_0100_0000_01B3)
}

/// Replays `script`. Errors only if the script cannot be run at all
/// (no vertices); rejected batches and verification failures are reported.
pub fn run(script: &Script, opts: &RunOptions) -> Result<Report, UpdateError> {
    let seed = opts.seed.unwrap_or(script.seed);
    let mut engine = LevelStructure::new(script.n, seed, opts.strategy)?.with_threads(opts.threads);
    let mut oracle = (opts.verify != Verify::None).then(|| OracleGraph::new(script.n));
    let mut report = Report {
        n: script.n,
        levels: engine.levels(),
        seed,
        strategy: opts.strategy,
        verify: opts.verify,
        batches: script.batches.len(),
        operations: script.operations(),
        queries: 0,
        connected_answers: 0,
        answer_digest: 0xCBF2_9CE4_8422_2325,
        counters: WorkCounters::default(),
        rejected: Vec::new(),
        failures: Vec::new(),
        batch_micros: Vec::with_capacity(script.batches.len()),
        total_micros: 0,
    };
    let start = Instant::now();
    for (b, batch) in script.batches.iter().enumerate() {
        let t0 = Instant::now();
        let outcome = match batch.kind {
            BatchKind::Insert => engine.batch_insert(&batch.edges).map(|_| Vec::new()),
            BatchKind::Delete => engine.batch_delete(&batch.edges).map(|_| Vec::new()),
            BatchKind::Query => engine.batch_connected(&batch.edges),
        };
        report.batch_micros.push(t0.elapsed().as_micros() as u64);
        if opts.corrupt_after == Some(b) {
            if let Some(e) = engine.edges().first() {
                engine.corrupt_level_for_test(e.u, e.v, if e.level == 1 { 2 } else { 1 });
            }
        }

        if let Some(oracle) = oracle.as_mut() {
            let expected = oracle.apply(batch);
            match (&outcome, &expected) {
                (Ok(got), Ok(want)) if got != want => {
                    let first = got.iter().zip(want).position(|(g, w)| g != w).unwrap_or(0);
                    report.failures.push(format!(
                        "batch {b}: query {:?} answered {} but oracle says {}",
                        batch.edges[first], got[first], want[first]
                    ));
                }
                (Err(got), Err(want)) if got != want => {
                    report.failures.push(format!("batch {b}: rejected with `{got}`, oracle rejects with `{want}`"));
                }
                (Ok(_), Err(want)) => report.failures.push(format!("batch {b}: accepted, oracle rejects with `{want}`")),
                (Err(got), Ok(_)) => report.failures.push(format!("batch {b}: rejected with `{got}`, oracle accepts")),
                _ => {}
            }
        }
        match outcome {
            Ok(answers) => {
                for a in answers {
                    report.queries += 1;
                    report.connected_answers += a as u64;
                    report.answer_digest = fnv(report.answer_digest, a as u8);
                }
                if opts.verify == Verify::FullAudit && batch.kind != BatchKind::Query {
                    if let Err(e) = engine.audit() {
                        report.failures.push(format!("batch {b}: audit failed: {e}"));
                    }
                }
            }
            Err(e) => {
                report.answer_digest = fnv(report.answer_digest, 0xFF);
                report.rejected.push(Rejection {
                    batch: b,
                    error: e.to_string(),
                });
            }
        }
    }
    report.total_micros = start.elapsed().as_micros() as u64;
    report.counters = engine.counters().clone();
    if opts.verify != Verify::None {
        let c = &report.counters;
        if c.pushes > c.push_bound() {
            report.failures.push(format!("P = {} exceeds m*L = {}", c.pushes, c.push_bound()));
        }
        if c.buffer_shortfalls > 0 {
            report
                .failures
                .push(format!("{} buffered-push shortfalls in interleaved search", c.buffer_shortfalls));
        }
    }
    Ok(report)
}
