//! Line-oriented workload scripts.
//!
//! ```text
//! # n=8 seed=1
//! B I
//! E 0 1
//! E 1 2
//! B Q
//! E 0 2
//! ```
//!
//! A batch runs from its `B` line to the next `B` line or end of input.
//! Endpoints are written smaller first.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::VertexId;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BatchKind {
    Insert,
    Delete,
    Query,
}

impl BatchKind {
    pub fn letter(self) -> char {
        match self {
            BatchKind::Insert => 'I',
            BatchKind::Delete => 'D',
            BatchKind::Query => 'Q',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Batch {
    pub kind: BatchKind,
    pub edges: Vec<(VertexId, VertexId)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Script {
    pub n: usize,
    pub seed: u64,
    pub batches: Vec<Batch>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScriptError {
    #[error("line 1: expected header `# n=<int> seed=<int>`")]
    MissingHeader,
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
}

impl Script {
    pub fn new(n: usize, seed: u64) -> Self {
        Script {
            n,
            seed,
            batches: Vec::new(),
        }
    }

    /// Edge operations over all batches.
    pub fn operations(&self) -> usize {
        self.batches.iter().map(|b| b.edges.len()).sum()
    }

    pub fn parse(text: &str) -> Result<Script, ScriptError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(ScriptError::MissingHeader)?;
        let (n, seed) = parse_header(header).ok_or(ScriptError::MissingHeader)?;
        let mut script = Script::new(n, seed);
        for (idx, raw) in lines {
            let line = idx + 1;
            let err = |msg: &str| ScriptError::Syntax {
                line,
                msg: msg.to_string(),
            };
            let mut parts = raw.split(' ');
            match parts.next() {
                Some("B") => {
                    let kind = match (parts.next(), parts.next()) {
                        (Some("I"), None) => BatchKind::Insert,
                        (Some("D"), None) => BatchKind::Delete,
                        (Some("Q"), None) => BatchKind::Query,
                        _ => return Err(err("expected `B I`, `B D` or `B Q`")),
                    };
                    script.batches.push(Batch {
                        kind,
                        edges: Vec::new(),
                    });
                }
                Some("E") => {
                    let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
                        return Err(err("expected `E <u> <v>`"));
                    };
                    let u: VertexId = parse_uint(a).ok_or_else(|| err("bad vertex id"))?;
                    let v: VertexId = parse_uint(b).ok_or_else(|| err("bad vertex id"))?;
                    if u > v {
                        return Err(err("endpoints must be written smaller first"));
                    }
                    let batch = script
                        .batches
                        .last_mut()
                        .ok_or_else(|| err("edge line before the first batch"))?;
                    batch.edges.push((u, v));
                }
                _ => return Err(err("expected a `B` or `E` line")),
            }
        }
        Ok(script)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(16 + self.operations() * 12);
        writeln!(out, "# n={} seed={}", self.n, self.seed).unwrap();
        for b in &self.batches {
            writeln!(out, "B {}", b.kind.letter()).unwrap();
            for &(u, v) in &b.edges {
                writeln!(out, "E {u} {v}").unwrap();
            }
        }
        out
    }
}

/// Digits only, no sign or leading zeros, so that text round-trips exactly.
fn parse_uint<T: FromStr>(s: &str) -> Option<T> {
    let ok = !s.is_empty() && s.bytes().all(|c| c.is_ascii_digit()) && (s == "0" || !s.starts_with('0'));
    ok.then(|| s.parse().ok()).flatten()
}

fn parse_header(line: &str) -> Option<(usize, u64)> {
    let rest = line.strip_prefix("# n=")?;
    let (n, seed) = rest.split_once(" seed=")?;
    Some((parse_uint(n)?, parse_uint(seed)?))
}

impl FromStr for Script {
    type Err = ScriptError;
    fn from_str(s: &str) -> Result<Self, ScriptError> {
        Script::parse(s)
    }
}

impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SAMPLE: &str = "# n=8 seed=1\nB I\nE 0 1\nE 1 2\nB Q\nE 0 2\nE 3 3\nB D\n";

    #[test]
    fn parses_sample() {
        let s = Script::parse(SAMPLE).unwrap();
        assert_eq!((s.n, s.seed), (8, 1));
        assert_eq!(s.batches.len(), 3);
        assert_eq!(s.batches[1].edges, vec![(0, 2), (3, 3)]);
        assert!(s.batches[2].edges.is_empty());
        assert_eq!(s.to_text(), SAMPLE);
    }

    #[test]
    fn header_only() {
        let s = Script::parse("# n=3 seed=0\n").unwrap();
        assert!(s.batches.is_empty());
        assert_eq!(s.to_text(), "# n=3 seed=0\n");
    }

    #[test]
    fn rejects_malformed() {
        assert_eq!(Script::parse(""), Err(ScriptError::MissingHeader));
        assert_eq!(Script::parse("# n=x seed=1\n"), Err(ScriptError::MissingHeader));
        for bad in [
            "# n=3 seed=1\nE 0 1\n",
            "# n=3 seed=1\nB X\n",
            "# n=3 seed=1\nB I\nE 2 1\n",
            "# n=3 seed=1\nB I\nE 01 2\n",
            "# n=3 seed=1\nB I\nE 0\n",
            "# n=3 seed=1\nB I\n\n",
        ] {
            assert!(matches!(Script::parse(bad), Err(ScriptError::Syntax { .. })), "{bad:?}");
        }
    }

    fn arb_script() -> impl Strategy<Value = Script> {
        let batch = (0..3u8, prop::collection::vec((0..50u32, 0..50u32), 0..6)).prop_map(|(k, es)| Batch {
            kind: [BatchKind::Insert, BatchKind::Delete, BatchKind::Query][k as usize],
            edges: es.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect(),
        });
        (1..100usize, any::<u64>(), prop::collection::vec(batch, 0..8)).prop_map(|(n, seed, batches)| Script {
            n,
            seed,
            batches,
        })
    }

    proptest! {
        #[test]
        fn round_trip_is_exact(s in arb_script()) {
            let text = s.to_text();
            let back = Script::parse(&text).unwrap();
            prop_assert_eq!(&back, &s);
            prop_assert_eq!(back.to_text(), text);
        }
    }
}
