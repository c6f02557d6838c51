//! Pebble configurations, matchings, round schedules, and the simulator that
//! replays and verifies them.
//!
//! A configuration stores `at[v]` = the pebble currently on vertex `v`. One
//! round selects a matching and swaps the pebbles across each of its edges.
//! The verifier is deliberately independent of the scheduler: it replays a
//! schedule round by round from the identity configuration and compares the
//! outcome against the target permutation.

use serde::{Deserialize, Serialize};

use crate::graph::Graph;
use crate::perm::Permutation;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SimError {
    #[error("edge {u}-{v} is not in the graph")]
    EdgeNotInGraph { u: u32, v: u32 },
    #[error("vertex {v} used by two edges of one matching")]
    VertexReused { v: u32 },
    #[error("round {round}: {source}")]
    Round {
        round: usize,
        #[source]
        source: Box<SimError>,
    },
    #[error("schedule was built for graph {expected}, got {actual}")]
    GraphHashMismatch { expected: String, actual: String },
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("json: {0}")]
    Json(String),
}

/// Placement of all pebbles: `at[v]` is the pebble label on vertex `v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PebbleConfig {
    at: Vec<u32>,
}

impl PebbleConfig {
    /// Pebble `v` starts on vertex `v`.
    pub fn identity(n: usize) -> Self {
        PebbleConfig { at: (0..n as u32).collect() }
    }

    pub fn from_permutation(p: &Permutation) -> Self {
        PebbleConfig { at: p.as_slice().to_vec() }
    }

    pub fn len(&self) -> usize {
        self.at.len()
    }

    pub fn is_empty(&self) -> bool {
        self.at.is_empty()
    }

    pub fn pebble_at(&self, v: u32) -> u32 {
        self.at[v as usize]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.at
    }

    /// One pebble per vertex, every pebble placed.
    pub fn is_bijection(&self) -> bool {
        let mut seen = vec![false; self.at.len()];
        self.at.iter().all(|&p| {
            let ok = (p as usize) < seen.len() && !seen[p as usize];
            if ok {
                seen[p as usize] = true;
            }
            ok
        })
    }
}

/// A set of vertex-disjoint edges, stored canonically (`u < v`, sorted).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Matching {
    edges: Vec<(u32, u32)>,
}

impl Matching {
    /// Canonicalizes edge orientation and order; disjointness is checked by
    /// [`validate_matching`], not here.
    pub fn new(edges: Vec<(u32, u32)>) -> Self {
        let mut edges: Vec<(u32, u32)> =
            edges.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        edges.sort_unstable();
        Matching { edges }
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }
}

/// An ordered list of matchings; the routing artifact.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Schedule {
    rounds: Vec<Matching>,
}

impl Schedule {
    pub fn empty() -> Self {
        Schedule { rounds: Vec::new() }
    }

    pub fn from_rounds(rounds: Vec<Matching>) -> Self {
        Schedule { rounds }
    }

    pub fn rounds(&self) -> &[Matching] {
        &self.rounds
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn push(&mut self, m: Matching) {
        self.rounds.push(m);
    }

    pub fn extend(&mut self, other: Schedule) {
        self.rounds.extend(other.rounds);
    }

    /// Rounds in reverse order; realizes the inverse permutation since every
    /// round is self-inverse.
    pub fn reversed(&self) -> Schedule {
        Schedule { rounds: self.rounds.iter().rev().cloned().collect() }
    }

    /// Text form, one round per line: `round <i>: u-v u-v ...`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, m) in self.rounds.iter().enumerate() {
            let edges: Vec<String> =
                m.edges().iter().map(|&(u, v)| format!("{u}-{v}")).collect();
            if edges.is_empty() {
                out.push_str(&format!("round {i}:\n"));
            } else {
                out.push_str(&format!("round {i}: {}\n", edges.join(" ")));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, SimError> {
        let mut rounds = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let bad = |reason: String| SimError::Parse { line: lineno, reason };
            let rest = line
                .strip_prefix(&format!("round {}:", rounds.len()))
                .ok_or_else(|| bad(format!("expected `round {}:` prefix", rounds.len())))?;
            let mut edges = Vec::new();
            for tok in rest.split_whitespace() {
                let (a, b) = tok
                    .split_once('-')
                    .ok_or_else(|| bad(format!("bad edge token `{tok}`")))?;
                let u: u32 = a.parse().map_err(|_| bad(format!("bad integer in `{tok}`")))?;
                let v: u32 = b.parse().map_err(|_| bad(format!("bad integer in `{tok}`")))?;
                if u >= v {
                    return Err(bad(format!("edge {u}-{v} not in u < v form")));
                }
                edges.push((u, v));
            }
            rounds.push(Matching::new(edges));
        }
        Ok(Schedule { rounds })
    }

    /// Machine-readable form carrying the fingerprint of the graph the
    /// schedule was built for.
    pub fn to_json(&self, g: &Graph) -> String {
        let file = ScheduleFile {
            graph_hash: g.content_hash(),
            rounds: self.rounds.iter().map(|m| m.edges().to_vec()).collect(),
        };
        serde_json::to_string_pretty(&file).expect("schedule serialization cannot fail")
    }

    /// Parses the JSON form and checks the graph fingerprint.
    pub fn from_json(text: &str, g: &Graph) -> Result<Self, SimError> {
        let file: ScheduleFile =
            serde_json::from_str(text).map_err(|e| SimError::Json(e.to_string()))?;
        let actual = g.content_hash();
        if file.graph_hash != actual {
            return Err(SimError::GraphHashMismatch { expected: file.graph_hash, actual });
        }
        Ok(Schedule { rounds: file.rounds.into_iter().map(Matching::new).collect() })
    }
}

#[derive(Serialize, Deserialize)]
struct ScheduleFile {
    graph_hash: String,
    rounds: Vec<Vec<(u32, u32)>>,
}

/// Checks that every edge exists in `g` and that the edges are pairwise
/// vertex-disjoint.
pub fn validate_matching(g: &Graph, m: &Matching) -> Result<(), SimError> {
    let mut used = vec![false; g.n()];
    for &(u, v) in m.edges() {
        if u as usize >= g.n() || v as usize >= g.n() || !g.has_edge(u, v) {
            return Err(SimError::EdgeNotInGraph { u, v });
        }
        for w in [u, v] {
            if used[w as usize] {
                return Err(SimError::VertexReused { v: w });
            }
            used[w as usize] = true;
        }
    }
    Ok(())
}

/// Swaps the pebbles across each edge of `m`. Exchanging along disjoint edges
/// commutes, so order is irrelevant.
pub fn apply_matching(c: &mut PebbleConfig, m: &Matching) {
    for &(u, v) in m.edges() {
        c.at.swap(u as usize, v as usize);
    }
}

/// Replays `s` from `start`, validating every round against `g`.
pub fn run_schedule(g: &Graph, start: &PebbleConfig, s: &Schedule) -> Result<PebbleConfig, SimError> {
    let mut config = start.clone();
    for (i, m) in s.rounds().iter().enumerate() {
        validate_matching(g, m)
            .map_err(|e| SimError::Round { round: i, source: Box::new(e) })?;
        apply_matching(&mut config, m);
        debug_assert!(config.is_bijection());
    }
    Ok(config)
}

/// Outcome of replaying a schedule against a target permutation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOutcome {
    pub ok: bool,
    pub rounds_used: usize,
}

/// Replays `s` from the identity configuration and checks that pebble `p_v`
/// ends on vertex `pi(v)` for every `v` — i.e. `at[pi(v)] = v`. This single
/// destination convention is shared by every module.
pub fn verify_achieves(g: &Graph, pi: &Permutation, s: &Schedule) -> Result<VerifyOutcome, SimError> {
    let end = run_schedule(g, &PebbleConfig::identity(g.n()), s)?;
    let ok = (0..g.n() as u32).all(|v| end.pebble_at(pi.apply(v)) == v);
    Ok(VerifyOutcome { ok, rounds_used: s.len() })
}
