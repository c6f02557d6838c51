//! Exact routing numbers for tiny graphs, by breadth-first search over all
//! pebble configurations, plus a distance-based lower bound.
//!
//! One search move applies an arbitrary nonempty matching of the graph. With
//! n ≤ 8 the n! configurations fit comfortably in memory, so the search is
//! exact: it returns the true minimum number of rounds. This module accepts
//! non-regular fixtures too — the routing pipeline does not, but the oracle
//! is also used to sanity-check hand-computable path and star cases.

use std::collections::VecDeque;

use crate::graph::Graph;
use crate::perm::Permutation;

/// Largest vertex count the exact search accepts (8! = 40320 states).
pub const MAX_EXACT_N: usize = 8;

const FACTORIAL: [usize; 9] = [1, 1, 2, 6, 24, 120, 720, 5040, 40320];

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("exact search limited to {MAX_EXACT_N} vertices, got {n}")]
    TooLarge { n: usize },
    #[error("no schedule within {cap} rounds")]
    ExceedsCap { cap: u32 },
    #[error("permutation length {perm} does not match graph order {graph}")]
    LengthMismatch { perm: usize, graph: usize },
    #[error("target configuration unreachable")]
    Unreachable,
}

/// All nonempty matchings of `g`, each as a canonical edge list. Enumerated
/// by deciding, vertex by vertex, whether the lowest unmatched vertex stays
/// single or pairs with a higher available neighbor — every matching is
/// produced exactly once.
fn all_matchings(g: &Graph) -> Vec<Vec<(u8, u8)>> {
    let n = g.n();
    let mut out = Vec::new();
    let mut current: Vec<(u8, u8)> = Vec::new();
    let mut taken = vec![false; n];
    fn rec(
        g: &Graph,
        v: usize,
        taken: &mut Vec<bool>,
        current: &mut Vec<(u8, u8)>,
        out: &mut Vec<Vec<(u8, u8)>>,
    ) {
        let n = g.n();
        if v == n {
            if !current.is_empty() {
                out.push(current.clone());
            }
            return;
        }
        if taken[v] {
            rec(g, v + 1, taken, current, out);
            return;
        }
        // v stays unmatched.
        rec(g, v + 1, taken, current, out);
        // v pairs with a higher, still-available neighbor.
        for &w in g.neighbors(v as u32) {
            let wi = w as usize;
            if wi > v && !taken[wi] {
                taken[wi] = true;
                current.push((v as u8, w as u8));
                rec(g, v + 1, taken, current, out);
                current.pop();
                taken[wi] = false;
            }
        }
    }
    rec(g, 0, &mut taken, &mut current, &mut out);
    out
}

/// Ranks a configuration into 0..n! via its inversion table.
fn rank(cfg: &[u8]) -> usize {
    let n = cfg.len();
    let mut r = 0usize;
    for i in 0..n {
        let smaller_later = cfg[i + 1..].iter().filter(|&&x| x < cfg[i]).count();
        r = r * (n - i) + smaller_later;
    }
    r
}

fn identity_cfg(n: usize) -> Vec<u8> {
    (0..n as u8).collect()
}

/// The configuration that realizes `pi` from the identity start: vertex u
/// holds pebble pi⁻¹(u), so that pebble v sits on pi(v).
fn target_cfg(pi: &Permutation) -> Vec<u8> {
    pi.inverse().as_slice().iter().map(|&x| x as u8).collect()
}

struct Search {
    dist: Vec<u32>,
    queue: VecDeque<Vec<u8>>,
    moves: Vec<Vec<(u8, u8)>>,
}

impl Search {
    fn start(g: &Graph) -> Result<Self, OracleError> {
        let n = g.n();
        if n > MAX_EXACT_N {
            return Err(OracleError::TooLarge { n });
        }
        let mut dist = vec![u32::MAX; FACTORIAL[n]];
        let start = identity_cfg(n);
        dist[rank(&start)] = 0;
        let mut queue = VecDeque::new();
        queue.push_back(start);
        Ok(Search { dist, queue, moves: all_matchings(g) })
    }

    /// Expands until `stop_rank` is settled (or the space is exhausted when
    /// `stop_rank` is `None`). `cap` prunes depths beyond it.
    fn run(&mut self, stop_rank: Option<usize>, cap: u32) -> Result<Option<u32>, OracleError> {
        if let Some(t) = stop_rank {
            if self.dist[t] != u32::MAX {
                return Ok(Some(self.dist[t]));
            }
        }
        let mut pruned = false;
        while let Some(cfg) = self.queue.pop_front() {
            let depth = self.dist[rank(&cfg)];
            if depth >= cap {
                pruned = true;
                continue;
            }
            for m in &self.moves {
                let mut next = cfg.clone();
                for &(u, v) in m {
                    next.swap(u as usize, v as usize);
                }
                let r = rank(&next);
                if self.dist[r] == u32::MAX {
                    self.dist[r] = depth + 1;
                    if stop_rank == Some(r) {
                        return Ok(Some(depth + 1));
                    }
                    self.queue.push_back(next);
                }
            }
        }
        match stop_rank {
            Some(_) if pruned => Err(OracleError::ExceedsCap { cap }),
            Some(_) => Err(OracleError::Unreachable),
            None => Ok(None),
        }
    }
}

/// Exact minimum number of matching rounds realizing `pi` from the identity
/// configuration. `cap` bounds the search depth; hitting it yields
/// `ExceedsCap` rather than an endless search.
pub fn rt_exact(g: &Graph, pi: &Permutation, cap: u32) -> Result<u32, OracleError> {
    if pi.len() != g.n() {
        return Err(OracleError::LengthMismatch { perm: pi.len(), graph: g.n() });
    }
    let mut search = Search::start(g)?;
    let target = rank(&target_cfg(pi));
    match search.run(Some(target), cap)? {
        Some(d) => Ok(d),
        None => Err(OracleError::Unreachable),
    }
}

/// Exact routing numbers for every permutation of `g` at once: a full
/// breadth-first sweep of the configuration space. Useful when auditing many
/// permutations of one small graph.
pub struct RtTable {
    n: usize,
    dist: Vec<u32>,
}

impl RtTable {
    pub fn build(g: &Graph) -> Result<Self, OracleError> {
        let mut search = Search::start(g)?;
        search.run(None, u32::MAX)?;
        Ok(RtTable { n: g.n(), dist: search.dist })
    }

    pub fn rt_of(&self, pi: &Permutation) -> Result<u32, OracleError> {
        if pi.len() != self.n {
            return Err(OracleError::LengthMismatch { perm: pi.len(), graph: self.n });
        }
        let d = self.dist[rank(&target_cfg(pi))];
        if d == u32::MAX {
            return Err(OracleError::Unreachable);
        }
        Ok(d)
    }

    /// The largest routing number over all permutations.
    pub fn max_rt(&self) -> u32 {
        self.dist.iter().copied().filter(|&d| d != u32::MAX).max().unwrap_or(0)
    }
}

/// Distance lower bound: a pebble moves at most one edge per round, so no
/// schedule beats max over v of dist(v, pi(v)).
pub fn rt_lower_bound(g: &Graph, pi: &Permutation) -> u32 {
    assert_eq!(pi.len(), g.n(), "permutation length must match graph order");
    let mut best = 0u32;
    for v in 0..g.n() as u32 {
        let w = pi.apply(v);
        if w == v {
            continue;
        }
        let d = g.bfs_distances(v)[w as usize];
        best = best.max(d as u32);
    }
    best
}
