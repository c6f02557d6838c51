//! Two-coloring of the vertex set tailored to an involution.
//!
//! The routing stage needs a split V = V₁ ∪ V₂ with two properties:
//! every swap pair lives inside one side (`side[v] = side[pi(v)]`), and every
//! vertex keeps at least `ceil(beta * d)` neighbors on *each* side. The
//! constructor tosses one fair coin per cycle of the involution (pairs are
//! colored atomically, so the first property can never break) and then runs
//! Moser–Tardos-style resampling on the second: while some vertex lacks
//! neighbors on a side, refresh the coins of every cycle touching its closed
//! neighborhood.

use rand::Rng;

use crate::graph::Graph;
use crate::perm::Permutation;
use crate::seeds::rng_for;

/// Default fraction of the degree required on each side.
pub const DEFAULT_BETA: f64 = 1.0 / 3.0;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PartitionError {
    #[error("permutation is not an involution")]
    NotInvolution,
    #[error("permutation length {perm} does not match graph order {graph}")]
    LengthMismatch { perm: usize, graph: usize },
    #[error("beta = {beta} outside (0, 1/2)")]
    BadBeta { beta: f64 },
    #[error("gave up after {resamples} resampling steps")]
    ResamplesExhausted { resamples: u64 },
    #[error("parse error: {reason}")]
    Parse { reason: String },
}

/// A two-coloring of the vertices; sides are named 1 and 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    side: Vec<u8>,
}

impl Partition {
    pub fn from_sides(side: Vec<u8>) -> Result<Self, PartitionError> {
        if let Some(bad) = side.iter().find(|&&s| s != 1 && s != 2) {
            return Err(PartitionError::Parse {
                reason: format!("side value {bad} not in {{1, 2}}"),
            });
        }
        Ok(Partition { side })
    }

    pub fn len(&self) -> usize {
        self.side.len()
    }

    pub fn is_empty(&self) -> bool {
        self.side.is_empty()
    }

    pub fn side_of(&self, v: u32) -> u8 {
        self.side[v as usize]
    }

    /// Vertices on the given side, ascending.
    pub fn vertices_on(&self, side: u8) -> Vec<u32> {
        (0..self.side.len() as u32).filter(|&v| self.side[v as usize] == side).collect()
    }

    /// Single line of '1'/'2' characters, one per vertex.
    pub fn to_line(&self) -> String {
        let mut s: String = self.side.iter().map(|&x| if x == 1 { '1' } else { '2' }).collect();
        s.push('\n');
        s
    }

    pub fn from_line(text: &str) -> Result<Self, PartitionError> {
        let line = text.trim_end_matches('\n');
        if line.is_empty() {
            return Err(PartitionError::Parse { reason: "empty partition line".into() });
        }
        let side = line
            .chars()
            .map(|c| match c {
                '1' => Ok(1u8),
                '2' => Ok(2u8),
                other => Err(PartitionError::Parse {
                    reason: format!("unexpected character {other:?}"),
                }),
            })
            .collect::<Result<Vec<u8>, _>>()?;
        Ok(Partition { side })
    }
}

/// Required per-side neighbor count for degree `d` and fraction `beta`.
pub fn side_threshold(d: usize, beta: f64) -> u32 {
    (beta * d as f64).ceil() as u32
}

/// Builds a partition for the involution `pi` on `g`.
///
/// Property (i) holds by construction at every step; property (ii) is reached
/// by resampling, scanning for the lowest-id violating vertex and refreshing
/// the coins of all cycles that intersect its closed neighborhood. Each
/// violator event counts as one resampling step against `max_resamples`.
pub fn find_partition(
    g: &Graph,
    pi: &Permutation,
    beta: f64,
    max_resamples: u64,
    seed: u64,
) -> Result<Partition, PartitionError> {
    let n = g.n();
    if pi.len() != n {
        return Err(PartitionError::LengthMismatch { perm: pi.len(), graph: n });
    }
    if !pi.is_involution() {
        return Err(PartitionError::NotInvolution);
    }
    if !(beta > 0.0 && beta < 0.5) {
        return Err(PartitionError::BadBeta { beta });
    }
    let thr = side_threshold(g.degree(), beta);
    // A vertex has exactly d neighbors split over the two sides, so demanding
    // more than d/2 per side can never be met.
    if 2 * thr as usize > g.degree() {
        return Err(PartitionError::ResamplesExhausted { resamples: 0 });
    }

    // Cycles of the involution: singletons and pairs, indexed by discovery
    // order (ascending minimum element).
    let mut cycle_of = vec![u32::MAX; n];
    let mut cycles: Vec<(u32, u32)> = Vec::new();
    for v in 0..n as u32 {
        if cycle_of[v as usize] != u32::MAX {
            continue;
        }
        let w = pi.apply(v);
        let id = cycles.len() as u32;
        cycle_of[v as usize] = id;
        cycle_of[w as usize] = id;
        cycles.push((v, w));
    }

    let mut rng = rng_for(seed, "partition-coins", 0);
    let mut coin: Vec<u8> = (0..cycles.len()).map(|_| flip(&mut rng)).collect();
    let mut side = vec![0u8; n];
    for (ci, &(a, b)) in cycles.iter().enumerate() {
        side[a as usize] = coin[ci];
        side[b as usize] = coin[ci];
    }
    // cnt[v] = neighbors of v on side 1 / side 2, maintained incrementally.
    let mut cnt = vec![[0u32; 2]; n];
    for v in 0..n {
        for &w in g.neighbors(v as u32) {
            cnt[v][(side[w as usize] - 1) as usize] += 1;
        }
    }

    let mut resamples: u64 = 0;
    let mut scope: Vec<u32> = Vec::new();
    loop {
        let violator = (0..n).find(|&v| cnt[v][0] < thr || cnt[v][1] < thr);
        let Some(v) = violator else {
            return Ok(Partition { side });
        };
        if resamples >= max_resamples {
            return Err(PartitionError::ResamplesExhausted { resamples });
        }
        resamples += 1;

        scope.clear();
        scope.push(cycle_of[v]);
        scope.extend(g.neighbors(v as u32).iter().map(|&w| cycle_of[w as usize]));
        scope.sort_unstable();
        scope.dedup();
        for &ci in &scope {
            let fresh = flip(&mut rng);
            let old = coin[ci as usize];
            if fresh == old {
                continue;
            }
            coin[ci as usize] = fresh;
            let (a, b) = cycles[ci as usize];
            let members = if a == b { &[a][..] } else { &[a, b][..] };
            for &u in members {
                side[u as usize] = fresh;
                for &w in g.neighbors(u) {
                    cnt[w as usize][(old - 1) as usize] -= 1;
                    cnt[w as usize][(fresh - 1) as usize] += 1;
                }
            }
        }
    }
}

fn flip(rng: &mut impl Rng) -> u8 {
    if rng.gen::<bool>() {
        1
    } else {
        2
    }
}

/// A single failed requirement found by [`check_partition`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartitionViolation {
    /// `v` and its image sit on different sides.
    PairSplit { v: u32, partner: u32 },
    /// `v` has too few neighbors on `side`.
    DegreeShortfall { v: u32, side: u8, have: u32, need: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionReport {
    pub threshold: u32,
    pub violations: Vec<PartitionViolation>,
}

impl PartitionReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Audits both partition properties exactly; reports every violation rather
/// than failing fast.
pub fn check_partition(g: &Graph, pi: &Permutation, p: &Partition, beta: f64) -> PartitionReport {
    assert_eq!(p.len(), g.n(), "partition length must match graph order");
    assert_eq!(pi.len(), g.n(), "permutation length must match graph order");
    let thr = side_threshold(g.degree(), beta);
    let mut violations = Vec::new();
    for v in 0..g.n() as u32 {
        let partner = pi.apply(v);
        if v < partner && p.side_of(v) != p.side_of(partner) {
            violations.push(PartitionViolation::PairSplit { v, partner });
        }
    }
    for v in 0..g.n() as u32 {
        let mut have = [0u32; 2];
        for &w in g.neighbors(v) {
            have[(p.side_of(w) - 1) as usize] += 1;
        }
        for side in [1u8, 2u8] {
            let h = have[(side - 1) as usize];
            if h < thr {
                violations.push(PartitionViolation::DegreeShortfall { v, side, have: h, need: thr });
            }
        }
    }
    PartitionReport { threshold: thr, violations }
}
