//! Construction of switchable path families: bundles of equal-odd-length
//! paths, one per routed pair, whose z-th and (ℓ+1−z)-th edges form a matching
//! for every z. Such a bundle yields a (2k+1)-round schedule that swaps the
//! pebbles at the two ends of every path and returns every other pebble to
//! where it started.
//!
//! Paths are found by growing two frontiers — one from each endpoint of a
//! pair — through k alternating layers of the two-sided partition, then
//! joining them with a single crossing edge inside the last layer. A frontier
//! level only admits vertices that no committed path and no tentative frontier
//! already uses in that layer, which is what makes the per-layer slices
//! matchings. After a path commits, all other tentative edges are released.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::graph::Graph;
use crate::partition::Partition;
use crate::seeds::rng_for;
use crate::sim::{Matching, Schedule};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FamilyError {
    #[error("bad parameters: {why}")]
    BadParams { why: String },
    #[error("bad batch: {why}")]
    BadBatch { why: String },
    #[error("frontier stalled at layer {layer} with {achieved} vertices")]
    FrontierStuck { layer: u32, achieved: usize },
    #[error("no edge joins the two final frontiers")]
    NoCrossingEdge,
    #[error("layer {layer} would exceed its edge capacity")]
    CapacityExceeded { layer: u32 },
    #[error("no path could be built for any of the {} pairs", residual.len())]
    BatchFailed { residual: Vec<(u32, u32)> },
    #[error("family fails its invariants: {reason}")]
    InvalidFamily { reason: String },
}

/// Tuning knobs for the family builder.
///
/// `frontier_target` is the level size both frontiers must reach at the top
/// layer; levels grow geometrically by `growth` per layer until they hit it,
/// which fixes `k`. `capacity` caps how many committed edges a single layer
/// may hold, and `retries` is the per-pair reseed budget inside one batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuilderParams {
    pub epsilon: f64,
    pub growth: u32,
    pub k: u32,
    pub frontier_target: usize,
    pub capacity: usize,
    pub retries: u32,
}

impl BuilderParams {
    /// Conservative parameters: tiny batches (ε = 1/72), growth tied to the
    /// measured degree/eigenvalue separation.
    pub fn defaults(n: usize, d: usize, lambda_hat: f64) -> Self {
        let sep = separation(d, lambda_hat);
        let growth = (sep.floor() as u32).max(2);
        Self::from_epsilon_growth(n, 1.0 / 72.0, growth)
    }

    /// Scale-aware parameters: the batch fraction widens as the separation
    /// d/λ̂ grows, clamped to [1/72, 1/8]. Growth follows the per-vertex edge
    /// budget ε·d a frontier may spend — levels then multiply by roughly that
    /// factor — keeping layer stacks shallow on denser graphs.
    pub fn adaptive(n: usize, d: usize, lambda_hat: f64) -> Self {
        let sep = separation(d, lambda_hat);
        let epsilon = (2.0 / sep).clamp(1.0 / 72.0, 1.0 / 8.0);
        let growth = ((epsilon * d as f64).floor() as u32).clamp(2, d.max(2) as u32);
        Self::from_epsilon_growth(n, epsilon, growth)
    }

    /// Derives the remaining fields (target, k, capacity) from an explicit
    /// batch fraction and growth factor.
    pub fn from_epsilon_growth(n: usize, epsilon: f64, growth: u32) -> Self {
        let frontier_target = ((epsilon * n as f64).floor() as usize).max(1);
        let mut k = 1u32;
        let mut reach = growth as usize;
        while reach < frontier_target {
            reach = reach.saturating_mul(growth as usize);
            k += 1;
        }
        let capacity = (n / 24).max(2 * frontier_target);
        BuilderParams { epsilon, growth, k, frontier_target, capacity, retries: 3 }
    }

    /// Required level size at layer `z`: s_z = min(target, growth^z), s_0 = 1.
    pub fn level_target(&self, z: u32) -> usize {
        let mut s = 1usize;
        for _ in 0..z {
            s = s.saturating_mul(self.growth as usize);
            if s >= self.frontier_target {
                return self.frontier_target;
            }
        }
        s.min(self.frontier_target)
    }

    /// Path length in edges: ℓ = 2k + 1.
    pub fn ell(&self) -> u32 {
        2 * self.k + 1
    }

    pub fn validate(&self) -> Result<(), FamilyError> {
        let why = if self.growth < 2 {
            Some(format!("growth {} < 2", self.growth))
        } else if self.k < 1 {
            Some("k < 1".to_string())
        } else if self.frontier_target < 1 {
            Some("frontier_target < 1".to_string())
        } else if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            Some(format!("epsilon {} outside (0, 1)", self.epsilon))
        } else if self.capacity < 2 {
            Some(format!("capacity {} < 2", self.capacity))
        } else {
            None
        };
        match why {
            Some(why) => Err(FamilyError::BadParams { why }),
            None => Ok(()),
        }
    }
}

fn separation(d: usize, lambda_hat: f64) -> f64 {
    if lambda_hat.is_finite() && lambda_hat > 0.0 {
        d as f64 / lambda_hat
    } else {
        d as f64
    }
}

/// Side assignment for one layer: frontiers step from `a_side` into `b_side`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerPlan {
    pub a_side: u8,
    pub b_side: u8,
}

/// Alternating side table for layers 1..=k: layer z has `a_side = start_side`
/// when z is odd and the complement when z is even.
pub fn plan_layers(g: &Graph, p: &Partition, start_side: u8, params: &BuilderParams) -> Vec<LayerPlan> {
    assert_eq!(p.len(), g.n(), "partition length must match graph order");
    assert!(start_side == 1 || start_side == 2, "side must be 1 or 2");
    let other = 3 - start_side;
    (1..=params.k)
        .map(|z| {
            if z % 2 == 1 {
                LayerPlan { a_side: start_side, b_side: other }
            } else {
                LayerPlan { a_side: other, b_side: start_side }
            }
        })
        .collect()
}

/// Per-layer bookkeeping shared by all paths of one batch sequence: which
/// B-side vertices are already incident to a committed edge, and how many
/// committed edges each layer holds.
#[derive(Debug, Clone)]
pub struct LayerState {
    k: u32,
    capacity: usize,
    used_b: Vec<Vec<bool>>,
    edges_in_layer: Vec<usize>,
}

impl LayerState {
    pub fn new(n: usize, k: u32, capacity: usize) -> Self {
        LayerState {
            k,
            capacity,
            used_b: vec![vec![false; n]; k as usize + 1],
            edges_in_layer: vec![0; k as usize + 1],
        }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Is `v` already incident to a committed edge of layer `z`?
    pub fn is_used(&self, z: u32, v: u32) -> bool {
        self.used_b[z as usize][v as usize]
    }

    pub fn edges_in_layer(&self, z: u32) -> usize {
        self.edges_in_layer[z as usize]
    }

    /// Commits a finished path: layer z retains the path's z-th and
    /// (ℓ+1−z)-th edges, whose B_z endpoints are `seq[z]` and `seq[ℓ−z]`.
    pub fn commit(&mut self, seq: &[u32]) -> Result<(), FamilyError> {
        let k = self.k as usize;
        let ell = 2 * k + 1;
        if seq.len() != ell + 1 {
            return Err(FamilyError::InvalidFamily {
                reason: format!("path has {} vertices, expected {}", seq.len(), ell + 1),
            });
        }
        for z in 1..=k {
            if self.edges_in_layer[z] + 2 > self.capacity {
                return Err(FamilyError::CapacityExceeded { layer: z as u32 });
            }
            for v in [seq[z], seq[ell - z]] {
                if self.used_b[z][v as usize] {
                    return Err(FamilyError::InvalidFamily {
                        reason: format!("vertex {v} already used in layer {z}"),
                    });
                }
            }
        }
        for z in 1..=k {
            self.used_b[z][seq[z] as usize] = true;
            self.used_b[z][seq[ell - z] as usize] = true;
            self.edges_in_layer[z] += 2;
        }
        Ok(())
    }
}

/// One frontier: `levels[z]` lists `(vertex, parent)` in insertion order,
/// where `parent` sits in level z−1. Level 0 is the seed endpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frontier {
    levels: Vec<Vec<(u32, u32)>>,
}

impl Frontier {
    fn seeded(w: u32) -> Self {
        Frontier { levels: vec![vec![(w, w)]] }
    }

    pub fn level(&self, z: u32) -> &[(u32, u32)] {
        &self.levels[z as usize]
    }

    pub fn depth(&self) -> u32 {
        self.levels.len() as u32 - 1
    }

    fn parent_of(&self, z: u32, v: u32) -> u32 {
        self.levels[z as usize]
            .iter()
            .find(|&&(x, _)| x == v)
            .map(|&(_, p)| p)
            .expect("frontier parent lookup on a vertex not in the level")
    }
}

/// The two frontiers grown from a pair's endpoints, level-synchronized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrontierPair {
    fwd: Frontier,
    bwd: Frontier,
}

impl FrontierPair {
    /// Assembles a pair from explicit levels; intended for tests and
    /// diagnostics. `grow_frontiers` is the real constructor.
    pub fn from_levels(fwd: Vec<Vec<(u32, u32)>>, bwd: Vec<Vec<(u32, u32)>>) -> Self {
        assert_eq!(fwd.len(), bwd.len(), "frontiers must have equal depth");
        FrontierPair { fwd: Frontier { levels: fwd }, bwd: Frontier { levels: bwd } }
    }

    pub fn forward(&self) -> &Frontier {
        &self.fwd
    }

    pub fn backward(&self) -> &Frontier {
        &self.bwd
    }

    pub fn depth(&self) -> u32 {
        self.fwd.depth()
    }
}

/// Grows one level: admits neighbors of `parents` that lie on `want` side and
/// are not blocked, stopping at `s_z`. Neighbor order is shuffled so a
/// reseeded retry explores different frontiers; parents are processed in
/// ascending id, each contributing at most `budget` children per pass. When a
/// pass ends short of `s_z`, further passes lift the cap by another `budget`
/// so that tight levels (where `s_z` equals the total budget exactly) survive
/// neighbor collisions; growth only stops once no parent can add anything.
fn grow_level(
    g: &Graph,
    p: &Partition,
    want: u8,
    parents: &[(u32, u32)],
    state: &LayerState,
    z: u32,
    sibling: Option<&[bool]>,
    budget: u32,
    s_z: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<(u32, u32)>, Vec<bool>) {
    let mut level = Vec::with_capacity(s_z);
    let mut member = vec![false; g.n()];
    let mut parent_ids: Vec<u32> = parents.iter().map(|&(v, _)| v).collect();
    parent_ids.sort_unstable();
    let mut shuffled: Vec<Vec<u32>> = parent_ids
        .iter()
        .map(|&pv| {
            let mut nbrs = g.neighbors(pv).to_vec();
            nbrs.shuffle(rng);
            nbrs
        })
        .collect();
    let mut cap = budget;
    loop {
        let before = level.len();
        for (slot, pv) in parent_ids.iter().copied().enumerate() {
            if level.len() >= s_z {
                break;
            }
            let mut kids = 0u32;
            shuffled[slot].retain(|&c| {
                if kids >= cap || level.len() >= s_z {
                    return true;
                }
                let ci = c as usize;
                if p.side_of(c) != want
                    || member[ci]
                    || state.is_used(z, c)
                    || sibling.map_or(false, |m| m[ci])
                {
                    return false;
                }
                member[ci] = true;
                level.push((c, pv));
                kids += 1;
                false
            });
        }
        if level.len() >= s_z || level.len() == before {
            break;
        }
        cap = cap.saturating_add(budget);
    }
    (level, member)
}

/// Grows both frontiers of the pair `(w, wp)` through all layers.
///
/// At each layer z both levels aim for the size s_z; the first frontier is
/// grown before the second, and the second additionally avoids the first's
/// fresh level, so the two stay disjoint. The targets are goals, not hard
/// requirements: on sparse graphs a level may come up short and the pair
/// still connect, so only a level with no admissible vertex at all aborts
/// with `FrontierStuck` — thinner frontiers merely lower the odds that
/// [`connect_frontiers`] finds a crossing edge, which the caller's retry
/// budget absorbs.
pub fn grow_frontiers(
    g: &Graph,
    p: &Partition,
    layers: &[LayerPlan],
    state: &LayerState,
    w: u32,
    wp: u32,
    params: &BuilderParams,
    seed: u64,
) -> Result<FrontierPair, FamilyError> {
    if w == wp {
        return Err(FamilyError::BadBatch { why: format!("pair endpoints coincide at {w}") });
    }
    if p.side_of(w) != p.side_of(wp) {
        return Err(FamilyError::BadBatch {
            why: format!("endpoints {w} and {wp} on different sides"),
        });
    }
    let mut rng = rng_for(seed, "frontier-growth", 0);
    let mut fwd = Frontier::seeded(w);
    let mut bwd = Frontier::seeded(wp);
    for (idx, plan) in layers.iter().enumerate() {
        let z = idx as u32 + 1;
        let s_z = params.level_target(z);
        let (mut lvl_f, mask_f) = grow_level(
            g,
            p,
            plan.b_side,
            fwd.level(z - 1),
            state,
            z,
            None,
            params.growth,
            s_z,
            &mut rng,
        );
        if lvl_f.is_empty() {
            return Err(FamilyError::FrontierStuck { layer: z, achieved: 0 });
        }
        let (mut lvl_b, _) = grow_level(
            g,
            p,
            plan.b_side,
            bwd.level(z - 1),
            state,
            z,
            Some(&mask_f),
            params.growth,
            s_z,
            &mut rng,
        );
        if lvl_b.is_empty() && lvl_f.len() >= 2 {
            // The first frontier may have consumed the second's whole
            // candidate pool (their neighborhoods can coincide on sparse
            // graphs). Rebalance by handing over one fresh vertex that the
            // second frontier can legitimately reach.
            let donated = lvl_f.iter().rposition(|&(c, _)| {
                bwd.level(z - 1).iter().any(|&(pv, _)| g.has_edge(pv, c))
            });
            if let Some(i) = donated {
                let (c, _) = lvl_f.remove(i);
                let pv = bwd
                    .level(z - 1)
                    .iter()
                    .find(|&&(pv, _)| g.has_edge(pv, c))
                    .expect("donation checked adjacency")
                    .0;
                lvl_b.push((c, pv));
            }
        }
        if lvl_b.is_empty() {
            return Err(FamilyError::FrontierStuck { layer: z, achieved: 0 });
        }
        fwd.levels.push(lvl_f);
        bwd.levels.push(lvl_b);
    }
    Ok(FrontierPair { fwd, bwd })
}

/// Finds an edge of `g` joining the two top levels, scanning the first
/// frontier's vertices in ascending id and each adjacency list in ascending
/// order. Returns `(v_k, v'_k)` with `v_k` in the forward frontier.
pub fn connect_frontiers(g: &Graph, f: &FrontierPair) -> Result<(u32, u32), FamilyError> {
    let k = f.depth();
    let mut in_bwd = vec![false; g.n()];
    for &(v, _) in f.bwd.level(k) {
        in_bwd[v as usize] = true;
    }
    let mut tops: Vec<u32> = f.fwd.level(k).iter().map(|&(v, _)| v).collect();
    tops.sort_unstable();
    for &x in &tops {
        for &y in g.neighbors(x) {
            if in_bwd[y as usize] {
                return Ok((x, y));
            }
        }
    }
    Err(FamilyError::NoCrossingEdge)
}

/// Walks parent chains back from the crossing edge and emits the full vertex
/// sequence `w, …, v_k, v'_k, …, w'` (ℓ+1 = 2k+2 vertices).
pub fn extract_path(f: &FrontierPair, crossing: (u32, u32)) -> Vec<u32> {
    let k = f.depth();
    let mut fwd_chain = Vec::with_capacity(k as usize + 1);
    let mut x = crossing.0;
    for z in (0..=k).rev() {
        fwd_chain.push(x);
        x = f.fwd.parent_of(z, x);
    }
    fwd_chain.reverse();
    let mut seq = fwd_chain;
    let mut y = crossing.1;
    let mut bwd_chain = Vec::with_capacity(k as usize + 1);
    for z in (0..=k).rev() {
        bwd_chain.push(y);
        y = f.bwd.parent_of(z, y);
    }
    seq.extend(bwd_chain);
    seq
}

/// A family of switchable paths: equal odd length ℓ = 2k+1, distinct
/// endpoints, and per-slice matchings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwitchablePathFamily {
    paths: Vec<Vec<u32>>,
    k: u32,
}

impl SwitchablePathFamily {
    /// Wraps raw vertex sequences; `verify_switchable` audits the invariants.
    pub fn new(paths: Vec<Vec<u32>>, k: u32) -> Self {
        SwitchablePathFamily { paths, k }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn ell(&self) -> u32 {
        2 * self.k + 1
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn paths(&self) -> &[Vec<u32>] {
        &self.paths
    }

    /// `(first, last)` vertex of each path.
    pub fn endpoints(&self) -> Vec<(u32, u32)> {
        self.paths.iter().map(|p| (p[0], *p.last().unwrap())).collect()
    }

    /// The z-th slice matching (1 ≤ z ≤ ℓ): every path's z-th and (ℓ+1−z)-th
    /// edges; for z = k+1 the two coincide in the single middle edge. By
    /// construction the slice for z and for ℓ+1−z are the same matching.
    pub fn slice_matching(&self, z: u32) -> Matching {
        let ell = self.ell() as usize;
        let z = z as usize;
        assert!((1..=ell).contains(&z), "slice index out of range");
        let lo = z.min(ell + 1 - z);
        let mut edges = Vec::with_capacity(2 * self.paths.len());
        for path in &self.paths {
            edges.push((path[lo - 1], path[lo]));
            if lo < ell + 1 - lo {
                edges.push((path[ell - lo], path[ell + 1 - lo]));
            }
        }
        Matching::new(edges)
    }
}

/// One failed family invariant found by [`verify_switchable`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilyViolation {
    /// Path `path` has `vertices` vertices instead of 2k+2.
    WrongLength { path: usize, vertices: usize },
    /// Vertex appears as an endpoint of two paths.
    EndpointClash { v: u32 },
    /// Consecutive vertices of `path` at `pos` are not adjacent in the graph.
    NonAdjacent { path: usize, pos: usize, u: u32, v: u32 },
    /// Slice `z` touches vertex `v` twice.
    SliceOverlap { z: u32, v: u32 },
}

impl std::fmt::Display for FamilyViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FamilyViolation::WrongLength { path, vertices } => {
                write!(f, "path {path} has {vertices} vertices")
            }
            FamilyViolation::EndpointClash { v } => {
                write!(f, "vertex {v} is an endpoint of two paths")
            }
            FamilyViolation::NonAdjacent { path, pos, u, v } => {
                write!(f, "path {path} position {pos}: {u}-{v} is not an edge")
            }
            FamilyViolation::SliceOverlap { z, v } => {
                write!(f, "slice {z} uses vertex {v} twice")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyReport {
    pub violations: Vec<FamilyViolation>,
}

impl FamilyReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn describe(&self) -> String {
        self.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
    }
}

/// Audits every family invariant exactly: uniform length 2k+2 vertices,
/// pairwise-distinct endpoints, consecutive adjacency, and per-slice
/// disjointness (slices 1..=k+1; the rest mirror them).
pub fn verify_switchable(g: &Graph, fam: &SwitchablePathFamily) -> FamilyReport {
    let mut violations = Vec::new();
    let expect = fam.ell() as usize + 1;
    let mut lengths_ok = true;
    for (i, path) in fam.paths().iter().enumerate() {
        if path.len() != expect {
            violations.push(FamilyViolation::WrongLength { path: i, vertices: path.len() });
            lengths_ok = false;
        }
    }
    let mut seen = vec![false; g.n()];
    for path in fam.paths() {
        if path.is_empty() {
            continue;
        }
        for v in [path[0], *path.last().unwrap()] {
            let vi = v as usize;
            if vi < seen.len() {
                if seen[vi] {
                    violations.push(FamilyViolation::EndpointClash { v });
                }
                seen[vi] = true;
            }
        }
    }
    for (i, path) in fam.paths().iter().enumerate() {
        for (pos, pair) in path.windows(2).enumerate() {
            let (u, v) = (pair[0], pair[1]);
            if (u as usize) >= g.n() || (v as usize) >= g.n() || !g.has_edge(u, v) {
                violations.push(FamilyViolation::NonAdjacent { path: i, pos, u, v });
            }
        }
    }
    if lengths_ok && !fam.is_empty() {
        let mut touched = vec![0u32; g.n()];
        let mut stamp = 0u32;
        for z in 1..=fam.k() + 1 {
            stamp += 1;
            for &(u, v) in fam.slice_matching(z).edges() {
                for x in [u, v] {
                    let xi = x as usize;
                    if touched[xi] == stamp {
                        violations.push(FamilyViolation::SliceOverlap { z, v: x });
                    }
                    touched[xi] = stamp;
                }
            }
        }
    }
    FamilyReport { violations }
}

/// Converts a verified family into its palindromic schedule: slices
/// 1..k, the middle matching, then slices k..1 again — 2k+1 rounds. The
/// resulting schedule swaps the pebbles at each path's endpoints and fixes
/// every other pebble. An empty family yields an empty schedule.
pub fn family_schedule(g: &Graph, fam: &SwitchablePathFamily) -> Result<Schedule, FamilyError> {
    if fam.is_empty() {
        return Ok(Schedule::empty());
    }
    let report = verify_switchable(g, fam);
    if !report.ok() {
        return Err(FamilyError::InvalidFamily { reason: report.describe() });
    }
    let rounds = (1..=fam.ell()).map(|z| fam.slice_matching(z)).collect();
    Ok(Schedule::from_rounds(rounds))
}

/// Builds one switchable family for a batch of same-side pairs.
///
/// Pairs are attempted in order; each one grows fresh frontiers against the
/// current layer state, joins them, and commits exactly its own 2 edges per
/// layer (all other tentative edges are released). A pair whose attempts all
/// fail is deferred, not fatal — the caller re-batches the returned deferrals.
/// `BatchFailed` is returned only when not a single pair succeeded.
pub fn build_family(
    g: &Graph,
    p: &Partition,
    pairs: &[(u32, u32)],
    params: &BuilderParams,
    seed: u64,
) -> Result<(SwitchablePathFamily, Vec<(u32, u32)>), FamilyError> {
    params.validate()?;
    if pairs.is_empty() {
        return Ok((SwitchablePathFamily::new(Vec::new(), params.k), Vec::new()));
    }
    if pairs.len() > params.frontier_target {
        return Err(FamilyError::BadBatch {
            why: format!("{} pairs exceed the batch limit {}", pairs.len(), params.frontier_target),
        });
    }
    let mut seen = vec![false; g.n()];
    let start_side = p.side_of(pairs[0].0);
    for &(a, b) in pairs {
        for v in [a, b] {
            if p.side_of(v) != start_side {
                return Err(FamilyError::BadBatch {
                    why: format!("vertex {v} is not on side {start_side}"),
                });
            }
            if seen[v as usize] {
                return Err(FamilyError::BadBatch { why: format!("endpoint {v} repeats") });
            }
            seen[v as usize] = true;
        }
    }

    let layers = plan_layers(g, p, start_side, params);
    let mut state = LayerState::new(g.n(), params.k, params.capacity);
    let mut built: Vec<Vec<u32>> = Vec::new();
    let mut deferred: Vec<(u32, u32)> = Vec::new();
    for (i, &(a, b)) in pairs.iter().enumerate() {
        let mut done = false;
        for attempt in 0..params.retries.max(1) {
            let sub = crate::seeds::derive_seed(
                seed,
                "family-path",
                (i as u64) * u64::from(params.retries.max(1)) + u64::from(attempt),
            );
            let Ok(fp) = grow_frontiers(g, p, &layers, &state, a, b, params, sub) else {
                continue;
            };
            let Ok(crossing) = connect_frontiers(g, &fp) else {
                continue;
            };
            let seq = extract_path(&fp, crossing);
            if state.commit(&seq).is_ok() {
                built.push(seq);
                done = true;
                break;
            }
        }
        if !done {
            deferred.push((a, b));
        }
    }
    if built.is_empty() {
        return Err(FamilyError::BatchFailed { residual: pairs.to_vec() });
    }
    Ok((SwitchablePathFamily::new(built, params.k), deferred))
}

/// How [`nonblocking_hypothesis_check`] explores subsets of the A side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonblockingMode {
    /// Every nonempty subset of size ≤ 2a; requires |A| ≤ 20.
    Exhaustive,
    /// `samples` random subsets per size in 1..=2a.
    Sampled { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonblockingReport {
    pub ok: bool,
    pub subsets_checked: u64,
    /// A subset X of A with fewer than 2·dd·|X| neighbors in B, if found.
    pub witness: Option<Vec<u32>>,
}

/// Checks the expansion hypothesis behind frontier growth: every nonempty
/// X ⊆ A with |X| ≤ 2a must see at least 2·dd·|X| distinct neighbors in B.
pub fn nonblocking_hypothesis_check(
    g: &Graph,
    a_side: &[u32],
    b_side: &[u32],
    dd: u32,
    a: usize,
    mode: NonblockingMode,
) -> Result<NonblockingReport, FamilyError> {
    let mut in_b = vec![false; g.n()];
    for &v in b_side {
        in_b[v as usize] = true;
    }
    let max_size = (2 * a).min(a_side.len());
    let mut checked = 0u64;
    let mut mark = vec![0u32; g.n()];
    let mut stamp = 0u32;
    let fails = |x: &[u32], stamp: &mut u32, mark: &mut [u32]| -> bool {
        *stamp += 1;
        let mut nbrs = 0u64;
        for &v in x {
            for &w in g.neighbors(v) {
                if in_b[w as usize] && mark[w as usize] != *stamp {
                    mark[w as usize] = *stamp;
                    nbrs += 1;
                }
            }
        }
        nbrs < 2 * u64::from(dd) * x.len() as u64
    };
    match mode {
        NonblockingMode::Exhaustive => {
            if a_side.len() > 20 {
                return Err(FamilyError::BadParams {
                    why: format!("exhaustive mode limited to 20 vertices, got {}", a_side.len()),
                });
            }
            let m = a_side.len();
            for bits in 1u32..(1u32 << m) {
                let size = bits.count_ones() as usize;
                if size > max_size {
                    continue;
                }
                let x: Vec<u32> =
                    (0..m).filter(|&i| bits >> i & 1 == 1).map(|i| a_side[i]).collect();
                checked += 1;
                if fails(&x, &mut stamp, &mut mark) {
                    return Ok(NonblockingReport {
                        ok: false,
                        subsets_checked: checked,
                        witness: Some(x),
                    });
                }
            }
        }
        NonblockingMode::Sampled { samples, seed } => {
            let mut rng = rng_for(seed, "nonblocking-sample", 0);
            for size in 1..=max_size {
                for _ in 0..samples {
                    let x: Vec<u32> =
                        a_side.choose_multiple(&mut rng, size).copied().collect();
                    checked += 1;
                    if fails(&x, &mut stamp, &mut mark) {
                        return Ok(NonblockingReport {
                            ok: false,
                            subsets_checked: checked,
                            witness: Some(x),
                        });
                    }
                }
            }
        }
    }
    Ok(NonblockingReport { ok: true, subsets_checked: checked, witness: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_complete, gen_cycle, gen_random_regular, Graph};
    use crate::partition::{find_partition, Partition};
    use crate::perm::Permutation;
    use crate::sim::{run_schedule, PebbleConfig};

    fn manual_params(growth: u32, k: u32, target: usize, capacity: usize) -> BuilderParams {
        BuilderParams {
            epsilon: target as f64 / 64.0,
            growth,
            k,
            frontier_target: target,
            capacity,
            retries: 3,
        }
    }

    #[test]
    fn layer_plan_alternates() {
        let g = gen_complete(4).unwrap();
        let p = Partition::from_sides(vec![1, 1, 2, 2]).unwrap();
        let prm = manual_params(2, 3, 4, 8);
        let plans = plan_layers(&g, &p, 1, &prm);
        let a: Vec<u8> = plans.iter().map(|l| l.a_side).collect();
        let b: Vec<u8> = plans.iter().map(|l| l.b_side).collect();
        assert_eq!(a, vec![1, 2, 1]);
        assert_eq!(b, vec![2, 1, 2]);
        let plans = plan_layers(&g, &p, 2, &manual_params(2, 1, 4, 8));
        assert_eq!(plans, vec![LayerPlan { a_side: 2, b_side: 1 }]);
    }

    #[test]
    fn params_shapes() {
        let lam = 2.0 * (15.0f64).sqrt();
        let d = BuilderParams::defaults(256, 16, lam);
        assert!((d.epsilon - 1.0 / 72.0).abs() < 1e-12);
        assert_eq!(d.growth, 2);
        assert_eq!(d.frontier_target, 3);
        assert_eq!(d.k, 2);
        assert_eq!(d.capacity, 10);
        let a = BuilderParams::adaptive(256, 16, lam);
        assert!((a.epsilon - 0.125).abs() < 1e-12);
        assert_eq!(a.growth, 2);
        assert_eq!(a.frontier_target, 32);
        assert_eq!(a.k, 5);
        assert_eq!(a.capacity, 64);
        assert_eq!(a.ell(), 11);
        assert!(a.validate().is_ok());
        // Level targets follow s_z = min(target, g^z).
        let prm = manual_params(2, 4, 5, 10);
        let s: Vec<usize> = (0..=4).map(|z| prm.level_target(z)).collect();
        assert_eq!(s, vec![1, 2, 4, 5, 5]);
    }

    #[test]
    fn adaptive_handles_degenerate_lambda() {
        // λ̂ = 0 falls back to separation d, so ε·d = 2 and growth sits at
        // its floor; a real separation estimate widens ε and lifts growth.
        let a = BuilderParams::adaptive(64, 8, 0.0);
        assert!(a.validate().is_ok());
        assert_eq!(a.epsilon, 0.125);
        assert_eq!(a.growth, 2);
        let b = BuilderParams::adaptive(64, 32, 0.0);
        assert_eq!(b.growth, 2);
        let c = BuilderParams::adaptive(256, 32, 2.0);
        assert_eq!(c.epsilon, 0.125);
        assert_eq!(c.growth, 4);
        assert!(c.validate().is_ok());
    }

    /// Complete-graph single pair: one path of 3 edges whose schedule swaps
    /// exactly the pair's pebbles.
    #[test]
    fn single_pair_on_k16() {
        let g = gen_complete(16).unwrap();
        let pi = {
            let mut m: Vec<u32> = (0..16).collect();
            m.swap(0, 1);
            Permutation::from_map(m).unwrap()
        };
        let p = find_partition(&g, &pi, 1.0 / 3.0, 1600, 3).unwrap();
        let params = BuilderParams::adaptive(16, 15, 1.0);
        assert_eq!(params.k, 1);
        let (fam, deferred) = build_family(&g, &p, &[(0, 1)], &params, 9).unwrap();
        assert!(deferred.is_empty());
        assert_eq!(fam.len(), 1);
        assert_eq!(fam.paths()[0].len(), 4);
        assert!(verify_switchable(&g, &fam).ok());
        let s = family_schedule(&g, &fam).unwrap();
        assert_eq!(s.len(), 3);
        let end = run_schedule(&g, &PebbleConfig::identity(16), &s).unwrap();
        for v in 0..16u32 {
            let expect = match v {
                0 => 1,
                1 => 0,
                other => other,
            };
            assert_eq!(end.pebble_at(v), expect);
        }
    }

    /// The central exactness property: from an arbitrary start configuration
    /// the family schedule swaps each path's endpoint pebbles and fixes all
    /// others.
    #[test]
    fn family_schedule_swaps_endpoints_only() {
        let g = gen_random_regular(64, 8, 21).unwrap();
        let mut rng = crate::seeds::rng_for(77, "fam-test", 0);
        let pi = Permutation::random_involution(64, 0.6, &mut rng);
        let p = find_partition(&g, &pi, 0.25, 6400, 5).unwrap();
        let params = BuilderParams::adaptive(64, 8, 2.0 * 7.0f64.sqrt());
        let pairs: Vec<(u32, u32)> = (0..64u32)
            .filter(|&v| v < pi.apply(v) && p.side_of(v) == 1)
            .map(|v| (v, pi.apply(v)))
            .take(params.frontier_target)
            .collect();
        assert!(!pairs.is_empty(), "involution must pair something on side 1");
        let (fam, _deferred) = build_family(&g, &p, &pairs, &params, 123).unwrap();
        assert!(verify_switchable(&g, &fam).ok());
        let s = family_schedule(&g, &fam).unwrap();
        assert_eq!(s.len() as u32, 2 * params.k + 1);

        let start = PebbleConfig::from_permutation(&Permutation::random(
            64,
            &mut crate::seeds::rng_for(78, "fam-start", 0),
        ));
        let end = run_schedule(&g, &start, &s).unwrap();
        let mut expected: Vec<u32> = start.as_slice().to_vec();
        for &(a, b) in &fam.endpoints() {
            expected.swap(a as usize, b as usize);
        }
        assert_eq!(end.as_slice(), &expected[..]);
    }

    #[test]
    fn schedule_applied_twice_is_identity() {
        let g = gen_random_regular(48, 8, 4).unwrap();
        let pi = Permutation::identity(48);
        let p = find_partition(&g, &pi, 0.25, 4800, 2).unwrap();
        let params = BuilderParams::adaptive(48, 8, 2.0 * 7.0f64.sqrt());
        let pairs: Vec<(u32, u32)> = {
            let side1 = p.vertices_on(1);
            side1.chunks(2).filter(|c| c.len() == 2).map(|c| (c[0], c[1])).take(2).collect()
        };
        let (fam, _) = build_family(&g, &p, &pairs, &params, 3).unwrap();
        let s = family_schedule(&g, &fam).unwrap();
        let mut doubled = s.clone();
        doubled.extend(s);
        let end = run_schedule(&g, &PebbleConfig::identity(48), &doubled).unwrap();
        assert_eq!(end, PebbleConfig::identity(48));
    }

    #[test]
    fn empty_family_empty_schedule() {
        let g = gen_complete(8).unwrap();
        let fam = SwitchablePathFamily::new(Vec::new(), 2);
        assert!(verify_switchable(&g, &fam).ok());
        assert!(family_schedule(&g, &fam).unwrap().is_empty());
    }

    #[test]
    fn layer_state_tracks_commits() {
        let mut st = LayerState::new(10, 2, 4);
        // Path 0-5-8-9-6-1: layer 1 B-vertices {5, 6}, layer 2 {8, 9}.
        st.commit(&[0, 5, 8, 9, 6, 1]).unwrap();
        assert!(st.is_used(1, 5) && st.is_used(1, 6));
        assert!(st.is_used(2, 8) && st.is_used(2, 9));
        assert!(!st.is_used(1, 8));
        assert_eq!(st.edges_in_layer(1), 2);
        // A second path colliding in layer 1 is rejected whole.
        let err = st.commit(&[2, 5, 7, 4, 3, 1]).unwrap_err();
        assert!(matches!(err, FamilyError::InvalidFamily { .. }));
        assert!(!st.is_used(2, 7), "rejected commit must not mark anything");
        // A disjoint path fills the layers to capacity 4...
        st.commit(&[2, 7, 4, 3, 0, 1]).unwrap();
        assert_eq!(st.edges_in_layer(1), 4);
        // ...after which any further commit is refused.
        assert_eq!(
            st.commit(&[0, 1, 2, 5, 6, 9]).unwrap_err(),
            FamilyError::CapacityExceeded { layer: 1 }
        );
    }

    #[test]
    fn verify_flags_violations() {
        let g = gen_cycle(6).unwrap();
        // k=1 family wants 4-vertex paths; this one has 3 vertices.
        let fam = SwitchablePathFamily::new(vec![vec![0, 1, 2]], 1);
        let rep = verify_switchable(&g, &fam);
        assert!(rep
            .violations
            .contains(&FamilyViolation::WrongLength { path: 0, vertices: 3 }));

        // Non-adjacent consecutive vertices (0 and 2 in C_6).
        let fam = SwitchablePathFamily::new(vec![vec![0, 2, 3, 4]], 1);
        let rep = verify_switchable(&g, &fam);
        assert!(rep
            .violations
            .iter()
            .any(|v| matches!(v, FamilyViolation::NonAdjacent { u: 0, v: 2, .. })));

        // Two paths sharing a slice-1 vertex: both use 1 as second vertex.
        let fam = SwitchablePathFamily::new(vec![vec![0, 1, 2, 3], vec![2, 1, 0, 5]], 1);
        let rep = verify_switchable(&g, &fam);
        assert!(rep.violations.iter().any(|v| matches!(v, FamilyViolation::SliceOverlap { .. })));

        // Shared endpoint.
        let fam = SwitchablePathFamily::new(vec![vec![0, 1, 2, 3], vec![3, 4, 5, 0]], 1);
        let rep = verify_switchable(&g, &fam);
        assert!(rep.violations.contains(&FamilyViolation::EndpointClash { v: 0 }));
        assert!(rep.violations.contains(&FamilyViolation::EndpointClash { v: 3 }));
    }

    #[test]
    fn invalid_family_rejected_by_schedule() {
        let g = gen_cycle(6).unwrap();
        let fam = SwitchablePathFamily::new(vec![vec![0, 2, 3, 4]], 1);
        assert!(matches!(
            family_schedule(&g, &fam),
            Err(FamilyError::InvalidFamily { .. })
        ));
    }

    #[test]
    fn no_crossing_edge_between_far_frontiers() {
        let g = gen_cycle(8).unwrap();
        // Hand-built depth-1 frontiers at distance > 1: {1} and {5}.
        let fp = FrontierPair::from_levels(
            vec![vec![(0, 0)], vec![(1, 0)]],
            vec![vec![(4, 4)], vec![(5, 4)]],
        );
        assert_eq!(connect_frontiers(&g, &fp).unwrap_err(), FamilyError::NoCrossingEdge);
        // Adjacent frontiers connect.
        let fp = FrontierPair::from_levels(
            vec![vec![(0, 0)], vec![(1, 0)]],
            vec![vec![(3, 3)], vec![(2, 3)]],
        );
        assert_eq!(connect_frontiers(&g, &fp).unwrap(), (1, 2));
    }

    #[test]
    fn extract_walks_parent_chains() {
        let fp = FrontierPair::from_levels(
            vec![vec![(0, 0)], vec![(4, 0)], vec![(7, 4)]],
            vec![vec![(1, 1)], vec![(5, 1)], vec![(8, 5)]],
        );
        assert_eq!(extract_path(&fp, (7, 8)), vec![0, 4, 7, 8, 5, 1]);
    }

    #[test]
    fn thin_frontier_connects_but_exhausted_layer_stalls() {
        // C_4 with sides {0,1} vs {2,3}: vertex 0 has a single side-2
        // neighbor, so the level target of 2 is unreachable — yet the lone
        // candidate still yields the valid path 0-3-2-1.
        let g = gen_cycle(4).unwrap();
        let p = Partition::from_sides(vec![1, 1, 2, 2]).unwrap();
        let params = manual_params(2, 1, 2, 4);
        let (fam, deferred) = build_family(&g, &p, &[(0, 1)], &params, 5).unwrap();
        assert!(deferred.is_empty());
        assert_eq!(fam.paths(), &[vec![0, 3, 2, 1]]);
        assert!(verify_switchable(&g, &fam).ok());
        // Once that path occupies layer 1, vertex 0 has no admissible
        // candidate left and growth genuinely stalls.
        let layers = plan_layers(&g, &p, 1, &params);
        let mut st = LayerState::new(4, 1, 4);
        st.commit(&[0, 3, 2, 1]).unwrap();
        let err = grow_frontiers(&g, &p, &layers, &st, 0, 1, &params, 5).unwrap_err();
        assert!(matches!(err, FamilyError::FrontierStuck { layer: 1, achieved: 0 }));
    }

    #[test]
    fn batch_validation() {
        let g = gen_complete(8).unwrap();
        let p = Partition::from_sides(vec![1, 1, 1, 1, 2, 2, 2, 2]).unwrap();
        let params = manual_params(4, 1, 2, 4);
        // Pair endpoints on different sides.
        assert!(matches!(
            build_family(&g, &p, &[(0, 4)], &params, 1),
            Err(FamilyError::BadBatch { .. })
        ));
        // Repeated endpoint.
        assert!(matches!(
            build_family(&g, &p, &[(0, 1), (1, 2)], &params, 1),
            Err(FamilyError::BadBatch { .. })
        ));
        // Batch larger than the limit.
        assert!(matches!(
            build_family(&g, &p, &[(0, 1), (2, 3), (0, 2)], &params, 1),
            Err(FamilyError::BadBatch { .. })
        ));
    }

    #[test]
    fn nonblocking_on_k8_and_bottleneck() {
        let g = gen_complete(8).unwrap();
        let a: Vec<u32> = vec![0, 1, 2, 3];
        let b: Vec<u32> = vec![4, 5, 6, 7];
        let rep =
            nonblocking_hypothesis_check(&g, &a, &b, 1, 1, NonblockingMode::Exhaustive).unwrap();
        assert!(rep.ok);
        assert_eq!(rep.subsets_checked, 4 + 6);

        // Bottleneck: vertices 0 and 1 both funnel through 2 alone.
        let narrow = Graph::from_edge_list_any_degree(4, &[(0, 2), (1, 2), (2, 3)]).unwrap();
        let rep = nonblocking_hypothesis_check(
            &narrow,
            &[0, 1],
            &[2, 3],
            1,
            1,
            NonblockingMode::Exhaustive,
        )
        .unwrap();
        assert!(!rep.ok);
        assert_eq!(rep.witness, Some(vec![0]));

        // a = 0 is vacuous.
        let rep =
            nonblocking_hypothesis_check(&g, &a, &b, 1, 0, NonblockingMode::Exhaustive).unwrap();
        assert!(rep.ok);
        assert_eq!(rep.subsets_checked, 0);

        // Sampled mode agrees on the bottleneck fixture.
        let rep = nonblocking_hypothesis_check(
            &narrow,
            &[0, 1],
            &[2, 3],
            1,
            1,
            NonblockingMode::Sampled { samples: 16, seed: 2 },
        )
        .unwrap();
        assert!(!rep.ok);
    }

    #[test]
    fn frontier_growth_respects_used_layers() {
        let g = gen_complete(8).unwrap();
        let p = Partition::from_sides(vec![1, 1, 1, 1, 2, 2, 2, 2]).unwrap();
        // Target 1 leaves exactly two fresh side-2 vertices after one commit,
        // which is what the second pair's two frontiers need.
        let params = manual_params(2, 1, 1, 8);
        let layers = plan_layers(&g, &p, 1, &params);
        let mut st = LayerState::new(8, 1, 8);
        let fp = grow_frontiers(&g, &p, &layers, &st, 0, 1, &params, 7).unwrap();
        assert_eq!(fp.forward().level(1).len(), 1);
        assert_eq!(fp.backward().level(1).len(), 1);
        let fwd: Vec<u32> = fp.forward().level(1).iter().map(|&(v, _)| v).collect();
        let bwd: Vec<u32> = fp.backward().level(1).iter().map(|&(v, _)| v).collect();
        assert!(fwd.iter().all(|v| !bwd.contains(v)), "frontiers must stay disjoint");

        let crossing = connect_frontiers(&g, &fp).unwrap();
        let seq = extract_path(&fp, crossing);
        st.commit(&seq).unwrap();
        // A second pair's frontiers must avoid the committed layer-1 vertices.
        let fp2 = grow_frontiers(&g, &p, &layers, &st, 2, 3, &params, 8).unwrap();
        for &(v, _) in fp2.forward().level(1).iter().chain(fp2.backward().level(1)) {
            assert!(!st.is_used(1, v), "vertex {v} was already committed in layer 1");
        }
    }
}
