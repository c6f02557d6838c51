//! End-to-end routing: factor the permutation into two involutions, build a
//! fresh partition for each, batch each side's swap pairs, construct a
//! switchable path family per batch, and concatenate the palindromic family
//! schedules. The assembled schedule is verified by simulation before it is
//! returned — callers never receive an unchecked artifact.

use crate::family::{build_family, family_schedule, BuilderParams, FamilyError};
use crate::graph::Graph;
use crate::partition::{find_partition, Partition, PartitionError};
use crate::perm::Permutation;
use crate::seeds::derive_seed;
use crate::sim::{verify_achieves, Matching, Schedule};
use crate::spectral::{default_max_iter, estimate_lambda, DEFAULT_TOL};

/// Resampling budget per partition attempt, as a multiple of n.
const PARTITION_BUDGET_FACTOR: u64 = 100;
/// Fresh-seed attempts per partition and per family batch.
const SEED_ATTEMPTS: u64 = 3;
/// Below this order the per-layer capacity floor n/24 rounds to zero and the
/// layered machinery has no room to operate; instances that dead-end there
/// fall back to a plain spanning-tree routine instead of erroring out.
const TREE_FALLBACK_MAX_N: usize = 24;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RouteError {
    #[error("input mismatch: {why}")]
    BadInput { why: String },
    #[error("no valid partition: {source}")]
    PartitionFailed {
        #[source]
        source: PartitionError,
    },
    #[error("routing failed with {} unrouted pairs", residual.len())]
    RoutingFailed { residual: Vec<(u32, u32)> },
    #[error("schedule failed final verification")]
    VerificationFailed,
    #[error("internal invariant broke: {why}")]
    Internal { why: String },
}

impl From<FamilyError> for RouteError {
    fn from(e: FamilyError) -> Self {
        RouteError::Internal { why: e.to_string() }
    }
}

/// Outcome of a successful routing run. `verified` is always true on return;
/// it is carried explicitly so serialized reports are self-describing.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteReport {
    pub schedule: Schedule,
    pub rounds: usize,
    /// Families (plus fallback rounds) built per involution, in order.
    pub batches: Vec<usize>,
    /// Rounds contributed by each involution, in order.
    pub rounds_per_involution: Vec<usize>,
    pub k: u32,
    pub ell: u32,
    pub epsilon: f64,
    pub growth: u32,
    pub theoretical_bound: Option<u64>,
    pub verified: bool,
}

impl RouteReport {
    /// Structured text form: header fields then the embedded schedule.
    pub fn to_text(&self) -> String {
        let bound = match self.theoretical_bound {
            Some(b) => b.to_string(),
            None => "none".to_string(),
        };
        let batches: Vec<String> = self.batches.iter().map(|b| b.to_string()).collect();
        format!(
            "rounds: {}\nverified: {}\nk: {}\nell: {}\nepsilon: {:.6}\ngrowth: {}\nbatches: {}\ntheoretical_bound: {}\nschedule:\n{}",
            self.rounds,
            self.verified,
            self.k,
            self.ell,
            self.epsilon,
            self.growth,
            batches.join(","),
            bound,
            self.schedule.to_text(),
        )
    }
}

/// A batch picked from the pending pairs of one side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchSelection {
    /// Designated endpoint (the smaller) of each chosen pair.
    pub w: Vec<u32>,
    pub chosen: Vec<(u32, u32)>,
    pub deferred: Vec<(u32, u32)>,
}

/// Greedily picks up to `limit` pairs in ascending order of smaller endpoint.
/// Every pair contributes one designated endpoint to `w`; since pairs are
/// disjoint, no chosen vertex's partner can also appear in `w`.
pub fn select_batch(pending: &[(u32, u32)], limit: usize) -> BatchSelection {
    let mut sorted: Vec<(u32, u32)> =
        pending.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    sorted.sort_unstable();
    let cut = limit.min(sorted.len());
    let deferred = sorted.split_off(cut);
    BatchSelection { w: sorted.iter().map(|&(a, _)| a).collect(), chosen: sorted, deferred }
}

/// Closed-form round bound in the narrow regime it is proved for: requires
/// λ < d/72 and ε = 1/72, and then equals 2·(2k+1)·2⌈1/ε⌉ with
/// k = max(1, ⌈log_{d/λ}(ε·n)⌉) — the factor 2 covering the two involutions.
/// Outside that regime the bound does not apply and `None` is returned.
pub fn theoretical_round_bound(n: usize, d: usize, lambda: f64, epsilon: f64) -> Option<u64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return None;
    }
    if lambda >= d as f64 / 72.0 {
        return None;
    }
    if (epsilon - 1.0 / 72.0).abs() > 1e-12 {
        return None;
    }
    let sep = d as f64 / lambda;
    let target = epsilon * n as f64;
    let k = if target <= 1.0 { 1 } else { (ceil_fuzzy(target.ln() / sep.ln())).max(1) };
    Some(2 * (2 * k + 1) * 2 * ceil_fuzzy(1.0 / epsilon))
}

/// Ceiling that forgives floating-point fuzz just below an integer.
fn ceil_fuzzy(x: f64) -> u64 {
    if (x - x.round()).abs() < 1e-9 {
        x.round() as u64
    } else {
        x.ceil() as u64
    }
}

/// Routes `pi` on `g`: returns a verified matching schedule realizing it.
///
/// The permutation factors as τ∘σ with both factors involutions; σ's rounds
/// are emitted first. Each involution gets its own partition (its pairs
/// differ), each side is batched with `select_batch`, and failed batches walk
/// a bounded retry ladder: fresh seeds, one extra layer, then splitting the
/// batch, bottoming out in a single-edge round for adjacent pairs. On graphs
/// too small for the layered machinery, dead ends divert to a spanning-tree
/// fallback so every connected instance still gets a valid schedule.
pub fn route(
    g: &Graph,
    pi: &Permutation,
    params: &BuilderParams,
    beta: f64,
    lambda_hat: Option<f64>,
    seed: u64,
) -> Result<RouteReport, RouteError> {
    params.validate()?;
    if pi.len() != g.n() {
        return Err(RouteError::BadInput {
            why: format!("permutation length {} vs graph order {}", pi.len(), g.n()),
        });
    }
    let (sigma, tau) = pi.decompose_into_involutions();
    let mut schedule = Schedule::empty();
    let mut batches = Vec::with_capacity(2);
    let mut rounds_per = Vec::with_capacity(2);
    let mut family_counter: u64 = 0;
    for (j, inv) in [sigma, tau].iter().enumerate() {
        let before = schedule.len();
        let mut nbatches = 0usize;
        let pairs: Vec<(u32, u32)> = (0..g.n() as u32)
            .filter(|&v| v < inv.apply(v))
            .map(|v| (v, inv.apply(v)))
            .collect();
        if pairs.is_empty() {
            batches.push(0);
            rounds_per.push(0);
            continue;
        }
        match partition_for(g, inv, beta, seed, j as u64) {
            Ok(p) => {
                for side in [1u8, 2u8] {
                    let pending: Vec<(u32, u32)> =
                        pairs.iter().copied().filter(|&(a, _)| p.side_of(a) == side).collect();
                    route_side(
                        g,
                        &p,
                        pending,
                        params,
                        seed,
                        &mut family_counter,
                        &mut schedule,
                        &mut nbatches,
                    )?;
                }
            }
            Err(e) => {
                // Degenerate regime (tiny or dense-threshold graphs): if every
                // pair is an edge, the pairs themselves form one matching;
                // otherwise small orders get the spanning-tree fallback.
                let peeled = (g.n() < TREE_FALLBACK_MAX_N)
                    .then(|| tree_peel_schedule(g, inv))
                    .flatten();
                if pairs.iter().all(|&(a, b)| g.has_edge(a, b)) {
                    schedule.push(Matching::new(pairs.clone()));
                    nbatches += 1;
                } else if let Some(rounds) = peeled {
                    schedule.extend(rounds);
                    nbatches += 1;
                } else {
                    return Err(RouteError::PartitionFailed { source: e });
                }
            }
        }
        batches.push(nbatches);
        rounds_per.push(schedule.len() - before);
    }
    let outcome = verify_achieves(g, pi, &schedule)
        .map_err(|e| RouteError::Internal { why: e.to_string() })?;
    if !outcome.ok {
        return Err(RouteError::VerificationFailed);
    }
    Ok(RouteReport {
        rounds: schedule.len(),
        schedule,
        batches,
        rounds_per_involution: rounds_per,
        k: params.k,
        ell: params.ell(),
        epsilon: params.epsilon,
        growth: params.growth,
        theoretical_bound: lambda_hat
            .and_then(|lam| theoretical_round_bound(g.n(), g.degree(), lam, params.epsilon)),
        verified: true,
    })
}

/// Measures λ̂, derives scale-aware parameters, and routes with them.
pub fn route_auto(g: &Graph, pi: &Permutation, seed: u64) -> Result<RouteReport, RouteError> {
    let profile =
        estimate_lambda(g, DEFAULT_TOL, default_max_iter(g.n()), derive_seed(seed, "lambda", 0));
    let params = BuilderParams::adaptive(g.n(), g.degree(), profile.lambda_hat);
    route(g, pi, &params, 0.25, Some(profile.lambda_hat), seed)
}

/// Finds a pair-respecting partition, retrying with a halved balance
/// fraction (down to 1/d, i.e. a one-neighbor-per-side floor) when the
/// requested one resists resampling — sparse degrees often admit no balanced
/// split yet route fine with the weaker guarantee.
fn partition_for(
    g: &Graph,
    inv: &Permutation,
    beta: f64,
    seed: u64,
    inv_idx: u64,
) -> Result<Partition, PartitionError> {
    let budget = PARTITION_BUDGET_FACTOR * g.n() as u64;
    let floor = 1.0 / g.degree().max(2) as f64;
    let mut last = None;
    let mut b = beta;
    for fall in 0..3u64 {
        for t in 0..SEED_ATTEMPTS {
            let s = derive_seed(seed, "partition", inv_idx * 64 + fall * 8 + t);
            match find_partition(g, inv, b, budget, s) {
                Ok(p) => return Ok(p),
                Err(e) => last = Some(e),
            }
        }
        if b <= floor {
            break;
        }
        b = (b / 2.0).max(floor);
    }
    Err(last.expect("at least one partition attempt ran"))
}

/// Routes all pending pairs of one side, re-batching deferrals until done.
/// Every loop iteration routes at least one pair (or fails), so the guard is
/// pure insurance.
#[allow(clippy::too_many_arguments)]
fn route_side(
    g: &Graph,
    p: &Partition,
    mut pending: Vec<(u32, u32)>,
    params: &BuilderParams,
    seed: u64,
    counter: &mut u64,
    schedule: &mut Schedule,
    nbatches: &mut usize,
) -> Result<(), RouteError> {
    let mut guard = 4 * pending.len() + 16;
    while !pending.is_empty() {
        guard -= 1;
        if guard == 0 {
            return Err(RouteError::RoutingFailed { residual: pending });
        }
        let sel = select_batch(&pending, params.frontier_target);
        let mut deferred =
            match ladder(g, p, &sel.chosen, params, seed, counter, schedule, nbatches) {
                Ok(d) => d,
                Err(RouteError::RoutingFailed { residual }) if g.n() < TREE_FALLBACK_MAX_N => {
                    let mut map: Vec<u32> = (0..g.n() as u32).collect();
                    for &(a, b) in &residual {
                        map[a as usize] = b;
                        map[b as usize] = a;
                    }
                    let leftover = Permutation::from_map(map).expect("pairs are disjoint");
                    match tree_peel_schedule(g, &leftover) {
                        Some(rounds) => {
                            schedule.extend(rounds);
                            *nbatches += 1;
                            Vec::new()
                        }
                        None => return Err(RouteError::RoutingFailed { residual }),
                    }
                }
                Err(e) => return Err(e),
            };
        deferred.extend(sel.deferred);
        pending = deferred;
    }
    Ok(())
}

/// Retry ladder for one batch: fresh seeds, then one extra layer, then a
/// recursive split, bottoming out at a single-edge round for adjacent pairs.
/// Returns the pairs deferred to later batches; errs only when a single pair
/// is exhausted.
#[allow(clippy::too_many_arguments)]
fn ladder(
    g: &Graph,
    p: &Partition,
    pairs: &[(u32, u32)],
    params: &BuilderParams,
    seed: u64,
    counter: &mut u64,
    schedule: &mut Schedule,
    nbatches: &mut usize,
) -> Result<Vec<(u32, u32)>, RouteError> {
    let try_params = |prm: &BuilderParams,
                          counter: &mut u64,
                          schedule: &mut Schedule,
                          nbatches: &mut usize|
     -> Result<Option<Vec<(u32, u32)>>, RouteError> {
        let s = derive_seed(seed, "family", *counter);
        *counter += 1;
        match build_family(g, p, pairs, prm, s) {
            Ok((fam, deferred)) => {
                let rounds = family_schedule(g, &fam)?;
                schedule.extend(rounds);
                *nbatches += 1;
                Ok(Some(deferred))
            }
            Err(FamilyError::BatchFailed { .. }) => Ok(None),
            Err(other) => Err(other.into()),
        }
    };
    for _ in 0..SEED_ATTEMPTS {
        if let Some(deferred) = try_params(params, counter, schedule, nbatches)? {
            return Ok(deferred);
        }
    }
    let bumped = BuilderParams { k: params.k + 1, ..*params };
    if let Some(deferred) = try_params(&bumped, counter, schedule, nbatches)? {
        return Ok(deferred);
    }
    if pairs.len() >= 2 {
        let mid = pairs.len() / 2;
        let mut deferred =
            ladder(g, p, &pairs[..mid], params, seed, counter, schedule, nbatches)?;
        deferred.extend(ladder(g, p, &pairs[mid..], params, seed, counter, schedule, nbatches)?);
        return Ok(deferred);
    }
    let (a, b) = pairs[0];
    if let Some(rounds) = path_palindrome_schedule(g, a, b) {
        schedule.extend(rounds);
        *nbatches += 1;
        return Ok(Vec::new());
    }
    Err(RouteError::RoutingFailed { residual: pairs.to_vec() })
}

/// Swaps the pebbles at `a` and `b` along a shortest path using one edge per
/// round: the palindrome e_1 … e_L … e_1 conjugates the middle transposition
/// into (a b), restoring every interior vertex. Costs 2L−1 rounds; `None` if
/// the endpoints are disconnected.
fn path_palindrome_schedule(g: &Graph, a: u32, b: u32) -> Option<Schedule> {
    let n = g.n();
    let mut prev = vec![u32::MAX; n];
    let mut seen = vec![false; n];
    seen[a as usize] = true;
    let mut queue = std::collections::VecDeque::from([a]);
    while let Some(v) = queue.pop_front() {
        if v == b {
            break;
        }
        for &w in g.neighbors(v) {
            if !seen[w as usize] {
                seen[w as usize] = true;
                prev[w as usize] = v;
                queue.push_back(w);
            }
        }
    }
    if !seen[b as usize] {
        return None;
    }
    let mut path = vec![b];
    while *path.last().unwrap() != a {
        path.push(prev[*path.last().unwrap() as usize]);
    }
    path.reverse();
    let edges: Vec<(u32, u32)> = path.windows(2).map(|w| (w[0], w[1])).collect();
    let mut schedule = Schedule::empty();
    for i in (0..edges.len()).chain((0..edges.len().saturating_sub(1)).rev()) {
        schedule.push(Matching::new(vec![edges[i]]));
    }
    Some(schedule)
}

/// Schedules `target` by peeling a BFS spanning forest: vertices are
/// finalized deepest-first, walking each wanted pebble into its slot with
/// single-edge rounds. Deeper vertices are settled before shallower ones and
/// tree paths between live vertices never descend below them, so settled
/// pebbles are never disturbed. Costs up to n·diameter rounds, which is
/// acceptable only at the small orders where it is invoked. Returns `None`
/// when `target` moves a pebble across components, which no schedule can do.
fn tree_peel_schedule(g: &Graph, target: &Permutation) -> Option<Schedule> {
    let n = g.n();
    let mut parent = vec![u32::MAX; n];
    let mut depth = vec![usize::MAX; n];
    let mut comp = vec![u32::MAX; n];
    for root in 0..n as u32 {
        if depth[root as usize] != usize::MAX {
            continue;
        }
        depth[root as usize] = 0;
        comp[root as usize] = root;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &w in g.neighbors(v) {
                if depth[w as usize] == usize::MAX {
                    depth[w as usize] = depth[v as usize] + 1;
                    parent[w as usize] = v;
                    comp[w as usize] = root;
                    queue.push_back(w);
                }
            }
        }
    }
    if (0..n).any(|u| comp[u] != comp[target.apply(u as u32) as usize]) {
        return None;
    }
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(depth[v as usize]));
    let want = target.inverse();
    let mut at: Vec<u32> = (0..n as u32).collect();
    let mut pos: Vec<u32> = (0..n as u32).collect();
    let mut schedule = Schedule::empty();
    for &u in &order {
        let q = want.apply(u);
        if at[u as usize] == q {
            continue;
        }
        // Tree path from the pebble's current seat to u: climb both ends to
        // the common ancestor, then splice the two half-walks together.
        let x = pos[q as usize];
        let mut walk = vec![x];
        let mut back = vec![u];
        let (mut a, mut b) = (x, u);
        while a != b {
            if depth[a as usize] >= depth[b as usize] {
                a = parent[a as usize];
                walk.push(a);
            } else {
                b = parent[b as usize];
                back.push(b);
            }
        }
        back.pop();
        back.reverse();
        walk.extend(back);
        for win in walk.windows(2) {
            let (s, t) = (win[0], win[1]);
            schedule.push(Matching::new(vec![(s, t)]));
            at.swap(s as usize, t as usize);
            pos[at[s as usize] as usize] = s;
            pos[at[t as usize] as usize] = t;
        }
        debug_assert_eq!(at[u as usize], q);
    }
    Some(schedule)
}
