//! Simple connected regular graphs: construction, generators, distances, and
//! the edge-distribution (mixing) audit.
//!
//! Vertices are dense ids `0..n`. Edges are stored canonically as `(u, v)`
//! with `u < v`, sorted lexicographically; adjacency lists are sorted. The
//! text format is rejected bit-exactly on any deviation from that canonical
//! form, so a graph file has exactly one valid byte representation.

use rand::Rng;

use crate::seeds;

/// Errors from graph construction, generation, and parsing.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex {v} out of range for n={n}")]
    VertexOutOfRange { v: u32, n: usize },
    #[error("loop at vertex {v}")]
    Loop { v: u32 },
    #[error("duplicate edge {u}-{v}")]
    DuplicateEdge { u: u32, v: u32 },
    #[error("vertex {v} has degree {degree}, expected {expected}")]
    NotRegular { v: u32, degree: usize, expected: usize },
    #[error("graph is not connected")]
    Disconnected,
    #[error("no simple {d}-regular graph on {n} vertices (need n*d even and d < n)")]
    InfeasibleDegree { n: usize, d: usize },
    #[error("random regular generation gave up after {attempts} restarts")]
    RetriesExhausted { attempts: usize },
    #[error("{what} out of range: {why}")]
    ParameterOutOfRange { what: &'static str, why: &'static str },
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// An immutable simple connected graph with dense integer vertices.
///
/// Constructed via [`Graph::from_edge_list`] (enforces regularity) or the
/// generators. [`Graph::from_edge_list_any_degree`] relaxes regularity for
/// small oracle fixtures (paths, stars); the routing pipeline itself only
/// ever sees regular graphs.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    d: usize,
    regular: bool,
    adj: Vec<Vec<u32>>,
    edges: Vec<(u32, u32)>,
}

impl Graph {
    /// Builds and fully validates a `d`-regular graph (degree inferred).
    pub fn from_edge_list(n: usize, edges: &[(u32, u32)]) -> Result<Self, GraphError> {
        let g = Self::build_simple_connected(n, edges)?;
        let expected = g.adj.first().map_or(0, Vec::len);
        for (v, nbrs) in g.adj.iter().enumerate() {
            if nbrs.len() != expected {
                return Err(GraphError::NotRegular {
                    v: v as u32,
                    degree: nbrs.len(),
                    expected,
                });
            }
        }
        Ok(g)
    }

    /// Builds a simple connected graph without the regularity check.
    ///
    /// `degree()` then reports the maximum degree. Intended for exact-oracle
    /// fixtures only.
    pub fn from_edge_list_any_degree(n: usize, edges: &[(u32, u32)]) -> Result<Self, GraphError> {
        let mut g = Self::build_simple_connected(n, edges)?;
        g.regular = g.adj.iter().all(|a| a.len() == g.d);
        Ok(g)
    }

    fn build_simple_connected(n: usize, edges: &[(u32, u32)]) -> Result<Self, GraphError> {
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut canon: Vec<(u32, u32)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            for v in [a, b] {
                if v as usize >= n {
                    return Err(GraphError::VertexOutOfRange { v, n });
                }
            }
            if a == b {
                return Err(GraphError::Loop { v: a });
            }
            canon.push((a.min(b), a.max(b)));
        }
        canon.sort_unstable();
        for w in canon.windows(2) {
            if w[0] == w[1] {
                return Err(GraphError::DuplicateEdge { u: w[0].0, v: w[0].1 });
            }
        }
        for &(u, v) in &canon {
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for nbrs in &mut adj {
            nbrs.sort_unstable();
        }
        let d = adj.iter().map(Vec::len).max().unwrap_or(0);
        let g = Graph { n, d, regular: true, adj, edges: canon };
        if !g.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Regular degree; maximum degree for any-degree oracle fixtures.
    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn is_regular(&self) -> bool {
        self.regular
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.adj[v as usize]
    }

    /// Canonical edge list, `(u, v)` with `u < v`, lexicographically sorted.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.adj[u as usize].binary_search(&v).is_ok()
    }

    fn is_connected(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        let mut seen = vec![false; self.n];
        let mut queue = std::collections::VecDeque::from([0u32]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &w in self.neighbors(u) {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.n
    }

    /// BFS distances from `src` (`usize::MAX` is unreachable, which cannot
    /// happen on a validated graph).
    pub fn bfs_distances(&self, src: u32) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n];
        let mut queue = std::collections::VecDeque::from([src]);
        dist[src as usize] = 0;
        while let Some(u) = queue.pop_front() {
            for &w in self.neighbors(u) {
                if dist[w as usize] == usize::MAX {
                    dist[w as usize] = dist[u as usize] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Exact diameter via all-pairs BFS.
    pub fn diameter(&self) -> usize {
        (0..self.n as u32)
            .map(|v| self.bfs_distances(v).into_iter().max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    /// Canonical text form: `n d` then one `u v` line per edge.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.d);
        for &(u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    /// Strict reader for [`Graph::to_text`]: single-space separation, edges
    /// `u < v` in sorted order, degree line matching the actual degree.
    /// Any deviation is rejected.
    pub fn from_text(text: &str) -> Result<Self, GraphError> {
        let parse = |line: usize, s: &str| -> Result<(u32, u32), GraphError> {
            let bad = |reason: &str| GraphError::Parse { line, reason: reason.to_string() };
            let (a, b) = s.split_once(' ').ok_or_else(|| bad("expected two fields"))?;
            let u: u32 = a.parse().map_err(|_| bad("bad integer"))?;
            let v: u32 = b.parse().map_err(|_| bad("bad integer"))?;
            if b.contains(' ') {
                return Err(bad("trailing content"));
            }
            Ok((u, v))
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| GraphError::Parse { line: 1, reason: "empty file".into() })?;
        let (n, d) = parse(1, header)?;
        let mut edges = Vec::new();
        let mut prev: Option<(u32, u32)> = None;
        for (i, line) in lines {
            let lineno = i + 1;
            let (u, v) = parse(lineno, line)?;
            if u >= v {
                return Err(GraphError::Parse {
                    line: lineno,
                    reason: format!("edge {u} {v} not in u < v form"),
                });
            }
            if let Some(p) = prev {
                if p >= (u, v) {
                    return Err(GraphError::Parse {
                        line: lineno,
                        reason: format!("edge {u} {v} out of sorted order"),
                    });
                }
            }
            prev = Some((u, v));
            edges.push((u, v));
        }
        let g = Self::from_edge_list_any_degree(n as usize, &edges)?;
        if g.degree() != d as usize {
            return Err(GraphError::Parse {
                line: 1,
                reason: format!("declared degree {d} but graph has degree {}", g.degree()),
            });
        }
        Ok(g)
    }

    /// Hex fingerprint of the canonical text form; schedules embed it so a
    /// schedule can only be verified against the graph it was built for.
    pub fn content_hash(&self) -> String {
        format!("{:016x}", seeds::fnv1a_hash(self.to_text().as_bytes()))
    }
}

/// Uniform-ish simple connected `d`-regular graph on `n` vertices.
///
/// Pairs half-edges sequentially, rejecting loops and duplicate edges pair by
/// pair; restarts the pairing when it wedges (the tail of the stub list can
/// become unmatchable) and rejects disconnected outcomes. Deterministic for a
/// fixed seed.
pub fn gen_random_regular(n: usize, d: usize, seed: u64) -> Result<Graph, GraphError> {
    if n == 0 || n * d % 2 == 1 || d >= n.max(1) {
        return Err(GraphError::InfeasibleDegree { n, d });
    }
    if d == 0 {
        return if n == 1 {
            Graph::from_edge_list(1, &[])
        } else {
            Err(GraphError::InfeasibleDegree { n, d })
        };
    }
    const MAX_RESTARTS: usize = 200;
    let mut rng = seeds::rng_for(seed, "gen-regular", 0);
    'restart: for attempt in 0..MAX_RESTARTS {
        let _ = attempt;
        let mut stubs: Vec<u32> = (0..n as u32).flat_map(|v| std::iter::repeat(v).take(d)).collect();
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut edges: Vec<(u32, u32)> = Vec::with_capacity(n * d / 2);
        while !stubs.is_empty() {
            let mut tries = 0;
            loop {
                let i = rng.gen_range(0..stubs.len());
                let j = rng.gen_range(0..stubs.len());
                let (u, v) = (stubs[i], stubs[j]);
                if i != j && u != v && !adj[u as usize].contains(&v) {
                    adj[u as usize].push(v);
                    adj[v as usize].push(u);
                    edges.push((u.min(v), u.max(v)));
                    // remove the higher index first so the lower stays valid
                    stubs.swap_remove(i.max(j));
                    stubs.swap_remove(i.min(j));
                    break;
                }
                tries += 1;
                if tries > 200 {
                    continue 'restart;
                }
            }
        }
        match Graph::from_edge_list(n, &edges) {
            Ok(g) => return Ok(g),
            Err(GraphError::Disconnected) => continue 'restart,
            Err(e) => return Err(e), // unreachable: pairing keeps the graph simple
        }
    }
    Err(GraphError::RetriesExhausted { attempts: MAX_RESTARTS })
}

/// Cycle C_n, `n >= 3`.
pub fn gen_cycle(n: usize) -> Result<Graph, GraphError> {
    if n < 3 {
        return Err(GraphError::ParameterOutOfRange { what: "cycle size", why: "need n >= 3" });
    }
    let edges: Vec<(u32, u32)> =
        (0..n as u32).map(|v| (v.min((v + 1) % n as u32), v.max((v + 1) % n as u32))).collect();
    Graph::from_edge_list(n, &edges)
}

/// Complete graph K_n, `n >= 2`.
pub fn gen_complete(n: usize) -> Result<Graph, GraphError> {
    if n < 2 {
        return Err(GraphError::ParameterOutOfRange { what: "complete size", why: "need n >= 2" });
    }
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            edges.push((u, v));
        }
    }
    Graph::from_edge_list(n, &edges)
}

/// Hypercube Q_dim on `2^dim` vertices, `dim >= 1`.
pub fn gen_hypercube(dim: usize) -> Result<Graph, GraphError> {
    if dim == 0 || dim > 20 {
        return Err(GraphError::ParameterOutOfRange {
            what: "hypercube dimension",
            why: "need 1 <= dim <= 20",
        });
    }
    let n = 1usize << dim;
    let mut edges = Vec::with_capacity(n * dim / 2);
    for v in 0..n as u32 {
        for b in 0..dim {
            let w = v ^ (1 << b);
            if v < w {
                edges.push((v, w));
            }
        }
    }
    Graph::from_edge_list(n, &edges)
}

/// Edge-distribution audit for a vertex-set pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingReport {
    /// Edges with one endpoint in S and the other in T; an edge inside S∩T
    /// contributes twice.
    pub e_count: u64,
    /// Expected count `|S||T|d/n` for a random-like d-regular graph.
    pub main_term: f64,
    /// `lambda*sqrt(|S||T|) - |e_count - main_term|`; nonnegative iff the
    /// spectral bound holds for this pair.
    pub slack: f64,
}

impl MixingReport {
    pub fn deviation(&self) -> f64 {
        (self.e_count as f64 - self.main_term).abs()
    }

    pub fn holds(&self) -> bool {
        self.slack >= 0.0
    }
}

/// Counts S–T edges and compares the deviation from `|S||T|d/n` against the
/// spectral bound `lambda*sqrt(|S||T|)`.
pub fn mixing_discrepancy(g: &Graph, lambda: f64, s: &[u32], t: &[u32]) -> MixingReport {
    let mut in_s = vec![false; g.n()];
    let mut in_t = vec![false; g.n()];
    for &v in s {
        in_s[v as usize] = true;
    }
    for &v in t {
        in_t[v as usize] = true;
    }
    let mut e_count = 0u64;
    for &(u, v) in g.edges() {
        if in_s[u as usize] && in_t[v as usize] {
            e_count += 1;
        }
        if in_s[v as usize] && in_t[u as usize] {
            e_count += 1;
        }
    }
    let size_product = (s.len() as f64) * (t.len() as f64);
    let main_term = size_product * g.degree() as f64 / g.n() as f64;
    let slack = lambda * size_product.sqrt() - (e_count as f64 - main_term).abs();
    MixingReport { e_count, main_term, slack }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_builds_c4() {
        let g = Graph::from_edge_list(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert_eq!(g.n(), 4);
        assert_eq!(g.degree(), 2);
        assert!(g.has_edge(0, 3));
        assert!(!g.has_edge(0, 2));
    }

    #[test]
    fn duplicate_edge_rejected() {
        let err = Graph::from_edge_list(3, &[(0, 1), (1, 0), (1, 2)]).unwrap_err();
        assert_eq!(err, GraphError::DuplicateEdge { u: 0, v: 1 });
    }

    #[test]
    fn irregular_path_rejected() {
        let err = Graph::from_edge_list(4, &[(0, 1), (1, 2), (2, 3)]).unwrap_err();
        assert!(matches!(err, GraphError::NotRegular { .. }));
    }

    #[test]
    fn loop_and_range_rejected() {
        assert_eq!(
            Graph::from_edge_list(3, &[(1, 1), (0, 2), (0, 1)]).unwrap_err(),
            GraphError::Loop { v: 1 }
        );
        assert_eq!(
            Graph::from_edge_list(2, &[(0, 5)]).unwrap_err(),
            GraphError::VertexOutOfRange { v: 5, n: 2 }
        );
    }

    #[test]
    fn disconnected_rejected() {
        let two_triangles = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)];
        assert_eq!(Graph::from_edge_list(6, &two_triangles).unwrap_err(), GraphError::Disconnected);
    }

    #[test]
    fn random_regular_on_four_vertices_is_k4() {
        for seed in 0..5 {
            let g = gen_random_regular(4, 3, seed).unwrap();
            assert_eq!(g.edges(), gen_complete(4).unwrap().edges());
        }
    }

    #[test]
    fn random_regular_infeasible_parameters() {
        assert!(matches!(
            gen_random_regular(5, 3, 0).unwrap_err(),
            GraphError::InfeasibleDegree { n: 5, d: 3 }
        ));
        assert!(matches!(
            gen_random_regular(4, 4, 0).unwrap_err(),
            GraphError::InfeasibleDegree { .. }
        ));
    }

    #[test]
    fn random_regular_valid_and_deterministic() {
        let g = gen_random_regular(64, 8, 1).unwrap();
        assert_eq!(g.n(), 64);
        assert_eq!(g.degree(), 8);
        assert!(g.is_regular());
        let h = gen_random_regular(64, 8, 1).unwrap();
        assert_eq!(g.edges(), h.edges());
        let other = gen_random_regular(64, 8, 2).unwrap();
        assert_ne!(g.edges(), other.edges());
    }

    #[test]
    fn generator_shapes() {
        let k5 = gen_complete(5).unwrap();
        assert_eq!((k5.degree(), k5.edges().len()), (4, 10));
        let q3 = gen_hypercube(3).unwrap();
        assert_eq!((q3.n(), q3.degree()), (8, 3));
        // bipartite: every edge changes popcount parity
        assert!(q3.edges().iter().all(|&(u, v)| (u.count_ones() + v.count_ones()) % 2 == 1));
        let c6 = gen_cycle(6).unwrap();
        assert_eq!((c6.degree(), c6.diameter()), (2, 3));
        assert!(gen_cycle(2).is_err());
        assert!(gen_complete(1).is_err());
        assert!(gen_hypercube(0).is_err());
    }

    #[test]
    fn diameters() {
        assert_eq!(gen_complete(7).unwrap().diameter(), 1);
        assert_eq!(gen_hypercube(4).unwrap().diameter(), 4);
    }

    #[test]
    fn mixing_full_sets_have_zero_deviation() {
        let g = gen_random_regular(16, 4, 3).unwrap();
        let all: Vec<u32> = (0..16).collect();
        let r = mixing_discrepancy(&g, 0.0, &all, &all);
        assert_eq!(r.e_count, 16 * 4);
        assert_eq!(r.main_term, 64.0);
        assert_eq!(r.deviation(), 0.0);
        assert!(r.holds());
    }

    #[test]
    fn mixing_empty_set() {
        let g = gen_cycle(5).unwrap();
        let r = mixing_discrepancy(&g, 1.0, &[], &[0, 1]);
        assert_eq!(r.e_count, 0);
        assert_eq!(r.main_term, 0.0);
    }

    #[test]
    fn mixing_k4_split() {
        // K_4 split into {0,1} vs {2,3}: 4 crossing edges, main term 3,
        // deviation 1 within the bound 1*sqrt(4) = 2.
        let g = gen_complete(4).unwrap();
        let r = mixing_discrepancy(&g, 1.0, &[0, 1], &[2, 3]);
        assert_eq!(r.e_count, 4);
        assert_eq!(r.main_term, 3.0);
        assert_eq!(r.deviation(), 1.0);
        assert!((r.slack - 1.0).abs() < 1e-12);
    }

    #[test]
    fn text_round_trip_and_strictness() {
        let g = gen_random_regular(12, 3, 9).unwrap();
        let text = g.to_text();
        let h = Graph::from_text(&text).unwrap();
        assert_eq!(g.edges(), h.edges());
        assert_eq!(g.content_hash(), h.content_hash());

        // reversed edge orientation
        assert!(Graph::from_text("2 1\n1 0\n").is_err());
        // unsorted edge list
        assert!(Graph::from_text("4 2\n0 1\n2 3\n1 2\n0 3\n").is_err());
        // wrong declared degree
        assert!(Graph::from_text("3 1\n0 1\n0 2\n1 2\n").is_err());
        // double space
        assert!(Graph::from_text("3 2\n0  1\n0 2\n1 2\n").is_err());
        // k2 parses
        let k2 = Graph::from_text("2 1\n0 1\n").unwrap();
        assert_eq!(k2.degree(), 1);
    }

    #[test]
    fn any_degree_constructor_admits_path() {
        let p3 = Graph::from_edge_list_any_degree(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(p3.degree(), 2);
        assert!(!p3.is_regular());
    }
}
