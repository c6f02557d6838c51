//! Permutations on dense vertex ids, their cycle structure, and the
//! factorization of an arbitrary permutation into two involutions.
//!
//! The factorization is the cycle-reversal construction: within each cycle
//! `(c_0, ..., c_{m-1})`, `sigma` maps `c_i -> c_{(-i) mod m}` and `tau` maps
//! `c_i -> c_{(1-i) mod m}`. Both are involutions and `tau ∘ sigma` restores
//! the original cycle, so the routing pipeline only ever has to realize
//! order-2 permutations.

use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PermError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("map is not a bijection: value {value} {problem}")]
    NotBijection { value: u32, problem: &'static str },
    #[error("parse error: {0}")]
    Parse(String),
}

/// A bijection on `{0, ..., n-1}`, stored as `map[v] = pi(v)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    map: Vec<u32>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation { map: (0..n as u32).collect() }
    }

    /// Validates that `map` is a bijection.
    pub fn from_map(map: Vec<u32>) -> Result<Self, PermError> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &x in &map {
            if x as usize >= n {
                return Err(PermError::NotBijection { value: x, problem: "out of range" });
            }
            if seen[x as usize] {
                return Err(PermError::NotBijection { value: x, problem: "repeated" });
            }
            seen[x as usize] = true;
        }
        Ok(Permutation { map })
    }

    /// Uniformly random permutation (Fisher–Yates).
    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        let mut map: Vec<u32> = (0..n as u32).collect();
        map.shuffle(rng);
        Permutation { map }
    }

    /// Random involution pairing roughly `pair_fraction` of the vertices
    /// into disjoint transpositions, the rest fixed.
    pub fn random_involution(n: usize, pair_fraction: f64, rng: &mut impl Rng) -> Self {
        let mut verts: Vec<u32> = (0..n as u32).collect();
        verts.shuffle(rng);
        let mut map: Vec<u32> = (0..n as u32).collect();
        let pairs = ((pair_fraction.clamp(0.0, 1.0) * n as f64) as usize) / 2;
        for i in 0..pairs {
            let (a, b) = (verts[2 * i], verts[2 * i + 1]);
            map[a as usize] = b;
            map[b as usize] = a;
        }
        Permutation { map }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn apply(&self, v: u32) -> u32 {
        self.map[v as usize]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.map
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(v, &x)| v as u32 == x)
    }

    pub fn is_involution(&self) -> bool {
        self.map.iter().enumerate().all(|(v, &x)| self.map[x as usize] == v as u32)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0u32; self.map.len()];
        for (v, &x) in self.map.iter().enumerate() {
            inv[x as usize] = v as u32;
        }
        Permutation { map: inv }
    }

    /// Disjoint cycles covering all vertices; each cycle starts at its
    /// minimal element and cycles are sorted by that element. Fixed points
    /// appear as singleton cycles.
    pub fn cycle_decomposition(&self) -> Vec<Vec<u32>> {
        let n = self.map.len();
        let mut seen = vec![false; n];
        let mut cycles = Vec::new();
        for start in 0..n as u32 {
            if seen[start as usize] {
                continue;
            }
            let mut cycle = vec![start];
            seen[start as usize] = true;
            let mut x = self.apply(start);
            while x != start {
                seen[x as usize] = true;
                cycle.push(x);
                x = self.apply(x);
            }
            cycles.push(cycle);
        }
        cycles
    }

    /// Splits this permutation into involutions `(sigma, tau)` with
    /// `tau ∘ sigma = self`.
    pub fn decompose_into_involutions(&self) -> (Permutation, Permutation) {
        let n = self.map.len();
        let mut sigma = vec![0u32; n];
        let mut tau = vec![0u32; n];
        for cycle in self.cycle_decomposition() {
            let m = cycle.len();
            for (i, &c) in cycle.iter().enumerate() {
                sigma[c as usize] = cycle[(m - i) % m];
                tau[c as usize] = cycle[(m + 1 - i) % m];
            }
        }
        (Permutation { map: sigma }, Permutation { map: tau })
    }

    /// Single text line: position `v` holds `pi(v)`.
    pub fn to_line(&self) -> String {
        let fields: Vec<String> = self.map.iter().map(u32::to_string).collect();
        format!("{}\n", fields.join(" "))
    }

    pub fn from_line(line: &str) -> Result<Self, PermError> {
        let mut map = Vec::new();
        for tok in line.split_whitespace() {
            map.push(tok.parse::<u32>().map_err(|e| PermError::Parse(e.to_string()))?);
        }
        if map.is_empty() {
            return Err(PermError::Parse("empty permutation line".into()));
        }
        Self::from_map(map)
    }
}

/// Composition `p ∘ q`: the result maps `v` to `p(q(v))`.
pub fn compose(p: &Permutation, q: &Permutation) -> Result<Permutation, PermError> {
    if p.len() != q.len() {
        return Err(PermError::LengthMismatch { left: p.len(), right: q.len() });
    }
    let map = (0..q.len() as u32).map(|v| p.apply(q.apply(v))).collect();
    Ok(Permutation { map })
}
