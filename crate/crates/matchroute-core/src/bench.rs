//! Scaling benchmark harness: for a grid of (n, seed) jobs at fixed degree,
//! generate a random regular graph, estimate its eigenvalue, route a random
//! permutation, verify, and record one CSV row per job. Rows are emitted in
//! (n, seed) order regardless of how many worker threads run the jobs, and
//! all randomness derives from a single base seed, so output is byte-stable.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::Deserialize;

use crate::family::BuilderParams;
use crate::graph::gen_random_regular;
use crate::perm::Permutation;
use crate::scheduler::route;
use crate::seeds::{derive_seed, rng_for};
use crate::spectral::{default_max_iter, estimate_lambda, DEFAULT_TOL};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum BenchError {
    #[error("bench spec: {0}")]
    Parse(String),
}

/// Declarative sweep description, read from TOML:
///
/// ```toml
/// d = 16
/// n = [64, 128, 256]
/// seeds = 5
/// # optional overrides
/// epsilon = 0.125
/// growth = 2
/// k = 4
/// beta = 0.25
/// ```
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    pub d: usize,
    pub n: Vec<usize>,
    pub seeds: u64,
    pub epsilon: Option<f64>,
    pub growth: Option<u32>,
    pub k: Option<u32>,
    pub beta: Option<f64>,
}

impl BenchSpec {
    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        toml::from_str(text).map_err(|e| BenchError::Parse(e.to_string()))
    }
}

/// One benchmark observation. `error` is set (and `verified` false) when any
/// stage of the job failed; the sweep itself never aborts on a bad row.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub lambda_hat: f64,
    pub rounds: usize,
    pub diameter: usize,
    pub log2n_ratio: f64,
    pub wall_ms: f64,
    pub verified: bool,
    pub error: Option<String>,
}

/// Runs the sweep with up to `jobs` worker threads. `with_timing = false`
/// zeroes the wall-clock column so output files are byte-identical across
/// runs and machines.
pub fn bench_sweep(spec: &BenchSpec, base_seed: u64, jobs: usize, with_timing: bool) -> Vec<BenchRow> {
    let mut grid: Vec<(usize, u64)> = Vec::new();
    for &n in &spec.n {
        for s in 0..spec.seeds {
            grid.push((n, s));
        }
    }
    grid.sort_unstable();
    grid.dedup();

    let slots: Vec<Mutex<Option<BenchRow>>> = grid.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = jobs.max(1).min(grid.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= grid.len() {
                    break;
                }
                let (n, s) = grid[i];
                let row = run_job(spec, base_seed, n, s, with_timing);
                *slots[i].lock().unwrap() = Some(row);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every grid slot is filled"))
        .collect()
}

fn run_job(spec: &BenchSpec, base_seed: u64, n: usize, s: u64, with_timing: bool) -> BenchRow {
    let job_seed = derive_seed(derive_seed(base_seed, "bench-n", n as u64), "bench-seed", s);
    let mut row = BenchRow {
        n,
        d: spec.d,
        seed: s,
        lambda_hat: 0.0,
        rounds: 0,
        diameter: 0,
        log2n_ratio: 0.0,
        wall_ms: 0.0,
        verified: false,
        error: None,
    };
    let g = match gen_random_regular(n, spec.d, derive_seed(job_seed, "graph", 0)) {
        Ok(g) => g,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.diameter = g.diameter();
    let profile =
        estimate_lambda(&g, DEFAULT_TOL, default_max_iter(n), derive_seed(job_seed, "lambda", 0));
    row.lambda_hat = profile.lambda_hat;

    let auto = BuilderParams::adaptive(n, spec.d, profile.lambda_hat);
    let mut params = BuilderParams::from_epsilon_growth(
        n,
        spec.epsilon.unwrap_or(auto.epsilon),
        spec.growth.unwrap_or(auto.growth),
    );
    if let Some(k) = spec.k {
        params.k = k;
    }
    let beta = spec.beta.unwrap_or(0.25);

    let pi = Permutation::random(n, &mut rng_for(job_seed, "perm", 0));
    let started = Instant::now();
    let outcome = route(
        &g,
        &pi,
        &params,
        beta,
        Some(profile.lambda_hat),
        derive_seed(job_seed, "route", 0),
    );
    if with_timing {
        row.wall_ms = started.elapsed().as_secs_f64() * 1e3;
    }
    match outcome {
        Ok(report) => {
            row.rounds = report.rounds;
            row.verified = report.verified;
            if n > 1 {
                row.log2n_ratio = report.rounds as f64 / (n as f64).log2();
            }
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Fixed-decimal CSV, one line per row, deterministic field formatting.
pub fn rows_to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("n,d,seed,lambda_hat,rounds,diameter,log2n_ratio,wall_ms,verified\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.6},{},{},{:.4},{:.3},{}\n",
            r.n, r.d, r.seed, r.lambda_hat, r.rounds, r.diameter, r.log2n_ratio, r.wall_ms,
            r.verified
        ));
    }
    out
}
