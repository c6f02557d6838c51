//! Command-line surface for the routing engine: generate graphs, route
//! permutations through matching schedules, verify schedules independently,
//! estimate the second adjacency eigenvalue, query the exact small-graph
//! oracle, and drive benchmark sweeps.
//!
//! Exit codes: 0 ok; 2 parse or I/O failure; 3 infeasible parameters;
//! 4 partition failure; 5 routing failure; 6 verification mismatch.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use matchroute_core::bench::{bench_sweep, rows_to_csv, BenchSpec};
use matchroute_core::family::BuilderParams;
use matchroute_core::graph::{
    gen_complete, gen_cycle, gen_hypercube, gen_random_regular, Graph, GraphError,
};
use matchroute_core::oracle::{rt_exact, OracleError};
use matchroute_core::perm::Permutation;
use matchroute_core::scheduler::{route, RouteError};
use matchroute_core::sim::{verify_achieves, Schedule};
use matchroute_core::spectral::{default_max_iter, estimate_lambda, DEFAULT_TOL};
use matchroute_core::seeds::derive_seed;

const EXIT_PARSE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_PARTITION: u8 = 4;
const EXIT_ROUTING: u8 = 5;
const EXIT_VERIFY: u8 = 6;

#[derive(Parser)]
#[command(
    name = "matchroute",
    about = "Permutation routing on regular graphs via matching schedules",
    long_about = "Generates regular graphs, routes permutations as sequences of matching swap \
                  rounds, verifies schedules by independent simulation, estimates spectral \
                  expansion, and benchmarks round counts. All randomness derives from --seed."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a graph file
    Gen {
        #[command(subcommand)]
        kind: GenKind,
        /// Base seed for randomized generators
        #[arg(long, global = true, default_value_t = 0)]
        seed: u64,
        /// Output path (stdout when omitted)
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Route a permutation: print the report, optionally save the schedule
    Route {
        /// Graph file
        graph: PathBuf,
        /// Permutation file (one line of images)
        perm: PathBuf,
        /// Schedule output path (.json for the structured form, text otherwise)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Base seed for partitioning and path building
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Partition side threshold fraction [default: 0.25]
        #[arg(long)]
        beta: Option<f64>,
        /// Batch fraction override [default: adapted to measured lambda]
        #[arg(long)]
        epsilon: Option<f64>,
        /// Frontier growth factor override [default: adapted to measured lambda]
        #[arg(long)]
        growth: Option<u32>,
        /// Layer count override [default: derived from epsilon and growth]
        #[arg(long)]
        k: Option<u32>,
        /// Per-layer committed-vertex cap override [default: max(n/24, 2*target)]
        #[arg(long)]
        capacity: Option<usize>,
    },
    /// Re-simulate a schedule and check it realizes the permutation
    Verify {
        /// Graph file
        graph: PathBuf,
        /// Permutation file
        perm: PathBuf,
        /// Schedule file (text or structured)
        schedule: PathBuf,
    },
    /// Estimate the second largest absolute adjacency eigenvalue
    Lambda {
        /// Graph file
        graph: PathBuf,
        /// Convergence tolerance on the iterate ratio
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Power-iteration seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fail (exit 3) when the iteration does not converge
        #[arg(long)]
        strict: bool,
    },
    /// Exact minimum round count by exhaustive search (n <= 8)
    RtExact {
        /// Graph file
        graph: PathBuf,
        /// Permutation file
        perm: PathBuf,
        /// Prune search branches beyond this depth
        #[arg(long)]
        cap: Option<u32>,
    },
    /// Run a benchmark sweep from a spec file and emit CSV
    Bench {
        /// Spec file listing d, n values, seeds, and optional overrides
        spec: PathBuf,
        /// CSV output path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for benchmark rows
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Base seed for the whole sweep
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Zero the wall-clock column so output bytes are reproducible
        #[arg(long)]
        no_timing: bool,
    },
}

#[derive(Subcommand)]
enum GenKind {
    /// Random d-regular graph on n vertices
    RandomRegular { n: usize, d: usize },
    /// Cycle on n vertices
    Cycle { n: usize },
    /// Complete graph on n vertices
    Complete { n: usize },
    /// Hypercube of the given dimension
    Hypercube { dim: usize },
}

struct Failure {
    code: u8,
    msg: String,
}

fn fail(code: u8, msg: impl Display) -> Failure {
    Failure { code, msg: msg.to_string() }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn graph_error_code(e: &GraphError) -> u8 {
    match e {
        GraphError::InfeasibleDegree { .. }
        | GraphError::ParameterOutOfRange { .. }
        | GraphError::RetriesExhausted { .. } => EXIT_INFEASIBLE,
        _ => EXIT_PARSE,
    }
}

fn read_to_string(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| fail(EXIT_PARSE, format!("cannot read {}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, content: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, content)
            .map_err(|e| fail(EXIT_PARSE, format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn load_graph(path: &Path) -> Result<Graph, Failure> {
    Graph::from_text(&read_to_string(path)?)
        .map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn load_perm(path: &Path, n: usize) -> Result<Permutation, Failure> {
    let pi = Permutation::from_line(&read_to_string(path)?)
        .map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", path.display())))?;
    if pi.len() != n {
        return Err(fail(
            EXIT_PARSE,
            format!("permutation length {} does not match graph order {n}", pi.len()),
        ));
    }
    Ok(pi)
}

fn load_schedule(path: &Path, g: &Graph) -> Result<Schedule, Failure> {
    let text = read_to_string(path)?;
    let parsed = if text.trim_start().starts_with('{') {
        Schedule::from_json(&text, g)
    } else {
        Schedule::from_text(&text)
    };
    parsed.map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Gen { kind, seed, out } => cmd_gen(kind, seed, out.as_deref()),
        Cmd::Route { graph, perm, out, seed, beta, epsilon, growth, k, capacity } => cmd_route(
            &graph,
            &perm,
            out.as_deref(),
            seed,
            beta,
            epsilon,
            growth,
            k,
            capacity,
        ),
        Cmd::Verify { graph, perm, schedule } => cmd_verify(&graph, &perm, &schedule),
        Cmd::Lambda { graph, tol, seed, strict } => cmd_lambda(&graph, tol, seed, strict),
        Cmd::RtExact { graph, perm, cap } => cmd_rt_exact(&graph, &perm, cap),
        Cmd::Bench { spec, out, jobs, seed, no_timing } => {
            cmd_bench(&spec, out.as_deref(), jobs, seed, no_timing)
        }
    }
}

fn cmd_gen(kind: GenKind, seed: u64, out: Option<&Path>) -> Result<(), Failure> {
    let g = match kind {
        GenKind::RandomRegular { n, d } => gen_random_regular(n, d, seed),
        GenKind::Cycle { n } => gen_cycle(n),
        GenKind::Complete { n } => gen_complete(n),
        GenKind::Hypercube { dim } => gen_hypercube(dim),
    }
    .map_err(|e| fail(graph_error_code(&e), e))?;
    write_output(out, &g.to_text())
}

#[allow(clippy::too_many_arguments)]
fn cmd_route(
    graph: &Path,
    perm: &Path,
    out: Option<&Path>,
    seed: u64,
    beta: Option<f64>,
    epsilon: Option<f64>,
    growth: Option<u32>,
    k: Option<u32>,
    capacity: Option<usize>,
) -> Result<(), Failure> {
    let g = load_graph(graph)?;
    let pi = load_perm(perm, g.n())?;
    let profile =
        estimate_lambda(&g, DEFAULT_TOL, default_max_iter(g.n()), derive_seed(seed, "lambda", 0));
    let auto = BuilderParams::adaptive(g.n(), g.degree(), profile.lambda_hat);
    let mut params = match (epsilon, growth) {
        (None, None) => auto,
        (e, gr) => BuilderParams::from_epsilon_growth(
            g.n(),
            e.unwrap_or(auto.epsilon),
            gr.unwrap_or(auto.growth),
        ),
    };
    if let Some(k) = k {
        params.k = k;
    }
    if let Some(cap) = capacity {
        params.capacity = cap;
    }
    let report = route(&g, &pi, &params, beta.unwrap_or(0.25), Some(profile.lambda_hat), seed)
        .map_err(|e| {
            let code = match &e {
                RouteError::BadInput { .. } => EXIT_PARSE,
                RouteError::PartitionFailed { .. } => EXIT_PARTITION,
                RouteError::RoutingFailed { .. } | RouteError::Internal { .. } => EXIT_ROUTING,
                RouteError::VerificationFailed => EXIT_VERIFY,
            };
            fail(code, e)
        })?;
    if let Some(p) = out {
        let content = if p.extension().is_some_and(|x| x == "json") {
            report.schedule.to_json(&g)
        } else {
            report.schedule.to_text()
        };
        fs::write(p, content)
            .map_err(|e| fail(EXIT_PARSE, format!("cannot write {}: {e}", p.display())))?;
    }
    println!("{}", report.to_text());
    Ok(())
}

fn cmd_verify(graph: &Path, perm: &Path, schedule: &Path) -> Result<(), Failure> {
    let g = load_graph(graph)?;
    let pi = load_perm(perm, g.n())?;
    let s = load_schedule(schedule, &g)?;
    let outcome = verify_achieves(&g, &pi, &s).map_err(|e| fail(EXIT_VERIFY, e))?;
    if outcome.ok {
        println!("ok: schedule realizes the permutation in {} rounds", outcome.rounds_used);
        Ok(())
    } else {
        Err(fail(
            EXIT_VERIFY,
            format!("schedule runs {} rounds but does not realize the permutation", outcome.rounds_used),
        ))
    }
}

fn cmd_lambda(graph: &Path, tol: f64, seed: u64, strict: bool) -> Result<(), Failure> {
    let g = load_graph(graph)?;
    let profile = estimate_lambda(&g, tol, default_max_iter(g.n()), seed);
    let sep = g.degree() as f64 / profile.lambda_hat;
    println!("lambda_hat: {:.6}", profile.lambda_hat);
    println!("separation: {sep:.6}");
    println!("converged: {} (after {} iterations)", profile.converged, profile.iterations);
    if strict && !profile.converged {
        return Err(fail(
            EXIT_INFEASIBLE,
            format!("power iteration did not converge within {} iterations", profile.iterations),
        ));
    }
    Ok(())
}

fn cmd_rt_exact(graph: &Path, perm: &Path, cap: Option<u32>) -> Result<(), Failure> {
    let g = load_graph(graph)?;
    let pi = load_perm(perm, g.n())?;
    let rt = rt_exact(&g, &pi, cap.unwrap_or(u32::MAX)).map_err(|e| {
        let code = match e {
            OracleError::TooLarge { .. } | OracleError::ExceedsCap { .. } => EXIT_INFEASIBLE,
            _ => EXIT_PARSE,
        };
        fail(code, e)
    })?;
    println!("{rt}");
    Ok(())
}

fn cmd_bench(
    spec: &Path,
    out: Option<&Path>,
    jobs: usize,
    seed: u64,
    no_timing: bool,
) -> Result<(), Failure> {
    let parsed = BenchSpec::from_toml(&read_to_string(spec)?)
        .map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", spec.display())))?;
    let rows = bench_sweep(&parsed, seed, jobs, !no_timing);
    write_output(out, &rows_to_csv(&rows))
}
