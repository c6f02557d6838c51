//! Matching-based permutation routing on regular graphs.
//!
//! Every vertex of a connected graph holds a labelled pebble, and each pebble
//! has a destination given by a permutation. One round of routing picks a
//! matching and swaps the pebbles across each of its edges. This crate builds,
//! simulates, and verifies round schedules realizing arbitrary permutations on
//! d-regular spectral expanders, where O(log n) rounds suffice.
//!
//! The pipeline: factor the permutation into two involutions; for each
//! involution, two-color the vertices so that every swap pair shares a side
//! and every vertex keeps a constant fraction of its neighbors on both sides
//! (randomized coloring repaired by resampling); batch the pairs of a side and
//! connect each pair with a path through alternating bipartite layers, grown
//! frontier-by-frontier so that the aligned edge slices of all paths form
//! matchings; play each family's slices as a palindrome of rounds, which swaps
//! exactly the path endpoints and restores everything else.
//!
//! Supporting modules provide graph generators, a spectral-gap estimator, an
//! edge-distribution auditor, an exact small-instance routing oracle, and a
//! scaling benchmark harness.

pub mod bench;
pub mod family;
pub mod graph;
pub mod oracle;
pub mod partition;
pub mod perm;
pub mod scheduler;
pub mod seeds;
pub mod sim;
pub mod spectral;

pub use family::{build_family, family_schedule, verify_switchable, BuilderParams};
pub use graph::Graph;
pub use partition::{check_partition, find_partition, Partition};
pub use perm::Permutation;
pub use scheduler::{route, route_auto, theoretical_round_bound, RouteReport};
pub use sim::{verify_achieves, Matching, PebbleConfig, Schedule};
pub use spectral::estimate_lambda;
