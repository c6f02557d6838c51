//! Randomized invariants of the routing pipeline, checked with proptest.
//!
//! Case counts are kept modest: each case below builds graphs or runs the
//! full pipeline, so the suite stays fast on a single core while still
//! exploring a meaningful slice of the input space.

use proptest::prelude::*;

use matchroute_core::family::{build_family, family_schedule, BuilderParams};
use matchroute_core::graph::{gen_random_regular, mixing_discrepancy};
use matchroute_core::perm::compose;
use matchroute_core::scheduler::select_batch;
use matchroute_core::seeds::{derive_seed, rng_for};
use matchroute_core::sim::{run_schedule, PebbleConfig, Schedule};
use matchroute_core::spectral::{default_max_iter, DEFAULT_TOL};
use matchroute_core::{
    check_partition, estimate_lambda, find_partition, route_auto, verify_achieves, Graph,
    Permutation,
};

/// A random schedule of valid rounds: each round greedily packs a matching
/// from a shuffled copy of the edge list, so every prefix is replayable.
fn random_schedule(g: &Graph, rounds: usize, seed: u64) -> Schedule {
    use rand::seq::SliceRandom;
    let mut rng = rng_for(seed, "random-schedule", 0);
    let mut s = Schedule::empty();
    for _ in 0..rounds {
        let mut edges = g.edges().to_vec();
        edges.shuffle(&mut rng);
        let mut used = vec![false; g.n()];
        let mut round = Vec::new();
        for (u, v) in edges {
            if !used[u as usize] && !used[v as usize] {
                used[u as usize] = true;
                used[v as usize] = true;
                round.push((u, v));
            }
        }
        s.push(matchroute_core::Matching::new(round));
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    /// The two factors returned for any permutation are involutions whose
    /// composition recovers it.
    #[test]
    fn factorization_is_a_pair_of_involutions(n in 1usize..80, seed in 0u64..1 << 48) {
        let pi = Permutation::random(n, &mut rng_for(seed, "factor", 0));
        let (sigma, tau) = pi.decompose_into_involutions();
        prop_assert!(sigma.is_involution());
        prop_assert!(tau.is_involution());
        let again = compose(&tau, &sigma).unwrap();
        prop_assert_eq!(again.as_slice(), pi.as_slice());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    /// Replaying any valid schedule keeps the configuration a bijection, and
    /// replaying it backwards returns to the start.
    #[test]
    fn schedules_preserve_bijections_and_reverse_undoes(
        seed in 0u64..1 << 48,
        rounds in 0usize..12,
    ) {
        let g = gen_random_regular(24, 8, derive_seed(seed, "graph", 0)).unwrap();
        let s = random_schedule(&g, rounds, seed);
        let start = PebbleConfig::identity(24);
        let end = run_schedule(&g, &start, &s).unwrap();
        prop_assert!(end.is_bijection());
        let back = run_schedule(&g, &end, &s.reversed()).unwrap();
        prop_assert_eq!(back.as_slice(), start.as_slice());
    }

    /// Running a concatenation equals running the halves in sequence.
    #[test]
    fn schedule_concatenation_composes(
        seed in 0u64..1 << 48,
        r1 in 0usize..8,
        r2 in 0usize..8,
    ) {
        let g = gen_random_regular(24, 8, derive_seed(seed, "graph", 1)).unwrap();
        let s1 = random_schedule(&g, r1, derive_seed(seed, "s", 1));
        let s2 = random_schedule(&g, r2, derive_seed(seed, "s", 2));
        let mut joined = Schedule::empty();
        joined.extend(s1.clone());
        joined.extend(s2.clone());
        let start = PebbleConfig::identity(24);
        let two_steps =
            run_schedule(&g, &run_schedule(&g, &start, &s1).unwrap(), &s2).unwrap();
        let one_step = run_schedule(&g, &start, &joined).unwrap();
        prop_assert_eq!(one_step.as_slice(), two_steps.as_slice());
    }

    /// Any partition the solver returns audits clean against the exact
    /// checker at the same balance fraction.
    #[test]
    fn returned_partitions_audit_clean(seed in 0u64..1 << 48) {
        let g = gen_random_regular(48, 16, derive_seed(seed, "graph", 2)).unwrap();
        let inv =
            Permutation::random_involution(48, 0.3, &mut rng_for(seed, "involution", 0));
        if let Ok(p) = find_partition(&g, &inv, 0.25, 4800, derive_seed(seed, "part", 0)) {
            let report = check_partition(&g, &inv, &p, 0.25);
            prop_assert!(report.ok(), "violations: {:?}", report.violations);
        }
    }

    /// The spectral bound with the estimated eigenvalue (plus estimator
    /// tolerance) holds on random vertex subsets.
    #[test]
    fn mixing_slack_nonnegative_on_random_subsets(
        seed in 0u64..1 << 48,
        s_len in 1usize..24,
        t_len in 1usize..24,
    ) {
        let g = gen_random_regular(48, 16, derive_seed(seed, "graph", 3)).unwrap();
        let profile = estimate_lambda(&g, DEFAULT_TOL, default_max_iter(48), seed);
        let lambda = profile.lambda_hat + 1e-6;
        let mut rng = rng_for(seed, "subsets", 0);
        let s = rand::seq::index::sample(&mut rng, 48, s_len)
            .iter()
            .map(|i| i as u32)
            .collect::<Vec<_>>();
        let t = rand::seq::index::sample(&mut rng, 48, t_len)
            .iter()
            .map(|i| i as u32)
            .collect::<Vec<_>>();
        let report = mixing_discrepancy(&g, lambda, &s, &t);
        prop_assert!(report.holds(), "slack {}", report.slack);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    /// A built family's rounds swap exactly the endpoint pairs, starting
    /// from an arbitrary configuration, and leave every other seat alone.
    #[test]
    fn family_rounds_swap_endpoints_from_any_start(seed in 0u64..1 << 48) {
        let g = gen_random_regular(64, 16, derive_seed(seed, "graph", 4)).unwrap();
        let inv =
            Permutation::random_involution(64, 0.4, &mut rng_for(seed, "involution", 1));
        let Ok(p) = find_partition(&g, &inv, 0.25, 6400, derive_seed(seed, "part", 1)) else {
            return Ok(());
        };
        let params = BuilderParams::adaptive(64, 16, 4.0);
        let pairs: Vec<(u32, u32)> = (0..64u32)
            .filter(|&v| v < inv.apply(v) && p.side_of(v) == 1)
            .map(|v| (v, inv.apply(v)))
            .collect();
        if pairs.is_empty() {
            return Ok(());
        }
        let sel = select_batch(&pairs, params.frontier_target);
        let Ok((fam, _)) = build_family(&g, &p, &sel.chosen, &params, seed) else {
            return Ok(());
        };
        let rounds = family_schedule(&g, &fam).unwrap();
        let start = PebbleConfig::from_permutation(&Permutation::random(
            64,
            &mut rng_for(seed, "start", 0),
        ));
        let end = run_schedule(&g, &start, &rounds).unwrap();
        let mut expected = start.as_slice().to_vec();
        for &(a, b) in fam.endpoints().iter() {
            expected.swap(a as usize, b as usize);
        }
        prop_assert_eq!(end.as_slice(), expected.as_slice());
    }

    /// End-to-end: the auto-tuned router produces a verified schedule whose
    /// reported round count matches the schedule it returns, and replaying
    /// it sends every pebble to its target.
    #[test]
    fn route_auto_realizes_random_permutations(seed in 0u64..1 << 48) {
        let n = 32 + (seed % 3) as usize * 16; // 32, 48, or 64
        let g = gen_random_regular(n, 8, derive_seed(seed, "graph", 5)).unwrap();
        let pi = Permutation::random(n, &mut rng_for(seed, "perm", 0));
        let report = route_auto(&g, &pi, seed).unwrap();
        prop_assert!(report.verified);
        prop_assert_eq!(report.rounds, report.schedule.len());
        let outcome = verify_achieves(&g, &pi, &report.schedule).unwrap();
        prop_assert!(outcome.ok);
        prop_assert_eq!(outcome.rounds_used, report.rounds);
    }
}
