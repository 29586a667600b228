//! Randomized invariants over the seeded landscape corpus: every analysis
//! route must agree with its independent counterpart, and the variational
//! identities must hold on arbitrary connected reversible instances.

use std::collections::BTreeSet;

use proptest::prelude::*;

use relax_core::capacity::{
    absorbing_probability, build_chain, capacity_of, easy_bounds_probe,
    equilibrium_potential, log_pta_ratio, QWeights,
};
use relax_core::fit::fit_line;
use relax_core::landscape::{CostMode, CostedEdge, SufficiencyMode};
use relax_core::markov::{exit_time_experiment, gate_passage_experiment, SimConfig};
use relax_core::testkit::{
    capacity_corpus_landscape, chain_landscape, corpus_landscape,
    random_connected_landscape, LandscapeShape,
};
use relax_core::{EnergyLandscape, LandscapeError, StateId};

const TOL: f64 = 1e-9;

/// All-pairs symmetry of the communication height, bitwise.
#[test]
fn communication_height_is_symmetric() {
    let mut checked = 0usize;
    for seed in 0..40u64 {
        let l = corpus_landscape(seed, 14);
        for y in 0..l.len() {
            for z in y + 1..l.len() {
                let fwd = l.communication_height(y, z).unwrap();
                let back = l.communication_height(z, y).unwrap();
                assert_eq!(fwd, back, "seed {seed} pair ({y},{z})");
                checked += 1;
            }
        }
    }
    assert!(checked > 1000);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    /// Merge-sweep analysis and per-state bottleneck search agree on the
    /// relaxation height, the maximally stable set, and every level.
    #[test]
    fn analysis_matches_bruteforce(seed in any::<u64>()) {
        let l = corpus_landscape(seed, 40);
        let fast = l.relaxation_analysis().unwrap();
        let slow = l.relaxation_bruteforce().unwrap();
        match (fast.gamma_m, slow.gamma_m) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() <= TOL),
            (a, b) => prop_assert_eq!(a, b),
        }
        prop_assert_eq!(&fast.metastable_set, &slow.metastable_set);
        prop_assert_eq!(&fast.ground_states, &slow.ground_states);
        prop_assert_eq!(fast.stability.len(), slow.stability.len());
        for (x, v) in &fast.stability {
            let w = slow.stability[x];
            prop_assert!((v - w).abs() <= TOL, "V_{} routes differ: {} vs {}", x, v, w);
        }
    }

    /// The computed pair (X_m, Gamma_m) satisfies the sufficient conditions
    /// in both modes and the necessity direction; perturbing either
    /// component breaks at least one clause.
    #[test]
    fn theorem_checkers_close_the_loop(seed in any::<u64>()) {
        let l = corpus_landscape(seed, 30);
        let report = l.relaxation_analysis().unwrap();
        let gamma = match report.gamma_m {
            Some(g) if g > 0.0 => g,
            _ => return Ok(()),
        };
        let xm = &report.metastable_set;
        for mode in [SufficiencyMode::Path, SufficiencyMode::Stability] {
            let v = l.check_sufficient_conditions(xm, gamma, mode).unwrap();
            prop_assert!(v.pass, "mode {:?}: {:?}", mode, v.violation);
        }
        prop_assert!(l.verify_necessity().unwrap().pass);

        // a perturbed threshold or a clipped set must be rejected; a
        // precondition error is a rejection as well
        let rejected = |r: Result<relax_core::landscape::Verdict, LandscapeError>| {
            r.map(|v| !v.pass).unwrap_or(true)
        };
        for bad_a in [gamma + 0.5, gamma - 0.5] {
            prop_assert!(rejected(l.check_sufficient_conditions(
                xm,
                bad_a,
                SufficiencyMode::Path,
            )));
        }
        let clipped: Vec<StateId> = xm[1..].to_vec();
        prop_assert!(rejected(l.check_sufficient_conditions(
            &clipped,
            gamma,
            SufficiencyMode::Path,
        )));
    }

    /// In metropolis mode the height of a path is the maximum energy along
    /// it, and the communication height is the min-max over simple paths.
    #[test]
    fn metropolis_height_is_minmax_energy(seed in any::<u64>()) {
        let shape = LandscapeShape { n_states: 8, extra_edges: 5, explicit: false };
        let l = random_connected_landscape(seed, shape);

        // random adjacent walks: height equals the running energy maximum
        let mut rng =
            <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed ^ 0x5bd1);
        let mut walk = vec![rng_pick(&mut rng, l.len())];
        for _ in 0..7 {
            let here = *walk.last().unwrap();
            let nbrs: Vec<StateId> = l.neighbors(here).collect();
            walk.push(nbrs[rng_pick(&mut rng, nbrs.len())]);
        }
        let max_h = walk.iter().map(|&x| l.energy(x)).fold(f64::MIN, f64::max);
        prop_assert_eq!(l.path_height(&walk).unwrap(), max_h);

        for sigma in 0..l.len() {
            for eta in sigma + 1..l.len() {
                let phi = l.communication_height(sigma, eta).unwrap();
                let brute = minmax_over_simple_paths(&l, sigma, eta);
                prop_assert!((phi - brute).abs() <= 1e-12,
                    "pair ({},{}): {} vs {}", sigma, eta, phi, brute);
            }
        }
    }

    /// Stability levels are nonnegative, and vanish exactly when a strictly
    /// lower state is reachable without climbing above the state's energy.
    #[test]
    fn stability_zero_iff_downhill_reachable(seed in any::<u64>()) {
        let l = corpus_landscape(seed, 30);
        let report = l.relaxation_analysis().unwrap();
        for (&x, &v) in &report.stability {
            prop_assert!(v >= 0.0);
            let reachable = downhill_reachable_at_level(&l, x);
            prop_assert_eq!(v.abs() <= TOL, reachable,
                "state {} has V = {} but downhill reachability {}", x, v, reachable);
        }
    }

    /// Every reported gate passes the cut test, no proper subset does, and
    /// the essential-saddle union is stable under relabeling the states.
    #[test]
    fn minimal_gates_are_minimal_and_label_free(seed in any::<u64>()) {
        let l = corpus_landscape(seed, 12);
        let (sigma, eta) = (0, l.len() - 1);
        let gates = l.minimal_gates(sigma, eta).unwrap();
        let mut union: BTreeSet<StateId> = BTreeSet::new();
        for gate in &gates {
            prop_assert!(l.is_gate(gate, sigma, eta).unwrap(), "gate {:?}", gate);
            for drop in 0..gate.len() {
                let mut sub = gate.clone();
                sub.remove(drop);
                prop_assert!(!l.is_gate(&sub, sigma, eta).unwrap(),
                    "proper subset {:?} of {:?} still cuts", sub, gate);
            }
            union.extend(gate.iter().copied());
        }

        let perm = shuffled_identity(seed ^ 0xabcd, l.len());
        let relabeled = relabel(&l, &perm);
        let mapped_gates = relabeled.minimal_gates(perm[sigma], perm[eta]).unwrap();
        let mut mapped_union: BTreeSet<StateId> = BTreeSet::new();
        let mut inverse = vec![0; perm.len()];
        for (old, &new) in perm.iter().enumerate() {
            inverse[new] = old;
        }
        for gate in &mapped_gates {
            mapped_union.extend(gate.iter().map(|&x| inverse[x]));
        }
        prop_assert_eq!(union, mapped_union);
    }

    /// A landscape is fully attracted exactly when its relaxation height
    /// vanishes.
    #[test]
    fn fully_attracted_iff_zero_height(seed in any::<u64>()) {
        let l = corpus_landscape(seed, 30);
        let report = l.relaxation_analysis().unwrap();
        if report.trivial {
            prop_assert!(report.gamma_m.is_none());
            return Ok(());
        }
        let gamma = report.gamma_m.unwrap();
        prop_assert_eq!(report.fully_attracted, gamma == 0.0);
    }
}

proptest! {
    // linear solves dominate these cases; fewer draws keep the suite quick
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    /// The harmonic (conductance) solve and the absorbing jump-chain solve
    /// produce the same equilibrium potential, the built chain satisfies
    /// detailed balance, and the capacity is symmetric and monotone in the
    /// source set.
    #[test]
    fn capacity_routes_and_variational_facts(seed in any::<u64>()) {
        let l = capacity_corpus_landscape(seed, 24);
        let n = l.len();
        let a = vec![seed as usize % n];
        let b = vec![(seed as usize + 1 + (seed as usize >> 3) % (n - 1)) % n];
        if a == b {
            return Ok(());
        }
        for beta in [0.5, 2.0, 8.0, 12.0] {
            let chain = build_chain(&l, &QWeights::default(), beta).unwrap();
            prop_assert!(chain.detailed_balance_residual() <= 1e-12);

            let harmonic = equilibrium_potential(&chain, &a, &b).unwrap();
            let absorbing = absorbing_probability(&chain, &a, &b).unwrap();
            for (x, (p, q)) in harmonic.iter().zip(&absorbing).enumerate() {
                prop_assert!((p - q).abs() <= 1e-10 * p.abs().max(1.0),
                    "beta {}: routes differ at {}: {} vs {}", beta, x, p, q);
            }

            let fwd = capacity_of(&chain, &a, &b).unwrap().capacity;
            let back = capacity_of(&chain, &b, &a).unwrap().capacity;
            prop_assert!((fwd - back).abs() <= 1e-12 * fwd.abs().max(1e-300));

            // enlarging the source set can only help the flow
            let extra = (0..n).find(|x| !a.contains(x) && !b.contains(x));
            if let Some(extra) = extra {
                let mut bigger = a.clone();
                bigger.push(extra);
                let more = capacity_of(&chain, &bigger, &b).unwrap().capacity;
                prop_assert!(more >= fwd * (1.0 - 1e-9),
                    "beta {}: capacity {} shrank to {}", beta, fwd, more);
            }
        }
    }

    /// The scaled capacity g stays pinned between positive constants with a
    /// flat tail, and the metastability ratio of the candidate set decays,
    /// on corpus landscapes where the construction applies.
    #[test]
    fn probe_and_candidate_ratio_behave(seed in any::<u64>()) {
        let l = corpus_landscape(seed, 18);
        let report = l.relaxation_analysis().unwrap();
        if report.trivial || report.gamma_m == Some(0.0) {
            return Ok(());
        }
        let weights = QWeights::default();

        let a = vec![report.metastable_set[0]];
        let b = report.ground_states.clone();
        if !b.contains(&a[0]) {
            let grid: Vec<f64> = (1..=20).map(f64::from).collect();
            let probe = easy_bounds_probe(&l, &weights, &a, &b, &grid).unwrap();
            prop_assert!(probe.min_g > 0.0 && probe.min_g.is_finite());
            prop_assert!(probe.max_g > 0.0 && probe.max_g.is_finite());
            prop_assert!(probe.final_slope <= 0.1, "slope {}", probe.final_slope);
        }

        let candidates = match l.pta_candidate_set(&report) {
            Ok(c) => c.representatives,
            Err(_) => return Ok(()),
        };
        let grid = [4.0, 6.0, 8.0, 10.0];
        let mut logs = Vec::new();
        for &beta in &grid {
            logs.push(log_pta_ratio(&l, &weights, &candidates, beta).unwrap());
        }
        let fit = fit_line(&grid, &logs).unwrap();
        prop_assert!(fit.slope < -0.01, "candidate ratio slope {}", fit.slope);
    }
}

/// Bit-identical reruns: the same seed and configuration reproduce every
/// statistic of both simulation experiments.
#[test]
fn seeded_experiments_replay_bit_identically() {
    let l = chain_landscape(&[3.0, 10.0, 1.0, 8.0, 0.0]);
    let chain = build_chain(&l, &QWeights::default(), 1.0).unwrap();
    let config = SimConfig {
        betas: vec![0.5, 1.0, 1.5],
        replicas: 50,
        master_seed: 99,
        step_cap: 5_000_000,
    };
    let first = exit_time_experiment(&chain, &0, |x: &StateId| *x == 4, &config).unwrap();
    let second = exit_time_experiment(&chain, &0, |x: &StateId| *x == 4, &config).unwrap();
    assert_eq!(first, second);

    let gate = |x: &StateId| *x == 1;
    let target = |x: &StateId| *x == 4;
    let g1 = gate_passage_experiment(&chain, &0, gate, target, 2.0, 200, 7, 100_000);
    let g2 = gate_passage_experiment(&chain, &0, gate, target, 2.0, 200, 7, 100_000);
    assert_eq!(g1, g2);
}

fn rng_pick<R: rand::Rng>(rng: &mut R, n: usize) -> usize {
    rng.gen_range(0..n)
}

/// Min over all simple sigma-eta paths of the max energy along the path.
fn minmax_over_simple_paths(l: &EnergyLandscape, sigma: StateId, eta: StateId) -> f64 {
    fn dfs(
        l: &EnergyLandscape,
        here: StateId,
        eta: StateId,
        seen: &mut Vec<bool>,
        running: f64,
        best: &mut f64,
    ) {
        let running = running.max(l.energy(here));
        if running >= *best {
            return;
        }
        if here == eta {
            *best = running;
            return;
        }
        seen[here] = true;
        for y in l.neighbors(here) {
            if !seen[y] {
                dfs(l, y, eta, seen, running, best);
            }
        }
        seen[here] = false;
    }
    let mut best = f64::INFINITY;
    let mut seen = vec![false; l.len()];
    dfs(l, sigma, eta, &mut seen, f64::MIN, &mut best);
    best
}

/// Whether a strictly lower energy level is reachable from `x` through
/// transitions that never climb above H(x).
fn downhill_reachable_at_level(l: &EnergyLandscape, x: StateId) -> bool {
    let ceiling = l.energy(x) + TOL;
    let mut seen = vec![false; l.len()];
    let mut queue = vec![x];
    seen[x] = true;
    while let Some(here) = queue.pop() {
        if l.energy(here) < l.energy(x) - TOL {
            return true;
        }
        for y in l.neighbors(here) {
            let level = l.energy(here) + l.delta(here, y).expect("adjacent");
            if !seen[y] && level <= ceiling {
                seen[y] = true;
                queue.push(y);
            }
        }
    }
    false
}

fn shuffled_identity(seed: u64, n: usize) -> Vec<usize> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    perm
}

/// The same landscape with state x renamed perm[x], preserving the cost
/// mode.
fn relabel(l: &EnergyLandscape, perm: &[usize]) -> EnergyLandscape {
    let mut energy = vec![0.0; l.len()];
    for x in 0..l.len() {
        energy[perm[x]] = l.energy(x);
    }
    let edges: Vec<CostedEdge> = l
        .costed_edges()
        .map(|e| CostedEdge {
            a: perm[e.a],
            b: perm[e.b],
            delta_ab: e.delta_ab,
            delta_ba: e.delta_ba,
        })
        .collect();
    match l.cost_mode() {
        CostMode::Metropolis => {
            EnergyLandscape::metropolis(energy, edges.iter().map(|e| (e.a, e.b)))
        }
        CostMode::Explicit => EnergyLandscape::explicit(energy, edges),
    }
    .expect("relabeled landscape is valid")
}
