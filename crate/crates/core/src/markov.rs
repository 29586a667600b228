//! Monte Carlo engine for Metropolis dynamics.
//!
//! A [`Dynamics`] model exposes a proposal mechanism (the connectivity
//! weights q) and per-move costs; [`simulate_step`] turns that into one
//! Metropolis transition. On top sit hitting-time measurements, exit-time
//! experiments over a temperature grid with an Arrhenius fit of the barrier
//! height, and gate-passage statistics.
//!
//! Reproducibility: every replica draws from its own ChaCha8 stream whose
//! seed is a pure function of (master seed, beta index, replica index), so
//! results are bit-identical regardless of execution order. Aggregation
//! sticks to exact integer arithmetic until the final division for the same
//! reason.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::capacity::ChainSpec;
use crate::fit::fit_line;
use crate::landscape::StateId;

/// Errors raised by simulation configuration and barrier fits.
#[derive(Debug, Error)]
pub enum MarkovError {
    #[error("bad simulation config: {0}")]
    BadConfig(String),
    #[error("barrier fit needs at least 3 uncensored betas, have {0}")]
    TooFewPoints(usize),
}

/// A model the Metropolis sampler can drive: a proposal distribution q and
/// the cost of each proposed move, at a fixed inverse temperature.
pub trait Dynamics: Sized {
    type State: Clone;

    /// Inverse temperature used for acceptance.
    fn beta(&self) -> f64;

    /// The same model at a different inverse temperature.
    fn at_beta(&self, beta: f64) -> Self;

    /// Draws a candidate from q(x, .) and returns it with its transition
    /// cost Delta(x, y). `None` is the lazy remainder of the q row: the
    /// chain holds without an acceptance draw.
    fn propose<R: Rng>(&self, x: &Self::State, rng: &mut R) -> Option<(Self::State, f64)>;
}

/// One Metropolis transition: propose with q, accept with probability
/// exp(-beta Delta); otherwise stay.
pub fn simulate_step<M: Dynamics, R: Rng>(
    model: &M,
    x: &M::State,
    rng: &mut R,
) -> M::State {
    match model.propose(x, rng) {
        Some((y, delta)) => {
            // downhill and flat moves skip the acceptance draw: e^0 = 1
            if delta <= 0.0 || rng.gen::<f64>() < (-model.beta() * delta).exp() {
                y
            } else {
                x.clone()
            }
        }
        None => x.clone(),
    }
}

/// Steps until `target` first holds, 0 when it holds at the start; `None`
/// when `cap` steps pass without a hit.
pub fn hitting_time<M, R, P>(
    model: &M,
    start: &M::State,
    target: P,
    cap: u64,
    rng: &mut R,
) -> Option<u64>
where
    M: Dynamics,
    R: Rng,
    P: Fn(&M::State) -> bool,
{
    assert!(cap >= 1, "step cap must be at least 1");
    if target(start) {
        return Some(0);
    }
    let mut state = start.clone();
    for t in 1..=cap {
        state = simulate_step(model, &state, rng);
        if target(&state) {
            return Some(t);
        }
    }
    None
}

/// Grid, replication, and seeding plan for an exit-time experiment.
#[derive(Debug, Clone, Serialize)]
pub struct SimConfig {
    /// Strictly increasing inverse temperatures.
    pub betas: Vec<f64>,
    /// Replicas per beta, at least 1.
    pub replicas: usize,
    /// Master seed; every replica stream derives from it.
    pub master_seed: u64,
    /// Per-replica step budget, at least 1.
    pub step_cap: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), MarkovError> {
        if self.betas.is_empty() {
            return Err(MarkovError::BadConfig("empty beta list".into()));
        }
        for w in self.betas.windows(2) {
            if !(w[0] < w[1]) {
                return Err(MarkovError::BadConfig(
                    "betas must be strictly increasing".into(),
                ));
            }
        }
        if self.replicas < 1 {
            return Err(MarkovError::BadConfig("need at least one replica".into()));
        }
        if self.step_cap < 1 {
            return Err(MarkovError::BadConfig("step cap must be at least 1".into()));
        }
        Ok(())
    }
}

/// Step budget covering a barrier estimate: 100 e^{beta Gamma}, or 1e9
/// when no estimate is available. Saturates instead of overflowing.
pub fn default_step_cap(gamma_hat: Option<f64>, beta_max: f64) -> u64 {
    match gamma_hat {
        Some(g) => {
            let cap = 100.0 * (beta_max * g).exp();
            if cap >= u64::MAX as f64 {
                u64::MAX
            } else {
                (cap as u64).max(1)
            }
        }
        None => 1_000_000_000,
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the (beta_index, replica) stream: a pure mixing of the master
/// seed and the two indices, independent of scheduling order.
pub fn replica_seed(master: u64, beta_index: usize, replica: usize) -> u64 {
    let a = splitmix64(master);
    let b = splitmix64(a ^ (beta_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    splitmix64(b ^ (replica as u64).wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// The ChaCha8 stream for one replica.
pub fn replica_rng(master: u64, beta_index: usize, replica: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(replica_seed(master, beta_index, replica))
}

/// Exit-time summary at one inverse temperature.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaExitRow {
    pub beta: f64,
    /// Total replicas launched at this beta.
    pub n: usize,
    /// Replicas that hit the step cap; excluded from the averages.
    pub censored: usize,
    pub mean_tau: f64,
    pub median_tau: f64,
    pub ln_mean: f64,
    /// Every replica censored: the row carries no time information and is
    /// skipped by the barrier fit.
    pub all_censored: bool,
}

/// Aggregates one beta's replica outcomes (`None` = censored). Sums are
/// exact integers, so any permutation of `taus` that keeps the multiset
/// yields a bit-identical row.
pub fn aggregate_exit_row(beta: f64, taus: &[Option<u64>]) -> BetaExitRow {
    let n = taus.len();
    let mut finished: Vec<u64> = taus.iter().filter_map(|t| *t).collect();
    finished.sort_unstable();
    let censored = n - finished.len();
    if finished.is_empty() {
        return BetaExitRow {
            beta,
            n,
            censored,
            mean_tau: f64::NAN,
            median_tau: f64::NAN,
            ln_mean: f64::NAN,
            all_censored: true,
        };
    }
    let sum: u128 = finished.iter().map(|&t| t as u128).sum();
    let mean_tau = sum as f64 / finished.len() as f64;
    let mid = finished.len() / 2;
    let median_tau = if finished.len() % 2 == 1 {
        finished[mid] as f64
    } else {
        (finished[mid - 1] as f64 + finished[mid] as f64) / 2.0
    };
    BetaExitRow {
        beta,
        n,
        censored,
        mean_tau,
        median_tau,
        ln_mean: mean_tau.ln(),
        all_censored: false,
    }
}

/// Full exit-time experiment output: per-beta rows plus the Arrhenius fit
/// of ln(mean tau) against beta, when at least 3 rows support it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExitTimeStats {
    pub rows: Vec<BetaExitRow>,
    pub slope: Option<f64>,
    pub slope_stderr: Option<f64>,
}

/// Runs `config.replicas` independent replicas at every beta of the grid,
/// measuring the hitting time of `target` from `start`, and fits the
/// exponential barrier from the uncensored rows.
pub fn exit_time_experiment<M, P>(
    model: &M,
    start: &M::State,
    target: P,
    config: &SimConfig,
) -> Result<ExitTimeStats, MarkovError>
where
    M: Dynamics,
    P: Fn(&M::State) -> bool,
{
    config.validate()?;
    let mut rows = Vec::with_capacity(config.betas.len());
    for (bi, &beta) in config.betas.iter().enumerate() {
        let run = model.at_beta(beta);
        let mut taus = vec![None; config.replicas];
        for (r, slot) in taus.iter_mut().enumerate() {
            let mut rng = replica_rng(config.master_seed, bi, r);
            *slot = hitting_time(&run, start, &target, config.step_cap, &mut rng);
        }
        rows.push(aggregate_exit_row(beta, &taus));
    }
    let mut stats = ExitTimeStats { rows, slope: None, slope_stderr: None };
    if let Ok((slope, stderr)) = estimate_barrier(&stats) {
        stats.slope = Some(slope);
        stats.slope_stderr = Some(stderr);
    }
    Ok(stats)
}

/// Least-squares slope of ln(mean tau) against beta over the rows that
/// carry time information, with its standard error.
pub fn estimate_barrier(stats: &ExitTimeStats) -> Result<(f64, f64), MarkovError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for row in &stats.rows {
        if !row.all_censored && row.ln_mean.is_finite() {
            xs.push(row.beta);
            ys.push(row.ln_mean);
        }
    }
    if xs.len() < 3 {
        return Err(MarkovError::TooFewPoints(xs.len()));
    }
    let fit = fit_line(&xs, &ys)
        .ok_or(MarkovError::TooFewPoints(0))?;
    Ok((fit.slope, fit.slope_stderr))
}

/// Outcome of a gate-passage experiment at one inverse temperature.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GatePassage {
    pub beta: f64,
    /// Fraction of all replicas that satisfied the gate predicate strictly
    /// before the target predicate.
    pub fraction: f64,
    pub n: usize,
    /// Replicas that hit neither predicate within the step cap.
    pub censored: usize,
}

/// Measures how often trajectories from `start` touch the gate before the
/// target. A start inside the gate counts as an immediate passage; a start
/// inside the target (but not the gate) as an immediate miss.
pub fn gate_passage_experiment<M, G, P>(
    model: &M,
    start: &M::State,
    gate: G,
    target: P,
    beta: f64,
    replicas: usize,
    seed: u64,
    cap: u64,
) -> GatePassage
where
    M: Dynamics,
    G: Fn(&M::State) -> bool,
    P: Fn(&M::State) -> bool,
{
    assert!(replicas >= 1, "need at least one replica");
    assert!(cap >= 1, "step cap must be at least 1");
    let run = model.at_beta(beta);
    let mut hits = 0usize;
    let mut censored = 0usize;
    for r in 0..replicas {
        let mut rng = replica_rng(seed, 0, r);
        if gate(start) {
            hits += 1;
            continue;
        }
        if target(start) {
            continue;
        }
        let mut state = start.clone();
        let mut outcome = None;
        for _ in 0..cap {
            state = simulate_step(&run, &state, &mut rng);
            if gate(&state) {
                outcome = Some(true);
                break;
            }
            if target(&state) {
                outcome = Some(false);
                break;
            }
        }
        match outcome {
            Some(true) => hits += 1,
            Some(false) => {}
            None => censored += 1,
        }
    }
    GatePassage {
        beta,
        fraction: hits as f64 / replicas as f64,
        n: replicas,
        censored,
    }
}

/// The explicit-landscape chain walks state ids; proposals follow the
/// per-edge weights, with the row remainder as a lazy hold.
impl<'a> Dynamics for ChainSpec<'a> {
    type State = StateId;

    fn beta(&self) -> f64 {
        ChainSpec::beta(self)
    }

    fn at_beta(&self, beta: f64) -> Self {
        self.with_beta(beta)
    }

    fn propose<R: Rng>(&self, &x: &StateId, rng: &mut R) -> Option<(StateId, f64)> {
        let landscape = self.landscape();
        match self.uniform_q() {
            Some(q) => {
                // q = 1/slots exactly; slots beyond the degree are holds
                let slots = (1.0 / q).round() as usize;
                let k = rng.gen_range(0..slots);
                if k < landscape.degree(x) {
                    let (nbr, idx) = landscape.adjacency_entry(x, k);
                    Some((nbr, self.edge_cost(x, idx)))
                } else {
                    None
                }
            }
            None => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for k in 0..landscape.degree(x) {
                    let (nbr, idx) = landscape.adjacency_entry(x, k);
                    acc += self.q_edges()[idx];
                    if u < acc {
                        return Some((nbr, self.edge_cost(x, idx)));
                    }
                }
                None
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::{build_chain, gibbs_measure, QWeights};
    use crate::landscape::EnergyLandscape;

    // toy model: always proposes the same move at a fixed cost
    struct FixedMove {
        beta: f64,
        cost: f64,
    }

    impl Dynamics for FixedMove {
        type State = u8;
        fn beta(&self) -> f64 {
            self.beta
        }
        fn at_beta(&self, beta: f64) -> Self {
            FixedMove { beta, cost: self.cost }
        }
        fn propose<R: Rng>(&self, x: &u8, _rng: &mut R) -> Option<(u8, f64)> {
            Some((1 - x, self.cost))
        }
    }

    fn chain5() -> EnergyLandscape {
        EnergyLandscape::metropolis(
            vec![3.0, 10.0, 1.0, 8.0, 0.0],
            [(0, 1), (1, 2), (2, 3), (3, 4)],
        )
        .unwrap()
    }

    #[test]
    fn flat_moves_always_accepted() {
        let m = FixedMove { beta: 5.0, cost: 0.0 };
        let mut rng = replica_rng(1, 0, 0);
        for _ in 0..100 {
            assert_eq!(simulate_step(&m, &0, &mut rng), 1);
        }
        // beta = 0 accepts everything, even uphill
        let m = FixedMove { beta: 0.0, cost: 9.0 };
        for _ in 0..100 {
            assert_eq!(simulate_step(&m, &0, &mut rng), 1);
        }
    }

    #[test]
    fn acceptance_frequency_matches_boltzmann() {
        let m = FixedMove { beta: 1.0, cost: 1.0 };
        let mut rng = replica_rng(7, 0, 0);
        let trials = 100_000;
        let mut accepted = 0;
        for _ in 0..trials {
            if simulate_step(&m, &0, &mut rng) == 1 {
                accepted += 1;
            }
        }
        let p = (-1.0f64).exp();
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        let freq = accepted as f64 / trials as f64;
        assert!(
            (freq - p).abs() <= 3.0 * sigma,
            "freq {freq} vs p {p} (3 sigma {})",
            3.0 * sigma
        );
    }

    #[test]
    fn hitting_time_basics() {
        let l = chain5();
        let c = build_chain(&l, &QWeights::default(), 1.0).unwrap();
        let mut rng = replica_rng(3, 0, 0);
        // target already satisfied
        assert_eq!(hitting_time(&c, &2, |&s| s == 2, 10, &mut rng), Some(0));
        // unreachable predicate censors at the cap
        assert_eq!(hitting_time(&c, &2, |&s| s == 99, 10, &mut rng), None);
    }

    #[test]
    fn geometric_hitting_law() {
        // two states, uphill step of 1 at beta 1: success probability
        // q e^{-beta} per step with q = 1, so the mean is e
        let l = EnergyLandscape::metropolis(vec![0.0, 1.0], [(0, 1)]).unwrap();
        let c = build_chain(&l, &QWeights::default(), 1.0).unwrap();
        let replicas = 4000;
        let mut total = 0u64;
        for r in 0..replicas {
            let mut rng = replica_rng(11, 0, r);
            total += hitting_time(&c, &0, |&s| s == 1, 1_000_000, &mut rng).unwrap();
        }
        let mean = total as f64 / replicas as f64;
        let expected = 1.0f64.exp();
        assert!(
            (mean - expected).abs() / expected <= 0.1,
            "mean {mean} vs {expected}"
        );
    }

    #[test]
    fn exit_slope_recovers_relaxation_height() {
        let l = chain5();
        let gamma = l.relaxation_analysis().unwrap().gamma_m.unwrap();
        assert_eq!(gamma, 7.0);
        let c = build_chain(&l, &QWeights::default(), 1.0).unwrap();
        let config = SimConfig {
            betas: vec![1.0, 1.25, 1.5, 1.75, 2.0],
            replicas: 100,
            master_seed: 2024,
            step_cap: default_step_cap(Some(gamma), 2.0),
        };
        let stats = exit_time_experiment(&c, &0, |&s| s == 4, &config).unwrap();
        for row in &stats.rows {
            assert_eq!(row.n, 100);
            assert!(!row.all_censored);
        }
        let slope = stats.slope.unwrap();
        assert!(
            (slope - gamma).abs() / gamma <= 0.10,
            "slope {slope} vs {gamma}"
        );
    }

    #[test]
    fn experiment_is_deterministic() {
        let l = chain5();
        let c = build_chain(&l, &QWeights::default(), 1.0).unwrap();
        let config = SimConfig {
            betas: vec![0.5, 0.75, 1.0],
            replicas: 20,
            master_seed: 99,
            step_cap: 1_000_000,
        };
        let a = exit_time_experiment(&c, &0, |&s| s == 4, &config).unwrap();
        let b = exit_time_experiment(&c, &0, |&s| s == 4, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn aggregation_ignores_replica_order() {
        let l = chain5();
        let c = build_chain(&l, &QWeights::default(), 1.0).unwrap();
        let config = SimConfig {
            betas: vec![1.0],
            replicas: 32,
            master_seed: 5,
            step_cap: 1_000_000,
        };
        let stats = exit_time_experiment(&c, &0, |&s| s == 4, &config).unwrap();

        // replay the replicas in reverse scheduling order
        let run = c.at_beta(1.0);
        let mut taus = vec![None; 32];
        for r in (0..32).rev() {
            let mut rng = replica_rng(5, 0, r);
            taus[r] = hitting_time(&run, &0, |&s| s == 4, 1_000_000, &mut rng);
        }
        let row = aggregate_exit_row(1.0, &taus);
        assert_eq!(row, stats.rows[0]);
    }

    #[test]
    fn all_censored_beta_is_flagged_and_excluded() {
        let l = chain5();
        let c = build_chain(&l, &QWeights::default(), 1.0).unwrap();
        let config = SimConfig {
            betas: vec![3.0],
            replicas: 10,
            master_seed: 1,
            step_cap: 5,
        };
        let stats = exit_time_experiment(&c, &0, |&s| s == 4, &config).unwrap();
        assert!(stats.rows[0].all_censored);
        assert_eq!(stats.rows[0].censored, 10);
        assert!(stats.slope.is_none());
        assert!(matches!(
            estimate_barrier(&stats),
            Err(MarkovError::TooFewPoints(0))
        ));
    }

    #[test]
    fn barrier_fit_on_synthetic_data() {
        // ln tau = 7 beta + gaussian noise of sigma 0.05
        let betas = [1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0];
        let mut rng = replica_rng(42, 0, 0);
        let rows: Vec<BetaExitRow> = betas
            .iter()
            .map(|&beta| {
                // Box-Muller from two uniform draws
                let (u1, u2): (f64, f64) = (rng.gen(), rng.gen());
                let noise =
                    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos() * 0.05;
                let mean = (7.0 * beta + noise).exp();
                BetaExitRow {
                    beta,
                    n: 100,
                    censored: 0,
                    mean_tau: mean,
                    median_tau: mean,
                    ln_mean: mean.ln(),
                    all_censored: false,
                }
            })
            .collect();
        let stats = ExitTimeStats { rows, slope: None, slope_stderr: None };
        let (slope, stderr) = estimate_barrier(&stats).unwrap();
        assert!((slope - 7.0).abs() <= 0.1, "slope {slope}");
        assert!(stderr < 0.1);

        // constant tau fits a flat line
        let flat: Vec<BetaExitRow> = [1.0, 2.0, 3.0]
            .iter()
            .map(|&beta| BetaExitRow {
                beta,
                n: 1,
                censored: 0,
                mean_tau: 50.0,
                median_tau: 50.0,
                ln_mean: 50.0f64.ln(),
                all_censored: false,
            })
            .collect();
        let stats = ExitTimeStats { rows: flat, slope: None, slope_stderr: None };
        let (slope, _) = estimate_barrier(&stats).unwrap();
        assert_eq!(slope, 0.0);

        // two points are not enough
        let short = ExitTimeStats {
            rows: vec![
                BetaExitRow {
                    beta: 1.0,
                    n: 1,
                    censored: 0,
                    mean_tau: 2.0,
                    median_tau: 2.0,
                    ln_mean: 2.0f64.ln(),
                    all_censored: false,
                },
                BetaExitRow {
                    beta: 2.0,
                    n: 1,
                    censored: 0,
                    mean_tau: 4.0,
                    median_tau: 4.0,
                    ln_mean: 4.0f64.ln(),
                    all_censored: false,
                },
            ],
            slope: None,
            slope_stderr: None,
        };
        assert!(matches!(
            estimate_barrier(&short),
            Err(MarkovError::TooFewPoints(2))
        ));
    }

    #[test]
    fn config_validation() {
        let base = SimConfig {
            betas: vec![1.0, 2.0],
            replicas: 1,
            master_seed: 0,
            step_cap: 10,
        };
        assert!(base.validate().is_ok());
        let mut c = base.clone();
        c.betas = vec![2.0, 1.0];
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.betas.clear();
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.replicas = 0;
        assert!(c.validate().is_err());
        let mut c = base;
        c.step_cap = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn default_caps() {
        assert_eq!(default_step_cap(None, 5.0), 1_000_000_000);
        let cap = default_step_cap(Some(7.0), 2.0);
        assert_eq!(cap, (100.0 * 14.0f64.exp()) as u64);
        assert_eq!(default_step_cap(Some(1000.0), 10.0), u64::MAX);
    }

    #[test]
    fn gate_passage_structure_on_path() {
        let l = chain5();
        let c = build_chain(&l, &QWeights::default(), 1.5).unwrap();
        // gate at the start: immediate passage
        let g = gate_passage_experiment(&c, &0, |&s| s == 0, |&s| s == 4, 1.5, 50, 8, 100);
        assert_eq!(g.fraction, 1.0);
        // on a path every crossing passes the saddle state 1
        let g = gate_passage_experiment(
            &c,
            &0,
            |&s| s == 1,
            |&s| s == 4,
            1.5,
            50,
            8,
            100_000_000,
        );
        assert_eq!(g.fraction, 1.0);
        assert_eq!(g.censored, 0);
        // state 3 lies beyond target 2, so it can never come first
        let g = gate_passage_experiment(
            &c,
            &0,
            |&s| s == 3,
            |&s| s == 2,
            1.5,
            50,
            8,
            100_000_000,
        );
        assert_eq!(g.fraction, 0.0);
    }

    #[test]
    fn occupation_matches_gibbs_on_fast_chain() {
        // small barriers so the walk decorrelates within a few steps; the
        // occupation of every 100th step is then effectively independent
        let l = EnergyLandscape::metropolis(
            vec![0.0, 0.5, 0.2, 0.8, 0.3],
            [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)],
        )
        .unwrap();
        let beta = 2.0;
        let c = build_chain(&l, &QWeights::default(), beta).unwrap();
        let mu = gibbs_measure(&l, beta).unwrap();

        let mut rng = replica_rng(123, 0, 0);
        let mut state: StateId = 0;
        let burn_in = 100_000u64;
        for _ in 0..burn_in {
            state = simulate_step(&c, &state, &mut rng);
        }
        let thin = 100;
        let samples = (10_000_000 - burn_in) / thin;
        let mut counts = [0u64; 5];
        for _ in 0..samples {
            for _ in 0..thin {
                state = simulate_step(&c, &state, &mut rng);
            }
            counts[state] += 1;
        }
        let n = samples as f64;
        for x in 0..5 {
            let p = mu.prob(x);
            let sigma = (n * p * (1.0 - p)).sqrt();
            let diff = (counts[x] as f64 - n * p).abs();
            assert!(
                diff <= 3.0 * sigma,
                "state {x}: count {} expected {} (3 sigma {})",
                counts[x],
                n * p,
                3.0 * sigma
            );
        }
    }
}
