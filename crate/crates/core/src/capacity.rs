//! Potential theory for the finite-temperature Metropolis chain.
//!
//! A landscape plus symmetric connectivity weights q and an inverse
//! temperature beta determine a reversible Markov chain with off-diagonal
//! transition probabilities
//!
//! ```text
//! p_beta(x, y) = q(x, y) exp(-beta Delta(x, y))
//! ```
//!
//! and the holding probability p_beta(x, x) absorbing the remainder of the
//! row. The chain is reversible for the Gibbs measure mu_beta, and the pair
//! (mu_beta, p_beta) carries the usual potential-theoretic toolkit:
//! Dirichlet forms, equilibrium potentials, capacities between sets, hitting
//! valleys, and exact mean hitting times.
//!
//! Numerics: transition rates always enter linear systems through the
//! per-edge communication level `H(x) + Delta(x, y)`, which is stored once
//! per undirected edge, so detailed balance is exact by construction. All
//! diagonal entries are built as direct sums of positive off-diagonal rates;
//! forming them by subtracting holding probabilities from 1 loses every
//! significant digit once beta is large. Quantities that would overflow or
//! underflow (partition functions, capacity ratios) are assembled in the log
//! domain, where the partition function cancels wherever it can.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::landscape::{EnergyLandscape, LandscapeError, StateId};

/// Interior sizes up to this bound use a direct dense factorization;
/// larger systems fall back to conjugate gradients.
pub const DENSE_LIMIT: usize = 2000;

/// Relative residual target for iterative solves.
const CG_TOL: f64 = 1e-12;

/// Absolute tie tolerance when assigning states to hitting valleys.
pub const VALLEY_TIE_TOL: f64 = 1e-12;

/// Errors raised by chain construction and potential-theoretic solves.
#[derive(Debug, Error)]
pub enum CapacityError {
    #[error(transparent)]
    Landscape(#[from] LandscapeError),
    #[error("beta must be positive")]
    NonPositiveBeta,
    #[error("bad connectivity weights: {0}")]
    BadQ(String),
    #[error("A and B must be disjoint")]
    Overlap,
    #[error("linear solve failed: {0}")]
    Singular(String),
    #[error("bad beta grid: {0}")]
    BadGrid(String),
    #[error("ratio denominator undefined for |M| = 1")]
    SingletonM,
    #[error("M must be a proper subset of the state space")]
    FullM,
    #[error("state {0} is not a member of M")]
    NotInM(StateId),
}

/// Choice of symmetric connectivity weights q on the support graph.
#[derive(Debug, Clone, Default)]
pub enum QWeights {
    /// `q(x, y) = 1 / max_degree` on every edge. Rows at full-degree states
    /// sum to exactly 1 off the diagonal; lower-degree states park the
    /// remainder in the holding probability.
    #[default]
    UniformByMaxDegree,
    /// One weight per canonical undirected edge, aligned with the
    /// landscape's edge order.
    PerEdge(Vec<f64>),
}

impl QWeights {
    /// Builds per-edge weights from (x, y, q) triples, rejecting pairs that
    /// are not edges of the landscape.
    pub fn from_pairs(
        landscape: &EnergyLandscape,
        pairs: &[(StateId, StateId, f64)],
    ) -> Result<Self, CapacityError> {
        let mut q = vec![0.0; landscape.n_edges()];
        for &(x, y, w) in pairs {
            let idx = landscape
                .edge_index(x, y)
                .ok_or_else(|| CapacityError::BadQ(format!("({x},{y}) is not an edge")))?;
            q[idx] = w;
        }
        Ok(QWeights::PerEdge(q))
    }
}

/// The Metropolis-type chain at a fixed inverse temperature: a landscape,
/// symmetric connectivity weights, and beta. Immutable once built.
#[derive(Debug)]
pub struct ChainSpec<'a> {
    landscape: &'a EnergyLandscape,
    beta: f64,
    q_edge: Vec<f64>,
    /// Set when every edge carries the same weight; lets samplers propose
    /// in O(1).
    uniform_q: Option<f64>,
}

/// Builds the chain and validates stochasticity and detailed balance.
pub fn build_chain<'a>(
    landscape: &'a EnergyLandscape,
    weights: &QWeights,
    beta: f64,
) -> Result<ChainSpec<'a>, CapacityError> {
    if !(beta > 0.0) {
        return Err(CapacityError::NonPositiveBeta);
    }
    landscape.require_valid()?;
    let n = landscape.len();
    let (q_edge, uniform_q) = match weights {
        QWeights::UniformByMaxDegree => {
            let d = landscape.max_degree().max(1);
            let q = 1.0 / d as f64;
            (vec![q; landscape.n_edges()], Some(q))
        }
        QWeights::PerEdge(q) => {
            if q.len() != landscape.n_edges() {
                return Err(CapacityError::BadQ(format!(
                    "{} weights for {} edges",
                    q.len(),
                    landscape.n_edges()
                )));
            }
            for (i, &w) in q.iter().enumerate() {
                if !w.is_finite() || w <= 0.0 {
                    return Err(CapacityError::BadQ(format!(
                        "weight {w} on edge {i} must be finite and positive"
                    )));
                }
            }
            (q.clone(), None)
        }
    };
    let chain = ChainSpec { landscape, beta, q_edge, uniform_q };

    // stochasticity: off-diagonal rows must fit under 1 so the holding
    // probability is nonnegative
    for x in 0..n {
        let row: f64 = chain.row_q_sum(x);
        if row > 1.0 + 1e-12 {
            return Err(CapacityError::BadQ(format!(
                "row sum {row} at state {x} exceeds 1"
            )));
        }
        if chain.exit_rate(x) > 1.0 + 1e-12 {
            return Err(CapacityError::BadQ(format!(
                "q inconsistent with Delta: negative holding probability at {x}"
            )));
        }
    }
    let residual = chain.detailed_balance_residual();
    if residual > 1e-12 {
        return Err(CapacityError::BadQ(format!(
            "detailed balance residual {residual:.3e} exceeds 1e-12"
        )));
    }
    Ok(chain)
}

impl<'a> ChainSpec<'a> {
    pub fn landscape(&self) -> &'a EnergyLandscape {
        self.landscape
    }

    /// The same landscape and connectivity weights at another temperature.
    pub fn with_beta(&self, beta: f64) -> ChainSpec<'a> {
        assert!(beta > 0.0, "beta must be positive");
        ChainSpec {
            landscape: self.landscape,
            beta,
            q_edge: self.q_edge.clone(),
            uniform_q: self.uniform_q,
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n(&self) -> usize {
        self.landscape.len()
    }

    /// Per-edge connectivity weights, aligned with the landscape edges.
    pub fn q_edges(&self) -> &[f64] {
        &self.q_edge
    }

    /// The common edge weight, when uniform.
    pub fn uniform_q(&self) -> Option<f64> {
        self.uniform_q
    }

    /// Transition cost out of x along edge `idx`, read off the canonical
    /// edge level so both directions see one exact barrier height.
    pub fn edge_cost(&self, x: StateId, idx: usize) -> f64 {
        let (_, level) = self.landscape.edge_endpoints_level(idx);
        (level - self.landscape.energy(x)).max(0.0)
    }

    /// Off-diagonal transition probability; 0 when (x, y) is not an edge.
    pub fn p(&self, x: StateId, y: StateId) -> f64 {
        match self.landscape.edge_index(x, y) {
            Some(idx) => self.rate(x, idx),
            None => 0.0,
        }
    }

    /// Holding probability p(x, x).
    pub fn hold(&self, x: StateId) -> f64 {
        (1.0 - self.exit_rate(x)).max(0.0)
    }

    // q(x, y) e^{-beta Delta(x, y)} for the edge with index idx
    fn rate(&self, x: StateId, idx: usize) -> f64 {
        self.q_edge[idx] * (-self.beta * self.edge_cost(x, idx)).exp()
    }

    /// Total probability of leaving x in one step, as a direct sum of the
    /// positive edge rates.
    pub fn exit_rate(&self, x: StateId) -> f64 {
        self.landscape
            .incident_edges(x)
            .map(|idx| self.rate(x, idx))
            .sum()
    }

    fn row_q_sum(&self, x: StateId) -> f64 {
        self.landscape.incident_edges(x).map(|idx| self.q_edge[idx]).sum()
    }

    /// Largest relative asymmetry of the stationary flux
    /// mu(x) p(x, y) = mu(y) p(y, x) over the edges. The partition function
    /// cancels, so this works at any beta.
    pub fn detailed_balance_residual(&self) -> f64 {
        let h = self.landscape.energies();
        let href = h.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut worst = 0.0f64;
        for (idx, e) in self.landscape.edge_triples().enumerate() {
            let (a, b, level) = e;
            let fa = self.q_edge[idx]
                * (-self.beta * (h[a] - href)).exp()
                * (-self.beta * (level - h[a]).max(0.0)).exp();
            let fb = self.q_edge[idx]
                * (-self.beta * (h[b] - href)).exp()
                * (-self.beta * (level - h[b]).max(0.0)).exp();
            let scale = fa.max(fb);
            if scale > 0.0 {
                worst = worst.max((fa - fb).abs() / scale);
            }
        }
        worst
    }
}

/// The Gibbs measure mu_beta(x) = exp(-beta H(x)) / Z_beta.
#[derive(Debug, Clone)]
pub struct GibbsMeasure {
    beta: f64,
    probs: Vec<f64>,
    log_probs: Vec<f64>,
    log_z: f64,
}

/// Computes the Gibbs measure with log-sum-exp stabilization.
pub fn gibbs_measure(
    landscape: &EnergyLandscape,
    beta: f64,
) -> Result<GibbsMeasure, CapacityError> {
    if !(beta > 0.0) {
        return Err(CapacityError::NonPositiveBeta);
    }
    let logits: Vec<f64> = landscape.energies().iter().map(|h| -beta * h).collect();
    let log_z = log_sum_exp(&logits);
    let log_probs: Vec<f64> = logits.iter().map(|l| l - log_z).collect();
    let probs: Vec<f64> = log_probs.iter().map(|l| l.exp()).collect();
    Ok(GibbsMeasure { beta, probs, log_probs, log_z })
}

impl GibbsMeasure {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn prob(&self, x: StateId) -> f64 {
        self.probs[x]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn log_prob(&self, x: StateId) -> f64 {
        self.log_probs[x]
    }

    /// log Z_beta.
    pub fn log_partition(&self) -> f64 {
        self.log_z
    }

    /// Total mass of a set of states.
    pub fn mass_of(&self, set: &[StateId]) -> f64 {
        set.iter().map(|&x| self.probs[x]).sum()
    }
}

fn log_sum_exp(vals: &[f64]) -> f64 {
    let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = vals.iter().map(|v| (v - m).exp()).sum();
    m + s.ln()
}

/// The Dirichlet form E(h) = 1/2 sum_{x,y} mu(x) p(x,y) (h(x) - h(y))^2.
///
/// By detailed balance the two directed terms of each edge are equal, so
/// the sum collapses to one term per undirected edge with weight
/// q_e exp(-beta level_e) / Z.
pub fn dirichlet_form(chain: &ChainSpec, h: &[f64]) -> f64 {
    assert_eq!(h.len(), chain.n(), "h must assign a value to every state");
    let beta = chain.beta();
    let logits: Vec<f64> = chain
        .landscape()
        .energies()
        .iter()
        .map(|e| -beta * e)
        .collect();
    let log_z = log_sum_exp(&logits);
    let mut total = 0.0;
    for (idx, (a, b, level)) in chain.landscape().edge_triples().enumerate() {
        let dh = h[a] - h[b];
        if dh != 0.0 {
            total += chain.q_edges()[idx] * (-beta * level - log_z).exp() * dh * dh;
        }
    }
    total
}

/// Result of a capacity computation between two disjoint sets.
#[derive(Debug, Clone, Serialize)]
pub struct CapacityResult {
    #[serde(rename = "A")]
    pub a: Vec<StateId>,
    #[serde(rename = "B")]
    pub b: Vec<StateId>,
    pub beta: f64,
    pub capacity: f64,
    pub log_capacity: f64,
    /// Equilibrium potential h*, one value per state.
    pub potential: Vec<f64>,
}

/// Equilibrium potential h*(x) = P_x(tau_A < tau_B), solved from the
/// harmonicity equations in symmetric (conductance) form.
///
/// The interior system uses edge conductances w_e = q_e exp(-beta (level_e -
/// shift)); its diagonal is the direct sum of the incident conductances.
/// Dense interiors are factorized by Cholesky, large ones solved by
/// Jacobi-preconditioned conjugate gradients.
pub fn equilibrium_potential(
    chain: &ChainSpec,
    a: &[StateId],
    b: &[StateId],
) -> Result<Vec<f64>, CapacityError> {
    let (amask, bmask) = boundary_masks(chain, a, b)?;
    let sys = ConductanceSystem::new(chain, &amask, &bmask)?;
    sys.solve_potential()
}

/// P_x(tau_A < tau_B) from the absorbing jump chain: the self-loop is
/// removed, rows are normalized by the exit rate, and the resulting
/// unsymmetric system (I - P_hat) h = P_hat(., A) is solved directly.
/// Independent formulation used to cross-check [`equilibrium_potential`].
pub fn absorbing_probability(
    chain: &ChainSpec,
    a: &[StateId],
    b: &[StateId],
) -> Result<Vec<f64>, CapacityError> {
    let (amask, bmask) = boundary_masks(chain, a, b)?;
    let sys = ConductanceSystem::new(chain, &amask, &bmask)?;
    sys.solve_absorbing()
}

/// Capacity CAP_beta(A, B) as the Dirichlet form of the equilibrium
/// potential, with the potential and its boundary data attached.
pub fn capacity_of(
    chain: &ChainSpec,
    a: &[StateId],
    b: &[StateId],
) -> Result<CapacityResult, CapacityError> {
    let h = equilibrium_potential(chain, a, b)?;
    let capacity = dirichlet_form(chain, &h);
    let mut a_sorted = a.to_vec();
    a_sorted.sort_unstable();
    a_sorted.dedup();
    let mut b_sorted = b.to_vec();
    b_sorted.sort_unstable();
    b_sorted.dedup();
    Ok(CapacityResult {
        a: a_sorted,
        b: b_sorted,
        beta: chain.beta(),
        capacity,
        log_capacity: capacity.ln(),
        potential: h,
    })
}

// log of sum_e q_e (h(a)-h(b))^2 e^{-beta level_e}; the Z-free core of a
// capacity, safe at any beta
fn log_capacity_unnormalized(chain: &ChainSpec, h: &[f64]) -> f64 {
    let beta = chain.beta();
    let terms: Vec<f64> = chain
        .landscape()
        .edge_triples()
        .enumerate()
        .filter_map(|(idx, (a, b, level))| {
            let dh = h[a] - h[b];
            if dh == 0.0 {
                None
            } else {
                Some((chain.q_edges()[idx] * dh * dh).ln() - beta * level)
            }
        })
        .collect();
    log_sum_exp(&terms)
}

/// One grid point of [`easy_bounds_probe`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProbeRow {
    pub beta: f64,
    pub g: f64,
    pub log_g: f64,
}

/// Output of [`easy_bounds_probe`]: the scaled capacities along the grid
/// and the boundedness diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeResult {
    /// Communication height between the probed sets.
    pub phi: f64,
    pub rows: Vec<ProbeRow>,
    pub min_g: f64,
    pub max_g: f64,
    /// |d log g / d beta| estimated from the last two grid points.
    pub final_slope: f64,
}

/// Tracks g(beta) = exp(beta Phi(A,B)) Z_beta CAP_beta(A,B) along a beta
/// grid. The product is assembled in the log domain, where Z cancels
/// against the normalization of CAP, so the probe is stable at any beta.
/// Sharp upper and lower bounds pin g between positive constants, so the
/// diagnostic slope at the top of the grid should be near zero.
pub fn easy_bounds_probe(
    landscape: &EnergyLandscape,
    weights: &QWeights,
    a: &[StateId],
    b: &[StateId],
    beta_grid: &[f64],
) -> Result<ProbeResult, CapacityError> {
    if beta_grid.len() < 4 {
        return Err(CapacityError::BadGrid("need at least 4 grid points".into()));
    }
    for w in beta_grid.windows(2) {
        if !(w[0] < w[1]) {
            return Err(CapacityError::BadGrid(
                "grid must be strictly increasing".into(),
            ));
        }
    }
    let phi = landscape.communication_height_sets(a, b)?;
    let mut rows = Vec::with_capacity(beta_grid.len());
    for &beta in beta_grid {
        let chain = build_chain(landscape, weights, beta)?;
        let h = equilibrium_potential(&chain, a, b)?;
        // beta*Phi + log(Z * CAP); Z cancels inside log_capacity_unnormalized
        let log_g = beta * phi + log_capacity_unnormalized(&chain, &h);
        rows.push(ProbeRow { beta, g: log_g.exp(), log_g });
    }
    let finite: Vec<f64> = rows
        .iter()
        .map(|r| r.g)
        .filter(|g| g.is_finite() && *g > 0.0)
        .collect();
    let min_g = finite.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_g = finite.iter().cloned().fold(0.0f64, f64::max);
    let last = &rows[rows.len() - 2..];
    let final_slope = ((last[1].log_g - last[0].log_g) / (last[1].beta - last[0].beta)).abs();
    Ok(ProbeResult { phi, rows, min_g, max_g, final_slope })
}

/// log of the metastability ratio
/// max_{x not in M} mu(x)/CAP(x, M)  over  min_{x in M} mu(x)/CAP(x, M\{x}).
///
/// Both quotients are formed in the log domain; the partition function
/// cancels between mu and CAP, so the ratio is stable at any beta.
pub fn log_pta_ratio(
    landscape: &EnergyLandscape,
    weights: &QWeights,
    m: &[StateId],
    beta: f64,
) -> Result<f64, CapacityError> {
    let n = landscape.len();
    let mset = checked_set(landscape, m, "M")?;
    if mset.len() == 1 {
        return Err(CapacityError::SingletonM);
    }
    if mset.len() == n {
        return Err(CapacityError::FullM);
    }
    let chain = build_chain(landscape, weights, beta)?;
    let h_energy = landscape.energies();

    // log( mu(x) / CAP(x, T) ) up to the common log Z, which cancels in the
    // final ratio: -beta H(x) - log( Z CAP )
    let log_quotient = |x: StateId, target: &[StateId]| -> Result<f64, CapacityError> {
        let h = equilibrium_potential(&chain, &[x], target)?;
        Ok(-beta * h_energy[x] - log_capacity_unnormalized(&chain, &h))
    };

    let mut numer = f64::NEG_INFINITY;
    for x in 0..n {
        if !mset.contains(&x) {
            numer = numer.max(log_quotient(x, &mset)?);
        }
    }
    let mut denom = f64::INFINITY;
    for &x in &mset {
        let rest: Vec<StateId> = mset.iter().cloned().filter(|&y| y != x).collect();
        denom = denom.min(log_quotient(x, &rest)?);
    }
    Ok(numer - denom)
}

/// The metastability ratio itself; small values certify that M captures
/// every deep well. See [`log_pta_ratio`] for the stable core.
pub fn pta_ratio(
    landscape: &EnergyLandscape,
    weights: &QWeights,
    m: &[StateId],
    beta: f64,
) -> Result<f64, CapacityError> {
    Ok(log_pta_ratio(landscape, weights, m, beta)?.exp())
}

/// The valley of x within M: states whose chance of being absorbed at x,
/// among all of M, is maximal (ties within [`VALLEY_TIE_TOL`] kept).
pub fn valley_of(
    chain: &ChainSpec,
    m: &[StateId],
    x: StateId,
) -> Result<Vec<StateId>, CapacityError> {
    let mset = checked_set(chain.landscape(), m, "M")?;
    if !mset.contains(&x) {
        return Err(CapacityError::NotInM(x));
    }
    // phi[k][y] = P_y(absorbed at m_k), one absorbing solve per member,
    // sharing a single factorization of the interior jump system
    let phi = absorption_profile(chain, &mset)?;
    let k_x = mset.iter().position(|&z| z == x).expect("x checked in M");
    let mut valley = Vec::new();
    for y in 0..chain.n() {
        let best = (0..mset.len())
            .map(|k| phi[k][y])
            .fold(f64::NEG_INFINITY, f64::max);
        if phi[k_x][y] >= best - VALLEY_TIE_TOL {
            valley.push(y);
        }
    }
    Ok(valley)
}

/// Exact and estimated mean hitting time of J from x.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MeanHitting {
    /// E_x[tau_J] from the absorption-time linear system.
    pub exact: f64,
    /// mu(A(x)) / CAP(x, J), the potential-theoretic approximation.
    pub estimate: f64,
    /// exact / estimate; approaches 1 as beta grows.
    pub ratio: f64,
}

/// Mean hitting time of J from x, both exactly and through the capacity
/// estimate mu(A(x)) / CAP(x, J), where A(x) is the valley of x within
/// J union {x}. For x in J all times are zero.
pub fn mean_hitting_exact(
    chain: &ChainSpec,
    x: StateId,
    j: &[StateId],
) -> Result<MeanHitting, CapacityError> {
    let jset = checked_set(chain.landscape(), j, "J")?;
    chain.landscape().check_state(x)?;
    if jset.contains(&x) {
        return Ok(MeanHitting { exact: 0.0, estimate: 0.0, ratio: 1.0 });
    }
    let exact = mean_absorption_time(chain, &jset)?[x];

    let mut m = jset.clone();
    m.push(x);
    m.sort_unstable();
    let valley = valley_of(chain, &m, x)?;
    let mu = gibbs_measure(chain.landscape(), chain.beta())?;
    let mass = mu.mass_of(&valley);
    let cap = capacity_of(chain, &[x], &jset)?.capacity;
    let estimate = mass / cap;
    Ok(MeanHitting { exact, estimate, ratio: exact / estimate })
}

// ---------------------------------------------------------------------------
// shared linear-system plumbing

fn checked_set(
    landscape: &EnergyLandscape,
    set: &[StateId],
    name: &'static str,
) -> Result<Vec<StateId>, CapacityError> {
    if set.is_empty() {
        return Err(LandscapeError::EmptySet(name).into());
    }
    for &x in set {
        landscape.check_state(x)?;
    }
    let mut sorted = set.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    Ok(sorted)
}

fn boundary_masks(
    chain: &ChainSpec,
    a: &[StateId],
    b: &[StateId],
) -> Result<(Vec<bool>, Vec<bool>), CapacityError> {
    let a = checked_set(chain.landscape(), a, "A")?;
    let b = checked_set(chain.landscape(), b, "B")?;
    let mut amask = vec![false; chain.n()];
    let mut bmask = vec![false; chain.n()];
    for &x in &a {
        amask[x] = true;
    }
    for &x in &b {
        if amask[x] {
            return Err(CapacityError::Overlap);
        }
        bmask[x] = true;
    }
    Ok((amask, bmask))
}

// Interior of a boundary-value problem on the chain: compacted indices,
// per-edge conductances, and the two dense/iterative solve routes.
struct ConductanceSystem<'a, 'b> {
    chain: &'b ChainSpec<'a>,
    // states in A hold potential 1; states in B are absent and hold 0
    amask: &'b [bool],
    interior: Vec<StateId>,
    // position of each state in `interior`, usize::MAX for boundary states
    pos: Vec<usize>,
    // conductance w_e = q_e exp(-beta (level_e - shift)) per edge
    w: Vec<f64>,
    // direct sum of incident conductances per interior state
    diag: Vec<f64>,
}

impl<'a, 'b> ConductanceSystem<'a, 'b> {
    fn new(
        chain: &'b ChainSpec<'a>,
        amask: &'b [bool],
        bmask: &'b [bool],
    ) -> Result<Self, CapacityError> {
        let n = chain.n();
        let interior: Vec<StateId> =
            (0..n).filter(|&x| !amask[x] && !bmask[x]).collect();
        let mut pos = vec![usize::MAX; n];
        for (i, &x) in interior.iter().enumerate() {
            pos[x] = i;
        }
        let beta = chain.beta();
        let shift = chain
            .landscape()
            .edge_triples()
            .map(|(_, _, level)| level)
            .fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = chain
            .landscape()
            .edge_triples()
            .enumerate()
            .map(|(idx, (_, _, level))| {
                chain.q_edges()[idx] * (-beta * (level - shift)).exp()
            })
            .collect();
        let mut diag = vec![0.0; interior.len()];
        for (idx, (a, b, _)) in chain.landscape().edge_triples().enumerate() {
            if pos[a] != usize::MAX {
                diag[pos[a]] += w[idx];
            }
            if pos[b] != usize::MAX {
                diag[pos[b]] += w[idx];
            }
        }
        for (i, &d) in diag.iter().enumerate() {
            if d <= 0.0 {
                return Err(CapacityError::Singular(format!(
                    "all rates out of state {} underflowed at beta {beta}",
                    interior[i]
                )));
            }
        }
        Ok(Self { chain, amask, interior, pos, w, diag })
    }

    fn full_vector(&self, h_int: &[f64]) -> Vec<f64> {
        let mut h = vec![0.0; self.chain.n()];
        for (x, v) in h.iter_mut().enumerate() {
            if self.amask[x] {
                *v = 1.0;
            }
        }
        for (i, &x) in self.interior.iter().enumerate() {
            // clamp solver noise so probabilities stay in [0, 1]
            h[x] = h_int[i].clamp(0.0, 1.0);
        }
        h
    }

    // right-hand side of the conductance-form system: flux into A
    fn rhs_conductance(&self) -> Vec<f64> {
        let mut rhs = vec![0.0; self.interior.len()];
        for (idx, (a, b, _)) in self.chain.landscape().edge_triples().enumerate() {
            if self.pos[a] != usize::MAX && self.amask[b] {
                rhs[self.pos[a]] += self.w[idx];
            }
            if self.pos[b] != usize::MAX && self.amask[a] {
                rhs[self.pos[b]] += self.w[idx];
            }
        }
        rhs
    }

    fn solve_potential(&self) -> Result<Vec<f64>, CapacityError> {
        let ni = self.interior.len();
        if ni == 0 {
            return Ok(self.full_vector(&[]));
        }
        let rhs = self.rhs_conductance();
        let h_int = if ni <= DENSE_LIMIT {
            self.dense_spd_solve(&rhs)?
        } else {
            self.cg_solve(&rhs)?
        };
        Ok(self.full_vector(&h_int))
    }

    fn dense_spd_solve(&self, rhs: &[f64]) -> Result<Vec<f64>, CapacityError> {
        let ni = self.interior.len();
        let mut m = DMatrix::<f64>::zeros(ni, ni);
        for i in 0..ni {
            m[(i, i)] = self.diag[i];
        }
        for (idx, (a, b, _)) in self.chain.landscape().edge_triples().enumerate() {
            let (pa, pb) = (self.pos[a], self.pos[b]);
            if pa != usize::MAX && pb != usize::MAX {
                m[(pa, pb)] -= self.w[idx];
                m[(pb, pa)] -= self.w[idx];
            }
        }
        let b = DVector::from_column_slice(rhs);
        let chol = Cholesky::new(m.clone());
        let lu = if chol.is_none() { Some(m.clone().lu()) } else { None };
        let solve = |v: &DVector<f64>| -> Result<DVector<f64>, CapacityError> {
            match (&chol, &lu) {
                (Some(c), _) => Ok(c.solve(v)),
                (None, Some(l)) => l.solve(v).ok_or_else(|| {
                    CapacityError::Singular("dense factorization failed".into())
                }),
                (None, None) => unreachable!("one factorization is always built"),
            }
        };
        let mut x = solve(&b)?;
        // two rounds of residual correction restore componentwise accuracy
        // lost to the e^{beta(level - shift)} grading of the conductances
        for _ in 0..2 {
            let r = &b - &m * &x;
            x += solve(&r)?;
        }
        Ok(x.as_slice().to_vec())
    }

    // Jacobi-preconditioned conjugate gradients on the conductance system
    fn cg_solve(&self, rhs: &[f64]) -> Result<Vec<f64>, CapacityError> {
        let ni = self.interior.len();
        // compact interior adjacency
        let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); ni];
        for (idx, (a, b, _)) in self.chain.landscape().edge_triples().enumerate() {
            let (pa, pb) = (self.pos[a], self.pos[b]);
            if pa != usize::MAX && pb != usize::MAX {
                adj[pa].push((pb as u32, self.w[idx]));
                adj[pb].push((pa as u32, self.w[idx]));
            }
        }
        let mul = |v: &[f64], out: &mut [f64]| {
            for i in 0..ni {
                let mut acc = self.diag[i] * v[i];
                for &(j, w) in &adj[i] {
                    acc -= w * v[j as usize];
                }
                out[i] = acc;
            }
        };
        let norm_b = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm_b == 0.0 {
            return Ok(vec![0.0; ni]);
        }
        let mut x = vec![0.0; ni];
        let mut r = rhs.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&self.diag).map(|(ri, d)| ri / d).collect();
        let mut p = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut ap = vec![0.0; ni];
        for _ in 0..20 * ni.max(100) {
            mul(&p, &mut ap);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if pap <= 0.0 {
                break;
            }
            let alpha = rz / pap;
            for i in 0..ni {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let norm_r = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm_r <= CG_TOL * norm_b {
                return Ok(x);
            }
            for i in 0..ni {
                z[i] = r[i] / self.diag[i];
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..ni {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(CapacityError::Singular(
            "conjugate gradients did not reach tolerance".into(),
        ))
    }

    // Absorbing jump-chain route: remove self-loops, normalize rows by the
    // exit conductance, and solve the unsymmetric system by LU. Above the
    // dense limit the conductance route's CG is reused; at that scale the
    // two formulations coincide after row scaling anyway.
    fn solve_absorbing(&self) -> Result<Vec<f64>, CapacityError> {
        let ni = self.interior.len();
        if ni == 0 {
            return Ok(self.full_vector(&[]));
        }
        if ni > DENSE_LIMIT {
            let rhs = self.rhs_conductance();
            let h_int = self.cg_solve(&rhs)?;
            return Ok(self.full_vector(&h_int));
        }
        let mut m = DMatrix::<f64>::identity(ni, ni);
        let mut rhs = DVector::<f64>::zeros(ni);
        for (idx, (a, b, _)) in self.chain.landscape().edge_triples().enumerate() {
            for (x, y) in [(a, b), (b, a)] {
                let px = self.pos[x];
                if px == usize::MAX {
                    continue;
                }
                let jump = self.w[idx] / self.diag[px];
                if self.pos[y] != usize::MAX {
                    m[(px, self.pos[y])] -= jump;
                } else if self.amask[y] {
                    rhs[px] += jump;
                }
            }
        }
        let lu = m.clone().lu();
        let mut x = lu
            .solve(&rhs)
            .ok_or_else(|| CapacityError::Singular("absorbing solve failed".into()))?;
        // residual correction, as in the conductance route; the jump matrix
        // mixes O(1) and e^{-beta dH} entries in one row
        for _ in 0..2 {
            let r = &rhs - &m * &x;
            match lu.solve(&r) {
                Some(d) => x += d,
                None => break,
            }
        }
        Ok(self.full_vector(x.as_slice()))
    }
}

// P_y(absorbed at m_k) for every k, from one factorization of the interior
// jump system with |M| right-hand sides.
fn absorption_profile(
    chain: &ChainSpec,
    m: &[StateId],
) -> Result<Vec<Vec<f64>>, CapacityError> {
    let n = chain.n();
    let mut mmask = vec![false; n];
    for &x in m {
        mmask[x] = true;
    }
    let none = vec![false; n];
    let sys = ConductanceSystem::new(chain, &mmask, &none)?;
    let ni = sys.interior.len();
    let k = m.len();

    let mut profiles = vec![vec![0.0; n]; k];
    for (kk, &target) in m.iter().enumerate() {
        profiles[kk][target] = 1.0;
    }
    if ni == 0 {
        return Ok(profiles);
    }
    if ni > DENSE_LIMIT {
        // one CG solve per member on the conductance form
        for (kk, &target) in m.iter().enumerate() {
            let mut rhs = vec![0.0; ni];
            for (idx, (a, b, _)) in chain.landscape().edge_triples().enumerate() {
                if sys.pos[a] != usize::MAX && b == target {
                    rhs[sys.pos[a]] += sys.w[idx];
                }
                if sys.pos[b] != usize::MAX && a == target {
                    rhs[sys.pos[b]] += sys.w[idx];
                }
            }
            let sol = sys.cg_solve(&rhs)?;
            for (i, &x) in sys.interior.iter().enumerate() {
                profiles[kk][x] = sol[i].clamp(0.0, 1.0);
            }
        }
        return Ok(profiles);
    }

    let mut mat = DMatrix::<f64>::identity(ni, ni);
    let mut rhs = DMatrix::<f64>::zeros(ni, k);
    let m_pos: std::collections::HashMap<StateId, usize> =
        m.iter().enumerate().map(|(i, &x)| (x, i)).collect();
    for (idx, (a, b, _)) in chain.landscape().edge_triples().enumerate() {
        for (x, y) in [(a, b), (b, a)] {
            let px = sys.pos[x];
            if px == usize::MAX {
                continue;
            }
            let jump = sys.w[idx] / sys.diag[px];
            if sys.pos[y] != usize::MAX {
                mat[(px, sys.pos[y])] -= jump;
            } else if let Some(&kk) = m_pos.get(&y) {
                rhs[(px, kk)] += jump;
            }
        }
    }
    let solved = mat
        .lu()
        .solve(&rhs)
        .ok_or_else(|| CapacityError::Singular("absorption profile solve failed".into()))?;
    for kk in 0..k {
        for (i, &x) in sys.interior.iter().enumerate() {
            profiles[kk][x] = solved[(i, kk)].clamp(0.0, 1.0);
        }
    }
    Ok(profiles)
}

// E_y[tau_J] for every state, counting lazy steps: the system
// d(x) t(x) - sum_{y interior} p(x,y) t(y) = 1 with d(x) the direct-sum
// exit rate. Probabilities, not conductances, so the entries keep the
// physical time scale.
fn mean_absorption_time(
    chain: &ChainSpec,
    j: &[StateId],
) -> Result<Vec<f64>, CapacityError> {
    let n = chain.n();
    let mut jmask = vec![false; n];
    for &x in j {
        jmask[x] = true;
    }
    let interior: Vec<StateId> = (0..n).filter(|&x| !jmask[x]).collect();
    let mut pos = vec![usize::MAX; n];
    for (i, &x) in interior.iter().enumerate() {
        pos[x] = i;
    }
    let ni = interior.len();
    if ni == 0 {
        return Ok(vec![0.0; n]);
    }
    if ni > DENSE_LIMIT {
        return Err(CapacityError::Singular(format!(
            "mean absorption time needs a dense interior ({ni} > {DENSE_LIMIT})"
        )));
    }
    let mut m = DMatrix::<f64>::zeros(ni, ni);
    for (i, &x) in interior.iter().enumerate() {
        let d = chain.exit_rate(x);
        if d <= 0.0 {
            return Err(CapacityError::Singular(format!(
                "all rates out of state {x} underflowed at beta {}",
                chain.beta()
            )));
        }
        m[(i, i)] = d;
    }
    for (idx, (a, b, _)) in chain.landscape().edge_triples().enumerate() {
        for (x, y) in [(a, b), (b, a)] {
            if pos[x] != usize::MAX && pos[y] != usize::MAX {
                m[(pos[x], pos[y])] -= chain.rate(x, idx);
            }
        }
    }
    let rhs = DVector::from_element(ni, 1.0);
    let solved = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| CapacityError::Singular("absorption time solve failed".into()))?;
    let mut t = vec![0.0; n];
    for (i, &x) in interior.iter().enumerate() {
        t[x] = solved[i];
    }
    Ok(t)
}
