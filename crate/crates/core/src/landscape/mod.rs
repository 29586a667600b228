//! Finite reversible energy landscapes.
//!
//! A landscape is a quadruple (X, Q, H, Delta): a finite state space X with
//! dense indices, a connected symmetric support graph Q, an energy H on
//! states, and nonnegative directed transition costs Delta on the edges of Q
//! satisfying the reversibility identity
//!
//! ```text
//! H(x) + Delta(x,y) = H(y) + Delta(y,x)
//! ```
//!
//! Under [`CostMode::Metropolis`] the costs are derived from the energies as
//! `Delta(x,y) = max(H(y) - H(x), 0)` and the identity holds exactly. The
//! landscape exposes variational quantities built from path heights: the
//! communication height between states, stability levels, the maximal
//! stability level Gamma_m with its argmax set X_m, gates between pairs of
//! states, and the equivalence partition used to pick candidate metastable
//! sets.

mod gates;
mod heights;
mod io;
mod relaxation;

pub use gates::BOUND_SADDLES;
pub use io::{parse_landscape, write_landscape, ParseError};
pub use relaxation::{
    PtaCandidates, RelaxationReport, SufficiencyMode, Verdict, Violation,
};

use std::collections::HashSet;
use std::sync::OnceLock;

use serde::Serialize;
use thiserror::Error;

/// Dense state index in `[0, N)`.
pub type StateId = usize;

/// Absolute tolerance for treating two energies (or heights) as equal.
///
/// Model energies of interest are exact multiples of a few parameters, so
/// near-ties inside this window are structural ties, not noise.
pub const ENERGY_TOL: f64 = 1e-9;

/// Per-edge tolerance on the reversibility identity residual.
pub const REVERSIBILITY_TOL: f64 = 1e-9;

/// How transition costs are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CostMode {
    /// `Delta(x,y) = [H(y) - H(x)]_+`, derived from the energies.
    Metropolis,
    /// Costs supplied per directed edge pair.
    Explicit,
}

/// An undirected edge with its two directed costs, as supplied by callers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostedEdge {
    pub a: StateId,
    pub b: StateId,
    /// Cost of the `a -> b` transition.
    pub delta_ab: f64,
    /// Cost of the `b -> a` transition.
    pub delta_ba: f64,
}

// Internal canonical edge: a < b, plus the communication level of the edge.
#[derive(Debug, Clone)]
pub(crate) struct Edge {
    pub(crate) a: StateId,
    pub(crate) b: StateId,
    pub(crate) delta_ab: f64,
    pub(crate) delta_ba: f64,
    /// H(a) + Delta(a,b), computed once from the canonical orientation so
    /// that every algorithm sees one exact level per undirected edge.
    pub(crate) level: f64,
}

/// Errors raised by landscape construction and analysis operations.
#[derive(Debug, Error)]
pub enum LandscapeError {
    #[error("landscape must contain at least one state")]
    Empty,
    #[error("state {0} out of range (landscape has {1} states)")]
    BadStateId(usize, usize),
    #[error("non-finite energy at state {0}")]
    NonFiniteEnergy(StateId),
    #[error("edge ({0},{0}) is a self loop")]
    SelfLoop(StateId),
    #[error("duplicate edge ({0},{1})")]
    DuplicateEdge(StateId, StateId),
    #[error("negative cost on edge ({0},{1})")]
    NegativeCost(StateId, StateId),
    #[error("non-finite cost on edge ({0},{1})")]
    NonFiniteCost(StateId, StateId),
    #[error("landscape failed validation: {0}")]
    Invalid(String),
    #[error("{0} must not be empty")]
    EmptySet(&'static str),
    #[error("path has no transition")]
    NoTransition,
    #[error("path step ({0},{1}) is not an edge")]
    NotAnEdge(StateId, StateId),
    #[error("state {0} is a ground state and has no stability level")]
    GroundState(StateId),
    #[error("set A must avoid ground states (contains {0})")]
    TouchesGround(StateId),
    #[error("threshold a must be positive")]
    NonPositiveThreshold,
    #[error("trivial landscape: every state is a ground state")]
    Trivial,
    #[error("theorem hypothesis violated: no states outside X_s and X_m")]
    NoThirdState,
    #[error("saddle set has {0} members, exceeds enumeration bound {1}")]
    TooManySaddles(usize, usize),
    #[error("sigma and eta must be distinct states")]
    SamePair,
}

/// Diagnostics produced by [`EnergyLandscape::validate`].
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub n_states: usize,
    pub n_edges: usize,
    pub connected: bool,
    pub n_components: usize,
    /// Largest per-edge residual of the reversibility identity.
    pub max_reversibility_residual: f64,
    /// Human-readable descriptions of every violation found.
    pub violations: Vec<String>,
    pub pass: bool,
}

/// A finite reversible energy landscape. Immutable after construction; all
/// analysis operations take `&self` and allocate only private scratch.
#[derive(Debug)]
pub struct EnergyLandscape {
    energy: Vec<f64>,
    edges: Vec<Edge>,
    // adjacency: per state, (neighbor, index into edges)
    adj: Vec<Vec<(StateId, u32)>>,
    mode: CostMode,
    validation: OnceLock<ValidationReport>,
}

impl EnergyLandscape {
    /// Builds a landscape with metropolis costs derived from the energies.
    pub fn metropolis(
        energy: Vec<f64>,
        edges: impl IntoIterator<Item = (StateId, StateId)>,
    ) -> Result<Self, LandscapeError> {
        let costed = edges
            .into_iter()
            .map(|(a, b)| CostedEdge { a, b, delta_ab: 0.0, delta_ba: 0.0 })
            .collect();
        Self::build(energy, costed, CostMode::Metropolis)
    }

    /// Builds a landscape with explicitly supplied directed costs.
    pub fn explicit(
        energy: Vec<f64>,
        edges: Vec<CostedEdge>,
    ) -> Result<Self, LandscapeError> {
        Self::build(energy, edges, CostMode::Explicit)
    }

    fn build(
        energy: Vec<f64>,
        edges: Vec<CostedEdge>,
        mode: CostMode,
    ) -> Result<Self, LandscapeError> {
        let n = energy.len();
        if n == 0 {
            return Err(LandscapeError::Empty);
        }
        for (x, h) in energy.iter().enumerate() {
            if !h.is_finite() {
                return Err(LandscapeError::NonFiniteEnergy(x));
            }
        }
        let mut canonical = Vec::with_capacity(edges.len());
        let mut seen = HashSet::with_capacity(edges.len());
        for e in &edges {
            if e.a >= n {
                return Err(LandscapeError::BadStateId(e.a, n));
            }
            if e.b >= n {
                return Err(LandscapeError::BadStateId(e.b, n));
            }
            if e.a == e.b {
                return Err(LandscapeError::SelfLoop(e.a));
            }
            // canonical orientation a < b
            let (a, b, dab, dba) = if e.a < e.b {
                (e.a, e.b, e.delta_ab, e.delta_ba)
            } else {
                (e.b, e.a, e.delta_ba, e.delta_ab)
            };
            if !seen.insert((a, b)) {
                return Err(LandscapeError::DuplicateEdge(a, b));
            }
            let (dab, dba) = match mode {
                CostMode::Metropolis => (
                    (energy[b] - energy[a]).max(0.0),
                    (energy[a] - energy[b]).max(0.0),
                ),
                CostMode::Explicit => (dab, dba),
            };
            if !dab.is_finite() || !dba.is_finite() {
                return Err(LandscapeError::NonFiniteCost(a, b));
            }
            if dab < 0.0 || dba < 0.0 {
                return Err(LandscapeError::NegativeCost(a, b));
            }
            let level = energy[a] + dab;
            canonical.push(Edge { a, b, delta_ab: dab, delta_ba: dba, level });
        }
        let mut adj = vec![Vec::new(); n];
        for (i, e) in canonical.iter().enumerate() {
            adj[e.a].push((e.b, i as u32));
            adj[e.b].push((e.a, i as u32));
        }
        Ok(Self { energy, edges: canonical, adj, mode, validation: OnceLock::new() })
    }

    /// Number of states.
    pub fn len(&self) -> usize {
        self.energy.len()
    }

    /// True when the landscape has exactly one state.
    pub fn is_empty(&self) -> bool {
        false // construction rejects zero states
    }

    /// Energy of a state. Panics on an out-of-range id.
    pub fn energy(&self, x: StateId) -> f64 {
        self.energy[x]
    }

    /// All energies, indexed by state.
    pub fn energies(&self) -> &[f64] {
        &self.energy
    }

    pub fn cost_mode(&self) -> CostMode {
        self.mode
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Undirected edges as (a, b, Delta(a,b), Delta(b,a)) with a < b.
    pub fn costed_edges(&self) -> impl Iterator<Item = CostedEdge> + '_ {
        self.edges.iter().map(|e| CostedEdge {
            a: e.a,
            b: e.b,
            delta_ab: e.delta_ab,
            delta_ba: e.delta_ba,
        })
    }

    /// Directed cost Delta(x,y); `None` when (x,y) is not an edge.
    pub fn delta(&self, x: StateId, y: StateId) -> Option<f64> {
        let (_, idx) = self.adj[x].iter().find(|(nbr, _)| *nbr == y)?;
        let e = &self.edges[*idx as usize];
        Some(if e.a == x { e.delta_ab } else { e.delta_ba })
    }

    /// Neighbors of a state.
    pub fn neighbors(&self, x: StateId) -> impl Iterator<Item = StateId> + '_ {
        self.adj[x].iter().map(|&(nbr, _)| nbr)
    }

    pub fn degree(&self, x: StateId) -> usize {
        self.adj[x].len()
    }

    /// Largest vertex degree; 0 for a single isolated state.
    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Index of the undirected edge between x and y in canonical edge
    /// order; `None` when (x, y) is not an edge.
    pub fn edge_index(&self, x: StateId, y: StateId) -> Option<usize> {
        self.adj
            .get(x)?
            .iter()
            .find(|(nbr, _)| *nbr == y)
            .map(|&(_, idx)| idx as usize)
    }

    // indices of the edges incident to x
    pub(crate) fn incident_edges(&self, x: StateId) -> impl Iterator<Item = usize> + '_ {
        self.adj[x].iter().map(|&(_, idx)| idx as usize)
    }

    // k-th adjacency entry of x: (neighbor, edge index)
    pub(crate) fn adjacency_entry(&self, x: StateId, k: usize) -> (StateId, usize) {
        let (nbr, idx) = self.adj[x][k];
        (nbr, idx as usize)
    }

    // (a, b, level) per canonical edge, in edge order
    pub(crate) fn edge_triples(
        &self,
    ) -> impl Iterator<Item = (StateId, StateId, f64)> + '_ {
        self.edges.iter().map(|e| (e.a, e.b, e.level))
    }

    // endpoints and level of the edge with the given index
    pub(crate) fn edge_endpoints_level(&self, idx: usize) -> ((StateId, StateId), f64) {
        let e = &self.edges[idx];
        ((e.a, e.b), e.level)
    }

    // (neighbor, communication level of the connecting edge)
    pub(crate) fn leveled_neighbors(
        &self,
        x: StateId,
    ) -> impl Iterator<Item = (StateId, f64)> + '_ {
        self.adj[x]
            .iter()
            .map(move |&(nbr, idx)| (nbr, self.edges[idx as usize].level))
    }

    pub(crate) fn edge_slice(&self) -> &[Edge] {
        &self.edges
    }

    /// Runs (and caches) the structural diagnostics: connectivity and the
    /// per-edge reversibility residual. Never fails; failures are reported.
    pub fn validate(&self) -> &ValidationReport {
        self.validation.get_or_init(|| self.run_validation())
    }

    fn run_validation(&self) -> ValidationReport {
        let n = self.len();
        let mut violations = Vec::new();

        // connectivity of (X, Q)
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut visited = 1usize;
        while let Some(x) = stack.pop() {
            for &(nbr, _) in &self.adj[x] {
                if !seen[nbr] {
                    seen[nbr] = true;
                    visited += 1;
                    stack.push(nbr);
                }
            }
        }
        let connected = visited == n;
        let mut n_components = 1;
        if !connected {
            for x in 0..n {
                if !seen[x] {
                    n_components += 1;
                    seen[x] = true;
                    stack.push(x);
                    while let Some(y) = stack.pop() {
                        for &(nbr, _) in &self.adj[y] {
                            if !seen[nbr] {
                                seen[nbr] = true;
                                stack.push(nbr);
                            }
                        }
                    }
                }
            }
            violations.push(format!("not connected: {n_components} components"));
        }

        // reversibility: H(a) + Delta(a,b) = H(b) + Delta(b,a) per edge
        let mut max_residual = 0.0f64;
        for e in &self.edges {
            let residual = ((self.energy[e.a] + e.delta_ab)
                - (self.energy[e.b] + e.delta_ba))
                .abs();
            if residual > max_residual {
                max_residual = residual;
            }
            if residual > REVERSIBILITY_TOL {
                violations.push(format!(
                    "edge ({},{}) violates reversibility: residual {residual:.3e}",
                    e.a, e.b
                ));
            }
        }

        let pass = connected && max_residual <= REVERSIBILITY_TOL;
        ValidationReport {
            n_states: n,
            n_edges: self.edges.len(),
            connected,
            n_components,
            max_reversibility_residual: max_residual,
            violations,
            pass,
        }
    }

    // Analysis operations assume a validated landscape.
    pub(crate) fn require_valid(&self) -> Result<(), LandscapeError> {
        let report = self.validate();
        if report.pass {
            Ok(())
        } else {
            Err(LandscapeError::Invalid(report.violations.join("; ")))
        }
    }

    pub(crate) fn check_state(&self, x: StateId) -> Result<(), LandscapeError> {
        if x < self.len() {
            Ok(())
        } else {
            Err(LandscapeError::BadStateId(x, self.len()))
        }
    }

    /// States of `set` attaining the minimal energy, ties kept, ascending id.
    pub fn minima_of(&self, set: &[StateId]) -> Result<Vec<StateId>, LandscapeError> {
        if set.is_empty() {
            return Err(LandscapeError::EmptySet("Y"));
        }
        let mut min = f64::INFINITY;
        for &x in set {
            self.check_state(x)?;
            if self.energy[x] < min {
                min = self.energy[x];
            }
        }
        let mut out: Vec<StateId> = set
            .iter()
            .copied()
            .filter(|&x| self.energy[x] <= min + ENERGY_TOL)
            .collect();
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// The ground states X_s: minima of the full state space.
    pub fn ground_states(&self) -> Vec<StateId> {
        let all: Vec<StateId> = (0..self.len()).collect();
        self.minima_of(&all).expect("state space is nonempty")
    }

    // membership mask for the ground set
    pub(crate) fn ground_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.len()];
        for x in self.ground_states() {
            mask[x] = true;
        }
        mask
    }
}
