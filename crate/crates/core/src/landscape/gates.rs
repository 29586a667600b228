//! Optimal saddles, gates, and minimal-gate enumeration for a pair of
//! states.
//!
//! All notions live inside the sub-landscape spanned by edges whose
//! communication level does not exceed Phi(sigma, eta): a state is an
//! optimal saddle when it sits at energy Phi and some optimal path visits
//! it; a set Y of saddles is a gate when every optimal path meets Y; the
//! minimal gates are the inclusion-minimal ones and their union is the
//! essential-saddle set G(sigma, eta).

use std::collections::HashSet;

use super::{EnergyLandscape, LandscapeError, StateId, ENERGY_TOL};

/// Largest admissible optimal-saddle set for exact minimal-gate
/// enumeration. The enumeration branches on gate members rather than
/// scanning subsets, so the bound is a bitmask-width limit, not a 2^n
/// budget.
pub const BOUND_SADDLES: usize = 64;

// Cap on distinct minimal gates and search nodes; guards against
// combinatorial blowups that desk-scale inputs never reach.
const BOUND_GATES: usize = 4096;
const BOUND_NODES: usize = 1 << 20;

// The sub-landscape of one (sigma, eta) pair: compact adjacency over the
// states reachable from sigma along edges with level <= phi + tol, with
// each state annotated by its position in the saddle list (if any).
struct SubLevelGraph {
    adj: Vec<Vec<u32>>,      // compact adjacency
    saddle_pos: Vec<u8>,     // compact id -> saddle position, NOT_A_SADDLE otherwise
    sigma: u32,
    eta: Option<u32>,
}

const NONE: u32 = u32::MAX;
const NOT_A_SADDLE: u8 = u8::MAX;

impl SubLevelGraph {
    fn new(
        l: &EnergyLandscape,
        sigma: StateId,
        eta: StateId,
        phi: f64,
        saddles: &[StateId],
    ) -> Self {
        let cut = phi + ENERGY_TOL;
        let mut index = vec![NONE; l.len()];
        let mut states = Vec::new();
        let mut stack = vec![sigma];
        index[sigma] = 0;
        states.push(sigma);
        while let Some(x) = stack.pop() {
            for (nbr, level) in l.leveled_neighbors(x) {
                if level <= cut && index[nbr] == NONE {
                    index[nbr] = states.len() as u32;
                    states.push(nbr);
                    stack.push(nbr);
                }
            }
        }
        let mut adj = vec![Vec::new(); states.len()];
        for (ci, &x) in states.iter().enumerate() {
            for (nbr, level) in l.leveled_neighbors(x) {
                if level <= cut {
                    adj[ci].push(index[nbr]);
                }
            }
        }
        let mut saddle_pos = vec![NOT_A_SADDLE; states.len()];
        for (pos, &s) in saddles.iter().enumerate() {
            // saddles are reachable from sigma by construction
            saddle_pos[index[s] as usize] = pos as u8;
        }
        let eta_c = if index[eta] == NONE { None } else { Some(index[eta]) };
        Self { adj, saddle_pos, sigma: 0, eta: eta_c }
    }

    // Can sigma reach eta while avoiding every saddle whose bit is set in
    // `blocked` (a mask over saddle positions)?
    fn cut_by(&self, blocked: u64) -> bool {
        let eta = match self.eta {
            Some(e) => e,
            None => return true, // eta unreachable below phi at all
        };
        let is_blocked = |c: u32| -> bool {
            let pos = self.saddle_pos[c as usize];
            pos != NOT_A_SADDLE && blocked & (1 << pos) != 0
        };
        if is_blocked(self.sigma) || is_blocked(eta) {
            return true;
        }
        let mut seen = vec![false; self.adj.len()];
        let mut stack = vec![self.sigma];
        seen[self.sigma as usize] = true;
        while let Some(x) = stack.pop() {
            if x == eta {
                return false;
            }
            for &nbr in &self.adj[x as usize] {
                if !seen[nbr as usize] && !is_blocked(nbr) {
                    seen[nbr as usize] = true;
                    stack.push(nbr);
                }
            }
        }
        true
    }
}

impl EnergyLandscape {
    /// All optimal saddles for the pair: states at energy Phi(sigma, eta)
    /// (tolerance 1e-9) visited by at least one optimal path, i.e.
    /// reachable from both endpoints without exceeding Phi. When the pair
    /// has no interior barrier (Phi equals the higher endpoint energy), the
    /// higher endpoint itself is the saddle. Ascending ids.
    pub fn optimal_saddles(
        &self,
        sigma: StateId,
        eta: StateId,
    ) -> Result<Vec<StateId>, LandscapeError> {
        self.check_state(sigma)?;
        self.check_state(eta)?;
        if sigma == eta {
            return Err(LandscapeError::SamePair);
        }
        self.require_valid()?;
        let phi = self.communication_height(sigma, eta)?;
        let from_sigma = self.sublevel_reach(sigma, phi);
        let from_eta = self.sublevel_reach(eta, phi);
        Ok((0..self.len())
            .filter(|&z| {
                from_sigma[z]
                    && from_eta[z]
                    && (self.energy(z) - phi).abs() <= ENERGY_TOL
            })
            .collect())
    }

    // states reachable from start over edges with level <= phi + tol
    fn sublevel_reach(&self, start: StateId, phi: f64) -> Vec<bool> {
        let cut = phi + ENERGY_TOL;
        let mut seen = vec![false; self.len()];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(x) = stack.pop() {
            for (nbr, level) in self.leveled_neighbors(x) {
                if level <= cut && !seen[nbr] {
                    seen[nbr] = true;
                    stack.push(nbr);
                }
            }
        }
        seen
    }

    /// True iff `gate` is a gate for the pair: every member sits at energy
    /// Phi(sigma, eta) and every optimal path meets the set (removing it
    /// disconnects sigma from eta in the sub-landscape of communication
    /// level <= Phi; an endpoint inside the set meets every path
    /// trivially). The empty set is not a gate.
    pub fn is_gate(
        &self,
        gate: &[StateId],
        sigma: StateId,
        eta: StateId,
    ) -> Result<bool, LandscapeError> {
        self.check_state(sigma)?;
        self.check_state(eta)?;
        if sigma == eta {
            return Err(LandscapeError::SamePair);
        }
        self.require_valid()?;
        if gate.is_empty() {
            return Ok(false);
        }
        let phi = self.communication_height(sigma, eta)?;
        for &y in gate {
            self.check_state(y)?;
            if (self.energy(y) - phi).abs() > ENERGY_TOL {
                return Ok(false);
            }
        }
        let blocked: HashSet<StateId> = gate.iter().copied().collect();
        if blocked.contains(&sigma) || blocked.contains(&eta) {
            return Ok(true);
        }
        let cut = phi + ENERGY_TOL;
        let mut seen = vec![false; self.len()];
        let mut stack = vec![sigma];
        seen[sigma] = true;
        while let Some(x) = stack.pop() {
            if x == eta {
                return Ok(false);
            }
            for (nbr, level) in self.leveled_neighbors(x) {
                if level <= cut && !seen[nbr] && !blocked.contains(&nbr) {
                    seen[nbr] = true;
                    stack.push(nbr);
                }
            }
        }
        Ok(true)
    }

    /// Enumerates every inclusion-minimal gate for the pair, sorted
    /// lexicographically; the union over the returned sets is the
    /// essential-saddle set G(sigma, eta). Errors when the optimal-saddle
    /// set exceeds [`BOUND_SADDLES`] members. Returns an empty list when no
    /// state set at the saddle energy separates the pair (possible under
    /// explicit costs, where a barrier may sit on an edge).
    pub fn minimal_gates(
        &self,
        sigma: StateId,
        eta: StateId,
    ) -> Result<Vec<Vec<StateId>>, LandscapeError> {
        let saddles = self.optimal_saddles(sigma, eta)?;
        if saddles.len() > BOUND_SADDLES {
            return Err(LandscapeError::TooManySaddles(saddles.len(), BOUND_SADDLES));
        }
        let phi = self.communication_height(sigma, eta)?;
        let sub = SubLevelGraph::new(self, sigma, eta, phi, &saddles);

        let full_mask: u64 = if saddles.len() == 64 {
            u64::MAX
        } else {
            (1u64 << saddles.len()) - 1
        };
        if !sub.cut_by(full_mask) {
            return Ok(Vec::new());
        }

        // Minimalize `mask` by dropping members in ascending StateId order;
        // single-pass dropping yields an inclusion-minimal gate because
        // cutting is monotone under supersets.
        let minimalize = |mut mask: u64| -> u64 {
            for pos in 0..saddles.len() {
                let bit = 1u64 << pos;
                if mask & bit != 0 && sub.cut_by(mask & !bit) {
                    mask &= !bit;
                }
            }
            mask
        };

        // Branching enumeration: from every found minimal gate Y, recurse
        // on each "exclude y" constraint. Any minimal gate m distinct from
        // Y has some member set disjoint from... more precisely, Y != m
        // implies Y \ m is nonempty (two minimal gates cannot nest), so the
        // branch excluding that member keeps m reachable.
        let mut found: HashSet<u64> = HashSet::new();
        let mut visited: HashSet<u64> = HashSet::new();
        let mut queue: Vec<u64> = vec![0]; // excluded-set masks
        let mut nodes = 0usize;
        while let Some(excluded) = queue.pop() {
            if !visited.insert(excluded) {
                continue;
            }
            nodes += 1;
            if nodes > BOUND_NODES || found.len() > BOUND_GATES {
                return Err(LandscapeError::TooManySaddles(
                    saddles.len(),
                    BOUND_SADDLES,
                ));
            }
            let allowed = full_mask & !excluded;
            if !sub.cut_by(allowed) {
                continue; // no gate avoids the excluded members
            }
            let gate = minimalize(allowed);
            found.insert(gate);
            let mut rest = gate;
            while rest != 0 {
                let bit = rest & rest.wrapping_neg();
                rest &= !bit;
                queue.push(excluded | bit);
            }
        }

        let mut gates: Vec<Vec<StateId>> = found
            .into_iter()
            .map(|mask| {
                (0..saddles.len())
                    .filter(|pos| mask & (1 << pos) != 0)
                    .map(|pos| saddles[pos])
                    .collect()
            })
            .collect();
        gates.sort();
        Ok(gates)
    }
}
