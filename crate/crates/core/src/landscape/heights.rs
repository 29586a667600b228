//! Path heights, communication heights, and stability levels.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{EnergyLandscape, LandscapeError, StateId, ENERGY_TOL};

// Min-heap entry for bottleneck searches.
#[derive(PartialEq)]
struct HeapItem {
    dist: f64,
    state: StateId,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap; ties by state id for determinism
        other
            .dist
            .partial_cmp(&self.dist)
            .expect("heights are finite")
            .then_with(|| other.state.cmp(&self.state))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl EnergyLandscape {
    /// Height of a path: `max_i H(w_i) + Delta(w_i, w_{i+1})` over its
    /// transitions. The path must have at least one transition and every
    /// consecutive pair must be an edge.
    pub fn path_height(&self, path: &[StateId]) -> Result<f64, LandscapeError> {
        if path.len() < 2 {
            return Err(LandscapeError::NoTransition);
        }
        let mut height = f64::NEG_INFINITY;
        for pair in path.windows(2) {
            let (x, y) = (pair[0], pair[1]);
            self.check_state(x)?;
            self.check_state(y)?;
            let delta = self
                .delta(x, y)
                .ok_or(LandscapeError::NotAnEdge(x, y))?;
            height = height.max(self.energy(x) + delta);
        }
        Ok(height)
    }

    /// Communication height `Phi(y,z)`: the minimum over paths joining y and
    /// z of the path height, via a bottleneck (min-max) search on the
    /// canonical per-edge levels. Symmetric exactly; `Phi(x,x) = H(x)`.
    pub fn communication_height(
        &self,
        y: StateId,
        z: StateId,
    ) -> Result<f64, LandscapeError> {
        self.check_state(y)?;
        self.check_state(z)?;
        self.require_valid()?;
        if y == z {
            return Ok(self.energy(y));
        }
        Ok(self.bottleneck_to(y, |s| s == z).expect("connected landscape").0)
    }

    /// `Phi(Y,Z)`: minimum pairwise communication height between two
    /// nonempty sets. Overlapping sets communicate at their shared states.
    pub fn communication_height_sets(
        &self,
        ys: &[StateId],
        zs: &[StateId],
    ) -> Result<f64, LandscapeError> {
        if ys.is_empty() {
            return Err(LandscapeError::EmptySet("Y"));
        }
        if zs.is_empty() {
            return Err(LandscapeError::EmptySet("Z"));
        }
        for &z in zs {
            self.check_state(z)?;
        }
        self.require_valid()?;
        let mut in_z = vec![false; self.len()];
        for &z in zs {
            in_z[z] = true;
        }
        let mut best = f64::INFINITY;
        for &y in ys {
            self.check_state(y)?;
            let phi = if in_z[y] {
                self.energy(y) // zero-length connection at a shared state
            } else {
                self.bottleneck_to(y, |s| in_z[s])
                    .expect("connected landscape")
                    .0
            };
            if phi < best {
                best = phi;
            }
        }
        Ok(best)
    }

    /// Stability level `V_x = Phi(x, I_x) - H(x)` where
    /// `I_x = {y : H(y) < H(x)}`. Errors on ground states (empty `I_x`).
    pub fn stability_level(&self, x: StateId) -> Result<f64, LandscapeError> {
        self.check_state(x)?;
        self.require_valid()?;
        let hx = self.energy(x);
        match self.bottleneck_to(x, |s| self.energy(s) < hx - ENERGY_TOL) {
            Some((phi, _)) => Ok(phi - hx),
            None => Err(LandscapeError::GroundState(x)),
        }
    }

    /// Bottleneck Dijkstra from `start`: settles states in increasing order
    /// of `min over paths of max edge level`, stopping at the first settled
    /// state satisfying `target`. Returns (bottleneck value, state), or
    /// `None` when no reachable state satisfies the predicate.
    ///
    /// The source settles at its own energy, consistent with Phi(x,x) = H(x):
    /// every incident edge level is at least H(start) up to the
    /// reversibility residual.
    pub(crate) fn bottleneck_to(
        &self,
        start: StateId,
        target: impl Fn(StateId) -> bool,
    ) -> Option<(f64, StateId)> {
        let mut dist = vec![f64::INFINITY; self.len()];
        let mut heap = BinaryHeap::new();
        dist[start] = self.energy(start);
        heap.push(HeapItem { dist: dist[start], state: start });
        let mut settled = vec![false; self.len()];
        while let Some(HeapItem { dist: d, state }) = heap.pop() {
            if settled[state] {
                continue;
            }
            settled[state] = true;
            if target(state) {
                return Some((d, state));
            }
            for (nbr, level) in self.leveled_neighbors(state) {
                if settled[nbr] {
                    continue;
                }
                let nd = d.max(level);
                if nd < dist[nbr] {
                    dist[nbr] = nd;
                    heap.push(HeapItem { dist: nd, state: nbr });
                }
            }
        }
        None
    }

    /// Multi-source bottleneck distances from a set: for every state x,
    /// `min over s in sources of Phi(s, x)`. Sources settle at their own
    /// energies.
    pub(crate) fn bottleneck_from_set(&self, sources: &[StateId]) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.len()];
        let mut heap = BinaryHeap::new();
        for &s in sources {
            if self.energy(s) < dist[s] {
                dist[s] = self.energy(s);
                heap.push(HeapItem { dist: dist[s], state: s });
            }
        }
        let mut settled = vec![false; self.len()];
        while let Some(HeapItem { dist: d, state }) = heap.pop() {
            if settled[state] {
                continue;
            }
            settled[state] = true;
            for (nbr, level) in self.leveled_neighbors(state) {
                if settled[nbr] {
                    continue;
                }
                let nd = d.max(level);
                if nd < dist[nbr] {
                    dist[nbr] = nd;
                    heap.push(HeapItem { dist: nd, state: nbr });
                }
            }
        }
        dist
    }
}

#[cfg(test)]
mod tests {
    use super::super::CostedEdge;
    use super::*;

    fn chain() -> EnergyLandscape {
        EnergyLandscape::metropolis(
            vec![3.0, 10.0, 1.0, 8.0, 0.0],
            [(0, 1), (1, 2), (2, 3), (3, 4)],
        )
        .unwrap()
    }

    #[test]
    fn path_height_is_max_energy_under_metropolis() {
        let l = EnergyLandscape::metropolis(vec![0.0, 1.0], [(0, 1)]).unwrap();
        assert_eq!(l.path_height(&[0, 1]).unwrap(), 1.0);
        let c = chain();
        assert_eq!(c.path_height(&[0, 1, 2]).unwrap(), 10.0);
        assert_eq!(c.path_height(&[2, 3, 4]).unwrap(), 8.0);
        // includes the endpoint energy via the final transition
        assert_eq!(c.path_height(&[2, 1]).unwrap(), 10.0);
    }

    #[test]
    fn path_height_explicit_costs() {
        // Delta chosen so H(w1) + Delta(w1,w2) = 7 dominates
        let l = EnergyLandscape::explicit(
            vec![2.0, 4.0, 3.0],
            vec![
                CostedEdge { a: 0, b: 1, delta_ab: 5.0, delta_ba: 3.0 },
                CostedEdge { a: 1, b: 2, delta_ab: 1.0, delta_ba: 2.0 },
            ],
        )
        .unwrap();
        assert_eq!(l.path_height(&[0, 1, 2]).unwrap(), 7.0);
    }

    #[test]
    fn path_height_errors() {
        let c = chain();
        assert!(matches!(
            c.path_height(&[2]),
            Err(LandscapeError::NoTransition)
        ));
        assert!(matches!(
            c.path_height(&[0, 2]),
            Err(LandscapeError::NotAnEdge(0, 2))
        ));
    }

    #[test]
    fn communication_height_on_chain() {
        let c = chain();
        assert_eq!(c.communication_height(0, 4).unwrap(), 10.0);
        assert_eq!(c.communication_height(4, 0).unwrap(), 10.0);
        assert_eq!(c.communication_height(2, 4).unwrap(), 8.0);
        // self-communication convention
        assert_eq!(c.communication_height(1, 1).unwrap(), 10.0);
        assert_eq!(c.communication_height(4, 4).unwrap(), 0.0);
    }

    #[test]
    fn communication_height_sets_examples() {
        let c = chain();
        assert_eq!(
            c.communication_height_sets(&[0], &[2, 4]).unwrap(),
            10.0
        );
        assert_eq!(
            c.communication_height_sets(&[0], &[4]).unwrap(),
            c.communication_height(0, 4).unwrap()
        );
        // overlapping sets: min energy over the intersection wins
        assert_eq!(c.communication_height_sets(&[2, 4], &[4]).unwrap(), 0.0);
        assert!(matches!(
            c.communication_height_sets(&[], &[1]),
            Err(LandscapeError::EmptySet("Y"))
        ));
    }

    #[test]
    fn stability_levels_on_chain() {
        let c = chain();
        assert_eq!(c.stability_level(0).unwrap(), 7.0);
        assert_eq!(c.stability_level(2).unwrap(), 7.0);
        // states with a downhill neighbor relax at zero cost
        assert_eq!(c.stability_level(1).unwrap(), 0.0);
        assert_eq!(c.stability_level(3).unwrap(), 0.0);
        assert!(matches!(
            c.stability_level(4),
            Err(LandscapeError::GroundState(4))
        ));
    }

    #[test]
    fn operations_reject_invalid_landscape() {
        let l = EnergyLandscape::metropolis(
            vec![0.0, 1.0, 2.0, 3.0],
            [(0, 1), (2, 3)],
        )
        .unwrap();
        assert!(matches!(
            l.communication_height(0, 3),
            Err(LandscapeError::Invalid(_))
        ));
    }
}
