//! Stability levels, the maximal stability level Gamma_m, and the theorem
//! checkers built on them.
//!
//! Two independent routes compute the same report: [`EnergyLandscape::
//! relaxation_analysis`] runs a single merge sweep over edges sorted by
//! communication level, while [`EnergyLandscape::relaxation_bruteforce`]
//! runs one bottleneck search per state. Both resolve a state at the exact
//! float level of the connecting edge, so their outputs match bitwise and
//! each serves as the oracle for the other.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{EnergyLandscape, LandscapeError, StateId, ENERGY_TOL};

/// Result of a relaxation analysis.
///
/// `gamma_m` is `None` exactly when the landscape is trivial (every state is
/// a ground state); then `metastable_set` and the partitions are empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelaxationReport {
    /// Maximal stability level over non-ground states.
    pub gamma_m: Option<f64>,
    /// X_m: the states attaining `gamma_m`.
    pub metastable_set: Vec<StateId>,
    /// X_s: the global energy minima.
    pub ground_states: Vec<StateId>,
    /// V_x per non-ground state (ground states carry no stability level).
    pub stability: BTreeMap<StateId, f64>,
    /// Equivalence classes of X_m under the communication relation.
    pub partition_m: Vec<Vec<StateId>>,
    /// Equivalence classes of X_s under the communication relation.
    pub partition_s: Vec<Vec<StateId>>,
    /// Gamma_m = 0: every non-ground state has a zero-cost downhill route.
    pub fully_attracted: bool,
    /// X = X_s: no state has a stability level at all.
    pub trivial: bool,
}

/// Which clause family `check_sufficient_conditions` uses for states
/// outside the candidate set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SufficiencyMode {
    /// Clause (2) bounds the communication excess Phi(x, X_s) - H(x).
    Path,
    /// Clause (2) bounds the stability level V_x.
    Stability,
}

/// Outcome of a theorem check, with the first violation when it fails.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub violation: Option<Violation>,
}

impl Verdict {
    fn pass() -> Self {
        Self { pass: true, violation: None }
    }

    fn fail(state: StateId, clause: u8, detail: String) -> Self {
        Self { pass: false, violation: Some(Violation { state, clause, detail }) }
    }
}

/// A state failing one clause of a checked theorem.
#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub state: StateId,
    pub clause: u8,
    pub detail: String,
}

/// Representatives chosen from the equivalence partition, one per class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PtaCandidates {
    /// Lowest StateId of each class of X_m and X_s, ascending.
    pub representatives: Vec<StateId>,
    /// Number of distinct representative choices (product of class sizes).
    pub choice_count: u128,
}

// Union-find over states carrying, per component, the minimal energy and the
// list of still-unresolved states (exactly the states at that minimum).
struct MergeForest {
    parent: Vec<u32>,
    rank: Vec<u8>,
    min_h: Vec<f64>,
    floor: Vec<Vec<StateId>>,
}

impl MergeForest {
    fn new(energy: &[f64]) -> Self {
        Self {
            parent: (0..energy.len() as u32).collect(),
            rank: vec![0; energy.len()],
            min_h: energy.to_vec(),
            floor: (0..energy.len()).map(|x| vec![x]).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] as usize != root {
            root = self.parent[root] as usize;
        }
        let mut cur = x;
        while self.parent[cur] as usize != root {
            let next = self.parent[cur] as usize;
            self.parent[cur] = root as u32;
            cur = next;
        }
        root
    }

    // Union by rank; floors concatenate small-into-large. Returns the new
    // root, or None when already joined.
    fn union(&mut self, a: usize, b: usize) -> Option<usize> {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return None;
        }
        let (winner, loser) = if self.rank[ra] < self.rank[rb] {
            (rb, ra)
        } else {
            (ra, rb)
        };
        self.parent[loser] = winner as u32;
        if self.rank[winner] == self.rank[loser] {
            self.rank[winner] += 1;
        }
        if self.min_h[loser] < self.min_h[winner] {
            self.min_h[winner] = self.min_h[loser];
        }
        let mut moved = std::mem::take(&mut self.floor[loser]);
        if moved.len() > self.floor[winner].len() {
            std::mem::swap(&mut moved, &mut self.floor[winner]);
        }
        self.floor[winner].append(&mut moved);
        Some(winner)
    }
}

impl EnergyLandscape {
    /// Computes the full relaxation report by the merge sweep: edges are
    /// processed in ascending communication level, components union, and a
    /// state resolves (gains its V_x) at the first level where its component
    /// contains a strictly lower-energy state. Edges at a bitwise-equal
    /// level are unioned as one batch before any resolution, so degenerate
    /// levels cannot leak an edge-ordering dependence into the result.
    pub fn relaxation_analysis(&self) -> Result<RelaxationReport, LandscapeError> {
        self.require_valid()?;
        let n = self.len();
        let edges = self.edge_slice();
        let mut order: Vec<u32> = (0..edges.len() as u32).collect();
        order.sort_unstable_by(|&i, &j| {
            edges[i as usize]
                .level
                .partial_cmp(&edges[j as usize].level)
                .expect("edge levels are finite")
                .then(i.cmp(&j))
        });

        let mut forest = MergeForest::new(self.energies());
        let mut stability: Vec<Option<f64>> = vec![None; n];
        let mut touched: Vec<usize> = Vec::new();

        let mut i = 0;
        while i < order.len() {
            let level = edges[order[i] as usize].level;
            // batch: every edge at this exact level
            let mut j = i;
            touched.clear();
            while j < order.len() && edges[order[j] as usize].level == level {
                let e = &edges[order[j] as usize];
                forest.union(e.a, e.b);
                j += 1;
            }
            for k in i..j {
                let root = forest.find(edges[order[k] as usize].a);
                if !touched.contains(&root) {
                    touched.push(root);
                }
            }
            // resolve: every floor member now above its component minimum
            for &root in &touched {
                let min_h = forest.min_h[root];
                forest.floor[root].retain(|&x| {
                    if self.energy(x) > min_h + ENERGY_TOL {
                        stability[x] = Some(level - self.energy(x));
                        false
                    } else {
                        true
                    }
                });
            }
            i = j;
        }

        self.assemble_report(stability)
    }

    /// Independent route: one early-terminating bottleneck search per state.
    /// Identical contract and output as [`Self::relaxation_analysis`].
    pub fn relaxation_bruteforce(&self) -> Result<RelaxationReport, LandscapeError> {
        self.require_valid()?;
        let n = self.len();
        let mut stability: Vec<Option<f64>> = vec![None; n];
        // reusable scratch, reset only where touched
        let mut dist = vec![f64::INFINITY; n];
        let mut settled = vec![false; n];
        let mut touched: Vec<StateId> = Vec::new();
        let mut heap = std::collections::BinaryHeap::new();

        #[derive(PartialEq)]
        struct Item(f64, StateId);
        impl Eq for Item {}
        impl Ord for Item {
            fn cmp(&self, other: &Self) -> std::cmp::Ordering {
                other
                    .0
                    .partial_cmp(&self.0)
                    .expect("finite")
                    .then(other.1.cmp(&self.1))
            }
        }
        impl PartialOrd for Item {
            fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
                Some(self.cmp(other))
            }
        }

        for x in 0..n {
            let hx = self.energy(x);
            heap.clear();
            dist[x] = hx;
            touched.push(x);
            heap.push(Item(hx, x));
            while let Some(Item(d, state)) = heap.pop() {
                if settled[state] {
                    continue;
                }
                settled[state] = true;
                if self.energy(state) < hx - ENERGY_TOL {
                    stability[x] = Some(d - hx);
                    break;
                }
                for (nbr, level) in self.leveled_neighbors(state) {
                    if settled[nbr] {
                        continue;
                    }
                    let nd = d.max(level);
                    if nd < dist[nbr] {
                        dist[nbr] = nd;
                        touched.push(nbr);
                        heap.push(Item(nd, nbr));
                    }
                }
            }
            for &t in &touched {
                dist[t] = f64::INFINITY;
                settled[t] = false;
            }
            touched.clear();
        }

        self.assemble_report(stability)
    }

    // Shared aggregation: Gamma_m, X_m, flags, and the partitions.
    fn assemble_report(
        &self,
        stability: Vec<Option<f64>>,
    ) -> Result<RelaxationReport, LandscapeError> {
        let ground_states = self.ground_states();
        let mut gamma = f64::NEG_INFINITY;
        let mut any = false;
        for v in stability.iter().flatten() {
            any = true;
            if *v > gamma {
                gamma = *v;
            }
        }
        if !any {
            // X = X_s: no state carries a stability level
            return Ok(RelaxationReport {
                gamma_m: None,
                metastable_set: Vec::new(),
                ground_states: ground_states.clone(),
                stability: BTreeMap::new(),
                partition_m: Vec::new(),
                partition_s: vec![ground_states],
                fully_attracted: false,
                trivial: true,
            });
        }
        let metastable_set: Vec<StateId> = stability
            .iter()
            .enumerate()
            .filter_map(|(x, v)| match v {
                Some(v) if *v >= gamma - ENERGY_TOL => Some(x),
                _ => None,
            })
            .collect();
        let stability_map: BTreeMap<StateId, f64> = stability
            .iter()
            .enumerate()
            .filter_map(|(x, v)| v.map(|v| (x, v)))
            .collect();
        let partition_m = self.partition_classes(&metastable_set, gamma);
        let partition_s = self.partition_classes(&ground_states, gamma);
        Ok(RelaxationReport {
            gamma_m: Some(gamma),
            metastable_set,
            ground_states,
            stability: stability_map,
            partition_m,
            partition_s,
            fully_attracted: gamma <= ENERGY_TOL,
            trivial: false,
        })
    }

    /// Partitions X_m and X_s into classes of the relation `x ~ y` iff
    /// `Phi(x,y) - H(x) < gamma_m` and `Phi(y,x) - H(y) < gamma_m`; classes
    /// are the connected components of the relation graph restricted to each
    /// set. `gamma_m` must be the landscape's maximal stability level.
    pub fn equivalence_partition(
        &self,
        gamma_m: f64,
    ) -> Result<(Vec<Vec<StateId>>, Vec<Vec<StateId>>), LandscapeError> {
        self.require_valid()?;
        let report = self.relaxation_analysis()?;
        Ok((
            self.partition_classes(&report.metastable_set, gamma_m),
            self.partition_classes(&report.ground_states, gamma_m),
        ))
    }

    // Connected components of the ~ graph on `set`. Members are assumed
    // sorted ascending; classes come out sorted by their smallest member.
    fn partition_classes(&self, set: &[StateId], gamma: f64) -> Vec<Vec<StateId>> {
        let k = set.len();
        if k == 0 {
            return Vec::new();
        }
        if k == 1 {
            return vec![set.to_vec()];
        }
        // Phi(x,y) >= max(H(x), H(y)), so gamma <= 0 forces singletons.
        if gamma <= 0.0 {
            return set.iter().map(|&x| vec![x]).collect();
        }
        // one full bottleneck sweep per member, then pairwise tests
        let mut class: Vec<usize> = (0..k).collect();
        fn find(class: &mut Vec<usize>, i: usize) -> usize {
            let mut r = i;
            while class[r] != r {
                r = class[r];
            }
            let mut cur = i;
            while class[cur] != r {
                let next = class[cur];
                class[cur] = r;
                cur = next;
            }
            r
        }
        for (i, &x) in set.iter().enumerate() {
            let dist = self.bottleneck_from_set(&[x]);
            for (j, &y) in set.iter().enumerate().skip(i + 1) {
                let phi = dist[y];
                if phi - self.energy(x) < gamma && phi - self.energy(y) < gamma {
                    let (ri, rj) = (find(&mut class, i), find(&mut class, j));
                    if ri != rj {
                        class[ri.max(rj)] = ri.min(rj);
                    }
                }
            }
        }
        let mut by_root: BTreeMap<usize, Vec<StateId>> = BTreeMap::new();
        for i in 0..k {
            let r = find(&mut class, i);
            by_root.entry(r).or_default().push(set[i]);
        }
        by_root.into_values().collect()
    }

    /// One representative per equivalence class (lowest StateId), plus the
    /// number of alternative choices. Requires states outside X_s and X_m to
    /// exist, per the construction theorem's hypothesis.
    pub fn pta_candidate_set(
        &self,
        report: &RelaxationReport,
    ) -> Result<PtaCandidates, LandscapeError> {
        if report.trivial {
            return Err(LandscapeError::Trivial);
        }
        let mut member = vec![false; self.len()];
        for &x in report.metastable_set.iter().chain(&report.ground_states) {
            member[x] = true;
        }
        if member.iter().all(|&m| m) {
            return Err(LandscapeError::NoThirdState);
        }
        let mut representatives = Vec::new();
        let mut choice_count: u128 = 1;
        for class in report.partition_m.iter().chain(&report.partition_s) {
            representatives.push(class[0]); // classes sorted ascending
            choice_count = choice_count.saturating_mul(class.len() as u128);
        }
        representatives.sort_unstable();
        Ok(PtaCandidates { representatives, choice_count })
    }

    /// Checks the sufficient conditions for concluding Gamma_m = `a` and
    /// X_m = `a_set`: clause (1) requires Phi(x, X_s) - H(x) = a on the set
    /// (tolerance 1e-9); clause (2) requires, for every other non-ground
    /// state, Phi(x, X_s) - H(x) < a in `Path` mode or V_x < a in
    /// `Stability` mode.
    pub fn check_sufficient_conditions(
        &self,
        a_set: &[StateId],
        a: f64,
        mode: SufficiencyMode,
    ) -> Result<Verdict, LandscapeError> {
        self.require_valid()?;
        if a_set.is_empty() {
            return Err(LandscapeError::EmptySet("A"));
        }
        if !(a > 0.0) {
            return Err(LandscapeError::NonPositiveThreshold);
        }
        let ground = self.ground_mask();
        let mut in_a = vec![false; self.len()];
        for &x in a_set {
            self.check_state(x)?;
            if ground[x] {
                return Err(LandscapeError::TouchesGround(x));
            }
            in_a[x] = true;
        }
        let ground_states = self.ground_states();
        let from_ground = self.bottleneck_from_set(&ground_states);

        // clause (1): exact excess on the candidate set
        let mut sorted_a = a_set.to_vec();
        sorted_a.sort_unstable();
        for &x in &sorted_a {
            let excess = from_ground[x] - self.energy(x);
            if (excess - a).abs() > ENERGY_TOL {
                return Ok(Verdict::fail(
                    x,
                    1,
                    format!("Phi(x, X_s) - H(x) = {excess}, expected {a}"),
                ));
            }
        }

        // clause (2): strict bound off the candidate set
        let stability_levels = match mode {
            SufficiencyMode::Path => None,
            SufficiencyMode::Stability => Some(self.relaxation_analysis()?.stability),
        };
        for x in 0..self.len() {
            if in_a[x] || ground[x] {
                continue;
            }
            let value = match &stability_levels {
                None => from_ground[x] - self.energy(x),
                Some(levels) => levels[&x],
            };
            if !(value < a) {
                let what = match mode {
                    SufficiencyMode::Path => "Phi(x, X_s) - H(x)",
                    SufficiencyMode::Stability => "V_x",
                };
                return Ok(Verdict::fail(x, 2, format!("{what} = {value}, not < {a}")));
            }
        }
        Ok(Verdict::pass())
    }

    /// Checks the necessity direction: with (Gamma_m, X_m) from the
    /// analysis, every x in X_m must satisfy Phi(x, X_s) - H(x) = Gamma_m
    /// and every other non-ground state must sit strictly below.
    pub fn verify_necessity(&self) -> Result<Verdict, LandscapeError> {
        self.require_valid()?;
        let report = self.relaxation_analysis()?;
        let gamma = report.gamma_m.ok_or(LandscapeError::Trivial)?;
        let ground = self.ground_mask();
        let from_ground = self.bottleneck_from_set(&report.ground_states);
        let mut in_m = vec![false; self.len()];
        for &x in &report.metastable_set {
            in_m[x] = true;
        }
        for x in 0..self.len() {
            if ground[x] {
                continue;
            }
            let excess = from_ground[x] - self.energy(x);
            if in_m[x] {
                if (excess - gamma).abs() > ENERGY_TOL {
                    return Ok(Verdict::fail(
                        x,
                        1,
                        format!("Phi(x, X_s) - H(x) = {excess}, Gamma_m = {gamma}"),
                    ));
                }
            } else if excess >= gamma - ENERGY_TOL {
                return Ok(Verdict::fail(
                    x,
                    2,
                    format!("Phi(x, X_s) - H(x) = {excess}, not below Gamma_m = {gamma}"),
                ));
            }
        }
        Ok(Verdict::pass())
    }
}
