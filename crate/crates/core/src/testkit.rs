//! Seeded generators for randomized test corpora.
//!
//! Every generator is a pure function of its seed, so a failing case
//! reproduces exactly from the printed seed. The module is public because
//! the command-line crate's acceptance suite replays the same corpora.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::landscape::{CostedEdge, EnergyLandscape};

/// Shape parameters for [`random_connected_landscape`].
#[derive(Debug, Clone, Copy)]
pub struct LandscapeShape {
    /// Number of states, at least 2.
    pub n_states: usize,
    /// Chords laid over the random spanning tree. Duplicates and self
    /// pairs are dropped, so this is an upper bound on the extra edges.
    pub extra_edges: usize,
    /// Draw symmetric explicit barriers instead of bare metropolis costs.
    pub explicit: bool,
}

/// Energies and barriers sit on this grid, so degenerate ties are
/// structural rather than floating-point accidents, matching how the
/// lattice models produce them.
pub const ENERGY_QUANTUM: f64 = 0.25;

const ENERGY_LEVELS: u32 = 16;
const BARRIER_LEVELS: u32 = 8;

/// A connected reversible landscape drawn from `seed`: a uniform random
/// attachment tree plus random chords, with grid-quantized energies.
///
/// In explicit mode each edge carries an extra symmetric barrier `s >= 0`:
/// the directed costs are the metropolis ones plus `s`, which keeps the
/// reversibility identity exact for any draw.
pub fn random_connected_landscape(seed: u64, shape: LandscapeShape) -> EnergyLandscape {
    random_landscape_on_grid(seed, shape, ENERGY_LEVELS, BARRIER_LEVELS)
}

fn random_landscape_on_grid(
    seed: u64,
    shape: LandscapeShape,
    energy_levels: u32,
    barrier_levels: u32,
) -> EnergyLandscape {
    assert!(shape.n_states >= 2, "need at least two states");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.n_states;
    let energy: Vec<f64> = (0..n)
        .map(|_| ENERGY_QUANTUM * f64::from(rng.gen_range(0..=energy_levels)))
        .collect();
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for i in 1..n {
        edges.insert((rng.gen_range(0..i), i));
    }
    for _ in 0..shape.extra_edges {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    if shape.explicit {
        let costed = edges
            .into_iter()
            .map(|(a, b)| {
                let s = ENERGY_QUANTUM * f64::from(rng.gen_range(0..=barrier_levels));
                CostedEdge {
                    a,
                    b,
                    delta_ab: (energy[b] - energy[a]).max(0.0) + s,
                    delta_ba: (energy[a] - energy[b]).max(0.0) + s,
                }
            })
            .collect();
        EnergyLandscape::explicit(energy, costed).expect("generated landscape is valid")
    } else {
        EnergyLandscape::metropolis(energy, edges).expect("generated landscape is valid")
    }
}

/// The corpus member for one seed: size drawn in `[4, max_n]`, roughly
/// `1.5 n` candidate chords, explicit costs on odd seeds.
pub fn corpus_landscape(seed: u64, max_n: usize) -> EnergyLandscape {
    assert!(max_n >= 4, "corpus landscapes start at four states");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let n = rng.gen_range(4..=max_n);
    random_connected_landscape(
        seed,
        LandscapeShape { n_states: n, extra_edges: n + n / 2, explicit: seed % 2 == 1 },
    )
}

/// Corpus variant for cross-solver comparisons: the same topology
/// distribution on a compressed energy grid (levels within [0, 1.25],
/// barriers within [0, 0.25]).
///
/// Both potential solvers are backward stable, but their inputs round
/// differently (conductances against normalized jump probabilities), so the
/// agreement attainable between them shrinks with exp(beta * level spread).
/// The compressed grid keeps that factor benign across the probed betas.
pub fn capacity_corpus_landscape(seed: u64, max_n: usize) -> EnergyLandscape {
    assert!(max_n >= 4, "corpus landscapes start at four states");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let n = rng.gen_range(4..=max_n);
    random_landscape_on_grid(
        seed,
        LandscapeShape { n_states: n, extra_edges: n + n / 2, explicit: seed % 2 == 1 },
        5,
        1,
    )
}

/// A path landscape over the given energies with metropolis costs.
pub fn chain_landscape(energy: &[f64]) -> EnergyLandscape {
    let edges: Vec<(usize, usize)> = (1..energy.len()).map(|i| (i - 1, i)).collect();
    EnergyLandscape::metropolis(energy.to_vec(), edges).expect("chain is valid")
}
