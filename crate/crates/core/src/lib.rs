//! Analysis of finite reversible energy landscapes and the Metropolis
//! dynamics they drive.
//!
//! The crate is organized around one object, [`landscape::EnergyLandscape`],
//! and four views of it:
//!
//! * [`landscape`]: the landscape itself plus variational analysis, namely
//!   communication heights, stability levels, the relaxation height Gamma_m,
//!   gates between states, and the equivalence partition of the maximally
//!   stable set.
//! * [`capacity`]: the reversible Metropolis chain at inverse temperature
//!   beta, its Gibbs measure, Dirichlet forms, capacities between sets, and
//!   the sharp-bound probes that connect capacities back to Gamma_m.
//! * [`markov`]: seeded Monte Carlo simulation of the same chain, exit time
//!   experiments, Arrhenius slope fits, and gate passage statistics.
//! * [`blume_capel`] and [`polyomino`]: a concrete spin model whose droplet
//!   geometry realizes multiple metastable states, and the isoperimetric
//!   facts about polyominoes that underpin its energy barriers.

pub mod blume_capel;
pub mod capacity;
pub mod fit;
pub mod landscape;
pub mod markov;
pub mod polyomino;
pub mod testkit;

pub use landscape::{EnergyLandscape, LandscapeError, StateId};
