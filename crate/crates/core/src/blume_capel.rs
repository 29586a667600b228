//! Blume-Capel spins on a periodic square lattice.
//!
//! Spins take values in {-1, 0, +1} on an L x L torus with energy
//!
//! ```text
//! H(sigma) = sum_{<ij>} (sigma_i - sigma_j)^2
//!            - lambda sum_i sigma_i^2 - h sum_i sigma_i
//! ```
//!
//! summed over nearest-neighbor pairs, each unordered pair once. For
//! lambda = 0 and small positive field h the minus phase relaxes to the
//! plus phase through a critical droplet: a quasi-square of side
//! `ell_c = floor(2/h) + 1` with a protuberance, costing
//! `gamma_c = 4 ell_c - h (ell_c (ell_c - 1) + 1)`. This module builds
//! those droplets, the canonical growth path between the uniform phases,
//! the single-flip dynamics adapter, and (for tiny L) the fully
//! enumerated energy landscape.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::landscape::EnergyLandscape;
use crate::markov::Dynamics;
use crate::polyomino::Polyomino;

/// Errors raised by model construction and the droplet operations.
#[derive(Debug, Error)]
pub enum BcError {
    #[error("torus side must be at least 2, got {0}")]
    SideTooSmall(usize),
    #[error("field and chemical potential must be finite")]
    NonFiniteParameter,
    #[error("spin value {0} outside {{-1, 0, +1}}")]
    BadSpin(i8),
    #[error("configuration has {0} spins, expected {1}")]
    BadLength(usize, usize),
    #[error("site index {0} out of range for {1} sites")]
    BadSite(usize, usize),
    #[error("field must be positive, got {0}")]
    NonPositiveField(f64),
    #[error("requires zero chemical potential, got lambda = {0}")]
    NonzeroLambda(f64),
    #[error("beta must be positive, got {0}")]
    NonPositiveBeta(f64),
    #[error("droplet needs torus side at least {0}, got {1}")]
    DropletDoesNotFit(usize, usize),
    #[error("protuberance offset {0} outside side of length {1}")]
    BadProtuberance(usize, usize),
    #[error("formula invalid for winding sets")]
    WindingPolyomino,
    #[error("enumeration needs about {required} bytes, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u64 },
    #[error("state id {0} out of range for torus side {1}")]
    BadStateId(u64, usize),
    #[error("grid parse: {0}")]
    BadGrid(String),
}

/// Torus side, field, and chemical potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    l: usize,
    h: f64,
    lambda: f64,
}

/// Which clauses of the small-field regime hold for these parameters.
/// Violations are reported, never raised: finite lattices outside the
/// regime are exactly what the enumeration experiments probe.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConditionReport {
    /// 0 < h < 1.
    pub field_in_unit_interval: bool,
    /// 2/h is not an integer, so the critical length is unambiguous.
    pub critical_ratio_not_integer: bool,
    /// L^2 >= 49 / h^4, the lattice comfortably holds a critical droplet.
    pub lattice_large_enough: bool,
}

impl ConditionReport {
    pub fn ok(&self) -> bool {
        self.field_in_unit_interval
            && self.critical_ratio_not_integer
            && self.lattice_large_enough
    }

    /// Human-readable description of each violated clause.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.field_in_unit_interval {
            out.push("field outside (0, 1)".to_string());
        }
        if !self.critical_ratio_not_integer {
            out.push("2/h is an integer: critical length is degenerate".to_string());
        }
        if !self.lattice_large_enough {
            out.push("lattice smaller than 49/h^4".to_string());
        }
        out
    }
}

impl ModelParams {
    /// Zero chemical potential model on an L x L torus.
    pub fn new(l: usize, h: f64) -> Result<Self, BcError> {
        Self::with_lambda(l, h, 0.0)
    }

    pub fn with_lambda(l: usize, h: f64, lambda: f64) -> Result<Self, BcError> {
        if l < 2 {
            return Err(BcError::SideTooSmall(l));
        }
        if !h.is_finite() || !lambda.is_finite() {
            return Err(BcError::NonFiniteParameter);
        }
        Ok(Self { l, h, lambda })
    }

    pub fn side(&self) -> usize {
        self.l
    }

    pub fn field(&self) -> f64 {
        self.h
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n_sites(&self) -> usize {
        self.l * self.l
    }

    /// The four nearest neighbors of a site, row-major torus indexing.
    pub fn neighbors_of(&self, site: usize) -> [usize; 4] {
        let l = self.l;
        let (r, c) = (site / l, site % l);
        [
            ((r + 1) % l) * l + c,
            ((r + l - 1) % l) * l + c,
            r * l + (c + 1) % l,
            r * l + (c + l - 1) % l,
        ]
    }

    pub fn condition_report(&self) -> ConditionReport {
        let h = self.h;
        let in_unit = h > 0.0 && h < 1.0;
        let ratio_ok = in_unit && (2.0 / h).fract() != 0.0;
        let large = in_unit && (self.l * self.l) as f64 >= 49.0 / h.powi(4);
        ConditionReport {
            field_in_unit_interval: in_unit,
            critical_ratio_not_integer: ratio_ok,
            lattice_large_enough: large,
        }
    }

    fn require_zero_lambda(&self) -> Result<(), BcError> {
        if self.lambda != 0.0 {
            return Err(BcError::NonzeroLambda(self.lambda));
        }
        Ok(())
    }
}

/// An immutable spin assignment on the torus, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfiguration {
    l: usize,
    spins: Vec<i8>,
}

fn check_spin(s: i8) -> Result<(), BcError> {
    if !(-1..=1).contains(&s) {
        return Err(BcError::BadSpin(s));
    }
    Ok(())
}

impl SpinConfiguration {
    pub fn new(l: usize, spins: Vec<i8>) -> Result<Self, BcError> {
        if l < 2 {
            return Err(BcError::SideTooSmall(l));
        }
        if spins.len() != l * l {
            return Err(BcError::BadLength(spins.len(), l * l));
        }
        for &s in &spins {
            check_spin(s)?;
        }
        Ok(Self { l, spins })
    }

    pub fn uniform(l: usize, spin: i8) -> Result<Self, BcError> {
        check_spin(spin)?;
        Self::new(l, vec![spin; l * l])
    }

    pub fn side(&self) -> usize {
        self.l
    }

    pub fn n_sites(&self) -> usize {
        self.spins.len()
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn spin(&self, site: usize) -> i8 {
        self.spins[site]
    }

    pub fn site(&self, row: usize, col: usize) -> usize {
        (row % self.l) * self.l + col % self.l
    }

    /// Copy with one site changed.
    pub fn with_spin(&self, site: usize, spin: i8) -> Result<Self, BcError> {
        check_spin(spin)?;
        if site >= self.spins.len() {
            return Err(BcError::BadSite(site, self.spins.len()));
        }
        Ok(self.with_spin_unchecked(site, spin))
    }

    fn with_spin_unchecked(&self, site: usize, spin: i8) -> Self {
        let mut spins = self.spins.clone();
        spins[site] = spin;
        Self { l: self.l, spins }
    }

    /// Base-3 state id: row-major digits, digit = spin + 1. None when
    /// 3^(L^2) does not fit in 64 bits (L > 6).
    pub fn encode(&self) -> Option<u64> {
        if self.spins.len() > 40 {
            return None;
        }
        let mut id = 0u64;
        for &s in self.spins.iter().rev() {
            id = id * 3 + (s + 1) as u64;
        }
        Some(id)
    }

    pub fn decode(id: u64, l: usize) -> Result<Self, BcError> {
        if l < 2 {
            return Err(BcError::SideTooSmall(l));
        }
        let n = l * l;
        if n > 40 || id >= 3u64.pow(n as u32) {
            return Err(BcError::BadStateId(id, l));
        }
        let mut spins = Vec::with_capacity(n);
        let mut rest = id;
        for _ in 0..n {
            spins.push((rest % 3) as i8 - 1);
            rest /= 3;
        }
        Ok(Self { l, spins })
    }

    /// Text grid with one row per line, cells drawn as `-`, `0`, `+`.
    pub fn to_grid(&self) -> String {
        let mut out = String::with_capacity(self.n_sites() + self.l);
        for r in 0..self.l {
            for c in 0..self.l {
                out.push(match self.spins[r * self.l + c] {
                    -1 => '-',
                    0 => '0',
                    _ => '+',
                });
            }
            out.push('\n');
        }
        out
    }

    pub fn from_grid(text: &str) -> Result<Self, BcError> {
        let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        let l = lines.len();
        if l < 2 {
            return Err(BcError::BadGrid(format!("{l} rows, need at least 2")));
        }
        let mut spins = Vec::with_capacity(l * l);
        for (i, line) in lines.iter().enumerate() {
            let row = line.trim();
            if row.chars().count() != l {
                return Err(BcError::BadGrid(format!(
                    "row {} has {} cells, expected {l}",
                    i + 1,
                    row.chars().count()
                )));
            }
            for ch in row.chars() {
                spins.push(match ch {
                    '-' => -1,
                    '0' => 0,
                    '+' => 1,
                    other => {
                        return Err(BcError::BadGrid(format!(
                            "row {}: unexpected character {other:?}",
                            i + 1
                        )))
                    }
                });
            }
        }
        Self::new(l, spins)
    }
}

impl std::fmt::Display for SpinConfiguration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_grid())
    }
}

/// Integer coefficients of the energy: H = coupling - lambda * square_sum
/// - h * spin_sum. Keeping them exact makes incremental updates bitwise
/// consistent with full recomputation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EnergyTerms {
    pub coupling: i64,
    pub square_sum: i64,
    pub spin_sum: i64,
}

impl EnergyTerms {
    pub fn value(&self, params: &ModelParams) -> f64 {
        self.coupling as f64
            - params.lambda * self.square_sum as f64
            - params.h * self.spin_sum as f64
    }
}

/// Exact integer energy coefficients of a configuration.
pub fn energy_terms(config: &SpinConfiguration) -> EnergyTerms {
    let l = config.l;
    let mut coupling = 0i64;
    let mut square_sum = 0i64;
    let mut spin_sum = 0i64;
    for r in 0..l {
        for c in 0..l {
            let s = config.spins[r * l + c] as i64;
            // right and down neighbors cover each torus pair once
            let right = config.spins[r * l + (c + 1) % l] as i64;
            let down = config.spins[((r + 1) % l) * l + c] as i64;
            coupling += (s - right) * (s - right) + (s - down) * (s - down);
            square_sum += s * s;
            spin_sum += s;
        }
    }
    EnergyTerms { coupling, square_sum, spin_sum }
}

/// Total energy of a configuration.
pub fn hamiltonian(config: &SpinConfiguration, params: &ModelParams) -> f64 {
    assert_eq!(config.l, params.l, "configuration and parameters disagree on L");
    energy_terms(config).value(params)
}

/// Exact coefficient change caused by setting one site to `new_spin`,
/// computed from the four neighbors only.
pub fn single_flip_terms(
    config: &SpinConfiguration,
    site: usize,
    new_spin: i8,
) -> EnergyTerms {
    let old = config.spins[site] as i64;
    let new = new_spin as i64;
    let l = config.l;
    let (r, c) = (site / l, site % l);
    let mut coupling = 0i64;
    for nb in [
        ((r + 1) % l) * l + c,
        ((r + l - 1) % l) * l + c,
        r * l + (c + 1) % l,
        r * l + (c + l - 1) % l,
    ] {
        let s = config.spins[nb] as i64;
        coupling += (new - s) * (new - s) - (old - s) * (old - s);
    }
    EnergyTerms {
        coupling,
        square_sum: new * new - old * old,
        spin_sum: new - old,
    }
}

/// H(flipped) - H(config) for a single-site change, exactly consistent
/// with recomputing both energies from scratch.
pub fn single_flip_delta(
    config: &SpinConfiguration,
    site: usize,
    new_spin: i8,
    params: &ModelParams,
) -> f64 {
    assert_eq!(config.l, params.l, "configuration and parameters disagree on L");
    check_spin(new_spin).expect("new_spin outside {-1, 0, +1}");
    single_flip_terms(config, site, new_spin).value(params)
}

/// Single-site Metropolis dynamics: a proposal picks one of the L^2 sites
/// and one of its 2 alternative spin values, each with weight 1/(2 L^2).
/// The proposal weights sum to 1, so there is no lazy remainder.
#[derive(Debug, Clone, Copy)]
pub struct BcDynamics {
    params: ModelParams,
    beta: f64,
}

impl BcDynamics {
    pub fn new(params: ModelParams, beta: f64) -> Result<Self, BcError> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(BcError::NonPositiveBeta(beta));
        }
        Ok(Self { params, beta })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// The two spin values a site can move to.
    pub fn alternatives(spin: i8) -> [i8; 2] {
        match spin {
            -1 => [0, 1],
            0 => [-1, 1],
            _ => [-1, 0],
        }
    }
}

impl Dynamics for BcDynamics {
    type State = SpinConfiguration;

    fn beta(&self) -> f64 {
        self.beta
    }

    fn at_beta(&self, beta: f64) -> Self {
        assert!(beta > 0.0, "beta must be positive");
        Self { params: self.params, beta }
    }

    fn propose<R: Rng>(
        &self,
        x: &SpinConfiguration,
        rng: &mut R,
    ) -> Option<(SpinConfiguration, f64)> {
        let site = rng.gen_range(0..self.params.n_sites());
        let alt = Self::alternatives(x.spin(site))[rng.gen_range(0..2usize)];
        let delta = single_flip_terms(x, site, alt).value(&self.params);
        Some((x.with_spin_unchecked(site, alt), delta))
    }
}

/// Critical droplet scale of the model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalQuantities {
    /// Critical side length, floor(2/h) + 1.
    pub ell_c: usize,
    /// Energy barrier 4 ell_c - h (ell_c (ell_c - 1) + 1).
    pub gamma_c: f64,
    pub condition: ConditionReport,
}

impl CriticalQuantities {
    /// Cells in a critical droplet: ell_c (ell_c - 1) + 1.
    pub fn critical_area(&self) -> usize {
        self.ell_c * (self.ell_c - 1) + 1
    }
}

/// Computes the critical length and barrier for a positive field.
pub fn critical_quantities(params: &ModelParams) -> Result<CriticalQuantities, BcError> {
    let h = params.h;
    if !(h > 0.0) {
        return Err(BcError::NonPositiveField(h));
    }
    let ell_c = (2.0 / h).floor() as usize + 1;
    let gamma_c = 4.0 * ell_c as f64 - h * (ell_c * (ell_c - 1) + 1) as f64;
    let condition = params.condition_report();
    if condition.ok() {
        // strict sandwich holds whenever 2/h is not an integer
        debug_assert!(2.0 / h < ell_c as f64 && (ell_c as f64) < 2.0 / h + 1.0);
        debug_assert!(ell_c >= 3);
    }
    Ok(CriticalQuantities { ell_c, gamma_c, condition })
}

/// Which uniform background hosts which foreground droplet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PhasePair {
    /// Zero spins growing in the minus phase.
    ZeroInMinus,
    /// Plus spins growing in the zero phase.
    PlusInZero,
}

impl PhasePair {
    pub fn background(&self) -> i8 {
        match self {
            PhasePair::ZeroInMinus => -1,
            PhasePair::PlusInZero => 0,
        }
    }

    pub fn foreground(&self) -> i8 {
        match self {
            PhasePair::ZeroInMinus => 0,
            PhasePair::PlusInZero => 1,
        }
    }
}

/// Whether the droplet rectangle's longest sides run horizontally or
/// vertically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Horizontal,
    Vertical,
}

/// Placement of a critical droplet: an ell_c by (ell_c - 1) rectangle
/// plus a single protuberance against one of the longest sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DropletSpec {
    /// Top-left rectangle corner (row, col); wraps around the torus.
    pub anchor: (usize, usize),
    pub orientation: Orientation,
    /// Offset of the protuberance along the longest side, 0 <= offset < ell_c.
    pub protuberance: usize,
    pub phase: PhasePair,
}

/// Realizes a droplet spec as a configuration: the rectangle and
/// protuberance in the foreground spin over a uniform background. The
/// protuberance sits against the far longest side (below a horizontal
/// rectangle, right of a vertical one).
pub fn droplet_config(
    spec: &DropletSpec,
    params: &ModelParams,
) -> Result<SpinConfiguration, BcError> {
    params.require_zero_lambda()?;
    let crit = critical_quantities(params)?;
    let ell = crit.ell_c;
    if params.l < ell + 2 {
        return Err(BcError::DropletDoesNotFit(ell + 2, params.l));
    }
    if spec.protuberance >= ell {
        return Err(BcError::BadProtuberance(spec.protuberance, ell));
    }
    let phase = spec.phase;
    let mut config = SpinConfiguration::uniform(params.l, phase.background())?;
    let fg = phase.foreground();
    let (ar, ac) = spec.anchor;
    // rectangle (height, width) and protuberance offset (row, col),
    // long sides of length ell, protuberance against the far long side
    let ((height, width), prot) = match spec.orientation {
        Orientation::Horizontal => ((ell - 1, ell), (ell - 1, spec.protuberance)),
        Orientation::Vertical => ((ell, ell - 1), (spec.protuberance, ell - 1)),
    };
    for r in 0..height {
        for c in 0..width {
            let site = config.site(ar + r, ac + c);
            config.spins[site] = fg;
        }
    }
    let site = config.site(ar + prot.0, ac + prot.1);
    config.spins[site] = fg;
    Ok(config)
}

/// Canonical polyomino shapes of a critical droplet (both orientations,
/// both long sides, every protuberance offset), translation-normalized.
fn critical_shapes(ell: usize) -> Vec<Polyomino> {
    let e = ell as i32;
    let mut out = Vec::new();
    for off in 0..e {
        for &prow in &[-1, e - 1] {
            // horizontal: rectangle e wide, e-1 tall, protuberance above
            // or below at column `off`
            let mut cells: Vec<(i32, i32)> = Vec::new();
            for x in 0..e {
                for y in 0..e - 1 {
                    cells.push((x, y));
                }
            }
            cells.push((off, prow));
            out.push(Polyomino::new(cells.iter().cloned()).unwrap());
            // vertical: transpose
            let t: Vec<(i32, i32)> = cells.iter().map(|&(x, y)| (y, x)).collect();
            out.push(Polyomino::new(t).unwrap());
        }
    }
    out.sort_unstable_by(|a, b| a.cells().cmp(b.cells()));
    out.dedup();
    out
}

/// Exact membership test: uniform background, foreground cells forming
/// precisely a critical rectangle plus a protuberance on a longest side,
/// anywhere on the torus in either orientation.
pub fn is_critical_droplet(
    config: &SpinConfiguration,
    params: &ModelParams,
    phase: PhasePair,
) -> bool {
    assert_eq!(config.l, params.l, "configuration and parameters disagree on L");
    let crit = match critical_quantities(params) {
        Ok(c) => c,
        Err(_) => return false,
    };
    let (bg, fg) = (phase.background(), phase.foreground());
    let l = params.l;
    let mut cells = Vec::new();
    for site in 0..config.n_sites() {
        let s = config.spins[site];
        if s == fg {
            cells.push(((site / l) as i32, (site % l) as i32));
        } else if s != bg {
            return false;
        }
    }
    if cells.len() != crit.critical_area() {
        return false;
    }
    match unwrap_on_torus(&cells, l) {
        Some(poly) => critical_shapes(crit.ell_c).contains(&poly),
        None => false,
    }
}

/// Translates a torus cell set so it fits inside the fundamental domain
/// without crossing the seam. None when the set occupies every row or
/// every column (winds the torus).
fn unwrap_on_torus(cells: &[(i32, i32)], l: usize) -> Option<Polyomino> {
    let li = l as i32;
    let occupied_rows: std::collections::HashSet<i32> =
        cells.iter().map(|c| c.0).collect();
    let occupied_cols: std::collections::HashSet<i32> =
        cells.iter().map(|c| c.1).collect();
    let free_row = (0..li).find(|r| !occupied_rows.contains(r))?;
    let free_col = (0..li).find(|c| !occupied_cols.contains(c))?;
    let shifted: Vec<(i32, i32)> = cells
        .iter()
        .map(|&(r, c)| ((r - free_row - 1).rem_euclid(li), (c - free_col - 1).rem_euclid(li)))
        .collect();
    Polyomino::new(shifted).ok()
}

/// The canonical growth path between the uniform phases: quasi-squares
/// grown by a protuberance plus slice fills, minus-to-zero then
/// zero-to-plus, spliced at the all-zero configuration.
#[derive(Debug, Clone)]
pub struct ReferencePath {
    pub configs: Vec<SpinConfiguration>,
    pub energies: Vec<f64>,
    /// Index of the all-zero configuration where the two legs meet.
    pub zero_index: usize,
}

impl ReferencePath {
    /// Energies of the minus-to-zero leg (inclusive of both endpoints).
    pub fn leg1_energies(&self) -> &[f64] {
        &self.energies[..=self.zero_index]
    }

    /// Energies of the zero-to-plus leg (inclusive of both endpoints).
    pub fn leg2_energies(&self) -> &[f64] {
        &self.energies[self.zero_index..]
    }
}

/// Site order for growing the foreground phase over the whole torus:
/// quasi-square rectangles anchored at the origin, each new slice opened
/// by a protuberance at the lowest admissible (row, col) of a longest
/// side and filled in scan order.
fn growth_order(l: usize) -> Vec<usize> {
    let mut order = Vec::with_capacity(l * l);
    order.push(0);
    let (mut w, mut h) = (1usize, 1usize);
    while !(w == l && h == l) {
        if w == h {
            // open a new column on the right, top first
            for r in 0..h {
                order.push(r * l + w);
            }
            w += 1;
        } else {
            // w == h + 1: open a new row at the bottom, left first
            for c in 0..w {
                order.push(h * l + c);
            }
            h += 1;
        }
    }
    order
}

/// Builds the reference path and its energy profile.
pub fn reference_path(params: &ModelParams) -> Result<ReferencePath, BcError> {
    params.require_zero_lambda()?;
    let crit = critical_quantities(params)?;
    if params.l < crit.ell_c + 2 {
        return Err(BcError::DropletDoesNotFit(crit.ell_c + 2, params.l));
    }
    let order = growth_order(params.l);
    let mut configs = Vec::with_capacity(2 * params.n_sites() + 1);
    let mut current = SpinConfiguration::uniform(params.l, -1)?;
    configs.push(current.clone());
    for phase in [PhasePair::ZeroInMinus, PhasePair::PlusInZero] {
        for &site in &order {
            current = current.with_spin_unchecked(site, phase.foreground());
            configs.push(current.clone());
        }
    }
    let energies: Vec<f64> = configs.iter().map(|c| hamiltonian(c, params)).collect();
    Ok(ReferencePath { configs, energies, zero_index: params.n_sites() })
}

/// Configuration families the growth argument tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Manifold {
    /// Exactly L^2 - (ell_c (ell_c - 1) + 1) minus spins.
    CriticalMinuses,
    /// No minus spins and exactly ell_c (ell_c - 1) + 1 plus spins.
    CriticalPluses,
}

/// Membership in the counting manifolds above.
pub fn manifold_membership(
    config: &SpinConfiguration,
    params: &ModelParams,
    which: Manifold,
) -> bool {
    assert_eq!(config.l, params.l, "configuration and parameters disagree on L");
    let crit = match critical_quantities(params) {
        Ok(c) => c,
        Err(_) => return false,
    };
    let area = crit.critical_area();
    match which {
        Manifold::CriticalMinuses => {
            let minuses = config.spins.iter().filter(|&&s| s == -1).count();
            minuses == config.n_sites() - area
        }
        Manifold::CriticalPluses => {
            config.spins.iter().all(|&s| s >= 0)
                && config.spins.iter().filter(|&&s| s == 1).count() == area
        }
    }
}

/// Energy excess over the uniform background of a configuration whose
/// foreground cells are the given polyomino: Perimeter - h Area. Errors
/// when the polyomino cannot be placed without wrapping, where interface
/// counting and the perimeter disagree.
pub fn droplet_energy(
    poly: &Polyomino,
    params: &ModelParams,
    _phase: PhasePair,
) -> Result<f64, BcError> {
    params.require_zero_lambda()?;
    let (w, h) = poly.surrounding_rectangle();
    if w as usize >= params.l || h as usize >= params.l {
        return Err(BcError::WindingPolyomino);
    }
    let (area, perimeter) = poly.measure();
    Ok(perimeter as f64 - params.h * area as f64)
}

/// Default memory allowance for exhaustive enumeration: enough for L = 3,
/// refusing L = 4 unless raised explicitly.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 2 << 30;

/// Materializes the full landscape of all 3^(L^2) configurations under
/// single-flip moves, base-3 state ids. The memory estimate is coarse but
/// errs on the safe side.
pub fn enumerate_torus(
    params: &ModelParams,
    budget_bytes: u64,
) -> Result<EnergyLandscape, BcError> {
    let n = params.n_sites();
    let states: u128 = if n <= 80 {
        3u128.pow(n as u32)
    } else {
        u128::MAX
    };
    // per state: energy + 2n adjacency entries + n undirected edge records
    let required = states.saturating_mul(8 + 56 * n as u128);
    if required > budget_bytes as u128 {
        return Err(BcError::BudgetExceeded { required, budget: budget_bytes });
    }
    let nstates = states as usize;
    let mut energies = Vec::with_capacity(nstates);
    for id in 0..nstates {
        let config = SpinConfiguration::decode(id as u64, params.l)
            .expect("id in range by construction");
        energies.push(hamiltonian(&config, params));
    }
    let mut pow3 = vec![1usize; n];
    for k in 1..n {
        pow3[k] = pow3[k - 1] * 3;
    }
    let mut pairs = Vec::with_capacity(nstates * n);
    for id in 0..nstates {
        for k in 0..n {
            let digit = (id / pow3[k]) % 3;
            for alt in 0..3 {
                if alt > digit {
                    pairs.push((id, id + (alt - digit) * pow3[k]));
                }
            }
        }
    }
    Ok(EnergyLandscape::metropolis(energies, pairs)
        .expect("enumerated landscape is structurally valid"))
}
