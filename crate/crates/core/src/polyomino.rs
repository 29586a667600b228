//! Polyominoes and their isoperimetry.
//!
//! Droplet energies in lattice nucleation reduce to a perimeter-area
//! tradeoff, so the barrier computations lean on a handful of facts about
//! polyominoes: the minimal perimeter at fixed area is 2 ceil(2 sqrt(n)),
//! attained by a quasi-square with a partial bar, and minimizers are
//! connected and convex. This module provides the measurement, the shape
//! classification, the projections used to prove those facts, the closed
//! form decomposition, and a brute-force enumerator that cross-checks all
//! of it at small area.

use std::collections::HashSet;

use serde::Serialize;
use thiserror::Error;

/// Errors raised by polyomino construction and enumeration.
#[derive(Debug, Error)]
pub enum PolyominoError {
    #[error("polyomino must contain at least one cell")]
    Empty,
    #[error("duplicate cell ({0}, {1})")]
    Duplicate(i32, i32),
    #[error("area must be at least 1")]
    NonPositiveArea,
    #[error("enumeration bound: area {0} exceeds {1}")]
    EnumerationBound(usize, usize),
}

/// A finite set of unit cells, stored sorted and translated so the minimal
/// x and minimal y are both 0. Fixed orientation: rotations are distinct.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct Polyomino {
    cells: Vec<(i32, i32)>,
}

/// Connectivity, convexity, and monotonicity of a polyomino.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ShapeFlags {
    /// Cells form one edge-connected component.
    pub connected: bool,
    /// Every row and every column meets the shape in a contiguous run.
    pub convex: bool,
    /// Perimeter equals the perimeter of the smallest surrounding
    /// rectangle.
    pub monotone: bool,
}

/// Axis of a flushing projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    /// Each column drops to the bottom edge of the bounding box.
    Down,
    /// Each row slides to the left edge of the bounding box.
    Left,
}

impl Polyomino {
    /// Builds a polyomino from cell coordinates, translating to canonical
    /// position. Duplicates and empty input are rejected.
    pub fn new(
        cells: impl IntoIterator<Item = (i32, i32)>,
    ) -> Result<Self, PolyominoError> {
        let mut cells: Vec<(i32, i32)> = cells.into_iter().collect();
        if cells.is_empty() {
            return Err(PolyominoError::Empty);
        }
        cells.sort_unstable();
        for w in cells.windows(2) {
            if w[0] == w[1] {
                return Err(PolyominoError::Duplicate(w[0].0, w[0].1));
            }
        }
        let min_x = cells.iter().map(|c| c.0).min().unwrap();
        let min_y = cells.iter().map(|c| c.1).min().unwrap();
        for c in &mut cells {
            c.0 -= min_x;
            c.1 -= min_y;
        }
        Ok(Self { cells })
    }

    /// Canonical cells, sorted ascending.
    pub fn cells(&self) -> &[(i32, i32)] {
        &self.cells
    }

    pub fn area(&self) -> usize {
        self.cells.len()
    }

    /// (area, perimeter): the perimeter counts unit edges adjacent to
    /// exactly one cell, i.e. 4 area - 2 (internal adjacencies).
    pub fn measure(&self) -> (usize, usize) {
        let set: HashSet<(i32, i32)> = self.cells.iter().cloned().collect();
        let mut adjacencies = 0;
        for &(x, y) in &self.cells {
            // count each adjacency once from its lower-left cell
            if set.contains(&(x + 1, y)) {
                adjacencies += 1;
            }
            if set.contains(&(x, y + 1)) {
                adjacencies += 1;
            }
        }
        let area = self.cells.len();
        (area, 4 * area - 2 * adjacencies)
    }

    pub fn perimeter(&self) -> usize {
        self.measure().1
    }

    /// Side lengths (width, height) of the smallest surrounding rectangle.
    pub fn surrounding_rectangle(&self) -> (u32, u32) {
        let max_x = self.cells.iter().map(|c| c.0).max().unwrap();
        let max_y = self.cells.iter().map(|c| c.1).max().unwrap();
        (max_x as u32 + 1, max_y as u32 + 1)
    }

    /// Connectivity, convexity, monotonicity flags. For connected shapes
    /// convexity and monotonicity coincide.
    pub fn classify(&self) -> ShapeFlags {
        let set: HashSet<(i32, i32)> = self.cells.iter().cloned().collect();

        // connectivity by flood fill over edge adjacency
        let mut seen = HashSet::with_capacity(set.len());
        let mut stack = vec![self.cells[0]];
        seen.insert(self.cells[0]);
        while let Some((x, y)) = stack.pop() {
            for nb in [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)] {
                if set.contains(&nb) && seen.insert(nb) {
                    stack.push(nb);
                }
            }
        }
        let connected = seen.len() == set.len();

        // convexity: every occupied row and column is a contiguous run
        let (w, h) = self.surrounding_rectangle();
        let mut row_min = vec![i32::MAX; h as usize];
        let mut row_max = vec![i32::MIN; h as usize];
        let mut row_count = vec![0usize; h as usize];
        let mut col_min = vec![i32::MAX; w as usize];
        let mut col_max = vec![i32::MIN; w as usize];
        let mut col_count = vec![0usize; w as usize];
        for &(x, y) in &self.cells {
            let (xu, yu) = (x as usize, y as usize);
            row_min[yu] = row_min[yu].min(x);
            row_max[yu] = row_max[yu].max(x);
            row_count[yu] += 1;
            col_min[xu] = col_min[xu].min(y);
            col_max[xu] = col_max[xu].max(y);
            col_count[xu] += 1;
        }
        let rows_ok = (0..h as usize).all(|y| {
            row_count[y] == 0 || (row_max[y] - row_min[y] + 1) as usize == row_count[y]
        });
        let cols_ok = (0..w as usize).all(|x| {
            col_count[x] == 0 || (col_max[x] - col_min[x] + 1) as usize == col_count[x]
        });
        let convex = rows_ok && cols_ok;

        let monotone = self.perimeter() == 2 * (w as usize + h as usize);
        ShapeFlags { connected, convex, monotone }
    }

    /// Flushes every column to the bottom (or every row to the left),
    /// preserving the per-line cell counts. Area is invariant and the
    /// perimeter never increases.
    pub fn project(&self, direction: Projection) -> Polyomino {
        let (w, h) = self.surrounding_rectangle();
        let cells: Vec<(i32, i32)> = match direction {
            Projection::Down => {
                let mut counts = vec![0i32; w as usize];
                for &(x, _) in &self.cells {
                    counts[x as usize] += 1;
                }
                (0..w as i32)
                    .flat_map(|x| (0..counts[x as usize]).map(move |y| (x, y)))
                    .collect()
            }
            Projection::Left => {
                let mut counts = vec![0i32; h as usize];
                for &(_, y) in &self.cells {
                    counts[y as usize] += 1;
                }
                (0..h as i32)
                    .flat_map(|y| (0..counts[y as usize]).map(move |x| (x, y)))
                    .collect()
            }
        };
        Polyomino::new(cells).expect("projection preserves area")
    }
}

/// Which interval of the quasi-square decomposition an area falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeCase {
    /// n = s(s-1) + k: a rectangle with sides s and s-1 plus a k-bar on a
    /// longest side.
    Rectangular,
    /// n = s^2 + k: a square with side s plus a k-bar.
    Square,
}

/// The unique quasi-square decomposition of an area, together with the
/// minimal perimeter it dictates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MinimalShape {
    pub n: usize,
    pub s: usize,
    /// Bar length, 0 <= k < s.
    pub k: usize,
    pub case: ShapeCase,
    pub min_perimeter: usize,
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r.saturating_mul(r) > n {
        r -= 1;
    }
    while (r + 1).saturating_mul(r + 1) <= n {
        r += 1;
    }
    r
}

/// Least perimeter among polyominoes of area n: 2 ceil(2 sqrt(n)).
pub fn min_perimeter(n: usize) -> Result<usize, PolyominoError> {
    if n == 0 {
        return Err(PolyominoError::NonPositiveArea);
    }
    // ceil(2 sqrt(n)) = least m with m^2 >= 4n
    let mut m = isqrt(4 * n as u64);
    if m * m < 4 * n as u64 {
        m += 1;
    }
    Ok(2 * m as usize)
}

/// Decomposes an area into its quasi-square case and builds a canonical
/// minimizer: the rectangle or square with a bar of length k attached
/// flush to one end of a longest side.
pub fn minimal_shape(n: usize) -> Result<(MinimalShape, Polyomino), PolyominoError> {
    if n == 0 {
        return Err(PolyominoError::NonPositiveArea);
    }
    let r = isqrt(n as u64) as usize;
    let (s, k, case) = if n < r * r + r {
        // n in [s^2, s^2 + s)
        (r, n - r * r, ShapeCase::Square)
    } else {
        // n in [s(s-1), s^2) for s = r + 1
        let s = r + 1;
        (s, n - s * (s - 1), ShapeCase::Rectangular)
    };
    let shape = MinimalShape { n, s, k, case, min_perimeter: min_perimeter(n)? };

    let height = match case {
        ShapeCase::Rectangular => s - 1,
        ShapeCase::Square => s,
    };
    let mut cells = Vec::with_capacity(n);
    for x in 0..s as i32 {
        for y in 0..height as i32 {
            cells.push((x, y));
        }
    }
    for x in 0..k as i32 {
        cells.push((x, height as i32));
    }
    let poly = Polyomino::new(cells).expect("canonical minimizer is well formed");
    debug_assert_eq!(poly.perimeter(), shape.min_perimeter);
    Ok((shape, poly))
}

/// Whether [`enumerate_exhaustive`] walks only edge-connected shapes or
/// every cell set within an n-by-n bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnumClass {
    #[default]
    Connected,
    /// Includes disconnected shapes. Up to translation these are infinite
    /// in number, so the walk is restricted to an n-by-n box and capped at
    /// [`ALL_BOUND`].
    All,
}

/// Largest area for connected exhaustive enumeration.
pub const CONNECTED_BOUND: usize = 10;
/// Largest area for enumeration that includes disconnected shapes.
pub const ALL_BOUND: usize = 5;

/// All polyominoes of the given area up to translation. Connected shapes
/// are generated by growth with canonical deduplication; the `All` variant
/// enumerates subsets of the n-by-n box instead.
pub fn enumerate_exhaustive(
    n: usize,
    class: EnumClass,
) -> Result<Vec<Polyomino>, PolyominoError> {
    if n == 0 {
        return Err(PolyominoError::NonPositiveArea);
    }
    match class {
        EnumClass::Connected => {
            if n > CONNECTED_BOUND {
                return Err(PolyominoError::EnumerationBound(n, CONNECTED_BOUND));
            }
            Ok(enumerate_connected(n))
        }
        EnumClass::All => {
            if n > ALL_BOUND {
                return Err(PolyominoError::EnumerationBound(n, ALL_BOUND));
            }
            Ok(enumerate_all_in_box(n))
        }
    }
}

fn enumerate_connected(n: usize) -> Vec<Polyomino> {
    let mut level: HashSet<Polyomino> = HashSet::new();
    level.insert(Polyomino::new([(0, 0)]).unwrap());
    for _ in 1..n {
        let mut next = HashSet::with_capacity(level.len() * 4);
        for poly in &level {
            let occupied: HashSet<(i32, i32)> = poly.cells.iter().cloned().collect();
            for &(x, y) in &poly.cells {
                for nb in [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)] {
                    if !occupied.contains(&nb) {
                        let mut cells = poly.cells.clone();
                        cells.push(nb);
                        next.insert(Polyomino::new(cells).unwrap());
                    }
                }
            }
        }
        level = next;
    }
    let mut out: Vec<Polyomino> = level.into_iter().collect();
    out.sort_unstable_by(|a, b| a.cells.cmp(&b.cells));
    out
}

// every n-subset of the n x n box whose canonical translation is itself
fn enumerate_all_in_box(n: usize) -> Vec<Polyomino> {
    let side = n as i32;
    let box_cells: Vec<(i32, i32)> = (0..side)
        .flat_map(|x| (0..side).map(move |y| (x, y)))
        .collect();
    let mut out = Vec::new();
    let mut chosen: Vec<(i32, i32)> = Vec::with_capacity(n);
    fn rec(
        box_cells: &[(i32, i32)],
        start: usize,
        need: usize,
        chosen: &mut Vec<(i32, i32)>,
        out: &mut Vec<Polyomino>,
    ) {
        if need == 0 {
            let touches_left = chosen.iter().any(|c| c.0 == 0);
            let touches_bottom = chosen.iter().any(|c| c.1 == 0);
            if touches_left && touches_bottom {
                out.push(Polyomino::new(chosen.iter().cloned()).unwrap());
            }
            return;
        }
        if box_cells.len() - start < need {
            return;
        }
        for i in start..box_cells.len() {
            chosen.push(box_cells[i]);
            rec(box_cells, i + 1, need - 1, chosen, out);
            chosen.pop();
        }
    }
    rec(&box_cells, 0, n, &mut chosen, &mut out);
    out.sort_unstable_by(|a, b| a.cells.cmp(&b.cells));
    out
}
