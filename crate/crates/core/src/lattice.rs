//! Grids, intervals, measure points and lattice-valued functions.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{check_len, Error, Result};
use crate::math::pairwise_sum;

/// Uniform partition of `[0, 1)` into `2^level` cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DyadicGrid {
    level: u32,
}

impl DyadicGrid {
    pub const MAX_LEVEL: u32 = 24;

    pub fn new(level: u32) -> Result<Self> {
        if level > Self::MAX_LEVEL {
            return Err(Error::domain("grid level too large"));
        }
        Ok(DyadicGrid { level })
    }

    /// Grid with `cells` cells; `cells` must be a power of two.
    pub fn from_cells(cells: usize) -> Result<Self> {
        if cells == 0 || !cells.is_power_of_two() {
            return Err(Error::domain("cell count must be a power of two"));
        }
        Self::new(cells.trailing_zeros())
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn cells(&self) -> usize {
        1usize << self.level
    }

    pub fn cell_measure(&self) -> f64 {
        1.0 / self.cells() as f64
    }

    /// All cubes of `family`, ordered by level (longest first) then left endpoint.
    pub fn cubes(&self, family: CubeFamily) -> Vec<Interval> {
        let n = self.cells();
        let mut out = Vec::new();
        match family {
            CubeFamily::Dyadic => {
                for level in 0..=self.level {
                    let len = n >> level;
                    for j in 0..(1usize << level) {
                        out.push(Interval { start: j * len, end: (j + 1) * len });
                    }
                }
            }
            CubeFamily::AllAligned => {
                for len in (1..=n).rev() {
                    for start in 0..=(n - len) {
                        out.push(Interval { start, end: start + len });
                    }
                }
            }
        }
        out
    }
}

/// Which intervals count as cubes when taking suprema.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum CubeFamily {
    /// `[j 2^-l, (j+1) 2^-l)` for `0 <= l <= k`.
    #[default]
    Dyadic,
    /// Every `[a/N, b/N)` with `0 <= a < b <= N`.
    AllAligned,
}

impl CubeFamily {
    pub fn contains(&self, grid: DyadicGrid, q: Interval) -> bool {
        if q.end > grid.cells() {
            return false;
        }
        match self {
            CubeFamily::Dyadic => q.is_dyadic(),
            CubeFamily::AllAligned => true,
        }
    }
}

/// Half-open run of grid cells `[start, end)`; always nonempty.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Interval {
    pub start: usize,
    pub end: usize,
}

impl Interval {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start >= end {
            return Err(Error::domain("empty interval"));
        }
        Ok(Interval { start, end })
    }

    /// The dyadic interval `(level, index)` of `grid`.
    pub fn dyadic(grid: DyadicGrid, level: u32, index: usize) -> Result<Self> {
        if level > grid.level() || index >= (1usize << level) {
            return Err(Error::domain("dyadic coordinates outside the grid"));
        }
        let len = grid.cells() >> level;
        Ok(Interval { start: index * len, end: (index + 1) * len })
    }

    /// Interval `[a, b)` given by real endpoints; both must sit on grid nodes.
    pub fn from_endpoints(grid: DyadicGrid, a: f64, b: f64) -> Result<Self> {
        let n = grid.cells() as f64;
        let (sa, sb) = (a * n, b * n);
        let (ia, ib) = (libm::round(sa), libm::round(sb));
        if (sa - ia).abs() > 1e-9 || (sb - ib).abs() > 1e-9 || ia < 0.0 || ib > n {
            return Err(Error::domain("interval not aligned with grid"));
        }
        Self::new(ia as usize, ib as usize)
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.start <= cell && cell < self.end
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    /// Lebesgue measure `|Q|` on `grid`.
    pub fn measure(&self, grid: DyadicGrid) -> f64 {
        self.len() as f64 * grid.cell_measure()
    }

    pub fn is_dyadic(&self) -> bool {
        let len = self.len();
        len.is_power_of_two() && self.start % len == 0
    }

    /// `(level, index)` when this is a dyadic interval of `grid`.
    pub fn dyadic_coords(&self, grid: DyadicGrid) -> Option<(u32, usize)> {
        if !self.is_dyadic() || self.end > grid.cells() {
            return None;
        }
        let len = self.len();
        Some((grid.level() - len.trailing_zeros(), self.start / len))
    }

    /// The two dyadic children, or `None` for a single cell.
    pub fn children(&self) -> Option<(Interval, Interval)> {
        if self.len() < 2 {
            return None;
        }
        let mid = self.start + self.len() / 2;
        Some((Interval { start: self.start, end: mid }, Interval { start: mid, end: self.end }))
    }

    /// Ordering used to break ties between maximising cubes: longer first, then leftmost.
    pub(crate) fn canonical_key(&self) -> (core::cmp::Reverse<usize>, usize) {
        (core::cmp::Reverse(self.len()), self.start)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

/// Sum of `values` over the cells of `q`. Dyadic intervals are summed
/// pairwise, so a parent's sum is exactly the sum of its children's sums.
pub fn interval_sum(values: &[f64], q: Interval) -> f64 {
    let cells = &values[q.start..q.end];
    if q.is_dyadic() {
        pairwise_sum(cells)
    } else {
        cells.iter().sum()
    }
}

/// `⟨f⟩_Q`: the mean of the cell values of `f` over `Q`.
pub fn average(values: &[f64], q: Interval) -> Result<f64> {
    if q.end > values.len() || q.start >= q.end {
        return Err(Error::domain("interval not aligned with grid"));
    }
    Ok(interval_sum(values, q) / q.len() as f64)
}

/// Visits every cube of `family` with the sums of each array over the cube and
/// the minimum of the first array over the cube.
///
/// Dyadic cubes always receive the same sums as [`interval_sum`] would produce,
/// whichever family is scanned, so enlarging the family can only add cubes.
pub(crate) fn scan_cubes<const K: usize>(
    arrays: [&[f64]; K],
    family: CubeFamily,
    mut visit: impl FnMut(Interval, [f64; K], f64),
) {
    let n = arrays[0].len();
    debug_assert!(n.is_power_of_two());
    // Bottom-up dyadic tree: level arrays of sums and minima.
    let mut sums: [Vec<f64>; K] = core::array::from_fn(|k| arrays[k].to_vec());
    let mut mins: Vec<f64> = arrays[0].to_vec();
    let mut len = 1usize;
    loop {
        for j in 0..sums[0].len() {
            let q = Interval { start: j * len, end: (j + 1) * len };
            visit(q, core::array::from_fn(|k| sums[k][j]), mins[j]);
        }
        if sums[0].len() == 1 {
            break;
        }
        for s in sums.iter_mut() {
            *s = s.chunks_exact(2).map(|c| c[0] + c[1]).collect();
        }
        mins = mins.chunks_exact(2).map(|c| c[0].min(c[1])).collect();
        len *= 2;
    }
    if family == CubeFamily::AllAligned {
        for start in 0..n {
            let mut acc = [0.0; K];
            let mut min = f64::INFINITY;
            for end in (start + 1)..=n {
                for k in 0..K {
                    acc[k] += arrays[k][end - 1];
                }
                min = min.min(arrays[0][end - 1]);
                let q = Interval { start, end };
                if !q.is_dyadic() {
                    visit(q, acc, min);
                }
            }
        }
    }
}

/// Finite measure space `{1..M}` with point masses `μ_i > 0`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeasurePoints {
    masses: Vec<f64>,
}

impl MeasurePoints {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::domain("at least one measure point is required"));
        }
        if masses.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(Error::domain("point masses must be positive and finite"));
        }
        Ok(MeasurePoints { masses })
    }

    /// `M` points of unit mass.
    pub fn counting(m: usize) -> Result<Self> {
        Self::new(alloc::vec![1.0; m])
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }
}

/// Real array indexed by `(cell, point)`, stored row-major over cells.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeFunction {
    grid: DyadicGrid,
    points: MeasurePoints,
    values: Vec<f64>,
}

impl LatticeFunction {
    pub fn new(grid: DyadicGrid, points: MeasurePoints, values: Vec<f64>) -> Result<Self> {
        check_len(grid.cells() * points.len(), values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("function values must be finite"));
        }
        Ok(LatticeFunction { grid, points, values })
    }

    pub fn zeros(grid: DyadicGrid, points: MeasurePoints) -> Self {
        let values = alloc::vec![0.0; grid.cells() * points.len()];
        LatticeFunction { grid, points, values }
    }

    /// Single-point function on counting measure.
    pub fn scalar(grid: DyadicGrid, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, MeasurePoints::counting(1)?, values)
    }

    /// Builds a function from per-point slices (`slices[s][x]`).
    pub fn from_slices(grid: DyadicGrid, points: MeasurePoints, slices: &[Vec<f64>]) -> Result<Self> {
        check_len(points.len(), slices.len())?;
        let n = grid.cells();
        let m = points.len();
        let mut values = alloc::vec![0.0; n * m];
        for (s, slice) in slices.iter().enumerate() {
            check_len(n, slice.len())?;
            for (x, &v) in slice.iter().enumerate() {
                values[x * m + s] = v;
            }
        }
        Self::new(grid, points, values)
    }

    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    pub fn points(&self) -> &MeasurePoints {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, cell: usize, point: usize) -> f64 {
        self.values[cell * self.points.len() + point]
    }

    /// Copy of the scalar function `x ↦ f(x, s)`.
    pub fn slice(&self, s: usize) -> Vec<f64> {
        let m = self.points.len();
        (0..self.grid.cells()).map(|x| self.values[x * m + s]).collect()
    }

    pub fn slices(&self) -> Vec<Vec<f64>> {
        (0..self.points.len()).map(|s| self.slice(s)).collect()
    }

    /// Applies `op` to each scalar slice and reassembles the result.
    pub fn map_slices(&self, mut op: impl FnMut(&[f64]) -> Result<Vec<f64>>) -> Result<Self> {
        let out: Result<Vec<Vec<f64>>> = (0..self.points.len()).map(|s| op(&self.slice(s))).collect();
        Self::from_slices(self.grid, self.points.clone(), &out?)
    }

    pub fn map(&self, op: impl Fn(f64) -> f64) -> Self {
        LatticeFunction {
            grid: self.grid,
            points: self.points.clone(),
            values: self.values.iter().map(|&v| op(v)).collect(),
        }
    }

    pub fn same_shape(&self, other: &LatticeFunction) -> bool {
        self.grid == other.grid && self.points == other.points
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn average_examples() {
        let g1 = DyadicGrid::new(1).unwrap();
        let q = Interval::new(0, 2).unwrap();
        assert_eq!(average(&[3.0, 3.0], q).unwrap(), 3.0);
        assert_eq!(average(&[2.0, 1.0], q).unwrap(), 1.5);
        let g2 = DyadicGrid::new(2).unwrap();
        let half = Interval::from_endpoints(g2, 0.0, 0.5).unwrap();
        assert_eq!(average(&[1.0, 0.0, 0.0, 0.0], half).unwrap(), 0.5);
        assert_eq!(g1.cells(), 2);
    }

    #[test]
    fn misaligned_interval_is_rejected() {
        let g = DyadicGrid::new(2).unwrap();
        assert!(Interval::from_endpoints(g, 0.1, 0.5).is_err());
        assert!(Interval::from_endpoints(g, 0.0, 1.5).is_err());
        assert!(average(&[1.0, 2.0], Interval::new(0, 4).unwrap()).is_err());
    }

    #[test]
    fn cube_counts() {
        let g0 = DyadicGrid::new(0).unwrap();
        assert_eq!(g0.cubes(CubeFamily::Dyadic).len(), 1);
        let g = DyadicGrid::new(2).unwrap();
        assert_eq!(g.cubes(CubeFamily::Dyadic).len(), 7);
        assert_eq!(g.cubes(CubeFamily::AllAligned).len(), 10);
        let dy = g.cubes(CubeFamily::Dyadic);
        assert_eq!(dy[0], Interval::new(0, 4).unwrap());
        assert_eq!(dy[1], Interval::new(0, 2).unwrap());
        assert_eq!(dy[6], Interval::new(3, 4).unwrap());
        let all = g.cubes(CubeFamily::AllAligned);
        assert!(dy.iter().all(|q| all.contains(q)));
    }

    #[test]
    fn scan_visits_each_cube_once() {
        let g = DyadicGrid::new(3).unwrap();
        let vals: Vec<f64> = (0..8).map(|i| (i * i) as f64 + 0.5).collect();
        for family in [CubeFamily::Dyadic, CubeFamily::AllAligned] {
            let mut seen = Vec::new();
            scan_cubes([&vals], family, |q, [s], min| {
                assert_eq!(s, interval_sum(&vals, q));
                let m = vals[q.start..q.end].iter().cloned().fold(f64::INFINITY, f64::min);
                assert_eq!(min, m);
                seen.push(q);
            });
            let mut expected = g.cubes(family);
            expected.sort();
            seen.sort();
            assert_eq!(seen, expected);
        }
    }

    #[test]
    fn dyadic_coordinates_round_trip() {
        let g = DyadicGrid::new(4).unwrap();
        for q in g.cubes(CubeFamily::Dyadic) {
            let (l, j) = q.dyadic_coords(g).unwrap();
            assert_eq!(Interval::dyadic(g, l, j).unwrap(), q);
        }
        assert!(Interval::new(1, 3).unwrap().dyadic_coords(g).is_none());
    }

    #[test]
    fn slices_round_trip() {
        let g = DyadicGrid::new(1).unwrap();
        let pts = MeasurePoints::counting(3).unwrap();
        let f = LatticeFunction::new(g, pts.clone(), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(f.slice(1), vec![2.0, 5.0]);
        let back = LatticeFunction::from_slices(g, pts, &f.slices()).unwrap();
        assert_eq!(back, f);
        assert!(LatticeFunction::scalar(g, vec![1.0]).is_err());
    }

    #[test]
    fn measure_points_validation() {
        assert!(MeasurePoints::new(vec![]).is_err());
        assert!(MeasurePoints::new(vec![1.0, 0.0]).is_err());
        assert!(MeasurePoints::new(vec![0.5, 2.0]).is_ok());
    }
}
