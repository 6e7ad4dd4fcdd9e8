use super::{q0_half, Point};
use crate::{Error, Result};

/// Cell of the regular subdivision of Q0: `level` bisections per axis, integer
/// position `index` in `[0, 2^level)^d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuadtreeCell {
    pub level: u32,
    pub index: Vec<u64>,
}

impl QuadtreeCell {
    pub fn new(level: u32, index: Vec<u64>) -> Self {
        debug_assert!(index.iter().all(|&i| i < (1u64 << level)));
        Self { level, index }
    }

    pub fn root(d: usize) -> Self {
        Self {
            level: 0,
            index: vec![0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    /// Diameter `2^{-level}`.
    pub fn diameter(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn side(&self) -> f64 {
        2.0 * q0_half(self.dim()) * self.diameter()
    }

    /// Closed box `[lo, hi]` of the cell.
    pub fn bounds(&self, d: usize) -> (Vec<f64>, Vec<f64>) {
        debug_assert_eq!(d, self.dim());
        let h = q0_half(d);
        let side = self.side();
        let lo: Vec<f64> = self.index.iter().map(|&i| -h + i as f64 * side).collect();
        let hi = lo.iter().map(|&l| l + side).collect();
        (lo, hi)
    }

    pub fn center(&self) -> Point {
        let (lo, hi) = self.bounds(self.dim());
        Point::from_iterator(lo.len(), lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)))
    }

    /// The 2^d corners, in binary order of the corner mask (bit i selects the upper end of axis i).
    pub fn corners(&self) -> Vec<Point> {
        let d = self.dim();
        let (lo, hi) = self.bounds(d);
        (0..1usize << d)
            .map(|mask| Point::from_iterator(d, (0..d).map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] })))
            .collect()
    }

    /// Children in lexicographic order of their index tuples.
    pub fn children(&self) -> Vec<QuadtreeCell> {
        let d = self.dim();
        (0..1usize << d).map(|k| self.child(k)).collect()
    }

    /// The `k`-th child in lexicographic order; axis 0 is the most significant bit of `k`.
    pub fn child(&self, k: usize) -> QuadtreeCell {
        let d = self.dim();
        let index = (0..d)
            .map(|i| 2 * self.index[i] + ((k >> (d - 1 - i)) & 1) as u64)
            .collect();
        QuadtreeCell {
            level: self.level + 1,
            index,
        }
    }

    pub fn parent(&self) -> Option<QuadtreeCell> {
        (self.level > 0).then(|| QuadtreeCell {
            level: self.level - 1,
            index: self.index.iter().map(|&i| i >> 1).collect(),
        })
    }

    /// Half-open containment matching the upper-closed tie rule; the upper faces of Q0 are closed.
    pub fn contains_half_open(&self, q: &[f64]) -> bool {
        let d = self.dim();
        let (lo, hi) = self.bounds(d);
        let top = (1u64 << self.level) - 1;
        (0..d).all(|i| q[i] >= lo[i] && (q[i] < hi[i] || (self.index[i] == top && q[i] <= hi[i])))
    }

    /// True when `q` lies in the closed box enlarged by `margin`.
    pub fn contains_closed(&self, q: &[f64], margin: f64) -> bool {
        let (lo, hi) = self.bounds(self.dim());
        q.iter()
            .zip(lo.iter().zip(&hi))
            .all(|(&x, (&l, &h))| x >= l - margin && x <= h + margin)
    }
}

/// Integer coordinates of `q` on the level-`level` grid, with the upper-closed rule.
pub(crate) fn grid_coords(q: &[f64], level: u32) -> Result<Vec<u64>> {
    let d = q.len();
    let h = q0_half(d);
    let n = 1u64 << level;
    let side = 2.0 * h / n as f64;
    q.iter()
        .map(|&x| {
            if !(x >= -h && x <= h) {
                return Err(Error::OutsideDomain);
            }
            let i = ((x + h) / side).floor();
            Ok((i.max(0.0) as u64).min(n - 1))
        })
        .collect()
}

/// Finds the leaf containing `q` in a tree described by `is_leaf`, reading one
/// bit per level per coordinate of `q`'s integer grid position at `max_level`.
pub fn locate_cell(
    d: usize,
    max_level: u32,
    mut is_leaf: impl FnMut(&QuadtreeCell) -> bool,
    q: &[f64],
) -> Result<QuadtreeCell> {
    if q.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: q.len(),
        });
    }
    let coords = grid_coords(q, max_level)?;
    let mut cell = QuadtreeCell::root(d);
    while cell.level < max_level && !is_leaf(&cell) {
        let shift = max_level - cell.level - 1;
        let k = coords
            .iter()
            .fold(0usize, |acc, &c| (acc << 1) | ((c >> shift) & 1) as usize);
        cell = cell.child(k);
    }
    Ok(cell)
}
