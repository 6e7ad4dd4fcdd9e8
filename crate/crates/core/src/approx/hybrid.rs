use super::local_dudley_box;
use crate::geometry::{lp, q0_half, Halfspace, Polytope, TOL};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum HybridCell {
    Outside,
    Inside,
    Boundary(Vec<Halfspace>),
}

/// Uniform grid over Q0 whose boundary cells carry local Dudley approximations.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridGrid {
    pub dim: usize,
    pub per_axis: usize,
    pub pitch: f64,
    /// Target cell diameter `eps^(1 − 2/alpha)`.
    pub radius: f64,
    pub cells: Vec<HybridCell>,
}

impl HybridGrid {
    fn cell_of(&self, q: &[f64]) -> Option<usize> {
        let h = q0_half(self.dim);
        let mut id = 0;
        for &x in q.iter().rev() {
            if x < -h || x > h {
                return None;
            }
            id = id * self.per_axis + (((x + h) / self.pitch) as usize).min(self.per_axis - 1);
        }
        Some(id)
    }

    /// Membership answer and the number of halfspaces tested.
    pub fn query(&self, q: &[f64]) -> (bool, usize) {
        match self.cell_of(q).map(|c| &self.cells[c]) {
            None | Some(HybridCell::Outside) => (false, 0),
            Some(HybridCell::Inside) => (true, 0),
            Some(HybridCell::Boundary(hs)) => {
                for (i, h) in hs.iter().enumerate() {
                    if !h.contains(q, TOL.membership) {
                        return (false, i + 1);
                    }
                }
                (true, hs.len())
            }
        }
    }

    /// Total halfspaces stored over all boundary cells.
    pub fn storage(&self) -> usize {
        self.cells
            .iter()
            .map(|c| if let HybridCell::Boundary(h) = c { h.len() } else { 0 })
            .sum()
    }

    /// Worst-case halfspace tests of a query: the largest boundary list.
    pub fn max_tests(&self) -> usize {
        self.cells
            .iter()
            .map(|c| if let HybridCell::Boundary(h) = c { h.len() } else { 0 })
            .max()
            .unwrap_or(0)
    }
}

/// Interpolates between Dudley (`alpha = 2`) and Bentley (`alpha → ∞`): a grid of
/// cells of diameter about `eps^(1 − 2/alpha)`, with local Dudley on boundary cells.
pub fn hybrid_tradeoff(k: &Polytope, eps: f64, alpha: f64) -> Result<HybridGrid> {
    if !(alpha >= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be at least 2, got {alpha}"
        )));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1], got {eps}")));
    }
    let d = k.dim;
    let h = q0_half(d);
    let radius = eps.powf(1.0 - 2.0 / alpha);
    let per_axis = ((1.0 / radius).ceil() as usize).max(1);
    let pitch = 2.0 * h / per_axis as f64;
    let count = per_axis.pow(d as u32);
    let mut cells = Vec::with_capacity(count);
    let mut lo = vec![0.0; d];
    let mut hi = vec![0.0; d];
    for id in 0..count {
        let mut rest = id;
        for i in 0..d {
            lo[i] = -h + (rest % per_axis) as f64 * pitch;
            hi[i] = lo[i] + pitch;
            rest /= per_axis;
        }
        let excluded = k.halfspaces.iter().any(|g| g.box_min(&lo, &hi) > g.offset);
        let contained = k
            .halfspaces
            .iter()
            .all(|g| g.box_max(&lo, &hi) <= g.offset + TOL.membership);
        let cell = if excluded {
            HybridCell::Outside
        } else if contained {
            HybridCell::Inside
        } else if !lp::box_feasible(&k.halfspaces, &lo, &hi, TOL.lp) {
            HybridCell::Outside
        } else {
            match local_dudley_box(k, &lo, &hi, eps, None) {
                Ok(Some(hs)) => HybridCell::Boundary(hs),
                // The neighborhood only grazes the body; the exact halfspaces are tiny here.
                Ok(None) | Err(Error::InvalidParameter(_)) => HybridCell::Boundary(
                    k.halfspaces
                        .iter()
                        .filter(|g| g.box_max(&lo, &hi) > g.offset)
                        .cloned()
                        .collect(),
                ),
                Err(e) => return Err(e),
            }
        };
        cells.push(cell);
    }
    Ok(HybridGrid {
        dim: d,
        per_axis,
        pitch,
        radius,
        cells,
    })
}
