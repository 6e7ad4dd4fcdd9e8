//! Polytopes in halfspace form, quadtree cells, and the exact oracles the rest
//! of the crate is checked against.

mod cell;
pub mod io;
pub mod lp;
mod sphere;
mod vertices;
mod wolfe;

pub(crate) use cell::grid_coords;
pub use cell::{locate_cell, QuadtreeCell};
pub(crate) use sphere::for_each_sphere_sample;
pub use sphere::sphere_sample;
pub(crate) use vertices::dedup_points;
pub use vertices::{enumerate_vertices, enumerate_vertices_with_budget, VertexSet};
pub(crate) use wolfe::nearest_in_hull;
pub use wolfe::{distance_to_polytope, hausdorff_outer, nearest_point, NearestPoint, WarmStart};

use crate::{Error, Result};
use nalgebra::DVector;

pub type Point = DVector<f64>;

/// Numeric tolerances shared by every module.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Slack allowed on `⟨n, q⟩ ≤ b` by membership tests.
    pub membership: f64,
    /// Feasibility threshold of the simplex solver.
    pub lp: f64,
    /// Distance under which two vertices are merged.
    pub dedup: f64,
    /// Maximum number of d-subsets tried by vertex enumeration.
    pub vertex_budget: u64,
}

pub const TOL: Tolerances = Tolerances {
    membership: 1e-12,
    lp: 1e-10,
    dedup: 1e-9,
    vertex_budget: 2_000_000,
};

/// Half-width of Q0 along each axis: the cube of unit diameter has side 1/√d.
pub fn q0_half(d: usize) -> f64 {
    0.5 / (d as f64).sqrt()
}

/// Radius of the ball inscribed in Q0.
pub fn r0(d: usize) -> f64 {
    q0_half(d)
}

/// Closed halfspace `{x : ⟨normal, x⟩ ≤ offset}` with a unit normal.
#[derive(Clone, Debug, PartialEq)]
pub struct Halfspace {
    pub normal: Point,
    pub offset: f64,
}

impl Halfspace {
    /// Builds a halfspace, rescaling so that the normal has unit length.
    pub fn new(normal: Point, offset: f64) -> Result<Self> {
        let norm = normal.norm();
        if !(norm > 0.0) || !norm.is_finite() || !offset.is_finite() {
            return Err(Error::InvalidParameter(
                "halfspace normal must be nonzero and finite".into(),
            ));
        }
        Ok(Self {
            normal: normal / norm,
            offset: offset / norm,
        })
    }

    pub fn from_slice(normal: &[f64], offset: f64) -> Result<Self> {
        Self::new(Point::from_column_slice(normal), offset)
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    /// Signed violation `⟨n, q⟩ − b`; positive outside.
    #[inline]
    pub fn excess(&self, q: &[f64]) -> f64 {
        dot(self.normal.as_slice(), q) - self.offset
    }

    #[inline]
    pub fn contains(&self, q: &[f64], tol: f64) -> bool {
        self.excess(q) <= tol
    }

    /// Largest value of `⟨n, x⟩` over the axis box `[lo, hi]`.
    pub fn box_max(&self, lo: &[f64], hi: &[f64]) -> f64 {
        self.normal
            .iter()
            .zip(lo.iter().zip(hi))
            .map(|(&n, (&l, &h))| if n > 0.0 { n * h } else { n * l })
            .sum()
    }

    /// Smallest value of `⟨n, x⟩` over the axis box `[lo, hi]`.
    pub fn box_min(&self, lo: &[f64], hi: &[f64]) -> f64 {
        self.normal
            .iter()
            .zip(lo.iter().zip(hi))
            .map(|(&n, (&l, &h))| if n > 0.0 { n * l } else { n * h })
            .sum()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Intersection of an ordered list of closed halfspaces.
#[derive(Clone, Debug, PartialEq)]
pub struct Polytope {
    pub dim: usize,
    pub halfspaces: Vec<Halfspace>,
}

impl Polytope {
    pub fn new(dim: usize, halfspaces: Vec<Halfspace>) -> Result<Self> {
        if let Some(h) = halfspaces.iter().find(|h| h.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: h.dim(),
            });
        }
        Ok(Self { dim, halfspaces })
    }

    /// Axis-aligned box `[lo, hi]` as 2d halfspaces, ordered `+e_0, −e_0, +e_1, …`.
    pub fn axis_box(lo: &[f64], hi: &[f64]) -> Self {
        let d = lo.len();
        let mut halfspaces = Vec::with_capacity(2 * d);
        for i in 0..d {
            let mut e = Point::zeros(d);
            e[i] = 1.0;
            halfspaces.push(Halfspace {
                normal: e.clone(),
                offset: hi[i],
            });
            halfspaces.push(Halfspace {
                normal: -e,
                offset: -lo[i],
            });
        }
        Self { dim: d, halfspaces }
    }

    /// The root cube Q0 of unit diameter centered at the origin.
    pub fn q0(d: usize) -> Self {
        let h = q0_half(d);
        Self::axis_box(&vec![-h; d], &vec![h; d])
    }

    pub fn len(&self) -> usize {
        self.halfspaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.halfspaces.is_empty()
    }

    /// Membership with the global slack `TOL.membership`.
    pub fn contains(&self, q: &[f64]) -> bool {
        self.contains_tol(q, TOL.membership)
    }

    pub fn contains_tol(&self, q: &[f64], tol: f64) -> bool {
        self.halfspaces.iter().all(|h| h.contains(q, tol))
    }

    /// Index of the first halfspace violated by `q`, if any.
    pub fn first_violated(&self, q: &[f64], tol: f64) -> Option<usize> {
        self.halfspaces.iter().position(|h| !h.contains(q, tol))
    }

    /// Same halfspaces with every offset multiplied by `factor` (a scaling about the origin).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            halfspaces: self
                .halfspaces
                .iter()
                .map(|h| Halfspace {
                    normal: h.normal.clone(),
                    offset: h.offset * factor,
                })
                .collect(),
        }
    }

    /// Appends the faces of Q0 after the existing halfspaces.
    pub fn clipped_to_q0(&self) -> Self {
        let mut out = self.clone();
        out.halfspaces.extend(Self::q0(self.dim).halfspaces);
        out
    }

    pub fn min_offset(&self) -> f64 {
        self.halfspaces.iter().map(|h| h.offset).fold(f64::INFINITY, f64::min)
    }
}

/// Euclidean ball.
#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }
}

/// True iff `q` satisfies every halfspace of `k` up to `TOL.membership`.
pub fn exact_membership(k: &Polytope, q: &Point) -> Result<bool> {
    if q.len() != k.dim {
        return Err(Error::DimensionMismatch {
            expected: k.dim,
            got: q.len(),
        });
    }
    Ok(k.contains(q.as_slice()))
}

/// True iff `k` meets the closed box of `cell`, decided by linear programming.
pub fn feasible(k: &Polytope, cell: &QuadtreeCell) -> bool {
    let (lo, hi) = cell.bounds(k.dim);
    lp::box_feasible(&k.halfspaces, &lo, &hi, TOL.lp)
}
