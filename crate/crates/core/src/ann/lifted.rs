//! Lifting onto the paraboloid `z = ‖x‖²` and vertical ray shooting against the
//! upper envelope of tangent planes.

use super::AnnParams;
use crate::geometry::{dot, lp, q0_half, Halfspace, Point, Polytope, QuadtreeCell, TOL};
use crate::precondition::canonicalize;
use crate::splitreduce::{build, SplitReduceTree};
use crate::{Error, Result};

/// Tangent plane `z = 2⟨p, x⟩ − ‖p‖²` of the paraboloid at the lift of site `p`,
/// stored as the halfspace `(2p, −1)·(x, z) ≤ ‖p‖²` above it.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftedPlane {
    pub site: usize,
    pub point: Point,
    pub halfspace: Halfspace,
}

impl LiftedPlane {
    /// Height of the plane over `x`.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        2.0 * dot(self.point.as_slice(), x) - self.point.norm_squared()
    }

    /// Vertical distance from the paraboloid down to the plane at `q`: the squared
    /// distance from `q` to the site.
    pub fn gap(&self, q: &[f64]) -> f64 {
        dot(q, q) - self.value_at(q)
    }
}

pub fn lift(site: usize, p: &Point) -> LiftedPlane {
    let d = p.len();
    let mut normal = Point::zeros(d + 1);
    normal.rows_mut(0, d).copy_from(&(p * 2.0));
    normal[d] = -1.0;
    let offset = p.norm_squared();
    let norm = normal.norm();
    LiftedPlane {
        site,
        point: p.clone(),
        halfspace: Halfspace {
            normal: normal / norm,
            offset: offset / norm,
        },
    }
}

/// Region above every lifted plane, clipped to the box `[-half_x, half_x]^d × [z_lo, z_hi]`.
/// Halfspace `i < points.len()` belongs to `points[i]`; the box faces follow.
pub fn build_envelope(points: &[Point], half_x: f64, z_lo: f64, z_hi: f64) -> Result<Polytope> {
    let d = points.first().ok_or(Error::EmptyInput)?.len();
    let mut halfspaces: Vec<Halfspace> = points.iter().enumerate().map(|(i, p)| lift(i, p).halfspace).collect();
    let mut lo = vec![-half_x; d + 1];
    let mut hi = vec![half_x; d + 1];
    lo[d] = z_lo;
    hi[d] = z_hi;
    halfspaces.extend(Polytope::axis_box(&lo, &hi).halfspaces);
    Ok(Polytope { dim: d + 1, halfspaces })
}

/// Sites whose Voronoi region among `points` meets the box `[-half_x, half_x]^d`;
/// the others have planes that never reach the envelope above the box.
fn envelope_sites(points: &[Point], half_x: f64) -> Vec<usize> {
    let d = points[0].len();
    let lo = vec![-half_x; d];
    let hi = vec![half_x; d];
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].norm_squared().total_cmp(&points[b].norm_squared()));
    // Points of the box closer to `p` than to `q`: 2⟨q − p, x⟩ ≤ ‖q‖² − ‖p‖².
    let bisector = |p: &Point, q: &Point| Halfspace::new((q - p) * 2.0, q.norm_squared() - p.norm_squared());
    let mut keep = Vec::new();
    for &i in &order {
        let p = &points[i];
        let mut sides = Vec::with_capacity(points.len());
        let mut dominated = false;
        for &j in &order {
            if j == i {
                continue;
            }
            match bisector(p, &points[j]) {
                Ok(h) => {
                    if h.box_min(&lo, &hi) > h.offset {
                        dominated = true;
                        break;
                    }
                    if h.box_max(&lo, &hi) > h.offset {
                        sides.push(h);
                    }
                }
                // Coincident sites: keep the first in distance order.
                Err(_) => {
                    if keep.contains(&j) {
                        dominated = true;
                        break;
                    }
                }
            }
        }
        if !dominated && lp::box_feasible(&sides, &lo, &hi, TOL.lp) {
            keep.push(i);
        }
    }
    keep.sort_unstable();
    keep
}

/// Lifted structure over the far set of one cell.
#[derive(Clone, Debug)]
pub struct LiftedStructure {
    /// Global site ids, aligned with `points`.
    pub sites: Vec<usize>,
    /// Sites in the cell frame `(x − center)·scale`, restricted to those on the envelope.
    pub points: Vec<Point>,
    pub center: Point,
    pub scale: f64,
    /// Half-width of the box around the cell in the lifted body's first `d` axes.
    pub half_x: f64,
    /// Ray segment in the cell frame: starts below the envelope, ends above it.
    pub z_bottom: f64,
    pub z_top: f64,
    /// Final segment length of the bisection.
    pub resolution: f64,
    pub tree: SplitReduceTree,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RayShot {
    pub site: usize,
    /// Bisection steps.
    pub steps: u32,
    /// Membership queries, including the two endpoint checks.
    pub queries: usize,
    /// Candidate planes compared at the end.
    pub candidates: usize,
}

impl LiftedStructure {
    /// `local` holds every site in the index frame; `far` lists the ones to lift.
    /// Each far site lies more than twice the cell diameter from the cell center.
    pub fn build(local: &[Point], far: &[usize], cell: &QuadtreeCell, params: &AnnParams) -> Result<Self> {
        if far.is_empty() {
            return Err(Error::EmptyInput);
        }
        let c = cell.center();
        let diam = cell.diameter();
        let nearest = far
            .iter()
            .map(|&i| (&local[i] - &c).norm())
            .fold(f64::INFINITY, f64::min);
        // Unit distance from the cell to the nearest far site.
        let scale = 1.0 / (nearest - 0.5 * diam);
        let all: Vec<Point> = far.iter().map(|&i| (&local[i] - &c) * scale).collect();
        let d = c.len();
        let rho = 0.5 * diam * scale;
        let half_x = q0_half(d).max(rho) * 1.5;
        let keep = envelope_sites(&all, half_x);
        let points: Vec<Point> = keep.iter().map(|&i| all[i].clone()).collect();
        let reach = points.iter().map(|p| p.norm()).fold(0.0, f64::max);
        // Over the cell the envelope lies in [−(reach+ρ)², ρ² − 1].
        let z_lo = -(reach + rho).powi(2) - 2.0;
        let z_hi = 2.0;
        let body = build_envelope(&points, half_x, z_lo, z_hi)?;
        let cf = canonicalize(&body)?;
        let resolution = params.eps / (6.0 * params.c_q);
        // Canonical error times the inverse map's stretch times the slope factor stays below the resolution.
        let stretch = cf.map.inverse_matrix().clone().singular_values().max();
        let slope = (1.0 + 4.0 * reach * reach).sqrt();
        let eps_can = (resolution / (stretch * slope)).min(1.0);
        let cf = cf.with_eps_abs(eps_can);
        let tree = build(&cf, params.t, true)?;
        Ok(Self {
            sites: keep.iter().map(|&i| far[i]).collect(),
            points,
            center: c,
            scale,
            half_x,
            z_bottom: z_lo + 1.0,
            z_top: z_hi - 1.0,
            resolution,
            tree,
        })
    }

    /// Diameter of the clipping box of the lifted body.
    pub fn box_diameter(&self) -> f64 {
        let d = self.center.len() as f64;
        let height = self.z_top - self.z_bottom + 2.0;
        (d * 4.0 * self.half_x * self.half_x + height * height).sqrt()
    }

    /// Bisection steps for the vertical segment.
    pub fn steps(&self) -> u32 {
        ((self.z_top - self.z_bottom) / self.resolution).log2().ceil().max(0.0) as u32
    }

    fn canonical(&self, x: &[f64], z: f64) -> Point {
        let mut y = Point::zeros(x.len() + 1);
        y.rows_mut(0, x.len()).copy_from_slice(x);
        y[x.len()] = z;
        self.tree.canonical.map.apply(&y)
    }

    fn plane_site(&self, body_index: usize) -> Option<usize> {
        let input = self.tree.canonical.origin[body_index];
        (input < self.points.len()).then_some(input)
    }

    fn value(&self, i: usize, x: &[f64]) -> f64 {
        2.0 * dot(self.points[i].as_slice(), x) - self.points[i].norm_squared()
    }
}

/// Vertical ray shot at `q` (index frame) through the lifted structure; returns
/// the global id of the site whose plane is topmost among the stabbed leaves.
pub fn ray_shoot(ls: &LiftedStructure, q: &[f64]) -> Result<RayShot> {
    let x: Vec<f64> = q
        .iter()
        .zip(ls.center.iter())
        .map(|(a, c)| (a - c) * ls.scale)
        .collect();
    let tree = &ls.tree;
    let top = tree.query(ls.canonical(&x, ls.z_top).as_slice())?;
    if !top.inside {
        return Err(Error::Sandwich("segment top reported outside".into()));
    }
    let bottom = tree.query(ls.canonical(&x, ls.z_bottom).as_slice())?;
    if bottom.inside {
        return Err(Error::Sandwich("segment bottom reported inside".into()));
    }
    let (mut lo, mut hi) = (ls.z_bottom, ls.z_top);
    let mut witness = bottom.witness.and_then(|w| ls.plane_site(w.index));
    let steps = ls.steps();
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        let out = tree.query(ls.canonical(&x, mid).as_slice())?;
        if out.inside {
            hi = mid;
        } else {
            lo = mid;
            if let Some(w) = out.witness.and_then(|w| ls.plane_site(w.index)) {
                witness = Some(w);
            }
        }
    }
    // The envelope crosses the line within the final segment, padded by one resolution.
    let a = ls.canonical(&x, lo - ls.resolution);
    let b = ls.canonical(&x, hi + ls.resolution);
    let mut candidates: Vec<usize> = witness.into_iter().collect();
    for leaf in tree.stabbed_leaves(a.as_slice(), b.as_slice()) {
        if let Some(ids) = &leaf.indices {
            candidates.extend(ids.iter().filter_map(|&i| ls.plane_site(i)));
        }
    }
    candidates.sort_unstable();
    candidates.dedup();
    if candidates.is_empty() {
        candidates = (0..ls.points.len()).collect();
    }
    let mut best = candidates[0];
    let mut best_value = ls.value(best, &x);
    for &i in &candidates[1..] {
        let v = ls.value(i, &x);
        if v > best_value || (v == best_value && ls.sites[i] < ls.sites[best]) {
            best = i;
            best_value = v;
        }
    }
    Ok(RayShot {
        site: ls.sites[best],
        steps,
        queries: steps as usize + 2,
        candidates: candidates.len(),
    })
}
