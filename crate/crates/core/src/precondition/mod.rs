//! Affine preconditioning into canonical fat position and coreset-based halfspace reduction.

mod kernel;
mod mvee;

pub use kernel::{epsilon_kernel, width, ExtentSample};
pub use mvee::mvee;

use crate::geometry::{enumerate_vertices, r0, sphere_sample, Ball, Halfspace, Point, Polytope};
use crate::{Error, Result};
use nalgebra::DMatrix;

/// Invertible affine map `x ↦ M x + t` with its inverse cached.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    pub matrix: DMatrix<f64>,
    pub translation: Point,
    inverse: DMatrix<f64>,
}

impl AffineMap {
    pub fn new(matrix: DMatrix<f64>, translation: Point) -> Result<Self> {
        let inverse = matrix.clone().try_inverse().ok_or(Error::Degenerate)?;
        Ok(Self {
            matrix,
            translation,
            inverse,
        })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            matrix: DMatrix::identity(d, d),
            translation: Point::zeros(d),
            inverse: DMatrix::identity(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn inverse_matrix(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn apply(&self, x: &Point) -> Point {
        &self.matrix * x + &self.translation
    }

    pub fn apply_inverse(&self, y: &Point) -> Point {
        &self.inverse * (y - &self.translation)
    }

    /// `self` followed by the uniform scaling `y ↦ s·y`.
    pub fn then_scale(&self, s: f64) -> Self {
        Self {
            matrix: &self.matrix * s,
            translation: &self.translation * s,
            inverse: &self.inverse / s,
        }
    }

    /// Image of a halfspace: `⟨n, x⟩ ≤ b` becomes `⟨M^{-T} n, y⟩ ≤ b + ⟨M^{-T} n, t⟩`.
    pub fn map_halfspace(&self, h: &Halfspace) -> Halfspace {
        let n = self.inverse.transpose() * &h.normal;
        let b = h.offset + n.dot(&self.translation);
        let norm = n.norm();
        Halfspace {
            normal: n / norm,
            offset: b / norm,
        }
    }

    pub fn map_polytope(&self, k: &Polytope) -> Polytope {
        Polytope {
            dim: k.dim,
            halfspaces: k.halfspaces.iter().map(|h| self.map_halfspace(h)).collect(),
        }
    }

    /// Ratio of largest to smallest singular value.
    pub fn condition_number(&self) -> f64 {
        let sv = self.matrix.clone().singular_values();
        sv.max() / sv.min()
    }
}

/// A body in canonical position together with the map that put it there.
#[derive(Clone, Debug)]
pub struct CanonicalForm {
    pub body: Polytope,
    pub map: AffineMap,
    /// Fatness: the ball of radius `gamma·r0` about the origin lies in `body`.
    pub gamma: f64,
    /// Absolute approximation parameter for downstream structures.
    pub eps_abs: f64,
    /// Index of each body halfspace in the caller's input list.
    pub origin: Vec<usize>,
    /// Largest vertex norm of `body`; at most `r0` when canonical.
    pub outer_radius: f64,
}

impl CanonicalForm {
    /// Wraps a body that is used as-is (identity map); fatness data is measured.
    pub fn identity(body: Polytope) -> Result<Self> {
        let d = body.dim;
        let min_offset = body.min_offset();
        if !(min_offset > 0.0) {
            return Err(Error::OriginNotInterior(min_offset));
        }
        let outer_radius = enumerate_vertices(&body)?
            .vertices
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        let origin = (0..body.len()).collect();
        Ok(Self {
            gamma: min_offset / r0(d),
            map: AffineMap::identity(d),
            eps_abs: 0.0,
            origin,
            outer_radius,
            body,
        })
    }

    pub fn dim(&self) -> usize {
        self.body.dim
    }

    /// Sets `eps_abs` directly.
    pub fn with_eps_abs(mut self, eps_abs: f64) -> Self {
        self.eps_abs = eps_abs;
        self
    }

    /// Sets `eps_abs = eps_rel/(d√d)`, the unreduced-path conversion.
    pub fn with_eps_rel(mut self, eps_rel: f64) -> Self {
        let d = self.dim() as f64;
        self.eps_abs = eps_rel / (d * d.sqrt());
        self
    }

    /// Radius of the inscribed origin-centered ball.
    pub fn inner_radius(&self) -> f64 {
        self.gamma * r0(self.dim())
    }

    /// Two-inclusion certificate: min offset ≥ γ·r0 and every vertex inside Q0.
    pub fn certificate_holds(&self, tol: f64) -> Result<bool> {
        let d = self.dim();
        let h = crate::geometry::q0_half(d);
        let inner = self.body.min_offset() >= self.gamma * r0(d) - tol;
        let vs = enumerate_vertices(&self.body)?;
        let outer = vs.vertices.iter().all(|v| v.iter().all(|x| x.abs() <= h + tol));
        Ok(inner && outer)
    }
}

/// Maps `k` into (1/d)-canonical position via the minimum-volume enclosing ellipsoid
/// of its vertices.
pub fn canonicalize(k: &Polytope) -> Result<CanonicalForm> {
    let d = k.dim;
    let vs = enumerate_vertices(k)?;
    let pts: Vec<Point> = vs.vertices;
    let (center, shape) = mvee(&pts, 1e-4, 200_000)?;
    // Make sure every vertex is inside after finite-precision iteration.
    let worst = pts
        .iter()
        .map(|p| {
            let v = p - &center;
            (v.transpose() * &shape * &v)[(0, 0)]
        })
        .fold(0.0, f64::max);
    let shape = shape / worst.max(1.0);
    let chol = shape.clone().cholesky().ok_or(Error::Degenerate)?;
    let lt = chol.l().transpose();
    let m = &lt * r0(d);
    let t = -(&m * &center);
    let map = AffineMap::new(m, t)?;
    let body = map.map_polytope(k);
    let outer_radius = pts.iter().map(|p| map.apply(p).norm()).fold(0.0, f64::max);
    let gamma = body.min_offset() / r0(d);
    Ok(CanonicalForm {
        body,
        map,
        gamma,
        eps_abs: 0.0,
        origin: (0..k.len()).collect(),
        outer_radius,
    })
}

/// Dual points `n/b` of the halfspaces; requires the origin strictly inside.
pub fn polar_points(k: &Polytope) -> Result<Vec<Point>> {
    k.halfspaces
        .iter()
        .map(|h| {
            if h.offset > 0.0 {
                Ok(&h.normal / h.offset)
            } else {
                Err(Error::OriginNotInterior(h.offset))
            }
        })
        .collect()
}

/// Canonicalizes, halves, and keeps only the halfspaces whose dual points form a
/// kernel of parameter `eps_rel/(8d²)`; the result is (1/2d)-canonical.
pub fn reduce_halfspaces(k: &Polytope, eps_rel: f64) -> Result<CanonicalForm> {
    if !(eps_rel > 0.0 && eps_rel <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eps_rel must lie in (0, 1], got {eps_rel}"
        )));
    }
    let d = k.dim;
    let df = d as f64;
    let base = canonicalize(k)?;
    let map = base.map.then_scale(0.5);
    let halved = base.body.scaled(0.5);
    let dual = polar_points(&halved)?;
    let keep = epsilon_kernel(&dual, eps_rel / (8.0 * df * df))?;
    let body = Polytope {
        dim: d,
        halfspaces: keep.iter().map(|&i| halved.halfspaces[i].clone()).collect(),
    };
    let gamma = body.min_offset() / r0(d);
    let outer_radius = enumerate_vertices(&body)?
        .vertices
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    Ok(CanonicalForm {
        body,
        map,
        gamma,
        eps_abs: eps_rel / (4.0 * df * df.sqrt()),
        origin: keep,
        outer_radius,
    })
}

/// Unit directions forming a `spacing`-dense net, shared by the kernel and Dudley samplers.
pub(crate) fn direction_net(d: usize, spacing: f64) -> Vec<Point> {
    let ball = Ball {
        center: Point::zeros(d),
        radius: 1.0,
    };
    sphere_sample(&ball, spacing.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{hausdorff_outer, Halfspace};

    #[test]
    fn cross_polytope_maps_by_scaling() {
        // Cross-polytope inscribed in B0 (d=3): facets ⟨±1,±1,±1⟩/√3 · x ≤ r0/√3.
        let d = 3;
        let mut hs = Vec::new();
        for mask in 0..8 {
            let n: Vec<f64> = (0..3).map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 }).collect();
            hs.push(Halfspace::from_slice(&n, r0(d)).unwrap());
        }
        let k = Polytope::new(d, hs).unwrap();
        let cf = canonicalize(&k).unwrap();
        assert!(cf.gamma >= 1.0 / 3.0 - 1e-6, "gamma {}", cf.gamma);
        let m = &cf.map.matrix;
        let s = m[(0, 0)];
        assert!((m - DMatrix::identity(3, 3) * s).norm() < 1e-5 * s.abs());
        assert!(cf.certificate_holds(1e-9).unwrap());
    }

    #[test]
    fn thin_box_becomes_fat() {
        let k = Polytope::axis_box(&[-0.4, -0.001], &[0.4, 0.001]);
        let cf = canonicalize(&k).unwrap();
        // Centrally symmetric: John's factor is √d, so the inner ball is at least r0/√2 ≥ r0/2.
        assert!(cf.body.min_offset() >= r0(2) / 2.0 - 1e-9);
        assert!(cf.certificate_holds(1e-9).unwrap());
        assert!(cf.map.condition_number() > 100.0);
    }

    #[test]
    fn map_roundtrip() {
        let k = Polytope::axis_box(&[-0.1, -0.3], &[0.2, 0.05]);
        let cf = canonicalize(&k).unwrap();
        let x = Point::from_vec(vec![0.07, -0.11]);
        let y = cf.map.apply(&x);
        assert!((cf.map.apply_inverse(&y) - &x).norm() < 1e-12);
        assert!((&cf.map.matrix * cf.map.inverse_matrix() - DMatrix::identity(2, 2)).norm() < 1e-9);
        // Membership is preserved by the halfspace map.
        for h in 0..k.len() {
            let a = k.halfspaces[h].excess(x.as_slice()) <= 0.0;
            let b = cf.body.halfspaces[h].excess(y.as_slice()) <= 0.0;
            assert_eq!(a, b);
        }
    }

    #[test]
    fn polar_axis_case() {
        let k = Polytope::new(2, vec![Halfspace::from_slice(&[1.0, 0.0], 0.5).unwrap()]).unwrap();
        let p = polar_points(&k).unwrap();
        assert!((p[0][0] - 2.0).abs() < 1e-15 && p[0][1] == 0.0);
        let bad = Polytope::new(2, vec![Halfspace::from_slice(&[1.0, 0.0], -0.5).unwrap()]).unwrap();
        assert!(polar_points(&bad).is_err());
    }

    #[test]
    fn polar_of_ball_is_sphere() {
        let r = 0.2;
        let hs: Vec<Halfspace> = (0..64)
            .map(|i| {
                let a = i as f64 * std::f64::consts::TAU / 64.0;
                Halfspace::from_slice(&[a.cos(), a.sin()], r).unwrap()
            })
            .collect();
        for p in polar_points(&Polytope::new(2, hs).unwrap()).unwrap() {
            assert!((p.norm() - 1.0 / r).abs() < 1e-12);
        }
    }

    #[test]
    fn polar_involution_on_box() {
        // Box [-a,a]×[-b,b] → dual points (±1/a, 0), (0, ±1/b); reading those back as
        // halfspaces with unit offsets recovers the facet data.
        let (a, b) = (0.25, 0.1);
        let k = Polytope::axis_box(&[-a, -b], &[a, b]);
        let dual = polar_points(&k).unwrap();
        let back: Vec<Halfspace> = dual.iter().map(|p| Halfspace::new(p.clone(), 1.0).unwrap()).collect();
        for (h, g) in k.halfspaces.iter().zip(&back) {
            assert!((&h.normal - &g.normal).norm() < 1e-15 && (h.offset - g.offset).abs() < 1e-15);
        }
    }

    fn tangent_ball(d: usize, n: usize, r: f64) -> Polytope {
        assert_eq!(d, 2);
        let hs = (0..n)
            .map(|i| {
                let a = i as f64 * std::f64::consts::TAU / n as f64;
                Halfspace::from_slice(&[a.cos(), a.sin()], r).unwrap()
            })
            .collect();
        Polytope::new(d, hs).unwrap()
    }

    #[test]
    fn reduce_keeps_sublist_and_fatness() {
        let k = tangent_ball(2, 512, 0.3);
        let rf = reduce_halfspaces(&k, 0.1).unwrap();
        assert!(rf.origin.windows(2).all(|w| w[0] < w[1]));
        assert!(rf.gamma >= 1.0 / 4.0 - 1e-6);
        assert_eq!(rf.eps_abs, 0.1 / (4.0 * 2.0 * 2f64.sqrt()));
        // Reduced body is a sublist of the halved canonical body, so it contains it.
        let full = canonicalize(&k).unwrap().body.scaled(0.5);
        for (j, &i) in rf.origin.iter().enumerate() {
            assert_eq!(rf.body.halfspaces[j], full.halfspaces[i]);
        }
        let h = hausdorff_outer(&rf.body, &full).unwrap();
        assert!(h <= 0.1 / (2.0 * 2.0 * 2f64.sqrt()), "hausdorff {h}");
    }
}
