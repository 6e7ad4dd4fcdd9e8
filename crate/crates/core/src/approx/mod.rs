//! Global outer approximations (Dudley, Bentley columns, the hybrid grid) and the
//! per-cell approximations used by the subdivision.

mod bentley;
mod dudley;
mod hybrid;
mod setcover;

pub use bentley::{bentley_columns, ColumnTable};
pub use dudley::{dudley_approx, dudley_samples, local_dudley, DudleySample};
pub use hybrid::{hybrid_tradeoff, HybridCell, HybridGrid};
pub use setcover::{greedy_cover, restriction_local, set_cover_local, CoverOutcome};

pub(crate) use dudley::local_dudley_box;

use crate::geometry::{nearest_point, Halfspace, Point, Polytope, QuadtreeCell, VertexSet, WarmStart, TOL};
use crate::precondition::CanonicalForm;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// How a [`LocalApprox`] was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    SetCover,
    LocalDudley,
    /// Halfspaces of the input that actually bound the body inside the cell.
    Restriction,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::SetCover => "setcover",
            Method::LocalDudley => "dudley",
            Method::Restriction => "restriction",
        }
    }

    pub fn from_tag(s: &str) -> Option<Self> {
        match s {
            "setcover" => Some(Method::SetCover),
            "dudley" => Some(Method::LocalDudley),
            "restriction" => Some(Method::Restriction),
            _ => None,
        }
    }
}

/// Halfspaces whose intersection approximates the body within one cell.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalApprox {
    pub cell: QuadtreeCell,
    pub halfspaces: Vec<Halfspace>,
    /// Positions in the body's halfspace list, when the halfspaces were taken from it.
    pub indices: Option<Vec<usize>>,
    pub method: Method,
}

impl LocalApprox {
    pub fn len(&self) -> usize {
        self.halfspaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.halfspaces.is_empty()
    }

    /// Position in `halfspaces` of the first one rejecting `q`, with the number tested.
    pub fn first_rejecting(&self, q: &[f64]) -> (Option<usize>, usize) {
        for (i, h) in self.halfspaces.iter().enumerate() {
            if !h.contains(q, TOL.membership) {
                return (Some(i), i + 1);
            }
        }
        (None, self.halfspaces.len())
    }

    pub fn accepts(&self, q: &[f64]) -> bool {
        self.first_rejecting(q).0.is_none()
    }
}

/// `K⁺`: every offset grown by the factor `1 + eps/R`, where `R` bounds the body's
/// vertex norms. In canonical position `R = r0` and the factor is `1 + 2√d·eps`.
pub fn scaled_body(cf: &CanonicalForm, eps: f64) -> Polytope {
    cf.body.scaled(1.0 + eps / cf.outer_radius)
}

/// Violation counts from [`verify_local_approx`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub samples: usize,
    /// Points of the body rejected by the approximation.
    pub inside_violations: usize,
    /// Points farther than `eps` from the body accepted by the approximation.
    pub outside_violations: usize,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.inside_violations == 0 && self.outside_violations == 0
    }
}

/// Checks `K ∩ Q ⊆ A ∩ Q ⊆ (K ⊕ eps) ∩ Q` on stratified random points of the cell.
pub fn verify_local_approx(kv: &VertexSet, a: &LocalApprox, eps: f64, samples: usize, seed: u64) -> VerifyReport {
    let d = kv.dim();
    let (lo, hi) = a.cell.bounds(d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_axis = ((samples as f64).powf(1.0 / d as f64).floor() as usize).max(1);
    let strata = per_axis.pow(d as u32).min(samples);
    let mut report = VerifyReport {
        samples,
        ..Default::default()
    };
    let mut warm = WarmStart::default();
    let mut idx = vec![0usize; d];
    let mut q = Point::zeros(d);
    for s in 0..samples {
        for i in 0..d {
            let u: f64 = rng.random();
            q[i] = if s < strata {
                lo[i] + (hi[i] - lo[i]) * (idx[i] as f64 + u) / per_axis as f64
            } else {
                lo[i] + (hi[i] - lo[i]) * u
            };
        }
        if s < strata {
            for k in idx.iter_mut() {
                *k += 1;
                if *k < per_axis {
                    break;
                }
                *k = 0;
            }
        }
        let accepted = a.halfspaces.iter().all(|h| h.contains(q.as_slice(), 1e-9));
        if kv.source.contains(q.as_slice()) {
            if !accepted {
                report.inside_violations += 1;
            }
        } else if accepted {
            let dist = nearest_point(kv, &q, Some(&mut warm))
                .map(|n| n.distance)
                .unwrap_or(f64::INFINITY);
            if dist > eps * (1.0 + 1e-9) {
                report.outside_violations += 1;
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{enumerate_vertices, hausdorff_outer};
    use crate::precondition::canonicalize;

    fn cross_polytope(d: usize) -> Polytope {
        let mut hs = Vec::new();
        for mask in 0..1usize << d {
            let n: Vec<f64> = (0..d).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
            hs.push(Halfspace::from_slice(&n, 1.0).unwrap());
        }
        Polytope::new(d, hs).unwrap()
    }

    #[test]
    fn scaled_body_sandwich_on_cross_polytope() {
        let cf = canonicalize(&cross_polytope(3)).unwrap();
        assert_eq!(scaled_body(&cf, 0.0), cf.body);
        let h = hausdorff_outer(&scaled_body(&cf, 0.1), &cf.body).unwrap();
        assert!(
            h >= cf.gamma * 0.1 - 1e-9 && h <= 0.1 + 1e-9,
            "h = {h}, gamma = {}",
            cf.gamma
        );
    }

    #[test]
    fn scaled_body_nests() {
        let cf = canonicalize(&cross_polytope(2)).unwrap();
        let once = scaled_body(&cf, 0.05);
        let twice = once.scaled(1.0 + 0.05 / cf.outer_radius);
        for (a, b) in once.halfspaces.iter().zip(&twice.halfspaces) {
            assert!(b.offset >= a.offset);
            assert_eq!(a.normal, b.normal);
        }
    }

    #[test]
    fn verify_exact_and_empty_approximations() {
        let cf = canonicalize(&cross_polytope(2)).unwrap();
        let kv = enumerate_vertices(&cf.body).unwrap();
        for cell in QuadtreeCell::root(2).children() {
            let exact = LocalApprox {
                cell: cell.clone(),
                halfspaces: cf.body.halfspaces.clone(),
                indices: None,
                method: Method::Restriction,
            };
            assert!(verify_local_approx(&kv, &exact, 0.01, 400, 1).passed());
        }
        // A deep cell near the origin lies inside the body, so accepting everything is fine.
        let interior = QuadtreeCell::new(3, vec![3, 3]);
        let empty = LocalApprox {
            cell: interior,
            halfspaces: vec![],
            indices: None,
            method: Method::SetCover,
        };
        assert!(verify_local_approx(&kv, &empty, 0.01, 400, 2).passed());
        // The same empty set on the root accepts far points.
        let root = LocalApprox {
            cell: QuadtreeCell::root(2),
            ..empty
        };
        assert!(verify_local_approx(&kv, &root, 0.01, 400, 3).outside_violations > 0);
    }
}
