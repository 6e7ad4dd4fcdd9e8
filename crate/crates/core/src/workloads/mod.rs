//! Test bodies, labeled query sets, and point clouds, all deterministic under a seed.

mod queries;

pub use queries::{gen_queries, LabeledQuery, QueryCounts, Stratum};

use crate::approx::greedy_cover;
use crate::geometry::{q0_half, r0, sphere_sample, Ball, Halfspace, Point, Polytope};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Uniformly random unit vector.
pub(crate) fn random_direction(d: usize, rng: &mut impl Rng) -> Point {
    loop {
        let v = Point::from_fn(d, |_, _| StandardNormal.sample(rng));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Halfspaces tangent to the origin ball of radius `radius` with the given outward normals.
pub fn tangent_body(radius: f64, directions: &[Point]) -> Result<Polytope> {
    let d = directions.first().ok_or(Error::EmptyInput)?.len();
    let hs = directions
        .iter()
        .map(|u| Halfspace::new(u.clone(), radius * u.norm()))
        .collect::<Result<Vec<_>>>()?;
    Polytope::new(d, hs)
}

/// `n` halfspaces tangent to the ball of radius `r0/2` at random directions, cut to Q0.
pub fn gen_random_tangent(d: usize, n: usize, seed: u64) -> Result<Polytope> {
    if n < d + 1 {
        return Err(Error::InvalidParameter(format!(
            "need at least {} halfspaces, got {n}",
            d + 1
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs: Vec<Point> = (0..n).map(|_| random_direction(d, &mut rng)).collect();
    Ok(tangent_body(0.5 * r0(d), &dirs)?.clipped_to_q0())
}

/// Angular spacing of a direction net whose tangent polytope around a ball of radius
/// `radius` lies within `facet_eps` of the ball.
fn ball_net_spacing(d: usize, radius: f64, facet_eps: f64) -> f64 {
    // A point of the unit sphere is within angle h·√(d−1)/2 of the cube-grid sample.
    let theta = (radius / (radius + facet_eps)).acos();
    2.0 * theta / ((d as f64 - 1.0).max(1.0)).sqrt()
}

/// Tangent halfspaces to the ball of radius `diam/4` at a direction net fine enough
/// that the result is an outer `facet_eps`-approximation of the ball.
pub fn gen_ball_polytope(d: usize, diam: f64, facet_eps: f64) -> Result<Polytope> {
    if !(diam > 0.0 && facet_eps > 0.0 && facet_eps <= diam / 4.0) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < facet_eps ≤ diam/4, got {facet_eps} and {diam}"
        )));
    }
    let radius = diam / 4.0;
    let unit = Ball {
        center: Point::zeros(d),
        radius: 1.0,
    };
    let dirs = sphere_sample(&unit, ball_net_spacing(d, radius, facet_eps));
    tangent_body(radius, &dirs)
}

/// Facet constant of ball approximations: an outer `eps`-approximation of a ball of
/// diameter `diam` in dimension `m` needs about `c·(diam/eps)^((m−1)/2)` facets.
/// Measured by [`measure_ball_constant`] and frozen here.
pub fn ball_constant(m: usize) -> Option<f64> {
    match m {
        2 => Some(BALL_CONSTANT[0]),
        3 => Some(BALL_CONSTANT[1]),
        _ => None,
    }
}

const BALL_CONSTANT: [f64; 2] = [1.36, 0.990];

/// Ratios `diam/eps` at which the ball constant is measured.
pub const BALL_CONSTANT_LADDER: [f64; 3] = [25.0, 50.0, 100.0];

/// Greedy cap cover of a fine sphere sample by tangent halfspaces, averaged over
/// [`BALL_CONSTANT_LADDER`] and normalized by `(diam/eps)^((m−1)/2)`.
pub fn measure_ball_constant(m: usize) -> f64 {
    let unit = Ball {
        center: Point::zeros(m),
        radius: 1.0,
    };
    let mut sum = 0.0;
    for ratio in BALL_CONSTANT_LADDER {
        // Diameter 4 puts the ball at unit radius.
        let eps = 4.0 / ratio;
        let theta = (1.0 / (1.0 + eps)).acos();
        let samples = sphere_sample(&unit, theta / 3.0);
        let cos = theta.cos();
        let sets: Vec<Vec<u32>> = samples
            .iter()
            .map(|u| {
                (0..samples.len() as u32)
                    .filter(|&j| u.dot(&samples[j as usize]) >= cos)
                    .collect()
            })
            .collect();
        let cover = greedy_cover(&sets, samples.len(), usize::MAX).map_or(0, |c| c.len());
        sum += cover as f64 / ratio.powf((m as f64 - 1.0) / 2.0);
    }
    sum / BALL_CONSTANT_LADDER.len() as f64
}

/// A hypercylinder body with the parameters that produced it.
#[derive(Clone, Debug)]
pub struct Hypercylinder {
    pub body: Polytope,
    /// Curved dimensions minus one: the cross-section lives in the first `k + 1` axes.
    pub k: usize,
    pub diameter: f64,
    /// Query budget the construction is tuned against.
    pub t: f64,
}

/// Cylinder over a ball polytope of diameter `diam` in the first `k + 1` axes, cut to Q0.
pub fn hypercylinder_body(d: usize, k: usize, diam: f64, facet_eps: f64) -> Result<Polytope> {
    if k + 1 > d || k == 0 {
        return Err(Error::InvalidParameter(format!(
            "need 1 ≤ k ≤ d − 1, got k = {k}, d = {d}"
        )));
    }
    let section = gen_ball_polytope(k + 1, diam, facet_eps)?;
    let hs = section
        .halfspaces
        .into_iter()
        .map(|h| {
            let normal = Point::from_fn(d, |i, _| if i <= k { h.normal[i] } else { 0.0 });
            Halfspace {
                normal,
                offset: h.offset,
            }
        })
        .collect();
    Ok(Polytope { dim: d, halfspaces: hs }.clipped_to_q0())
}

/// Curved-dimension parameter `κ = (d−1)·√(2/α)`.
pub fn cylinder_kappa(d: usize, alpha: f64) -> f64 {
    (d as f64 - 1.0) * (2.0 / alpha).sqrt()
}

/// Parameters of the lower-bound body at query budget `t = eps^{−(d−1)/α}`: `k = ⌈κ⌉`
/// curved dimensions and cross-section diameter `Δ = eps·((2^d + 1)·t/c)^{2/k}`, where
/// `c` is the frozen ball constant. Returns `(k, Δ, t)` without checking `Δ`.
pub fn cylinder_parameters(d: usize, alpha: f64, eps: f64) -> Result<(usize, f64, f64)> {
    if d < 2 || !(alpha >= 4.0) || !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need d ≥ 2, alpha ≥ 4, 0 < eps < 1; got {d}, {alpha}, {eps}"
        )));
    }
    let k = (cylinder_kappa(d, alpha).ceil() as usize).max(1);
    let c = ball_constant(k + 1)
        .ok_or_else(|| Error::InvalidParameter(format!("no ball constant for dimension {}", k + 1)))?;
    let t = eps.powf(-(d as f64 - 1.0) / alpha);
    let diameter = eps * (((1u64 << d) + 1) as f64 * t / c).powf(2.0 / k as f64);
    Ok((k, diameter, t))
}

/// The lower-bound body of [`cylinder_parameters`], with facet tolerance `eps/4`.
/// Fails when `Δ > 1/√d`.
pub fn gen_hypercylinder(d: usize, alpha: f64, eps: f64) -> Result<Hypercylinder> {
    let (k, diameter, t) = cylinder_parameters(d, alpha, eps)?;
    let limit = 1.0 / (d as f64).sqrt();
    if diameter > limit {
        return Err(Error::InvalidParameter(format!(
            "eps = {eps} gives cross-section diameter {diameter:.4} > 1/√d = {limit:.4}"
        )));
    }
    let body = hypercylinder_body(d, k, diameter, eps / 4.0)?;
    Ok(Hypercylinder { body, k, diameter, t })
}

/// Axis box of half-width `r0/2`.
pub fn gen_box(d: usize) -> Polytope {
    let a = 0.5 * r0(d);
    Polytope::axis_box(&vec![-a; d], &vec![a; d])
}

/// Corner simplex `x_i ≥ −a`, `Σx_i/√d ≤ a`, sized to sit inside Q0.
pub fn gen_simplex(d: usize) -> Polytope {
    let a = q0_half(d) / (d as f64 + (d as f64).sqrt());
    let mut hs: Vec<Halfspace> = (0..d)
        .map(|i| Halfspace {
            normal: -Point::from_fn(d, |j, _| (i == j) as u8 as f64),
            offset: a,
        })
        .collect();
    hs.push(Halfspace {
        normal: Point::from_element(d, 1.0 / (d as f64).sqrt()),
        offset: a,
    });
    Polytope { dim: d, halfspaces: hs }
}

/// Body families with their parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum BodySpec {
    RandomTangent { d: usize, n: usize, seed: u64 },
    BallPolytope { d: usize, diam: f64, facet_eps: f64 },
    Hypercylinder { d: usize, alpha: f64, eps: f64 },
    Box { d: usize },
    Simplex { d: usize },
}

impl BodySpec {
    pub fn dim(&self) -> usize {
        match *self {
            BodySpec::RandomTangent { d, .. }
            | BodySpec::BallPolytope { d, .. }
            | BodySpec::Hypercylinder { d, .. }
            | BodySpec::Box { d }
            | BodySpec::Simplex { d } => d,
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            BodySpec::RandomTangent { .. } => "random-tangent",
            BodySpec::BallPolytope { .. } => "ball",
            BodySpec::Hypercylinder { .. } => "hypercylinder",
            BodySpec::Box { .. } => "box",
            BodySpec::Simplex { .. } => "simplex",
        }
    }

    pub fn generate(&self) -> Result<Polytope> {
        match *self {
            BodySpec::RandomTangent { d, n, seed } => gen_random_tangent(d, n, seed),
            BodySpec::BallPolytope { d, diam, facet_eps } => gen_ball_polytope(d, diam, facet_eps),
            BodySpec::Hypercylinder { d, alpha, eps } => gen_hypercylinder(d, alpha, eps).map(|h| h.body),
            BodySpec::Box { d } => Ok(gen_box(d)),
            BodySpec::Simplex { d } => Ok(gen_simplex(d)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PointDistribution {
    /// Uniform in the unit cube.
    Uniform,
    /// Truncated Gaussian blobs strung along the first axis, `gap` apart at their edges.
    Clusters { count: usize, gap: f64 },
    /// Uniform on the unit sphere.
    Sphere,
}

/// Standard deviation of each cluster; samples are kept within three of them.
pub const CLUSTER_SIGMA: f64 = 0.05;

pub fn gen_points(d: usize, n: usize, dist: PointDistribution, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match dist {
        PointDistribution::Uniform => (0..n)
            .map(|_| Point::from_fn(d, |_, _| rng.random_range(0.0..1.0)))
            .collect(),
        PointDistribution::Sphere => (0..n).map(|_| random_direction(d, &mut rng)).collect(),
        PointDistribution::Clusters { count, gap } => {
            let count = count.max(1);
            let pitch = gap + 6.0 * CLUSTER_SIGMA;
            (0..n)
                .map(|i| {
                    let offset = loop {
                        let v = Point::from_fn(d, |_, _| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            CLUSTER_SIGMA * z
                        });
                        if v.norm() <= 3.0 * CLUSTER_SIGMA {
                            break v;
                        }
                    };
                    let mut p = offset;
                    p[0] += (i % count) as f64 * pitch;
                    p
                })
                .collect()
        }
    }
}
