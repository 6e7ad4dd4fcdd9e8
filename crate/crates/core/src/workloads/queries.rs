use super::random_direction;
use crate::geometry::{enumerate_vertices, nearest_point, q0_half, Point, Polytope, VertexSet, WarmStart};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

/// Accepted band points sit at least this factor above `eps`.
pub const BAND_MARGIN: f64 = 1.05;

/// Label slack against the distance oracle.
const SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stratum {
    Inside,
    /// Outside at distance in `(eps·margin, 2·eps]`.
    Band,
    /// Outside at distance above `2·eps`.
    Far,
}

impl Stratum {
    pub fn name(self) -> &'static str {
        match self {
            Stratum::Inside => "inside",
            Stratum::Band => "band",
            Stratum::Far => "far",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct QueryCounts {
    pub inside: usize,
    pub band: usize,
    pub far: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledQuery {
    pub point: Point,
    pub stratum: Stratum,
    /// Oracle distance to the body; zero inside.
    pub distance: f64,
}

/// Ground-truth labeled queries around `k`. Inside points are random convex
/// combinations of vertices; exterior points are offsets along facet normals from
/// random boundary points, plus uniform samples of a padded Q0 for the far stratum.
/// Every exterior distance is certified by the nearest-point oracle.
pub fn gen_queries(k: &Polytope, eps: f64, counts: QueryCounts, seed: u64) -> Result<Vec<LabeledQuery>> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let vs = enumerate_vertices(k)?;
    let d = k.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centroid = vs.vertices.iter().fold(Point::zeros(d), |a, v| a + v) / vs.vertices.len() as f64;
    let mut warm = WarmStart::default();
    let mut out = Vec::with_capacity(counts.inside + counts.band + counts.far);

    for _ in 0..counts.inside {
        let w: Vec<f64> = (0..vs.vertices.len()).map(|_| Exp1.sample(&mut rng)).collect();
        let total: f64 = w.iter().sum();
        let p = vs
            .vertices
            .iter()
            .zip(&w)
            .fold(Point::zeros(d), |a, (v, &wi)| a + v * (wi / total));
        out.push(LabeledQuery {
            point: p,
            stratum: Stratum::Inside,
            distance: 0.0,
        });
    }

    let mut exterior = |lo: f64, hi: f64, stratum: Stratum, out: &mut Vec<LabeledQuery>, rng: &mut ChaCha8Rng| {
        let mut attempts = 0usize;
        loop {
            attempts += 1;
            if attempts > 10_000 {
                return Err(Error::InvalidParameter(format!(
                    "could not place a {} query",
                    stratum.name()
                )));
            }
            let p = if stratum == Stratum::Far && rng.random_bool(0.5) {
                let h = 2.0 * q0_half(d);
                Point::from_fn(d, |_, _| rng.random_range(-h..h))
            } else {
                let delta = rng.random_range(lo..=hi);
                match offset_from_boundary(k, &centroid, delta, rng) {
                    Some(p) => p,
                    None => continue,
                }
            };
            let dist = certified_distance(&vs, &p, &mut warm)?;
            if dist > lo + SLACK && dist <= hi {
                out.push(LabeledQuery {
                    point: p,
                    stratum,
                    distance: dist,
                });
                return Ok(());
            }
        }
    };
    for _ in 0..counts.band {
        exterior(eps * BAND_MARGIN, 2.0 * eps, Stratum::Band, &mut out, &mut rng)?;
    }
    for _ in 0..counts.far {
        exterior(2.0 * eps, 4.0 * eps.max(q0_half(d)), Stratum::Far, &mut out, &mut rng)?;
    }
    Ok(out)
}

/// Exits the body along a random ray from `center` and steps `delta` along the exit
/// facet's normal. The result lies at distance exactly `delta` up to rounding.
fn offset_from_boundary(k: &Polytope, center: &Point, delta: f64, rng: &mut impl Rng) -> Option<Point> {
    let u = random_direction(k.dim, rng);
    let (s, facet) = k
        .halfspaces
        .iter()
        .enumerate()
        .filter_map(|(i, h)| {
            let rate = h.normal.dot(&u);
            (rate > 1e-12).then(|| ((h.offset - h.normal.dot(center)) / rate, i))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))?;
    let n = &k.halfspaces[facet].normal;
    Some(center + u * s + n * (delta / n.norm()))
}

fn certified_distance(vs: &VertexSet, p: &Point, warm: &mut WarmStart) -> Result<f64> {
    Ok(nearest_point(vs, p, Some(warm))?.distance)
}
