use super::{LocalApprox, Method};
use crate::geometry::{
    dedup_points, dot, enumerate_vertices, for_each_sphere_sample, lp, nearest_in_hull, q0_half, Halfspace, Point,
    Polytope, QuadtreeCell, VertexSet, WarmStart, TOL,
};
use crate::{Error, Result};

/// Radius of the sampling sphere around a body inside Q0.
const SPHERE_RADIUS: f64 = 3.0;
/// Slack added to the standardized neighborhood box.
const MARGIN: f64 = 1e-9;

/// One sampled support: the sphere point, its nearest point on the body, and the
/// supporting halfspace orthogonal to the segment between them.
#[derive(Clone, Debug)]
pub struct DudleySample {
    pub sphere_point: Point,
    pub contact: Point,
    pub support: Halfspace,
}

fn validate_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("eps must lie in (0, 1], got {eps}")))
    }
}

/// Support halfspace for the sample `x` with nearest point `p` at distance `dist`;
/// the offset is the support value of the vertex set so that it contains the body.
fn support_row(vertices: &[Point], x: &[f64], p: &[f64], dist: f64) -> Vec<f64> {
    let u: Vec<f64> = x.iter().zip(p).map(|(a, b)| (a - b) / dist).collect();
    let offset = vertices
        .iter()
        .map(|v| dot(&u, v.as_slice()))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut row = u;
    row.push(offset);
    row
}

fn rows_to_halfspaces(rows: Vec<Vec<f64>>) -> Vec<Halfspace> {
    let mut rows = rows;
    // Deterministic order independent of the dedup sweep.
    rows.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    rows.into_iter()
        .map(|r| {
            let (n, b) = r.split_at(r.len() - 1);
            Halfspace {
                normal: Point::from_column_slice(n),
                offset: b[0],
            }
        })
        .collect()
}

/// Every sample of the radius-3 sphere at spacing `√eps/4` with its support.
pub fn dudley_samples(kv: &VertexSet, eps: f64) -> Result<Vec<DudleySample>> {
    validate_eps(eps)?;
    let d = kv.dim();
    let mut out = Vec::new();
    let mut warm = WarmStart::default();
    for_each_sphere_sample(d, SPHERE_RADIUS, eps.sqrt() / 4.0, |x| {
        let (p, dist) = nearest_in_hull(&kv.vertices, x, &mut warm);
        let row = support_row(&kv.vertices, x, &p, dist);
        out.push(DudleySample {
            sphere_point: Point::from_column_slice(x),
            contact: Point::from_vec(p),
            support: Halfspace {
                normal: Point::from_column_slice(&row[..d]),
                offset: row[d],
            },
        });
    });
    Ok(out)
}

/// Outer approximation of a body inside Q0 by the distinct supports of a
/// `√eps/4`-dense sample of the radius-3 sphere.
pub fn dudley_approx(k: &Polytope, eps: f64) -> Result<Polytope> {
    validate_eps(eps)?;
    let kv = enumerate_vertices(k)?;
    let d = k.dim;
    let mut rows = Vec::new();
    let mut warm = WarmStart::default();
    for_each_sphere_sample(d, SPHERE_RADIUS, eps.sqrt() / 4.0, |x| {
        let (p, dist) = nearest_in_hull(&kv.vertices, x, &mut warm);
        rows.push(support_row(&kv.vertices, x, &p, dist));
    });
    Polytope::new(d, rows_to_halfspaces(dedup_points(rows, TOL.dedup)))
}

/// Dudley's construction restricted to `cell`: supports whose contact lies within
/// `√(eps/diam)·diam` of the cell.
pub fn local_dudley(k: &Polytope, cell: &QuadtreeCell, eps: f64) -> Result<LocalApprox> {
    let (lo, hi) = cell.bounds(k.dim);
    let halfspaces = local_dudley_box(k, &lo, &hi, eps, None)?.expect("no cap given");
    Ok(LocalApprox {
        cell: cell.clone(),
        halfspaces,
        indices: None,
        method: Method::LocalDudley,
    })
}

/// Local Dudley on an arbitrary cube `[lo, hi]`. Returns `Ok(None)` once more than
/// `cap` distinct halfspaces have been found.
pub(crate) fn local_dudley_box(
    k: &Polytope,
    lo: &[f64],
    hi: &[f64],
    eps: f64,
    cap: Option<usize>,
) -> Result<Option<Vec<Halfspace>>> {
    let d = k.dim;
    let side = hi[0] - lo[0];
    let diam = side * (d as f64).sqrt();
    let center: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let eps_std = (eps / diam).min(1.0);
    let reach = eps_std.sqrt();

    // Standardize: y = (x − c)/diam maps the cube onto Q0.
    let h0 = q0_half(d);
    let bh = h0 + reach + MARGIN;
    let blo = vec![-bh; d];
    let bhi = vec![bh; d];
    let mut crossing = Vec::new();
    for h in &k.halfspaces {
        let g = Halfspace {
            normal: h.normal.clone(),
            offset: (h.offset - dot(h.normal.as_slice(), &center)) / diam,
        };
        if g.box_min(&blo, &bhi) > g.offset {
            return Err(Error::InvalidParameter("cell neighborhood misses the body".into()));
        }
        if g.box_max(&blo, &bhi) > g.offset {
            crossing.push(g);
        }
    }
    if crossing.is_empty() {
        return Ok(Some(vec![]));
    }
    if !lp::box_feasible(&crossing, &blo, &bhi, TOL.lp) {
        return Err(Error::InvalidParameter("cell neighborhood misses the body".into()));
    }

    // Angular window containing every usable support normal.
    let mut mean = vec![0.0; d];
    for g in &crossing {
        mean.iter_mut().zip(g.normal.iter()).for_each(|(m, n)| *m += n);
    }
    let mnorm = dot(&mean, &mean).sqrt();
    let window_cos = if mnorm > 1e-12 {
        mean.iter_mut().for_each(|m| *m /= mnorm);
        let spread = crossing
            .iter()
            .map(|g| dot(&mean, g.normal.as_slice()).clamp(-1.0, 1.0).acos())
            .fold(0.0, f64::max);
        let r1 = 0.5 + (d as f64).sqrt() * (reach + MARGIN);
        let angle = spread + (r1 / SPHERE_RADIUS).asin();
        if spread < std::f64::consts::FRAC_PI_2 && angle < std::f64::consts::PI {
            angle.cos()
        } else {
            -2.0
        }
    } else {
        -2.0
    };

    let mut body = crossing;
    body.extend(Polytope::axis_box(&blo, &bhi).halfspaces);
    let local = Polytope {
        dim: d,
        halfspaces: body,
    };
    let kv = enumerate_vertices(&local)?;

    let limit = cap.map(|c| 4 * (c + 1) + 64);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut aborted = false;
    let mut warm = WarmStart::default();
    for_each_sphere_sample(d, SPHERE_RADIUS, reach / 4.0, |x| {
        if aborted || dot(x, &mean) < window_cos * SPHERE_RADIUS {
            return;
        }
        let (p, dist) = nearest_in_hull(&kv.vertices, x, &mut warm);
        let gap2: f64 = p.iter().map(|&c| (c.abs() - h0).max(0.0).powi(2)).sum();
        if gap2 > reach * reach {
            return;
        }
        rows.push(support_row(&kv.vertices, x, &p, dist));
        if let (Some(lim), Some(c)) = (limit, cap) {
            if rows.len() > lim {
                rows = dedup_points(std::mem::take(&mut rows), TOL.dedup);
                if rows.len() > c {
                    aborted = true;
                }
            }
        }
    });
    if aborted {
        return Ok(None);
    }
    let rows = dedup_points(rows, TOL.dedup);
    if cap.is_some_and(|c| rows.len() > c) {
        return Ok(None);
    }
    let out = rows_to_halfspaces(rows)
        .into_iter()
        .map(|g| {
            let offset = diam * g.offset + dot(g.normal.as_slice(), &center);
            Halfspace {
                normal: g.normal,
                offset,
            }
        })
        .collect();
    Ok(Some(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::verify_local_approx;
    use crate::geometry::hausdorff_outer;
    use crate::precondition::canonicalize;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tangent(d: usize, n: usize, seed: u64) -> Polytope {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hs: Vec<Halfspace> = (0..n)
            .map(|_| {
                let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                Halfspace::from_slice(&v, 0.0).unwrap()
            })
            .map(|h| Halfspace { offset: 0.3, ..h })
            .collect();
        Polytope { dim: d, halfspaces: hs }.clipped_to_q0()
    }

    fn box_body(d: usize, half: f64) -> Polytope {
        Polytope::axis_box(&vec![-half; d], &vec![half; d])
    }

    #[test]
    fn coarse_box_is_approximated() {
        let h = 0.5 / 2f64.sqrt() / 2.0;
        let k = box_body(2, h);
        let p = dudley_approx(&k, 0.5).unwrap();
        assert!(hausdorff_outer(&p, &k).unwrap() <= 0.5);
    }

    #[test]
    fn supports_touch_the_body() {
        let k = random_tangent(3, 30, 1);
        let kv = enumerate_vertices(&k).unwrap();
        for s in dudley_samples(&kv, 0.2).unwrap() {
            let slack_min = kv
                .vertices
                .iter()
                .map(|v| s.support.offset - dot(s.support.normal.as_slice(), v.as_slice()))
                .fold(f64::INFINITY, f64::min);
            assert!((-1e-9..=1e-9).contains(&slack_min));
            assert!(s.support.excess(s.contact.as_slice()).abs() <= 1e-9);
            let gap: Vec<f64> = s
                .sphere_point
                .iter()
                .zip(s.contact.iter())
                .map(|(a, b)| a - b)
                .collect();
            assert!(dot(s.support.normal.as_slice(), &gap) > 0.0);
        }
    }

    #[test]
    fn planar_output_is_an_outer_approximation() {
        let k = canonicalize(&random_tangent(2, 40, 2)).unwrap().body;
        for eps in [0.2, 0.05, 0.01] {
            let p = dudley_approx(&k, eps).unwrap();
            let h = hausdorff_outer(&p, &k).unwrap();
            assert!(h <= eps, "eps {eps}: hausdorff {h}");
        }
    }

    #[test]
    fn spatial_output_rejects_far_points() {
        let k = canonicalize(&random_tangent(3, 40, 2)).unwrap().body;
        let kv = enumerate_vertices(&k).unwrap();
        let eps = 0.1;
        let p = dudley_approx(&k, eps).unwrap();
        assert!(kv.vertices.iter().all(|v| p.contains_tol(v.as_slice(), 1e-9)));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut warm = WarmStart::default();
        for _ in 0..3000 {
            let q: Vec<f64> = (0..3).map(|_| rng.random_range(-0.5..0.5)).collect();
            if p.contains(&q) {
                let (_, dist) = nearest_in_hull(&kv.vertices, &q, &mut warm);
                assert!(k.contains(&q) || dist <= eps, "{q:?} at {dist}");
            }
        }
    }

    #[test]
    fn root_cell_is_a_subset_of_global() {
        let cf = canonicalize(&random_tangent(2, 25, 3)).unwrap();
        let eps = 0.05;
        let global = dudley_approx(&cf.body, eps).unwrap();
        let local = local_dudley(&cf.body, &QuadtreeCell::root(2), eps).unwrap();
        assert!(local.len() <= global.len());
        for h in &local.halfspaces {
            assert!(global
                .halfspaces
                .iter()
                .any(|g| (&g.normal - &h.normal).norm() < 1e-7 && (g.offset - h.offset).abs() < 1e-7));
        }
    }

    #[test]
    fn flat_facet_needs_few_halfspaces() {
        let k = box_body(3, 0.2);
        // Level-3 cell straddling the face x0 = 0.2 away from edges.
        let side = 2.0 * q0_half(3) / 8.0;
        let i = ((0.2 + q0_half(3)) / side).floor() as u64;
        let cell = QuadtreeCell::new(3, vec![i, 3, 4]);
        let a = local_dudley(&k, &cell, 0.01).unwrap();
        assert_eq!(a.len(), 1, "{:?}", a.halfspaces);
    }

    #[test]
    fn random_cells_verify() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 100 {
            let d = rng.random_range(2..4);
            let k = canonicalize(&random_tangent(d, 20, rng.random())).unwrap().body;
            let kv = enumerate_vertices(&k).unwrap();
            let level = rng.random_range(1..4u32);
            let cell = QuadtreeCell::new(level, (0..d).map(|_| rng.random_range(0..1u64 << level)).collect());
            let (lo, hi) = cell.bounds(d);
            let meets = lp::box_feasible(&k.halfspaces, &lo, &hi, TOL.lp);
            let inside = cell.corners().iter().all(|c| k.contains(c.as_slice()));
            if !meets || inside {
                continue;
            }
            let eps = rng.random_range(0.01..0.1);
            let a = local_dudley(&k, &cell, eps).unwrap();
            let r = verify_local_approx(&kv, &a, eps, 200, checked);
            assert!(r.passed(), "cell {cell:?} eps {eps}: {r:?}");
            checked += 1;
        }
    }

    #[test]
    fn cap_aborts() {
        let cf = canonicalize(&random_tangent(3, 60, 4)).unwrap();
        let (lo, hi) = QuadtreeCell::root(3).bounds(3);
        assert!(local_dudley_box(&cf.body, &lo, &hi, 0.05, Some(3)).unwrap().is_none());
    }
}
