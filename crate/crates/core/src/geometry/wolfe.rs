//! Wolfe's nearest-point algorithm on the convex hull of a vertex set.

use super::{dot, Point, Polytope, VertexSet, TOL};
use crate::{Error, Result};

/// Closest point of the hull to a query, with the distance.
#[derive(Clone, Debug)]
pub struct NearestPoint {
    pub distance: f64,
    pub point: Point,
}

/// Active set from a previous solve, reused to start the next one.
#[derive(Clone, Debug, Default)]
pub struct WarmStart {
    corral: Vec<usize>,
}

/// Euclidean distance from `q` to the polytope whose vertices are `vs`.
pub fn distance_to_polytope(vs: &VertexSet, q: &Point) -> Result<f64> {
    Ok(nearest_point(vs, q, None)?.distance)
}

/// Nearest point of `conv(vs)` to `q`.
pub fn nearest_point(vs: &VertexSet, q: &Point, warm: Option<&mut WarmStart>) -> Result<NearestPoint> {
    let d = vs.dim();
    if q.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: q.len(),
        });
    }
    if vs.vertices.is_empty() {
        return Err(Error::Unbounded);
    }
    if vs.source.contains(q.as_slice()) {
        return Ok(NearestPoint {
            distance: 0.0,
            point: q.clone(),
        });
    }
    let mut scratch = WarmStart::default();
    let warm = warm.unwrap_or(&mut scratch);
    let x = min_norm_shifted(&vs.vertices, q.as_slice(), &mut warm.corral);
    let distance = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let point = Point::from_iterator(d, x.iter().zip(q.iter()).map(|(a, b)| a + b));
    Ok(NearestPoint { distance, point })
}

/// Nearest point of `conv(vertices)` to `q` without the membership shortcut.
/// Returns the point and its distance.
pub(crate) fn nearest_in_hull(vertices: &[Point], q: &[f64], warm: &mut WarmStart) -> (Vec<f64>, f64) {
    let mut x = min_norm_shifted(vertices, q, &mut warm.corral);
    let distance = dot(&x, &x).sqrt();
    x.iter_mut().zip(q).for_each(|(a, b)| *a += b);
    (x, distance)
}

/// Vertices translated by `−q`, evaluated lazily so no per-vertex storage is needed.
struct Shifted<'a> {
    v: &'a [Point],
    q: &'a [f64],
    vq: Vec<f64>,
    qq: f64,
}

impl Shifted<'_> {
    #[inline]
    fn len(&self) -> usize {
        self.v.len()
    }

    #[inline]
    fn dot_x(&self, x: &[f64], xq: f64, i: usize) -> f64 {
        dot(x, self.v[i].as_slice()) - xq
    }

    #[inline]
    fn gram(&self, a: usize, b: usize) -> f64 {
        dot(self.v[a].as_slice(), self.v[b].as_slice()) - self.vq[a] - self.vq[b] + self.qq
    }

    fn combine(&self, set: &[usize], w: &[f64], x: &mut [f64]) {
        x.iter_mut().zip(self.q).for_each(|(xk, qk)| *xk = -qk);
        for (&i, &wi) in set.iter().zip(w) {
            for (xk, pk) in x.iter_mut().zip(self.v[i].iter()) {
                *xk += wi * pk;
            }
        }
    }
}

fn min_norm_shifted(vertices: &[Point], q: &[f64], corral: &mut Vec<usize>) -> Vec<f64> {
    let vq = vertices.iter().map(|v| dot(v.as_slice(), q)).collect();
    let pts = Shifted {
        v: vertices,
        q,
        vq,
        qq: dot(q, q),
    };
    wolfe(&pts, q.len(), corral)
}

/// Minimum-norm point of `conv(pts)`; `corral` seeds and receives the final active set.
fn wolfe(pts: &Shifted, d: usize, corral: &mut Vec<usize>) -> Vec<f64> {
    let n = pts.len();
    let scale = (0..n).map(|i| pts.gram(i, i)).fold(0.0, f64::max).max(1e-300);
    let mut set: Vec<usize> = Vec::new();
    let mut w: Vec<f64> = Vec::new();
    let mut x = vec![0.0; d];

    // Seed: previous corral if its affine minimizer is a proper convex combination.
    let seeded = if !corral.is_empty() && corral.iter().all(|&i| i < n) && corral.len() <= d + 1 {
        match affine_min(pts, corral) {
            Some(v) if v.iter().all(|&c| c > 1e-12) => {
                set = corral.clone();
                w = v;
                true
            }
            _ => false,
        }
    } else {
        false
    };
    if !seeded {
        let j = (0..n)
            .min_by(|&a, &b| pts.gram(a, a).total_cmp(&pts.gram(b, b)))
            .unwrap();
        set = vec![j];
        w = vec![1.0];
    }
    pts.combine(&set, &w, &mut x);

    let max_iter = 50 * (n + d) + 100;
    for _ in 0..max_iter {
        let xx = dot(&x, &x);
        if xx <= 1e-30 * scale {
            break;
        }
        let xq = dot(&x, pts.q);
        let (j, xp) = (0..n)
            .map(|i| (i, pts.dot_x(&x, xq, i)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if xx - xp <= 1e-12 * scale || set.contains(&j) {
            break;
        }
        set.push(j);
        w.push(0.0);
        // Minor cycles: move toward the affine minimizer, dropping points that leave.
        loop {
            let Some(v) = affine_min(pts, &set) else {
                // Degenerate affine hull: drop the newest point and stop.
                set.pop();
                w.pop();
                break;
            };
            if v.iter().all(|&c| c > 1e-14) {
                w = v;
                pts.combine(&set, &w, &mut x);
                break;
            }
            let mut theta = 1.0f64;
            for (wi, vi) in w.iter().zip(&v) {
                if *vi <= 1e-14 {
                    let denom = wi - vi;
                    if denom > 0.0 {
                        theta = theta.min(wi / denom);
                    }
                }
            }
            for (wi, vi) in w.iter_mut().zip(&v) {
                *wi = (1.0 - theta) * *wi + theta * vi;
            }
            let mut k = 0;
            while k < set.len() {
                if w[k] <= 1e-14 {
                    set.remove(k);
                    w.remove(k);
                } else {
                    k += 1;
                }
            }
            let total: f64 = w.iter().sum();
            for wi in w.iter_mut() {
                *wi /= total;
            }
            pts.combine(&set, &w, &mut x);
            if set.len() <= 1 {
                break;
            }
        }
    }
    *corral = set;
    x
}

/// Coefficients `v` (summing to 1) of the minimum-norm point of `aff(pts[set])`.
fn affine_min(pts: &Shifted, set: &[usize]) -> Option<Vec<f64>> {
    let k = set.len();
    if k == 1 {
        return Some(vec![1.0]);
    }
    // Bordered Gram system [G 1; 1ᵀ 0][v; μ] = [0; 1].
    let n = k + 1;
    let mut m = vec![0.0; n * (n + 1)];
    for a in 0..k {
        for b in 0..k {
            m[a * (n + 1) + b] = pts.gram(set[a], set[b]);
        }
        m[a * (n + 1) + k] = 1.0;
        m[k * (n + 1) + a] = 1.0;
    }
    m[k * (n + 1) + n] = 1.0;
    let mut sol = vec![0.0; n];
    let w = n + 1;
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a * w + col].abs().total_cmp(&m[b * w + col].abs()))?;
        if m[piv * w + col].abs() < 1e-18 {
            return None;
        }
        if piv != col {
            for j in 0..w {
                m.swap(piv * w + j, col * w + j);
            }
        }
        for r in col + 1..n {
            let f = m[r * w + col] / m[col * w + col];
            for j in col..w {
                m[r * w + j] -= f * m[col * w + j];
            }
        }
    }
    for r in (0..n).rev() {
        let mut s = m[r * w + n];
        for j in r + 1..n {
            s -= m[r * w + j] * sol[j];
        }
        sol[r] = s / m[r * w + r];
    }
    sol.truncate(k);
    sol.iter().all(|c| c.is_finite()).then_some(sol)
}

/// One-sided Hausdorff distance of an outer approximation `p` from `k`: the largest
/// distance from a vertex of `p` to `k`.
pub fn hausdorff_outer(p: &Polytope, k: &Polytope) -> Result<f64> {
    let kv = super::enumerate_vertices(k)?;
    for v in &kv.vertices {
        if !p.contains_tol(v.as_slice(), 1e-9) {
            return Err(Error::NotContained("a vertex of K lies outside P".into()));
        }
    }
    let pv = super::enumerate_vertices(p)?;
    let mut warm = WarmStart::default();
    let mut worst = 0.0f64;
    for v in &pv.vertices {
        worst = worst.max(nearest_point(&kv, v, Some(&mut warm))?.distance);
    }
    // Values under the dedup tolerance are the same vertex set.
    Ok(if worst <= TOL.dedup { 0.0 } else { worst })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::enumerate_vertices;
    use proptest::prelude::*;

    #[test]
    fn q0_distances() {
        let vs = enumerate_vertices(&Polytope::q0(2)).unwrap();
        assert_eq!(distance_to_polytope(&vs, &Point::zeros(2)).unwrap(), 0.0);
        let s = 1.0 / (2.0 * 2f64.sqrt());
        let q = Point::from_vec(vec![0.5 + s, 0.0]);
        assert!((distance_to_polytope(&vs, &q).unwrap() - 0.5).abs() < 1e-12);
        // Diagonal from a corner.
        let q = Point::from_vec(vec![s + 0.3, s + 0.4]);
        assert!((distance_to_polytope(&vs, &q).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn hausdorff_identity_is_zero() {
        let k = Polytope::q0(3);
        assert_eq!(hausdorff_outer(&k, &k).unwrap(), 0.0);
        assert!(hausdorff_outer(&k.scaled(0.5), &k).is_err());
        let h = hausdorff_outer(&k.scaled(2.0), &k).unwrap();
        // Corner (1,1,1)/√3 moves from half-diagonal 1/2 to 1.
        assert!((h - 0.5).abs() < 1e-9);
    }

    proptest! {
        /// Brute-force bracket: the distance from q to a box is computable coordinatewise.
        #[test]
        fn box_distance_matches_closed_form(
            q in proptest::collection::vec(-2.0f64..2.0, 3),
            half in proptest::collection::vec(0.05f64..0.5, 3),
        ) {
            let lo: Vec<f64> = half.iter().map(|h| -h).collect();
            let vs = enumerate_vertices(&Polytope::axis_box(&lo, &half)).unwrap();
            let exact: f64 = q.iter().zip(&half)
                .map(|(x, h)| (x.abs() - h).max(0.0).powi(2)).sum::<f64>().sqrt();
            let got = distance_to_polytope(&vs, &Point::from_vec(q.clone())).unwrap();
            prop_assert!((got - exact).abs() <= 1e-9, "got {} exact {}", got, exact);
        }
    }
}
