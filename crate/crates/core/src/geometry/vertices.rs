use super::{Point, Polytope, TOL};
use crate::{Error, Result};

/// Vertices of a bounded polytope, kept alongside the polytope they came from.
#[derive(Clone, Debug)]
pub struct VertexSet {
    pub vertices: Vec<Point>,
    pub source: Polytope,
}

impl VertexSet {
    pub fn dim(&self) -> usize {
        self.source.dim
    }

    /// Largest pairwise distance among vertices.
    pub fn diameter(&self) -> f64 {
        let v = &self.vertices;
        let mut best = 0.0f64;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                best = best.max((&v[i] - &v[j]).norm());
            }
        }
        best
    }

    /// Vertex maximizing `⟨u, v⟩`, with the maximum value.
    pub fn support(&self, u: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, v) in self.vertices.iter().enumerate() {
            let s = super::dot(u, v.as_slice());
            if s > best.1 {
                best = (i, s);
            }
        }
        best
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// All vertices of `k` with the default combination budget.
pub fn enumerate_vertices(k: &Polytope) -> Result<VertexSet> {
    enumerate_vertices_with_budget(k, TOL.vertex_budget)
}

/// Solves every d-subset of bounding hyperplanes, keeps feasible solutions, and merges duplicates.
pub fn enumerate_vertices_with_budget(k: &Polytope, budget: u64) -> Result<VertexSet> {
    let d = k.dim;
    let n = k.halfspaces.len();
    let combos = binomial(n, d);
    let clipping = d <= 3 && combos > CLIP_THRESHOLD && (n as u128) * (n as u128) <= 8 * budget as u128;
    if clipping {
        if !is_bounded(k) {
            return Err(Error::Unbounded);
        }
        return finish(k, enumerate_by_clipping(k));
    }
    if combos > budget as u128 {
        return Err(Error::VertexBudget {
            combinations: combos,
            budget,
        });
    }
    let feas_tol = TOL.dedup;
    let mut raw: Vec<Vec<f64>> = Vec::new();
    let mut subset: Vec<usize> = (0..d).collect();
    let mut mat = vec![0.0; d * (d + 1)];
    let mut sol = vec![0.0; d];
    // Index of the halfspace that rejected the last candidate; tried first next time.
    let mut last_violator = 0usize;
    if n >= d {
        loop {
            for (r, &i) in subset.iter().enumerate() {
                let h = &k.halfspaces[i];
                mat[r * (d + 1)..r * (d + 1) + d].copy_from_slice(h.normal.as_slice());
                mat[r * (d + 1) + d] = h.offset;
            }
            if solve_in_place(&mut mat, d, &mut sol) {
                let ok = k.halfspaces[last_violator].excess(&sol) <= feas_tol
                    && match k.halfspaces.iter().position(|h| h.excess(&sol) > feas_tol) {
                        None => true,
                        Some(j) => {
                            last_violator = j;
                            false
                        }
                    };
                if ok {
                    raw.push(sol.clone());
                }
            }
            // Next combination in lexicographic order.
            let mut i = d;
            while i > 0 && subset[i - 1] == n - d + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            subset[i - 1] += 1;
            for j in i..d {
                subset[j] = subset[j - 1] + 1;
            }
        }
    }
    if !is_bounded(k) {
        return Err(Error::Unbounded);
    }
    finish(k, raw)
}

fn finish(k: &Polytope, raw: Vec<Vec<f64>>) -> Result<VertexSet> {
    let vertices = dedup_points(raw, TOL.dedup);
    if vertices.len() < k.dim + 1 {
        return Err(Error::Degenerate);
    }
    Ok(VertexSet {
        vertices: vertices.into_iter().map(Point::from_vec).collect(),
        source: k.clone(),
    })
}

/// Above this many d-subsets, planar and spatial bodies switch to facet clipping.
const CLIP_THRESHOLD: u128 = 50_000;

/// Vertices of a bounded body in dimension 2 or 3: each facet (or the plane itself
/// when d = 2) is cut down to a polygon by the other halfspaces, and every polygon
/// corner is re-solved from its defining hyperplanes.
fn enumerate_by_clipping(k: &Polytope) -> Vec<Vec<f64>> {
    use super::lp::{box_lp, LpResult};
    let d = k.dim;
    let wide = vec![1e6; d];
    let neg_wide: Vec<f64> = wide.iter().map(|x| -x).collect();
    let mut far = 0.0f64;
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut c = vec![0.0; d];
            c[i] = s;
            if let LpResult::Optimal { value, .. } = box_lp(&k.halfspaces, &neg_wide, &wide, Some(&c), TOL.lp) {
                far = far.max(value.abs());
            }
        }
    }
    let half = far * (d as f64).sqrt() + 1.0;
    let mut raw = Vec::new();
    if d == 2 {
        clip_face(k, None, &[0.0, 0.0], [&[1.0, 0.0], &[0.0, 1.0]], half, &mut raw);
    } else {
        for (i, h) in k.halfspaces.iter().enumerate() {
            let n = h.normal.as_slice();
            let o: Vec<f64> = n.iter().map(|x| x * h.offset).collect();
            let (e1, e2) = plane_basis(n);
            clip_face(k, Some(i), &o, [&e1, &e2], half, &mut raw);
        }
    }
    raw.retain(|p| k.halfspaces.iter().all(|h| h.excess(p) <= TOL.dedup));
    raw
}

fn plane_basis(n: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let axis = (0..3).min_by(|&a, &b| n[a].abs().total_cmp(&n[b].abs())).unwrap();
    let mut e1 = vec![0.0; 3];
    e1[axis] = 1.0;
    let t = n[axis];
    e1.iter_mut().zip(n).for_each(|(e, x)| *e -= t * x);
    let norm = super::dot(&e1, &e1).sqrt();
    e1.iter_mut().for_each(|e| *e /= norm);
    let e2 = vec![
        n[1] * e1[2] - n[2] * e1[1],
        n[2] * e1[0] - n[0] * e1[2],
        n[0] * e1[1] - n[1] * e1[0],
    ];
    (e1, e2)
}

/// Clips the square of half-width `half` in the plane `o + span(basis)` by every
/// halfspace other than `face`, appending the corners in ambient coordinates.
fn clip_face(k: &Polytope, face: Option<usize>, o: &[f64], basis: [&[f64]; 2], half: f64, out: &mut Vec<Vec<f64>>) {
    let n = k.len();
    let d = k.dim;
    // Corner and the id of the line carrying the edge that leaves it; ids ≥ n are the square.
    let mut poly: Vec<([f64; 2], usize)> = vec![
        ([-half, -half], n),
        ([half, -half], n + 1),
        ([half, half], n + 2),
        ([-half, half], n + 3),
    ];
    let mut next = Vec::with_capacity(16);
    for (j, h) in k.halfspaces.iter().enumerate() {
        if Some(j) == face {
            continue;
        }
        let a = super::dot(h.normal.as_slice(), basis[0]);
        let b = super::dot(h.normal.as_slice(), basis[1]);
        let c = h.offset - super::dot(h.normal.as_slice(), o);
        if a.abs() + b.abs() < 1e-12 {
            if c < -TOL.dedup {
                return;
            }
            continue;
        }
        let m = poly.len();
        let side: Vec<f64> = poly.iter().map(|(p, _)| a * p[0] + b * p[1] - c).collect();
        if side.iter().all(|&s| s <= 1e-12) {
            continue;
        }
        next.clear();
        for idx in 0..m {
            let (p, e) = poly[idx];
            let (q, _) = poly[(idx + 1) % m];
            let (sp, sq) = (side[idx], side[(idx + 1) % m]);
            let cut = |sp: f64, sq: f64| {
                let t = sp / (sp - sq);
                [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
            };
            if sp <= 1e-12 {
                next.push((p, e));
                if sq > 1e-12 && sp < -1e-12 {
                    next.push((cut(sp, sq), j));
                } else if sq > 1e-12 {
                    // `p` sits on the clip line; the clip edge starts here.
                    next.last_mut().unwrap().1 = j;
                }
            } else if sq < -1e-12 {
                next.push((cut(sp, sq), e));
            }
        }
        std::mem::swap(&mut poly, &mut next);
        if poly.len() < 3 {
            return;
        }
    }
    let m = poly.len();
    let mut mat = vec![0.0; d * (d + 1)];
    let mut sol = vec![0.0; d];
    for idx in 0..m {
        let (p, e_out) = poly[idx];
        let e_in = poly[(idx + m - 1) % m].1;
        let ids: Vec<usize> = face.into_iter().chain([e_in, e_out]).collect();
        let solved = e_in < n && e_out < n && e_in != e_out && {
            for (r, &i) in ids.iter().enumerate() {
                let h = &k.halfspaces[i];
                mat[r * (d + 1)..r * (d + 1) + d].copy_from_slice(h.normal.as_slice());
                mat[r * (d + 1) + d] = h.offset;
            }
            solve_in_place(&mut mat, d, &mut sol)
        };
        if solved {
            out.push(sol.clone());
        } else {
            out.push((0..d).map(|t| o[t] + p[0] * basis[0][t] + p[1] * basis[1][t]).collect());
        }
    }
}

/// Boundedness test: the recession cone `{y : ⟨n_i, y⟩ ≤ 0}` must be trivial.
/// Checked by LP on the box `[-1, 1]^d` for each sign pattern of one coordinate.
fn is_bounded(k: &Polytope) -> bool {
    use super::lp::{box_lp, LpResult};
    use super::Halfspace;
    let d = k.dim;
    let cone: Vec<Halfspace> = k
        .halfspaces
        .iter()
        .map(|h| Halfspace {
            normal: h.normal.clone(),
            offset: 0.0,
        })
        .collect();
    let lo = vec![-1.0; d];
    let hi = vec![1.0; d];
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut c = vec![0.0; d];
            c[i] = -s;
            if let LpResult::Optimal { value, x } = box_lp(&cone, &lo, &hi, Some(&c), 1e-12) {
                // Ill-conditioned tableaus can report directions that leave the cone.
                let in_cone = cone.iter().all(|h| h.excess(&x) <= 1e-9);
                if value < -1e-7 && in_cone {
                    return false;
                }
            }
        }
    }
    true
}

/// Gaussian elimination with partial pivoting on the augmented `d × (d+1)` matrix.
fn solve_in_place(m: &mut [f64], d: usize, out: &mut [f64]) -> bool {
    let w = d + 1;
    for col in 0..d {
        let piv = (col..d)
            .max_by(|&a, &b| m[a * w + col].abs().total_cmp(&m[b * w + col].abs()))
            .unwrap();
        if m[piv * w + col].abs() < 1e-12 {
            return false;
        }
        if piv != col {
            for j in 0..w {
                m.swap(piv * w + j, col * w + j);
            }
        }
        for r in col + 1..d {
            let f = m[r * w + col] / m[col * w + col];
            if f != 0.0 {
                for j in col..w {
                    m[r * w + j] -= f * m[col * w + j];
                }
            }
        }
    }
    for r in (0..d).rev() {
        let mut s = m[r * w + d];
        for j in r + 1..d {
            s -= m[r * w + j] * out[j];
        }
        out[r] = s / m[r * w + r];
    }
    true
}

/// Merges points closer than `tol` (sorted sweep on the first coordinate).
pub(crate) fn dedup_points(mut pts: Vec<Vec<f64>>, tol: f64) -> Vec<Vec<f64>> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(pts.len());
    let mut start = 0;
    for p in pts {
        while start < out.len() && out[start][0] < p[0] - tol {
            start += 1;
        }
        if !out[start..].iter().any(|q| super::dist2(q, &p) <= tol * tol) {
            out.push(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Halfspace;

    #[test]
    fn q0_has_four_corners() {
        let vs = enumerate_vertices(&Polytope::q0(2)).unwrap();
        assert_eq!(vs.vertices.len(), 4);
        let s = 1.0 / (2.0 * 2f64.sqrt());
        for v in &vs.vertices {
            assert!((v[0].abs() - s).abs() < 1e-12 && (v[1].abs() - s).abs() < 1e-12);
        }
    }

    #[test]
    fn simplex_has_four_vertices() {
        let h = vec![
            Halfspace::from_slice(&[-1.0, 0.0, 0.0], 0.0).unwrap(),
            Halfspace::from_slice(&[0.0, -1.0, 0.0], 0.0).unwrap(),
            Halfspace::from_slice(&[0.0, 0.0, -1.0], 0.0).unwrap(),
            Halfspace::from_slice(&[1.0, 1.0, 1.0], 1.0).unwrap(),
        ];
        let vs = enumerate_vertices(&Polytope::new(3, h).unwrap()).unwrap();
        assert_eq!(vs.vertices.len(), 4);
    }

    #[test]
    fn unbounded_is_rejected() {
        let h = vec![
            Halfspace::from_slice(&[-1.0, 0.0], 0.0).unwrap(),
            Halfspace::from_slice(&[0.0, -1.0], 0.0).unwrap(),
            Halfspace::from_slice(&[1.0, -1.0], 1.0).unwrap(),
        ];
        assert!(matches!(
            enumerate_vertices(&Polytope::new(2, h).unwrap()),
            Err(Error::Unbounded)
        ));
    }

    #[test]
    fn budget_is_enforced() {
        let k = Polytope::q0(3);
        assert!(matches!(
            enumerate_vertices_with_budget(&k, 3),
            Err(Error::VertexBudget { .. })
        ));
    }

    /// Tangent planes to the unit sphere at evenly spread directions.
    fn tangent_body(n: usize) -> Polytope {
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let hs = (0..n)
            .map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                let r = (1.0 - z * z).sqrt();
                let t = golden * i as f64;
                Halfspace::from_slice(&[r * t.cos(), r * t.sin(), z], 1.0).unwrap()
            })
            .collect();
        Polytope::new(3, hs).unwrap()
    }

    #[test]
    fn clipping_matches_subsets() {
        for n in [20, 60] {
            let k = tangent_body(n);
            let mut a = enumerate_vertices(&k).unwrap().vertices;
            let mut b = finish(&k, enumerate_by_clipping(&k)).unwrap().vertices;
            let key = |p: &Point| (p[0] * 1e6).round() as i64;
            a.sort_by_key(key);
            b.sort_by_key(key);
            assert_eq!(a.len(), b.len());
            // Each clipped vertex coincides with a subset-enumerated one.
            assert!(b.iter().all(|v| a.iter().any(|w| (v - w).norm() < 1e-9)));
        }
        let sq = Polytope::q0(2);
        let v = finish(&sq, enumerate_by_clipping(&sq)).unwrap();
        assert_eq!(v.vertices.len(), 4);
        // Degenerate apex: many planes through one point.
        let mut cone = Polytope::q0(3);
        for i in 0..8 {
            let t = i as f64 * std::f64::consts::PI / 4.0;
            cone.halfspaces
                .push(Halfspace::from_slice(&[t.cos(), t.sin(), 1.0], 0.1).unwrap());
        }
        let a = enumerate_vertices(&cone).unwrap().vertices.len();
        let b = finish(&cone, enumerate_by_clipping(&cone)).unwrap().vertices.len();
        assert_eq!(a, b);
    }

    #[test]
    fn large_spatial_body_uses_clipping() {
        let k = tangent_body(400);
        let v = enumerate_vertices(&k).unwrap();
        // Simple polytope: Euler gives 2n − 4 vertices.
        assert_eq!(v.vertices.len(), 2 * 400 - 4);
    }

    #[test]
    fn duplicate_hyperplanes_merge() {
        let mut k = Polytope::q0(2);
        k.halfspaces.extend(Polytope::q0(2).halfspaces);
        assert_eq!(enumerate_vertices(&k).unwrap().vertices.len(), 4);
    }
}
