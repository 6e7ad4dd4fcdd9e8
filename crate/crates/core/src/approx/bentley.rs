use crate::geometry::{lp, q0_half, Polytope, TOL};

/// Columns over a grid on Q0's lower-dimensional face, each trimmed to the extent
/// of the body along the last axis.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnTable {
    pub dim: usize,
    /// Columns per axis of the base grid.
    pub per_axis: usize,
    pub pitch: f64,
    /// `(lo, hi)` of the last coordinate over the body inside each column.
    pub columns: Vec<Option<(f64, f64)>>,
}

impl ColumnTable {
    fn column_of(&self, q: &[f64]) -> Option<usize> {
        let h = q0_half(self.dim);
        let mut id = 0;
        for &x in q[..self.dim - 1].iter().rev() {
            if x < -h || x > h {
                return None;
            }
            let i = (((x + h) / self.pitch) as usize).min(self.per_axis - 1);
            id = id * self.per_axis + i;
        }
        Some(id)
    }

    pub fn query(&self, q: &[f64]) -> bool {
        let last = q[self.dim - 1];
        match self.column_of(q).and_then(|c| self.columns[c]) {
            Some((lo, hi)) => lo - TOL.membership <= last && last <= hi + TOL.membership,
            None => false,
        }
    }

    /// Stored reals: two per nonempty column.
    pub fn storage(&self) -> usize {
        2 * self.columns.iter().filter(|c| c.is_some()).count()
    }
}

/// Trims every column of base diameter `eps` to the body's lowest and highest points.
pub fn bentley_columns(k: &Polytope, eps: f64) -> ColumnTable {
    let d = k.dim;
    let h = q0_half(d);
    let base = if d > 1 { eps / ((d - 1) as f64).sqrt() } else { 2.0 * h };
    let per_axis = ((2.0 * h / base).ceil() as usize).max(1);
    let pitch = 2.0 * h / per_axis as f64;
    let count = per_axis.pow((d - 1) as u32);
    let mut columns = Vec::with_capacity(count);
    let mut lo = vec![-h; d];
    let mut hi = vec![h; d];
    let mut up = vec![0.0; d];
    up[d - 1] = 1.0;
    let down: Vec<f64> = up.iter().map(|x| -x).collect();
    for id in 0..count {
        let mut rest = id;
        for i in 0..d - 1 {
            let j = rest % per_axis;
            rest /= per_axis;
            lo[i] = -h + j as f64 * pitch;
            hi[i] = lo[i] + pitch;
        }
        let bottom = lp::box_lp(&k.halfspaces, &lo, &hi, Some(&up), TOL.lp);
        let top = lp::box_lp(&k.halfspaces, &lo, &hi, Some(&down), TOL.lp);
        columns.push(match (bottom, top) {
            (lp::LpResult::Optimal { value: a, .. }, lp::LpResult::Optimal { value: b, .. }) => Some((a, -b)),
            _ => None,
        });
    }
    ColumnTable {
        dim: d,
        per_axis,
        pitch,
        columns,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{distance_to_polytope, enumerate_vertices, Halfspace, Point};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn q0_columns_are_full() {
        let t = bentley_columns(&Polytope::q0(3), 0.2);
        let h = q0_half(3);
        assert!(t
            .columns
            .iter()
            .all(|c| matches!(c, Some((a, b)) if (a + h).abs() < 1e-9 && (b - h).abs() < 1e-9)));
    }

    #[test]
    fn empty_corner_column_rejects() {
        let h = q0_half(2);
        let mut k = Polytope::q0(2);
        k.halfspaces.push(Halfspace::from_slice(&[1.0, 0.0], 0.0).unwrap());
        let t = bentley_columns(&k, 0.1);
        assert!(t.columns[t.per_axis - 1].is_none());
        assert!(!t.query(&[h - 1e-3, 0.0]));
        assert!(t.query(&[-h + 1e-3, 0.0]));
    }

    #[test]
    fn agrees_with_band_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut hs: Vec<Halfspace> = (0..25)
            .map(|_| {
                let v: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                Halfspace::from_slice(&v, 0.0).unwrap()
            })
            .map(|h| Halfspace { offset: 0.2, ..h })
            .collect();
        hs.extend(Polytope::q0(3).halfspaces);
        let k = Polytope::new(3, hs).unwrap();
        let kv = enumerate_vertices(&k).unwrap();
        let eps = 0.05;
        let t = bentley_columns(&k, eps);
        let h = q0_half(3);
        for _ in 0..10_000 {
            let q: Vec<f64> = (0..3).map(|_| rng.random_range(-h..h)).collect();
            let inside = k.contains(&q);
            let got = t.query(&q);
            if inside {
                assert!(got, "{q:?}");
            } else if got {
                let dist = distance_to_polytope(&kv, &Point::from_vec(q.clone())).unwrap();
                assert!(dist <= eps + 1e-9, "{q:?} at {dist}");
            }
        }
    }
}
