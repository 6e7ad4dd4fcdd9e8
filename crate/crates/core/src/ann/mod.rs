//! Approximate nearest neighbors: a quadtree of cells, each holding candidate
//! sites, where large far sets are answered by vertical ray shooting against the
//! lifted upper envelope stored in a strict-mode membership tree.

mod lifted;
mod serial;

pub use lifted::{build_envelope, lift, ray_shoot, LiftedPlane, LiftedStructure, RayShot};
pub use serial::{read_index, write_index};

use crate::geometry::{dist2, Point, QuadtreeCell};
use crate::{Error, Result};

/// Build parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnParams {
    pub eps: f64,
    /// Leaf budget of the lifted membership trees.
    pub t: usize,
    /// Cells with more representatives than this are split.
    pub rep_threshold: usize,
    pub depth_cap: u32,
    /// Far sites lie within `2·c_q` of the cell after normalization.
    pub c_q: f64,
}

impl AnnParams {
    pub fn new(eps: f64, t: usize) -> Self {
        Self {
            eps,
            t,
            rep_threshold: 32,
            depth_cap: 12,
            c_q: 4.0,
        }
    }

    /// Far sets larger than `t·lg(1/eps)` get a lifted structure.
    pub fn lifted_threshold(&self) -> usize {
        (self.t as f64 * (1.0 / self.eps).log2()).ceil() as usize
    }
}

#[derive(Clone, Debug)]
pub struct AnnCell {
    pub cell: QuadtreeCell,
    /// Representatives inside the ball of radius `2·diam` about the cell center.
    pub near: Vec<usize>,
    pub far: Vec<usize>,
    pub lifted: Option<LiftedStructure>,
}

#[derive(Clone, Debug)]
pub enum AnnNode {
    Internal(usize),
    Leaf(AnnCell),
}

#[derive(Clone, Debug)]
pub struct AnnIndex {
    pub dim: usize,
    pub params: AnnParams,
    /// Sites in caller coordinates.
    pub sites: Vec<Point>,
    /// Domain cube: caller point `x` maps to `(x − center)·scale` inside Q0.
    pub center: Point,
    pub scale: f64,
    pub nodes: Vec<AnnNode>,
    pub depth: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnnAnswer {
    pub site: usize,
    pub distance: f64,
    /// Levels descended, distances evaluated, and membership queries issued.
    pub cost: usize,
    /// Bisection steps of the ray shot, when one was made.
    pub ray_steps: Option<u32>,
}

/// Builds the index with default thresholds.
pub fn build_ann(sites: &[Point], eps: f64, t: usize) -> Result<AnnIndex> {
    build_ann_with(sites, AnnParams::new(eps, t))
}

pub fn build_ann_with(sites: &[Point], params: AnnParams) -> Result<AnnIndex> {
    let d = sites.first().ok_or(Error::EmptyInput)?.len();
    if let Some(p) = sites.iter().find(|p| p.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: p.len(),
        });
    }
    if !(params.eps > 0.0 && params.eps <= 0.5) {
        return Err(Error::InvalidParameter(format!(
            "eps must lie in (0, 1/2], got {}",
            params.eps
        )));
    }
    if params.t == 0 {
        return Err(Error::InvalidParameter("t must be at least 1".into()));
    }
    // Domain: a cube about the bounding box, twice its largest extent on a side.
    let mut lo = sites[0].clone();
    let mut hi = sites[0].clone();
    for p in sites {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let center = (&lo + &hi) / 2.0;
    let extent = (&hi - &lo).max().max(1e-9);
    let half_side = extent;
    let scale = crate::geometry::q0_half(d) / half_side;
    let local: Vec<Point> = sites.iter().map(|p| (p - &center) * scale).collect();

    let mut b = AnnBuilder {
        params,
        local: &local,
        nodes: vec![AnnNode::Internal(0)],
        depth: 0,
    };
    let all: Vec<usize> = (0..sites.len()).collect();
    b.grow(0, QuadtreeCell::root(d), &all)?;
    let AnnBuilder { nodes, depth, .. } = b;
    Ok(AnnIndex {
        dim: d,
        params,
        sites: sites.to_vec(),
        center,
        scale,
        nodes,
        depth,
    })
}

struct AnnBuilder<'a> {
    params: AnnParams,
    local: &'a [Point],
    nodes: Vec<AnnNode>,
    depth: u32,
}

impl AnnBuilder<'_> {
    fn grow(&mut self, slot: usize, cell: QuadtreeCell, parent: &[usize]) -> Result<()> {
        self.depth = self.depth.max(cell.level);
        let c = cell.center();
        let diam = cell.diameter();
        let best = parent
            .iter()
            .map(|&i| dist2(self.local[i].as_slice(), c.as_slice()))
            .fold(f64::INFINITY, f64::min)
            .sqrt();
        let reach = (1.0 + self.params.eps) * (best + diam);
        let reps: Vec<usize> = parent
            .iter()
            .copied()
            .filter(|&i| dist2(self.local[i].as_slice(), c.as_slice()) <= reach * reach)
            .collect();
        // Cells whose sites all lie outside the near ball hand them to the lifted structure.
        let has_near = best <= 2.0 * diam;
        if reps.len() > self.params.rep_threshold && has_near && cell.level < self.params.depth_cap {
            let first = self.nodes.len();
            let arity = 1usize << cell.dim();
            self.nodes.extend((0..arity).map(|_| AnnNode::Internal(0)));
            self.nodes[slot] = AnnNode::Internal(first);
            for k in 0..arity {
                self.grow(first + k, cell.child(k), &reps)?;
            }
            return Ok(());
        }
        let near_r2 = (2.0 * diam) * (2.0 * diam);
        let (near, far): (Vec<usize>, Vec<usize>) = reps
            .into_iter()
            .partition(|&i| dist2(self.local[i].as_slice(), c.as_slice()) <= near_r2);
        let lifted = if far.len() > self.params.lifted_threshold() {
            Some(LiftedStructure::build(self.local, &far, &cell, &self.params)?)
        } else {
            None
        };
        self.nodes[slot] = AnnNode::Leaf(AnnCell {
            cell,
            near,
            far,
            lifted,
        });
        Ok(())
    }
}

impl AnnIndex {
    /// Maps a caller point into the index's Q0 frame.
    pub fn to_local(&self, q: &Point) -> Point {
        (q - &self.center) * self.scale
    }

    fn leaf(&self, local: &[f64]) -> Result<(&AnnCell, u32)> {
        let coords = crate::geometry::grid_coords(local, self.depth)?;
        let mut node = 0;
        let mut levels = 0;
        while let AnnNode::Internal(first) = self.nodes[node] {
            let shift = self.depth - levels - 1;
            node = first
                + coords
                    .iter()
                    .fold(0usize, |acc, &c| (acc << 1) | ((c >> shift) & 1) as usize);
            levels += 1;
        }
        match &self.nodes[node] {
            AnnNode::Leaf(c) => Ok((c, levels)),
            AnnNode::Internal(_) => unreachable!(),
        }
    }

    /// Representatives of the leaf containing `q`.
    pub fn candidates(&self, q: &Point) -> Result<&AnnCell> {
        Ok(self.leaf(self.to_local(q).as_slice())?.0)
    }

    pub fn query(&self, q: &Point) -> Result<AnnAnswer> {
        if q.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: q.len(),
            });
        }
        let local = self.to_local(q);
        let mut best: Option<(usize, f64)> = None;
        let consider = |i: usize, best: &mut Option<(usize, f64)>| {
            let d2 = dist2(self.sites[i].as_slice(), q.as_slice());
            if best.is_none_or(|(j, b)| d2 < b || (d2 == b && i < j)) {
                *best = Some((i, d2));
            }
        };
        let (cell, levels) = match self.leaf(local.as_slice()) {
            Ok(found) => found,
            // Queries beyond the domain cube are answered by a full scan.
            Err(Error::OutsideDomain) => {
                for i in 0..self.sites.len() {
                    consider(i, &mut best);
                }
                let (site, d2) = best.ok_or(Error::EmptyInput)?;
                return Ok(AnnAnswer {
                    site,
                    distance: d2.sqrt(),
                    cost: self.sites.len(),
                    ray_steps: None,
                });
            }
            Err(e) => return Err(e),
        };
        let mut cost = levels as usize;
        for &i in &cell.near {
            consider(i, &mut best);
        }
        cost += cell.near.len();
        let mut ray_steps = None;
        match &cell.lifted {
            Some(ls) => {
                let shot = ray_shoot(ls, local.as_slice())?;
                cost += shot.queries + shot.candidates;
                ray_steps = Some(shot.steps);
                consider(shot.site, &mut best);
                cost += 1;
            }
            None => {
                for &i in &cell.far {
                    consider(i, &mut best);
                }
                cost += cell.far.len();
            }
        }
        let (site, d2) = best.ok_or(Error::EmptyInput)?;
        Ok(AnnAnswer {
            site,
            distance: d2.sqrt(),
            cost,
            ray_steps,
        })
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, AnnNode::Leaf(_))).count()
    }

    pub fn lifted_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, AnnNode::Leaf(AnnCell { lifted: Some(_), .. })))
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform(n: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Point::from_vec(vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]))
            .collect()
    }

    fn exact(sites: &[Point], q: &Point) -> f64 {
        sites.iter().map(|p| (p - q).norm()).fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn single_site_everywhere() {
        let sites = vec![Point::from_vec(vec![0.3, 0.7])];
        let idx = build_ann(&sites, 0.1, 4).unwrap();
        assert_eq!(idx.nodes.len(), 1);
        let a = idx.query(&Point::from_vec(vec![0.3, 0.71])).unwrap();
        assert_eq!(a.site, 0);
    }

    #[test]
    fn sites_find_themselves() {
        let sites = uniform(300, 1);
        let idx = build_ann(&sites, 0.1, 4).unwrap();
        for (i, p) in sites.iter().enumerate() {
            let a = idx.query(p).unwrap();
            assert_eq!(a.distance, 0.0);
            assert_eq!(a.site, i);
        }
    }

    #[test]
    fn representatives_contain_exact_neighbor() {
        let sites = uniform(500, 2);
        let idx = build_ann(&sites, 0.1, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let q = Point::from_vec(vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]);
            let cell = idx.candidates(&q).unwrap();
            let best = exact(&sites, &q);
            assert!(cell
                .near
                .iter()
                .chain(&cell.far)
                .any(|&i| ((&sites[i] - &q).norm() - best).abs() <= 1e-12));
        }
    }

    #[test]
    fn clusters_keep_reps_local() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut sites = Vec::new();
        for c in [0.0, 100.0] {
            for _ in 0..200 {
                sites.push(Point::from_vec(vec![
                    c + rng.random_range(0.0..1.0),
                    rng.random_range(0.0..1.0),
                ]));
            }
        }
        let idx = build_ann(&sites, 0.1, 4).unwrap();
        let cell = idx.candidates(&Point::from_vec(vec![0.5, 0.5])).unwrap();
        assert!(cell.near.iter().chain(&cell.far).all(|&i| i < 200));
    }

    #[test]
    fn answers_within_factor() {
        let sites = uniform(1000, 5);
        let eps = 0.1;
        let idx = build_ann(&sites, eps, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..3000 {
            let q = Point::from_vec(vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]);
            let a = idx.query(&q).unwrap();
            let best = exact(&sites, &q);
            assert!(a.distance <= (1.0 + eps) * best + 1e-12, "{} vs {}", a.distance, best);
        }
    }
}
