//! Adaptive quadtree whose leaves store a few halfspaces each, answering
//! approximate membership in time proportional to depth plus leaf size.

mod serial;

pub use serial::{read_tree, write_tree};

use crate::approx::{local_dudley_box, restriction_local, set_cover_local, CoverOutcome, LocalApprox, Method};
use crate::geometry::{grid_coords, lp, nearest_point, Halfspace, Point, QuadtreeCell, VertexSet, WarmStart, TOL};
use crate::precondition::CanonicalForm;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum SrNode {
    Inside,
    Outside,
    Leaf(LocalApprox),
    /// Arena position of the first of `2^d` consecutive children, in lexicographic order.
    Internal(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SrParams {
    pub eps_abs: f64,
    /// Largest number of halfspaces a leaf may store.
    pub t: usize,
    /// Label cells inside only when they lie in the body, and keep leaves made of
    /// input halfspaces only.
    pub strict_inside: bool,
}

#[derive(Clone, Debug)]
pub struct SplitReduceTree {
    pub canonical: CanonicalForm,
    pub params: SrParams,
    pub nodes: Vec<SrNode>,
    pub depth: u32,
}

/// Input halfspace that rejects a query.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    /// Position in the canonical body's halfspace list.
    pub index: usize,
    pub halfspace: Halfspace,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QueryOutcome {
    pub inside: bool,
    pub witness: Option<Witness>,
    /// Tree levels descended.
    pub levels: u32,
    /// Halfspaces tested at the leaf.
    pub tests: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SpaceReport {
    pub nodes: usize,
    pub internal: usize,
    pub inside: usize,
    pub outside: usize,
    pub leaves: usize,
    /// Halfspaces stored over all leaves.
    pub sum_tq: usize,
    pub max_tq: usize,
    pub depth: u32,
}

/// `⌈lg(1/eps)⌉`: the level at which cells reach diameter `eps`.
pub fn depth_limit(eps: f64) -> u32 {
    (1.0 / eps).log2().ceil().max(0.0) as u32
}

struct Builder<'a> {
    cf: &'a CanonicalForm,
    kv: VertexSet,
    params: SrParams,
    nodes: Vec<SrNode>,
    depth: u32,
    warm: WarmStart,
}

impl Builder<'_> {
    fn grow(&mut self, slot: usize, cell: QuadtreeCell) -> Result<()> {
        self.depth = self.depth.max(cell.level);
        let node = self.classify(&cell)?;
        match node {
            Some(n) => self.nodes[slot] = n,
            None => {
                let first = self.nodes.len();
                let arity = 1usize << self.cf.dim();
                self.nodes.extend(std::iter::repeat_n(SrNode::Outside, arity));
                self.nodes[slot] = SrNode::Internal(first);
                for k in 0..arity {
                    self.grow(first + k, cell.child(k))?;
                }
            }
        }
        Ok(())
    }

    /// The label of `cell`, or `None` when it must be split.
    fn classify(&mut self, cell: &QuadtreeCell) -> Result<Option<SrNode>> {
        let k = &self.cf.body;
        let d = k.dim;
        let eps = self.params.eps_abs;
        let (lo, hi) = cell.bounds(d);
        if !lp::box_feasible(&k.halfspaces, &lo, &hi, TOL.lp) {
            return Ok(Some(SrNode::Outside));
        }
        let inside = if self.params.strict_inside {
            cell.corners().iter().all(|c| k.contains(c.as_slice()))
        } else {
            let mut all = true;
            for c in cell.corners() {
                if nearest_point(&self.kv, &c, Some(&mut self.warm))?.distance > eps {
                    all = false;
                    break;
                }
            }
            all
        };
        if inside {
            return Ok(Some(SrNode::Inside));
        }
        let t = self.params.t;
        match set_cover_local(self.cf, cell, eps, t) {
            CoverOutcome::Cover(a) => return Ok(Some(SrNode::Leaf(a))),
            CoverOutcome::TooLarge => {}
            CoverOutcome::GridCap => {
                if self.params.strict_inside {
                    let a = restriction_local(k, cell);
                    if a.len() <= t {
                        return Ok(Some(SrNode::Leaf(a)));
                    }
                } else if let Some(hs) = local_dudley_box(k, &lo, &hi, eps, Some(t))? {
                    return Ok(Some(SrNode::Leaf(LocalApprox {
                        cell: cell.clone(),
                        halfspaces: hs,
                        indices: None,
                        method: Method::LocalDudley,
                    })));
                }
            }
        }
        if cell.diameter() <= eps {
            return Ok(Some(if self.params.strict_inside {
                SrNode::Leaf(restriction_local(k, cell))
            } else {
                SrNode::Inside
            }));
        }
        Ok(None)
    }
}

/// Builds the tree for the canonical body at its `eps_abs`, with leaves of at most `t`
/// halfspaces. In strict mode a leaf at the depth limit may exceed `t`: it holds the
/// exact restriction of the body to the cell.
pub fn build(cf: &CanonicalForm, t: usize, strict_inside: bool) -> Result<SplitReduceTree> {
    let eps = cf.eps_abs;
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eps_abs must lie in (0, 1], got {eps}"
        )));
    }
    if t == 0 {
        return Err(Error::InvalidParameter("t must be at least 1".into()));
    }
    let kv = crate::geometry::enumerate_vertices(&cf.body)?;
    let params = SrParams {
        eps_abs: eps,
        t,
        strict_inside,
    };
    let mut b = Builder {
        cf,
        kv,
        params,
        nodes: vec![SrNode::Outside],
        depth: 0,
        warm: WarmStart::default(),
    };
    b.grow(0, QuadtreeCell::root(cf.dim()))?;
    Ok(SplitReduceTree {
        canonical: cf.clone(),
        params,
        nodes: b.nodes,
        depth: b.depth,
    })
}

impl SplitReduceTree {
    pub fn dim(&self) -> usize {
        self.canonical.dim()
    }

    /// Membership of a point given in canonical coordinates.
    pub fn query(&self, q: &[f64]) -> Result<QueryOutcome> {
        let d = self.dim();
        if q.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: q.len(),
            });
        }
        let coords = match grid_coords(q, self.depth) {
            Ok(c) => c,
            Err(Error::OutsideDomain) => {
                return Ok(QueryOutcome {
                    inside: false,
                    witness: None,
                    levels: 0,
                    tests: 0,
                });
            }
            Err(e) => return Err(e),
        };
        let mut node = 0;
        let mut levels = 0;
        while let SrNode::Internal(first) = self.nodes[node] {
            let shift = self.depth - levels - 1;
            let k = coords
                .iter()
                .fold(0usize, |acc, &c| (acc << 1) | ((c >> shift) & 1) as usize);
            node = first + k;
            levels += 1;
        }
        Ok(match &self.nodes[node] {
            SrNode::Inside => QueryOutcome {
                inside: true,
                witness: None,
                levels,
                tests: 0,
            },
            SrNode::Outside => QueryOutcome {
                inside: false,
                witness: None,
                levels,
                tests: 0,
            },
            SrNode::Leaf(a) => {
                let (hit, tests) = a.first_rejecting(q);
                let witness = hit.and_then(|i| {
                    a.indices.as_ref().map(|ids| Witness {
                        index: ids[i],
                        halfspace: a.halfspaces[i].clone(),
                    })
                });
                QueryOutcome {
                    inside: hit.is_none(),
                    witness,
                    levels,
                    tests,
                }
            }
            SrNode::Internal(_) => unreachable!(),
        })
    }

    /// Membership of a point in the caller's original coordinates.
    pub fn query_original(&self, x: &Point) -> Result<QueryOutcome> {
        self.query(self.canonical.map.apply(x).as_slice())
    }

    pub fn space_report(&self) -> SpaceReport {
        let mut r = SpaceReport {
            nodes: self.nodes.len(),
            depth: self.depth,
            ..Default::default()
        };
        for n in &self.nodes {
            match n {
                SrNode::Inside => r.inside += 1,
                SrNode::Outside => r.outside += 1,
                SrNode::Internal(_) => r.internal += 1,
                SrNode::Leaf(a) => {
                    r.leaves += 1;
                    r.sum_tq += a.len();
                    r.max_tq = r.max_tq.max(a.len());
                }
            }
        }
        r
    }

    /// Leaves whose closed cell meets the segment `[a, b]` (canonical coordinates).
    pub fn stabbed_leaves(&self, a: &[f64], b: &[f64]) -> Vec<&LocalApprox> {
        let d = self.dim();
        let mut out = Vec::new();
        let mut stack = vec![(0usize, QuadtreeCell::root(d))];
        while let Some((i, cell)) = stack.pop() {
            let (lo, hi) = cell.bounds(d);
            if !segment_meets_box(a, b, &lo, &hi) {
                continue;
            }
            match &self.nodes[i] {
                SrNode::Internal(first) => {
                    for k in (0..1usize << d).rev() {
                        stack.push((first + k, cell.child(k)));
                    }
                }
                SrNode::Leaf(l) => out.push(l),
                SrNode::Inside | SrNode::Outside => {}
            }
        }
        out
    }

    /// Leaf cells in preorder, with their nodes.
    pub fn leaves(&self) -> Vec<(QuadtreeCell, &SrNode)> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, QuadtreeCell::root(self.dim()))];
        while let Some((i, cell)) = stack.pop() {
            match &self.nodes[i] {
                SrNode::Internal(first) => {
                    let arity = 1usize << self.dim();
                    for k in (0..arity).rev() {
                        stack.push((first + k, cell.child(k)));
                    }
                }
                n => out.push((cell, n)),
            }
        }
        out
    }
}

/// Slab test for a closed segment against a closed box, padded by the membership tolerance.
fn segment_meets_box(a: &[f64], b: &[f64], lo: &[f64], hi: &[f64]) -> bool {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for i in 0..a.len() {
        let (l, h) = (lo[i] - TOL.membership, hi[i] + TOL.membership);
        let dir = b[i] - a[i];
        if dir.abs() < 1e-300 {
            if a[i] < l || a[i] > h {
                return false;
            }
            continue;
        }
        let (mut s0, mut s1) = ((l - a[i]) / dir, (h - a[i]) / dir);
        if s0 > s1 {
            std::mem::swap(&mut s0, &mut s1);
        }
        t0 = t0.max(s0);
        t1 = t1.min(s1);
        if t0 > t1 {
            return false;
        }
    }
    true
}
