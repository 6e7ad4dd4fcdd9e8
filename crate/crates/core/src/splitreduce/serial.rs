//! Little-endian binary form: a header with the canonical body and map, then the
//! nodes in preorder.

use super::{SplitReduceTree, SrNode, SrParams};
use crate::approx::{LocalApprox, Method};
use crate::geometry::{Halfspace, Point, Polytope, QuadtreeCell};
use crate::precondition::{AffineMap, CanonicalForm};
use crate::{Error, Result};
use nalgebra::DMatrix;
use std::io::{Read, Write};

const MAGIC: &[u8; 4] = b"PMSR";
const VERSION: u32 = 1;

const TAG_INSIDE: u8 = 0;
const TAG_OUTSIDE: u8 = 1;
const TAG_LEAF: u8 = 2;
const TAG_INTERNAL: u8 = 3;

fn method_code(m: Method) -> u8 {
    match m {
        Method::SetCover => 0,
        Method::LocalDudley => 1,
        Method::Restriction => 2,
    }
}

struct Out<W: Write>(W);

impl<W: Write> Out<W> {
    fn u8(&mut self, v: u8) -> Result<()> {
        Ok(self.0.write_all(&[v])?)
    }
    fn u32(&mut self, v: u32) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn u64(&mut self, v: u64) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn f64(&mut self, v: f64) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn halfspace(&mut self, h: &Halfspace) -> Result<()> {
        for &x in h.normal.iter() {
            self.f64(x)?;
        }
        self.f64(h.offset)
    }
}

struct In<R: Read>(R);

impl<R: Read> In<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.0.read_exact(&mut b).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Corrupt("truncated tree stream".into()),
            _ => Error::Io(e),
        })?;
        Ok(b)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
    fn halfspace(&mut self, d: usize) -> Result<Halfspace> {
        let normal = Point::from_iterator(d, (0..d).map(|_| self.f64()).collect::<Result<Vec<_>>>()?);
        Ok(Halfspace {
            normal,
            offset: self.f64()?,
        })
    }
}

pub fn write_tree<W: Write>(tree: &SplitReduceTree, w: W) -> Result<()> {
    let mut o = Out(w);
    let cf = &tree.canonical;
    let d = tree.dim();
    o.0.write_all(MAGIC)?;
    o.u32(VERSION)?;
    o.u32(d as u32)?;
    o.f64(tree.params.eps_abs)?;
    o.u64(tree.params.t as u64)?;
    o.u8(tree.params.strict_inside as u8)?;
    o.u32(tree.depth)?;
    o.f64(cf.gamma)?;
    o.f64(cf.outer_radius)?;
    for &x in cf.map.matrix.iter() {
        o.f64(x)?;
    }
    for &x in cf.map.translation.iter() {
        o.f64(x)?;
    }
    o.u32(cf.body.len() as u32)?;
    for (h, &src) in cf.body.halfspaces.iter().zip(&cf.origin) {
        o.halfspace(h)?;
        o.u64(src as u64)?;
    }
    o.u64(tree.nodes.len() as u64)?;
    write_node(&mut o, tree, 0)?;
    Ok(o.0.flush()?)
}

fn write_node<W: Write>(o: &mut Out<W>, tree: &SplitReduceTree, i: usize) -> Result<()> {
    match &tree.nodes[i] {
        SrNode::Inside => o.u8(TAG_INSIDE),
        SrNode::Outside => o.u8(TAG_OUTSIDE),
        SrNode::Internal(first) => {
            o.u8(TAG_INTERNAL)?;
            for k in 0..1usize << tree.dim() {
                write_node(o, tree, first + k)?;
            }
            Ok(())
        }
        SrNode::Leaf(a) => {
            o.u8(TAG_LEAF)?;
            o.u32(a.cell.level)?;
            for &x in &a.cell.index {
                o.u64(x)?;
            }
            o.u8(method_code(a.method))?;
            o.u32(a.len() as u32)?;
            match &a.indices {
                Some(ids) => ids.iter().try_for_each(|&i| o.u32(i as u32)),
                None => a.halfspaces.iter().try_for_each(|h| o.halfspace(h)),
            }
        }
    }
}

pub fn read_tree<R: Read>(r: R) -> Result<SplitReduceTree> {
    let mut s = In(r);
    if &s.bytes::<4>()? != MAGIC {
        return Err(Error::Corrupt("not a tree file".into()));
    }
    let version = s.u32()?;
    if version != VERSION {
        return Err(Error::Corrupt(format!("unsupported version {version}")));
    }
    let d = s.u32()? as usize;
    if d == 0 || d > 16 {
        return Err(Error::Corrupt(format!("bad dimension {d}")));
    }
    let eps_abs = s.f64()?;
    let t = s.u64()? as usize;
    let strict_inside = s.u8()? != 0;
    let depth = s.u32()?;
    let gamma = s.f64()?;
    let outer_radius = s.f64()?;
    let m: Vec<f64> = (0..d * d).map(|_| s.f64()).collect::<Result<_>>()?;
    let tr: Vec<f64> = (0..d).map(|_| s.f64()).collect::<Result<_>>()?;
    let map = AffineMap::new(DMatrix::from_column_slice(d, d, &m), Point::from_vec(tr))
        .map_err(|_| Error::Corrupt("singular map".into()))?;
    let n = s.u32()? as usize;
    let mut halfspaces = Vec::with_capacity(n.min(1 << 20));
    let mut origin = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        halfspaces.push(s.halfspace(d)?);
        origin.push(s.u64()? as usize);
    }
    let body = Polytope { dim: d, halfspaces };
    let count = s.u64()? as usize;
    let mut nodes = vec![SrNode::Outside];
    let mut reader = NodeReader {
        s: &mut s,
        d,
        n,
        nodes: &mut nodes,
        depth,
    };
    reader.node(0, QuadtreeCell::root(d))?;
    if nodes.len() != count {
        return Err(Error::Corrupt(format!("expected {count} nodes, read {}", nodes.len())));
    }
    let canonical = CanonicalForm {
        body,
        map,
        gamma,
        eps_abs,
        origin,
        outer_radius,
    };
    let mut tree = SplitReduceTree {
        canonical,
        params: SrParams {
            eps_abs,
            t,
            strict_inside,
        },
        nodes,
        depth,
    };
    resolve(&mut tree);
    Ok(tree)
}

struct NodeReader<'a, R: Read> {
    s: &'a mut In<R>,
    d: usize,
    n: usize,
    nodes: &'a mut Vec<SrNode>,
    depth: u32,
}

impl<R: Read> NodeReader<'_, R> {
    fn node(&mut self, slot: usize, cell: QuadtreeCell) -> Result<()> {
        let node = match self.s.u8()? {
            TAG_INSIDE => SrNode::Inside,
            TAG_OUTSIDE => SrNode::Outside,
            TAG_INTERNAL => {
                if cell.level >= self.depth {
                    return Err(Error::Corrupt("internal node below the recorded depth".into()));
                }
                let first = self.nodes.len();
                let arity = 1usize << self.d;
                self.nodes.extend(std::iter::repeat_n(SrNode::Outside, arity));
                self.nodes[slot] = SrNode::Internal(first);
                for k in 0..arity {
                    self.node(first + k, cell.child(k))?;
                }
                return Ok(());
            }
            TAG_LEAF => {
                let level = self.s.u32()?;
                let index: Vec<u64> = (0..self.d).map(|_| self.s.u64()).collect::<Result<_>>()?;
                if level != cell.level || index != cell.index {
                    return Err(Error::Corrupt("leaf cell does not match its position".into()));
                }
                let method = match self.s.u8()? {
                    0 => Method::SetCover,
                    1 => Method::LocalDudley,
                    2 => Method::Restriction,
                    m => return Err(Error::Corrupt(format!("unknown method {m}"))),
                };
                let len = self.s.u32()? as usize;
                let (halfspaces, indices) = if method == Method::LocalDudley {
                    (
                        (0..len).map(|_| self.s.halfspace(self.d)).collect::<Result<Vec<_>>>()?,
                        None,
                    )
                } else {
                    let ids: Vec<usize> = (0..len)
                        .map(|_| self.s.u32().map(|i| i as usize))
                        .collect::<Result<_>>()?;
                    if ids.iter().any(|&i| i >= self.n) {
                        return Err(Error::Corrupt("halfspace index out of range".into()));
                    }
                    (Vec::new(), Some(ids))
                };
                SrNode::Leaf(LocalApprox {
                    cell,
                    halfspaces,
                    indices,
                    method,
                })
            }
            tag => return Err(Error::Corrupt(format!("unknown node tag {tag}"))),
        };
        self.nodes[slot] = node;
        Ok(())
    }
}

/// Fills indexed leaves with their halfspaces once the body is known.
fn resolve(tree: &mut SplitReduceTree) {
    let body = &tree.canonical.body;
    for n in tree.nodes.iter_mut() {
        if let SrNode::Leaf(a) = n {
            if let Some(ids) = &a.indices {
                a.halfspaces = ids.iter().map(|&i| body.halfspaces[i].clone()).collect();
            }
        }
    }
}
