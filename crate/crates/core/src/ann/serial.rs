//! Little-endian binary form of an index: parameters, sites, then cells in
//! preorder, with each lifted structure embedding its membership tree.

use super::{AnnCell, AnnIndex, AnnNode, AnnParams, LiftedStructure};
use crate::geometry::{Point, QuadtreeCell};
use crate::splitreduce::{read_tree, write_tree};
use crate::{Error, Result};
use std::io::{Read, Write};

const MAGIC: &[u8; 4] = b"PMAN";
const VERSION: u32 = 1;

const TAG_LEAF: u8 = 0;
const TAG_INTERNAL: u8 = 1;

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
    fn point(&mut self, p: &Point) -> Result<()> {
        p.iter().try_for_each(|&x| self.f64(x))
    }
    fn ids(&mut self, ids: &[usize]) -> Result<()> {
        self.u64(ids.len() as u64)?;
        ids.iter().try_for_each(|&i| self.u64(i as u64))
    }
}

struct In<R: Read>(R);

impl<R: Read> In<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.0.read_exact(&mut b).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Corrupt("truncated index stream".into()),
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
    fn point(&mut self, d: usize) -> Result<Point> {
        Ok(Point::from_vec((0..d).map(|_| self.f64()).collect::<Result<_>>()?))
    }
    fn ids(&mut self, bound: usize) -> Result<Vec<usize>> {
        let n = self.u64()? as usize;
        if n > bound {
            return Err(Error::Corrupt("id list longer than the site list".into()));
        }
        let ids: Vec<usize> = (0..n).map(|_| self.u64().map(|i| i as usize)).collect::<Result<_>>()?;
        if ids.iter().any(|&i| i >= bound) {
            return Err(Error::Corrupt("site id out of range".into()));
        }
        Ok(ids)
    }
}

pub fn write_index<W: Write>(index: &AnnIndex, w: W) -> Result<()> {
    let mut o = Out(w);
    o.0.write_all(MAGIC)?;
    o.u32(VERSION)?;
    o.u32(index.dim as u32)?;
    let p = &index.params;
    o.f64(p.eps)?;
    o.u64(p.t as u64)?;
    o.u64(p.rep_threshold as u64)?;
    o.u32(p.depth_cap)?;
    o.f64(p.c_q)?;
    o.u64(index.sites.len() as u64)?;
    for s in &index.sites {
        o.point(s)?;
    }
    o.point(&index.center)?;
    o.f64(index.scale)?;
    o.u32(index.depth)?;
    o.u64(index.nodes.len() as u64)?;
    write_node(&mut o, index, 0)?;
    Ok(o.0.flush()?)
}

fn write_node<W: Write>(o: &mut Out<W>, index: &AnnIndex, i: usize) -> Result<()> {
    match &index.nodes[i] {
        AnnNode::Internal(first) => {
            o.u8(TAG_INTERNAL)?;
            (0..1usize << index.dim).try_for_each(|k| write_node(o, index, first + k))
        }
        AnnNode::Leaf(cell) => {
            o.u8(TAG_LEAF)?;
            o.ids(&cell.near)?;
            o.ids(&cell.far)?;
            match &cell.lifted {
                None => o.u8(0),
                Some(ls) => {
                    o.u8(1)?;
                    o.ids(&ls.sites)?;
                    for p in &ls.points {
                        o.point(p)?;
                    }
                    o.point(&ls.center)?;
                    for v in [ls.scale, ls.half_x, ls.z_bottom, ls.z_top, ls.resolution] {
                        o.f64(v)?;
                    }
                    write_tree(&ls.tree, &mut o.0)
                }
            }
        }
    }
}

pub fn read_index<R: Read>(r: R) -> Result<AnnIndex> {
    let mut s = In(r);
    if &s.bytes::<4>()? != MAGIC {
        return Err(Error::Corrupt("not an index file".into()));
    }
    let version = s.u32()?;
    if version != VERSION {
        return Err(Error::Corrupt(format!("unsupported version {version}")));
    }
    let dim = s.u32()? as usize;
    if dim == 0 || dim > 16 {
        return Err(Error::Corrupt(format!("bad dimension {dim}")));
    }
    let params = AnnParams {
        eps: s.f64()?,
        t: s.u64()? as usize,
        rep_threshold: s.u64()? as usize,
        depth_cap: s.u32()?,
        c_q: s.f64()?,
    };
    let n = s.u64()? as usize;
    let mut sites = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        sites.push(s.point(dim)?);
    }
    let center = s.point(dim)?;
    let scale = s.f64()?;
    let depth = s.u32()?;
    let count = s.u64()? as usize;
    let mut nodes = vec![AnnNode::Internal(0)];
    let mut reader = NodeReader {
        s: &mut s,
        dim,
        n,
        depth,
        nodes: &mut nodes,
    };
    reader.node(0, QuadtreeCell::root(dim))?;
    if nodes.len() != count {
        return Err(Error::Corrupt(format!("expected {count} nodes, read {}", nodes.len())));
    }
    Ok(AnnIndex {
        dim,
        params,
        sites,
        center,
        scale,
        nodes,
        depth,
    })
}

struct NodeReader<'a, R: Read> {
    s: &'a mut In<R>,
    dim: usize,
    n: usize,
    depth: u32,
    nodes: &'a mut Vec<AnnNode>,
}

impl<R: Read> NodeReader<'_, R> {
    fn node(&mut self, slot: usize, cell: QuadtreeCell) -> Result<()> {
        match self.s.u8()? {
            TAG_INTERNAL => {
                if cell.level >= self.depth {
                    return Err(Error::Corrupt("internal node below the recorded depth".into()));
                }
                let first = self.nodes.len();
                let arity = 1usize << self.dim;
                self.nodes.extend((0..arity).map(|_| AnnNode::Internal(0)));
                self.nodes[slot] = AnnNode::Internal(first);
                (0..arity).try_for_each(|k| self.node(first + k, cell.child(k)))
            }
            TAG_LEAF => {
                let near = self.s.ids(self.n)?;
                let far = self.s.ids(self.n)?;
                let lifted = match self.s.u8()? {
                    0 => None,
                    1 => Some(self.lifted()?),
                    f => return Err(Error::Corrupt(format!("bad lifted flag {f}"))),
                };
                self.nodes[slot] = AnnNode::Leaf(AnnCell {
                    cell,
                    near,
                    far,
                    lifted,
                });
                Ok(())
            }
            tag => Err(Error::Corrupt(format!("unknown node tag {tag}"))),
        }
    }

    fn lifted(&mut self) -> Result<LiftedStructure> {
        let sites = self.s.ids(self.n)?;
        let points = (0..sites.len())
            .map(|_| self.s.point(self.dim))
            .collect::<Result<Vec<_>>>()?;
        let center = self.s.point(self.dim)?;
        let [scale, half_x, z_bottom, z_top, resolution] = [
            self.s.f64()?,
            self.s.f64()?,
            self.s.f64()?,
            self.s.f64()?,
            self.s.f64()?,
        ];
        let tree = read_tree(&mut self.s.0)?;
        if tree.dim() != self.dim + 1 {
            return Err(Error::Corrupt("lifted tree has the wrong dimension".into()));
        }
        Ok(LiftedStructure {
            sites,
            points,
            center,
            scale,
            half_x,
            z_bottom,
            z_top,
            resolution,
            tree,
        })
    }
}
