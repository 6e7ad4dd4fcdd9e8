//! Plain-text formats: polytopes as `d n` followed by `n` rows of `normal… offset`,
//! point sets as `d m` followed by `m` rows of coordinates.

use super::{Halfspace, Point, Polytope};
use crate::{Error, Result};
use std::fmt::Write as _;

fn header(lines: &mut dyn Iterator<Item = (usize, &str)>) -> Result<(usize, usize)> {
    let (no, line) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "missing header".into(),
    })?;
    let v: Vec<&str> = line.split_whitespace().collect();
    let parse = |s: &str| {
        s.parse::<usize>().map_err(|e| Error::Parse {
            line: no + 1,
            msg: e.to_string(),
        })
    };
    match v.as_slice() {
        [a, b] => Ok((parse(a)?, parse(b)?)),
        _ => Err(Error::Parse {
            line: no + 1,
            msg: "expected two integers".into(),
        }),
    }
}

fn rows(text: &str, width_of: impl Fn(usize) -> usize) -> Result<(usize, Vec<Vec<f64>>)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (d, n) = header(&mut lines)?;
    let width = width_of(d);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let (no, line) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "too few rows".into(),
        })?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|s| {
                s.parse::<f64>().map_err(|e| Error::Parse {
                    line: no + 1,
                    msg: e.to_string(),
                })
            })
            .collect::<Result<_>>()?;
        if vals.len() != width || vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse {
                line: no + 1,
                msg: format!("expected {width} finite reals"),
            });
        }
        out.push(vals);
    }
    Ok((d, out))
}

pub fn parse_polytope(text: &str) -> Result<Polytope> {
    let (d, rows) = rows(text, |d| d + 1)?;
    let hs = rows
        .into_iter()
        .map(|r| Halfspace::from_slice(&r[..d], r[d]))
        .collect::<Result<Vec<_>>>()?;
    Polytope::new(d, hs)
}

pub fn format_polytope(k: &Polytope) -> String {
    let mut s = format!("{} {}\n", k.dim, k.halfspaces.len());
    for h in &k.halfspaces {
        for x in h.normal.iter() {
            let _ = write!(s, "{x:e} ");
        }
        let _ = writeln!(s, "{:e}", h.offset);
    }
    s
}

pub fn parse_points(text: &str) -> Result<Vec<Point>> {
    let (_, rows) = rows(text, |d| d)?;
    Ok(rows.into_iter().map(Point::from_vec).collect())
}

pub fn format_points(pts: &[Point]) -> String {
    let d = pts.first().map_or(0, |p| p.len());
    let mut s = format!("{} {}\n", d, pts.len());
    for p in pts {
        let row: Vec<String> = p.iter().map(|x| format!("{x:e}")).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_short_rows() {
        assert!(parse_polytope("2 1\n1 0\n").is_err());
        assert!(parse_polytope("2 2\n1 0 1\n").is_err());
        assert!(parse_points("x\n").is_err());
    }

    proptest! {
        #[test]
        fn polytope_roundtrip(raw in proptest::collection::vec((0.1f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 1..20)) {
            let hs: Vec<Halfspace> = raw.iter().map(|&(a, b, c)| Halfspace::from_slice(&[a, b], c).unwrap()).collect();
            let k = Polytope::new(2, hs).unwrap();
            let back = parse_polytope(&format_polytope(&k)).unwrap();
            prop_assert_eq!(back.dim, 2);
            for (x, y) in k.halfspaces.iter().zip(&back.halfspaces) {
                prop_assert!((&x.normal - &y.normal).norm() < 1e-14);
                prop_assert!((x.offset - y.offset).abs() < 1e-14);
            }
        }

        #[test]
        fn points_roundtrip(raw in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 3), 1..20)) {
            let pts: Vec<Point> = raw.into_iter().map(Point::from_vec).collect();
            prop_assert_eq!(parse_points(&format_points(&pts)).unwrap(), pts);
        }
    }
}
