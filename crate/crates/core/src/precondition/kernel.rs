//! Directional-width coresets from a direction net.

use super::direction_net;
use crate::geometry::{dot, Point};
use crate::{Error, Result};

/// A direction with the width of a point set along it.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtentSample {
    pub direction: Point,
    pub width: f64,
}

/// Width `max ⟨p − q, u⟩` of `pts` along unit `u`.
pub fn width(pts: &[Point], u: &[f64]) -> ExtentSample {
    let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let s = dot(p.as_slice(), u);
        (lo.min(s), hi.max(s))
    });
    ExtentSample {
        direction: Point::from_column_slice(u),
        width: (hi - lo).max(0.0),
    }
}

/// Indices (ascending) of the points extreme in either orientation of some direction
/// of a `√eps/4`-dense net.
pub fn epsilon_kernel(pts: &[Point], eps: f64) -> Result<Vec<usize>> {
    let d = pts.first().ok_or(Error::EmptyInput)?.len();
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "kernel eps must be positive, got {eps}"
        )));
    }
    let mut keep = vec![false; pts.len()];
    for u in direction_net(d, eps.sqrt() / 4.0) {
        let (mut imin, mut imax) = (0, 0);
        let (mut smin, mut smax) = (f64::INFINITY, f64::NEG_INFINITY);
        for (i, p) in pts.iter().enumerate() {
            let s = dot(p.as_slice(), u.as_slice());
            if s > smax {
                smax = s;
                imax = i;
            }
            if s < smin {
                smin = s;
                imin = i;
            }
        }
        keep[imax] = true;
        keep[imin] = true;
    }
    Ok(keep.iter().enumerate().filter_map(|(i, &k)| k.then_some(i)).collect())
}
