use super::{Ball, Point};

/// Spacing-dense sample of the sphere `s`: a grid of pitch `spacing/√d` on each facet
/// of the circumscribing cube, projected centrally onto the sphere.
///
/// Points on shared cube edges are emitted once, by the facet of the lowest axis.
pub fn sphere_sample(s: &Ball, spacing: f64) -> Vec<Point> {
    let d = s.center.len();
    let mut out = Vec::new();
    for_each_sphere_sample(d, s.radius, spacing, |p| {
        out.push(Point::from_iterator(
            d,
            p.iter().zip(s.center.iter()).map(|(x, c)| x + c),
        ));
    });
    out
}

/// Streams the origin-centered sample of [`sphere_sample`] without allocating per point.
pub(crate) fn for_each_sphere_sample(d: usize, r: f64, spacing: f64, mut f: impl FnMut(&[f64])) {
    let pitch = spacing / (d as f64).sqrt();
    let steps = ((2.0 * r / pitch).ceil() as usize).max(1);
    let coord = |k: usize| -r + 2.0 * r * k as f64 / steps as f64;
    let mut idx = vec![0usize; d - 1];
    let mut p = vec![0.0; d];
    for axis in 0..d {
        for sign in [1.0, -1.0] {
            idx.iter_mut().for_each(|k| *k = 0);
            'grid: loop {
                let mut skip = false;
                let mut slot = 0;
                for (j, pj) in p.iter_mut().enumerate() {
                    if j == axis {
                        *pj = sign * r;
                    } else {
                        let k = idx[slot];
                        slot += 1;
                        if j < axis && (k == 0 || k == steps) {
                            skip = true;
                        }
                        *pj = coord(k);
                    }
                }
                if !skip {
                    let n = p.iter().map(|x| x * x).sum::<f64>().sqrt();
                    p.iter_mut().for_each(|x| *x *= r / n);
                    f(&p);
                }
                let mut j = 0;
                loop {
                    if j == d - 1 {
                        break 'grid;
                    }
                    idx[j] += 1;
                    if idx[j] <= steps {
                        break;
                    }
                    idx[j] = 0;
                    j += 1;
                }
            }
        }
    }
}
