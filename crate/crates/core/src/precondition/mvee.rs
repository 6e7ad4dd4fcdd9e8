//! Minimum-volume enclosing ellipsoid by barycentric coordinate ascent
//! (Khachiyan's iteration with Todd–Yıldırım away steps).

use crate::geometry::Point;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Returns `(c, A)` with `{x : (x−c)ᵀ A (x−c) ≤ 1}` approximately the minimum-volume
/// ellipsoid containing `pts`; `tol` bounds the relative excess `max M_j/(d+1) − 1`.
pub fn mvee(pts: &[Point], tol: f64, max_iter: usize) -> Result<(Point, DMatrix<f64>)> {
    let n = pts.len();
    let d = pts.first().ok_or(Error::EmptyInput)?.len();
    if n < d + 1 {
        return Err(Error::Degenerate);
    }
    let lifted: Vec<DVector<f64>> = pts
        .iter()
        .map(|p| DVector::from_iterator(d + 1, p.iter().copied().chain(std::iter::once(1.0))))
        .collect();
    let dd = (d + 1) as f64;
    let mut u = vec![1.0 / n as f64; n];
    let full = |u: &[f64]| -> Result<(DMatrix<f64>, Vec<f64>)> {
        let mut x = DMatrix::zeros(d + 1, d + 1);
        for (q, &w) in lifted.iter().zip(u) {
            if w > 0.0 {
                x.ger(w, q, q, 1.0);
            }
        }
        let xinv = x.try_inverse().ok_or(Error::Degenerate)?;
        let m = lifted.iter().map(|q| q.dot(&(&xinv * q))).collect();
        Ok((xinv, m))
    };
    let (mut xinv, mut m) = full(&u)?;
    let mut converged = false;
    for iter in 0..max_iter {
        // Rank-one updates drift; refresh now and then.
        if iter % 512 == 511 {
            (xinv, m) = full(&u)?;
        }
        let (jp, mp) = m
            .iter()
            .copied()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let (jm, mm) = m
            .iter()
            .copied()
            .enumerate()
            .filter(|&(j, _)| u[j] > 0.0)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let up = mp / dd - 1.0;
        let down = 1.0 - mm / dd;
        if up.max(down) <= tol {
            (xinv, m) = full(&u)?;
            let mp = m.iter().copied().fold(0.0, f64::max);
            if mp / dd - 1.0 <= tol {
                converged = true;
                break;
            }
            continue;
        }
        // X ← a·X + b·q qᵀ, applied to the inverse and to every m_j = q_jᵀ X⁻¹ q_j.
        let (j, a, b) = if up >= down {
            let step = (mp - dd) / (dd * (mp - 1.0));
            u.iter_mut().for_each(|w| *w *= 1.0 - step);
            u[jp] += step;
            (jp, 1.0 - step, step)
        } else {
            let step = ((dd - mm) / (dd * (mm - 1.0))).min(u[jm] / (1.0 - u[jm]));
            u.iter_mut().for_each(|w| *w *= 1.0 + step);
            u[jm] -= step;
            if u[jm] < 1e-300 {
                u[jm] = 0.0;
            }
            (jm, 1.0 + step, -step)
        };
        let w = &xinv * &lifted[j];
        let r = b / a;
        let denom = 1.0 + r * m[j];
        if denom.abs() < 1e-12 {
            (xinv, m) = full(&u)?;
            continue;
        }
        xinv.ger(-r / denom, &w, &w, 1.0);
        xinv /= a;
        for (mj, q) in m.iter_mut().zip(&lifted) {
            let g = q.dot(&w);
            *mj = (*mj - r * g * g / denom) / a;
        }
    }
    if !converged {
        return Err(Error::MveeNonConvergence(max_iter));
    }
    let mut c = Point::zeros(d);
    for (p, &w) in pts.iter().zip(&u) {
        c += p * w;
    }
    let mut s = DMatrix::zeros(d, d);
    for (p, &w) in pts.iter().zip(&u) {
        let v = p - &c;
        s.ger(w, &v, &v, 1.0);
    }
    let a = s.try_inverse().ok_or(Error::Degenerate)? / d as f64;
    Ok((c, a))
}
