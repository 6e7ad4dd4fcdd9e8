use super::{LocalApprox, Method};
use crate::geometry::{lp, Polytope, QuadtreeCell, TOL};
use crate::precondition::CanonicalForm;

/// Grids with more points than this are not materialized.
pub const GRID_CAP: usize = 1 << 18;

/// Result of [`set_cover_local`].
#[derive(Clone, Debug, PartialEq)]
pub enum CoverOutcome {
    Cover(LocalApprox),
    /// The greedy cover needed more than the budget.
    TooLarge,
    /// The sampling grid would exceed [`GRID_CAP`] points.
    GridCap,
}

/// Greedy set cover of `0..universe`; ties go to the lowest set index.
/// Returns `None` as soon as more than `budget` sets would be needed, or if some
/// element is in no set.
pub fn greedy_cover(sets: &[Vec<u32>], universe: usize, budget: usize) -> Option<Vec<usize>> {
    let mut covered = vec![false; universe];
    let mut left = universe;
    let mut chosen = Vec::new();
    while left > 0 {
        if chosen.len() == budget {
            return None;
        }
        let mut best = (0usize, 0usize);
        for (i, s) in sets.iter().enumerate() {
            let gain = s.iter().filter(|&&e| !covered[e as usize]).count();
            if gain > best.1 {
                best = (i, gain);
            }
        }
        if best.1 == 0 {
            return None;
        }
        for &e in &sets[best.0] {
            if !covered[e as usize] {
                covered[e as usize] = true;
                left -= 1;
            }
        }
        chosen.push(best.0);
    }
    Some(chosen)
}

/// Picks input halfspaces approximating the body within `cell` to absolute error
/// `eps`, by covering the grid points of the cell that lie outside the doubly
/// scaled body.
pub fn set_cover_local(cf: &CanonicalForm, cell: &QuadtreeCell, eps: f64, budget: usize) -> CoverOutcome {
    let k = &cf.body;
    let d = k.dim;
    let r_out = cf.outer_radius;
    let eps = eps.min(4.0 * r_out);
    let beta = eps / (4.0 * r_out);
    let delta = cf.inner_radius() * beta;
    let g1 = 1.0 + beta;
    let g2 = g1 * g1;
    let (lo, hi) = cell.bounds(d);

    // Halfspaces whose grown copy can exclude part of the cell.
    let active: Vec<usize> = (0..k.len())
        .filter(|&i| k.halfspaces[i].box_max(&lo, &hi) > g1 * k.halfspaces[i].offset)
        .collect();
    let outer: Vec<usize> = active
        .iter()
        .copied()
        .filter(|&i| k.halfspaces[i].box_max(&lo, &hi) > g2 * k.halfspaces[i].offset)
        .collect();
    if outer.is_empty() {
        return CoverOutcome::Cover(cover_approx(cell, k, vec![]));
    }

    let side = cell.side();
    let steps = ((side * (d as f64).sqrt() / delta).ceil() as usize).max(1);
    let total = (steps as u128 + 1).checked_pow(d as u32).unwrap_or(u128::MAX);
    if total > GRID_CAP as u128 {
        return CoverOutcome::GridCap;
    }
    let pitch = side / steps as f64;

    let mut sets: Vec<Vec<u32>> = vec![Vec::new(); active.len()];
    let mut universe = 0u32;
    let mut idx = vec![0usize; d];
    let mut p = vec![0.0; d];
    'grid: loop {
        for i in 0..d {
            p[i] = lo[i] + idx[i] as f64 * pitch;
        }
        let outside_pp = outer
            .iter()
            .any(|&i| k.halfspaces[i].excess(&p) > (g2 - 1.0) * k.halfspaces[i].offset);
        if outside_pp {
            for (slot, &i) in active.iter().enumerate() {
                let h = &k.halfspaces[i];
                if crate::geometry::dot(h.normal.as_slice(), &p) > g1 * h.offset {
                    sets[slot].push(universe);
                }
            }
            universe += 1;
        }
        let mut j = 0;
        loop {
            if j == d {
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
    match greedy_cover(&sets, universe as usize, budget) {
        None => CoverOutcome::TooLarge,
        Some(chosen) => {
            let mut ids: Vec<usize> = chosen.into_iter().map(|s| active[s]).collect();
            ids.sort_unstable();
            CoverOutcome::Cover(cover_approx(cell, k, ids))
        }
    }
}

fn cover_approx(cell: &QuadtreeCell, k: &Polytope, ids: Vec<usize>) -> LocalApprox {
    LocalApprox {
        cell: cell.clone(),
        halfspaces: ids.iter().map(|&i| k.halfspaces[i].clone()).collect(),
        indices: Some(ids),
        method: Method::SetCover,
    }
}

/// The input halfspaces that bound `k ∩ cell`, after dropping those made redundant
/// inside the cell by the others. Exact: accepts precisely `k ∩ cell`.
pub fn restriction_local(k: &Polytope, cell: &QuadtreeCell) -> LocalApprox {
    let (lo, hi) = cell.bounds(k.dim);
    let mut keep: Vec<usize> = (0..k.len())
        .filter(|&i| k.halfspaces[i].box_max(&lo, &hi) > k.halfspaces[i].offset)
        .collect();
    let mut i = 0;
    while i < keep.len() {
        let h = &k.halfspaces[keep[i]];
        let others: Vec<_> = keep
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &s)| k.halfspaces[s].clone())
            .collect();
        let neg: Vec<f64> = h.normal.iter().map(|x| -x).collect();
        let redundant = match lp::box_lp(&others, &lo, &hi, Some(&neg), TOL.lp) {
            lp::LpResult::Infeasible => true,
            lp::LpResult::Optimal { value, .. } => -value <= h.offset + 1e-12,
        };
        if redundant {
            keep.remove(i);
        } else {
            i += 1;
        }
    }
    LocalApprox {
        cell: cell.clone(),
        halfspaces: keep.iter().map(|&i| k.halfspaces[i].clone()).collect(),
        indices: Some(keep),
        method: Method::Restriction,
    }
}
