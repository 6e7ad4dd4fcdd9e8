//! Dense two-phase simplex for `min c·x` over `{x ∈ [lo, hi] : ⟨n_i, x⟩ ≤ b_i}`.
//!
//! Variables are shifted to `y = x − lo ≥ 0`, upper bounds become explicit rows,
//! phase one uses a single artificial column, and Bland's rule prevents cycling.

use super::Halfspace;

const PIVOT_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum LpResult {
    Infeasible,
    Optimal { x: Vec<f64>, value: f64 },
}

/// Whether the box meets the intersection of `halfspaces`.
pub fn box_feasible(halfspaces: &[Halfspace], lo: &[f64], hi: &[f64], tol: f64) -> bool {
    !matches!(box_lp(halfspaces, lo, hi, None, tol), LpResult::Infeasible)
}

/// Minimizes `objective · x` (or just finds a feasible point when `objective` is `None`).
pub fn box_lp(halfspaces: &[Halfspace], lo: &[f64], hi: &[f64], objective: Option<&[f64]>, tol: f64) -> LpResult {
    let d = lo.len();
    // Rows that can bind inside the box; a row excluding the whole box settles the question.
    let mut rows: Vec<(&[f64], f64)> = Vec::new();
    for h in halfspaces {
        if h.box_min(lo, hi) - h.offset > tol {
            return LpResult::Infeasible;
        }
        if h.box_max(lo, hi) > h.offset {
            let shift: f64 = h.normal.iter().zip(lo).map(|(n, l)| n * l).sum();
            rows.push((h.normal.as_slice(), h.offset - shift));
        }
    }
    let mut t = Tableau::new(d, &rows, lo, hi);
    if !t.phase_one(tol) {
        return LpResult::Infeasible;
    }
    match objective {
        None => {
            let x = t.solution(lo);
            LpResult::Optimal { x, value: 0.0 }
        }
        Some(c) => {
            t.phase_two(c);
            let x = t.solution(lo);
            let value = c.iter().zip(&x).map(|(a, b)| a * b).sum();
            LpResult::Optimal { x, value }
        }
    }
}

struct Tableau {
    d: usize,
    m: usize,
    cols: usize,
    /// Row-major `m × (cols + 1)`; the last entry of each row is the right-hand side.
    a: Vec<f64>,
    basis: Vec<usize>,
    artificial: usize,
    banned: Vec<bool>,
}

impl Tableau {
    fn new(d: usize, rows: &[(&[f64], f64)], lo: &[f64], hi: &[f64]) -> Self {
        let m = rows.len() + d;
        let cols = d + m + 1;
        let width = cols + 1;
        let mut a = vec![0.0; m * width];
        for (i, (n, r)) in rows.iter().enumerate() {
            a[i * width..i * width + d].copy_from_slice(n);
            a[i * width + cols] = *r;
        }
        for j in 0..d {
            let i = rows.len() + j;
            a[i * width + j] = 1.0;
            a[i * width + cols] = hi[j] - lo[j];
        }
        for i in 0..m {
            a[i * width + d + i] = 1.0;
            a[i * width + cols - 1] = -1.0;
        }
        let basis = (0..m).map(|i| d + i).collect();
        Self {
            d,
            m,
            cols,
            a,
            basis,
            artificial: cols - 1,
            banned: vec![false; cols],
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * (self.cols + 1) + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.cols + 1;
        let p = self.a[r * w + c];
        for j in 0..w {
            self.a[r * w + j] /= p;
        }
        let (before, rest) = self.a.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_mut(w).chain(after.chunks_mut(w)) {
            let f = row[c];
            if f != 0.0 {
                for j in 0..w {
                    row[j] -= f * prow[j];
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Runs Bland's rule on cost vector `cost` (indexed by column); returns false on unboundedness.
    fn optimize(&mut self, cost: &[f64]) -> bool {
        let cap = 50 * (self.m + self.cols) + 1000;
        for _ in 0..cap {
            // Reduced costs, entering column by smallest index.
            let mut enter = None;
            for j in 0..self.cols {
                if self.banned[j] || self.basis.contains(&j) {
                    continue;
                }
                let mut rc = cost[j];
                for i in 0..self.m {
                    let cb = cost[self.basis[i]];
                    if cb != 0.0 {
                        rc -= cb * self.at(i, j);
                    }
                }
                if rc < -1e-11 {
                    enter = Some(j);
                    break;
                }
            }
            let Some(c) = enter else { return true };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let aij = self.at(i, c);
                if aij > PIVOT_EPS {
                    let ratio = self.rhs(i) / aij;
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-14 || (ratio <= lr + 1e-14 && self.basis[i] < self.basis[li]) {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            match leave {
                None => return false,
                Some((r, _)) => self.pivot(r, c),
            }
        }
        true
    }

    fn phase_one(&mut self, tol: f64) -> bool {
        let worst = (0..self.m).min_by(|&i, &j| self.rhs(i).total_cmp(&self.rhs(j)));
        let Some(worst) = worst else { return true };
        if self.rhs(worst) >= 0.0 {
            self.banned[self.artificial] = true;
            return true;
        }
        self.pivot(worst, self.artificial);
        let mut cost = vec![0.0; self.cols];
        cost[self.artificial] = 1.0;
        self.optimize(&cost);
        let value = self
            .basis
            .iter()
            .position(|&b| b == self.artificial)
            .map_or(0.0, |r| self.rhs(r));
        if value > tol {
            return false;
        }
        if let Some(r) = self.basis.iter().position(|&b| b == self.artificial) {
            // Degenerate: drive the artificial out on any usable column.
            if let Some(c) = (0..self.cols - 1).find(|&j| !self.basis.contains(&j) && self.at(r, j).abs() > 1e-9) {
                self.pivot(r, c);
            }
        }
        self.banned[self.artificial] = true;
        true
    }

    fn phase_two(&mut self, c: &[f64]) {
        let mut cost = vec![0.0; self.cols];
        cost[..self.d].copy_from_slice(c);
        self.optimize(&cost);
    }

    fn solution(&self, lo: &[f64]) -> Vec<f64> {
        let mut x = lo.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.d {
                x[b] += self.rhs(i).max(0.0);
            }
        }
        x
    }
}
