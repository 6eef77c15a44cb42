//! Phase-I simplex for `A x = b, x >= 0` where `A` is a 0/1 matrix given
//! column by column as lists of row indices.
//!
//! One artificial variable per row starts in the basis and the sum of
//! artificials is minimized. Pivoting follows Bland's rule, so the method
//! terminates on degenerate problems. The basis inverse is kept dense and
//! updated in product form, with periodic reinversion from scratch.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

const RATIO_TIE: f64 = 1e-12;

/// Columns of a 0/1 constraint matrix.
pub trait UnitColumns {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// Rows holding a 1 in column `j`.
    fn column(&self, j: usize) -> &[u32];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Reduced costs and pivot elements smaller than this count as zero.
    pub pivot_tol: f64,
    /// Iteration cap; `None` scales with the problem size.
    pub max_iterations: Option<usize>,
    /// Rebuild the basis inverse after this many pivots.
    pub refactor_every: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            pivot_tol: 1e-10,
            max_iterations: None,
            refactor_every: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseOne {
    /// Sum of artificial variables at the optimum.
    pub objective: f64,
    /// Values of the structural variables.
    pub x: Vec<f64>,
    pub iterations: usize,
}

/// Minimizes the total infeasibility of `A x = b` over `x >= 0`.
///
/// `b` must be nonnegative. A zero objective means the system is feasible
/// and `x` solves it.
pub fn phase_one<A: UnitColumns + ?Sized>(a: &A, b: &[f64], opts: &SimplexOptions) -> Result<PhaseOne> {
    let m = a.rows();
    let n = a.cols();
    assert_eq!(b.len(), m, "right-hand side length must equal the row count");
    debug_assert!(b.iter().all(|&v| v >= 0.0));
    let max_iter = opts.max_iterations.unwrap_or_else(|| 10_000 + 50 * (m + n));
    let tol = opts.pivot_tol;

    // Variable ids: structural 0..n, artificial n..n+m.
    let mut basis: Vec<usize> = (n..n + m).collect();
    let mut in_basis = vec![false; n];
    let mut binv = Dense::identity(m);
    let mut xb = b.to_vec();
    let mut y = vec![0.0; m];
    let mut w = vec![0.0; m];
    let mut iterations = 0;
    let mut since_refactor = 0;

    loop {
        // Simplex multipliers: artificials cost 1, structurals 0.
        y.iter_mut().for_each(|v| *v = 0.0);
        for (r, &var) in basis.iter().enumerate() {
            if var >= n {
                let row = binv.row(r);
                for (yi, &bi) in y.iter_mut().zip(row) {
                    *yi += bi;
                }
            }
        }

        // Bland: lowest-index column with negative reduced cost. Artificials
        // that have left the basis are never readmitted.
        let entering = (0..n).find(|&j| {
            !in_basis[j] && {
                let d: f64 = -a.column(j).iter().map(|&i| y[i as usize]).sum::<f64>();
                d < -tol
            }
        });
        let Some(q) = entering else {
            break;
        };

        if iterations >= max_iter {
            return Err(Error::Solver { iterations });
        }
        iterations += 1;

        // w = B^-1 A_q
        let col = a.column(q);
        for (r, wr) in w.iter_mut().enumerate() {
            let row = binv.row(r);
            *wr = col.iter().map(|&i| row[i as usize]).sum();
        }

        // Ratio test; ties go to the lowest variable id.
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for r in 0..m {
            if w[r] > tol {
                let ratio = xb[r].max(0.0) / w[r];
                let better = match leave {
                    None => true,
                    Some(l) => ratio < best - RATIO_TIE || (ratio <= best + RATIO_TIE && basis[r] < basis[l]),
                };
                if better {
                    best = ratio;
                    leave = Some(r);
                }
            }
        }
        let Some(r) = leave else {
            // Phase I is bounded below by zero, so this is numerical breakdown.
            return Err(Error::Numerical("unbounded ray in phase one".into()));
        };

        // Pivot.
        let pivot = w[r];
        binv.scale_row(r, 1.0 / pivot);
        xb[r] /= pivot;
        for s in 0..m {
            if s != r && w[s] != 0.0 {
                let f = w[s];
                binv.axpy_row(s, r, -f);
                xb[s] -= f * xb[r];
            }
        }
        let old = basis[r];
        if old < n {
            in_basis[old] = false;
        }
        basis[r] = q;
        in_basis[q] = true;

        since_refactor += 1;
        if since_refactor >= opts.refactor_every {
            refactor(a, &basis, b, &mut binv, &mut xb)?;
            since_refactor = 0;
        }
    }

    if since_refactor > 0 {
        refactor(a, &basis, b, &mut binv, &mut xb)?;
    }
    let mut x = vec![0.0; n];
    let mut objective = 0.0;
    for (r, &var) in basis.iter().enumerate() {
        if var < n {
            x[var] = xb[r];
        } else {
            objective += xb[r];
        }
    }
    Ok(PhaseOne {
        objective,
        x,
        iterations,
    })
}

/// Recomputes `B^-1` and `x_B = B^-1 b` from the basis columns by
/// Gauss-Jordan elimination with partial pivoting.
fn refactor<A: UnitColumns + ?Sized>(
    a: &A,
    basis: &[usize],
    b: &[f64],
    binv: &mut Dense,
    xb: &mut [f64],
) -> Result<()> {
    let m = basis.len();
    let n = a.cols();
    let mut bmat = Dense::zeros(m);
    for (c, &var) in basis.iter().enumerate() {
        if var < n {
            for &i in a.column(var) {
                bmat.data[i as usize * m + c] = 1.0;
            }
        } else {
            bmat.data[(var - n) * m + c] = 1.0;
        }
    }
    let mut inv = Dense::identity(m);
    for c in 0..m {
        let p = (c..m)
            .max_by(|&i, &j| libm::fabs(bmat.at(i, c)).total_cmp(&libm::fabs(bmat.at(j, c))))
            .expect("nonempty range");
        if libm::fabs(bmat.at(p, c)) < 1e-12 {
            return Err(Error::Numerical("singular basis during reinversion".into()));
        }
        bmat.swap_rows(p, c);
        inv.swap_rows(p, c);
        let d = 1.0 / bmat.at(c, c);
        bmat.scale_row(c, d);
        inv.scale_row(c, d);
        for r in 0..m {
            let f = bmat.at(r, c);
            if r != c && f != 0.0 {
                bmat.axpy_row(r, c, -f);
                inv.axpy_row(r, c, -f);
            }
        }
    }
    for (r, x) in xb.iter_mut().enumerate() {
        *x = inv.row(r).iter().zip(b).map(|(u, v)| u * v).sum();
    }
    *binv = inv;
    Ok(())
}

#[derive(Debug, Clone)]
struct Dense {
    m: usize,
    data: Vec<f64>,
}

impl Dense {
    fn zeros(m: usize) -> Self {
        Dense {
            m,
            data: vec![0.0; m * m],
        }
    }

    fn identity(m: usize) -> Self {
        let mut d = Dense::zeros(m);
        for i in 0..m {
            d.data[i * m + i] = 1.0;
        }
        d
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.m + c]
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.m..(r + 1) * self.m]
    }

    fn scale_row(&mut self, r: usize, f: f64) {
        for v in &mut self.data[r * self.m..(r + 1) * self.m] {
            *v *= f;
        }
    }

    /// row[dst] += f * row[src]
    fn axpy_row(&mut self, dst: usize, src: usize, f: f64) {
        let m = self.m;
        let (d, s) = if dst < src {
            let (lo, hi) = self.data.split_at_mut(src * m);
            (&mut lo[dst * m..(dst + 1) * m], &hi[..m])
        } else {
            let (lo, hi) = self.data.split_at_mut(dst * m);
            (&mut hi[..m], &lo[src * m..(src + 1) * m])
        };
        for (x, &y) in d.iter_mut().zip(s) {
            *x += f * y;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.m {
                self.data.swap(a * self.m + c, b * self.m + c);
            }
        }
    }
}
