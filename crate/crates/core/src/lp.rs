//! Dense two-phase simplex for `min cᵀx  s.t.  Ax = b, x ≥ 0` with few rows
//! and many columns (the moment problems solved by [`crate::entropy`]).
//!
//! Pivoting follows Bland's rule, so the method terminates on degenerate
//! problems. The final basic solution is re-solved directly from the basis
//! columns to remove accumulated pivoting error.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-12;
const COST_EPS: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    /// Basic variables as `(column, value)`, sorted by column.
    pub basis: Vec<(usize, f64)>,
    pub objective: f64,
    pub pivots: usize,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.width]
    }

    /// Run simplex iterations for `cost` restricted to columns `< allowed`.
    fn optimise(&mut self, cost: &[f64], allowed: usize, pivots: &mut usize) -> Result<()> {
        let m = self.rows.len();
        loop {
            // reduced costs: c_j − c_Bᵀ B⁻¹ A_j
            let cb: Vec<f64> = self.basis.iter().map(|&j| cost[j]).collect();
            let entering = (0..allowed).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let z: f64 = (0..m).map(|i| cb[i] * self.rows[i][j]).sum();
                cost[j] - z < -COST_EPS
            });
            let Some(c) = entering else { return Ok(()) };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..m {
                let a = self.rows[r][c];
                if a > PIVOT_EPS {
                    let ratio = self.rhs(r) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-15 || (ratio <= lratio + 1e-15 && self.basis[r] < self.basis[lr]) {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::Infeasible("objective unbounded below".into()));
            };
            self.pivot(r, c);
            *pivots += 1;
        }
    }
}

/// Solve `A x = b` for a square system by Gaussian elimination with partial pivoting.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Minimize `cost · x` subject to `rows · x = rhs`, `x ≥ 0`.
///
/// `rows` is `m × N`; every row must have length `cost.len()`.
pub fn solve(cost: &[f64], rows: &[Vec<f64>], rhs: &[f64]) -> Result<LpSolution> {
    let n = cost.len();
    let m = rows.len();
    if rhs.len() != m || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidInput("constraint matrix shape mismatch".into()));
    }
    // columns: n structural, m artificial, then the right-hand side
    let width = n + m;
    let mut table = Tableau {
        rows: Vec::with_capacity(m),
        basis: (n..n + m).collect(),
        width,
    };
    for (i, (row, &b)) in rows.iter().zip(rhs).enumerate() {
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        let mut t: Vec<f64> = row.iter().map(|v| sign * v).collect();
        t.extend((0..m).map(|k| if k == i { 1.0 } else { 0.0 }));
        t.push(sign * b);
        table.rows.push(t);
    }

    let mut pivots = 0;
    let mut phase1 = vec![0.0; width];
    phase1[n..].iter_mut().for_each(|c| *c = 1.0);
    table.optimise(&phase1, width, &mut pivots)?;
    let infeasibility: f64 = (0..m).filter(|&r| table.basis[r] >= n).map(|r| table.rhs(r)).sum();
    let scale = rhs.iter().fold(1.0f64, |acc, b| acc.max(b.abs()));
    if infeasibility > 1e-10 * scale {
        return Err(Error::Infeasible(format!("phase one residual {infeasibility:e}")));
    }
    // drive zero-level artificials out of the basis where possible
    for r in 0..m {
        if table.basis[r] >= n {
            if let Some(c) = (0..n).find(|&c| !table.basis.contains(&c) && table.rows[r][c].abs() > 1e-9) {
                table.pivot(r, c);
                pivots += 1;
            }
        }
    }

    let mut phase2 = cost.to_vec();
    phase2.extend(std::iter::repeat(0.0).take(m));
    table.optimise(&phase2, n, &mut pivots)?;

    let structural: Vec<usize> = table.basis.iter().copied().filter(|&j| j < n).collect();
    let mut values: Vec<f64> = (0..m)
        .filter(|&r| table.basis[r] < n)
        .map(|r| table.rhs(r).max(0.0))
        .collect();
    if structural.len() == m {
        let a: Vec<Vec<f64>> = rows.iter().map(|row| structural.iter().map(|&j| row[j]).collect()).collect();
        if let Some(x) = solve_square(a, rhs.to_vec()) {
            if x.iter().all(|v| *v >= -1e-12) {
                values = x.into_iter().map(|v| v.max(0.0)).collect();
            }
        }
    }
    let mut basis: Vec<(usize, f64)> = structural.into_iter().zip(values).collect();
    basis.sort_by_key(|(j, _)| *j);
    let objective = basis.iter().map(|(j, v)| cost[*j] * v).sum();
    Ok(LpSolution {
        basis,
        objective,
        pivots,
    })
}
