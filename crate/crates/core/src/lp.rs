//! Dense tableau simplex for small problems `max c.x  s.t.  A x <= b, x >= 0`
//! with `b >= 0`, so the slack basis is feasible from the start.
//!
//! Bland's rule is used for both the entering and leaving variable, which
//! rules out cycling on the degenerate vertices that cutting-plane envelopes
//! produce constantly (many cuts through the same point).

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row duals; nonnegative, and `sum_i y_i A_ij >= c_j`.
    pub duals: Vec<f64>,
    pub pivots: usize,
}

const TOL: f64 = 1e-11;

pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpSolution> {
    let n = c.len();
    let m = a.len();
    if b.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(Error::domain("LP dimensions disagree"));
    }
    if b.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::domain("LP right-hand side must be finite and nonnegative"));
    }
    let width = n + m + 1;
    let rhs = n + m;
    let mut tab = vec![0.0; (m + 1) * width];
    for (i, row) in a.iter().enumerate() {
        let r = &mut tab[i * width..(i + 1) * width];
        r[..n].copy_from_slice(row);
        r[n + i] = 1.0;
        r[rhs] = b[i];
    }
    {
        let obj = &mut tab[m * width..];
        for j in 0..n {
            obj[j] = -c[j];
        }
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let scale = c.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));

    let max_pivots = 50 * (n + m + 10);
    let mut pivots = 0;
    loop {
        let obj = &tab[m * width..];
        let entering = (0..n + m).find(|&j| obj[j] < -TOL * scale);
        let Some(col) = entering else { break };

        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let aij = tab[i * width + col];
            if aij > TOL {
                let ratio = tab[i * width + rhs] / aij;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - TOL * lr.abs().max(1.0)
                            || (ratio <= lr + TOL * lr.abs().max(1.0) && basis[i] < basis[li])
                        {
                            Some((i, ratio))
                        } else {
                            Some((li, lr))
                        }
                    }
                };
            }
        }
        let Some((row, _)) = leave else {
            return Err(Error::solver("LP is unbounded", None));
        };
        pivot(&mut tab, width, m, row, col);
        basis[row] = col;
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::solver("LP simplex exceeded its pivot cap", None));
        }
    }

    let mut x = vec![0.0; n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = tab[i * width + rhs].max(0.0);
        }
    }
    let obj = &tab[m * width..];
    let duals = (0..m).map(|i| obj[n + i].max(0.0)).collect();
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpSolution {
        x,
        objective,
        duals,
        pivots,
    })
}

fn pivot(tab: &mut [f64], width: usize, m: usize, row: usize, col: usize) {
    let p = tab[row * width + col];
    for v in &mut tab[row * width..(row + 1) * width] {
        *v /= p;
    }
    let pivot_row: Vec<f64> = tab[row * width..(row + 1) * width].to_vec();
    for i in 0..=m {
        if i == row {
            continue;
        }
        let f = tab[i * width + col];
        if f != 0.0 {
            let r = &mut tab[i * width..(i + 1) * width];
            for (v, pv) in r.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            r[col] = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y  s.t. x <= 4, 2y <= 12, 3x + 2y <= 18
        let sol = maximize(
            &[3.0, 5.0],
            &[vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]],
            &[4.0, 12.0, 18.0],
        )
        .unwrap();
        assert!((sol.objective - 36.0).abs() < 1e-12);
        assert!((sol.x[0] - 2.0).abs() < 1e-12);
        assert!((sol.x[1] - 6.0).abs() < 1e-12);
        // duals (0, 3/2, 1) reproduce the objective
        let dual_obj: f64 = sol.duals.iter().zip([4.0, 12.0, 18.0]).map(|(y, b)| y * b).sum();
        assert!((dual_obj - 36.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_rows_terminate() {
        let rows = vec![vec![1.0, 1.0]; 6];
        let sol = maximize(&[1.0, 1.0], &rows, &[0.0; 6]).unwrap();
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn unbounded_is_reported() {
        assert!(maximize(&[1.0], &[vec![-1.0]], &[1.0]).is_err());
    }
}
