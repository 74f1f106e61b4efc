//! Dense-tableau phase-1 simplex with Bland's rule.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Finds `x >= 0` with `rows[r] · x >= 0` for every row and `Σ x = 1`.
///
/// Returns `Ok(None)` when no such point exists. The pivot order is fixed,
/// so identical input gives identical output.
pub fn find_feasible_point<T: Scalar>(rows: &[Vec<T>], vars: usize, max_pivots: usize) -> Result<Option<Vec<T>>> {
    let r = rows.len();
    let cols = vars + r + 1;
    let artificial = vars + r;
    let tol = T::tolerance();
    let pivot_tol = T::pivot_tolerance();

    // Rows 0..r: -row·x + s_r = 0. Row r: Σ x + t = 1.
    let mut tableau: Vec<Vec<T>> = Vec::with_capacity(r + 1);
    let mut rhs: Vec<T> = Vec::with_capacity(r + 1);
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(row.len(), vars, "constraint row has wrong width");
        let mut line = vec![T::zero(); cols];
        for (j, c) in row.iter().enumerate() {
            line[j] = -c.clone();
        }
        line[vars + k] = T::one();
        tableau.push(line);
        rhs.push(T::zero());
    }
    let mut line = vec![T::zero(); cols];
    for cell in line.iter_mut().take(vars) {
        *cell = T::one();
    }
    line[artificial] = T::one();
    tableau.push(line);
    rhs.push(T::one());
    let mut basis: Vec<usize> = (vars..vars + r).chain(std::iter::once(artificial)).collect();

    // Objective t = z + Σ d_j x_j over nonbasic columns.
    let mut d = vec![T::zero(); cols];
    for cell in d.iter_mut().take(vars) {
        *cell = -T::one();
    }
    let mut z = T::one();
    let neg_tol = -tol.clone();

    let mut pivots = 0;
    loop {
        let entering = (0..cols).find(|&j| d[j] < neg_tol);
        let Some(e) = entering else { break };

        let mut leave: Option<(usize, T)> = None;
        for (k, line) in tableau.iter().enumerate() {
            if line[e] > pivot_tol {
                let ratio = rhs[k].clone() / line[e].clone();
                leave = match leave {
                    None => Some((k, ratio)),
                    Some((best, best_ratio)) => {
                        if ratio < best_ratio || (ratio == best_ratio && basis[k] < basis[best]) {
                            Some((k, ratio))
                        } else {
                            Some((best, best_ratio))
                        }
                    }
                };
            }
        }
        // The objective is bounded below by zero, so a column with a negative
        // reduced cost always has a positive entry in some row.
        let Some((p, _)) = leave else { break };

        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::PivotLimit(max_pivots));
        }

        let pivot = tableau[p][e].clone();
        for cell in tableau[p].iter_mut() {
            *cell = cell.clone() / pivot.clone();
        }
        rhs[p] = rhs[p].clone() / pivot;
        let pivot_row = tableau[p].clone();
        let pivot_rhs = rhs[p].clone();
        for k in 0..tableau.len() {
            if k == p {
                continue;
            }
            let factor = tableau[k][e].clone();
            if factor.is_zero() {
                continue;
            }
            for (cell, pv) in tableau[k].iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *cell = cell.clone() - factor.clone() * pv.clone();
                }
            }
            rhs[k] = rhs[k].clone() - factor * pivot_rhs.clone();
        }
        let factor = d[e].clone();
        for (cell, pv) in d.iter_mut().zip(&pivot_row) {
            if !pv.is_zero() {
                *cell = cell.clone() - factor.clone() * pv.clone();
            }
        }
        z = z + factor * pivot_rhs;
        basis[p] = e;
    }

    if z > tol {
        return Ok(None);
    }
    let mut x = vec![T::zero(); vars];
    for (k, &b) in basis.iter().enumerate() {
        if b < vars {
            x[b] = rhs[k].clone();
        }
    }
    Ok(Some(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio, Rational};

    #[test]
    fn no_rows_gives_vertex() {
        let x = find_feasible_point::<f64>(&[], 3, 100).unwrap().unwrap();
        assert_eq!(x, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn row_forces_second_variable() {
        // x1 >= 2 x0
        let rows = vec![vec![int(-2), int(1)]];
        let x = find_feasible_point::<Rational>(&rows, 2, 100).unwrap().unwrap();
        assert!(&x[1] - int(2) * &x[0] >= int(0));
        assert_eq!(&x[0] + &x[1], int(1));
    }

    #[test]
    fn mixed_solution_exact() {
        // x0 >= x1 and x1 >= x0 with a third variable forbidden by x2 <= 0.
        let rows = vec![
            vec![int(1), int(-1), int(0)],
            vec![int(-1), int(1), int(0)],
            vec![int(0), int(0), int(-1)],
        ];
        let x = find_feasible_point::<Rational>(&rows, 3, 100).unwrap().unwrap();
        assert_eq!(x, vec![ratio(1, 2), ratio(1, 2), int(0)]);
    }

    #[test]
    fn infeasible_detected() {
        // -x0 - x1 >= 0 with Σ x = 1 is impossible.
        let rows = vec![vec![-1.0, -1.0]];
        assert_eq!(find_feasible_point::<f64>(&rows, 2, 100).unwrap(), None);
    }

    #[test]
    fn pivot_limit_reported() {
        let rows = vec![vec![int(-2), int(1)]];
        assert!(matches!(
            find_feasible_point::<Rational>(&rows, 2, 0),
            Err(Error::PivotLimit(0))
        ));
    }
}
