//! Null-space solver for population rate matrices: finds N with A N = 0
//! and Σ N = 1.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("steady-state system is singular or ill-conditioned (condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },
    #[error("steady-state residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },
    #[error("steady-state population {value:.3e} at index {index} below -{tolerance:.1e}")]
    NegativePopulation { index: usize, value: f64, tolerance: f64 },
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub populations: DVector<f64>,
    /// ‖A·N‖∞ of the returned solution.
    pub residual: f64,
    /// Rough condition estimate of the solved system.
    pub condition: f64,
}

fn validate(
    a: &DMatrix<f64>,
    p: &DVector<f64>,
    condition: f64,
    residual_tol: f64,
    negativity_tol: f64,
) -> Result<SteadyState, SolveError> {
    let mut p = p.clone();
    let sum: f64 = p.iter().sum();
    if !sum.is_finite() || sum.abs() < 1e-300 {
        return Err(SolveError::IllConditioned { condition });
    }
    p /= sum;
    for (index, &value) in p.iter().enumerate() {
        if value < -negativity_tol {
            return Err(SolveError::NegativePopulation { index, value, tolerance: negativity_tol });
        }
    }
    p.iter_mut().for_each(|v| *v = v.max(0.0));
    let sum: f64 = p.iter().sum();
    p /= sum;
    let residual = (a * &p).abs().max();
    if residual > residual_tol {
        return Err(SolveError::ResidualTooLarge { residual, tolerance: residual_tol });
    }
    Ok(SteadyState { populations: p, residual, condition })
}

/// Solves A N = 0, Σ N = 1 for a conservation matrix A (columns sum to zero).
///
/// Dense LU with one balance row replaced by the normalization row; rows with
/// the smallest diagonal are tried first. Falls back to an SVD least-squares
/// solve of the stacked system when the LU route fails (e.g. a null space of
/// dimension above one from decoupled sink states).
pub fn steady_state(a: &DMatrix<f64>, negativity_tol: f64) -> Result<SteadyState, SolveError> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let scale = a.abs().max().max(f64::MIN_POSITIVE);
    let residual_tol = 1e-8 * scale.max(1e-30);

    let mut rows: Vec<usize> = (0..n).collect();
    rows.sort_by(|&i, &j| a[(i, i)].abs().partial_cmp(&a[(j, j)].abs()).unwrap());

    let mut best_err = None;
    for &r in rows.iter().take(3) {
        let mut m = a.clone();
        for c in 0..n {
            m[(r, c)] = scale;
        }
        let mut rhs = DVector::zeros(n);
        rhs[r] = scale;
        let lu = m.clone().lu();
        if let Some(p) = lu.solve(&rhs) {
            // one-sided condition estimate from a single extra solve
            let cond = lu
                .solve(&DVector::from_element(n, 1.0))
                .map_or(f64::INFINITY, |x| x.abs().max() * m.abs().max() / scale.max(1e-300));
            match validate(a, &p, cond, residual_tol, negativity_tol) {
                Ok(s) => return Ok(s),
                Err(e) => best_err = Some(e),
            }
        }
    }

    // SVD least-squares on [A; 1...1] x = [0; 1]
    let mut stacked = DMatrix::zeros(n + 1, n);
    stacked.view_mut((0, 0), (n, n)).copy_from(a);
    for c in 0..n {
        stacked[(n, c)] = scale;
    }
    let mut rhs = DVector::zeros(n + 1);
    rhs[n] = scale;
    let svd = stacked.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd
        .singular_values
        .iter()
        .cloned()
        .filter(|s| *s > smax * 1e-14)
        .fold(smax, f64::min);
    let condition = smax / smin.max(1e-300);
    match svd.solve(&rhs, smax * 1e-14) {
        Ok(p) => validate(a, &p, condition, residual_tol, negativity_tol),
        Err(_) => Err(best_err.unwrap_or(SolveError::IllConditioned { condition })),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_state_balance() {
        // 0 <-> 1 with rates 2 (0->1) and 1 (1->0): N = (1/3, 2/3)
        let a = DMatrix::from_row_slice(2, 2, &[-2.0, 1.0, 2.0, -1.0]);
        let s = steady_state(&a, 1e-10).unwrap();
        assert_relative_eq!(s.populations[0], 1.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(s.populations[1], 2.0 / 3.0, max_relative = 1e-12);
        assert!(s.residual < 1e-8);
    }

    #[test]
    fn decoupled_sink_spreads_by_least_squares() {
        // states 1 and 2 are absorbing; state 0 drains into both equally
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[-2.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        );
        let s = steady_state(&a, 1e-10).unwrap();
        assert!(s.populations[0].abs() < 1e-12);
        assert_relative_eq!(s.populations[1] + s.populations[2], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn all_zero_matrix_is_degenerate_but_solvable() {
        let a = DMatrix::zeros(4, 4);
        let s = steady_state(&a, 1e-10).unwrap();
        assert_relative_eq!(s.populations.iter().sum::<f64>(), 1.0, max_relative = 1e-12);
    }
}
