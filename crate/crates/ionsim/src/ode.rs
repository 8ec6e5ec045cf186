//! Adaptive Dormand-Prince 5(4) integrator for the linear population
//! rate equations dN/dt = A N.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow (stiffness failure) at t = {time} s")]
    StepUnderflow { time: f64 },
    #[error("relative tolerance {0} outside (0, 1e-3]")]
    BadTolerance(f64),
    #[error("duration must be nonnegative, got {0}")]
    BadDuration(f64),
}

// Dormand-Prince RK5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// 5th order minus embedded 4th order weights.
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

/// Integrates y' = A y from 0 to `t_end` with per-step relative error
/// below `rel_tol`.
pub fn integrate_linear(
    a: &DMatrix<f64>,
    y0: DVector<f64>,
    t_end: f64,
    rel_tol: f64,
) -> Result<DVector<f64>, OdeError> {
    if !(rel_tol > 0.0 && rel_tol <= 1e-3) {
        return Err(OdeError::BadTolerance(rel_tol));
    }
    if !(t_end >= 0.0) {
        return Err(OdeError::BadDuration(t_end));
    }
    if t_end == 0.0 {
        return Ok(y0);
    }
    let abs_tol = 1e-12;
    let n = y0.len();
    let rate_scale = a.abs().max().max(f64::MIN_POSITIVE);
    let mut t = 0.0;
    let mut h = (0.1 / rate_scale).min(t_end);
    let h_min = t_end * 1e-14;
    let mut y = y0;
    let mut k: Vec<DVector<f64>> = vec![DVector::zeros(n); 7];
    k[0] = a * &y;
    loop {
        if t >= t_end {
            return Ok(y);
        }
        h = h.min(t_end - t);
        for s in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate().take(s) {
                let c = A[s - 1][j];
                if c != 0.0 {
                    ys.axpy(h * c, kj, 1.0);
                }
            }
            k[s] = a * &ys;
        }
        // k[6] is the derivative at the 5th-order solution (FSAL)
        let mut y_new = y.clone();
        for (j, kj) in k.iter().enumerate().take(6) {
            let c = A[5][j];
            if c != 0.0 {
                y_new.axpy(h * c, kj, 1.0);
            }
        }
        let mut err: f64 = 0.0;
        for i in 0..n {
            let e: f64 = (0..7).map(|j| E[j] * k[j][i]).sum();
            let scale = abs_tol + rel_tol * y[i].abs().max(y_new[i].abs());
            err = err.max((h * e / scale).abs());
        }
        if err <= 1.0 {
            t += h;
            y = y_new;
            k.swap(0, 6); // FSAL
        }
        let factor = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 5.0 };
        h *= factor.clamp(0.2, 5.0);
        if h < h_min && t < t_end {
            return Err(OdeError::StepUnderflow { time: t });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_duration_is_identity() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 1.0, 0.0]);
        let y0 = DVector::from_vec(vec![0.3, 0.7]);
        let y = integrate_linear(&a, y0.clone(), 0.0, 1e-9).unwrap();
        assert_eq!(y, y0);
    }

    #[test]
    fn matches_exponential_decay() {
        let rate = 1.4e8;
        let a = DMatrix::from_row_slice(2, 2, &[-rate, 0.0, rate, 0.0]);
        let y0 = DVector::from_vec(vec![1.0, 0.0]);
        let t = 3.0 / rate;
        let y = integrate_linear(&a, y0, t, 1e-9).unwrap();
        assert_relative_eq!(y[0], (-rate * t).exp(), max_relative = 1e-8);
        assert_relative_eq!(y[0] + y[1], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn rejects_bad_tolerance() {
        let a = DMatrix::zeros(1, 1);
        assert!(matches!(
            integrate_linear(&a, DVector::zeros(1), 1.0, 1e-2),
            Err(OdeError::BadTolerance(_))
        ));
    }
}
