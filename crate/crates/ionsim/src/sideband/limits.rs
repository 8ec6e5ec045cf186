//! Analytic estimates for the regime where two-sideband cooling stops
//! working: the pumping-vs-leakage balance for the ground state, the
//! resulting bound on the confinement parameter, and sum-rule checks.

use super::displacement::sideband_strength;
use super::{CoolingConfig, SidebandError};
use crate::atomic::sideband_lineshape;

/// Competing rates for pumping into vs out of the motional ground state,
/// in units of αΩ²/Γ. Valid for η² > 1 where the Bessel asymptotics hold.
#[derive(Debug, Clone, Copy)]
pub struct BetaEstimate {
    /// Ground-state pumping strength I₀₀·I₀₁ = η² e^{−2η²}.
    pub pump: f64,
    /// Off-resonant leakage β ~ (Γ²/4)(1/2√π) η⁻³ from the analytic sum.
    pub beta: f64,
    /// The same with η⁻³ replaced by η⁻⁵, which tracks the numerics better.
    pub beta_steep: f64,
    /// pump/β: ground state dominates when this is large.
    pub ratio: f64,
    /// P₀ ≈ (pump + β)/(pump + 2β) using the steeper β variant.
    pub ground_population: f64,
}

/// Estimates the ground-state pumping/leakage balance at given η and
/// Γ/ω_z.
pub fn beta_estimate(eta: f64, gamma_ratio: f64) -> Result<BetaEstimate, SidebandError> {
    let e2 = eta * eta;
    if e2 < 1.0 {
        return Err(SidebandError::BesselBranch(e2));
    }
    if !(gamma_ratio > 0.0) {
        return Err(SidebandError::BadConfig("gamma must be positive".into()));
    }
    let pump = e2 * (-2.0 * e2).exp();
    let g2_4 = gamma_ratio * gamma_ratio / 4.0;
    let beta = g2_4 / (2.0 * f64::sqrt(std::f64::consts::PI)) * eta.powi(-3);
    let beta_steep = g2_4 / (2.0 * f64::sqrt(std::f64::consts::PI)) * eta.powi(-5);
    Ok(BetaEstimate {
        pump,
        beta,
        beta_steep,
        ratio: pump / beta_steep,
        ground_population: (pump + beta_steep) / (pump + 2.0 * beta_steep),
    })
}

/// Confinement bound from `pump = β`, solved as a damped fixed point of
/// x = ln(2/Γ) + (7/4) ln x + 2 with x = η².
#[derive(Debug, Clone, Copy)]
pub struct EtaLimit {
    pub eta_max: f64,
    pub eta_sq: f64,
    /// |x − rhs(x)| at the returned point.
    pub residual: f64,
    pub iterations: usize,
}

/// Largest η for which the ground state can still be populated by cooling
/// on the first plus a higher sideband, at linewidth Γ/ω_z = `gamma_ratio`.
pub fn eta_limit(gamma_ratio: f64) -> Result<EtaLimit, SidebandError> {
    if !(gamma_ratio > 0.0 && gamma_ratio < 2.0) {
        return Err(SidebandError::BadConfig(
            "gamma must lie in (0, 2) for the resolved-sideband bound".into(),
        ));
    }
    let base = (2.0 / gamma_ratio).ln();
    let rhs = |x: f64| base + 1.75 * x.ln() + 2.0;
    let mut x = base + 2.0;
    const TOL: f64 = 1e-6;
    for it in 1..=1000 {
        let next = 0.5 * (x + rhs(x));
        if !next.is_finite() || next <= 0.0 {
            return Err(SidebandError::FixedPointDiverged(it));
        }
        let moved = (next - x).abs();
        x = next;
        if moved < TOL {
            return Ok(EtaLimit {
                eta_max: x.sqrt(),
                eta_sq: x,
                residual: (x - rhs(x)).abs(),
                iterations: it,
            });
        }
    }
    Err(SidebandError::FixedPointDiverged(1000))
}

/// Transfer rate n -> f with interference between intermediate levels
/// dropped: Σ_j I_fj I_jn (g̃_{n−j−m} + α g̃_{n−j−1}). Same units as the
/// full scattering rate.
pub fn approximate_rate(f: usize, n: usize, cfg: &CoolingConfig) -> Result<f64, SidebandError> {
    cfg.validate()?;
    let m = i64::from(cfg.m_sideband);
    let mut total = 0.0;
    for j in 0..=cfg.j_max {
        let i_fj = sideband_strength(f, j, cfg.eta)?;
        let i_jn = sideband_strength(j, n, cfg.eta)?;
        if i_fj * i_jn == 0.0 {
            continue;
        }
        let k = n as i64 - j as i64;
        total += i_fj
            * i_jn
            * (sideband_lineshape(k - m, cfg.gamma)
                + cfg.alpha * sideband_lineshape(k - 1, cfg.gamma));
    }
    Ok(total)
}

/// Mean recoil sum rule: Σ_n (n − f) I_nf must equal η² for every starting
/// level f. Returns the evaluated sum.
pub fn spontaneous_recoil_check(f: usize, eta: f64) -> Result<f64, SidebandError> {
    let n_top = (f + 250).max(300);
    let mut sum = 0.0;
    for n in 0..=n_top {
        sum += (n as f64 - f as f64) * sideband_strength(n, f, eta)?;
    }
    Ok(sum)
}
