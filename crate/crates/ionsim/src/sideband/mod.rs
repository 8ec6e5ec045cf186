//! Sideband cooling outside the Lamb-Dicke limit: motional matrix elements,
//! scattering rates, steady-state vibrational distributions and the analytic
//! limits that bound where ground-state cooling works.

mod cooling;
mod displacement;
mod limits;

pub use cooling::{
    cooling_steady_state, energy_rate, first_sideband_prediction, ld_energy_rate,
    optimal_parameters, refine_alpha, scattering_rate, scattering_rate_variant,
    single_phonon_plateau, CoolingOutcome,
    FirstSidebandPrediction, ScatteringVariant,
};
pub use displacement::{
    displacement_element, ld_expansion_ifn, sideband_strength, DisplacementTable, MAX_LEVEL,
};
pub use limits::{
    approximate_rate, beta_estimate, eta_limit, spontaneous_recoil_check, BetaEstimate, EtaLimit,
};

use thiserror::Error;

use crate::solver::SolveError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SidebandError {
    #[error("oscillator level {requested} exceeds the stable range (max {max})")]
    LevelOutOfRange { requested: usize, max: usize },
    #[error("trap frequency must be positive")]
    BadTrap,
    #[error("two-level reduction invalid: detuning {big_delta:.3e} below 10x max Rabi {max_rabi:.3e}")]
    RamanValidity { big_delta: f64, max_rabi: f64 },
    #[error("invalid cooling configuration: {0}")]
    BadConfig(String),
    #[error("j-sum tail above 1e-8 relative at j_max = {j_max} (f = {f}, n = {n})")]
    JSumNotConverged { f: usize, n: usize, j_max: usize },
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("distribution invalid: {0}")]
    BadDistribution(String),
    #[error("eta^2 = {0} is outside the domain of the first-sideband formula (pole at 1/2)")]
    FirstSidebandPole(f64),
    #[error("eta must be positive")]
    BadEta,
    #[error("eta^2 = {0} below 1: Bessel asymptotic branch invalid")]
    BesselBranch(f64),
    #[error("fixed-point iteration did not converge after {0} iterations")]
    FixedPointDiverged(usize),
    #[error("single-phonon chain does not cool (heating rate >= cooling rate)")]
    NoCooling,
}

/// Trap and beam geometry determining the Lamb-Dicke parameter.
#[derive(Debug, Clone, Copy)]
pub struct TrapGeometry {
    /// Trap angular frequency ω_z (rad/s), > 0.
    pub omega_z: f64,
    /// Recoil frequency E_R/ħ (rad/s), >= 0.
    pub recoil: f64,
    /// Beam angle to the trap axis (rad).
    pub theta: f64,
    /// 1 for single-photon transitions, 2 for counter-propagating Raman beams.
    pub photons: u8,
}

/// η = m cos(θ) (E_R/ħω_z)^(1/2).
pub fn lamb_dicke_parameter(geom: &TrapGeometry) -> Result<f64, SidebandError> {
    if !(geom.omega_z > 0.0) || !(geom.recoil >= 0.0) || !(geom.photons == 1 || geom.photons == 2) {
        return Err(SidebandError::BadTrap);
    }
    Ok(f64::from(geom.photons) * geom.theta.cos() * (geom.recoil / geom.omega_z).sqrt())
}

/// Raman pair parameters for the effective two-level reduction.
#[derive(Debug, Clone, Copy)]
pub struct RamanConfig {
    /// Single-photon Rabi frequencies Ω± (rad/s).
    pub rabi_plus: f64,
    pub rabi_minus: f64,
    /// Detuning Δ from the excited state (rad/s); must satisfy Δ >= 10 max Ω±.
    pub big_delta: f64,
    /// Laser frequencies ω_L± (rad/s).
    pub laser_freq_plus: f64,
    pub laser_freq_minus: f64,
    /// Zeeman splitting ω_{+−} = μ_B B/ħ (rad/s).
    pub zeeman_split: f64,
}

/// Effective (Ω, δ) of the Raman-coupled two-level system:
/// Ω = Ω₋Ω₊/2Δ and δ = ω_L− − ω_L+ − ω_{+−} − (|Ω₋|² − |Ω₊|²)/4Δ.
pub fn raman_effective_params(cfg: &RamanConfig) -> Result<(f64, f64), SidebandError> {
    let max_rabi = cfg.rabi_plus.abs().max(cfg.rabi_minus.abs());
    if cfg.big_delta < 10.0 * max_rabi {
        return Err(SidebandError::RamanValidity { big_delta: cfg.big_delta, max_rabi });
    }
    let omega_eff = cfg.rabi_minus * cfg.rabi_plus / (2.0 * cfg.big_delta);
    let light_shift =
        (cfg.rabi_minus * cfg.rabi_minus - cfg.rabi_plus * cfg.rabi_plus) / (4.0 * cfg.big_delta);
    let delta_eff = cfg.laser_freq_minus - cfg.laser_freq_plus - cfg.zeeman_split - light_shift;
    Ok((omega_eff, delta_eff))
}

/// Angular distribution of spontaneous emission along the trap axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmissionModel {
    /// N(u) = (δ(u+1) + δ(u−1))/2: photons along the z axis, consistent with
    /// the 1D treatment.
    #[default]
    TwoDelta,
    /// N(u) = 3/8 (1 + u²): 3D dipole emission, integrated by 16-point
    /// Gauss-Legendre quadrature.
    Dipole3d,
}

/// Dimensionless cooling configuration: all frequencies in units of ω_z,
/// rates in units of Ω²/Γ.
#[derive(Debug, Clone, Copy)]
pub struct CoolingConfig {
    pub eta: f64,
    /// Effective linewidth Γ in units of ω_z.
    pub gamma: f64,
    /// Effective Rabi frequency in units of ω_z; must stay in the
    /// low-intensity regime Ω <= 0.1 min(Γ, ω_z).
    pub rabi: f64,
    /// Sideband order m >= 1 of the main cooling laser.
    pub m_sideband: u32,
    /// Intensity ratio α of the auxiliary first-sideband laser.
    pub alpha: f64,
    /// Motional-state truncation (default 100).
    pub n_max: usize,
    /// Intermediate-state truncation (default n_max + 50).
    pub j_max: usize,
    pub emission_model: EmissionModel,
}

impl CoolingConfig {
    pub const DEFAULT_N_MAX: usize = 100;

    pub fn new(eta: f64, gamma: f64, m_sideband: u32, alpha: f64) -> Self {
        let n_max = Self::DEFAULT_N_MAX;
        Self {
            eta,
            gamma,
            rabi: 0.05 * gamma.min(1.0),
            m_sideband,
            alpha,
            n_max,
            j_max: Self::default_j_max(eta, n_max),
            emission_model: EmissionModel::default(),
        }
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self.j_max = Self::default_j_max(self.eta, n_max);
        self
    }

    /// The matrix elements <j|e^{ikz}|n> stay significant out to
    /// j ≈ n + 2η√n, so the intermediate-state margin grows with η.
    fn default_j_max(eta: f64, n_max: usize) -> usize {
        let spread = (2.0 * eta.abs() * ((n_max + 50) as f64).sqrt()).ceil() as usize;
        n_max + 50 + spread
    }

    pub fn validate(&self) -> Result<(), SidebandError> {
        let bad = |msg: &str| Err(SidebandError::BadConfig(msg.to_string()));
        if !(self.eta >= 0.0) {
            return bad("eta must be nonnegative");
        }
        if !(self.gamma > 0.0) {
            return bad("gamma must be positive");
        }
        if self.m_sideband < 1 {
            return bad("sideband order must be at least 1");
        }
        if !(self.alpha >= 0.0) {
            return bad("alpha must be nonnegative");
        }
        if self.n_max == 0 || self.n_max > MAX_LEVEL - 60 {
            return bad("n_max outside supported range");
        }
        if self.j_max > MAX_LEVEL {
            return bad("j_max exceeds the stable matrix-element range");
        }
        if !(self.rabi > 0.0 && self.rabi <= 0.1 * self.gamma.min(1.0)) {
            return bad("low-intensity limit requires 0 < rabi <= 0.1 min(gamma, 1)");
        }
        Ok(())
    }
}

/// Vibrational populations P_0..P_{n_max} with derived moments.
#[derive(Debug, Clone)]
pub struct MotionalDistribution {
    p: Vec<f64>,
}

impl MotionalDistribution {
    pub fn from_populations(p: Vec<f64>) -> Result<Self, SidebandError> {
        if p.is_empty() {
            return Err(SidebandError::BadDistribution("empty".into()));
        }
        if p.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(SidebandError::BadDistribution("negative or non-finite entry".into()));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(SidebandError::BadDistribution(format!("sum = {sum} is not 1")));
        }
        Ok(Self { p })
    }

    /// Thermal (geometric) distribution P_n = (1−s) s^n, truncated.
    pub fn geometric(s: f64, n_max: usize) -> Result<Self, SidebandError> {
        if !(0.0..1.0).contains(&s) {
            return Err(SidebandError::BadDistribution(format!("ratio s = {s} outside [0,1)")));
        }
        let mut p: Vec<f64> = (0..=n_max).map(|n| (1.0 - s) * s.powi(n as i32)).collect();
        let sum: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= sum);
        Ok(Self { p })
    }

    pub fn populations(&self) -> &[f64] {
        &self.p
    }

    pub fn n_max(&self) -> usize {
        self.p.len() - 1
    }

    pub fn mean_n(&self) -> f64 {
        self.p.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    pub fn mean_n_sq(&self) -> f64 {
        self.p.iter().enumerate().map(|(n, p)| (n * n) as f64 * p).sum()
    }

    /// 1 − P₀.
    pub fn ground_deficit(&self) -> f64 {
        1.0 - self.p[0]
    }

    /// k_B T in units of ħω_z, from the P₀/P₁ ratio.
    pub fn temperature(&self) -> f64 {
        1.0 / (self.p[0] / self.p[1]).ln()
    }
}
