//! Two-phase Zeeman-qubit measurement: shelving pulse and fluorescence
//! detection, simulated with the full sublevel rate equations, the reduced
//! two-rate model, and the repetition statistics of the readout.

use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;
use thiserror::Error;

use crate::atomic::{
    clebsch_gordan_sq, lineshape, zeeman_shift, AtomicError, FieldConfig, LevelScheme, Sublevel,
};
use crate::ode::{integrate_linear, OdeError};
use crate::solver::{steady_state, SolveError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShelvingError {
    #[error(transparent)]
    Atomic(#[from] AtomicError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("laser couples levels {lower} and {upper}, which is not a dipole pair of the scheme")]
    ForbiddenPair { lower: usize, upper: usize },
    #[error("laser lock component has zero Clebsch-Gordan weight")]
    DarkLockComponent,
    #[error("laser polarization weights must be nonnegative and sum to 1")]
    BadPolarization,
    #[error("Rabi frequency must be nonnegative, got {0}")]
    BadRabi(f64),
    #[error("sublevel (level {level}, 2M = {twice_m}) is outside the basis")]
    OutsideBasis { level: usize, twice_m: i32 },
    #[error("population {value:.3e} at sublevel index {index} below tolerance")]
    NegativePopulation { index: usize, value: f64 },
    #[error("failed to bracket an efficiency maximum over the pulse-length search window")]
    NoMaximum,
    #[error("shelving efficiency {0} outside (0, 1]")]
    BadEpsilon(f64),
    #[error("repetitions and ion count must be at least 1")]
    BadCounts,
    #[error("target probability {0} outside (0, 1)")]
    BadTarget(f64),
}

/// Identifies the Zeeman component a laser is frequency-locked to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LaserLock {
    /// Tuned to the zero-field line center.
    ZeroField,
    /// Resonant with one Zeeman-shifted component.
    Component { upper_twice_m: i32, lower_twice_m: i32 },
}

/// One driving laser on a dipole-allowed level pair.
#[derive(Debug, Clone, PartialEq)]
pub struct LaserDrive {
    pub lower: usize,
    pub upper: usize,
    /// Rabi frequency (rad/s) of the reference component.
    pub rabi: f64,
    /// Weights (w_σ−, w_π, w_σ+), nonnegative, summing to 1.
    pub polarization: [f64; 3],
    pub lock: LaserLock,
}

impl LaserDrive {
    fn validate(&self) -> Result<(), ShelvingError> {
        if !(self.rabi >= 0.0) {
            return Err(ShelvingError::BadRabi(self.rabi));
        }
        let sum: f64 = self.polarization.iter().sum();
        if self.polarization.iter().any(|w| *w < 0.0) || (sum - 1.0).abs() > 1e-12 {
            return Err(ShelvingError::BadPolarization);
        }
        Ok(())
    }
}

/// Ordered list of the Zeeman sublevels a rate matrix acts on.
#[derive(Debug, Clone)]
pub struct SublevelBasis {
    entries: Vec<Sublevel>,
    index: HashMap<(usize, i32), usize>,
}

impl SublevelBasis {
    pub fn for_levels(scheme: &LevelScheme, levels: &[usize]) -> Result<Self, AtomicError> {
        let mut entries = Vec::new();
        for &n in levels {
            let level = scheme.level(n)?;
            for tm in level.j.twice_m_values() {
                entries.push(Sublevel::new(n, tm));
            }
        }
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, s)| ((s.level, s.twice_m), i))
            .collect();
        Ok(Self { entries, index })
    }

    /// All 18 sublevels of the five-level scheme.
    pub fn full(scheme: &LevelScheme) -> Self {
        Self::for_levels(scheme, &[1, 2, 3, 4, 5]).expect("levels 1..5 exist")
    }

    /// The {S1/2, D3/2, P1/2} subspace used during fluorescence detection.
    pub fn detection(scheme: &LevelScheme) -> Self {
        Self::for_levels(scheme, &[1, 2, 4]).expect("levels 1,2,4 exist")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Sublevel] {
        &self.entries
    }

    pub fn position(&self, s: Sublevel) -> Option<usize> {
        self.index.get(&(s.level, s.twice_m)).copied()
    }

    pub fn contains_level(&self, level: usize) -> bool {
        self.entries.iter().any(|s| s.level == level)
    }
}

/// Population vector over the Zeeman sublevels of a basis.
#[derive(Debug, Clone)]
pub struct SublevelPopulations {
    basis: SublevelBasis,
    values: DVector<f64>,
}

impl SublevelPopulations {
    /// All population in one sublevel.
    pub fn pure(basis: &SublevelBasis, s: Sublevel) -> Result<Self, ShelvingError> {
        let i = basis
            .position(s)
            .ok_or(ShelvingError::OutsideBasis { level: s.level, twice_m: s.twice_m })?;
        let mut values = DVector::zeros(basis.len());
        values[i] = 1.0;
        Ok(Self { basis: basis.clone(), values })
    }

    pub fn basis(&self) -> &SublevelBasis {
        &self.basis
    }

    pub fn get(&self, s: Sublevel) -> f64 {
        self.basis.position(s).map_or(0.0, |i| self.values[i])
    }

    /// Total population of one fine-structure level.
    pub fn level_total(&self, level: usize) -> f64 {
        self.basis
            .entries()
            .iter()
            .zip(self.values.iter())
            .filter(|(s, _)| s.level == level)
            .map(|(_, v)| v)
            .sum()
    }

    pub fn total(&self) -> f64 {
        self.values.sum()
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }
}

/// Square rate matrix over sublevel indices: dN/dt = A N.
#[derive(Debug, Clone)]
pub struct RateMatrix {
    pub basis: SublevelBasis,
    pub a: DMatrix<f64>,
}

/// Assembles spontaneous feeding/decay plus symmetric two-way driven rates
/// for every dipole-allowed Zeeman component of every laser.
pub fn build_rate_matrix(
    scheme: &LevelScheme,
    lasers: &[LaserDrive],
    field: &FieldConfig,
) -> Result<RateMatrix, ShelvingError> {
    build_rate_matrix_on(scheme, lasers, field, &SublevelBasis::full(scheme))
}

/// Same as [`build_rate_matrix`] but restricted to a sublevel basis
/// (used for the detection phase, which drops D5/2 and P3/2).
pub fn build_rate_matrix_on(
    scheme: &LevelScheme,
    lasers: &[LaserDrive],
    field: &FieldConfig,
    basis: &SublevelBasis,
) -> Result<RateMatrix, ShelvingError> {
    let n = basis.len();
    let mut a = DMatrix::zeros(n, n);

    // spontaneous feeding and decay, component by component so the columns
    // sum to zero exactly
    for d in scheme.decays() {
        if !basis.contains_level(d.upper) || !basis.contains_level(d.lower) {
            continue;
        }
        let ju = scheme.level(d.upper)?.j;
        let jl = scheme.level(d.lower)?.j;
        for tm_u in ju.twice_m_values() {
            let up = basis.position(Sublevel::new(d.upper, tm_u)).expect("level in basis");
            for q in -1..=1 {
                let tm_l = tm_u - 2 * q;
                if jl.check_twice_m(tm_l).is_err() {
                    continue;
                }
                let cg = clebsch_gordan_sq(ju, tm_u, jl, tm_l, q)?;
                let branch = *cg.numer() as f64 / *cg.denom() as f64;
                if branch == 0.0 {
                    continue;
                }
                let lo = basis.position(Sublevel::new(d.lower, tm_l)).expect("level in basis");
                let rate = d.rate * branch;
                a[(lo, up)] += rate;
                a[(up, up)] -= rate;
            }
        }
    }

    // driven terms: symmetric two-way rates on every Zeeman component
    for laser in lasers {
        laser.validate()?;
        if !scheme.dipole_allowed(laser.lower, laser.upper) {
            return Err(ShelvingError::ForbiddenPair { lower: laser.lower, upper: laser.upper });
        }
        let ju = scheme.level(laser.upper)?.j;
        let jl = scheme.level(laser.lower)?.j;
        let width = scheme.level_width(laser.upper);

        let component_cg = |tm_u: i32, tm_l: i32| -> Result<f64, ShelvingError> {
            let q = (tm_u - tm_l) / 2;
            let cg = clebsch_gordan_sq(ju, tm_u, jl, tm_l, q)?;
            Ok(*cg.numer() as f64 / *cg.denom() as f64)
        };

        // reference component defining the Rabi frequency
        let (ref_cg, lock_shift) = match laser.lock {
            LaserLock::Component { upper_twice_m, lower_twice_m } => {
                // the lock component must itself be driven by the laser
                let q = (upper_twice_m - lower_twice_m) / 2;
                let driven = upper_twice_m - lower_twice_m == 2 * q
                    && (-1..=1).contains(&q)
                    && laser.polarization[(q + 1) as usize] > 0.0;
                if !driven {
                    return Err(ShelvingError::DarkLockComponent);
                }
                let cg = component_cg(upper_twice_m, lower_twice_m)?;
                if cg == 0.0 {
                    return Err(ShelvingError::DarkLockComponent);
                }
                let shift = zeeman_shift(
                    scheme,
                    Sublevel::new(laser.upper, upper_twice_m),
                    Sublevel::new(laser.lower, lower_twice_m),
                    field,
                )?;
                (cg, shift)
            }
            LaserLock::ZeroField => {
                // the strongest driven component defines the Rabi frequency
                let mut best = 0.0f64;
                for tm_l in jl.twice_m_values() {
                    for (qi, w) in laser.polarization.iter().enumerate() {
                        if *w == 0.0 {
                            continue;
                        }
                        let q = qi as i32 - 1;
                        let tm_u = tm_l + 2 * q;
                        if ju.check_twice_m(tm_u).is_ok() {
                            best = best.max(component_cg(tm_u, tm_l)?);
                        }
                    }
                }
                if best == 0.0 {
                    return Err(ShelvingError::DarkLockComponent);
                }
                (best, 0.0)
            }
        };

        for tm_l in jl.twice_m_values() {
            let lo = basis.position(Sublevel::new(laser.lower, tm_l)).ok_or(
                ShelvingError::OutsideBasis { level: laser.lower, twice_m: tm_l },
            )?;
            for (qi, &w) in laser.polarization.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let q = qi as i32 - 1;
                let tm_u = tm_l + 2 * q;
                if ju.check_twice_m(tm_u).is_err() {
                    continue;
                }
                let cg = component_cg(tm_u, tm_l)?;
                if cg == 0.0 {
                    continue;
                }
                let up = basis.position(Sublevel::new(laser.upper, tm_u)).ok_or(
                    ShelvingError::OutsideBasis { level: laser.upper, twice_m: tm_u },
                )?;
                let shift = zeeman_shift(
                    scheme,
                    Sublevel::new(laser.upper, tm_u),
                    Sublevel::new(laser.lower, tm_l),
                    field,
                )? - lock_shift;
                let rate = std::f64::consts::FRAC_PI_2
                    * w
                    * (cg / ref_cg)
                    * laser.rabi
                    * laser.rabi
                    * lineshape(shift, width, false)?;
                a[(up, lo)] += rate;
                a[(lo, lo)] -= rate;
                a[(lo, up)] += rate;
                a[(up, up)] -= rate;
            }
        }
    }

    Ok(RateMatrix { basis: basis.clone(), a })
}

/// Integrates the rate equations for `duration` seconds.
///
/// Population sum is preserved to 1e-9 and small negative entries
/// (above -1e-9) are clamped to zero.
pub fn evolve(
    state: &SublevelPopulations,
    matrix: &RateMatrix,
    duration: f64,
    rel_tol: f64,
) -> Result<SublevelPopulations, ShelvingError> {
    let mut values = integrate_linear(&matrix.a, state.values.clone(), duration, rel_tol)?;
    for (index, v) in values.iter_mut().enumerate() {
        if *v < 0.0 {
            if *v < -1e-9 {
                return Err(ShelvingError::NegativePopulation { index, value: *v });
            }
            *v = 0.0;
        }
    }
    Ok(SublevelPopulations { basis: state.basis.clone(), values })
}

/// Result of one shelving-pulse simulation.
#[derive(Debug, Clone)]
pub struct ShelvingResult {
    /// ε = S₊ − S₋.
    pub epsilon: f64,
    /// D5/2 shelved fraction starting from M = +1/2.
    pub s_plus: f64,
    /// D5/2 shelved fraction starting from M = −1/2.
    pub s_minus: f64,
    pub pulse_duration: f64,
}

/// The σ⁺ shelving laser on S1/2 <-> P3/2, locked to the stretched component.
pub fn shelving_laser(rabi: f64) -> LaserDrive {
    LaserDrive {
        lower: 1,
        upper: 5,
        rabi,
        polarization: [0.0, 0.0, 1.0],
        lock: LaserLock::Component { upper_twice_m: 3, lower_twice_m: 1 },
    }
}

pub const EVOLVE_REL_TOL: f64 = 1e-9;

/// Runs the shelving pulse from both qubit initial states and returns the
/// shelving efficiency.
pub fn shelving_efficiency(
    scheme: &LevelScheme,
    field: &FieldConfig,
    rabi: f64,
    duration: f64,
) -> Result<ShelvingResult, ShelvingError> {
    let matrix = build_rate_matrix(scheme, &[shelving_laser(rabi)], field)?;
    let basis = &matrix.basis;
    let plus = SublevelPopulations::pure(basis, Sublevel::new(1, 1))?;
    let minus = SublevelPopulations::pure(basis, Sublevel::new(1, -1))?;
    let s_plus = evolve(&plus, &matrix, duration, EVOLVE_REL_TOL)?.level_total(3);
    let s_minus = evolve(&minus, &matrix, duration, EVOLVE_REL_TOL)?.level_total(3);
    Ok(ShelvingResult { epsilon: s_plus - s_minus, s_plus, s_minus, pulse_duration: duration })
}

/// Maximizes ε over the pulse duration by a log-spaced scan followed by
/// golden-section refinement (relative tolerance 1e-3 in t).
pub fn optimal_pulse(
    scheme: &LevelScheme,
    field: &FieldConfig,
    rabi: f64,
) -> Result<(f64, f64), ShelvingError> {
    if !(field.b > 0.0) || !(rabi > 0.0) {
        return Err(ShelvingError::NoMaximum);
    }
    let gamma35 = scheme.decay_rate(3, 5);
    let matrix = build_rate_matrix(scheme, &[shelving_laser(rabi)], field)?;
    let basis = matrix.basis.clone();
    let plus = SublevelPopulations::pure(&basis, Sublevel::new(1, 1))?;
    let minus = SublevelPopulations::pure(&basis, Sublevel::new(1, -1))?;
    let eps = |t: f64| -> Result<f64, ShelvingError> {
        let s_plus = evolve(&plus, &matrix, t, EVOLVE_REL_TOL)?.level_total(3);
        let s_minus = evolve(&minus, &matrix, t, EVOLVE_REL_TOL)?.level_total(3);
        Ok(s_plus - s_minus)
    };

    // bracket on a log grid starting from [0.01, 100]/Γ35; when the optimum
    // sits slower or faster than that window (weak drive at high field pushes
    // t_max beyond 100/Γ35) the grid extends in the same log spacing until the
    // peak is interior
    let ratio = (100.0f64 / 0.01).powf(1.0 / 24.0);
    let mut ts: Vec<f64> = (0..25).map(|i| 0.01 / gamma35 * ratio.powi(i)).collect();
    let mut vals = Vec::with_capacity(ts.len());
    for &t in &ts {
        vals.push(eps(t)?);
    }
    let mut extensions = 0;
    let imax = loop {
        let (imax, &vmax) = vals
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        if vmax <= 0.0 {
            return Err(ShelvingError::NoMaximum);
        }
        if imax > 0 && imax + 1 < ts.len() {
            break imax;
        }
        extensions += 1;
        if extensions > 8 {
            return Err(ShelvingError::NoMaximum);
        }
        for _ in 0..6 {
            if imax == 0 {
                let t = ts.first().unwrap() / ratio;
                vals.insert(0, eps(t)?);
                ts.insert(0, t);
            } else {
                let t = ts.last().unwrap() * ratio;
                vals.push(eps(t)?);
                ts.push(t);
            }
        }
    };

    // golden-section on the bracketing interval
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let (mut a, mut b) = (ts[imax - 1], ts[imax + 1]);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = eps(x1)?;
    let mut f2 = eps(x2)?;
    while (b - a) > 1e-3 * 0.5 * (a + b) {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = eps(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = eps(x1)?;
        }
    }
    let t_max = 0.5 * (a + b);
    Ok((t_max, eps(t_max)?))
}

/// The reduced two-rate model of the shelving pulse (transfer rate R1 out of
/// M = −1/2, shelving rate R2 out of M = +1/2).
#[derive(Debug, Clone, Copy)]
pub struct ReducedModel {
    pub r1: f64,
    pub r2: f64,
}

impl ReducedModel {
    pub fn new(
        scheme: &LevelScheme,
        field: &FieldConfig,
        rabi: f64,
    ) -> Result<Self, ShelvingError> {
        let gamma5 = scheme.level_width(5);
        let gamma35 = scheme.decay_rate(3, 5);
        let detuning = 2.0 / 3.0 * field.splitting();
        let r1 = 2.0 / 3.0
            * std::f64::consts::FRAC_PI_2
            * (1.0 / 3.0)
            * rabi
            * rabi
            * lineshape(detuning, gamma5, false)?;
        let r2 = rabi * rabi * gamma35 / (2.0 * rabi * rabi + gamma5 * gamma5);
        Ok(Self { r1, r2 })
    }

    const BRANCH: f64 = 0.899;

    /// ε(t) of the reduced model, with the R1 = R2 degeneracy handled by
    /// the analytic limit.
    pub fn epsilon(&self, t: f64) -> f64 {
        let (r1, r2) = (self.r1, self.r2);
        if ((r2 - r1) / r2.max(r1)).abs() < 1e-9 {
            Self::BRANCH * r1 * t * (-r1 * t).exp()
        } else {
            Self::BRANCH * r2 / (r2 - r1) * ((-r1 * t).exp() - (-r2 * t).exp())
        }
    }

    pub fn t_max(&self) -> f64 {
        let (r1, r2) = (self.r1, self.r2);
        if ((r2 - r1) / r2.max(r1)).abs() < 1e-9 {
            1.0 / r1
        } else {
            (r2 / r1).ln() / (r2 - r1)
        }
    }
}

/// Fluorescence detection lasers: 397 nm and 866 nm, linearly polarized
/// perpendicular to B, tuned to the zero-field line centers.
pub fn detection_lasers(rabi14: f64, rabi24: f64) -> [LaserDrive; 2] {
    let pol = [0.5, 0.0, 0.5];
    [
        LaserDrive { lower: 1, upper: 4, rabi: rabi14, polarization: pol, lock: LaserLock::ZeroField },
        LaserDrive { lower: 2, upper: 4, rabi: rabi24, polarization: pol, lock: LaserLock::ZeroField },
    ]
}

/// Steady-state P1/2 population during the detection phase (proportional to
/// the fluorescence signal).
pub fn detection_steady_state(
    scheme: &LevelScheme,
    field: &FieldConfig,
    rabi14: f64,
    rabi24: f64,
) -> Result<f64, ShelvingError> {
    let basis = SublevelBasis::detection(scheme);
    let matrix = build_rate_matrix_on(scheme, &detection_lasers(rabi14, rabi24), field, &basis)?;
    let s = steady_state(&matrix.a, 1e-9)?;
    Ok(basis
        .entries()
        .iter()
        .zip(s.populations.iter())
        .filter(|(sl, _)| sl.level == 4)
        .map(|(_, p)| p)
        .sum())
}

/// Probability [1 − (1−ε)^r]^N of reading every ion correctly after r
/// repetitions.
pub fn readout_success(epsilon: f64, repetitions: u32, ions: u32) -> Result<f64, ShelvingError> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(ShelvingError::BadEpsilon(epsilon));
    }
    if repetitions < 1 || ions < 1 {
        return Err(ShelvingError::BadCounts);
    }
    Ok((1.0 - (1.0 - epsilon).powi(repetitions as i32)).powi(ions as i32))
}

/// Smallest r with readout success at or above `target`.
pub fn repetitions_for(epsilon: f64, ions: u32, target: f64) -> Result<u32, ShelvingError> {
    if !(target > 0.0 && target < 1.0) {
        return Err(ShelvingError::BadTarget(target));
    }
    if epsilon == 1.0 {
        return Ok(1);
    }
    let mut r = 1;
    while readout_success(epsilon, r, ions)? < target {
        r += 1;
        if r > 10_000_000 {
            return Err(ShelvingError::BadTarget(target));
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ca_setup(b: f64) -> (LevelScheme, FieldConfig) {
        (LevelScheme::ca40(), FieldConfig::new(b).unwrap())
    }

    #[test]
    fn basis_sizes() {
        let scheme = LevelScheme::ca40();
        assert_eq!(SublevelBasis::full(&scheme).len(), 18);
        assert_eq!(SublevelBasis::detection(&scheme).len(), 8);
    }

    #[test]
    fn columns_sum_to_zero() {
        let (scheme, field) = ca_setup(0.01);
        let lasers = [shelving_laser(1.0e8)];
        let m = build_rate_matrix(&scheme, &lasers, &field).unwrap();
        for c in 0..m.a.ncols() {
            let s: f64 = m.a.column(c).iter().sum();
            assert!(s.abs() < 1e-6 * m.a.abs().max(), "column {c} sums to {s}");
        }
    }

    #[test]
    fn driven_component_rates_match_printed_equations() {
        // the two σ⁺ components of the 394 nm laser
        let (scheme, field) = ca_setup(0.02);
        let rabi = 1.0e8;
        let m = build_rate_matrix(&scheme, &[shelving_laser(rabi)], &field).unwrap();
        let gamma5 = scheme.level_width(5);
        let i_low = m.basis.position(Sublevel::new(1, 1)).unwrap();
        let i_up = m.basis.position(Sublevel::new(5, 3)).unwrap();
        let expected = std::f64::consts::FRAC_PI_2 * rabi * rabi
            * lineshape(0.0, gamma5, false).unwrap();
        assert_relative_eq!(m.a[(i_up, i_low)], expected, max_relative = 1e-12);

        let j_low = m.basis.position(Sublevel::new(1, -1)).unwrap();
        let j_up = m.basis.position(Sublevel::new(5, 1)).unwrap();
        let det = 2.0 / 3.0 * field.splitting();
        let expected_off = std::f64::consts::FRAC_PI_2 * (1.0 / 3.0) * rabi * rabi
            * lineshape(det, gamma5, false).unwrap();
        assert_relative_eq!(m.a[(j_up, j_low)], expected_off, max_relative = 1e-12);
        // symmetric two-way rate, on top of the spontaneous feeding term
        let spont = build_rate_matrix(&scheme, &[], &field).unwrap();
        assert_relative_eq!(
            m.a[(j_low, j_up)] - spont.a[(j_low, j_up)],
            expected_off,
            max_relative = 1e-9
        );
    }

    #[test]
    fn no_lasers_ground_state_is_stationary() {
        let (scheme, field) = ca_setup(0.01);
        let m = build_rate_matrix(&scheme, &[], &field).unwrap();
        let state = SublevelPopulations::pure(&m.basis, Sublevel::new(1, -1)).unwrap();
        let rate = &m.a * state.values();
        assert!(rate.abs().max() == 0.0);
    }

    #[test]
    fn forbidden_pair_rejected() {
        let (scheme, field) = ca_setup(0.01);
        let laser = LaserDrive {
            lower: 3,
            upper: 4,
            rabi: 1.0,
            polarization: [0.0, 1.0, 0.0],
            lock: LaserLock::ZeroField,
        };
        assert!(matches!(
            build_rate_matrix(&scheme, &[laser], &field),
            Err(ShelvingError::ForbiddenPair { lower: 3, upper: 4 })
        ));
    }

    #[test]
    fn dark_lock_component_rejected() {
        let (scheme, field) = ca_setup(0.01);
        let laser = LaserDrive {
            lower: 1,
            upper: 5,
            rabi: 1.0,
            polarization: [0.0, 0.0, 1.0],
            // σ⁺-forbidden combination: ΔM = -1 for the lock component
            lock: LaserLock::Component { upper_twice_m: -3, lower_twice_m: -1 },
        };
        assert!(matches!(
            build_rate_matrix(&scheme, &[laser], &field),
            Err(ShelvingError::DarkLockComponent)
        ));
    }

    #[test]
    fn evolve_zero_duration_is_identity() {
        let (scheme, field) = ca_setup(0.01);
        let m = build_rate_matrix(&scheme, &[shelving_laser(1e8)], &field).unwrap();
        let state = SublevelPopulations::pure(&m.basis, Sublevel::new(1, 1)).unwrap();
        let out = evolve(&state, &m, 0.0, 1e-9).unwrap();
        assert_eq!(out.values(), state.values());
    }

    #[test]
    fn spontaneous_decay_is_single_exponential() {
        // start in P1/2; its total population decays as exp(-Γ4 t)
        let (scheme, field) = ca_setup(0.0);
        let m = build_rate_matrix(&scheme, &[], &field).unwrap();
        let state = SublevelPopulations::pure(&m.basis, Sublevel::new(4, 1)).unwrap();
        let gamma4 = scheme.level_width(4);
        let t = 2.5 / gamma4;
        let out = evolve(&state, &m, t, 1e-9).unwrap();
        assert_relative_eq!(out.level_total(4), (-gamma4 * t).exp(), max_relative = 1e-7);
        assert_relative_eq!(out.total(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn long_pulse_empties_the_ground_state() {
        let (scheme, field) = ca_setup(0.01);
        let rabi = scheme.decay_rate(1, 5);
        let m = build_rate_matrix(&scheme, &[shelving_laser(rabi)], &field).unwrap();
        let state = SublevelPopulations::pure(&m.basis, Sublevel::new(1, -1)).unwrap();
        let t = 2000.0 / scheme.decay_rate(3, 5);
        let out = evolve(&state, &m, t, 1e-9).unwrap();
        assert!(out.level_total(1) < 1e-3, "S population = {}", out.level_total(1));
        assert_relative_eq!(out.level_total(2) + out.level_total(3), 1.0, epsilon = 1e-3);
    }

    #[test]
    fn zero_field_efficiency_vanishes_at_long_times() {
        let (scheme, field) = ca_setup(0.0);
        let rabi = scheme.decay_rate(1, 5);
        let reduced = ReducedModel::new(&scheme, &field, rabi).unwrap();
        let t = 40.0 / reduced.r2.min(reduced.r1);
        let r = shelving_efficiency(&scheme, &field, rabi, t).unwrap();
        assert!(r.epsilon.abs() < 1e-6, "epsilon = {}", r.epsilon);
    }

    #[test]
    fn optimal_pulse_requires_drive() {
        let (scheme, field) = ca_setup(0.01);
        assert!(matches!(
            optimal_pulse(&scheme, &field, 0.0),
            Err(ShelvingError::NoMaximum)
        ));
    }

    #[test]
    fn optimal_pulse_order_of_magnitude() {
        // t_max ~ 10/Γ35 ~ 1 μs, and within 30% of the reduced-model estimate
        let (scheme, field) = ca_setup(0.01);
        let rabi = scheme.decay_rate(1, 5);
        let (t_max, eps_max) = optimal_pulse(&scheme, &field, rabi).unwrap();
        let reduced = ReducedModel::new(&scheme, &field, rabi).unwrap();
        let t_red = reduced.t_max();
        assert!(
            (t_max - t_red).abs() <= 0.3 * t_red,
            "t_max = {t_max:.3e}, reduced = {t_red:.3e}"
        );
        assert!(t_max > 0.05e-6 && t_max < 20e-6, "t_max = {t_max:.3e}");
        assert!(eps_max > 0.5);
    }

    #[test]
    fn reduced_model_limits() {
        let (scheme, field) = ca_setup(0.01);
        let rabi = scheme.decay_rate(1, 5);
        let m = ReducedModel::new(&scheme, &field, rabi).unwrap();
        assert_eq!(m.epsilon(0.0), 0.0);
        assert!(m.epsilon(1.0).abs() < 1e-12); // t → ∞
        // R2 >> R1: peak approaches the branching fraction
        let wide = ReducedModel { r1: 1.0, r2: 1.0e6 };
        let peak = wide.epsilon(wide.t_max());
        assert_relative_eq!(
            peak,
            0.899 * (wide.r1 / wide.r2).powf(wide.r1 / (wide.r2 - wide.r1)),
            max_relative = 1e-12
        );
        assert!((peak - 0.899).abs() < 0.899 * 2e-5);
        // degenerate rates use the analytic limit
        let deg = ReducedModel { r1: 2.0e5, r2: 2.0e5 };
        assert_relative_eq!(deg.t_max(), 1.0 / deg.r1, max_relative = 1e-9);
        assert_relative_eq!(
            deg.epsilon(deg.t_max()),
            0.899 / std::f64::consts::E,
            max_relative = 1e-6
        );
    }

    #[test]
    fn detection_dark_without_repumper() {
        let (scheme, field) = ca_setup(1e-3);
        let gamma4 = scheme.level_width(4);
        let p = detection_steady_state(&scheme, &field, 2.0 * gamma4, 0.0).unwrap();
        assert!(p.abs() < 1e-10, "P population = {p}");
    }

    #[test]
    fn detection_polarization_swap_symmetry() {
        // swapping σ+ and σ- weights mirrors M -> -M and leaves the signal fixed
        let (scheme, field) = ca_setup(2e-3);
        let gamma4 = scheme.level_width(4);
        let basis = SublevelBasis::detection(&scheme);
        let mut lasers = detection_lasers(3.0 * gamma4, 3.0 * gamma4);
        let m1 = build_rate_matrix_on(&scheme, &lasers, &field, &basis).unwrap();
        for l in lasers.iter_mut() {
            l.polarization = [0.7, 0.0, 0.3];
        }
        let m2 = build_rate_matrix_on(&scheme, &lasers, &field, &basis).unwrap();
        for l in lasers.iter_mut() {
            l.polarization = [0.3, 0.0, 0.7];
        }
        let m3 = build_rate_matrix_on(&scheme, &lasers, &field, &basis).unwrap();
        let p = |m: &RateMatrix| -> f64 {
            let s = steady_state(&m.a, 1e-9).unwrap();
            basis
                .entries()
                .iter()
                .zip(s.populations.iter())
                .filter(|(sl, _)| sl.level == 4)
                .map(|(_, v)| v)
                .sum()
        };
        assert_relative_eq!(p(&m2), p(&m3), max_relative = 1e-9);
        assert!(p(&m1) > 0.0);
    }

    #[test]
    fn readout_statistics_examples() {
        assert_eq!(readout_success(1.0, 1, 100).unwrap(), 1.0);
        assert_eq!(readout_success(1.0, 7, 3).unwrap(), 1.0);
        // 0.9^44 ≈ 0.0097
        let p = readout_success(0.9, 1, 44).unwrap();
        assert_relative_eq!(p, 0.9f64.powi(44), max_relative = 1e-14);
        assert!((p - 0.01).abs() < 0.0005);
        assert!(readout_success(0.0, 1, 1).is_err());
        assert!(readout_success(-0.1, 1, 1).is_err());
        assert!(readout_success(0.5, 0, 1).is_err());
    }

    #[test]
    fn minimal_repetitions_by_direct_scan() {
        let (eps, ions, target) = (0.9, 44u32, 0.99);
        let r = repetitions_for(eps, ions, target).unwrap();
        // independent oracle: direct evaluation loop
        let mut expect = 1;
        while (1.0 - (1.0 - eps).powi(expect)).powi(ions as i32) < target {
            expect += 1;
        }
        assert_eq!(r, expect as u32);
        assert!(readout_success(eps, r, ions).unwrap() >= target);
        if r > 1 {
            assert!(readout_success(eps, r - 1, ions).unwrap() < target);
        }
        // scaling r ~ O(log N / log(1/(1-ε)))
        let r_big = repetitions_for(eps, 44 * 44, target).unwrap();
        assert!(r_big <= r + (44f64.ln() / (1.0 / (1.0 - eps)).ln()).ceil() as u32 + 1);
    }
}
