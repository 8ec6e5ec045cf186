//! Scattering rates between vibrational levels and the steady state of the
//! cooling rate equations, for one or two red sidebands.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::displacement::DisplacementTable;
use super::{CoolingConfig, EmissionModel, MotionalDistribution, SidebandError};
use crate::atomic::sideband_lineshape;
use crate::solver::steady_state;

// 16-point Gauss-Legendre nodes and weights on [-1, 1].
const GL16_NODES: [f64; 8] = [
    0.095_012_509_837_637_44,
    0.281_603_550_779_258_9,
    0.458_016_777_657_227_4,
    0.617_876_244_402_643_7,
    0.755_404_408_355_003_0,
    0.865_631_202_387_831_7,
    0.944_575_023_073_232_6,
    0.989_400_934_991_649_9,
];
const GL16_WEIGHTS: [f64; 8] = [
    0.189_450_610_455_068_5,
    0.182_603_415_044_923_6,
    0.169_156_519_395_002_5,
    0.149_595_988_816_576_7,
    0.124_628_971_255_533_9,
    0.095_158_511_682_492_8,
    0.062_253_523_938_647_9,
    0.027_152_459_411_754_1,
];

/// How absorption and emission are composed in the scattering amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScatteringVariant {
    /// Single scattering process: modulus square of the whole j-sum.
    #[default]
    Coherent,
    /// Driven transition followed by optical pumping: modulus square of
    /// each term in the j-sum.
    SeparateProcesses,
}

/// |Σ_j <f|e^{-ikzu}|j><j|e^{ikz}|n> (Γ/2)/(ω_z(-m-j+n) + iΓ/2)|² for one
/// emission direction u = ±1, read from a displacement table; also checks
/// that the last 10 j-terms are a negligible tail.
fn amplitude_sq_at_unit_u(
    table: &DisplacementTable,
    f: usize,
    n: usize,
    m: u32,
    gamma: f64,
    j_max: usize,
    u_positive: bool,
    variant: ScatteringVariant,
) -> Result<f64, SidebandError> {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut sq_sum = 0.0f64;
    let mut mag_total = 0.0f64;
    let mut mag_tail = 0.0f64;
    let tail_start = j_max.saturating_sub(9);
    for j in 0..=j_max {
        let emit = if u_positive { table.minus(f, j) } else { table.plus(f, j) };
        let absorb = table.plus(j, n);
        let denom = Complex64::new(n as f64 - j as f64 - m as f64, gamma / 2.0);
        let term = emit * absorb * (gamma / 2.0) / denom;
        sum += term;
        sq_sum += term.norm_sqr();
        let mag = term.norm();
        mag_total += mag;
        if j >= tail_start {
            mag_tail += mag;
        }
    }
    if mag_tail > 1e-8 * mag_total.max(f64::MIN_POSITIVE) {
        return Err(SidebandError::JSumNotConverged { f, n, j_max });
    }
    Ok(match variant {
        ScatteringVariant::Coherent => sum.norm_sqr(),
        ScatteringVariant::SeparateProcesses => sq_sum,
    })
}

fn rate_from_table(
    table: &DisplacementTable,
    tables_3d: Option<&[DisplacementTable]>,
    f: usize,
    n: usize,
    m: u32,
    cfg: &CoolingConfig,
    variant: ScatteringVariant,
) -> Result<f64, SidebandError> {
    match cfg.emission_model {
        EmissionModel::TwoDelta => {
            let plus = amplitude_sq_at_unit_u(table, f, n, m, cfg.gamma, cfg.j_max, true, variant)?;
            let minus =
                amplitude_sq_at_unit_u(table, f, n, m, cfg.gamma, cfg.j_max, false, variant)?;
            Ok(0.5 * (plus + minus))
        }
        EmissionModel::Dipole3d => {
            // N(u) = 3/8 (1 + u²); tables_3d holds <·|e^{ikz u}|·> per |u| node
            let tables = tables_3d.expect("dipole tables prepared by caller");
            let mut total = 0.0;
            for (i, (&u, &w)) in GL16_NODES.iter().zip(&GL16_WEIGHTS).enumerate() {
                let weight = w * 0.375 * (1.0 + u * u);
                for sign in [false, true] {
                    let mut sum = Complex64::new(0.0, 0.0);
                    let mut sq_sum = 0.0;
                    for j in 0..=cfg.j_max {
                        // <f|e^{-ikzu}|j> at ±u from the per-node table
                        let emit =
                            if sign { tables[i].minus(f, j) } else { tables[i].plus(f, j) };
                        let absorb = table.plus(j, n);
                        let denom =
                            Complex64::new(n as f64 - j as f64 - f64::from(m), cfg.gamma / 2.0);
                        let term = emit * absorb * (cfg.gamma / 2.0) / denom;
                        sum += term;
                        sq_sum += term.norm_sqr();
                    }
                    let v = match variant {
                        ScatteringVariant::Coherent => sum.norm_sqr(),
                        ScatteringVariant::SeparateProcesses => sq_sum,
                    };
                    total += weight * v;
                }
            }
            Ok(total)
        }
    }
}

fn dipole_tables(cfg: &CoolingConfig) -> Result<Vec<DisplacementTable>, SidebandError> {
    GL16_NODES
        .iter()
        .map(|&u| DisplacementTable::build(cfg.eta * u, cfg.j_max + 1))
        .collect()
}

/// Rate of population transfer n -> f on the m-th red sideband, in units of
/// Ω²/Γ.
pub fn scattering_rate(f: usize, n: usize, m: u32, cfg: &CoolingConfig) -> Result<f64, SidebandError> {
    scattering_rate_variant(f, n, m, cfg, ScatteringVariant::Coherent)
}

/// Same with an explicit choice of coherent vs separate-processes treatment.
pub fn scattering_rate_variant(
    f: usize,
    n: usize,
    m: u32,
    cfg: &CoolingConfig,
    variant: ScatteringVariant,
) -> Result<f64, SidebandError> {
    cfg.validate()?;
    if f > cfg.n_max || n > cfg.n_max {
        return Err(SidebandError::LevelOutOfRange { requested: f.max(n), max: cfg.n_max });
    }
    let table = DisplacementTable::build(cfg.eta, cfg.j_max + 1)?;
    let tables_3d = match cfg.emission_model {
        EmissionModel::Dipole3d => Some(dipole_tables(cfg)?),
        EmissionModel::TwoDelta => None,
    };
    rate_from_table(&table, tables_3d.as_deref(), f, n, m, cfg, variant)
}

/// Steady state of the cooling rate equations plus solver diagnostics.
#[derive(Debug, Clone)]
pub struct CoolingOutcome {
    pub distribution: MotionalDistribution,
    /// ‖A·P‖∞ of the solved balance equations.
    pub residual: f64,
    /// Condition estimate of the solved linear system.
    pub condition: f64,
}

/// Solves the steady state of the population rate equations with combined
/// rates Γ_fn = Γ_fn(m) + α Γ_fn(1).
pub fn cooling_steady_state(cfg: &CoolingConfig) -> Result<CoolingOutcome, SidebandError> {
    cooling_steady_state_variant(cfg, ScatteringVariant::Coherent)
}

fn cooling_steady_state_variant(
    cfg: &CoolingConfig,
    variant: ScatteringVariant,
) -> Result<CoolingOutcome, SidebandError> {
    cfg.validate()?;
    let dim = cfg.n_max + 1;
    let table = DisplacementTable::build(cfg.eta, cfg.j_max + 1)?;
    let tables_3d = match cfg.emission_model {
        EmissionModel::Dipole3d => Some(dipole_tables(cfg)?),
        EmissionModel::TwoDelta => None,
    };
    let mut a = DMatrix::zeros(dim, dim);
    for n in 0..dim {
        for f in 0..dim {
            if f == n {
                continue;
            }
            let mut rate =
                rate_from_table(&table, tables_3d.as_deref(), f, n, cfg.m_sideband, cfg, variant)?;
            if cfg.alpha > 0.0 {
                rate += cfg.alpha
                    * rate_from_table(&table, tables_3d.as_deref(), f, n, 1, cfg, variant)?;
            }
            a[(f, n)] += rate;
            a[(n, n)] -= rate;
        }
    }
    let s = steady_state(&a, 1e-10)?;
    let distribution = MotionalDistribution::from_populations(s.populations.iter().copied().collect())?;
    Ok(CoolingOutcome { distribution, residual: s.residual, condition: s.condition })
}

/// Steady-state mean occupation of the single-phonon transition chain.
///
/// The n → n±1 scattering rates both scale as the larger of the two levels,
/// so detailed balance of the chain makes the distribution geometric with
/// ratio r = Γ_{1←0}/Γ_{0←1} and ⟨n⟩ = r/(1−r). On the m-th sideband with
/// resolved sidebands this approaches the optical-pumping plateau
/// (g̃_m + g̃_{m+1})/(g̃_{m−1} − g̃_{m+1}), e.g. 13/32 for m = 2 as Γ → 0. It
/// bounds the full steady state only while resonant multi-phonon channels
/// (rate ∝ η^{2m}) stay small against the off-resonant single-phonon chain
/// (∝ η²Γ² g̃); outside that regime the multi-phonon channels drain n ≥ 2
/// and the full solver settles below this value.
pub fn single_phonon_plateau(cfg: &CoolingConfig) -> Result<f64, SidebandError> {
    let combined = |f: usize, n: usize| -> Result<f64, SidebandError> {
        let mut rate = scattering_rate(f, n, cfg.m_sideband, cfg)?;
        if cfg.alpha > 0.0 {
            rate += cfg.alpha * scattering_rate(f, n, 1, cfg)?;
        }
        Ok(rate)
    };
    let up = combined(1, 0)?;
    let down = combined(0, 1)?;
    if !(down > 0.0) {
        return Err(SidebandError::NoCooling);
    }
    let r = up / down;
    if r >= 1.0 {
        return Err(SidebandError::NoCooling);
    }
    Ok(r / (1.0 - r))
}

/// Mean energy change per absorption-emission cycle, in units of
/// ħω_z × `prefactor` (the opaque Iσ₀/ħω_{+−} factor).
///
/// `delta` is the effective laser detuning in units of ω_z (−m for the m-th
/// red sideband).
pub fn energy_rate(
    dist: &MotionalDistribution,
    cfg: &CoolingConfig,
    delta: f64,
    prefactor: f64,
) -> Result<f64, SidebandError> {
    let e2 = cfg.eta * cfg.eta;
    let g2 = cfg.gamma * cfg.gamma;
    let f_top = dist.n_max() + 50;
    let table = DisplacementTable::build(cfg.eta, f_top + 1)?;
    let mut total = 0.0;
    for (n, &p) in dist.populations().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let mut inner = 0.0;
        for f in 0..=f_top {
            let i_fn = table.plus(f, n).norm_sqr();
            if i_fn == 0.0 {
                continue;
            }
            let gap = f as f64 - n as f64;
            let x = delta - gap;
            let gt = g2 / (4.0 * x * x + g2);
            inner += (gap + e2) * i_fn * gt;
        }
        total += p * inner;
    }
    Ok(prefactor * total)
}

/// The Lamb-Dicke expansion of the energy rate to order η², evaluated with
/// the printed g̃ coefficients; in the same units as [`energy_rate`] with
/// unit prefactor. Used as the small-η cross-check on the full sum.
pub fn ld_energy_rate(dist: &MotionalDistribution, cfg: &CoolingConfig, m: u32) -> f64 {
    let e2 = cfg.eta * cfg.eta;
    let gt = |k: i64| sideband_lineshape(k, cfg.gamma);
    let m = i64::from(m);
    let c0 = (gt(m) + gt(m + 1)) + e2 * (gt(m + 2) - gt(m));
    let c1 = (gt(m + 1) - gt(m - 1))
        + e2 * (gt(m - 1) - gt(m + 1) + gt(m - 2) / 2.0 - 2.0 * gt(m) + 1.5 * gt(m + 2));
    let c2 = e2 * (-gt(m - 2) / 2.0 - gt(m + 1) + gt(m - 1) + gt(m + 2) / 2.0);
    let braces: f64 = dist
        .populations()
        .iter()
        .enumerate()
        .map(|(n, &p)| {
            let nf = n as f64;
            p * (c0 + nf * c1 + nf * nf * c2)
        })
        .sum();
    e2 * braces
}

/// The two printed forms of the first-sideband Lamb-Dicke limit.
#[derive(Debug, Clone, Copy)]
pub struct FirstSidebandPrediction {
    /// ⟨n⟩ from the g̃-ratio form (the returned prediction).
    pub mean_n: f64,
    /// ⟨n⟩ from the closed form (5 − 32η²/9)/[16(1 − 2η²)] · Γ²/ω_z².
    pub closed_form: f64,
}

/// Eq.-of-detailed-balance prediction for first-sideband cooling; valid for
/// η² < 1/2 and Γ well below ω_z.
pub fn first_sideband_prediction(
    eta: f64,
    gamma_ratio: f64,
) -> Result<FirstSidebandPrediction, SidebandError> {
    let e2 = eta * eta;
    if e2 >= 0.5 {
        return Err(SidebandError::FirstSidebandPole(e2));
    }
    if !(gamma_ratio > 0.0) {
        return Err(SidebandError::BadConfig("gamma must be positive".into()));
    }
    let gt = |k: i64| sideband_lineshape(k, gamma_ratio);
    let mean_n = (gt(1) + gt(2) - e2 * (gt(1) - gt(3))) / (1.0 - 2.0 * e2);
    let closed_form =
        (5.0 - 32.0 * e2 / 9.0) / (16.0 * (1.0 - 2.0 * e2)) * gamma_ratio * gamma_ratio;
    Ok(FirstSidebandPrediction { mean_n, closed_form })
}

/// Rule-of-thumb optimum: m the smallest integer strictly larger than
/// 2η² + 0.5, and α = 1/(3η²).
pub fn optimal_parameters(eta: f64) -> Result<(u32, f64), SidebandError> {
    if !(eta > 0.0) {
        return Err(SidebandError::BadEta);
    }
    let x = 2.0 * eta * eta + 0.5;
    // strictly larger: treat near-integral x as the boundary case
    let m = if (x - x.round()).abs() < 1e-9 { x.round() + 1.0 } else { x.ceil() };
    Ok((m as u32, 1.0 / (3.0 * eta * eta)))
}

/// Refines α by maximizing P₀ at fixed m: coarse log grid around the
/// rule-of-thumb value, then golden-section on the bracketing interval.
pub fn refine_alpha(base: &CoolingConfig) -> Result<f64, SidebandError> {
    let (_, alpha0) = optimal_parameters(base.eta)?;
    let p0 = |alpha: f64| -> Result<f64, SidebandError> {
        let cfg = CoolingConfig { alpha, ..*base };
        Ok(1.0 - cooling_steady_state(&cfg)?.distribution.ground_deficit())
    };
    let n_scan = 9;
    let lo = alpha0 / 10.0;
    let hi = alpha0 * 10.0;
    let ratio = (hi / lo).powf(1.0 / (n_scan - 1) as f64);
    let alphas: Vec<f64> = (0..n_scan).map(|i| lo * ratio.powi(i as i32)).collect();
    let mut vals = Vec::with_capacity(n_scan);
    for &al in &alphas {
        vals.push(p0(al)?);
    }
    let imax = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;
    let (mut a, mut b) = (
        alphas[imax.saturating_sub(1)],
        alphas[(imax + 1).min(n_scan - 1)],
    );
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = p0(x1)?;
    let mut f2 = p0(x2)?;
    while (b - a) > 1e-2 * 0.5 * (a + b) {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = p0(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = p0(x1)?;
        }
    }
    Ok(0.5 * (a + b))
}
