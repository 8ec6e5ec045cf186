//! Angular-momentum and spectroscopic primitives: level schemes,
//! Clebsch-Gordan weights, Landé factors, Zeeman shifts and lineshapes.
//!
//! All quantum numbers are carried as doubled integers so that
//! half-integer J and M stay exact; squared Clebsch-Gordan weights and
//! g factors come out as exact rationals.

use num_rational::Ratio;
use thiserror::Error;

/// μ_B/ħ in rad/s per Tesla (CODATA).
pub const BOHR_FREQUENCY_PER_TESLA: f64 = 2.0 * std::f64::consts::PI * 1.3996246e10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AtomicError {
    #[error("|M| = {twice_m}/2 exceeds J = {twice_j}/2")]
    MOutOfRange { twice_j: u32, twice_m: i32 },
    #[error("M = {twice_m}/2 is not a valid projection of J = {twice_j}/2")]
    MParity { twice_j: u32, twice_m: i32 },
    #[error("photon spherical component q = {0} must be -1, 0 or +1")]
    BadQ(i32),
    #[error("transition J = {twice_j_lower}/2 to J = {twice_j_upper}/2 is not dipole allowed")]
    NotDipole { twice_j_lower: u32, twice_j_upper: u32 },
    #[error("(L, S, J) = ({twice_l}/2, {twice_s}/2, {twice_j}/2) violates the triangle inequality")]
    BadTriangle { twice_l: u32, twice_s: u32, twice_j: u32 },
    #[error("level index {0} is not part of the scheme")]
    BadLevel(usize),
    #[error("level width must be positive, got {0}")]
    BadWidth(f64),
    #[error("magnetic field must be nonnegative, got {0}")]
    BadField(f64),
}

/// An angular momentum J stored as 2J to represent half-integers exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AngularMomentum {
    twice: u32,
}

impl AngularMomentum {
    pub const fn from_twice(twice: u32) -> Self {
        Self { twice }
    }

    pub const fn twice(self) -> u32 {
        self.twice
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.twice) / 2.0
    }

    /// Checks that 2M is a valid projection: |2M| <= 2J and same parity as 2J.
    pub fn check_twice_m(self, twice_m: i32) -> Result<(), AtomicError> {
        if twice_m.unsigned_abs() > self.twice {
            return Err(AtomicError::MOutOfRange { twice_j: self.twice, twice_m });
        }
        if (twice_m.rem_euclid(2)) != (self.twice % 2) as i32 {
            return Err(AtomicError::MParity { twice_j: self.twice, twice_m });
        }
        Ok(())
    }

    /// All valid 2M values, from -2J to +2J in steps of 2.
    pub fn twice_m_values(self) -> impl Iterator<Item = i32> {
        let tj = self.twice as i32;
        (-tj..=tj).step_by(2)
    }
}

/// Squared Clebsch-Gordan coefficient |<J_upper M_upper | J_lower M_lower; 1 q>|^2
/// for an electric-dipole (j x 1) coupling.
///
/// The normalization is fixed by population conservation: for every fixed
/// upper sublevel, the sum over q and M_lower is exactly 1.
pub fn clebsch_gordan_sq(
    j_upper: AngularMomentum,
    twice_m_upper: i32,
    j_lower: AngularMomentum,
    twice_m_lower: i32,
    q: i32,
) -> Result<Ratio<i64>, AtomicError> {
    if q.abs() > 1 {
        return Err(AtomicError::BadQ(q));
    }
    j_upper.check_twice_m(twice_m_upper)?;
    j_lower.check_twice_m(twice_m_lower)?;
    let dj = j_upper.twice() as i32 - j_lower.twice() as i32;
    // dipole selection: |dJ| <= 1 and no 0 -> 0
    if dj.abs() > 2
        || dj % 2 != 0
        || (j_upper.twice() == 0 && j_lower.twice() == 0)
    {
        return Err(AtomicError::NotDipole {
            twice_j_lower: j_lower.twice(),
            twice_j_upper: j_upper.twice(),
        });
    }
    if twice_m_upper != twice_m_lower + 2 * q {
        return Ok(Ratio::from_integer(0));
    }
    let j1 = Ratio::new(j_lower.twice() as i64, 2); // the j being coupled with the photon
    let m = Ratio::new(twice_m_upper as i64, 2); // total projection = upper M
    let one = Ratio::from_integer(1);
    let two = Ratio::from_integer(2);
    let value = match (dj, q) {
        // J_upper = j1 + 1
        (2, 1) => (j1 + m) * (j1 + m + one) / ((two * j1 + one) * (two * j1 + two)),
        (2, 0) => (j1 - m + one) * (j1 + m + one) / ((two * j1 + one) * (j1 + one)),
        (2, -1) => (j1 - m) * (j1 - m + one) / ((two * j1 + one) * (two * j1 + two)),
        // J_upper = j1
        (0, 1) => (j1 + m) * (j1 - m + one) / (two * j1 * (j1 + one)),
        (0, 0) => m * m / (j1 * (j1 + one)),
        (0, -1) => (j1 - m) * (j1 + m + one) / (two * j1 * (j1 + one)),
        // J_upper = j1 - 1
        (-2, 1) => (j1 - m) * (j1 - m + one) / (two * j1 * (two * j1 + one)),
        (-2, 0) => (j1 - m) * (j1 + m) / (j1 * (two * j1 + one)),
        (-2, -1) => (j1 + m + one) * (j1 + m) / (two * j1 * (two * j1 + one)),
        _ => unreachable!(),
    };
    Ok(value)
}

/// Landé g factor in the LS coupling approximation:
/// g = 3/2 + [S(S+1) - L(L+1)] / [2J(J+1)].
pub fn lande_g(twice_l: u32, twice_s: u32, twice_j: u32) -> Result<Ratio<i64>, AtomicError> {
    let bad = AtomicError::BadTriangle { twice_l, twice_s, twice_j };
    let lo = (twice_l as i32 - twice_s as i32).unsigned_abs();
    if twice_j < lo || twice_j > twice_l + twice_s || twice_j == 0 {
        return Err(bad);
    }
    if (twice_l + twice_s) % 2 != twice_j % 2 {
        return Err(bad);
    }
    let l = Ratio::new(twice_l as i64, 2);
    let s = Ratio::new(twice_s as i64, 2);
    let j = Ratio::new(twice_j as i64, 2);
    let one = Ratio::from_integer(1);
    Ok(Ratio::new(3, 2) + (s * (s + one) - l * (l + one)) / (Ratio::from_integer(2) * j * (j + one)))
}

/// Term labels of the five fine-structure levels, numbered 1..5 in order
/// of increasing energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    S12,
    D32,
    D52,
    P12,
    P32,
}

impl Term {
    pub fn label(self) -> &'static str {
        match self {
            Term::S12 => "S1/2",
            Term::D32 => "D3/2",
            Term::D52 => "D5/2",
            Term::P12 => "P1/2",
            Term::P32 => "P3/2",
        }
    }

    /// (2L, 2S, 2J)
    pub fn quantum_numbers(self) -> (u32, u32, u32) {
        match self {
            Term::S12 => (0, 1, 1),
            Term::D32 => (4, 1, 3),
            Term::D52 => (4, 1, 5),
            Term::P12 => (2, 1, 1),
            Term::P32 => (2, 1, 3),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Level {
    pub index: usize,
    pub term: Term,
    pub j: AngularMomentum,
    pub lande_g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decay {
    pub lower: usize,
    pub upper: usize,
    /// Partial spontaneous rate Γ_ji in rad/s.
    pub rate: f64,
}

/// The five-level scheme with its spontaneous decay-rate table.
#[derive(Debug, Clone)]
pub struct LevelScheme {
    levels: Vec<Level>,
    decays: Vec<Decay>,
}

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

impl LevelScheme {
    /// The Ca+ scheme: 1 = S1/2, 2 = D3/2, 3 = D5/2, 4 = P1/2, 5 = P3/2,
    /// with the five dipole decay rates of the 40Ca+ ion.
    pub fn ca40() -> Self {
        Self::with_decay_rates([
            TWO_PI * 20.7e6,  // Γ14
            TWO_PI * 1.69e6,  // Γ24
            TWO_PI * 21.5e6,  // Γ15
            TWO_PI * 0.177e6, // Γ25
            TWO_PI * 1.58e6,  // Γ35
        ])
    }

    /// Same level structure with custom rates [Γ14, Γ24, Γ15, Γ25, Γ35] (rad/s).
    pub fn with_decay_rates(rates: [f64; 5]) -> Self {
        let terms = [Term::S12, Term::D32, Term::D52, Term::P12, Term::P32];
        let levels = terms
            .iter()
            .enumerate()
            .map(|(i, &term)| {
                let (tl, ts, tj) = term.quantum_numbers();
                let g = lande_g(tl, ts, tj).expect("fixed terms satisfy the triangle rule");
                Level {
                    index: i + 1,
                    term,
                    j: AngularMomentum::from_twice(tj),
                    lande_g: *g.numer() as f64 / *g.denom() as f64,
                }
            })
            .collect();
        let pairs = [(1, 4), (2, 4), (1, 5), (2, 5), (3, 5)];
        let decays = pairs
            .iter()
            .zip(rates)
            .map(|(&(lower, upper), rate)| Decay { lower, upper, rate })
            .collect();
        Self { levels, decays }
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level(&self, n: usize) -> Result<&Level, AtomicError> {
        self.levels.get(n.wrapping_sub(1)).ok_or(AtomicError::BadLevel(n))
    }

    pub fn decays(&self) -> &[Decay] {
        &self.decays
    }

    /// Partial rate Γ_ji for the (lower j, upper i) pair; zero if forbidden.
    pub fn decay_rate(&self, lower: usize, upper: usize) -> f64 {
        self.decays
            .iter()
            .find(|d| d.lower == lower && d.upper == upper)
            .map_or(0.0, |d| d.rate)
    }

    pub fn dipole_allowed(&self, lower: usize, upper: usize) -> bool {
        self.decay_rate(lower, upper) > 0.0
    }

    /// Total width Γ_i = Σ_j Γ_ji; zero for ground/metastable levels.
    pub fn level_width(&self, upper: usize) -> f64 {
        self.decays.iter().filter(|d| d.upper == upper).map(|d| d.rate).sum()
    }
}

/// Static magnetic field plus the physical constant that converts it
/// to an angular frequency.
#[derive(Debug, Clone, Copy)]
pub struct FieldConfig {
    /// Field in Tesla, >= 0.
    pub b: f64,
    /// μ_B/ħ in rad/s per Tesla.
    pub bohr_frequency: f64,
}

impl FieldConfig {
    pub fn new(b: f64) -> Result<Self, AtomicError> {
        if !(b >= 0.0) {
            return Err(AtomicError::BadField(b));
        }
        Ok(Self { b, bohr_frequency: BOHR_FREQUENCY_PER_TESLA })
    }

    /// μ_B B/ħ in rad/s.
    pub fn splitting(&self) -> f64 {
        self.bohr_frequency * self.b
    }
}

/// One Zeeman sublevel, addressed by level index and 2M.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Sublevel {
    pub level: usize,
    pub twice_m: i32,
}

impl Sublevel {
    pub const fn new(level: usize, twice_m: i32) -> Self {
        Self { level, twice_m }
    }
}

/// Zeeman shift (g_u M_u - g_l M_l) μ_B B/ħ of a transition, in rad/s.
pub fn zeeman_shift(
    scheme: &LevelScheme,
    upper: Sublevel,
    lower: Sublevel,
    field: &FieldConfig,
) -> Result<f64, AtomicError> {
    let up = scheme.level(upper.level)?;
    let lo = scheme.level(lower.level)?;
    up.j.check_twice_m(upper.twice_m)?;
    lo.j.check_twice_m(lower.twice_m)?;
    let gm = up.lande_g * upper.twice_m as f64 / 2.0 - lo.lande_g * lower.twice_m as f64 / 2.0;
    Ok(gm * field.splitting())
}

/// Detuning of one Zeeman component relative to the component the laser is
/// locked to, in rad/s.
pub fn zeeman_detuning(
    scheme: &LevelScheme,
    pair: (Sublevel, Sublevel),
    reference: (Sublevel, Sublevel),
    field: &FieldConfig,
) -> Result<f64, AtomicError> {
    Ok(zeeman_shift(scheme, pair.0, pair.1, field)?
        - zeeman_shift(scheme, reference.0, reference.1, field)?)
}

/// Lorentzian lineshape of a level of width Γ.
///
/// Unnormalized: g(δ) = (Γ/2π)/(δ² + Γ²/4), a rate density with unit area.
/// Normalized: g̃(δ) = g·Γ·π/2 = Γ²/(4δ² + Γ²), so that g̃(0) = 1.
pub fn lineshape(delta: f64, width: f64, normalized: bool) -> Result<f64, AtomicError> {
    if !(width > 0.0) {
        return Err(AtomicError::BadWidth(width));
    }
    let g = (width / TWO_PI) / (delta * delta + width * width / 4.0);
    Ok(if normalized { g * width * std::f64::consts::PI / 2.0 } else { g })
}

/// g̃_m = Γ²/(4m²ω_z² + Γ²), with Γ given in units of ω_z.
pub fn sideband_lineshape(m: i64, gamma_over_omega: f64) -> f64 {
    let g2 = gamma_over_omega * gamma_over_omega;
    g2 / (4.0 * (m * m) as f64 + g2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn am(twice: u32) -> AngularMomentum {
        AngularMomentum::from_twice(twice)
    }

    #[test]
    fn cg_stretched_is_one() {
        // (3/2, 3/2 | 1/2, 1/2; q=+1)
        let c = clebsch_gordan_sq(am(3), 3, am(1), 1, 1).unwrap();
        assert_eq!(c, Ratio::from_integer(1));
    }

    #[test]
    fn cg_one_third() {
        // (3/2, 1/2 | 1/2, -1/2; q=+1) drives the off component of the 394 nm line
        let c = clebsch_gordan_sq(am(3), 1, am(1), -1, 1).unwrap();
        assert_eq!(c, Ratio::new(1, 3));
    }

    #[test]
    fn cg_two_thirds() {
        // complement of the 1/3 case under the per-upper-sublevel normalization
        let c = clebsch_gordan_sq(am(3), 1, am(1), 1, 0).unwrap();
        assert_eq!(c, Ratio::new(2, 3));
    }

    #[test]
    fn cg_vanishes_off_selection_rule() {
        let c = clebsch_gordan_sq(am(3), 3, am(1), 1, 0).unwrap();
        assert_eq!(c, Ratio::from_integer(0));
    }

    #[test]
    fn cg_domain_errors() {
        assert!(clebsch_gordan_sq(am(3), 5, am(1), 1, 1).is_err());
        assert!(clebsch_gordan_sq(am(3), 1, am(1), 1, 2).is_err());
        // 5/2 -> 1/2 is not dipole allowed
        assert!(clebsch_gordan_sq(am(1), 1, am(5), 1, 0).is_err());
    }

    #[test]
    fn cg_normalization_exact_for_scheme_pairs() {
        // every dipole pair of the Ca+ scheme: sum over q and lower M is 1
        let scheme = LevelScheme::ca40();
        for d in scheme.decays() {
            let ju = scheme.level(d.upper).unwrap().j;
            let jl = scheme.level(d.lower).unwrap().j;
            for tm_u in ju.twice_m_values() {
                let mut total = Ratio::from_integer(0);
                for q in -1..=1 {
                    let tm_l = tm_u - 2 * q;
                    if jl.check_twice_m(tm_l).is_ok() {
                        total += clebsch_gordan_sq(ju, tm_u, jl, tm_l, q).unwrap();
                    }
                }
                assert_eq!(total, Ratio::from_integer(1), "pair {}-{} M={}", d.lower, d.upper, tm_u);
            }
        }
    }

    #[test]
    fn lande_values_exact() {
        assert_eq!(lande_g(0, 1, 1).unwrap(), Ratio::from_integer(2)); // S1/2
        assert_eq!(lande_g(2, 1, 1).unwrap(), Ratio::new(2, 3)); // P1/2
        assert_eq!(lande_g(2, 1, 3).unwrap(), Ratio::new(4, 3)); // P3/2
        assert_eq!(lande_g(4, 1, 3).unwrap(), Ratio::new(4, 5)); // D3/2
        assert_eq!(lande_g(4, 1, 5).unwrap(), Ratio::new(6, 5)); // D5/2
    }

    #[test]
    fn lande_triangle_error() {
        assert!(lande_g(0, 1, 3).is_err());
        assert!(lande_g(2, 1, 0).is_err());
    }

    #[test]
    fn zeeman_reference_vs_itself_is_zero() {
        let scheme = LevelScheme::ca40();
        let field = FieldConfig::new(0.01).unwrap();
        let refpair = (Sublevel::new(5, 3), Sublevel::new(1, 1));
        assert_eq!(zeeman_detuning(&scheme, refpair, refpair, &field).unwrap(), 0.0);
    }

    #[test]
    fn zeeman_off_component_is_two_thirds() {
        // S1/2,-1/2 <-> P3/2,+1/2 relative to the stretched lock component
        let scheme = LevelScheme::ca40();
        let field = FieldConfig::new(0.05).unwrap();
        let pair = (Sublevel::new(5, 1), Sublevel::new(1, -1));
        let refpair = (Sublevel::new(5, 3), Sublevel::new(1, 1));
        let d = zeeman_detuning(&scheme, pair, refpair, &field).unwrap();
        assert_relative_eq!(d, 2.0 / 3.0 * field.splitting(), max_relative = 1e-14);
    }

    #[test]
    fn zeeman_zero_field() {
        let scheme = LevelScheme::ca40();
        let field = FieldConfig::new(0.0).unwrap();
        let pair = (Sublevel::new(4, 1), Sublevel::new(1, -1));
        let refpair = (Sublevel::new(4, -1), Sublevel::new(2, -3));
        assert_eq!(zeeman_detuning(&scheme, pair, refpair, &field).unwrap(), 0.0);
    }

    #[test]
    fn lineshape_values() {
        let gamma = 1.7e8;
        assert_relative_eq!(lineshape(0.0, gamma, true).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(
            lineshape(0.0, gamma, false).unwrap(),
            2.0 / (std::f64::consts::PI * gamma),
            max_relative = 1e-14
        );
        assert!(lineshape(1.0, 0.0, false).is_err());
        assert!(lineshape(1.0, -1.0, true).is_err());
    }

    #[test]
    fn sideband_lineshape_value() {
        // g̃_2 at Γ = 0.1 ω_z
        assert_relative_eq!(sideband_lineshape(2, 0.1), 0.01 / 16.01, max_relative = 1e-14);
        assert_eq!(sideband_lineshape(0, 0.3), 1.0);
        // symmetric in the index
        assert_eq!(sideband_lineshape(-3, 0.2), sideband_lineshape(3, 0.2));
    }

    #[test]
    fn lorentzian_unit_area() {
        // adaptive Simpson quadrature, independent of the closed form
        fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                simpson(f, a, m, fa, flm, fm, tol / 2.0, depth - 1)
                    + simpson(f, m, b, fm, frm, fb, tol / 2.0, depth - 1)
            }
        }
        let gamma = 2.0 * std::f64::consts::PI * 21.5e6;
        let f = |d: f64| lineshape(d, gamma, false).unwrap();
        let span = 1.0e7 * gamma;
        let area = simpson(&f, -span, 0.0, f(-span), f(-span / 2.0), f(0.0), 1e-9, 48)
            + simpson(&f, 0.0, span, f(0.0), f(span / 2.0), f(span), 1e-9, 48);
        assert!((area - 1.0).abs() < 1e-6, "area = {area}");
    }

    #[test]
    fn scheme_rates_and_widths() {
        let scheme = LevelScheme::ca40();
        assert_relative_eq!(scheme.decay_rate(1, 4), TWO_PI * 20.7e6);
        assert_relative_eq!(scheme.decay_rate(3, 5), TWO_PI * 1.58e6);
        assert_eq!(scheme.decay_rate(3, 4), 0.0);
        assert_relative_eq!(scheme.level_width(5), TWO_PI * (21.5e6 + 0.177e6 + 1.58e6));
        assert_eq!(scheme.level_width(1), 0.0);
        assert_eq!(scheme.level_width(3), 0.0);
        assert_eq!(scheme.level(1).unwrap().lande_g, 2.0);
        assert!(scheme.level(6).is_err());
        assert!(scheme.level(0).is_err());
    }

    proptest! {
        #[test]
        fn cg_normalization_random(tj_lower in 0u32..8, dj in -1i32..=1) {
            let tj_upper = tj_lower as i32 + 2 * dj;
            prop_assume!(tj_upper >= 0 && !(tj_upper == 0 && tj_lower == 0));
            let ju = am(tj_upper as u32);
            let jl = am(tj_lower);
            for tm_u in ju.twice_m_values() {
                let mut total = Ratio::from_integer(0);
                for q in -1..=1 {
                    let tm_l = tm_u - 2 * q;
                    if jl.check_twice_m(tm_l).is_ok() {
                        total += clebsch_gordan_sq(ju, tm_u, jl, tm_l, q).unwrap();
                    }
                }
                prop_assert_eq!(total, Ratio::from_integer(1));
            }
        }

        #[test]
        fn lineshape_even(delta in -1.0e9f64..1.0e9, width in 1.0e3f64..1.0e9) {
            let a = lineshape(delta, width, false).unwrap();
            let b = lineshape(-delta, width, false).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
