//! Matrix elements <f|exp(ikz)|n> of the displacement operator between
//! harmonic-oscillator levels, evaluated by an associated-Laguerre
//! recurrence with log-magnitude rescaling so that levels up to a few
//! hundred stay finite.

use num_complex::Complex64;
use std::sync::OnceLock;

use super::SidebandError;

/// Largest oscillator index accepted before the overflow guard trips.
pub const MAX_LEVEL: usize = 1000;

fn ln_factorial(n: usize) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = vec![0.0; MAX_LEVEL + 1];
        for i in 1..=MAX_LEVEL {
            t[i] = t[i - 1] + (i as f64).ln();
        }
        t
    })[n]
}

/// Associated Laguerre polynomial L_k^a(x) as (sign, ln|L|), rescaled on
/// the fly so the recurrence never overflows.
fn laguerre_log(k: usize, a: f64, x: f64) -> (f64, f64) {
    if k == 0 {
        return (1.0, 0.0);
    }
    let mut prev = 1.0f64;
    let mut cur = 1.0 + a - x;
    let mut log_scale = 0.0f64;
    for i in 1..k {
        let i = i as f64;
        let next = ((2.0 * i + 1.0 + a - x) * cur - (i + a) * prev) / (i + 1.0);
        prev = cur;
        cur = next;
        let mag = cur.abs().max(prev.abs());
        if mag > 1e250 || (mag < 1e-250 && mag > 0.0) {
            prev /= mag;
            cur /= mag;
            log_scale += mag.ln();
        }
    }
    if cur == 0.0 {
        (0.0, f64::NEG_INFINITY)
    } else {
        (cur.signum(), log_scale + cur.abs().ln())
    }
}

/// <f|exp(i k z)|n> with k z = η(a† + a); a signed η handles exp(−ikz)
/// through the conjugation symmetry.
pub fn displacement_element(f: usize, n: usize, eta: f64) -> Result<Complex64, SidebandError> {
    if f > MAX_LEVEL || n > MAX_LEVEL {
        return Err(SidebandError::LevelOutOfRange { requested: f.max(n), max: MAX_LEVEL });
    }
    let d = f.abs_diff(n);
    if eta == 0.0 {
        return Ok(if d == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) });
    }
    let lo = f.min(n);
    let hi = f.max(n);
    let x = eta * eta;
    let (sign, ln_l) = laguerre_log(lo, d as f64, x);
    if sign == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let ln_mag = -0.5 * x
        + 0.5 * (ln_factorial(lo) - ln_factorial(hi))
        + d as f64 * eta.abs().ln()
        + ln_l;
    let mag = sign * ln_mag.exp();
    // (iη)^d phase: i^d times sign(η)^d
    let mag = if eta < 0.0 && d % 2 == 1 { -mag } else { mag };
    Ok(match d % 4 {
        0 => Complex64::new(mag, 0.0),
        1 => Complex64::new(0.0, mag),
        2 => Complex64::new(-mag, 0.0),
        _ => Complex64::new(0.0, -mag),
    })
}

/// Sideband strength I_fn = |<f|exp(ikz)|n>|².
pub fn sideband_strength(f: usize, n: usize, eta: f64) -> Result<f64, SidebandError> {
    Ok(displacement_element(f, n, eta)?.norm_sqr())
}

/// Lamb-Dicke expansion of I_fn to order η⁴; the small-η oracle for
/// [`displacement_element`]. Exactly the printed δ_{f,n}, δ_{f,n±1},
/// δ_{f,n±2} terms; zero elsewhere.
pub fn ld_expansion_ifn(f: usize, n: usize, eta: f64) -> f64 {
    let e2 = eta * eta;
    let e4 = e2 * e2;
    let nf = n as f64;
    if f == n {
        1.0 - e2 * (2.0 * nf + 1.0) + e4 / 2.0 * (3.0 * nf * nf + 3.0 * nf + 1.0)
    } else if f + 1 == n {
        e2 * nf * (1.0 - e2 * nf)
    } else if f == n + 1 {
        e2 * (nf + 1.0) * (1.0 - e2 * (nf + 1.0))
    } else if f + 2 == n {
        e4 / 4.0 * nf * (nf - 1.0)
    } else if f == n + 2 {
        e4 / 4.0 * (nf + 1.0) * (nf + 2.0)
    } else {
        0.0
    }
}

/// Cached table of <a|exp(ikz)|b> for all a, b below `dim` at fixed η ≥ 0.
#[derive(Debug, Clone)]
pub struct DisplacementTable {
    dim: usize,
    amps: Vec<Complex64>,
}

impl DisplacementTable {
    pub fn build(eta: f64, dim: usize) -> Result<Self, SidebandError> {
        let mut amps = vec![Complex64::new(0.0, 0.0); dim * dim];
        for a in 0..dim {
            for b in a..dim {
                let v = displacement_element(a, b, eta)?;
                amps[a * dim + b] = v;
                amps[b * dim + a] = v; // symmetric in (a, b)
            }
        }
        Ok(Self { dim, amps })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// <a|exp(+ikz)|b>.
    #[inline]
    pub fn plus(&self, a: usize, b: usize) -> Complex64 {
        self.amps[a * self.dim + b]
    }

    /// <a|exp(−ikz)|b> = conj(<a|exp(+ikz)|b>).
    #[inline]
    pub fn minus(&self, a: usize, b: usize) -> Complex64 {
        self.amps[a * self.dim + b].conj()
    }
}
