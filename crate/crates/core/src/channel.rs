//! Vehicular link physics: Jakes temporal correlation, imperfect-CSI
//! coefficients and Rayleigh power-gain sampling.
//!
//! The true channel is modelled as a weighted sum of the estimate `ĥ` and an
//! independent estimation error `ε`:
//!
//! ```text
//! AsWritten:  h = sqrt(1 - φ²)·ĥ + φ·ε
//! Swapped:    h = φ·ĥ + sqrt(1 - φ²)·ε
//! ```
//!
//! with `φ = J₀(2π f_c v τ / c)`. Every downstream rate and outage formula
//! only sees the normalised coefficients `a`, `b` and `Ψ = ρ·b + a`, so the
//! convention switch is confined to [`csi_coefficients`].

use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::montecarlo::stream_rng;

/// Speed of light in vacuum, m/s (exact SI value).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Largest |x| for which [`bessel_j0`] uses the power series.
pub const BESSEL_SERIES_LIMIT: f64 = 12.0;

const SERIES_REL_TOL: f64 = 1e-18;

/// Zeroth-order Bessel function of the first kind.
///
/// For `|x| ≤ 12` this sums `Σ (−x²/4)^k / (k!)²` until a term falls below
/// `1e-18` relative to the running sum (absolute error ≤ 1e-12 on that
/// range). Beyond it the Hankel asymptotic expansion is summed up to its
/// smallest term, which is accurate to roughly machine precision for
/// `|x| > 12`.
///
/// ```
/// use noma_cache_opt::channel::bessel_j0;
/// assert_eq!(bessel_j0(0.0).unwrap(), 1.0);
/// assert!(bessel_j0(2.404825557695773).unwrap().abs() < 1e-9);
/// ```
pub fn bessel_j0(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("bessel_j0 needs a finite argument, got {x}")));
    }
    let x = x.abs();
    if x <= BESSEL_SERIES_LIMIT {
        Ok(j0_series(x))
    } else {
        Ok(j0_asymptotic(x))
    }
}

fn j0_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * kf);
        sum += term;
        if term.abs() <= SERIES_REL_TOL * sum.abs() || term == 0.0 {
            break;
        }
    }
    sum
}

fn j0_asymptotic(x: f64) -> f64 {
    // Hankel expansion: a_k = Π_{m=1..k} (−(2m−1)²) / (k! 8^k), term_k = a_k / x^k.
    // P collects even k with alternating sign, Q odd k.
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        term *= -odd * odd / (k as f64 * 8.0 * x);
        if term.abs() >= prev {
            break;
        }
        prev = term.abs();
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q += sign * term;
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - std::f64::consts::FRAC_PI_4;
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Which of estimate/error carries the `sqrt(1 − φ²)` weight.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsiConvention {
    /// `h = sqrt(1 − φ²)·ĥ + φ·ε`, the error model exactly as printed.
    #[default]
    AsWritten,
    /// `h = φ·ĥ + sqrt(1 − φ²)·ε`, the usual Gauss–Markov form.
    Swapped,
}

/// Physical parameters of the vehicular link together with the derived
/// temporal correlation `φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    pub carrier_hz: f64,
    pub speed_mps: f64,
    pub slot_gap_s: f64,
    pub omega_eps: f64,
    pub convention: CsiConvention,
    phi: f64,
}

impl ChannelParams {
    pub fn new(
        carrier_hz: f64,
        speed_mps: f64,
        slot_gap_s: f64,
        omega_eps: f64,
        convention: CsiConvention,
    ) -> Result<Self> {
        if !(carrier_hz > 0.0 && carrier_hz.is_finite()) {
            return Err(Error::InvalidInput(format!("carrier frequency must be > 0, got {carrier_hz}")));
        }
        if !(speed_mps >= 0.0 && speed_mps.is_finite()) {
            return Err(Error::InvalidInput(format!("speed must be >= 0, got {speed_mps}")));
        }
        if !(slot_gap_s > 0.0 && slot_gap_s.is_finite()) {
            return Err(Error::InvalidInput(format!("slot gap must be > 0, got {slot_gap_s}")));
        }
        if !(omega_eps >= 0.0 && omega_eps.is_finite()) {
            return Err(Error::InvalidInput(format!("error variance must be >= 0, got {omega_eps}")));
        }
        let phi = bessel_j0(doppler_argument(carrier_hz, speed_mps, slot_gap_s))?;
        Ok(Self { carrier_hz, speed_mps, slot_gap_s, omega_eps, convention, phi })
    }

    /// Temporal correlation coefficient `φ`.
    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn coefficients(&self, rho: f64) -> Result<CsiCoefficients> {
        csi_coefficients(self.phi, self.omega_eps, rho, self.convention)
    }
}

fn doppler_argument(carrier_hz: f64, speed_mps: f64, slot_gap_s: f64) -> f64 {
    2.0 * std::f64::consts::PI * carrier_hz * speed_mps * slot_gap_s / SPEED_OF_LIGHT
}

/// `φ = J₀(2π f_c v τ / c)`.
pub fn jakes_phi(params: &ChannelParams) -> Result<f64> {
    bessel_j0(doppler_argument(params.carrier_hz, params.speed_mps, params.slot_gap_s))
}

/// Normalised imperfect-CSI terms. `psi` is tied to the total SNR it was
/// computed for; it does not depend on how that SNR is split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsiCoefficients {
    pub a: f64,
    pub b: f64,
    pub psi: f64,
}

impl CsiCoefficients {
    /// Perfect CSI with unit noise: `a = 1`, `b = 0`, `Ψ = 1`.
    pub fn perfect() -> Self {
        Self { a: 1.0, b: 0.0, psi: 1.0 }
    }

    /// Builds coefficients directly from `a` and `b` for total SNR `rho`.
    pub fn from_ab(a: f64, b: f64, rho: f64) -> Result<Self> {
        if !(a > 0.0 && b >= 0.0 && rho >= 0.0) || !(a.is_finite() && b.is_finite() && rho.is_finite()) {
            return Err(Error::InvalidInput(format!("need a > 0, b >= 0, rho >= 0 (a={a}, b={b}, rho={rho})")));
        }
        Ok(Self { a, b, psi: rho * b + a })
    }

    /// `Ψ` re-evaluated at another total SNR.
    pub fn psi_at(&self, rho: f64) -> f64 {
        rho * self.b + self.a
    }
}

/// Computes `a`, `b` and `Ψ = ρ·b + a` for the chosen error-weight convention.
pub fn csi_coefficients(
    phi: f64,
    omega_eps: f64,
    rho: f64,
    convention: CsiConvention,
) -> Result<CsiCoefficients> {
    if !phi.is_finite() || phi.abs() > 1.0 {
        return Err(Error::Domain(format!("phi must lie in [-1, 1], got {phi}")));
    }
    if !(omega_eps >= 0.0) || !(rho >= 0.0) {
        return Err(Error::InvalidInput(format!("need omega_eps >= 0 and rho >= 0 (got {omega_eps}, {rho})")));
    }
    let phi2 = phi * phi;
    let (a, b) = match convention {
        CsiConvention::AsWritten => {
            let w = 1.0 - phi2;
            if w <= 0.0 {
                return Err(Error::Domain("|phi| = 1 leaves no estimate weight under AsWritten".into()));
            }
            (1.0 / w, phi2 * omega_eps / w)
        }
        CsiConvention::Swapped => {
            if phi2 == 0.0 {
                return Err(Error::Domain("phi = 0 leaves no estimate weight under Swapped".into()));
            }
            (1.0 / phi2, (1.0 - phi2) * omega_eps / phi2)
        }
    };
    Ok(CsiCoefficients { a, b, psi: rho * b + a })
}

/// Average power gains `Ω_i`, strongest user first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct UserGains(Vec<f64>);

impl UserGains {
    pub fn new(omega: Vec<f64>) -> Result<Self> {
        if omega.is_empty() {
            return Err(Error::InvalidInput("at least one user is required".into()));
        }
        if omega.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidInput(format!("gains must be finite and > 0: {omega:?}")));
        }
        if omega.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput(format!("gains must be sorted non-increasing: {omega:?}")));
        }
        Ok(Self(omega))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Weakest user's gain `Ω_K`.
    pub fn weakest(&self) -> f64 {
        *self.0.last().expect("non-empty by construction")
    }
}

impl TryFrom<Vec<f64>> for UserGains {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<UserGains> for Vec<f64> {
    fn from(g: UserGains) -> Self {
        g.0
    }
}

/// Exponential draws of `λ_i = |ĥ_i|²`, one column per user.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSamples {
    columns: Vec<Vec<f64>>,
}

impl GainSamples {
    pub fn users(&self) -> usize {
        self.columns.len()
    }

    pub fn trials(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, user: usize) -> &[f64] {
        &self.columns[user]
    }

    /// The realisation of trial `t` across all users.
    pub fn row(&self, t: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[t]).collect()
    }
}

/// Draws `n_trials` independent `Exp(mean = Ω_i)` samples per user. Column `i`
/// uses stream `i` of the seeded generator, so columns are reproducible
/// independently of each other.
pub fn sample_gains(gains: &UserGains, seed: u64, n_trials: usize) -> Result<GainSamples> {
    if n_trials == 0 {
        return Err(Error::InvalidInput("n_trials must be >= 1".into()));
    }
    let columns = gains
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, &omega)| {
            let exp = Exp::new(1.0 / omega).expect("omega > 0 by construction");
            let mut rng = stream_rng(seed, i as u64);
            (0..n_trials).map(|_| exp.sample(&mut rng)).collect()
        })
        .collect();
    Ok(GainSamples { columns })
}
