//! Instantaneous multicast/unicast rates under superposition coding with SIC,
//! the relaxed unicast rate used by the optimizer, and a time-division OMA
//! baseline.
//!
//! Users are indexed from 0 in decoding order: user 0 has the strongest
//! average gain. User `i` removes the multicast layer and the layers of all
//! weaker users `j > i`, so its own layer sees interference from `j < i`.
//! All rates are in bit/s/Hz.

use serde::{Deserialize, Serialize};

use crate::channel::CsiCoefficients;
use crate::error::{Error, Result};
use crate::outage::MulticastQos;

/// `log₂(1 + x)` computed through `ln_1p` so small SINRs keep full precision.
#[inline]
pub fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

/// Transmit SNRs: `ρ = ρ_M + ρ_U` and `ρ_U = Σ ρ_i`.
///
/// `rho_i` may be empty when only the multicast/unicast split matters
/// (outage evaluation); it is otherwise one entry per user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSplit {
    pub rho: f64,
    pub rho_m: f64,
    pub rho_u: f64,
    pub rho_i: Vec<f64>,
}

const SPLIT_REL_TOL: f64 = 1e-9;

impl PowerSplit {
    /// Split with explicit per-user unicast SNRs; `ρ_U = Σ ρ_i`, `ρ = ρ_M + ρ_U`.
    pub fn new(rho_m: f64, rho_i: Vec<f64>) -> Result<Self> {
        if !(rho_m >= 0.0 && rho_m.is_finite()) || rho_i.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "SNRs must be finite and >= 0 (rho_m={rho_m}, rho_i={rho_i:?})"
            )));
        }
        let rho_u: f64 = rho_i.iter().sum();
        Ok(Self { rho: rho_m + rho_u, rho_m, rho_u, rho_i })
    }

    /// Only the multicast/unicast split, with `ρ_M = ρ − ρ_U`.
    pub fn aggregate(rho: f64, rho_u: f64) -> Result<Self> {
        if !(rho >= 0.0 && rho.is_finite()) || !(0.0..=rho).contains(&rho_u) {
            return Err(Error::InvalidInput(format!("need 0 <= rho_u <= rho (rho={rho}, rho_u={rho_u})")));
        }
        Ok(Self { rho, rho_m: rho - rho_u, rho_u, rho_i: Vec::new() })
    }

    /// Converts watts to SNRs: `ρ_M = β_M P/Ω₀`, `ρ_i = β_U P_i/Ω₀` with
    /// `β_U = 1 − β_M`. `user_watts` are the `P_i` and must sum to `P`.
    pub fn from_watts(p_watts: f64, noise_watts: f64, beta_m: f64, user_watts: &[f64]) -> Result<Self> {
        if !(p_watts > 0.0 && noise_watts > 0.0) || !(0.0..=1.0).contains(&beta_m) {
            return Err(Error::InvalidInput(format!(
                "need P > 0, noise > 0, beta_m in [0,1] (P={p_watts}, noise={noise_watts}, beta_m={beta_m})"
            )));
        }
        let total: f64 = user_watts.iter().sum();
        if (total - p_watts).abs() > SPLIT_REL_TOL * p_watts {
            return Err(Error::InvalidInput(format!("per-user powers sum to {total}, expected {p_watts}")));
        }
        let beta_u = 1.0 - beta_m;
        let rho_i = user_watts.iter().map(|p| beta_u * p / noise_watts).collect();
        Self::new(beta_m * p_watts / noise_watts, rho_i)
    }

    pub fn users(&self) -> usize {
        self.rho_i.len()
    }

    fn user(&self, i: usize) -> Result<f64> {
        self.rho_i
            .get(i)
            .copied()
            .ok_or(Error::UserIndex { index: i, users: self.rho_i.len() })
    }

    fn interference_above(&self, i: usize) -> f64 {
        self.rho_i[..i].iter().sum()
    }
}

/// Per-user rates for one realisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateVector {
    pub r_m: Vec<f64>,
    pub r_u: Vec<f64>,
}

impl RateVector {
    pub fn unicast_sum(&self) -> f64 {
        self.r_u.iter().sum()
    }
}

/// Multicast rate at a user with gain `lambda`: `log₂(1 + ρ_M λ / (ρ_U λ + Ψ))`.
pub fn multicast_rate(split: &PowerSplit, lambda: f64, coeffs: &CsiCoefficients) -> f64 {
    log2_1p(split.rho_m * lambda / (split.rho_u * lambda + coeffs.psi))
}

/// Exact unicast rate of user `i` after SIC:
/// `log₂(1 + ρ_i λ / (Σ_{j<i} ρ_j λ + Σ_{j≤i} ρ_j b + a))`.
pub fn unicast_rate_exact(split: &PowerSplit, i: usize, lambda: f64, coeffs: &CsiCoefficients) -> Result<f64> {
    let own = split.user(i)?;
    let above = split.interference_above(i);
    // Error term grouped as in Ψ = ρb + a so the two rates round consistently.
    let denom = above * lambda + ((above + own) * coeffs.b + coeffs.a);
    Ok(log2_1p(own * lambda / denom))
}

/// Relaxed unicast rate: the CSI-error part of the denominator is replaced
/// by the constant `Ψ`, which never underestimates it.
pub fn unicast_rate_relaxed(split: &PowerSplit, i: usize, lambda: f64, psi: f64) -> Result<f64> {
    let own = split.user(i)?;
    let above = split.interference_above(i);
    Ok(log2_1p(own * lambda / (above * lambda + psi)))
}

/// Exact multicast and unicast rates for every user.
pub fn noma_rates(split: &PowerSplit, lambda: &[f64], coeffs: &CsiCoefficients) -> Result<RateVector> {
    if lambda.len() != split.users() {
        return Err(Error::InvalidInput(format!(
            "{} gains for {} users",
            lambda.len(),
            split.users()
        )));
    }
    let r_m = lambda.iter().map(|&l| multicast_rate(split, l, coeffs)).collect();
    let r_u = lambda
        .iter()
        .enumerate()
        .map(|(i, &l)| unicast_rate_exact(split, i, l, coeffs))
        .collect::<Result<_>>()?;
    Ok(RateVector { r_m, r_u })
}

/// Inputs to the time-division baseline.
#[derive(Debug, Clone)]
pub struct OmaRequest<'a> {
    pub rho: f64,
    /// Gains the unicast rates are evaluated at.
    pub lambda: &'a [f64],
    /// Average gains `Ω_i`, used for the multicast outage requirement.
    pub omega: &'a [f64],
    pub coeffs: CsiCoefficients,
    pub qos: MulticastQos,
    pub r_min: f64,
    /// Upper limit on the unicast sum rate (backhaul ceiling); `f64::INFINITY` for none.
    pub rate_ceiling: f64,
}

/// Outcome of the OMA baseline. `alpha_m + Σ alpha_i + idle = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmaSchedule {
    pub alpha_m: f64,
    pub alpha_i: Vec<f64>,
    pub idle: f64,
    pub rates: RateVector,
}

impl OmaSchedule {
    pub fn unicast_sum(&self) -> f64 {
        self.rates.unicast_sum()
    }
}

/// Time-division baseline: every slot uses the full SNR `ρ` with no
/// superposition. The multicast slot gets the smallest fraction meeting the
/// outage threshold for all users, each user the smallest fraction meeting
/// `r_min`, and the remaining time goes to the strongest user (lowest index
/// on ties), capped so the unicast sum stays within `rate_ceiling`.
pub fn oma_rates(req: &OmaRequest<'_>) -> Result<OmaSchedule> {
    let k = req.lambda.len();
    if k == 0 || req.omega.len() != k {
        return Err(Error::InvalidInput("OMA needs matching, non-empty gain vectors".into()));
    }
    let psi = req.coeffs.psi;
    let rho = req.rho;

    // Outage of x_M with slot fraction α: 1 − exp(−Ψ(2^{R_M/α} − 1)/(ρΩ)) ≤ δ.
    let alpha_m = if req.qos.r_target == 0.0 {
        0.0
    } else {
        let omega_min = req.omega.iter().copied().fold(f64::INFINITY, f64::min);
        let cap = log2_1p(-rho * omega_min * (1.0 - req.qos.delta_out).ln() / psi);
        req.qos.r_target / cap
    };

    let capacity: Vec<f64> = req.lambda.iter().map(|&l| log2_1p(rho * l / psi)).collect();
    let mut alpha_i: Vec<f64> = capacity.iter().map(|&c| req.r_min / c).collect();
    let used = alpha_m + alpha_i.iter().sum::<f64>();
    if !(used <= 1.0 + 1e-12) {
        return Err(Error::OmaInfeasible { fraction_sum: used });
    }
    let base_sum = req.r_min * k as f64;
    if base_sum > req.rate_ceiling {
        return Err(Error::BackhaulInfeasible { r_eff: req.rate_ceiling, required: base_sum });
    }

    let strongest = req
        .lambda
        .iter()
        .enumerate()
        .fold(0, |best, (i, &l)| if l > req.lambda[best] { i } else { best });
    let leftover = (1.0 - used).max(0.0);
    let extra_rate = (leftover * capacity[strongest]).min(req.rate_ceiling - base_sum);
    let extra_time = extra_rate / capacity[strongest];
    alpha_i[strongest] += extra_time;
    let idle = leftover - extra_time;

    let r_u = alpha_i.iter().zip(&capacity).map(|(a, c)| a * c).collect();
    let r_m_full: Vec<f64> = req.lambda.iter().map(|&l| alpha_m * log2_1p(rho * l / psi)).collect();
    Ok(OmaSchedule { alpha_m, alpha_i, idle, rates: RateVector { r_m: r_m_full, r_u } })
}
