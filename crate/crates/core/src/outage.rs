//! Multicast outage: closed form under Rayleigh fading, a Monte Carlo
//! estimator built on the instantaneous rate, and the unicast-power ceiling
//! that keeps every user's outage at or below the threshold.

use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{CsiCoefficients, UserGains};
use crate::error::{Error, Result};
use crate::montecarlo::stream_rng;
use crate::rates::{multicast_rate, PowerSplit};

/// Samples per independently seeded chunk in [`outage_monte_carlo`].
pub const MC_CHUNK: usize = 1 << 16;

/// Multicast target rate `R_M`, outage threshold `δ` and `θ_M = 2^{R_M} − 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MulticastQos {
    pub r_target: f64,
    pub delta_out: f64,
    pub theta: f64,
}

impl MulticastQos {
    pub fn new(r_target: f64, delta_out: f64) -> Result<Self> {
        if !(r_target >= 0.0 && r_target.is_finite()) {
            return Err(Error::InvalidInput(format!("multicast target rate must be >= 0, got {r_target}")));
        }
        if !(delta_out > 0.0 && delta_out < 1.0) {
            return Err(Error::InvalidInput(format!("outage threshold must lie in (0,1), got {delta_out}")));
        }
        Ok(Self { r_target, delta_out, theta: r_target.exp2() - 1.0 })
    }
}

/// `P_out = 1 − exp(−Ψθ_M / ((ρ_M − θ_M ρ_U) Ω_i))`.
///
/// Requires `ρ_M > θ_M ρ_U`; otherwise the multicast SINR can never reach
/// `θ_M` and the outage is 1, reported as [`Error::MulticastInfeasible`]
/// carrying the violated ceiling `ρ/2^{R_M}`.
pub fn outage_closed_form(qos: &MulticastQos, split: &PowerSplit, omega_i: f64, psi: f64) -> Result<f64> {
    let margin = split.rho_m - qos.theta * split.rho_u;
    if !(margin > 0.0) {
        return Err(Error::MulticastInfeasible { bound: split.rho / qos.r_target.exp2() });
    }
    Ok(-(-psi * qos.theta / (margin * omega_i)).exp_m1())
}

/// Fraction of `n_trials` draws `λ ~ Exp(mean Ω_i)` whose multicast rate falls
/// short of `R_M`. Draws are split into chunks of [`MC_CHUNK`]; chunk `c` uses
/// stream `c` of the generator seeded with `seed`, so the estimate does not
/// depend on the thread count.
pub fn outage_monte_carlo(
    qos: &MulticastQos,
    split: &PowerSplit,
    omega_i: f64,
    coeffs: &CsiCoefficients,
    n_trials: usize,
    seed: u64,
) -> Result<f64> {
    if n_trials == 0 {
        return Err(Error::InvalidInput("n_trials must be >= 1".into()));
    }
    if !(omega_i > 0.0) {
        return Err(Error::InvalidInput(format!("gain variance must be > 0, got {omega_i}")));
    }
    let exp = Exp::new(1.0 / omega_i).expect("omega > 0");
    let chunks = n_trials.div_ceil(MC_CHUNK);
    let outages: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = MC_CHUNK.min(n_trials - c * MC_CHUNK);
            let mut rng = stream_rng(seed, c as u64);
            (0..len)
                .filter(|_| multicast_rate(split, exp.sample(&mut rng), coeffs) < qos.r_target)
                .count() as u64
        })
        .sum();
    Ok(outages as f64 / n_trials as f64)
}

/// Ceiling on `ρ_U` from the outage requirement of every user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageBound {
    /// `min_i` of `per_user`.
    pub bound: f64,
    pub per_user: Vec<f64>,
    pub binding_user: usize,
}

/// `ρ_U ≤ Ψθ_M / (2^{R_M} Ω_i ln(1−δ)) + ρ/2^{R_M}` for every user `i`.
///
/// The first term is negative, so the weakest user binds. A non-positive
/// ceiling means no unicast power satisfies all users.
pub fn outage_power_bound(qos: &MulticastQos, omega: &UserGains, psi: f64, rho: f64) -> Result<OutageBound> {
    if !(psi > 0.0) {
        return Err(Error::InvalidInput(format!("psi must be > 0, got {psi}")));
    }
    let scale = qos.r_target.exp2();
    let log_term = (-qos.delta_out).ln_1p();
    let per_user: Vec<f64> = omega
        .as_slice()
        .iter()
        .map(|&w| psi * qos.theta / (scale * w * log_term) + rho / scale)
        .collect();
    let (binding_user, bound) = per_user
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, v)| if v < bv { (i, v) } else { (bi, bv) });
    if !(bound > 0.0) {
        return Err(Error::MulticastInfeasible { bound });
    }
    Ok(OutageBound { bound, per_user, binding_user })
}
