//! Minimum-rate power profile and excess-power allocation.
//!
//! Under the relaxed rate every user `i` reaches exactly `r_min` with
//!
//! ```text
//! ρ_{i,min} = (2^{r_min} − 1)·(Σ_{j<i} ρ_{j,min} + Ψ/λ_i)
//! ```
//!
//! Unrolling the recurrence gives the per-user closed form
//! `ρ_{i,min} = θΨ/λ_i + θ²Ψ Σ_{j<i} 2^{(i−j−1) r_min}/λ_j` and the total
//! `ρ_sum^min = θΨ Σ_{m=0}^{K−1} 2^{m r_min}/λ_{K−m}` with `θ = 2^{r_min} − 1`.
//! (The frequently quoted form of the total omits `Ψ`; it agrees only when
//! `Ψ = 1`.)
//!
//! Power above `ρ_sum^min` is tracked in a transformed domain,
//! `ρ_i^e = (Δρ_i − θ Σ_{j<i} Δρ_j)·2^{(K−i) r_min}`, in which the transformed
//! excesses always sum to the raw excess and `ρ_i^e ≥ 0` is exactly
//! `r_i ≥ r_min`. Putting all transformed excess on the strongest user
//! maximises the sum rate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rates::log2_1p;

/// Per-user SNRs that give every user exactly `r_min` under the relaxed rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinPowerProfile {
    pub r_min: f64,
    pub rho_i_min: Vec<f64>,
    pub rho_sum_min: f64,
}

impl MinPowerProfile {
    pub fn users(&self) -> usize {
        self.rho_i_min.len()
    }
}

fn check_inputs(r_min: f64, lambda: &[f64], psi: f64) -> Result<()> {
    if !(r_min >= 0.0 && r_min.is_finite()) {
        return Err(Error::InvalidInput(format!("r_min must be finite and >= 0, got {r_min}")));
    }
    if lambda.is_empty() || lambda.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidInput(format!("gains must be finite and > 0: {lambda:?}")));
    }
    if !(psi > 0.0 && psi.is_finite()) {
        return Err(Error::InvalidInput(format!("psi must be > 0, got {psi}")));
    }
    Ok(())
}

/// Closed-form minimum-power profile.
pub fn min_power_closed_form(r_min: f64, lambda: &[f64], psi: f64) -> Result<MinPowerProfile> {
    check_inputs(r_min, lambda, psi)?;
    let k = lambda.len();
    let growth = r_min.exp2();
    let theta = growth - 1.0;
    let rho_i_min = (0..k)
        .map(|i| {
            let weighted: f64 = (0..i).map(|j| growth.powi((i - j - 1) as i32) / lambda[j]).sum();
            theta * psi / lambda[i] + theta * theta * psi * weighted
        })
        .collect();
    let rho_sum_min = theta * psi * (0..k).map(|m| growth.powi(m as i32) / lambda[k - 1 - m]).sum::<f64>();
    Ok(MinPowerProfile { r_min, rho_i_min, rho_sum_min })
}

/// The forward recurrence `ρ_{i,min} = θ(Σ_{j<i} ρ_{j,min} + Ψ/λ_i)`, summed
/// directly. Kept as the reference the closed form is checked against.
pub fn min_power_recurrence_oracle(r_min: f64, lambda: &[f64], psi: f64) -> Result<MinPowerProfile> {
    check_inputs(r_min, lambda, psi)?;
    let theta = r_min.exp2() - 1.0;
    let mut rho_i_min = Vec::with_capacity(lambda.len());
    let mut acc = 0.0;
    for &l in lambda {
        let r = theta * (acc + psi / l);
        rho_i_min.push(r);
        acc += r;
    }
    Ok(MinPowerProfile { r_min, rho_i_min, rho_sum_min: acc })
}

/// Excess powers and their transformed counterparts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcessProfile {
    pub delta_rho: Vec<f64>,
    pub rho_e: Vec<f64>,
    pub n_e: Vec<f64>,
    /// Rate above `r_min` for each user.
    pub delta_r: Vec<f64>,
}

impl ExcessProfile {
    pub fn total_delta_r(&self) -> f64 {
        self.delta_r.iter().sum()
    }
}

/// Maps raw excesses `Δρ_i` to `ρ_i^e`, `n_i^e` and `Δr_i^U`.
pub fn excess_transform(
    delta_rho: &[f64],
    min_profile: &MinPowerProfile,
    lambda: &[f64],
    psi: f64,
) -> Result<ExcessProfile> {
    let k = min_profile.users();
    if delta_rho.len() != k || lambda.len() != k {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} excesses, {} gains, {} users",
            delta_rho.len(),
            lambda.len(),
            k
        )));
    }
    if delta_rho.iter().any(|d| !(*d >= 0.0)) {
        return Err(Error::InvalidInput(format!("excess powers must be >= 0: {delta_rho:?}")));
    }
    let growth = min_profile.r_min.exp2();
    let theta = growth - 1.0;

    let mut rho_e = Vec::with_capacity(k);
    let mut n_e = Vec::with_capacity(k);
    let mut delta_r = Vec::with_capacity(k);
    let mut excess_above = 0.0;
    let mut min_cum = 0.0;
    let mut rho_e_above = 0.0;
    for i in 0..k {
        let scale = growth.powi((k - 1 - i) as i32);
        min_cum += min_profile.rho_i_min[i];
        let e = (delta_rho[i] - theta * excess_above) * scale;
        let n = (psi / lambda[i] + min_cum) * scale;
        delta_r.push(log2_1p(e / (n + rho_e_above)));
        rho_e.push(e);
        n_e.push(n);
        excess_above += delta_rho[i];
        rho_e_above += e;
    }
    Ok(ExcessProfile { delta_rho: delta_rho.to_vec(), rho_e, n_e, delta_r })
}

/// Inverse of the excess transform: raw `Δρ_i` for given `ρ_i^e`.
pub fn excess_from_transformed(rho_e: &[f64], r_min: f64) -> Vec<f64> {
    let k = rho_e.len();
    let growth = r_min.exp2();
    let theta = growth - 1.0;
    let mut out = Vec::with_capacity(k);
    let mut above = 0.0;
    for (i, &e) in rho_e.iter().enumerate() {
        let d = e / growth.powi((k - 1 - i) as i32) + theta * above;
        out.push(d);
        above += d;
    }
    out
}

/// Raw excess split that puts the whole transformed excess on user 0 while
/// every other user stays exactly at `r_min`.
pub fn strongest_user_excess(rho_u: f64, min_profile: &MinPowerProfile) -> Result<Vec<f64>> {
    let excess = rho_u - min_profile.rho_sum_min;
    if excess < 0.0 {
        return Err(Error::RateInfeasible { required: min_profile.rho_sum_min, available: rho_u });
    }
    let mut rho_e = vec![0.0; min_profile.users()];
    rho_e[0] = excess;
    Ok(excess_from_transformed(&rho_e, min_profile.r_min))
}

/// `Δr_1^U = log₂(1 + (ρ_U − ρ_sum^min) λ_1 / (Ψ 2^{K r_min}))`, the largest
/// total rate above `K·r_min` reachable with unicast SNR `rho_u`.
pub fn optimal_excess_rate(rho_u: f64, min_profile: &MinPowerProfile, lambda_1: f64, psi: f64) -> Result<f64> {
    let excess = rho_u - min_profile.rho_sum_min;
    if excess < 0.0 {
        return Err(Error::RateInfeasible { required: min_profile.rho_sum_min, available: rho_u });
    }
    let k = min_profile.users() as f64;
    Ok(log2_1p(excess * lambda_1 / (psi * (k * min_profile.r_min).exp2())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::{unicast_rate_relaxed, PowerSplit};

    #[test]
    fn zero_min_rate_needs_no_power() {
        for f in [min_power_closed_form, min_power_recurrence_oracle] {
            let p = f(0.0, &[3.0, 2.0, 1.0], 1.7).unwrap();
            assert!(p.rho_i_min.iter().all(|&r| r == 0.0));
            assert_eq!(p.rho_sum_min, 0.0);
        }
    }

    #[test]
    fn two_user_hand_recurrence() {
        // θ = 1: ρ_1 = 1·(0 + 1/2) = 0.5, ρ_2 = 1·(0.5 + 1/1) = 1.5
        let o = min_power_recurrence_oracle(1.0, &[2.0, 1.0], 1.0).unwrap();
        assert_eq!(o.rho_i_min, vec![0.5, 1.5]);
        assert_eq!(o.rho_sum_min, 2.0);
        let c = min_power_closed_form(1.0, &[2.0, 1.0], 1.0).unwrap();
        assert_eq!(c.rho_i_min, vec![0.5, 1.5]);
        // (2 − 1)(2⁰/1 + 2¹/2) = 2
        assert_eq!(c.rho_sum_min, 2.0);
    }

    #[test]
    fn closed_form_scales_with_psi() {
        let a = min_power_closed_form(1.0, &[2.0, 1.0], 1.0).unwrap();
        let b = min_power_closed_form(1.0, &[2.0, 1.0], 2.5).unwrap();
        assert!((b.rho_sum_min - 2.5 * a.rho_sum_min).abs() < 1e-14);
        let o = min_power_recurrence_oracle(1.0, &[2.0, 1.0], 2.5).unwrap();
        assert!((o.rho_sum_min - b.rho_sum_min).abs() < 1e-14);
    }

    #[test]
    fn single_user_inverts_relaxed_rate() {
        let p = min_power_closed_form(0.8, &[4.0], 1.3).unwrap();
        let want = (0.8f64.exp2() - 1.0) * 1.3 / 4.0;
        assert!((p.rho_i_min[0] - want).abs() < 1e-15);
    }

    #[test]
    fn min_profile_hits_r_min_exactly() {
        let lambda = [9.0, 4.0, 2.5, 0.3];
        let psi = 1.4;
        let p = min_power_closed_form(0.6, &lambda, psi).unwrap();
        let s = PowerSplit::new(0.0, p.rho_i_min.clone()).unwrap();
        for (i, &l) in lambda.iter().enumerate() {
            let r = unicast_rate_relaxed(&s, i, l, psi).unwrap();
            assert!((r - 0.6).abs() < 1e-12, "user {i}: {r}");
        }
    }

    #[test]
    fn no_excess_means_no_extra_rate() {
        let lambda = [5.0, 2.0, 1.0];
        let p = min_power_closed_form(0.4, &lambda, 1.1).unwrap();
        let e = excess_transform(&[0.0; 3], &p, &lambda, 1.1).unwrap();
        assert!(e.delta_r.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn single_user_excess_rate() {
        let lambda = [3.0];
        let psi = 1.2;
        let p = min_power_closed_form(0.5, &lambda, psi).unwrap();
        let e = excess_transform(&[2.0], &p, &lambda, psi).unwrap();
        let want = (1.0 + 2.0 / (psi / 3.0 + p.rho_i_min[0])).log2();
        assert!((e.delta_r[0] - want).abs() < 1e-14);
    }

    #[test]
    fn transform_round_trips() {
        let rho_e = [1.5, 0.2, 0.0, 3.0];
        let d = excess_from_transformed(&rho_e, 0.7);
        let p = min_power_closed_form(0.7, &[4.0, 3.0, 2.0, 1.0], 1.0).unwrap();
        let e = excess_transform(&d, &p, &[4.0, 3.0, 2.0, 1.0], 1.0).unwrap();
        for (a, b) in e.rho_e.iter().zip(rho_e) {
            assert!((a - b).abs() < 1e-12);
        }
        let total: f64 = d.iter().sum();
        assert!((total - rho_e.iter().sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn optimal_excess_edge_cases() {
        let lambda = [6.0, 2.0];
        let p = min_power_closed_form(0.3, &lambda, 1.05).unwrap();
        assert_eq!(optimal_excess_rate(p.rho_sum_min, &p, 6.0, 1.05).unwrap(), 0.0);
        assert!(matches!(
            optimal_excess_rate(p.rho_sum_min * 0.99, &p, 6.0, 1.05),
            Err(Error::RateInfeasible { .. })
        ));

        let p = min_power_closed_form(0.0, &lambda, 1.05).unwrap();
        let r = optimal_excess_rate(4.0, &p, 6.0, 1.05).unwrap();
        assert!((r - (1.0 + 4.0 * 6.0 / 1.05f64).log2()).abs() < 1e-14);
    }

    #[test]
    fn strongest_user_split_matches_optimal_rate() {
        let lambda = [8.0, 3.0, 1.5];
        let psi = 1.25;
        let p = min_power_closed_form(0.45, &lambda, psi).unwrap();
        let rho_u = p.rho_sum_min + 3.0;
        let d = strongest_user_excess(rho_u, &p).unwrap();
        let e = excess_transform(&d, &p, &lambda, psi).unwrap();
        assert!(e.delta_r[1].abs() < 1e-12 && e.delta_r[2].abs() < 1e-12);
        let best = optimal_excess_rate(rho_u, &p, lambda[0], psi).unwrap();
        assert!((e.total_delta_r() - best).abs() < 1e-12);
    }

    #[test]
    fn length_and_sign_checks() {
        let p = min_power_closed_form(0.3, &[2.0, 1.0], 1.0).unwrap();
        assert!(excess_transform(&[1.0], &p, &[2.0, 1.0], 1.0).is_err());
        assert!(excess_transform(&[1.0, -1.0], &p, &[2.0, 1.0], 1.0).is_err());
        assert!(min_power_closed_form(-0.1, &[1.0], 1.0).is_err());
        assert!(min_power_closed_form(0.1, &[], 1.0).is_err());
        assert!(min_power_closed_form(0.1, &[1.0], 0.0).is_err());
    }
}
