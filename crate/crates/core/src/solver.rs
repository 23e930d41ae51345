//! Power/cache optimisation: the fixed-cache power sub-problem, the
//! fixed-power cache sub-problem ([`crate::cache::solve_p5`]) and the
//! alternating loop between them.
//!
//! With all transformed excess on the strongest user the objective is
//! `obj(ρ_U) = K·r_min + log₂(1 + (ρ_U − ρ_sum^min) λ_1 / (Ψ 2^{K r_min}))`,
//! strictly increasing in `ρ_U`. The power sub-problem therefore reduces to
//! taking the smallest of three ceilings on `ρ_U`: the outage bound, the
//! backhaul bound and `ρ` itself.

use serde::{Deserialize, Serialize};

use crate::cache::{solve_p5, Catalog, CachePolicy};
use crate::channel::{CsiCoefficients, UserGains};
use crate::error::{Error, Result};
use crate::outage::{outage_closed_form, outage_power_bound, MulticastQos};
use crate::power::{min_power_closed_form, optimal_excess_rate, strongest_user_excess, MinPowerProfile};
use crate::rates::{oma_rates, OmaRequest, OmaSchedule, PowerSplit};

/// One fully specified optimisation problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub gains: UserGains,
    /// Gains the rates are evaluated at; the average gains by default.
    pub lambda: Vec<f64>,
    pub coeffs: CsiCoefficients,
    pub qos: MulticastQos,
    pub r_min: f64,
    pub rho: f64,
    pub catalog: Catalog,
    /// Cache capacity `N` in files.
    pub capacity: f64,
    /// Backhaul capacity `R` in bit/s/Hz.
    pub backhaul: f64,
}

impl ProblemInstance {
    /// Instance that evaluates rates at the average gains `λ_i = Ω_i`.
    #[allow(clippy::too_many_arguments)]
    pub fn nominal(
        gains: UserGains,
        coeffs: CsiCoefficients,
        qos: MulticastQos,
        r_min: f64,
        rho: f64,
        catalog: Catalog,
        capacity: f64,
        backhaul: f64,
    ) -> Result<Self> {
        let lambda = gains.as_slice().to_vec();
        let inst = Self { gains, lambda, coeffs, qos, r_min, rho, catalog, capacity, backhaul };
        inst.validate()?;
        Ok(inst)
    }

    /// Same problem evaluated at another gain realisation.
    pub fn with_lambda(&self, lambda: Vec<f64>) -> Result<Self> {
        let inst = Self { lambda, ..self.clone() };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.gains.len();
        if self.lambda.len() != k {
            return Err(Error::InvalidInput(format!("{} gains for {k} users", self.lambda.len())));
        }
        if self.lambda.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidInput(format!("gain realisation must be > 0: {:?}", self.lambda)));
        }
        if !(self.r_min >= 0.0 && self.r_min.is_finite()) {
            return Err(Error::InvalidInput(format!("r_min must be >= 0, got {}", self.r_min)));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidInput(format!("rho must be > 0, got {}", self.rho)));
        }
        if !(self.capacity >= 0.0) || !(self.backhaul >= 0.0) {
            return Err(Error::InvalidInput("cache capacity and backhaul must be >= 0".into()));
        }
        let psi = self.coeffs.psi_at(self.rho);
        if (psi - self.coeffs.psi).abs() > 1e-9 * psi {
            return Err(Error::InvalidInput(format!(
                "psi {} was not computed for rho {}",
                self.coeffs.psi, self.rho
            )));
        }
        Ok(())
    }

    pub fn users(&self) -> usize {
        self.gains.len()
    }

    pub fn min_profile(&self) -> Result<MinPowerProfile> {
        min_power_closed_form(self.r_min, &self.lambda, self.coeffs.psi)
    }

    /// `K·r_min + Δr_1^U(ρ_U)`.
    pub fn objective(&self, rho_u: f64) -> Result<f64> {
        let profile = self.min_profile()?;
        self.objective_with(&profile, rho_u)
    }

    fn objective_with(&self, profile: &MinPowerProfile, rho_u: f64) -> Result<f64> {
        let excess = optimal_excess_rate(rho_u, profile, self.lambda[0], self.coeffs.psi)?;
        Ok(self.users() as f64 * self.r_min + excess)
    }

    /// Largest `ρ_U` for which `obj(ρ_U) ≤ r_eff`; infinite for an unbounded ceiling.
    fn backhaul_power_bound(&self, profile: &MinPowerProfile, r_eff: f64) -> f64 {
        if r_eff.is_infinite() {
            return f64::INFINITY;
        }
        let base = self.users() as f64 * self.r_min;
        profile.rho_sum_min
            + self.coeffs.psi * base.exp2() * ((r_eff - base) * std::f64::consts::LN_2).exp_m1() / self.lambda[0]
    }
}

/// Which ceiling set `ρ_U*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BindingConstraint {
    Outage,
    Backhaul,
    TotalPower,
}

/// Solution of the fixed-cache power sub-problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSolution {
    pub rho_u: f64,
    pub outage_bound: f64,
    pub backhaul_bound: f64,
    pub rho_sum_min: f64,
    pub r_eff: f64,
    pub binding: BindingConstraint,
}

/// Fixed-cache power sub-problem in closed form:
/// `ρ_U* = min(B_outage, B_backhaul, ρ)` with
/// `B_backhaul = ρ_sum^min + Ψ 2^{K r_min} (2^{R_eff − K r_min} − 1) / λ_1`.
pub fn solve_p4(instance: &ProblemInstance, policy: &CachePolicy) -> Result<PowerSolution> {
    let profile = instance.min_profile()?;
    if profile.rho_sum_min > instance.rho {
        return Err(Error::RateInfeasible { required: profile.rho_sum_min, available: instance.rho });
    }
    let outage = outage_power_bound(&instance.qos, &instance.gains, instance.coeffs.psi, instance.rho)?;
    let r_eff = policy.rate_ceiling(instance.backhaul);
    let base = instance.users() as f64 * instance.r_min;
    if r_eff < base {
        return Err(Error::BackhaulInfeasible { r_eff, required: base });
    }
    let backhaul_bound = instance.backhaul_power_bound(&profile, r_eff);

    let (rho_u, binding) = [
        (outage.bound, BindingConstraint::Outage),
        (backhaul_bound, BindingConstraint::Backhaul),
        (instance.rho, BindingConstraint::TotalPower),
    ]
    .into_iter()
    .fold((f64::INFINITY, BindingConstraint::TotalPower), |best, cand| {
        if cand.0 < best.0 {
            cand
        } else {
            best
        }
    });
    if rho_u < profile.rho_sum_min {
        return Err(Error::RateInfeasible { required: profile.rho_sum_min, available: rho_u });
    }
    Ok(PowerSolution {
        rho_u,
        outage_bound: outage.bound,
        backhaul_bound,
        rho_sum_min: profile.rho_sum_min,
        r_eff,
        binding,
    })
}

/// Same sub-problem solved by bisection on `ρ_U ∈ [ρ_sum^min, ρ]`, checking
/// each user's outage through [`outage_closed_form`] and the backhaul
/// ceiling through the objective. Used to cross-check [`solve_p4`].
pub fn solve_p4_bisection(instance: &ProblemInstance, policy: &CachePolicy) -> Result<f64> {
    let profile = instance.min_profile()?;
    let r_eff = policy.rate_ceiling(instance.backhaul);
    let feasible = |rho_u: f64| -> bool {
        let Ok(split) = PowerSplit::aggregate(instance.rho, rho_u) else {
            return false;
        };
        let outage_ok = instance.gains.as_slice().iter().all(|&w| {
            outage_closed_form(&instance.qos, &split, w, instance.coeffs.psi)
                .is_ok_and(|p| p <= instance.qos.delta_out)
        });
        outage_ok
            && instance
                .objective_with(&profile, rho_u)
                .is_ok_and(|obj| obj <= r_eff)
    };

    let mut lo = profile.rho_sum_min;
    let mut hi = instance.rho;
    if lo > hi || !feasible(lo) {
        return Err(Error::RateInfeasible { required: lo, available: hi.min(lo) });
    }
    if feasible(hi) {
        return Ok(hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    /// Iteration budget exhausted; the result holds the best iterate.
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub objective: f64,
    pub rho_u_star: f64,
    /// Per-user unicast SNRs realising the objective.
    pub rho_i: Vec<f64>,
    pub policy: CachePolicy,
    pub r_eff: f64,
    pub binding: BindingConstraint,
    /// Objective after each completed round.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub status: SolveStatus,
}

impl SolveResult {
    pub fn backhaul_load(&self) -> f64 {
        crate::cache::backhaul_load(&self.policy, self.objective)
    }
}

/// Alternates the power sub-problem and the cache sub-problem, starting from
/// `ρ_U = 0` and an empty cache, until two consecutive objectives differ by
/// at most `tol`.
///
/// A backhaul-infeasible power step under the initial empty cache is not
/// fatal: that round contributes no objective and the loop continues with
/// the placement from the cache step.
pub fn solve_alternating(instance: &ProblemInstance, tol: f64, max_iter: usize) -> Result<SolveResult> {
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::InvalidInput(format!("need tol > 0 and max_iter >= 1 (tol={tol}, max_iter={max_iter})")));
    }
    instance.validate()?;
    let profile = instance.min_profile()?;
    let mut policy = CachePolicy::empty(&instance.catalog, instance.capacity);
    let mut trace = Vec::new();
    let mut best: Option<(PowerSolution, CachePolicy)> = None;
    let mut pending_err = None;

    for round in 1..=max_iter {
        let step = match solve_p4(instance, &policy) {
            Ok(s) => Some(s),
            Err(e @ Error::BackhaulInfeasible { .. }) if round == 1 => {
                pending_err = Some(e);
                None
            }
            Err(e) => return Err(e),
        };
        let placement = solve_p5(&instance.catalog, instance.capacity, instance.backhaul)?;
        let previous_policy = std::mem::replace(&mut policy, placement.policy);

        if let Some(step) = step {
            let obj = instance.objective_with(&profile, step.rho_u)?;
            trace.push(obj);
            // ρ_U was computed under the previous placement; the new one never has a
            // larger miss mass, so the pair (ρ_U, new placement) stays feasible.
            let keep = if policy.miss_mass <= previous_policy.miss_mass { policy.clone() } else { previous_policy };
            best = Some((step, keep));
            if let [.., prev, last] = trace.as_slice() {
                if (last - prev).abs() <= tol {
                    return finish(instance, &profile, best.unwrap(), trace, round, SolveStatus::Converged);
                }
            }
        }
    }
    match best {
        Some(b) => finish(instance, &profile, b, trace, max_iter, SolveStatus::MaxIterations),
        None => Err(pending_err.unwrap_or_else(|| Error::InvalidInput("solver produced no iterate".into()))),
    }
}

fn finish(
    instance: &ProblemInstance,
    profile: &MinPowerProfile,
    (step, policy): (PowerSolution, CachePolicy),
    trace: Vec<f64>,
    iterations: usize,
    status: SolveStatus,
) -> Result<SolveResult> {
    let objective = *trace.last().expect("at least one iterate");
    let excess = strongest_user_excess(step.rho_u, profile)?;
    let rho_i = profile.rho_i_min.iter().zip(&excess).map(|(m, d)| m + d).collect();
    let r_eff = policy.rate_ceiling(instance.backhaul);
    Ok(SolveResult {
        objective,
        rho_u_star: step.rho_u,
        rho_i,
        policy,
        r_eff,
        binding: step.binding,
        trace,
        iterations,
        status,
    })
}

/// Time-division baseline on the same instance, under the backhaul ceiling
/// of the best cache placement.
pub fn oma_baseline(instance: &ProblemInstance) -> Result<(OmaSchedule, CachePolicy)> {
    let placement = solve_p5(&instance.catalog, instance.capacity, instance.backhaul)?;
    let req = OmaRequest {
        rho: instance.rho,
        lambda: &instance.lambda,
        omega: instance.gains.as_slice(),
        coeffs: instance.coeffs,
        qos: instance.qos,
        r_min: instance.r_min,
        rate_ceiling: placement.r_eff,
    };
    Ok((oma_rates(&req)?, placement.policy))
}

/// Outcome of one constraint family in a [`FeasibilityReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub name: String,
    pub ok: bool,
    /// What the instance needs (or uses).
    pub value: f64,
    /// What the constraint allows.
    pub limit: f64,
    /// `limit − value`; negative when violated.
    pub slack: f64,
}

impl ConstraintCheck {
    fn new(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), ok: value <= limit, value, limit, slack: limit - value }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub rho_sum_min: f64,
    /// Outage ceiling on `ρ_U` for each user; entry 0 is the strongest user's.
    pub outage_bounds: Vec<f64>,
    pub checks: Vec<ConstraintCheck>,
    /// Error code of the first failing family, if any.
    pub verdict: Option<String>,
}

impl FeasibilityReport {
    pub fn feasible(&self) -> bool {
        self.verdict.is_none()
    }
}

/// Evaluates each constraint family independently, with the best cache
/// placement, and reports slack or violation for each.
pub fn feasibility_report(instance: &ProblemInstance) -> Result<FeasibilityReport> {
    instance.validate()?;
    let profile = instance.min_profile()?;
    let psi = instance.coeffs.psi;
    let scale = instance.qos.r_target.exp2();
    let log_term = (-instance.qos.delta_out).ln_1p();
    let outage_bounds: Vec<f64> = instance
        .gains
        .as_slice()
        .iter()
        .map(|&w| psi * instance.qos.theta / (scale * w * log_term) + instance.rho / scale)
        .collect();
    let outage_limit = outage_bounds.iter().copied().fold(f64::INFINITY, f64::min);

    let placement = solve_p5(&instance.catalog, instance.capacity, instance.backhaul)?;
    let base = instance.users() as f64 * instance.r_min;
    let backhaul_bound = if placement.r_eff >= base {
        instance.backhaul_power_bound(&profile, placement.r_eff)
    } else {
        f64::NEG_INFINITY
    };

    let multicast = ConstraintCheck::new("multicast_outage", 0.0, outage_limit);
    let multicast = ConstraintCheck { ok: outage_limit > 0.0, ..multicast };
    let rate = ConstraintCheck::new(
        "min_rate",
        profile.rho_sum_min,
        outage_limit.min(backhaul_bound.max(profile.rho_sum_min)).min(instance.rho),
    );
    let backhaul = ConstraintCheck::new("backhaul", base, placement.r_eff);

    let verdict = if !multicast.ok {
        Some(Error::MulticastInfeasible { bound: outage_limit }.code().to_string())
    } else if !rate.ok {
        Some(Error::RateInfeasible { required: profile.rho_sum_min, available: rate.limit }.code().to_string())
    } else if !backhaul.ok {
        Some(Error::BackhaulInfeasible { r_eff: placement.r_eff, required: base }.code().to_string())
    } else {
        None
    };
    Ok(FeasibilityReport { rho_sum_min: profile.rho_sum_min, outage_bounds, checks: vec![multicast, rate, backhaul], verdict })
}
