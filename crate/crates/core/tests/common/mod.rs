#![allow(dead_code)]

use noma_cache_opt::{
    csi_coefficients, zipf_popularity, CsiCoefficients, CsiConvention, MulticastQos, ProblemInstance, UserGains,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Average gains sorted strongest first.
pub fn random_gains(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..20.0)).collect();
    g.sort_by(|a, b| b.total_cmp(a));
    g
}

/// Imperfect-CSI coefficients from either convention, with `Ψ` of order 1–3.
pub fn random_coeffs(rng: &mut ChaCha8Rng, rho: f64) -> CsiCoefficients {
    let omega_eps = rng.random_range(0.0..0.2);
    if rng.random_bool(0.5) {
        let phi = rng.random_range(0.9..0.99999);
        csi_coefficients(phi, omega_eps, rho, CsiConvention::Swapped).unwrap()
    } else {
        let phi = rng.random_range(0.0..0.5);
        csi_coefficients(phi, omega_eps, rho, CsiConvention::AsWritten).unwrap()
    }
}

/// A valid (not necessarily feasible) instance.
pub fn random_instance(rng: &mut ChaCha8Rng, k: usize) -> ProblemInstance {
    let rho = rng.random_range(5.0..50.0);
    let files = rng.random_range(2..=20);
    let capacity = rng.random_range(0..=files) as f64;
    ProblemInstance::nominal(
        UserGains::new(random_gains(rng, k)).unwrap(),
        random_coeffs(rng, rho),
        MulticastQos::new(rng.random_range(0.1..1.0), rng.random_range(0.01..0.3)).unwrap(),
        rng.random_range(0.0..1.0),
        rho,
        zipf_popularity(files, rng.random_range(0.0..2.0)).unwrap(),
        capacity,
        rng.random_range(1.0..20.0),
    )
    .unwrap()
}

/// Draws until the alternating solver accepts the instance.
pub fn random_feasible_instance(rng: &mut ChaCha8Rng, k: usize) -> ProblemInstance {
    loop {
        let inst = random_instance(rng, k);
        if noma_cache_opt::solve_alternating(&inst, 1e-6, 100).is_ok() {
            return inst;
        }
    }
}

/// `Σ_i log₂(1 + ρ_i λ_i / (Σ_{j<i} ρ_j λ_i + Ψ))`, written out directly.
pub fn relaxed_sum_rate(rho_i: &[f64], lambda: &[f64], psi: f64) -> f64 {
    let mut above = 0.0;
    let mut total = 0.0;
    for (r, l) in rho_i.iter().zip(lambda) {
        total += (1.0 + r * l / (above * l + psi)).log2();
        above += r;
    }
    total
}

/// Per-user powers reaching `r_min` exactly, by forward substitution.
pub fn min_powers(r_min: f64, lambda: &[f64], psi: f64) -> Vec<f64> {
    let theta = 2f64.powf(r_min) - 1.0;
    let mut out: Vec<f64> = Vec::new();
    for l in lambda {
        let above: f64 = out.iter().sum();
        out.push(theta * (above + psi / l));
    }
    out
}

/// Largest relaxed sum rate at unicast SNR `rho_u`: users 2..K held at
/// `r_min`, everything else to user 1. Built from the rate expression, not
/// from the library's transform.
pub fn best_sum_rate(inst: &ProblemInstance, rho_u: f64) -> Option<f64> {
    let k = inst.users();
    let psi = inst.coeffs.psi;
    let theta = 2f64.powf(inst.r_min) - 1.0;
    let base = min_powers(inst.r_min, &inst.lambda, psi);
    let spare = rho_u - base.iter().sum::<f64>();
    if spare < 0.0 {
        return None;
    }
    // User 1 gets d; every later user needs θ times the extra interference above it.
    let d1 = spare / 2f64.powf((k as f64 - 1.0) * inst.r_min);
    let mut extra = vec![d1];
    for _ in 1..k {
        let above: f64 = extra.iter().sum();
        extra.push(theta * above);
    }
    let rho_i: Vec<f64> = base.iter().zip(&extra).map(|(b, e)| b + e).collect();
    Some(relaxed_sum_rate(&rho_i, &inst.lambda, psi))
}

/// `1 − exp(−Ψθ / ((ρ_M − θρ_U) Ω))`, or 1 when the margin is gone.
pub fn outage_oracle(inst: &ProblemInstance, rho_u: f64, omega: f64) -> f64 {
    let theta = 2f64.powf(inst.qos.r_target) - 1.0;
    let margin = (inst.rho - rho_u) - theta * rho_u;
    if margin <= 0.0 {
        return 1.0;
    }
    1.0 - (-inst.coeffs.psi * theta / (margin * omega)).exp()
}

/// `Σ_{k=0}^{59} (−x²/4)^k / (k!)²`, a fixed-length series with no early exit.
pub fn j0_series_oracle(x: f64) -> f64 {
    let q = -x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        term *= q / ((k * k) as f64);
        sum += term;
    }
    sum
}

/// `(1/π) ∫₀^π cos(x sin t) dt` by the trapezoid rule. The integrand is
/// smooth and periodic, so the rule converges geometrically.
pub fn j0_integral_oracle(x: f64) -> f64 {
    let n = 400;
    let h = std::f64::consts::PI / n as f64;
    let f = |t: f64| (x * t.sin()).cos();
    let inner: f64 = (1..n).map(|i| f(i as f64 * h)).sum();
    (inner + 0.5 * (f(0.0) + f(std::f64::consts::PI))) * h / std::f64::consts::PI
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
