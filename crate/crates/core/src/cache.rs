//! Zipf content popularity, cache placement and backhaul accounting.
//!
//! Files have unit size. A placement `c_f ∈ [0,1]` with `Σ c_f ≤ N` leaves a
//! miss mass `Σ_f q_f (1 − c_f)`; every unit of unicast sum rate then loads
//! the backhaul by that fraction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub zeta: f64,
    /// Popularity `q_f`, most popular first.
    pub q: Vec<f64>,
}

impl Catalog {
    pub fn files(&self) -> usize {
        self.q.len()
    }
}

/// `q_f = f^{−ζ} / Σ_j j^{−ζ}` for `f = 1..F`.
pub fn zipf_popularity(files: usize, zeta: f64) -> Result<Catalog> {
    if files == 0 {
        return Err(Error::InvalidInput("catalog needs at least one file".into()));
    }
    if !(zeta >= 0.0 && zeta.is_finite()) {
        return Err(Error::InvalidInput(format!("Zipf skewness must be >= 0, got {zeta}")));
    }
    let weights: Vec<f64> = (1..=files).map(|f| (f as f64).powf(-zeta)).collect();
    let total: f64 = weights.iter().sum();
    Ok(Catalog { zeta, q: weights.into_iter().map(|w| w / total).collect() })
}

/// Per-file caching probabilities and the resulting miss mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachePolicy {
    pub c: Vec<f64>,
    pub capacity: f64,
    pub miss_mass: f64,
}

impl CachePolicy {
    pub fn new(c: Vec<f64>, capacity: f64, catalog: &Catalog) -> Result<Self> {
        if c.len() != catalog.files() {
            return Err(Error::InvalidInput(format!(
                "{} cache probabilities for {} files",
                c.len(),
                catalog.files()
            )));
        }
        if c.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::InvalidInput("cache probabilities must lie in [0,1]".into()));
        }
        let used: f64 = c.iter().sum();
        if used > capacity + 1e-12 {
            return Err(Error::InvalidInput(format!("placement uses {used} > capacity {capacity}")));
        }
        let miss_mass = miss_mass(&c, catalog);
        Ok(Self { c, capacity, miss_mass })
    }

    /// Nothing cached.
    pub fn empty(catalog: &Catalog, capacity: f64) -> Self {
        let c = vec![0.0; catalog.files()];
        let miss_mass = miss_mass(&c, catalog);
        Self { c, capacity, miss_mass }
    }

    /// Whole files `0..n` cached (the `n` most popular).
    pub fn top_prefix(catalog: &Catalog, n: usize, capacity: f64) -> Result<Self> {
        let c = (0..catalog.files()).map(|f| if f < n { 1.0 } else { 0.0 }).collect();
        Self::new(c, capacity, catalog)
    }

    /// `R / miss_mass`, the largest unicast sum rate the backhaul can carry.
    pub fn rate_ceiling(&self, backhaul: f64) -> f64 {
        if self.miss_mass <= 0.0 {
            f64::INFINITY
        } else {
            backhaul / self.miss_mass
        }
    }
}

fn miss_mass(c: &[f64], catalog: &Catalog) -> f64 {
    catalog
        .q
        .iter()
        .zip(c)
        .map(|(q, c)| q * (1.0 - c))
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// Backhaul traffic `miss_mass · sum_rate` in bit/s/Hz.
pub fn backhaul_load(policy: &CachePolicy, sum_rate: f64) -> f64 {
    policy.miss_mass * sum_rate
}

/// Placement returned by [`solve_p5`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub policy: CachePolicy,
    /// Effective ceiling on the unicast sum rate, `R / miss_mass`.
    pub r_eff: f64,
}

/// Cache placement for fixed unicast power: minimises the miss mass, which
/// maximises the backhaul ceiling. The miss mass is linear in `c_f` with one
/// capacity constraint, so filling the most popular files first is optimal;
/// a fractional capacity caches part of the next file. Ties keep the lower
/// file index first.
pub fn solve_p5(catalog: &Catalog, capacity: f64, backhaul: f64) -> Result<Placement> {
    if !(capacity >= 0.0) {
        return Err(Error::InvalidInput(format!("cache capacity must be >= 0, got {capacity}")));
    }
    let mut order: Vec<usize> = (0..catalog.files()).collect();
    order.sort_by(|&a, &b| catalog.q[b].total_cmp(&catalog.q[a]).then(a.cmp(&b)));
    let mut c = vec![0.0; catalog.files()];
    let mut left = capacity;
    for f in order {
        if left <= 0.0 {
            break;
        }
        c[f] = left.min(1.0);
        left -= c[f];
    }
    let policy = CachePolicy::new(c, capacity, catalog)?;
    let r_eff = policy.rate_ceiling(backhaul);
    Ok(Placement { policy, r_eff })
}
