//! Cache-aided NOMA hybrid multicast/unicast optimisation.
//!
//! A base station superposes one multicast stream for all `K` users on top
//! of per-user unicast streams, decoded with successive interference
//! cancellation, over a vehicular channel known only through an outdated
//! estimate. Unicast traffic not served from the edge cache crosses a
//! capacity-limited backhaul. The crate computes the rates, the multicast
//! outage, the minimum-power and optimal-excess power allocations, the
//! cache placement and the alternating optimiser, and checks the closed
//! forms against Monte Carlo.
//!
//! ```
//! use noma_cache_opt::{solve_alternating, zipf_popularity, CsiCoefficients, MulticastQos, ProblemInstance, UserGains};
//!
//! let inst = ProblemInstance::nominal(
//!     UserGains::new(vec![10.0, 5.0])?,
//!     CsiCoefficients::perfect(),
//!     MulticastQos::new(0.5, 0.1)?,
//!     0.2,
//!     10.0,
//!     zipf_popularity(10, 1.0)?,
//!     2.0,
//!     5.0,
//! )?;
//! let res = solve_alternating(&inst, 1e-6, 100)?;
//! assert!(res.objective >= 2.0 * 0.2);
//! assert!(res.backhaul_load() <= 5.0 + 1e-9);
//! # Ok::<(), noma_cache_opt::Error>(())
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cache;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod montecarlo;
pub mod outage;
pub mod power;
pub mod rates;
pub mod solver;

pub use cache::{backhaul_load, solve_p5, zipf_popularity, CachePolicy, Catalog, Placement};
pub use channel::{
    bessel_j0, csi_coefficients, jakes_phi, sample_gains, ChannelParams, CsiCoefficients, CsiConvention, GainSamples,
    UserGains,
};
pub use error::{Error, Result};
pub use montecarlo::{run_outage_validation, run_rate_sweep, stream_rng, Sweep, SweepRow, TrialConfig, TrialMode};
pub use outage::{outage_closed_form, outage_monte_carlo, outage_power_bound, MulticastQos, OutageBound};
pub use power::{
    excess_from_transformed, excess_transform, min_power_closed_form, min_power_recurrence_oracle,
    optimal_excess_rate, strongest_user_excess, ExcessProfile, MinPowerProfile,
};
pub use rates::{
    multicast_rate, noma_rates, oma_rates, unicast_rate_exact, unicast_rate_relaxed, OmaRequest, OmaSchedule,
    PowerSplit, RateVector,
};
pub use solver::{
    feasibility_report, oma_baseline, solve_alternating, solve_p4, solve_p4_bisection, BindingConstraint,
    FeasibilityReport, PowerSolution, ProblemInstance, SolveResult, SolveStatus,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/rates.md")]
    mod rates {}
    #[doc = include_str!("../../../book/src/outage.md")]
    mod outage {}
    #[doc = include_str!("../../../book/src/power.md")]
    mod power {}
    #[doc = include_str!("../../../book/src/cache.md")]
    mod cache {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
