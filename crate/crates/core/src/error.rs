use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the formula being evaluated.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("user index {index} out of range for {users} users")]
    UserIndex { index: usize, users: usize },

    /// No positive unicast power keeps every user's multicast outage below the threshold,
    /// or the multicast SINR ceiling is already exceeded.
    #[error("multicast infeasible: unicast power ceiling {bound:.6e} cannot be met")]
    MulticastInfeasible { bound: f64 },

    /// The power needed to give every user `r_min` exceeds what the other constraints allow.
    #[error("rate infeasible: need rho_sum_min = {required:.6e}, only {available:.6e} available")]
    RateInfeasible { required: f64, available: f64 },

    #[error("backhaul infeasible: effective ceiling {r_eff:.6e} below K*r_min = {required:.6e}")]
    BackhaulInfeasible { r_eff: f64, required: f64 },

    /// Time-division baseline needs more than the whole frame.
    #[error("OMA infeasible: minimal slot fractions sum to {fraction_sum:.6}")]
    OmaInfeasible { fraction_sum: f64 },

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Short, stable identifier used on the CLI's machine-readable error line.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "DOMAIN",
            Error::InvalidInput(_) => "INPUT",
            Error::UserIndex { .. } => "INPUT",
            Error::MulticastInfeasible { .. } => "MULTICAST_INFEASIBLE",
            Error::RateInfeasible { .. } => "RATE_INFEASIBLE",
            Error::BackhaulInfeasible { .. } => "BACKHAUL_INFEASIBLE",
            Error::OmaInfeasible { .. } => "OMA_INFEASIBLE",
            Error::Scenario(_) => "INPUT",
            Error::Io(_) => "INPUT",
        }
    }

    /// True for the three constraint families the optimizer can fail on.
    pub fn is_infeasibility(&self) -> bool {
        matches!(
            self,
            Error::MulticastInfeasible { .. }
                | Error::RateInfeasible { .. }
                | Error::BackhaulInfeasible { .. }
                | Error::OmaInfeasible { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
