//! Scenario files, grid parsing and the CSV/JSON writers behind the CLI.
//!
//! A scenario is a TOML document. Unknown keys are rejected.
//!
//! ```toml
//! [channel]
//! f_c = 5.9e9
//! v = 41.666666666666664
//! tau = 1e-6
//! omega_eps = 0.1
//! convention = "swapped"
//!
//! [users]
//! K = 2
//! omega = [10.0, 5.0]
//!
//! [power]
//! P_watts = 10.0
//! noise_watts = 1.0
//!
//! [qos]
//! R_M = 0.25
//! delta_out = 0.1
//! r_min = 0.2
//!
//! [cache]
//! F = 10
//! zeta = 1.0
//! N = 2.0
//! R_backhaul = 5.0
//!
//! [solver]
//! tol = 1e-6
//! max_iter = 100
//!
//! [trials]
//! n = 100000
//! seed = 1
//! ```

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cache::zipf_popularity;
use crate::channel::{ChannelParams, CsiConvention, UserGains};
use crate::error::{Error, Result};
use crate::montecarlo::{OutageValidation, SweepRow};
use crate::outage::MulticastQos;
use crate::solver::{FeasibilityReport, ProblemInstance, SolveResult};

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "NOMA_CACHE_OPT_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub channel: ChannelSection,
    pub users: UsersSection,
    pub power: PowerSection,
    pub qos: QosSection,
    pub cache: CacheSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub trials: TrialsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    /// Carrier frequency in Hz.
    pub f_c: f64,
    /// Vehicle speed in m/s.
    pub v: f64,
    /// Gap between estimation and transmission in s.
    pub tau: f64,
    pub omega_eps: f64,
    #[serde(default)]
    pub convention: CsiConvention,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UsersSection {
    #[serde(rename = "K")]
    pub k: usize,
    pub omega: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSection {
    #[serde(rename = "P_watts")]
    pub p_watts: f64,
    pub noise_watts: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QosSection {
    #[serde(rename = "R_M")]
    pub r_m: f64,
    pub delta_out: f64,
    pub r_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheSection {
    #[serde(rename = "F")]
    pub files: usize,
    pub zeta: f64,
    #[serde(rename = "N")]
    pub capacity: f64,
    #[serde(rename = "R_backhaul")]
    pub backhaul: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialsSection {
    pub n: usize,
    pub seed: u64,
}

impl Default for TrialsSection {
    fn default() -> Self {
        Self { n: 100_000, seed: 1 }
    }
}

/// A parsed scenario with its derived channel quantities.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub channel: ChannelParams,
    pub instance: ProblemInstance,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Scenario(e.message().to_string()))?;
        Self::from_file(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        if file.users.k != file.users.omega.len() {
            return Err(Error::Scenario(format!(
                "users.K = {} but omega has {} entries",
                file.users.k,
                file.users.omega.len()
            )));
        }
        let p = &file.power;
        if !(p.p_watts > 0.0 && p.noise_watts > 0.0) {
            return Err(Error::Scenario("power.P_watts and power.noise_watts must be > 0".into()));
        }
        let rho = p.p_watts / p.noise_watts;
        let c = &file.channel;
        let channel = ChannelParams::new(c.f_c, c.v, c.tau, c.omega_eps, c.convention)?;
        let instance = ProblemInstance::nominal(
            UserGains::new(file.users.omega.clone())?,
            channel.coefficients(rho)?,
            MulticastQos::new(file.qos.r_m, file.qos.delta_out)?,
            file.qos.r_min,
            rho,
            zipf_popularity(file.cache.files, file.cache.zeta)?,
            file.cache.capacity,
            file.cache.backhaul,
        )?;
        Ok(Self { file, channel, instance })
    }
}

/// Parses `a:b:step` into `a, a+step, …` up to `b` inclusive. Points are
/// computed as `a + i·step`, so there is no accumulated drift.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, step] = parts.as_slice() else {
        return Err(Error::InvalidInput(format!("grid must look like a:b:step, got {spec:?}")));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::InvalidInput(format!("bad number {s:?} in grid {spec:?}")))
    };
    let (a, b, step) = (num(a)?, num(b)?, num(step)?);
    if !(step > 0.0 && a.is_finite() && b.is_finite() && b >= a) {
        return Err(Error::InvalidInput(format!("grid needs step > 0 and b >= a, got {spec:?}")));
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| a + i as f64 * step).collect())
}

/// Parses a comma-separated list of numbers.
pub fn parse_list(spec: &str) -> Result<Vec<f64>> {
    let values = spec
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("bad number {s:?} in list {spec:?}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if values.is_empty() {
        return Err(Error::InvalidInput("empty list".into()));
    }
    Ok(values)
}

/// Reads the thread cap from [`THREADS_ENV`]; `None` when unset.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::InvalidInput(format!("{THREADS_ENV} must be a positive integer, got {s:?}"))),
        },
    }
}

/// Formats with 10 significant digits, C `%.10g` style: fixed notation for
/// decimal exponents in `[-4, 10)`, scientific otherwise, trailing zeros removed.
///
/// ```
/// use noma_cache_opt::experiments::format_sig;
/// assert_eq!(format_sig(0.1 + 0.2), "0.3");
/// assert_eq!(format_sig(3.418129736495016), "3.418129736");
/// assert_eq!(format_sig(1.5e-7), "1.5e-07");
/// assert_eq!(format_sig(0.0), "0");
/// ```
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.9e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..10).contains(&exp) {
        let decimals = (9 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_sig).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// `r_min, noma_sum_rate, oma_sum_rate, status`. The OMA column is left
/// empty when `with_oma` is false.
pub fn write_rmin_csv<W: Write>(out: W, rows: &[SweepRow], with_oma: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r_min", "noma_sum_rate", "oma_sum_rate", "status"]).map_err(csv_err)?;
    for r in rows {
        let oma = if with_oma { opt(r.oma_sum_rate) } else { String::new() };
        w.write_record([format_sig(r.r_min), opt(r.noma_sum_rate), oma, r.status.clone()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `zeta, N, backhaul_load_noma, backhaul_load_oma, status`.
pub fn write_zipf_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["zeta", "N", "backhaul_load_noma", "backhaul_load_oma", "status"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            format_sig(r.zeta),
            format_sig(r.capacity),
            opt(r.noma_backhaul_load),
            opt(r.oma_backhaul_load),
            r.status.clone(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `user, closed_form, mc_estimate, sigma, pass`. Users are numbered from 1.
pub fn write_outage_csv<W: Write>(out: W, rows: &[OutageValidation]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["user", "closed_form", "mc_estimate", "sigma", "pass"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            (r.user + 1).to_string(),
            opt(r.closed_form),
            format_sig(r.estimate),
            format_sig(r.sigma),
            r.within_3sigma.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Channel quantities reported alongside a solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSummary {
    pub phi: f64,
    pub a: f64,
    pub b: f64,
    pub psi: f64,
    pub rho: f64,
}

/// JSON document written by `solve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveDocument {
    /// `converged`, `max_iterations`, or an error code.
    pub status: String,
    pub error: Option<String>,
    pub seed: u64,
    pub channel: ChannelSummary,
    pub result: Option<SolveResult>,
    pub backhaul_load: Option<f64>,
    /// Outage at `ρ_U*` per user, closed form against Monte Carlo.
    pub outage_check: Vec<OutageValidation>,
    pub feasibility: Option<FeasibilityReport>,
}

impl SolveDocument {
    pub fn channel_summary(scenario: &Scenario) -> ChannelSummary {
        let c = scenario.instance.coeffs;
        ChannelSummary { phi: scenario.channel.phi(), a: c.a, b: c.b, psi: c.psi, rho: scenario.instance.rho }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }
}
