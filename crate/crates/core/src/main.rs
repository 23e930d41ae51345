use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use noma_cache_opt::experiments::{
    parse_grid, parse_list, thread_cap, write_outage_csv, write_rmin_csv, write_zipf_csv, Scenario, SolveDocument,
};
use noma_cache_opt::montecarlo::{run_outage_validation, run_rate_sweep, Sweep, SweepSolver, TrialConfig, TrialMode};
use noma_cache_opt::solver::{feasibility_report, solve_alternating, SolveStatus};
use noma_cache_opt::Error;

#[derive(Parser)]
#[command(name = "noma-cache-opt", version, about = "Cache-aided NOMA multicast/unicast optimizer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and write a JSON result document.
    Solve {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for the outage check at the solution (defaults to trials.seed).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sum rate against the minimum-rate constraint.
    SweepRmin {
        scenario: PathBuf,
        /// Grid as a:b:step.
        #[arg(long)]
        grid: String,
        /// Fill the OMA baseline column.
        #[arg(long)]
        oma: bool,
        /// Average over trials.n sampled gain realisations instead of the average gains.
        #[arg(long)]
        sampled: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Backhaul load against Zipf skewness and cache size.
    SweepZipf {
        scenario: PathBuf,
        /// Zipf grid as a:b:step.
        #[arg(long)]
        zeta_grid: String,
        /// Comma-separated cache sizes.
        #[arg(long)]
        cache_sizes: String,
        #[arg(long)]
        sampled: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Multicast outage closed form against Monte Carlo, per user.
    ValidateOutage {
        scenario: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Unicast SNR to test at (defaults to the optimum).
        #[arg(long)]
        rho_u: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Exit 2 for infeasible instances or an exhausted iteration budget, 1 otherwise.
fn fail(e: &Error) -> ExitCode {
    let msg = e.to_string().replace('\n', " ");
    eprintln!("error[{}]: {msg}", e.code());
    if e.is_infeasibility() {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn solve(scenario: &Path, out: Option<&Path>, seed: Option<u64>) -> Result<ExitCode, Error> {
    let sc = Scenario::load(scenario)?;
    let inst = &sc.instance;
    let seed = seed.unwrap_or(sc.file.trials.seed);
    let channel = SolveDocument::channel_summary(&sc);
    let report = feasibility_report(inst)?;
    let doc = match solve_alternating(inst, sc.file.solver.tol, sc.file.solver.max_iter) {
        Ok(res) => {
            let cfg = TrialConfig { n_trials: sc.file.trials.n, master_seed: seed, mode: TrialMode::NominalGains };
            let outage_check = run_outage_validation(inst, res.rho_u_star, &cfg)?;
            let status = match res.status {
                SolveStatus::Converged => "converged",
                SolveStatus::MaxIterations => "max_iterations",
            };
            SolveDocument {
                status: status.into(),
                error: None,
                seed,
                channel,
                backhaul_load: Some(res.backhaul_load()),
                result: Some(res),
                outage_check,
                feasibility: Some(report),
            }
        }
        Err(e) if e.is_infeasibility() => {
            let doc = SolveDocument {
                status: e.code().into(),
                error: Some(e.to_string()),
                seed,
                channel,
                result: None,
                backhaul_load: None,
                outage_check: Vec::new(),
                feasibility: Some(report),
            };
            write_doc(&doc, out)?;
            return Ok(fail(&e));
        }
        Err(e) => return Err(e),
    };
    write_doc(&doc, out)?;
    if doc.status == "converged" {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("error[MAX_ITERATIONS]: iteration budget exhausted before the objective settled");
        Ok(ExitCode::from(2))
    }
}

fn write_doc(doc: &SolveDocument, out: Option<&Path>) -> Result<(), Error> {
    let mut w = output(out)?;
    writeln!(w, "{}", doc.to_json()?)?;
    w.flush()?;
    Ok(())
}

fn trial_config(sc: &Scenario, sampled: bool, seed: Option<u64>) -> TrialConfig {
    let master_seed = seed.unwrap_or(sc.file.trials.seed);
    if sampled {
        TrialConfig { n_trials: sc.file.trials.n, master_seed, mode: TrialMode::SampledGains { resort: true } }
    } else {
        TrialConfig { n_trials: 1, master_seed, mode: TrialMode::NominalGains }
    }
}

fn solver_settings(sc: &Scenario) -> SweepSolver {
    SweepSolver { tol: sc.file.solver.tol, max_iter: sc.file.solver.max_iter }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    if let Some(n) = thread_cap()? {
        // Only fails if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Solve { scenario, out, seed } => solve(&scenario, out.as_deref(), seed),
        Command::SweepRmin { scenario, grid, oma, sampled, seed, out } => {
            let sc = Scenario::load(&scenario)?;
            let grid = parse_grid(&grid)?;
            let rows = run_rate_sweep(&sc.instance, &Sweep::MinRate(grid), &trial_config(&sc, sampled, seed), solver_settings(&sc))?;
            write_rmin_csv(output(out.as_deref())?, &rows, oma)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::SweepZipf { scenario, zeta_grid, cache_sizes, sampled, seed, out } => {
            let sc = Scenario::load(&scenario)?;
            let sweep = Sweep::Zipf { zetas: parse_grid(&zeta_grid)?, capacities: parse_list(&cache_sizes)? };
            let rows = run_rate_sweep(&sc.instance, &sweep, &trial_config(&sc, sampled, seed), solver_settings(&sc))?;
            write_zipf_csv(output(out.as_deref())?, &rows)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::ValidateOutage { scenario, trials, seed, rho_u, out } => {
            let sc = Scenario::load(&scenario)?;
            let rho_u = match rho_u {
                Some(r) => r,
                None => solve_alternating(&sc.instance, sc.file.solver.tol, sc.file.solver.max_iter)?.rho_u_star,
            };
            let cfg = TrialConfig {
                n_trials: trials.unwrap_or(sc.file.trials.n),
                master_seed: seed.unwrap_or(sc.file.trials.seed),
                mode: TrialMode::NominalGains,
            };
            let rows = run_outage_validation(&sc.instance, rho_u, &cfg)?;
            write_outage_csv(output(out.as_deref())?, &rows)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e.to_string();
            let first = first.lines().next().unwrap_or("bad arguments").trim_start_matches("error: ");
            eprintln!("error[USAGE]: {first}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => fail(&e),
    }
}
