use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use neutral_growth::appendix::{run_appendix, AppendixConfig};
use neutral_growth::characteristic::scan_spectrum;
use neutral_growth::growth::{certify, CertifyConfig, DEFAULT_SLACK};
use neutral_growth::io;
use neutral_growth::solver::simulate;
use neutral_growth::state::smooth;
use neutral_growth::system::{M2State, NeutralSystem};
use neutral_growth::Error;

const DEFAULT_M: usize = 100;

#[derive(Parser, Debug)]
#[command(name = "neutral-growth", version, about = "Spectra, simulation and growth certificates for neutral delay systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Output directory (created if missing).
    #[arg(short = 'o', long = "out", default_value = ".")]
    out: PathBuf,
    /// Seed for generated initial states and sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct InitialState {
    /// Initial state CSV; a seeded generic smooth state is used when absent.
    #[arg(long)]
    state: Option<PathBuf>,
    /// Grid resolution; defaults to the state file's resolution, else 100.
    #[arg(long)]
    m: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Locate characteristic roots in the asymptotic discs up to |k| = k-max.
    Spectrum {
        system: PathBuf,
        #[arg(long, default_value_t = 20)]
        k_max: i64,
        #[command(flatten)]
        common: Common,
    },
    /// Integrate the system and write the state norm over time.
    Simulate {
        system: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        horizon: f64,
        /// Also dump the history segment at every integer time.
        #[arg(long)]
        dump_z: bool,
        #[command(flatten)]
        init: InitialState,
        #[command(flatten)]
        common: Common,
    },
    /// Apply the inverse generator n-smooth times to the initial state.
    Smooth {
        system: PathBuf,
        #[arg(long, default_value_t = 1)]
        n_smooth: usize,
        #[command(flatten)]
        init: InitialState,
        #[command(flatten)]
        common: Common,
    },
    /// Compare the empirical growth exponent with the predicted one.
    Certify {
        system: PathBuf,
        #[arg(long, default_value_t = 0)]
        n_smooth: usize,
        #[arg(long, default_value_t = 40)]
        k_max: i64,
        #[arg(long, default_value_t = 30.0)]
        horizon: f64,
        #[arg(long, default_value_t = DEFAULT_SLACK)]
        slack: f64,
        /// Smallest |k| used in the rate fit.
        #[arg(long, default_value_t = 1)]
        k_fit_min: i64,
        /// Largest |k| used in the rate fit (default k-max).
        #[arg(long)]
        k_fit_max: Option<i64>,
        #[command(flatten)]
        init: InitialState,
        #[command(flatten)]
        common: Common,
    },
    /// Randomized checks of the perturbed Jordan block bounds.
    Appendix {
        /// Block dimension; repeat for several (default 1 to 5).
        #[arg(long = "n")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[command(flatten)]
        common: Common,
    },
}

type Outputs = Vec<(PathBuf, Vec<u8>)>;

fn initial_state(sys: &NeutralSystem, init: &InitialState, seed: u64) -> Result<M2State, Error> {
    match &init.state {
        Some(path) => {
            let x = io::load_state(path)?;
            if let Some(m) = init.m {
                if m != x.m() {
                    return Err(Error::Dimension(format!(
                        "--m {m} differs from the state file's resolution {}",
                        x.m()
                    )));
                }
            }
            if x.n() != sys.n {
                return Err(Error::Dimension(format!(
                    "state has dimension {}, system has {}",
                    x.n(),
                    sys.n
                )));
            }
            Ok(x)
        }
        None => Ok(M2State::generic(&sys.a_minus1, init.m.unwrap_or(DEFAULT_M), seed)),
    }
}

fn run(cmd: Command) -> Result<(PathBuf, Outputs), Error> {
    match cmd {
        Command::Spectrum { system, k_max, common } => {
            let sys = io::load_system(&system)?;
            let report = scan_spectrum(&sys, k_max)?;
            let out = &common.out;
            Ok((
                out.clone(),
                vec![
                    (out.join("spectrum.csv"), io::spectrum_to_csv(&report).into_bytes()),
                    (out.join("spectrum_summary.json"), io::spectrum_summary_json(&report).into_bytes()),
                ],
            ))
        }
        Command::Simulate {
            system,
            horizon,
            dump_z,
            init,
            common,
        } => {
            let sys = io::load_system(&system)?;
            let x0 = initial_state(&sys, &init, common.seed)?;
            let traj = simulate(&sys, &x0, horizon, x0.m())?;
            let out = &common.out;
            let mut files = vec![(out.join("trajectory.csv"), io::trajectory_to_csv(&traj).into_bytes())];
            if dump_z {
                files.push((out.join("trajectory_z.csv"), io::trajectory_z_dump(&traj).into_bytes()));
            }
            Ok((out.clone(), files))
        }
        Command::Smooth {
            system,
            n_smooth,
            init,
            common,
        } => {
            let sys = io::load_system(&system)?;
            let x0 = initial_state(&sys, &init, common.seed)?;
            let x = smooth(&sys, &x0, n_smooth)?;
            let out = &common.out;
            Ok((out.clone(), vec![(out.join("smoothed_state.csv"), io::state_to_csv(&x).into_bytes())]))
        }
        Command::Certify {
            system,
            n_smooth,
            k_max,
            horizon,
            slack,
            k_fit_min,
            k_fit_max,
            init,
            common,
        } => {
            let sys = io::load_system(&system)?;
            let x0 = initial_state(&sys, &init, common.seed)?;
            let cfg = CertifyConfig {
                n_smooth,
                k_max,
                horizon,
                m: x0.m(),
                slack,
                k_fit_min,
                k_fit_max,
            };
            let cert = certify(&sys, &x0, &cfg)?;
            let out = &common.out;
            Ok((
                out.clone(),
                vec![
                    (out.join("certificate.json"), io::certificate_to_json(&cert).into_bytes()),
                    (out.join("certificate.txt"), io::certificate_to_text(&cert).into_bytes()),
                ],
            ))
        }
        Command::Appendix { dims, trials, common } => {
            let mut cfg = AppendixConfig {
                trials,
                seed: common.seed,
                ..AppendixConfig::default()
            };
            if !dims.is_empty() {
                cfg.dims = dims;
            }
            let report = run_appendix(&cfg)?;
            let out = &common.out;
            Ok((
                out.clone(),
                vec![
                    (out.join("appendix.csv"), io::appendix_to_csv(&report).into_bytes()),
                    (out.join("appendix_sweep.csv"), io::appendix_sweep_csv(&report).into_bytes()),
                ],
            ))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. }
        | Error::Parse(_)
        | Error::Dimension(_)
        | Error::InvalidSystem(_)
        | Error::InvalidArgument(_) => 2,
        _ => 1,
    }
}

fn write_outputs(dir: &Path, files: &Outputs) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    io::write_all_atomic(files)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(cli.command).and_then(|(dir, files)| {
        write_outputs(&dir, &files)?;
        Ok(files)
    });
    match result {
        Ok(files) => {
            for (p, _) in files {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
