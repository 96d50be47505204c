use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use irsbeam::capacity::appendix_moments;
use irsbeam::channel::{derive_link_params, los_components};
use irsbeam::runner::{render_csv, rician_design, run_scenario, write_csv};
use irsbeam::scenario::{parse_scenario, Scenario};
use irsbeam::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const THREADS_ENV: &str = "IRSBEAM_THREADS";

#[derive(Parser)]
#[command(name = "irsbeam", version, about = "IRS-assisted MISO beamforming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its results as CSV.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output path; defaults to the scenario's `output`, else stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the Monte Carlo trial count.
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Parse a scenario and print its fully-resolved settings.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Print the channel-gain moment decomposition as a table.
    Moments {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::from(EXIT_RUNTIME)
            }
        }
    }
}

fn load(path: &PathBuf, seed: Option<u64>, trials: Option<u64>) -> Result<Scenario, Error> {
    let mut s = parse_scenario(path).map_err(|e| match e {
        // an unreadable scenario file is a configuration problem
        Error::Io { context, source } => Error::Config(format!("{context}: {source}")),
        other => other,
    })?;
    if let Some(seed) = seed {
        s.seed = seed;
    }
    if let Some(trials) = trials {
        if trials == 0 {
            return Err(Error::Config("--trials must be at least 1".into()));
        }
        s.trials = trials;
    }
    s.config.validate()?;
    Ok(s)
}

fn thread_pool() -> Result<rayon::ThreadPool, Error> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|n| *n >= 1)
            .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            scenario,
            seed,
            out,
            trials,
        } => {
            let s = load(&scenario, seed, trials)?;
            let pool = thread_pool()?;
            let result = pool.install(|| run_scenario(&s))?;
            for line in &result.summaries {
                eprintln!("{line}");
            }
            match out.or_else(|| s.output_path.clone()) {
                Some(path) => write_csv(&path, &s, &result.rows)?,
                None => {
                    let text = render_csv(&s, &result.rows);
                    std::io::stdout()
                        .write_all(text.as_bytes())
                        .map_err(|source| Error::Io {
                            context: "writing to stdout".into(),
                            source,
                        })?;
                }
            }
            Ok(())
        }
        Command::Validate { scenario } => {
            let s = load(&scenario, None, None)?;
            print!("{}", s.to_canonical_string());
            Ok(())
        }
        Command::Moments {
            scenario,
            seed,
            trials,
        } => {
            let s = load(&scenario, seed, trials)?;
            let pool = thread_pool()?;
            let config = s.resolved_config();
            let report = pool.install(|| -> Result<_, Error> {
                let los = los_components(&config.angles, config.m, config.n)?;
                let params = derive_link_params(&config)?;
                let (beams, _) = rician_design(&s, &los, &params)?;
                appendix_moments(&los, &config, &beams, s.trials, s.seed)
            })?;
            println!(
                "M={} N={} trials={} seed={}",
                config.m, config.n, report.trials, report.master_seed
            );
            println!("|x1|^2 = {:.6e}", report.x1_sq);
            println!(
                "{:<6} {:>14} {:>12} {:>14} {:>8}",
                "term", "empirical", "std_error", "analytic", "z"
            );
            for m in &report.moments {
                println!(
                    "{:<6} {:>14.6e} {:>12.3e} {:>14.6e} {:>8.3}",
                    m.label,
                    m.empirical,
                    m.std_error,
                    m.analytic,
                    m.z_score()
                );
            }
            println!(
                "{:<8} {:>14} {:>12} {:>8}",
                "pair", "|E{xi xj*}|", "std_error", "z"
            );
            for c in &report.cross_terms {
                let z = if c.std_error > 0.0 {
                    c.magnitude() / c.std_error
                } else {
                    0.0
                };
                println!(
                    "{:<8} {:>14.6e} {:>12.3e} {:>8.3}",
                    format!("{}{}", c.first, c.second),
                    c.magnitude(),
                    c.std_error,
                    z
                );
            }
            println!(
                "sum: analytic {:.9e}, empirical {:.9e}",
                report.analytic_total(),
                report.empirical_total()
            );
            Ok(())
        }
    }
}
