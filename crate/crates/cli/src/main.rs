use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pilotwave_cli::{config::RunConfig, ConfigError, Initial, EXIT_CONFIG, EXIT_FAIL, EXIT_PASS};

#[derive(Parser)]
#[command(name = "pilotwave", version, about = "Pilot-wave trajectory simulations and statistical checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write trajectories, densities and report.json
    Run(RunArgs),
    /// List scenarios with their default parameters
    List,
    /// Print the version
    Version,
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML run file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<String>,
    /// Scenario parameter override, e.g. `--set sigma0=0.8`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    nsteps: Option<usize>,
    /// Steps between stored frames
    #[arg(long)]
    stride: Option<usize>,
    /// Ensemble size
    #[arg(short, long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    initial: Option<InitialArg>,
    /// Check to evaluate; repeatable
    #[arg(long = "check", value_name = "NAME")]
    checks: Vec<String>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Recorded points per trajectory
    #[arg(long)]
    record_points: Option<usize>,
    /// Extra density snapshot time; repeatable
    #[arg(long = "density-time", value_name = "T")]
    density_times: Vec<f64>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum InitialArg {
    Born,
    UniformInSlits,
}

impl RunArgs {
    fn into_config(self) -> Result<RunConfig, ConfigError> {
        let file = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let mut params = BTreeMap::new();
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("expected KEY=VALUE, got `{kv}`")))?;
            let v: f64 = v.trim().parse().map_err(|_| ConfigError(format!("`{v}` is not a number")))?;
            params.insert(k.trim().to_string(), v);
        }
        let flags = RunConfig {
            scenario: self.scenario,
            params,
            dt: self.dt,
            nsteps: self.nsteps,
            stride: self.stride,
            n: self.n,
            seed: self.seed,
            initial: self.initial.map(|i| match i {
                InitialArg::Born => Initial::Born,
                InitialArg::UniformInSlits => Initial::UniformInSlits,
            }),
            checks: self.checks,
            output_dir: self.output_dir,
            record_points: self.record_points,
            density_times: self.density_times,
        };
        Ok(file.merged(flags))
    }
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            print!("{}", pilotwave_cli::list_scenarios());
            code(EXIT_PASS)
        }
        Command::Version => {
            println!("pilotwave {}", env!("CARGO_PKG_VERSION"));
            code(EXIT_PASS)
        }
        Command::Run(args) => {
            let workers = match pilotwave_cli::workers_from_env() {
                Ok(w) => w,
                Err(e) => {
                    eprintln!("error: {e}");
                    return code(EXIT_CONFIG);
                }
            };
            if let Some(n) = workers {
                rayon::ThreadPoolBuilder::new().num_threads(n).build_global().expect("pool is built once");
            }
            let config = match args.into_config() {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return code(EXIT_CONFIG);
                }
            };
            match pilotwave_cli::run(&config) {
                Ok((files, pass)) => {
                    for f in files {
                        println!("{}", f.display());
                    }
                    code(if pass { EXIT_PASS } else { EXIT_FAIL })
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    code(EXIT_CONFIG)
                }
            }
        }
    }
}
