//! Argument parsing and dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand};

use crate::commands;
use crate::config::{PartialConfig, RunConfig, Search};
use crate::error::{CliError, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "cvqkd", version, about = "Two-way CV-QKD key rates under two-mode Gaussian attacks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Key rate at one attack point (needs --cx and --cp); CSV on stdout.
    Keyrate(CommonArgs),
    /// Key rate over the correlation plane, plus diagonal slices.
    Sweep(CommonArgs),
    /// Rate-minimizing attack per noise level, distance and beta.
    Optimal(CommonArgs),
    /// Tolerable excess noise of the two-way and one-way protocols.
    Frontier(CommonArgs),
    /// Attack classes over the correlation plane at fixed --ve1/--ve2.
    Region(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Keyrate(_) => "keyrate",
            Command::Sweep(_) => "sweep",
            Command::Optimal(_) => "optimal",
            Command::Frontier(_) => "frontier",
            Command::Region(_) => "region",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Keyrate(a)
            | Command::Sweep(a)
            | Command::Optimal(a)
            | Command::Frontier(a)
            | Command::Region(a) => a,
        }
    }
}

/// Flags shared by every subcommand. Anything given here overrides the
/// config file, which overrides the defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Flat JSON config file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long = "distance-km", value_name = "F")]
    pub distance_km: Option<f64>,
    /// Comma-separated distances for sweep, optimal and frontier.
    #[arg(long, value_name = "F,..", value_delimiter = ',')]
    pub distances: Vec<f64>,
    #[arg(long, value_name = "F")]
    pub epsilon: Option<f64>,
    /// Comma-separated noise levels for optimal.
    #[arg(long, value_name = "F,..", value_delimiter = ',')]
    pub epsilons: Vec<f64>,
    #[arg(long = "va", value_name = "F")]
    pub v_a: Option<f64>,
    #[arg(long = "vb", value_name = "F")]
    pub v_b: Option<f64>,
    #[arg(long, value_name = "F")]
    pub eta: Option<f64>,
    #[arg(long, value_name = "F")]
    pub beta: Option<f64>,
    /// Comma-separated efficiencies for optimal and frontier.
    #[arg(long, value_name = "F,..", value_delimiter = ',')]
    pub betas: Vec<f64>,
    #[arg(long = "cx", value_name = "F", allow_negative_numbers = true)]
    pub c_x: Option<f64>,
    #[arg(long = "cp", value_name = "F", allow_negative_numbers = true)]
    pub c_p: Option<f64>,
    #[arg(long = "ve1", value_name = "F")]
    pub v_e1: Option<f64>,
    #[arg(long = "ve2", value_name = "F")]
    pub v_e2: Option<f64>,
    #[arg(long = "attenuation-db-km", value_name = "F")]
    pub attenuation_db_per_km: Option<f64>,
    /// Detector electronic noise variance, shot-noise units.
    #[arg(long = "electronic-noise", value_name = "F")]
    pub detector_electronic_noise: Option<f64>,
    /// Fixed estimator coefficient instead of the derived one.
    #[arg(long = "k", value_name = "F")]
    pub k_override: Option<f64>,
    #[arg(long, value_name = "N")]
    pub grid: Option<usize>,
    #[arg(long, value_name = "N")]
    pub refine: Option<usize>,
    #[arg(long, value_enum)]
    pub search: Option<Search>,
    /// Worker threads; 0 uses every core.
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

fn list(v: &[f64]) -> Option<Vec<f64>> {
    (!v.is_empty()).then(|| v.to_vec())
}

impl CommonArgs {
    pub fn overrides(&self) -> PartialConfig {
        PartialConfig {
            v_a: self.v_a,
            v_b: self.v_b,
            eta: self.eta,
            beta: self.beta,
            betas: list(&self.betas),
            epsilon: self.epsilon,
            epsilons: list(&self.epsilons),
            detector_electronic_noise: self.detector_electronic_noise,
            k_override: self.k_override,
            attenuation_db_per_km: self.attenuation_db_per_km,
            distance_km: self.distance_km,
            distances_km: list(&self.distances),
            grid: self.grid,
            refine: self.refine,
            search: self.search,
            c_x: self.c_x,
            c_p: self.c_p,
            v_e1: self.v_e1,
            v_e2: self.v_e2,
            out: self.out.clone(),
            workers: self.workers,
        }
    }

    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let file = self.config.as_deref().map(RunConfig::load_file).transpose()?;
        RunConfig::resolve(file, self.overrides())
    }
}

fn execute(command: &Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = command.args().resolve()?;
    let written = match command {
        Command::Keyrate(_) => return commands::keyrate(&cfg, stdout),
        Command::Sweep(_) => commands::sweep(&cfg)?,
        Command::Optimal(_) => commands::optimal(&cfg)?,
        Command::Frontier(_) => commands::frontier(&cfg)?,
        Command::Region(_) => commands::region(&cfg)?,
    };
    for path in written {
        writeln!(stdout, "{}", path.display())?;
    }
    Ok(())
}

/// Parses `args`, runs the subcommand and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            if e.code == EXIT_USAGE {
                let mut cmd = Cli::command();
                cmd.build();
                if let Some(sub) = cmd.find_subcommand_mut(cli.command.name()) {
                    let _ = writeln!(stderr, "\n{}", sub.render_usage());
                }
            }
            e.code
        }
    }
}
