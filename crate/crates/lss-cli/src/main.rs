mod analyze;
mod game_io;
mod lockin;
mod preset;
mod simulate;
mod svg;

use clap::{Args, Parser, Subcommand};
use lss_core::dynamics::{SchedulePair, StepSchedule};
use lss_core::stochastic::{NoiseKind, NoiseModel};

/// Exit codes: 0 success, 1 usage/config error, 2 analysis warning,
/// 3 divergence.
pub enum Outcome {
    Ok,
    AnalysisWarning,
    Divergence,
}

#[derive(Parser)]
#[command(
    name = "lss",
    version,
    about = "Local symplectic surgery and competing gradient dynamics for zero-sum games"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find and classify the critical points of a game.
    Analyze(analyze::AnalyzeArgs),
    /// Run one update rule (or limiting ODE) and emit CSV/JSON/SVG.
    Simulate(simulate::SimulateArgs),
    /// Run a canned experiment preset into a directory.
    Preset(preset::PresetArgs),
    /// Monte Carlo lock-in probability around an equilibrium.
    Lockin(lockin::LockinArgs),
}

/// Step-size flags shared by the run commands. alpha = 0 selects a
/// constant schedule with the given c.
#[derive(Args, Clone, Debug)]
pub struct ScheduleFlags {
    /// Slow (z) schedule coefficient.
    #[arg(long = "a-c", default_value_t = 0.004)]
    pub a_c: f64,
    /// Slow schedule exponent (0 = constant).
    #[arg(long = "a-alpha", default_value_t = 0.0)]
    pub a_alpha: f64,
    /// Fast (v) schedule coefficient.
    #[arg(long = "b-c", default_value_t = 0.005)]
    pub b_c: f64,
    /// Fast schedule exponent (0 = constant).
    #[arg(long = "b-alpha", default_value_t = 0.0)]
    pub b_alpha: f64,
}

impl ScheduleFlags {
    pub fn pair(&self) -> anyhow::Result<SchedulePair> {
        let mk = |c: f64, alpha: f64| -> anyhow::Result<StepSchedule> {
            Ok(if alpha == 0.0 {
                StepSchedule::constant(c)?
            } else {
                StepSchedule::power(c, alpha)?
            })
        };
        Ok(SchedulePair::new(mk(self.a_c, self.a_alpha)?, mk(self.b_c, self.b_alpha)?))
    }
}

#[derive(Args, Clone, Debug)]
pub struct NoiseFlags {
    /// Noise model: none | bounded-uniform | trunc-gaussian.
    #[arg(long, default_value = "none")]
    pub noise: String,
    /// z-noise bound coefficient c_z.
    #[arg(long, default_value_t = 0.05)]
    pub cz: f64,
    /// v-noise bound coefficient c_v.
    #[arg(long, default_value_t = 0.05)]
    pub cv: f64,
    /// Component std-dev for trunc-gaussian.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// RNG seed for the counter-based streams.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl NoiseFlags {
    pub fn model(&self) -> anyhow::Result<NoiseModel> {
        let kind = match self.noise.as_str() {
            "none" => NoiseKind::None,
            "bounded-uniform" => NoiseKind::BoundedUniform { c_z: self.cz, c_v: self.cv },
            "trunc-gaussian" => NoiseKind::TruncGaussian { c_z: self.cz, c_v: self.cv, sigma: self.sigma },
            other => anyhow::bail!("unknown noise model `{other}` (none | bounded-uniform | trunc-gaussian)"),
        };
        Ok(NoiseModel { kind, rng_seed: self.seed })
    }
}

/// LSS_THREADS caps concurrency; 0 = serial. Unset: number of cores.
pub fn threads_from_env() -> usize {
    match std::env::var("LSS_THREADS") {
        Ok(v) => v.trim().parse().unwrap_or(1),
        Err(_) => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    std::process::exit(0);
                }
                _ => {
                    eprint!("{e}");
                    std::process::exit(1);
                }
            }
        }
    };
    let result = match cli.command {
        Command::Analyze(args) => analyze::run(args),
        Command::Simulate(args) => simulate::run(args),
        Command::Preset(args) => preset::run(args),
        Command::Lockin(args) => lockin::run(args),
    };
    match result {
        Ok(Outcome::Ok) => {}
        Ok(Outcome::AnalysisWarning) => std::process::exit(2),
        Ok(Outcome::Divergence) => std::process::exit(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}
