use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Args;
use lss_core::dynamics::{DampingFunction, Lambda1Function, LambdaFunction};
use lss_core::stochastic::{estimate_lockin, LockInConfig, Rule};
use nalgebra::DVector;

use crate::game_io::{build_info, load_game, parse_floats};
use crate::{threads_from_env, NoiseFlags, Outcome, ScheduleFlags};

#[derive(Args, Clone, Debug)]
pub struct LockinArgs {
    /// Game spec JSON file.
    #[arg(long)]
    pub game: PathBuf,
    /// lss | tvlss.
    #[arg(long, default_value = "lss")]
    pub rule: String,
    /// Equilibrium z*, comma-separated (must be a critical point).
    #[arg(long, allow_hyphen_values = true)]
    pub center: String,
    /// Initialization ball radius R0.
    #[arg(long)]
    pub r0: f64,
    /// Lock-in radius epsilon (< R0).
    #[arg(long)]
    pub epsilon: f64,
    /// Iteration index at which trials begin.
    #[arg(long)]
    pub n0: u64,
    /// Lock-in must hold for all n in [n1, horizon].
    #[arg(long)]
    pub n1: u64,
    #[arg(long)]
    pub horizon: u64,
    #[arg(long, default_value_t = 200)]
    pub trials: u64,
    #[command(flatten)]
    pub schedules: ScheduleFlags,
    #[arg(long, default_value_t = 1e-4)]
    pub xi1: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub xi2: f64,
    #[command(flatten)]
    pub noise: NoiseFlags,
    /// Radius of the fast-iterate initialization ball around v*(z_0).
    #[arg(long = "v-init-radius", default_value_t = 0.01)]
    pub v_init_radius: f64,
    /// Output JSON (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional per-trial CSV: trial,seed,success,max_dev_after_n1.
    #[arg(long = "trial-csv")]
    pub trial_csv: Option<PathBuf>,
}

pub fn run(args: LockinArgs) -> Result<Outcome> {
    let loaded = load_game(&args.game)?;
    let center = parse_floats(&args.center)?;
    let z_star = loaded.game.point(&center)?;
    let lambda = LambdaFunction::new(args.xi1)?;
    let damping = DampingFunction::new(args.xi2)?;
    let rule = match args.rule.as_str() {
        "lss" => Rule::Lss { lambda, damping },
        "tvlss" => {
            let d = loaded.game.dim();
            Rule::Tvlss {
                lambda,
                lambda1: Lambda1Function::new(args.xi1)?,
                damping,
                u0: DVector::from_element(d, 1.0 / (d as f64).sqrt()),
            }
        }
        other => anyhow::bail!("lockin supports rules lss | tvlss, got `{other}`"),
    };
    let schedules = args.schedules.pair()?;
    let noise = args.noise.model()?;
    let cfg = LockInConfig {
        r0: args.r0,
        epsilon: args.epsilon,
        n0: args.n0,
        n1: args.n1,
        horizon: args.horizon,
        trials: args.trials,
        v_init_radius: args.v_init_radius,
        threads: threads_from_env(),
    };

    let start = Instant::now();
    let estimate = estimate_lockin(&loaded.game, &rule, &z_star, &schedules, &noise, &cfg)?;
    let wall_seconds = start.elapsed().as_secs_f64();

    if let Some(path) = &args.trial_csv {
        let mut text = String::from("trial,seed,success,max_dev_after_n1\n");
        for t in &estimate.per_trial {
            text.push_str(&format!(
                "{},{},{},{}\n",
                t.trial, noise.rng_seed, t.success, t.max_dev_after_n1
            ));
        }
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }

    let report = serde_json::json!({
        "config": {
            "command": "lockin",
            "argv": std::env::args().collect::<Vec<_>>(),
            "game_hash": loaded.hash,
            "rule": args.rule,
            "center": center,
            "r0": args.r0,
            "epsilon": args.epsilon,
            "n0": args.n0,
            "n1": args.n1,
            "horizon": args.horizon,
            "a_c": args.schedules.a_c,
            "a_alpha": args.schedules.a_alpha,
            "b_c": args.schedules.b_c,
            "b_alpha": args.schedules.b_alpha,
            "xi1": args.xi1,
            "xi2": args.xi2,
            "noise": args.noise.noise,
            "cz": args.noise.cz,
            "cv": args.noise.cv,
            "sigma": args.noise.sigma,
            "seed": args.noise.seed,
            "v_init_radius": args.v_init_radius,
        },
        "build": build_info(),
        "trials": estimate.trials,
        "successes": estimate.successes,
        "p_hat": estimate.p_hat,
        "wilson": [estimate.wilson.0, estimate.wilson.1],
        "wall_seconds": wall_seconds,
    });
    let text = serde_json::to_string_pretty(&report)?;
    match &args.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => println!("{text}"),
    }
    Ok(Outcome::Ok)
}
