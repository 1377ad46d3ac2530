use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use lss_core::dynamics::{
    integrate_ode_strided, DampingFunction, Lambda1Function, LambdaFunction, OdeField,
    SchedulePair, Trajectory, TwoTimescaleState,
};
use lss_core::equilibria::{classify, find_critical_points, Classification, SearchBox};
use lss_core::error::Error as CoreError;
use lss_core::game::Game;
use lss_core::stochastic::{run_noisy, Rule};
use nalgebra::DVector;

use crate::game_io::{build_info, load_game, parse_floats, LoadedGame};
use crate::svg::{fit_ranges, render, rule_color, Marker, MarkerGlyph, PlotSpec, Polyline};
use crate::{NoiseFlags, Outcome, ScheduleFlags};

#[derive(Args, Clone, Debug)]
pub struct SimulateArgs {
    /// Game spec JSON file.
    #[arg(long)]
    pub game: PathBuf,
    /// simgd | 2ts-simgd | co | sga | lss | tvlss | simgd-ode | lss-ode.
    #[arg(long)]
    pub rule: String,
    /// Initial point, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    pub init: String,
    #[arg(long)]
    pub steps: u64,
    /// RK4 step for the ODE rules.
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[command(flatten)]
    pub schedules: ScheduleFlags,
    /// lambda(z) bound xi1.
    #[arg(long, default_value_t = 1e-4)]
    pub xi1: f64,
    /// damping exponent xi2.
    #[arg(long, default_value_t = 1e-4)]
    pub xi2: f64,
    /// CO adjustment weight.
    #[arg(long = "lambda-co", default_value_t = 1.0)]
    pub lambda_co: f64,
    /// SGA adjustment weight.
    #[arg(long = "lambda-sga", default_value_t = 1.0)]
    pub lambda_sga: f64,
    /// Put the maximizer on the fast timescale in 2ts-simgd.
    #[arg(long = "swap-timescales", default_value_t = false)]
    pub swap_timescales: bool,
    /// TVLSS probe direction u0 (default (1,..,1)/sqrt(d)).
    #[arg(long, allow_hyphen_values = true)]
    pub u0: Option<String>,
    #[command(flatten)]
    pub noise: NoiseFlags,
    /// Record every k-th step.
    #[arg(long, default_value_t = 1)]
    pub stride: u64,
    /// Trajectory CSV path (a .json mirror is written next to it).
    #[arg(long)]
    pub out: PathBuf,
    /// Optional SVG plot (d = 2 games only).
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

pub fn build_rule(args: &SimulateArgs, game: &Game) -> Result<Rule> {
    let lambda = LambdaFunction::new(args.xi1)?;
    let damping = DampingFunction::new(args.xi2)?;
    Ok(match args.rule.as_str() {
        "simgd" => Rule::SimGd,
        "2ts-simgd" => Rule::TwoTimescaleSimGd { swap_timescales: args.swap_timescales },
        "co" => Rule::Consensus { lambda_co: args.lambda_co },
        "sga" => Rule::Sga { lambda_sga: args.lambda_sga },
        "lss" => Rule::Lss { lambda, damping },
        "tvlss" => {
            let u0 = match &args.u0 {
                Some(text) => DVector::from_vec(parse_floats(text)?),
                None => {
                    let d = game.dim();
                    DVector::from_element(d, 1.0 / (d as f64).sqrt())
                }
            };
            Rule::Tvlss { lambda, lambda1: Lambda1Function::new(args.xi1)?, damping, u0 }
        }
        other => bail!("unknown rule `{other}`"),
    })
}

enum RunResult {
    Completed(Trajectory),
    Diverged(Trajectory),
}

fn execute(args: &SimulateArgs, loaded: &LoadedGame) -> Result<RunResult> {
    let game = &loaded.game;
    let init = parse_floats(&args.init)?;
    let z0 = game.point(&init)?;

    let outcome = if args.rule == "simgd-ode" || args.rule == "lss-ode" {
        let field = if args.rule == "simgd-ode" {
            OdeField::Gradient
        } else {
            OdeField::Adjusted {
                lambda: LambdaFunction::new(args.xi1)?,
                damping: DampingFunction::new(args.xi2)?,
            }
        };
        integrate_ode_strided(game, &z0, &field, args.dt, args.steps, args.stride)
    } else {
        let rule = build_rule(args, game)?;
        let mut state = TwoTimescaleState::new(z0, DVector::zeros(game.dim()))?;
        if matches!(rule, Rule::Tvlss { .. }) {
            state.theta = Some([1.0, 0.0]);
        }
        let pair: SchedulePair = args.schedules.pair()?;
        run_noisy(game, &rule, &state, &pair, &args.noise.model()?, args.steps, args.stride)
    };

    match outcome {
        Ok(traj) => Ok(RunResult::Completed(traj)),
        Err(CoreError::Divergence { partial: Some(partial), .. }) => Ok(RunResult::Diverged(*partial)),
        Err(e) => Err(e.into()),
    }
}

pub fn write_outputs(
    traj: &Trajectory,
    loaded: &LoadedGame,
    args_echo: serde_json::Value,
    csv_path: &Path,
    svg_path: Option<&Path>,
) -> Result<()> {
    let mut csv = Vec::new();
    traj.write_csv(&mut csv)?;
    std::fs::write(csv_path, csv).with_context(|| format!("writing {}", csv_path.display()))?;

    let mirror = serde_json::json!({
        "config": args_echo,
        "build": build_info(),
        "game": loaded.spec,
        "game_hash": loaded.hash,
        "trajectory": traj,
    });
    let json_path = csv_path.with_extension("json");
    std::fs::write(&json_path, serde_json::to_string_pretty(&mirror)?)
        .with_context(|| format!("writing {}", json_path.display()))?;

    if let Some(svg_path) = svg_path {
        let svg = plot_trajectories(&loaded.game, std::slice::from_ref(traj))?;
        std::fs::write(svg_path, svg).with_context(|| format!("writing {}", svg_path.display()))?;
    }
    Ok(())
}

/// Plot trajectories over the game's critical-point markers (d = 2 only).
pub fn plot_trajectories(game: &Game, trajectories: &[Trajectory]) -> Result<String> {
    if game.dim() != 2 {
        bail!("svg plots are only valid for d = 2 games");
    }
    let lines: Vec<Polyline> = trajectories
        .iter()
        .map(|t| Polyline {
            label: t.rule.clone(),
            color: rule_color(&t.rule).to_string(),
            points: t.samples.iter().map(|s| [s.z[0], s.z[1]]).collect(),
        })
        .collect();
    let markers = critical_markers(game, &lines);
    let (x_range, y_range) = fit_ranges(&lines, &markers);
    let spec = PlotSpec { x_range, y_range, width: 640.0, height: 480.0 };
    render(&spec, &lines, &markers)
}

fn critical_markers(game: &Game, lines: &[Polyline]) -> Vec<Marker> {
    // search over the plotted region, expanded enough to catch markers
    // just outside the path
    let (xr, yr) = fit_ranges(lines, &[]);
    let span = ((xr.1 - xr.0).max(yr.1 - yr.0)).max(2.0);
    let lo = vec![xr.0 - 0.2 * span, yr.0 - 0.2 * span];
    let hi = vec![xr.1 + 0.2 * span, yr.1 + 0.2 * span];
    let Ok(bx) = SearchBox::new(lo, hi) else { return Vec::new() };
    let Ok(found) = find_critical_points(game, &bx, 15, 1e-12, 200) else {
        return Vec::new();
    };
    let lambda = LambdaFunction::new(1e-4).expect("valid");
    let damping = DampingFunction::new(1e-4).expect("valid");
    found
        .points
        .iter()
        .filter_map(|cp| {
            let class = classify(game, cp, &lambda, &damping).ok()?.classification;
            let glyph = match class {
                Classification::Dne => MarkerGlyph::Nash,
                Classification::NonNashLase => MarkerGlyph::NonNash,
                _ => MarkerGlyph::Other,
            };
            Some(Marker { pos: [cp.z.coords()[0], cp.z.coords()[1]], glyph })
        })
        .collect()
}

pub fn run(args: SimulateArgs) -> Result<Outcome> {
    let loaded = load_game(&args.game)?;
    if args.svg.is_some() && loaded.game.dim() != 2 {
        bail!("--svg is only valid for d = 2 games");
    }
    let echo = serde_json::json!({
        "command": "simulate",
        "argv": std::env::args().collect::<Vec<_>>(),
        "rule": args.rule,
        "init": args.init,
        "steps": args.steps,
        "dt": args.dt,
        "stride": args.stride,
        "a_c": args.schedules.a_c,
        "a_alpha": args.schedules.a_alpha,
        "b_c": args.schedules.b_c,
        "b_alpha": args.schedules.b_alpha,
        "xi1": args.xi1,
        "xi2": args.xi2,
        "lambda_co": args.lambda_co,
        "lambda_sga": args.lambda_sga,
        "swap_timescales": args.swap_timescales,
        "noise": args.noise.noise,
        "cz": args.noise.cz,
        "cv": args.noise.cv,
        "sigma": args.noise.sigma,
        "seed": args.noise.seed,
    });
    match execute(&args, &loaded)? {
        RunResult::Completed(traj) => {
            write_outputs(&traj, &loaded, echo, &args.out, args.svg.as_deref())?;
            Ok(Outcome::Ok)
        }
        RunResult::Diverged(partial) => {
            write_outputs(&partial, &loaded, echo, &args.out, args.svg.as_deref())?;
            eprintln!("simulate: diverged at n={}", partial.diverged_at.unwrap_or(0));
            Ok(Outcome::Divergence)
        }
    }
}
