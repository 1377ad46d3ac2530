use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use lss_core::dynamics::{
    integrate_ode_strided, DampingFunction, LambdaFunction, OdeField,
    SchedulePair, StepSchedule, Trajectory, TwoTimescaleState,
};
use lss_core::equilibria::{classify, find_critical_points, Classification, CriticalPoint, SearchBox};
use lss_core::error::Error as CoreError;
use lss_core::game::{Game, GameSpec};
use lss_core::parallel::map_indexed;
use lss_core::stochastic::{run_noisy, NoiseModel, Rule};
use nalgebra::DVector;
use serde::Serialize;

use crate::game_io::{build_info, game_hash};
use crate::simulate::plot_trajectories;
use crate::{threads_from_env, Outcome};

pub const PRESET_NAMES: [&str; 3] = ["toy2d-figure1", "toy2d-figure2", "counterexample-appB"];

const XI: f64 = 1e-4;

#[derive(Args, Clone, Debug)]
pub struct PresetArgs {
    /// toy2d-figure1 | toy2d-figure2 | counterexample-appB.
    #[arg(long)]
    pub name: String,
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
}

#[derive(Clone, Debug)]
enum JobKind {
    Ode { field: OdeField, dt: f64, steps: u64, stride: u64 },
    Discrete { rule: Rule, schedules: SchedulePair, steps: u64, stride: u64 },
}

/// What the preset's outcome table asserts for one run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
enum Expectation {
    /// Terminal point classifies as a differential Nash equilibrium.
    Dne,
    /// Terminal point classifies as the non-Nash attractor.
    NonNash,
    /// Terminal within 1e-3 of the origin.
    Origin,
    /// The iterate leaves the 0.5-ball around the origin.
    EscapeBall,
}

#[derive(Clone, Debug)]
struct Job {
    name: String,
    rule_label: String,
    init: Vec<f64>,
    kind: JobKind,
    expected: Expectation,
    check_v_gap: bool,
}

#[derive(Serialize)]
struct RunSummary {
    name: String,
    rule: String,
    init: Vec<f64>,
    csv: String,
    svg: String,
    diverged_at: Option<u64>,
    terminal_z: Vec<f64>,
    /// Classification of the nearest critical point within 1e-3, or
    /// "escaped".
    terminal: String,
    expected: Expectation,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    v_gap_final_half_max: Option<f64>,
}

struct Analyzed {
    points: Vec<(CriticalPoint, Classification)>,
}

impl Analyzed {
    fn lase_inits(&self) -> Vec<(Classification, Vec<f64>)> {
        self.points
            .iter()
            .filter(|(_, c)| matches!(c, Classification::Dne | Classification::NonNashLase))
            .map(|(cp, c)| {
                let z = cp.z.coords();
                let n = z.norm();
                (*c, vec![z[0] - 0.3 * z[0] / n, z[1] - 0.3 * z[1] / n])
            })
            .collect()
    }

    fn classify_terminal(&self, z: &[f64]) -> String {
        let mut best: Option<(f64, Classification)> = None;
        for (cp, c) in &self.points {
            let d = cp
                .z
                .coords_slice()
                .iter()
                .zip(z)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if best.map_or(true, |(bd, _)| d < bd) {
                best = Some((d, *c));
            }
        }
        match best {
            Some((d, c)) if d <= 1e-3 => serde_json::to_value(c)
                .expect("classification serializes")
                .as_str()
                .expect("string")
                .to_string(),
            _ => "escaped".to_string(),
        }
    }
}

fn analyze_game(game: &Game, bx: &SearchBox, grid: usize) -> Result<Analyzed> {
    let lambda = LambdaFunction::new(XI)?;
    let damping = DampingFunction::new(XI)?;
    let report = find_critical_points(game, bx, grid, 1e-12, 200)?;
    let points = report
        .points
        .into_iter()
        .map(|p| {
            let c = classify(game, &p, &lambda, &damping)?.classification;
            Ok((p, c))
        })
        .collect::<Result<_>>()?;
    Ok(Analyzed { points })
}

fn lss_rule() -> Rule {
    Rule::Lss {
        lambda: LambdaFunction::new(XI).expect("valid"),
        damping: DampingFunction::new(XI).expect("valid"),
    }
}

fn toy_constant_pair() -> SchedulePair {
    SchedulePair::new(
        StepSchedule::constant(0.004).expect("valid"),
        StepSchedule::constant(0.005).expect("valid"),
    )
}

fn counterexample_game() -> Game {
    GameSpec::Quadratic {
        dx: 1,
        dy: 1,
        matrix: vec![vec![1.0, 1.0], vec![1.0, 0.1]],
    }
    .build()
    .expect("valid spec")
}

fn toy2d_figure1_jobs(analysis: &Analyzed) -> Vec<Job> {
    let mut jobs = Vec::new();
    for (i, (class, init)) in analysis.lase_inits().into_iter().enumerate() {
        let expected_gd = match class {
            Classification::NonNashLase => Expectation::NonNash,
            _ => Expectation::Dne,
        };
        jobs.push(Job {
            name: format!("simgd-ode_init{i}"),
            rule_label: "simgd-ode".into(),
            init: init.clone(),
            kind: JobKind::Ode { field: OdeField::Gradient, dt: 0.01, steps: 20_000, stride: 10 },
            expected: expected_gd,
            check_v_gap: false,
        });
        jobs.push(Job {
            name: format!("lss-ode_init{i}"),
            rule_label: "lss-ode".into(),
            init,
            kind: JobKind::Ode {
                field: OdeField::Adjusted {
                    lambda: LambdaFunction::new(XI).expect("valid"),
                    damping: DampingFunction::new(XI).expect("valid"),
                },
                dt: 0.01,
                steps: 20_000,
                stride: 10,
            },
            expected: Expectation::Dne,
            check_v_gap: false,
        });
    }
    jobs
}

fn toy2d_figure2_jobs(analysis: &Analyzed) -> Vec<Job> {
    let mut jobs = Vec::new();
    for (i, (_, init)) in analysis.lase_inits().into_iter().enumerate() {
        jobs.push(Job {
            name: format!("lss_init{i}"),
            rule_label: "lss".into(),
            init: init.clone(),
            kind: JobKind::Discrete {
                rule: lss_rule(),
                schedules: toy_constant_pair(),
                steps: 200_000,
                stride: 100,
            },
            expected: Expectation::Dne,
            check_v_gap: true,
        });
        jobs.push(Job {
            name: format!("lss-ode_init{i}"),
            rule_label: "lss-ode".into(),
            init,
            kind: JobKind::Ode {
                field: OdeField::Adjusted {
                    lambda: LambdaFunction::new(XI).expect("valid"),
                    damping: DampingFunction::new(XI).expect("valid"),
                },
                dt: 0.01,
                steps: 20_000,
                stride: 10,
            },
            expected: Expectation::Dne,
            check_v_gap: false,
        });
    }
    jobs
}

fn counterexample_jobs() -> Vec<Job> {
    let init = vec![0.3, -0.3];
    let gamma = SchedulePair::new(
        StepSchedule::constant(0.05).expect("valid"),
        StepSchedule::constant(0.05).expect("valid"),
    );
    let mut jobs = vec![Job {
        name: "2ts-simgd".into(),
        rule_label: "2ts-simgd".into(),
        init: init.clone(),
        kind: JobKind::Discrete {
            rule: Rule::TwoTimescaleSimGd { swap_timescales: false },
            schedules: SchedulePair::new(
                StepSchedule::power(0.5, 0.8).expect("valid"),
                StepSchedule::power(0.9, 0.6).expect("valid"),
            ),
            steps: 100_000,
            stride: 100,
        },
        expected: Expectation::Origin,
        check_v_gap: false,
    }];
    for lambda in [0.1, 1.0, 10.0] {
        jobs.push(Job {
            name: format!("co_lambda{lambda}"),
            rule_label: "co".into(),
            init: init.clone(),
            kind: JobKind::Discrete {
                rule: Rule::Consensus { lambda_co: lambda },
                schedules: gamma,
                steps: 20_000,
                stride: 20,
            },
            expected: Expectation::Origin,
            check_v_gap: false,
        });
        jobs.push(Job {
            name: format!("sga_lambda{lambda}"),
            rule_label: "sga".into(),
            init: init.clone(),
            kind: JobKind::Discrete {
                rule: Rule::Sga { lambda_sga: lambda },
                schedules: gamma,
                steps: 20_000,
                stride: 20,
            },
            expected: Expectation::Origin,
            check_v_gap: false,
        });
    }
    jobs.push(Job {
        name: "lss".into(),
        rule_label: "lss".into(),
        init,
        kind: JobKind::Discrete {
            rule: lss_rule(),
            schedules: toy_constant_pair(),
            steps: 20_000,
            stride: 20,
        },
        expected: Expectation::EscapeBall,
        check_v_gap: false,
    });
    jobs
}

fn run_job(game: &Game, job: &Job) -> Result<(Trajectory, Option<u64>)> {
    let z0 = game.point(&job.init)?;
    let outcome = match &job.kind {
        JobKind::Ode { field, dt, steps, stride } => {
            integrate_ode_strided(game, &z0, field, *dt, *steps, *stride)
        }
        JobKind::Discrete { rule, schedules, steps, stride } => {
            let mut state = TwoTimescaleState::new(z0, DVector::zeros(game.dim()))?;
            if matches!(rule, Rule::Tvlss { .. }) {
                state.theta = Some([1.0, 0.0]);
            }
            run_noisy(game, rule, &state, schedules, &NoiseModel::none(), *steps, *stride)
        }
    };
    match outcome {
        Ok(t) => Ok((t, None)),
        Err(CoreError::Divergence { step, partial: Some(partial), .. }) => Ok((*partial, Some(step))),
        Err(e) => Err(e.into()),
    }
}

fn evaluate(job: &Job, traj: &Trajectory, diverged: Option<u64>, analysis: &Analyzed) -> RunSummary {
    let terminal_z = traj.terminal().map(|s| s.z.clone()).unwrap_or_default();
    let terminal = analysis.classify_terminal(&terminal_z);
    let norm = terminal_z.iter().map(|c| c * c).sum::<f64>().sqrt();
    let exited = traj
        .samples
        .iter()
        .any(|s| s.z.iter().map(|c| c * c).sum::<f64>().sqrt() > 0.5);
    let pass = diverged.is_none()
        && match job.expected {
            Expectation::Dne => terminal == "dne",
            Expectation::NonNash => terminal == "non_nash_lase",
            Expectation::Origin => norm <= 1e-3 && terminal == "non_nash_lase",
            Expectation::EscapeBall => exited && norm > 0.5,
        };
    let v_gap_final_half_max = if job.check_v_gap {
        let half = traj.samples.len() / 2;
        traj.samples[half..]
            .iter()
            .filter_map(|s| s.v_gap)
            .fold(None, |acc: Option<f64>, g| Some(acc.map_or(g, |a| a.max(g))))
    } else {
        None
    };
    RunSummary {
        name: job.name.clone(),
        rule: job.rule_label.clone(),
        init: job.init.clone(),
        csv: format!("{}.csv", job.name),
        svg: format!("{}.svg", job.name),
        diverged_at: diverged,
        terminal_z,
        terminal,
        expected: job.expected,
        pass,
        v_gap_final_half_max,
    }
}

pub fn run(args: PresetArgs) -> Result<Outcome> {
    let (game, spec, jobs, analysis) = match args.name.as_str() {
        "toy2d-figure1" | "toy2d-figure2" => {
            let game = Game::toy2d();
            let analysis = analyze_game(&game, &SearchBox::cube(-20.0, 20.0, 2)?, 40)?;
            let jobs = if args.name == "toy2d-figure1" {
                toy2d_figure1_jobs(&analysis)
            } else {
                toy2d_figure2_jobs(&analysis)
            };
            (game, GameSpec::Toy2d { dx: 1, dy: 1 }, jobs, analysis)
        }
        "counterexample-appB" => {
            let game = counterexample_game();
            let analysis = analyze_game(&game, &SearchBox::cube(-2.0, 2.0, 2)?, 5)?;
            let spec = game.spec().expect("quadratic has a spec");
            (game, spec, counterexample_jobs(), analysis)
        }
        other => bail!(
            "unknown preset `{other}` (valid: {})",
            PRESET_NAMES.join(", ")
        ),
    };

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;

    let threads = threads_from_env();
    let results: Vec<Result<RunSummary>> = map_indexed(jobs.len(), threads, |i| {
        let job = &jobs[i];
        let (traj, diverged) = run_job(&game, job)?;
        write_run_files(&args.out_dir, job, &game, &traj)?;
        Ok(evaluate(job, &traj, diverged, &analysis))
    });
    let mut runs = Vec::with_capacity(results.len());
    for r in results {
        runs.push(r?);
    }

    let all_pass = runs.iter().all(|r| r.pass);
    let any_diverged = runs.iter().any(|r| r.diverged_at.is_some());
    let summary = serde_json::json!({
        "preset": args.name,
        "build": build_info(),
        "game": spec,
        "game_hash": game_hash(&spec),
        "runs": runs,
        "all_pass": all_pass,
        "any_diverged": any_diverged,
    });
    std::fs::write(
        args.out_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;

    if any_diverged {
        return Ok(Outcome::Divergence);
    }
    Ok(Outcome::Ok)
}

fn write_run_files(dir: &Path, job: &Job, game: &Game, traj: &Trajectory) -> Result<()> {
    let mut csv = Vec::new();
    traj.write_csv(&mut csv)?;
    std::fs::write(dir.join(format!("{}.csv", job.name)), csv)?;
    let svg = plot_trajectories(game, std::slice::from_ref(traj))?;
    std::fs::write(dir.join(format!("{}.svg", job.name)), svg)?;
    Ok(())
}
