//! Noise models with almost-sure norm bounds, noisy two-timescale runs,
//! and Monte Carlo lock-in probability estimation.

use nalgebra::DVector;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    co_drift, fast_target, lss_drift, omega_vec, sga_drift, tvlss_drift, DampingFunction,
    Lambda1Function, LambdaFunction, SchedulePair, Trajectory, TrajectorySample,
    TwoTimescaleState, DIVERGENCE_RADIUS,
};
use crate::error::{Error, Result};
use crate::game::{Game, StrategyPoint};
use crate::parallel::map_indexed;

const STREAM_Z: u64 = 0;
const STREAM_V: u64 = 1;
const STREAM_INIT: u64 = 2;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Counter-based stream: a fresh ChaCha8 generator keyed by
/// (seed, trial, n, stream), so draws are reproducible and trials are
/// embarrassingly parallel without shared state.
fn stream_rng(seed: u64, trial: u64, n: u64, stream: u64) -> ChaCha8Rng {
    let mut state = seed ^ 0x6A09E667F3BCC908;
    let mut key = [0u8; 32];
    for (chunk, salt) in key.chunks_exact_mut(8).zip([trial, n, stream, 0xBB67AE85]) {
        let word = splitmix64(&mut state) ^ salt.wrapping_mul(0x9E3779B97F4A7C15);
        chunk.copy_from_slice(&splitmix64(&mut (state ^ word)).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    None,
    /// Componentwise uniform, scaled so the realized norm never exceeds
    /// c (1 + ||z_n||).
    BoundedUniform { c_z: f64, c_v: f64 },
    /// Componentwise N(0, sigma^2), radially clamped to the same bound
    /// (clamping is symmetric, so the conditional mean stays zero).
    TruncGaussian { c_z: f64, c_v: f64, sigma: f64 },
}

/// Martingale-difference noise satisfying the conditional-independence,
/// zero-mean, and norm-bound assumptions by construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub rng_seed: u64,
}

impl NoiseModel {
    pub fn none() -> Self {
        Self { kind: NoiseKind::None, rng_seed: 0 }
    }

    pub fn is_none(&self) -> bool {
        matches!(self.kind, NoiseKind::None)
    }

    fn draw_one(&self, rng: &mut ChaCha8Rng, bound: f64, dim: usize) -> Vec<f64> {
        match self.kind {
            NoiseKind::None => vec![0.0; dim],
            NoiseKind::BoundedUniform { .. } => {
                let u = Uniform::new_inclusive(-1.0f64, 1.0);
                let scale = bound / (dim as f64).sqrt();
                (0..dim).map(|_| u.sample(rng) * scale).collect()
            }
            NoiseKind::TruncGaussian { sigma, .. } => {
                let mut m: Vec<f64> = (0..dim)
                    .map(|_| {
                        let g: f64 = StandardNormal.sample(rng);
                        g * sigma
                    })
                    .collect();
                let norm = m.iter().map(|c| c * c).sum::<f64>().sqrt();
                if norm > bound {
                    let s = bound / norm;
                    for c in &mut m {
                        *c *= s;
                    }
                }
                m
            }
        }
    }

    /// (M^z_{n+1}, M^v_{n+1}) for iterate n of `trial`. Deterministic in
    /// (seed, trial, n); the two vectors use independent stream splits.
    pub fn draw(&self, trial: u64, n: u64, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let dim = z.len();
        if self.is_none() {
            return (vec![0.0; dim], vec![0.0; dim]);
        }
        let znorm = z.iter().map(|c| c * c).sum::<f64>().sqrt();
        let (c_z, c_v) = match self.kind {
            NoiseKind::None => unreachable!(),
            NoiseKind::BoundedUniform { c_z, c_v } | NoiseKind::TruncGaussian { c_z, c_v, .. } => (c_z, c_v),
        };
        let mut rng_z = stream_rng(self.rng_seed, trial, n, STREAM_Z);
        let mut rng_v = stream_rng(self.rng_seed, trial, n, STREAM_V);
        let mz = self.draw_one(&mut rng_z, c_z * (1.0 + znorm), dim);
        let mv = self.draw_one(&mut rng_v, c_v * (1.0 + znorm), dim);
        (mz, mv)
    }
}

/// Discrete-time update rule for a run.
#[derive(Clone, Debug)]
pub enum Rule {
    SimGd,
    TwoTimescaleSimGd { swap_timescales: bool },
    Consensus { lambda_co: f64 },
    Sga { lambda_sga: f64 },
    Lss { lambda: LambdaFunction, damping: DampingFunction },
    Tvlss {
        lambda: LambdaFunction,
        lambda1: Lambda1Function,
        damping: DampingFunction,
        u0: DVector<f64>,
    },
}

impl Rule {
    pub fn name(&self) -> &'static str {
        match self {
            Rule::SimGd => "simgd",
            Rule::TwoTimescaleSimGd { .. } => "2ts-simgd",
            Rule::Consensus { .. } => "co",
            Rule::Sga { .. } => "sga",
            Rule::Lss { .. } => "lss",
            Rule::Tvlss { .. } => "tvlss",
        }
    }

    pub fn uses_v(&self) -> bool {
        matches!(self, Rule::Lss { .. } | Rule::Tvlss { .. })
    }

    fn lambda(&self) -> Option<&LambdaFunction> {
        match self {
            Rule::Lss { lambda, .. } | Rule::Tvlss { lambda, .. } => Some(lambda),
            _ => None,
        }
    }
}

/// Noisy two-timescale run per the displayed recursion: the noise enters
/// inside the bracket, pre-multiplied by the step size. `noise = None`
/// reproduces the deterministic run bit-exactly. Diagnostics (omega norm
/// and, for v-rules, the dense-solve gap ||v - v*(z)||) are recorded every
/// `stride`-th step.
pub fn run_noisy(
    game: &Game,
    rule: &Rule,
    state0: &TwoTimescaleState,
    schedules: &SchedulePair,
    noise: &NoiseModel,
    n_steps: u64,
    stride: u64,
) -> Result<Trajectory> {
    run_trial(game, rule, state0, schedules, noise, n_steps, stride, 0)
}

#[allow(clippy::too_many_arguments)]
fn run_trial(
    game: &Game,
    rule: &Rule,
    state0: &TwoTimescaleState,
    schedules: &SchedulePair,
    noise: &NoiseModel,
    n_steps: u64,
    stride: u64,
    trial: u64,
) -> Result<Trajectory> {
    if let Rule::Tvlss { .. } = rule {
        if state0.theta.is_none() {
            return Err(Error::InvalidInput(
                "tvlss runs need a state with theta (new_time_varying)".to_string(),
            ));
        }
    }
    let stride = stride.max(1);
    let mut traj = Trajectory::new(
        rule.name(),
        schedules.to_string(),
        noise.rng_seed,
        state0.z.dx(),
        state0.z.dy(),
    );
    let mut state = state0.clone();
    record_sample(game, rule, &mut traj, &state)?;
    let end = state0.n + n_steps;
    while state.n < end {
        let n = state.n;
        let a = schedules.slow.at(n);
        let b = schedules.fast.at(n);
        let next = step_once(game, rule, &state, a, b, noise, trial)?;
        let norm = next.z.coords().norm();
        if !norm.is_finite() || norm > DIVERGENCE_RADIUS {
            traj.diverged_at = Some(next.n);
            let last = if next.z.coords_slice().iter().all(|c| c.is_finite()) {
                next.z.coords_slice().to_vec()
            } else {
                state.z.coords_slice().to_vec()
            };
            return Err(Error::Divergence {
                step: next.n,
                last_finite: last,
                partial: Some(Box::new(traj)),
            });
        }
        state = next;
        if (state.n - state0.n) % stride == 0 || state.n == end {
            record_sample(game, rule, &mut traj, &state)?;
        }
    }
    Ok(traj)
}

fn step_once(
    game: &Game,
    rule: &Rule,
    state: &TwoTimescaleState,
    a: f64,
    b: f64,
    noise: &NoiseModel,
    trial: u64,
) -> Result<TwoTimescaleState> {
    let z = &state.z;
    let with_noise = !noise.is_none();
    let (mz, mv) = if with_noise {
        let (mz, mv) = noise.draw(trial, state.n, z.coords_slice());
        (Some(DVector::from_vec(mz)), Some(DVector::from_vec(mv)))
    } else {
        (None, None)
    };

    let mut theta = state.theta;
    let (next_z, next_v) = match rule {
        Rule::SimGd | Rule::Consensus { .. } | Rule::Sga { .. } => {
            let f = match rule {
                Rule::SimGd => omega_vec(game, z)?,
                Rule::Consensus { lambda_co } => co_drift(game, z, *lambda_co)?,
                Rule::Sga { lambda_sga } => sga_drift(game, z, *lambda_sga)?,
                _ => unreachable!(),
            };
            let nz = match &mz {
                Some(m) => z.coords() - a * (f + m),
                None => z.coords() - a * f,
            };
            (nz, state.v.clone())
        }
        Rule::TwoTimescaleSimGd { swap_timescales } => {
            let w = omega_vec(game, z)?;
            let (x_step, y_step) = if *swap_timescales { (a, b) } else { (b, a) };
            let mut nz = z.coords().clone();
            for i in 0..z.dim() {
                let s = if i < z.dx() { x_step } else { y_step };
                let f = match &mz {
                    Some(m) => w[i] + m[i],
                    None => w[i],
                };
                nz[i] -= s * f;
            }
            (nz, state.v.clone())
        }
        Rule::Lss { lambda, damping } => {
            let (fz, fv) = lss_drift(game, z, &state.v, lambda, damping)?;
            let nz = match &mz {
                Some(m) => z.coords() - a * (fz + m),
                None => z.coords() - a * fz,
            };
            let nv = match &mv {
                Some(m) => &state.v - b * (fv + m),
                None => &state.v - b * fv,
            };
            (nz, nv)
        }
        Rule::Tvlss { lambda, lambda1, damping, u0 } => {
            let th = state.theta.expect("validated on entry");
            let (th_next, fz, fv) =
                tvlss_drift(game, z, &state.v, th, a, lambda, lambda1, damping, u0)?;
            theta = Some(th_next);
            let nz = match &mz {
                Some(m) => z.coords() - a * (fz + m),
                None => z.coords() - a * fz,
            };
            let nv = match &mv {
                Some(m) => &state.v - b * (fv + m),
                None => &state.v - b * fv,
            };
            (nz, nv)
        }
    };

    Ok(TwoTimescaleState {
        z: z.with_coords(next_z)?,
        v: next_v,
        theta,
        n: state.n + 1,
    })
}

fn record_sample(
    game: &Game,
    rule: &Rule,
    traj: &mut Trajectory,
    state: &TwoTimescaleState,
) -> Result<()> {
    let w = omega_vec(game, &state.z)?;
    let (v, v_gap) = if rule.uses_v() {
        let lambda = rule.lambda().expect("v rules carry lambda");
        let gap = fast_target(game, &state.z, lambda)
            .ok()
            .map(|vstar| (&state.v - vstar).norm());
        (Some(state.v.as_slice().to_vec()), gap)
    } else {
        (None, None)
    };
    traj.samples.push(TrajectorySample {
        n: state.n,
        z: state.z.coords_slice().to_vec(),
        v,
        omega_norm: Some(w.norm()),
        v_gap,
    });
    Ok(())
}

/// Monte Carlo lock-in estimate around an equilibrium.
#[derive(Clone, Debug, Serialize)]
pub struct LockInEstimate {
    pub n0: u64,
    pub n1: u64,
    pub horizon: u64,
    pub r0: f64,
    pub epsilon: f64,
    pub trials: u64,
    pub successes: u64,
    pub p_hat: f64,
    /// 95% Wilson score interval for p_hat.
    pub wilson: (f64, f64),
    pub per_trial: Vec<TrialOutcome>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TrialOutcome {
    pub trial: u64,
    pub success: bool,
    /// Largest ||z_n - z*|| seen for n >= n1 (inf if the run diverged).
    pub max_dev_after_n1: f64,
}

#[derive(Clone, Debug)]
pub struct LockInConfig {
    pub r0: f64,
    pub epsilon: f64,
    pub n0: u64,
    pub n1: u64,
    pub horizon: u64,
    pub trials: u64,
    /// Radius of the ball around v*(z_{n0}) the fast iterate starts in.
    pub v_init_radius: f64,
    /// Worker threads for trials (0 or 1 = serial; identical statistics
    /// either way).
    pub threads: usize,
}

/// Wilson score interval.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // rounding at p in {0, 1} must not break 0 <= lo <= p <= hi <= 1
    let lo = (center - half).max(0.0).min(p);
    let hi = (center + half).min(1.0).max(p);
    (lo, hi)
}

/// For each trial: z_{n0} uniform in the R0-ball around `z_star`, v at
/// v*(z_{n0}) plus a small perturbation, run to `horizon` with the
/// schedule indices starting at n0; success iff ||z_n - z*|| <= epsilon
/// for all n in [n1, horizon].
pub fn estimate_lockin(
    game: &Game,
    rule: &Rule,
    z_star: &StrategyPoint,
    schedules: &SchedulePair,
    noise: &NoiseModel,
    cfg: &LockInConfig,
) -> Result<LockInEstimate> {
    if !(cfg.epsilon > 0.0 && cfg.epsilon < cfg.r0) {
        return Err(Error::InvalidInput(format!(
            "need 0 < epsilon < R0, got epsilon={}, R0={}",
            cfg.epsilon, cfg.r0
        )));
    }
    if !(cfg.n0 < cfg.n1 && cfg.n1 < cfg.horizon) {
        return Err(Error::InvalidInput(format!(
            "need n0 < n1 < horizon, got n0={}, n1={}, horizon={}",
            cfg.n0, cfg.n1, cfg.horizon
        )));
    }
    if cfg.trials == 0 {
        return Err(Error::InvalidInput("trials must be >= 1".to_string()));
    }
    let w_star = omega_vec(game, z_star)?;
    if w_star.norm() > 1e-6 {
        return Err(Error::InvalidInput(format!(
            "z_star is not a critical point (||omega|| = {:.3e})",
            w_star.norm()
        )));
    }
    let lambda = rule
        .lambda()
        .copied()
        .unwrap_or(LambdaFunction { xi1: 0.0 });

    let outcomes: Vec<Result<TrialOutcome>> = map_indexed(cfg.trials as usize, cfg.threads, |t| {
        run_lockin_trial(game, rule, z_star, schedules, noise, cfg, &lambda, t as u64)
    });
    let mut per_trial = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        per_trial.push(o?);
    }
    let successes = per_trial.iter().filter(|t| t.success).count() as u64;
    let p_hat = successes as f64 / cfg.trials as f64;
    Ok(LockInEstimate {
        n0: cfg.n0,
        n1: cfg.n1,
        horizon: cfg.horizon,
        r0: cfg.r0,
        epsilon: cfg.epsilon,
        trials: cfg.trials,
        successes,
        p_hat,
        wilson: wilson_interval(successes, cfg.trials, 1.959963984540054),
        per_trial,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_lockin_trial(
    game: &Game,
    rule: &Rule,
    z_star: &StrategyPoint,
    schedules: &SchedulePair,
    noise: &NoiseModel,
    cfg: &LockInConfig,
    lambda: &LambdaFunction,
    trial: u64,
) -> Result<TrialOutcome> {
    let d = z_star.dim();
    let mut rng = stream_rng(noise.rng_seed, trial, 0, STREAM_INIT);
    let z0 = z_star.with_coords(z_star.coords() + ball_sample(&mut rng, d, cfg.r0))?;
    let vstar = fast_target(game, &z0, lambda)?;
    let v0 = vstar + ball_sample(&mut rng, d, cfg.v_init_radius);
    let mut state = TwoTimescaleState::new(z0, v0)?.starting_at(cfg.n0);
    if matches!(rule, Rule::Tvlss { .. }) {
        state.theta = Some([1.0, 0.0]);
    }

    let mut max_dev: f64 = 0.0;
    while state.n < cfg.horizon {
        let a = schedules.slow.at(state.n);
        let b = schedules.fast.at(state.n);
        state = match step_once(game, rule, &state, a, b, noise, trial) {
            Ok(s) => s,
            Err(Error::Divergence { .. }) => {
                return Ok(TrialOutcome { trial, success: false, max_dev_after_n1: f64::INFINITY })
            }
            Err(e) => return Err(e),
        };
        let norm = state.z.coords().norm();
        if !norm.is_finite() || norm > DIVERGENCE_RADIUS {
            return Ok(TrialOutcome { trial, success: false, max_dev_after_n1: f64::INFINITY });
        }
        if state.n >= cfg.n1 {
            let dev = (state.z.coords() - z_star.coords()).norm();
            max_dev = max_dev.max(dev);
            if dev > cfg.epsilon {
                return Ok(TrialOutcome { trial, success: false, max_dev_after_n1: max_dev });
            }
        }
    }
    Ok(TrialOutcome { trial, success: true, max_dev_after_n1: max_dev })
}

/// Uniform draw from the radius-`r` ball (gaussian direction, radius via
/// the d-th root of a uniform).
fn ball_sample(rng: &mut ChaCha8Rng, dim: usize, r: f64) -> DVector<f64> {
    let mut dir: DVector<f64> = DVector::from_iterator(
        dim,
        (0..dim).map(|_| {
            let g: f64 = StandardNormal.sample(rng);
            g
        }),
    );
    let norm = dir.norm();
    if norm == 0.0 {
        return DVector::zeros(dim);
    }
    dir /= norm;
    let u: f64 = Uniform::new(0.0f64, 1.0).sample(rng);
    dir * (r * u.powf(1.0 / dim as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{lss_step, StepSchedule};
    use crate::game::Game;
    use crate::testutil::counterexample_game;

    fn toy_rule() -> Rule {
        Rule::Lss {
            lambda: LambdaFunction::new(1e-4).unwrap(),
            damping: DampingFunction::new(1e-4).unwrap(),
        }
    }

    fn constant_pair(a: f64, b: f64) -> SchedulePair {
        SchedulePair::new(
            StepSchedule::constant(a).unwrap(),
            StepSchedule::constant(b).unwrap(),
        )
    }

    #[test]
    fn none_noise_draws_zero() {
        let m = NoiseModel::none();
        let (mz, mv) = m.draw(0, 17, &[1.0, 2.0]);
        assert_eq!(mz, vec![0.0, 0.0]);
        assert_eq!(mv, vec![0.0, 0.0]);
    }

    #[test]
    fn draws_are_deterministic_per_key() {
        let m = NoiseModel { kind: NoiseKind::BoundedUniform { c_z: 0.1, c_v: 0.2 }, rng_seed: 7 };
        let a = m.draw(3, 99, &[0.5, -0.5]);
        let b = m.draw(3, 99, &[0.5, -0.5]);
        assert_eq!(a, b);
        let c = m.draw(3, 100, &[0.5, -0.5]);
        assert_ne!(a, c);
        let d = m.draw(4, 99, &[0.5, -0.5]);
        assert_ne!(a, d);
        // z and v draws come from independent stream splits
        assert_ne!(a.0, a.1);
    }

    #[test]
    fn bounded_uniform_statistics_and_bound() {
        let m = NoiseModel { kind: NoiseKind::BoundedUniform { c_z: 0.1, c_v: 0.1 }, rng_seed: 11 };
        let z = [1.5, -2.0];
        let bound = 0.1 * (1.0 + (1.5f64.powi(2) + 4.0).sqrt());
        let n_draws = 100_000;
        let mut sums = [0.0f64; 2];
        let mut sq = [0.0f64; 2];
        for n in 0..n_draws {
            let (mz, _) = m.draw(0, n, &z);
            let norm = (mz[0].powi(2) + mz[1].powi(2)).sqrt();
            assert!(norm <= bound + 1e-15, "norm {norm} > bound {bound}");
            sums[0] += mz[0];
            sums[1] += mz[1];
            sq[0] += mz[0] * mz[0];
            sq[1] += mz[1] * mz[1];
        }
        for k in 0..2 {
            let mean = sums[k] / n_draws as f64;
            let std = (sq[k] / n_draws as f64 - mean * mean).sqrt();
            let se = std / (n_draws as f64).sqrt();
            assert!(mean.abs() <= 3.0 * se, "component {k}: mean {mean}, se {se}");
        }
    }

    #[test]
    fn trunc_gaussian_respects_bound() {
        let m = NoiseModel {
            kind: NoiseKind::TruncGaussian { c_z: 0.05, c_v: 0.05, sigma: 1.0 },
            rng_seed: 5,
        };
        let z = [0.0, 0.0];
        for n in 0..20_000 {
            let (mz, mv) = m.draw(0, n, &z);
            for v in [&mz, &mv] {
                let norm = (v[0].powi(2) + v[1].powi(2)).sqrt();
                assert!(norm <= 0.05 + 1e-15);
            }
        }
    }

    #[test]
    fn martingale_difference_by_z_bucket() {
        // stratify draws by ||z||-bucket; per-bucket means stay within
        // 4 standard errors of zero
        let m = NoiseModel { kind: NoiseKind::BoundedUniform { c_z: 0.2, c_v: 0.2 }, rng_seed: 23 };
        let buckets = [[0.1, 0.0], [1.0, -1.0], [5.0, 5.0]];
        for (bi, z) in buckets.iter().enumerate() {
            let n_draws = 40_000;
            let mut sum = [0.0f64; 2];
            let mut sq = [0.0f64; 2];
            for n in 0..n_draws {
                let (mz, _) = m.draw(bi as u64, n, z);
                for k in 0..2 {
                    sum[k] += mz[k];
                    sq[k] += mz[k] * mz[k];
                }
            }
            for k in 0..2 {
                let mean = sum[k] / n_draws as f64;
                let std = (sq[k] / n_draws as f64 - mean * mean).sqrt();
                assert!(mean.abs() <= 4.0 * std / (n_draws as f64).sqrt());
            }
        }
    }

    #[test]
    fn noiseless_run_matches_manual_stepping_bitwise() {
        let game = counterexample_game();
        let z0 = game.point(&[0.3, -0.3]).unwrap();
        let state0 = TwoTimescaleState::new(z0, DVector::zeros(2)).unwrap();
        let schedules = constant_pair(0.004, 0.005);
        let rule = toy_rule();
        let traj = run_noisy(&game, &rule, &state0, &schedules, &NoiseModel::none(), 500, 1).unwrap();

        let (lambda, damping) = match &rule {
            Rule::Lss { lambda, damping } => (*lambda, *damping),
            _ => unreachable!(),
        };
        let mut state = state0;
        for _ in 0..500 {
            state = lss_step(&game, &state, 0.004, 0.005, &lambda, &damping).unwrap();
        }
        let last = traj.terminal().unwrap();
        assert_eq!(last.z, state.z.coords_slice().to_vec());
        assert_eq!(last.v.as_deref().unwrap(), state.v.as_slice());
    }

    #[test]
    fn identical_seeds_reproduce_bitwise_serial_and_parallel() {
        let game = Game::toy2d();
        let z0 = game.point(&[11.0, -5.5]).unwrap();
        let state0 = TwoTimescaleState::new(z0, DVector::zeros(2)).unwrap();
        let schedules = SchedulePair::new(
            StepSchedule::power(0.01, 0.8).unwrap(),
            StepSchedule::power(0.005, 0.6).unwrap(),
        );
        let noise = NoiseModel { kind: NoiseKind::BoundedUniform { c_z: 0.05, c_v: 0.05 }, rng_seed: 99 };
        let rule = toy_rule();
        let serial = run_noisy(&game, &rule, &state0, &schedules, &noise, 2_000, 1).unwrap();
        let runs = crate::parallel::map_indexed(4, 4, |_| {
            run_noisy(&game, &rule, &state0, &schedules, &noise, 2_000, 1).unwrap()
        });
        for r in &runs {
            assert_eq!(r.csv_string(), serial.csv_string());
        }
    }

    #[test]
    fn noisy_lss_stays_near_dne_on_toy2d() {
        // from inside the basin of the DNE at (12.395, -6.373)
        let game = Game::toy2d();
        let z_star = [12.395007146419, -6.372831318444];
        let schedules = SchedulePair::new(
            StepSchedule::power(0.01, 0.8).unwrap(),
            StepSchedule::power(0.005, 0.6).unwrap(),
        );
        let rule = toy_rule();
        let mut ok = 0;
        let total = 100;
        for seed in 0..total {
            let noise = NoiseModel { kind: NoiseKind::BoundedUniform { c_z: 0.05, c_v: 0.05 }, rng_seed: seed };
            let z0 = game.point(&[z_star[0] + 0.05, z_star[1] - 0.03]).unwrap();
            let state0 = TwoTimescaleState::new(z0, DVector::zeros(2)).unwrap();
            let traj = run_noisy(&game, &rule, &state0, &schedules, &noise, 40_000, 4_000).unwrap();
            let t = traj.terminal().unwrap();
            let dev = ((t.z[0] - z_star[0]).powi(2) + (t.z[1] - z_star[1]).powi(2)).sqrt();
            if dev <= 0.01 {
                ok += 1;
            }
        }
        assert!(ok >= 95, "only {ok}/{total} seeds stayed within 0.01");
    }

    #[test]
    fn noisy_lss_escapes_saddle_on_counterexample() {
        let game = counterexample_game();
        let schedules = constant_pair(0.01, 0.05);
        let rule = toy_rule();
        let mut escaped = 0;
        let total = 100;
        for seed in 0..total {
            let noise = NoiseModel { kind: NoiseKind::BoundedUniform { c_z: 0.05, c_v: 0.05 }, rng_seed: seed };
            // start in the 0.01-ball around the origin
            let mut rng_x = (seed as f64 * 0.617).sin() * 0.007;
            if rng_x == 0.0 {
                rng_x = 0.003;
            }
            let z0 = game.point(&[rng_x, -0.005]).unwrap();
            let state0 = TwoTimescaleState::new(z0, DVector::zeros(2)).unwrap();
            let traj = run_noisy(&game, &rule, &state0, &schedules, &noise, 20_000, 100).unwrap();
            if traj.samples.iter().any(|s| (s.z[0].powi(2) + s.z[1].powi(2)).sqrt() > 0.5) {
                escaped += 1;
            }
        }
        assert!(escaped >= 95, "only {escaped}/{total} seeds escaped the 0.5-ball");
    }

    #[test]
    fn lockin_rejects_bad_radii_and_ordering() {
        let game = Game::toy2d();
        let z_star = game.point(&[12.395007146419, -6.372831318444]).unwrap();
        let schedules = constant_pair(0.004, 0.005);
        let mut cfg = LockInConfig {
            r0: 0.1,
            epsilon: 0.2, // epsilon >= R0: rejected
            n0: 100,
            n1: 200,
            horizon: 300,
            trials: 2,
            v_init_radius: 0.01,
            threads: 0,
        };
        assert!(estimate_lockin(&game, &toy_rule(), &z_star, &schedules, &NoiseModel::none(), &cfg).is_err());
        cfg.epsilon = 0.05;
        cfg.n1 = 50; // n1 <= n0: rejected
        assert!(estimate_lockin(&game, &toy_rule(), &z_star, &schedules, &NoiseModel::none(), &cfg).is_err());
        // non-critical center: rejected
        cfg.n1 = 200;
        let off = game.point(&[1.0, 1.0]).unwrap();
        assert!(estimate_lockin(&game, &toy_rule(), &off, &schedules, &NoiseModel::none(), &cfg).is_err());
    }

    #[test]
    fn lockin_noise_free_is_certain() {
        let game = Game::toy2d();
        let z_star = game.point(&[12.395007146419, -6.372831318444]).unwrap();
        let schedules = SchedulePair::new(
            StepSchedule::power(0.05, 0.8).unwrap(),
            StepSchedule::power(0.2, 0.6).unwrap(),
        );
        let cfg = LockInConfig {
            r0: 0.1,
            epsilon: 0.05,
            n0: 1_000,
            n1: 11_000,
            horizon: 16_000,
            trials: 10,
            v_init_radius: 0.01,
            threads: 2,
        };
        let est = estimate_lockin(&game, &toy_rule(), &z_star, &schedules, &NoiseModel::none(), &cfg).unwrap();
        assert_eq!(est.successes, est.trials);
        assert_eq!(est.p_hat, 1.0);
        assert!(est.wilson.0 <= est.p_hat && est.p_hat <= est.wilson.1);
    }

    #[test]
    fn wilson_interval_brackets_p_hat() {
        let (lo, hi) = wilson_interval(180, 200, 1.959963984540054);
        let p = 0.9;
        assert!(lo > 0.8 && lo < p && p < hi && hi < 1.0);
        let (lo, hi) = wilson_interval(0, 50, 1.959963984540054);
        assert!(lo == 0.0 && hi > 0.0);
        let (lo, hi) = wilson_interval(50, 50, 1.959963984540054);
        assert!(hi == 1.0 && lo < 1.0);
    }
}
