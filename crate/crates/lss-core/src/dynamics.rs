//! Step rules and integrators: simGD, two-timescale simGD, consensus
//! optimization, SGA, the limiting adjusted field h, LSS, TVLSS, plus
//! step-size schedules and the lambda/damping functions.

use std::fmt;
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::autodiff::{j_vec_via_two_jtv, jt_vec};
use crate::error::{Error, Result};
use crate::game::{eval_jacobian, eval_omega, Game, StrategyPoint};

/// Iterates whose norm passes this radius are treated as diverged.
pub const DIVERGENCE_RADIUS: f64 = 1e6;

/// Step-size sequence gamma_n.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepSchedule {
    Constant { gamma: f64 },
    /// gamma_n = c / (1 + n)^alpha.
    Power { c: f64, alpha: f64 },
}

impl StepSchedule {
    pub fn constant(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::InvalidInput(format!("step size must be > 0, got {gamma}")));
        }
        Ok(Self::Constant { gamma })
    }

    pub fn power(c: f64, alpha: f64) -> Result<Self> {
        if !(c > 0.0) || !(alpha >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "power schedule needs c > 0 and alpha >= 0, got c={c}, alpha={alpha}"
            )));
        }
        Ok(Self::Power { c, alpha })
    }

    pub fn at(&self, n: u64) -> f64 {
        match *self {
            Self::Constant { gamma } => gamma,
            Self::Power { c, alpha } => c / (1.0 + n as f64).powf(alpha),
        }
    }

    /// sum gamma_n = infinity.
    pub fn sum_diverges(&self) -> bool {
        match *self {
            Self::Constant { .. } => true,
            Self::Power { alpha, .. } => alpha <= 1.0,
        }
    }

    /// sum gamma_n^2 < infinity.
    pub fn squares_summable(&self) -> bool {
        match *self {
            Self::Constant { .. } => false,
            Self::Power { alpha, .. } => alpha > 0.5,
        }
    }

    pub fn vanishes(&self) -> bool {
        match *self {
            Self::Constant { .. } => false,
            Self::Power { alpha, .. } => alpha > 0.0,
        }
    }
}

impl fmt::Display for StepSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Constant { gamma } => write!(f, "const({gamma})"),
            Self::Power { c, alpha } => write!(f, "power(c={c},alpha={alpha})"),
        }
    }
}

/// Which of the step-size assumptions a paired (slow, fast) schedule meets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairProperties {
    pub slow_sum_diverges: bool,
    pub fast_sum_diverges: bool,
    pub slow_squares_summable: bool,
    pub fast_squares_summable: bool,
    /// a_n / b_n -> 0, verified symbolically. True for Power pairs with
    /// alpha_slow > alpha_fast and for Power-over-Constant; everything
    /// else is flagged false.
    pub ratio_vanishes: bool,
}

impl PairProperties {
    pub fn all_hold(&self) -> bool {
        self.slow_sum_diverges
            && self.fast_sum_diverges
            && self.slow_squares_summable
            && self.fast_squares_summable
            && self.ratio_vanishes
    }
}

/// Paired schedules: `slow` drives the z (and theta) iterate, `fast` the
/// v iterate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchedulePair {
    pub slow: StepSchedule,
    pub fast: StepSchedule,
}

impl SchedulePair {
    pub fn new(slow: StepSchedule, fast: StepSchedule) -> Self {
        Self { slow, fast }
    }

    pub fn properties(&self) -> PairProperties {
        let ratio_vanishes = match (self.slow, self.fast) {
            (StepSchedule::Power { alpha: aa, .. }, StepSchedule::Power { alpha: ab, .. }) => aa > ab,
            (StepSchedule::Power { alpha, .. }, StepSchedule::Constant { .. }) => alpha > 0.0,
            _ => false,
        };
        PairProperties {
            slow_sum_diverges: self.slow.sum_diverges(),
            fast_sum_diverges: self.fast.sum_diverges(),
            slow_squares_summable: self.slow.squares_summable(),
            fast_squares_summable: self.fast.squares_summable(),
            ratio_vanishes,
        }
    }
}

impl fmt::Display for SchedulePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a={}, b={}", self.slow, self.fast)
    }
}

/// lambda(z) = xi1 (1 - exp(-||omega(z)||^2)): bounded by xi1, zero
/// exactly at critical points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaFunction {
    pub xi1: f64,
}

impl LambdaFunction {
    /// xi1 = 0 is allowed and gives the unregularized solve (for games
    /// whose J is invertible).
    pub fn new(xi1: f64) -> Result<Self> {
        if !(xi1 >= 0.0) {
            return Err(Error::InvalidInput(format!("xi1 must be >= 0, got {xi1}")));
        }
        Ok(Self { xi1 })
    }

    pub fn value(&self, omega: &DVector<f64>) -> f64 {
        self.xi1 * (1.0 - (-omega.norm_squared()).exp())
    }
}

/// g(u) = exp(-xi2 ||u||^2) applied to the adjustment vector u = J^T v;
/// g = 1 when u = 0 so critical-point behavior is untouched.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DampingFunction {
    pub xi2: f64,
}

impl DampingFunction {
    pub fn new(xi2: f64) -> Result<Self> {
        if !(xi2 >= 0.0) {
            return Err(Error::InvalidInput(format!("xi2 must be >= 0, got {xi2}")));
        }
        Ok(Self { xi2 })
    }

    pub fn value(&self, u: &DVector<f64>) -> f64 {
        (-self.xi2 * u.norm_squared()).exp()
    }
}

/// lambda_1(z) = xi1 (1 - exp(-||omega||^2))^2 for the time-varying term.
/// The square makes D_z lambda_1 vanish at critical points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lambda1Function {
    pub xi1: f64,
}

impl Lambda1Function {
    pub fn new(xi1: f64) -> Result<Self> {
        if !(xi1 >= 0.0) {
            return Err(Error::InvalidInput(format!("xi1 must be >= 0, got {xi1}")));
        }
        Ok(Self { xi1 })
    }

    pub fn value(&self, omega: &DVector<f64>) -> f64 {
        let base = 1.0 - (-omega.norm_squared()).exp();
        self.xi1 * base * base
    }
}

/// (z, v) pair advanced by one step rule per iteration; theta present
/// only for TVLSS.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoTimescaleState {
    pub z: StrategyPoint,
    pub v: DVector<f64>,
    pub theta: Option<[f64; 2]>,
    pub n: u64,
}

impl TwoTimescaleState {
    pub fn new(z: StrategyPoint, v: DVector<f64>) -> Result<Self> {
        if v.len() != z.dim() {
            return Err(Error::DimensionMismatch {
                expected: z.dim(),
                got: v.len(),
            });
        }
        Ok(Self { z, v, theta: None, n: 0 })
    }

    /// TVLSS state; theta_0 = (1, 0) realizes u(t) = cos(t) u0.
    pub fn new_time_varying(z: StrategyPoint, v: DVector<f64>) -> Result<Self> {
        let mut s = Self::new(z, v)?;
        s.theta = Some([1.0, 0.0]);
        Ok(s)
    }

    pub fn starting_at(mut self, n: u64) -> Self {
        self.n = n;
        self
    }
}

// ---------------------------------------------------------------------------
// drifts (the bracketed fields of the update rules, noise-free)
// ---------------------------------------------------------------------------

pub(crate) fn omega_vec(game: &Game, z: &StrategyPoint) -> Result<DVector<f64>> {
    Ok(eval_omega(game, z)?.into_vector())
}

pub(crate) fn co_drift(game: &Game, z: &StrategyPoint, lambda_co: f64) -> Result<DVector<f64>> {
    let w = omega_vec(game, z)?;
    let jtw = jt_vec(game, z, w.as_slice())?;
    Ok(&w + lambda_co * jtw)
}

pub(crate) fn sga_drift(game: &Game, z: &StrategyPoint, lambda_sga: f64) -> Result<DVector<f64>> {
    let w = omega_vec(game, z)?;
    // (J - J^T)^T omega = J^T omega - J omega
    let jtw = jt_vec(game, z, w.as_slice())?;
    let jw = j_vec_via_two_jtv(game, z, w.as_slice())?;
    Ok(&w + (lambda_sga / 2.0) * (jtw - jw))
}

/// z-drift and v-drift of LSS: (omega + g(J^T v) J^T v,
/// J^T J v - J^T omega + lambda(z) v). Matrix products via JVPs only.
pub(crate) fn lss_drift(
    game: &Game,
    z: &StrategyPoint,
    v: &DVector<f64>,
    lambda: &LambdaFunction,
    damping: &DampingFunction,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let w = omega_vec(game, z)?;
    let jtv = jt_vec(game, z, v.as_slice())?;
    let g = damping.value(&jtv);
    let jv = j_vec_via_two_jtv(game, z, v.as_slice())?;
    let jtjv = jt_vec(game, z, jv.as_slice())?;
    let jtw = jt_vec(game, z, w.as_slice())?;
    let lam = lambda.value(&w);
    let fz = &w + g * jtv;
    let fv = jtjv - jtw + lam * v;
    Ok((fz, fv))
}

/// theta advance (forward Euler on the rotation field) and the TVLSS
/// drifts. The z-drift uses the freshly advanced theta.
pub(crate) fn tvlss_drift(
    game: &Game,
    z: &StrategyPoint,
    v: &DVector<f64>,
    theta: [f64; 2],
    a_n: f64,
    lambda: &LambdaFunction,
    lambda1: &Lambda1Function,
    damping: &DampingFunction,
    u0: &DVector<f64>,
) -> Result<([f64; 2], DVector<f64>, DVector<f64>)> {
    let theta_next = [theta[0] - a_n * theta[1], theta[1] + a_n * theta[0]];
    let w = omega_vec(game, z)?;
    let jtv = jt_vec(game, z, v.as_slice())?;
    let g = damping.value(&jtv);
    let jv = j_vec_via_two_jtv(game, z, v.as_slice())?;
    let jtjv = jt_vec(game, z, jv.as_slice())?;
    let jtw = jt_vec(game, z, w.as_slice())?;
    let lam = lambda.value(&w);
    let lam1 = lambda1.value(&w);
    let fz = &w + g * jtv + (lam1 * theta_next[0]) * u0;
    let fv = jtjv - jtw + lam * v;
    Ok((theta_next, fz, fv))
}

fn finite_or_divergence(coords: &DVector<f64>, prev: &StrategyPoint, n: u64) -> Result<()> {
    if coords.iter().any(|c| !c.is_finite()) {
        return Err(Error::Divergence {
            step: n,
            last_finite: prev.coords_slice().to_vec(),
            partial: None,
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// step rules
// ---------------------------------------------------------------------------

/// z' = z - gamma omega(z).
pub fn simgd_step(game: &Game, z: &StrategyPoint, gamma: f64) -> Result<StrategyPoint> {
    let w = omega_vec(game, z)?;
    let next = z.coords() - gamma * w;
    finite_or_divergence(&next, z, 0)?;
    z.with_coords(next)
}

/// Two-timescale simGD: the x block moves on the fast step `b_n`, the y
/// block on the slow step `a_n` (a_n / b_n -> 0). `swap_timescales`
/// flips the assignment.
pub fn two_timescale_simgd_step(
    game: &Game,
    z: &StrategyPoint,
    a_n: f64,
    b_n: f64,
    swap_timescales: bool,
) -> Result<StrategyPoint> {
    let w = omega_vec(game, z)?;
    let (x_step, y_step) = if swap_timescales { (a_n, b_n) } else { (b_n, a_n) };
    let mut next = z.coords().clone();
    for i in 0..z.dim() {
        let s = if i < z.dx() { x_step } else { y_step };
        next[i] -= s * w[i];
    }
    finite_or_divergence(&next, z, 0)?;
    z.with_coords(next)
}

/// Consensus optimization: z' = z - gamma (omega + lambda_co J^T omega).
pub fn consensus_step(
    game: &Game,
    z: &StrategyPoint,
    gamma: f64,
    lambda_co: f64,
) -> Result<StrategyPoint> {
    let f = co_drift(game, z, lambda_co)?;
    let next = z.coords() - gamma * f;
    finite_or_divergence(&next, z, 0)?;
    z.with_coords(next)
}

/// Symplectic gradient adjustment:
/// z' = z - gamma (omega + (lambda/2) (J - J^T)^T omega).
pub fn sga_step(
    game: &Game,
    z: &StrategyPoint,
    gamma: f64,
    lambda_sga: f64,
) -> Result<StrategyPoint> {
    let f = sga_drift(game, z, lambda_sga)?;
    let next = z.coords() - gamma * f;
    finite_or_divergence(&next, z, 0)?;
    z.with_coords(next)
}

/// v*(z) = (J^T J + lambda(z) I)^{-1} J^T omega, by dense solve. This is
/// the fast timescale's stationary point for frozen z and the reference
/// for the `v_gap` diagnostic.
pub fn fast_target(game: &Game, z: &StrategyPoint, lambda: &LambdaFunction) -> Result<DVector<f64>> {
    let w = omega_vec(game, z)?;
    let j = eval_jacobian(game, z)?.matrix;
    let lam = lambda.value(&w);
    let m = j.transpose() * &j + DMatrix::identity(z.dim(), z.dim()) * lam;
    let rhs = j.transpose() * &w;
    match m.clone().lu().solve(&rhs) {
        Some(sol) => Ok(sol),
        None => {
            let min_sv = m.svd(false, false).singular_values.min();
            Err(Error::SingularSolve {
                coords: z.coords_slice().to_vec(),
                min_singular_value: min_sv,
            })
        }
    }
}

/// The adjusted field h(z) = omega + g(u) u with
/// u = J^T (J^T J + lambda(z) I)^{-1} J^T omega, by dense solve.
pub fn limiting_h(
    game: &Game,
    z: &StrategyPoint,
    lambda: &LambdaFunction,
    damping: &DampingFunction,
) -> Result<DVector<f64>> {
    let w = omega_vec(game, z)?;
    let j = eval_jacobian(game, z)?.matrix;
    let vstar = fast_target(game, z, lambda)?;
    let u = j.transpose() * vstar;
    let g = damping.value(&u);
    Ok(w + g * u)
}

/// One LSS update (Algorithm 1 with the least-squares v-drift):
/// z' = z - a_n (omega + g(J^T v) J^T v),
/// v' = v - b_n (J^T J v - J^T omega + lambda(z) v).
pub fn lss_step(
    game: &Game,
    state: &TwoTimescaleState,
    a_n: f64,
    b_n: f64,
    lambda: &LambdaFunction,
    damping: &DampingFunction,
) -> Result<TwoTimescaleState> {
    let (fz, fv) = lss_drift(game, &state.z, &state.v, lambda, damping)?;
    let next_z = state.z.coords() - a_n * fz;
    let next_v = &state.v - b_n * fv;
    finite_or_divergence(&next_z, &state.z, state.n)?;
    Ok(TwoTimescaleState {
        z: state.z.with_coords(next_z)?,
        v: next_v,
        theta: state.theta,
        n: state.n + 1,
    })
}

/// One TVLSS update: theta advances by Euler on the rotation field, the
/// z-drift additionally subtracts a_n lambda_1(z) theta'_1 u0.
pub fn tvlss_step(
    game: &Game,
    state: &TwoTimescaleState,
    a_n: f64,
    b_n: f64,
    lambda: &LambdaFunction,
    lambda1: &Lambda1Function,
    damping: &DampingFunction,
    u0: &DVector<f64>,
) -> Result<TwoTimescaleState> {
    let theta = state.theta.ok_or_else(|| {
        Error::InvalidInput("tvlss_step requires a state with theta (new_time_varying)".to_string())
    })?;
    if u0.len() != state.z.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.z.dim(),
            got: u0.len(),
        });
    }
    let (theta_next, fz, fv) =
        tvlss_drift(game, &state.z, &state.v, theta, a_n, lambda, lambda1, damping, u0)?;
    let next_z = state.z.coords() - a_n * fz;
    let next_v = &state.v - b_n * fv;
    finite_or_divergence(&next_z, &state.z, state.n)?;
    Ok(TwoTimescaleState {
        z: state.z.with_coords(next_z)?,
        v: next_v,
        theta: Some(theta_next),
        n: state.n + 1,
    })
}

// ---------------------------------------------------------------------------
// trajectories and the ODE integrator
// ---------------------------------------------------------------------------

/// One recorded state: iterate index, z, optional v, optional diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub n: u64,
    pub z: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_gap: Option<f64>,
}

/// Ordered iterates of one run; iteration indices strictly increase and
/// samples[0] is the initial condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub rule: String,
    pub schedule: String,
    pub seed: u64,
    pub dx: usize,
    pub dy: usize,
    pub samples: Vec<TrajectorySample>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diverged_at: Option<u64>,
}

impl Trajectory {
    pub fn new(rule: impl Into<String>, schedule: impl Into<String>, seed: u64, dx: usize, dy: usize) -> Self {
        Self {
            rule: rule.into(),
            schedule: schedule.into(),
            seed,
            dx,
            dy,
            samples: Vec::new(),
            diverged_at: None,
        }
    }

    pub fn terminal(&self) -> Option<&TrajectorySample> {
        self.samples.last()
    }

    /// CSV with header `n,z_0..z_{d-1}[,v_0..v_{d-1}][,omega_norm[,v_gap]]`.
    /// A diverged run gets a trailing `# DIVERGED at n=...` comment.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let d = self.dx + self.dy;
        let has_v = self.samples.first().is_some_and(|s| s.v.is_some());
        let has_omega = self.samples.first().is_some_and(|s| s.omega_norm.is_some());
        let has_gap = has_v && self.samples.first().is_some_and(|s| s.v_gap.is_some());
        let mut header = String::from("n");
        for i in 0..d {
            header.push_str(&format!(",z_{i}"));
        }
        if has_v {
            for i in 0..d {
                header.push_str(&format!(",v_{i}"));
            }
        }
        if has_omega {
            header.push_str(",omega_norm");
        }
        if has_gap {
            header.push_str(",v_gap");
        }
        writeln!(out, "{header}")?;
        for s in &self.samples {
            write!(out, "{}", s.n)?;
            for c in &s.z {
                write!(out, ",{c}")?;
            }
            if has_v {
                for c in s.v.as_deref().unwrap_or(&[]) {
                    write!(out, ",{c}")?;
                }
            }
            if has_omega {
                write!(out, ",{}", s.omega_norm.unwrap_or(f64::NAN))?;
            }
            if has_gap {
                write!(out, ",{}", s.v_gap.unwrap_or(f64::NAN))?;
            }
            writeln!(out)?;
        }
        if let Some(n) = self.diverged_at {
            writeln!(out, "# DIVERGED at n={n}")?;
        }
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

/// Which continuous-time field to integrate.
#[derive(Clone, Debug)]
pub enum OdeField {
    /// zdot = -omega(z) (the simGD flow).
    Gradient,
    /// zdot = -h(z) (the surgically adjusted flow).
    Adjusted {
        lambda: LambdaFunction,
        damping: DampingFunction,
    },
}

impl OdeField {
    fn eval(&self, game: &Game, z: &StrategyPoint) -> Result<DVector<f64>> {
        match self {
            OdeField::Gradient => omega_vec(game, z),
            OdeField::Adjusted { lambda, damping } => limiting_h(game, z, lambda, damping),
        }
    }

    pub fn rule_name(&self) -> &'static str {
        match self {
            OdeField::Gradient => "simgd-ode",
            OdeField::Adjusted { .. } => "lss-ode",
        }
    }
}

/// Classical fixed-step RK4 on zdot = -field(z). Stops with a divergence
/// error (carrying the partial trajectory) once ||z|| > 1e6.
pub fn integrate_ode(
    game: &Game,
    z0: &StrategyPoint,
    field: &OdeField,
    dt: f64,
    n_steps: u64,
) -> Result<Trajectory> {
    integrate_ode_strided(game, z0, field, dt, n_steps, 1)
}

/// RK4 with a recording stride; the initial and final states are always
/// recorded.
pub fn integrate_ode_strided(
    game: &Game,
    z0: &StrategyPoint,
    field: &OdeField,
    dt: f64,
    n_steps: u64,
    stride: u64,
) -> Result<Trajectory> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("dt must be > 0, got {dt}")));
    }
    let stride = stride.max(1);
    let mut traj = Trajectory::new(
        field.rule_name(),
        format!("rk4(dt={dt})"),
        0,
        z0.dx(),
        z0.dy(),
    );
    let mut z = z0.clone();
    record_ode_sample(game, &mut traj, 0, &z)?;
    for n in 0..n_steps {
        let k1 = -field.eval(game, &z)?;
        let z2 = z.with_coords(z.coords() + (dt / 2.0) * &k1)?;
        let k2 = -field.eval(game, &z2)?;
        let z3 = z.with_coords(z.coords() + (dt / 2.0) * &k2)?;
        let k3 = -field.eval(game, &z3)?;
        let z4 = z.with_coords(z.coords() + dt * &k3)?;
        let k4 = -field.eval(game, &z4)?;
        let next = z.coords() + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if next.iter().any(|c| !c.is_finite()) || next.norm() > DIVERGENCE_RADIUS {
            traj.diverged_at = Some(n + 1);
            let last = if next.iter().all(|c| c.is_finite()) {
                next.as_slice().to_vec()
            } else {
                z.coords_slice().to_vec()
            };
            return Err(Error::Divergence {
                step: n + 1,
                last_finite: last,
                partial: Some(Box::new(traj)),
            });
        }
        z = z.with_coords(next)?;
        if (n + 1) % stride == 0 || n + 1 == n_steps {
            record_ode_sample(game, &mut traj, n + 1, &z)?;
        }
    }
    Ok(traj)
}

fn record_ode_sample(game: &Game, traj: &mut Trajectory, n: u64, z: &StrategyPoint) -> Result<()> {
    let w = omega_vec(game, z)?;
    traj.samples.push(TrajectorySample {
        n,
        z: z.coords_slice().to_vec(),
        v: None,
        omega_norm: Some(w.norm()),
        v_gap: None,
    });
    Ok(())
}
