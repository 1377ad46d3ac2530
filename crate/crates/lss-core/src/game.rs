//! Games, strategy points, and exact evaluation of the cost f, the game
//! vector field omega, and its Jacobian J with the block S + A split.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::autodiff::{Dual, Dual2, Dual64, Scalar};
use crate::error::{Error, Result};

/// z = (x, y) with the minimizer/maximizer split recorded. The split never
/// changes along a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyPoint {
    coords: DVector<f64>,
    dx: usize,
    dy: usize,
}

impl StrategyPoint {
    pub fn new(coords: DVector<f64>, dx: usize, dy: usize) -> Result<Self> {
        if dx < 1 || dy < 1 {
            return Err(Error::InvalidInput(format!(
                "player dimensions must be >= 1 (got dx={dx}, dy={dy})"
            )));
        }
        if coords.len() != dx + dy {
            return Err(Error::DimensionMismatch {
                expected: dx + dy,
                got: coords.len(),
            });
        }
        Ok(Self { coords, dx, dy })
    }

    pub fn from_slice(coords: &[f64], dx: usize, dy: usize) -> Result<Self> {
        Self::new(DVector::from_row_slice(coords), dx, dy)
    }

    pub fn dim(&self) -> usize {
        self.dx + self.dy
    }

    pub fn dx(&self) -> usize {
        self.dx
    }

    pub fn dy(&self) -> usize {
        self.dy
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn coords_slice(&self) -> &[f64] {
        self.coords.as_slice()
    }

    /// Minimizer's block coords[0..dx].
    pub fn x_block(&self) -> &[f64] {
        &self.coords.as_slice()[..self.dx]
    }

    /// Maximizer's block coords[dx..d].
    pub fn y_block(&self) -> &[f64] {
        &self.coords.as_slice()[self.dx..]
    }

    /// Same split, new coordinates.
    pub fn with_coords(&self, coords: DVector<f64>) -> Result<Self> {
        Self::new(coords, self.dx, self.dy)
    }
}

/// User-supplied cost, generic over the dual types used for derivatives.
/// Implement this; the library handles the rest via [`DynCost`].
pub trait SmoothCost: Send + Sync {
    fn eval<T: Scalar>(&self, coords: &[T]) -> T;
}

/// Object-safe view of a cost evaluable at the three numeric types the
/// derivative paths need.
pub trait DynCost: Send + Sync {
    fn eval_f64(&self, coords: &[f64]) -> f64;
    fn eval_dual(&self, coords: &[Dual64]) -> Dual64;
    fn eval_dual2(&self, coords: &[Dual2]) -> Dual2;
}

impl<C: SmoothCost> DynCost for C {
    fn eval_f64(&self, coords: &[f64]) -> f64 {
        self.eval(coords)
    }
    fn eval_dual(&self, coords: &[Dual64]) -> Dual64 {
        self.eval(coords)
    }
    fn eval_dual2(&self, coords: &[Dual2]) -> Dual2 {
        self.eval(coords)
    }
}

pub(crate) fn toy2d_cost<T: Scalar>(coords: &[T]) -> T {
    let (x, y) = (coords[0], coords[1]);
    let a = T::from_f64(0.3) * x * x + y;
    let b = T::from_f64(0.5) * y * y + x;
    let env = (T::from_f64(-0.01) * (x * x + y * y)).exp();
    -(env * (a * a + b * b))
}

#[derive(Clone)]
pub enum GameKind {
    /// f(z) = 1/2 z^T M z with M symmetric; omega and J in closed form.
    Quadratic { matrix: DMatrix<f64> },
    /// The bounded 2-D polynomial game with four LASE (three Nash, one not).
    Toy2d,
    /// Programmatic hook; smoothness is the caller's responsibility.
    UserScalar { cost: Arc<dyn DynCost> },
}

impl fmt::Debug for GameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameKind::Quadratic { matrix } => f.debug_struct("Quadratic").field("matrix", matrix).finish(),
            GameKind::Toy2d => write!(f, "Toy2d"),
            GameKind::UserScalar { .. } => write!(f, "UserScalar"),
        }
    }
}

/// A zero-sum game: scalar cost f with the (dx, dy) player split.
/// Everything else (omega, J, S, A) is derived.
#[derive(Clone, Debug)]
pub struct Game {
    kind: GameKind,
    dx: usize,
    dy: usize,
}

impl Game {
    pub fn quadratic(matrix: DMatrix<f64>, dx: usize, dy: usize) -> Result<Self> {
        let d = dx + dy;
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: matrix.nrows().max(matrix.ncols()),
            });
        }
        let max_asym = max_asymmetry(&matrix);
        if max_asym > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "quadratic matrix is not symmetric (max deviation {max_asym:.3e})"
            )));
        }
        Ok(Self {
            kind: GameKind::Quadratic { matrix },
            dx,
            dy,
        })
    }

    pub fn toy2d() -> Self {
        Self {
            kind: GameKind::Toy2d,
            dx: 1,
            dy: 1,
        }
    }

    pub fn user_scalar<C: DynCost + 'static>(cost: C, dx: usize, dy: usize) -> Self {
        Self {
            kind: GameKind::UserScalar { cost: Arc::new(cost) },
            dx,
            dy,
        }
    }

    pub fn kind(&self) -> &GameKind {
        &self.kind
    }

    pub fn dx(&self) -> usize {
        self.dx
    }

    pub fn dy(&self) -> usize {
        self.dy
    }

    pub fn dim(&self) -> usize {
        self.dx + self.dy
    }

    /// The stored M for quadratic games, None otherwise.
    pub fn quadratic_matrix(&self) -> Option<&DMatrix<f64>> {
        match &self.kind {
            GameKind::Quadratic { matrix } => Some(matrix),
            _ => None,
        }
    }

    /// Strategy point with this game's split.
    pub fn point(&self, coords: &[f64]) -> Result<StrategyPoint> {
        StrategyPoint::from_slice(coords, self.dx, self.dy)
    }

    fn check_dims(&self, z: &StrategyPoint) -> Result<()> {
        if z.dx() != self.dx || z.dy() != self.dy {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z.dim(),
            });
        }
        Ok(())
    }
}

fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut max = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            max = max.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    max
}

fn quadratic_cost<T: Scalar>(m: &DMatrix<f64>, coords: &[T]) -> T {
    let d = coords.len();
    let mut acc = T::zero();
    for i in 0..d {
        for j in 0..d {
            acc = acc + T::from_f64(m[(i, j)]) * coords[i] * coords[j];
        }
    }
    T::from_f64(0.5) * acc
}

/// Dispatch of cost evaluation at a concrete numeric type. Implemented for
/// `f64`, `Dual64` and `Dual2` — all the depths the derivative paths use.
pub trait CostEval<T: Scalar> {
    fn cost_at(&self, coords: &[T]) -> Result<T>;
}

macro_rules! impl_cost_eval {
    ($ty:ty, $method:ident) => {
        impl CostEval<$ty> for Game {
            fn cost_at(&self, coords: &[$ty]) -> Result<$ty> {
                if coords.len() != self.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim(),
                        got: coords.len(),
                    });
                }
                Ok(match &self.kind {
                    GameKind::Quadratic { matrix } => quadratic_cost(matrix, coords),
                    GameKind::Toy2d => toy2d_cost(coords),
                    GameKind::UserScalar { cost } => cost.$method(coords),
                })
            }
        }
    };
}

impl_cost_eval!(f64, eval_f64);
impl_cost_eval!(Dual64, eval_dual);
impl_cost_eval!(Dual2, eval_dual2);

/// omega(z) = (D_x f, -D_y f): the first dx entries are +grad_x f, the
/// last dy entries are -grad_y f.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    values: DVector<f64>,
    dx: usize,
    dy: usize,
}

impl VectorField {
    pub fn as_vector(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.norm()
    }

    pub fn x_block(&self) -> &[f64] {
        &self.values.as_slice()[..self.dx]
    }

    pub fn y_block(&self) -> &[f64] {
        &self.values.as_slice()[self.dx..]
    }
}

/// J(z) with its block split: S = diag(D^2_xx f, -D^2_yy f) and A the
/// off-diagonal blocks. J = S + A holds exactly (same floats).
#[derive(Clone, Debug, PartialEq)]
pub struct GameJacobian {
    pub matrix: DMatrix<f64>,
    pub symmetric_part: DMatrix<f64>,
    pub antisymmetric_part: DMatrix<f64>,
    dx: usize,
    dy: usize,
}

impl GameJacobian {
    /// D^2_xx f: the upper-left block of S.
    pub fn d2xx(&self) -> DMatrix<f64> {
        self.symmetric_part.view((0, 0), (self.dx, self.dx)).into()
    }

    /// D^2_yy f: the negated lower-right block of S.
    pub fn d2yy(&self) -> DMatrix<f64> {
        -DMatrix::from(self.symmetric_part.view((self.dx, self.dx), (self.dy, self.dy)))
    }
}

/// f(z). Exact for Quadratic/Toy2d, via the user callable otherwise.
pub fn eval_cost(game: &Game, z: &StrategyPoint) -> Result<f64> {
    game.check_dims(z)?;
    game.cost_at(z.coords_slice())
}

/// omega at a generic numeric type; Quadratic uses the closed form
/// sign(M coords), others differentiate the cost through dual numbers.
pub(crate) fn omega_generic<T: Scalar>(game: &Game, coords: &[T]) -> Result<Vec<T>>
where
    Game: CostEval<Dual<T>>,
{
    let d = game.dim();
    if coords.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: coords.len(),
        });
    }
    if let Some(m) = game.quadratic_matrix() {
        let mut out = Vec::with_capacity(d);
        for i in 0..d {
            let mut acc = T::zero();
            for j in 0..d {
                acc = acc + T::from_f64(m[(i, j)]) * coords[j];
            }
            out.push(if i < game.dx() { acc } else { -acc });
        }
        return Ok(out);
    }
    let mut dual: Vec<Dual<T>> = coords.iter().map(|&c| Dual::constant(c)).collect();
    let mut out = Vec::with_capacity(d);
    for k in 0..d {
        dual[k].eps = T::one();
        let r = game.cost_at(&dual)?;
        dual[k].eps = T::zero();
        out.push(if k < game.dx() { r.eps } else { -r.eps });
    }
    Ok(out)
}

/// omega(z), with the y-block sign flip applied.
pub fn eval_omega(game: &Game, z: &StrategyPoint) -> Result<VectorField> {
    game.check_dims(z)?;
    let vals = omega_generic::<f64>(game, z.coords_slice())?;
    if vals.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite {
            context: "eval_omega",
            coords: z.coords_slice().to_vec(),
            coord_index: vals.iter().position(|c| !c.is_finite()),
        });
    }
    Ok(VectorField {
        values: DVector::from_vec(vals),
        dx: z.dx(),
        dy: z.dy(),
    })
}

/// Full dense J(z): constant sign(M) for quadratic games, otherwise
/// assembled column-by-column from d forward-mode JVPs. The S/A split is
/// taken from the block definition and checked against (J + J^T)/2 so an
/// inconsistent user callable is caught rather than silently split.
pub fn eval_jacobian(game: &Game, z: &StrategyPoint) -> Result<GameJacobian> {
    game.check_dims(z)?;
    let d = game.dim();
    let dx = game.dx();
    let matrix = if let Some(m) = game.quadratic_matrix() {
        let mut j = m.clone();
        for i in dx..d {
            for c in 0..d {
                j[(i, c)] = -j[(i, c)];
            }
        }
        j
    } else {
        let mut j = DMatrix::zeros(d, d);
        let mut coords: Vec<Dual64> = z.coords_slice().iter().map(|&c| Dual::constant(c)).collect();
        for k in 0..d {
            coords[k].eps = 1.0;
            let col = omega_generic::<Dual64>(game, &coords)?;
            coords[k].eps = 0.0;
            for (i, c) in col.iter().enumerate() {
                if !c.eps.is_finite() {
                    return Err(Error::NonFinite {
                        context: "eval_jacobian",
                        coords: z.coords_slice().to_vec(),
                        coord_index: Some(k),
                    });
                }
                j[(i, k)] = c.eps;
            }
        }
        j
    };

    // Block split: S keeps the diagonal blocks, A the rest.
    let mut symmetric_part = DMatrix::zeros(d, d);
    for i in 0..d {
        for jc in 0..d {
            let same_block = (i < dx) == (jc < dx);
            if same_block {
                symmetric_part[(i, jc)] = matrix[(i, jc)];
            }
        }
    }
    let antisymmetric_part = &matrix - &symmetric_part;

    // The block split coincides with the symmetric/antisymmetric split only
    // because D^2_xy f = (D^2_yx f)^T; assert instead of assuming.
    let mut max_dev = 0.0f64;
    for i in 0..d {
        for jc in 0..d {
            let sym = 0.5 * (matrix[(i, jc)] + matrix[(jc, i)]);
            max_dev = max_dev.max((symmetric_part[(i, jc)] - sym).abs());
        }
    }
    if max_dev > 1e-8 {
        return Err(Error::InconsistentJacobian { max_dev });
    }

    Ok(GameJacobian {
        matrix,
        symmetric_part,
        antisymmetric_part,
        dx,
        dy: game.dy(),
    })
}

/// On-disk game description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GameSpec {
    Quadratic {
        dx: usize,
        dy: usize,
        /// Row-major rows; rejected if not symmetric within 1e-9.
        matrix: Vec<Vec<f64>>,
    },
    Toy2d {
        #[serde(default = "one")]
        dx: usize,
        #[serde(default = "one")]
        dy: usize,
    },
}

fn one() -> usize {
    1
}

impl GameSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("game spec: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("game spec serializes")
    }

    pub fn build(&self) -> Result<Game> {
        match self {
            GameSpec::Quadratic { dx, dy, matrix } => {
                let d = dx + dy;
                if matrix.len() != d || matrix.iter().any(|r| r.len() != d) {
                    return Err(Error::InvalidInput(format!(
                        "field `matrix` must be {d}x{d} for dx={dx}, dy={dy}"
                    )));
                }
                let m = DMatrix::from_fn(d, d, |i, j| matrix[i][j]);
                if max_asymmetry(&m) > 1e-9 {
                    return Err(Error::InvalidInput(
                        "field `matrix` is not symmetric within 1e-9".to_string(),
                    ));
                }
                // symmetrize so the stored matrix meets the Game invariant
                let sym = 0.5 * (&m + m.transpose());
                Game::quadratic(sym, *dx, *dy)
            }
            GameSpec::Toy2d { dx, dy } => {
                if *dx != 1 || *dy != 1 {
                    return Err(Error::InvalidInput(
                        "toy2d requires dx = dy = 1".to_string(),
                    ));
                }
                Ok(Game::toy2d())
            }
        }
    }
}

impl Game {
    /// File-format description of this game (None for programmatic games).
    pub fn spec(&self) -> Option<GameSpec> {
        match &self.kind {
            GameKind::Quadratic { matrix } => Some(GameSpec::Quadratic {
                dx: self.dx,
                dy: self.dy,
                matrix: (0..matrix.nrows())
                    .map(|i| (0..matrix.ncols()).map(|j| matrix[(i, j)]).collect())
                    .collect(),
            }),
            GameKind::Toy2d => Some(GameSpec::Toy2d { dx: 1, dy: 1 }),
            GameKind::UserScalar { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{counterexample_game, fd_omega, QuadCost};
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn strategy_point_validates_split() {
        assert!(StrategyPoint::from_slice(&[1.0, 2.0], 1, 1).is_ok());
        assert!(StrategyPoint::from_slice(&[1.0, 2.0], 0, 2).is_err());
        assert!(StrategyPoint::from_slice(&[1.0, 2.0, 3.0], 1, 1).is_err());
        let z = StrategyPoint::from_slice(&[1.0, 2.0, 3.0], 2, 1).unwrap();
        assert_eq!(z.x_block(), &[1.0, 2.0]);
        assert_eq!(z.y_block(), &[3.0]);
    }

    #[test]
    fn quadratic_cost_examples() {
        let game = counterexample_game();
        assert_eq!(eval_cost(&game, &game.point(&[0.0, 0.0]).unwrap()).unwrap(), 0.0);
        assert_relative_eq!(
            eval_cost(&game, &game.point(&[1.0, 1.0]).unwrap()).unwrap(),
            1.55,
            max_relative = 1e-15
        );
    }

    #[test]
    fn toy2d_cost_at_origin_is_zero() {
        let game = Game::toy2d();
        assert_eq!(eval_cost(&game, &game.point(&[0.0, 0.0]).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn omega_counterexample_closed_form() {
        let game = counterexample_game();
        let w = eval_omega(&game, &game.point(&[1.0, 0.0]).unwrap()).unwrap();
        assert_eq!(w.as_vector().as_slice(), &[1.0, -1.0]);
        // omega(x, y) = (x + y, -x - 0.1 y)
        let w = eval_omega(&game, &game.point(&[0.3, -0.7]).unwrap()).unwrap();
        assert_relative_eq!(w.as_vector()[0], -0.4, max_relative = 1e-14);
        assert_relative_eq!(w.as_vector()[1], -0.3 + 0.07, max_relative = 1e-13);
    }

    #[test]
    fn omega_vanishes_at_critical_point() {
        let game = counterexample_game();
        let w = eval_omega(&game, &game.point(&[0.0, 0.0]).unwrap()).unwrap();
        assert_eq!(w.norm(), 0.0);
    }

    #[test]
    fn omega_matches_fd_on_builtin_games() {
        let toy = Game::toy2d();
        let quad = counterexample_game();
        let user = Game::user_scalar(
            QuadCost { m: DMatrix::from_row_slice(2, 2, &[2.0, -0.3, -0.3, 1.4]) },
            1,
            1,
        );
        let mut rng = StdRng::seed_from_u64(42);
        for game in [&toy, &quad, &user] {
            for _ in 0..100 {
                let z = game
                    .point(&[rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)])
                    .unwrap();
                let exact = eval_omega(game, &z).unwrap().into_vector();
                let fd = fd_omega(game, &z, 1e-5);
                let denom = exact.norm().max(1.0);
                assert!(
                    (&exact - &fd).norm() / denom <= 1e-6,
                    "fd mismatch at {:?}: {exact:?} vs {fd:?}",
                    z.coords_slice()
                );
            }
        }
    }

    #[test]
    fn toy2d_omega_spot_check_against_fd() {
        let game = Game::toy2d();
        let z = game.point(&[0.3, -0.2]).unwrap();
        let exact = eval_omega(&game, &z).unwrap().into_vector();
        let fd = fd_omega(&game, &z, 1e-5);
        assert!((exact - fd).norm() <= 1e-7);
    }

    #[test]
    fn jacobian_counterexample_blocks() {
        let game = counterexample_game();
        let j = eval_jacobian(&game, &game.point(&[3.0, -2.0]).unwrap()).unwrap();
        assert_eq!(j.matrix.as_slice(), &[1.0, -1.0, 1.0, -0.1]); // column-major
        assert_eq!(j.symmetric_part.as_slice(), &[1.0, 0.0, 0.0, -0.1]);
        assert_eq!(j.antisymmetric_part.as_slice(), &[0.0, -1.0, 1.0, 0.0]);
        assert_eq!(j.d2xx().as_slice(), &[1.0]);
        assert_eq!(j.d2yy().as_slice(), &[0.1]);
    }

    #[test]
    fn jacobian_splits_exactly() {
        let game = Game::toy2d();
        let j = eval_jacobian(&game, &game.point(&[0.9, -1.7]).unwrap()).unwrap();
        let sum = &j.symmetric_part + &j.antisymmetric_part;
        assert_eq!(sum.as_slice(), j.matrix.as_slice()); // same floats
    }

    #[test]
    fn quadratic_jacobian_is_constant_bitwise() {
        let game = counterexample_game();
        let a = eval_jacobian(&game, &game.point(&[0.0, 0.0]).unwrap()).unwrap();
        let b = eval_jacobian(&game, &game.point(&[123.0, -9.5]).unwrap()).unwrap();
        assert_eq!(a.matrix.as_slice(), b.matrix.as_slice());
    }

    #[test]
    fn s_blocks_match_fd_hessian() {
        let game = Game::toy2d();
        let z = game.point(&[0.8, 0.4]).unwrap();
        let j = eval_jacobian(&game, &z).unwrap();
        let h = 1e-4;
        // D^2_xx f via second difference of the cost
        let f = |c: &[f64]| eval_cost(&game, &game.point(c).unwrap()).unwrap();
        let fxx = (f(&[0.8 + h, 0.4]) - 2.0 * f(&[0.8, 0.4]) + f(&[0.8 - h, 0.4])) / (h * h);
        let fyy = (f(&[0.8, 0.4 + h]) - 2.0 * f(&[0.8, 0.4]) + f(&[0.8, 0.4 - h])) / (h * h);
        assert!((j.d2xx()[(0, 0)] - fxx).abs() <= 1e-5);
        assert!((j.d2yy()[(0, 0)] - fyy).abs() <= 1e-5);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let game = counterexample_game();
        let z = StrategyPoint::from_slice(&[1.0, 2.0, 3.0], 2, 1).unwrap();
        assert!(matches!(
            eval_cost(&game, &z),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            eval_omega(&game, &z),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn quadratic_constructor_rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.9, 0.1]);
        assert!(Game::quadratic(m, 1, 1).is_err());
    }

    #[test]
    fn game_spec_json_round_trip() {
        let text = r#"{"kind": "quadratic", "dx": 1, "dy": 1, "matrix": [[1,1],[1,0.1]]}"#;
        let spec = GameSpec::from_json(text).unwrap();
        let game = spec.build().unwrap();
        assert_eq!(game.dim(), 2);
        assert_eq!(game.quadratic_matrix().unwrap()[(0, 1)], 1.0);

        let toy = GameSpec::from_json(r#"{"kind": "toy2d"}"#).unwrap().build().unwrap();
        assert!(matches!(toy.kind(), GameKind::Toy2d));
    }

    #[test]
    fn game_spec_symmetry_gate() {
        // beyond 1e-9: rejected
        let bad = GameSpec::Quadratic {
            dx: 1,
            dy: 1,
            matrix: vec![vec![1.0, 1.0], vec![1.0 + 1e-6, 0.1]],
        };
        assert!(bad.build().is_err());
        // within 1e-9: accepted and symmetrized to meet the 1e-12 invariant
        let ok = GameSpec::Quadratic {
            dx: 1,
            dy: 1,
            matrix: vec![vec![1.0, 1.0], vec![1.0 + 1e-10, 0.1]],
        };
        let game = ok.build().unwrap();
        let m = game.quadratic_matrix().unwrap();
        assert_eq!(m[(0, 1)], m[(1, 0)]);
    }

    #[test]
    fn game_spec_rejects_unknown_and_misshapen() {
        assert!(GameSpec::from_json(r#"{"kind": "cubic"}"#).is_err());
        assert!(GameSpec::from_json(r#"{"kind": "toy2d", "dx": 2}"#).unwrap().build().is_err());
        let bad_shape = GameSpec::Quadratic {
            dx: 1,
            dy: 1,
            matrix: vec![vec![1.0, 1.0]],
        };
        assert!(bad_shape.build().is_err());
    }
}
