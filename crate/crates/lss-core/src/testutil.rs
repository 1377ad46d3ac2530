//! Finite-difference oracles and helpers shared by the unit tests. These
//! stay independent of the dual-number paths they check.

use nalgebra::{DMatrix, DVector};

use crate::autodiff::Scalar;
use crate::game::{eval_cost, eval_omega, Game, SmoothCost, StrategyPoint};

/// Central-difference omega: (D_x f, -D_y f) from cost evaluations only.
pub fn fd_omega(game: &Game, z: &StrategyPoint, h: f64) -> DVector<f64> {
    let d = z.dim();
    let mut out = DVector::zeros(d);
    for k in 0..d {
        let mut hi = z.coords().clone();
        let mut lo = z.coords().clone();
        hi[k] += h;
        lo[k] -= h;
        let dfk = (eval_cost(game, &z.with_coords(hi).unwrap()).unwrap()
            - eval_cost(game, &z.with_coords(lo).unwrap()).unwrap())
            / (2.0 * h);
        out[k] = if k < z.dx() { dfk } else { -dfk };
    }
    out
}

/// Central-difference Jacobian of omega.
pub fn fd_jacobian_omega(game: &Game, z: &StrategyPoint, h: f64) -> DMatrix<f64> {
    let d = z.dim();
    let mut out = DMatrix::zeros(d, d);
    for k in 0..d {
        let mut hi = z.coords().clone();
        let mut lo = z.coords().clone();
        hi[k] += h;
        lo[k] -= h;
        let whi = eval_omega(game, &z.with_coords(hi).unwrap()).unwrap().into_vector();
        let wlo = eval_omega(game, &z.with_coords(lo).unwrap()).unwrap().into_vector();
        out.set_column(k, &((whi - wlo) / (2.0 * h)));
    }
    out
}

/// 1/2 z^T M z as a generic cost, to drive the dual path on games whose
/// closed forms are known exactly.
pub struct QuadCost {
    pub m: DMatrix<f64>,
}

impl SmoothCost for QuadCost {
    fn eval<T: Scalar>(&self, coords: &[T]) -> T {
        let d = coords.len();
        let mut acc = T::zero();
        for i in 0..d {
            for j in 0..d {
                acc = acc + T::from_f64(self.m[(i, j)]) * coords[i] * coords[j];
            }
        }
        T::from_f64(0.5) * acc
    }
}

/// The Appendix-style 2x2 counterexample matrix [[1,1],[1,0.1]].
pub fn counterexample_game() -> Game {
    Game::quadratic(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 0.1]), 1, 1).unwrap()
}
