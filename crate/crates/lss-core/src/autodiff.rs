//! Forward-mode dual-number differentiation.
//!
//! First derivatives come from a single tangent ([`Dual64`]); second
//! derivatives from nesting ([`Dual2`], forward-over-forward). The
//! Jacobian-transpose products never materialize the Jacobian: `jt_vec`
//! differentiates the scalar `omega(z)^T u`, and `j_vec_via_two_jtv`
//! assembles `J(z) v` from two such products using the signed block
//! structure of zero-sum games.

use std::ops::{Add, Div, Mul, Neg, Sub};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::game::{CostEval, Game, StrategyPoint};

/// Numeric scalar that dual numbers can wrap: `f64` or another `Dual`.
pub trait Scalar:
    Copy
    + PartialEq
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(c: f64) -> Self;
    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn exp(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tanh(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn is_finite(self) -> bool;
    /// Primal value, all tangents stripped.
    fn value(self) -> f64;
}

impl Scalar for f64 {
    fn from_f64(c: f64) -> Self {
        c
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn value(self) -> f64 {
        self
    }
}

/// Dual number `re + eps * d` with `d^2 = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

pub type Dual64 = Dual<f64>;
/// Nested dual carrying two independent tangent directions (second order).
pub type Dual2 = Dual<Dual64>;

impl<T: Scalar> Dual<T> {
    pub fn new(re: T, eps: T) -> Self {
        Self { re, eps }
    }

    /// Lift a value with zero tangent.
    pub fn constant(re: T) -> Self {
        Self { re, eps: T::zero() }
    }

    /// Seed a coordinate: unit tangent.
    pub fn variable(re: T) -> Self {
        Self { re, eps: T::one() }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.re + rhs.re, self.eps + rhs.eps)
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.re - rhs.re, self.eps - rhs.eps)
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::new(self.re * rhs.re, self.re * rhs.eps + self.eps * rhs.re)
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let re = self.re / rhs.re;
        Self::new(re, (self.eps - re * rhs.eps) / rhs.re)
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.eps)
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn from_f64(c: f64) -> Self {
        Self::constant(T::from_f64(c))
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        Self::new(e, self.eps * e)
    }
    fn sin(self) -> Self {
        Self::new(self.re.sin(), self.eps * self.re.cos())
    }
    fn cos(self) -> Self {
        Self::new(self.re.cos(), -(self.eps * self.re.sin()))
    }
    fn tanh(self) -> Self {
        let t = self.re.tanh();
        Self::new(t, self.eps * (T::one() - t * t))
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        Self::new(s, self.eps / (T::from_f64(2.0) * s))
    }
    fn powi(self, n: i32) -> Self {
        Self::new(
            self.re.powi(n),
            self.eps * T::from_f64(n as f64) * self.re.powi(n - 1),
        )
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.eps.is_finite()
    }
    fn value(self) -> f64 {
        self.re.value()
    }
}

/// Gradient of a scalar function by d forward passes, one coordinate
/// tangent per pass.
pub fn grad_scalar<F>(f: F, z: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[Dual64]) -> Dual64,
{
    let mut coords: Vec<Dual64> = z.iter().map(|&c| Dual::constant(c)).collect();
    let mut grad = vec![0.0; z.len()];
    for k in 0..z.len() {
        coords[k].eps = 1.0;
        let out = f(&coords);
        coords[k].eps = 0.0;
        if !out.eps.is_finite() {
            return Err(Error::NonFinite {
                context: "grad_scalar",
                coords: z.to_vec(),
                coord_index: Some(k),
            });
        }
        grad[k] = out.eps;
    }
    Ok(grad)
}

/// The two block-diagonal sign matrices diag(I, -I) and diag(-I, I) of a
/// zero-sum game, plus the (v1, 0) / (0, v2) block embeddings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SignedBlockSelector {
    dx: usize,
    dy: usize,
}

impl SignedBlockSelector {
    pub fn new(dx: usize, dy: usize) -> Self {
        Self { dx, dy }
    }

    pub fn dim(&self) -> usize {
        self.dx + self.dy
    }

    /// diag(I, -I) v — also the sign map taking grad f to omega.
    pub fn apply_pos_neg(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        for c in out[self.dx..].iter_mut() {
            *c = -*c;
        }
        out
    }

    /// diag(-I, I) v.
    pub fn apply_neg_pos(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        for c in out[..self.dx].iter_mut() {
            *c = -*c;
        }
        out
    }

    /// (v1, 0): keep the x block.
    pub fn head_block(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        out[..self.dx].copy_from_slice(&v[..self.dx]);
        out
    }

    /// (0, v2): keep the y block.
    pub fn tail_block(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        out[self.dx..].copy_from_slice(&v[self.dx..]);
        out
    }
}

/// `J^T(z) u` as the gradient of `omega(z)^T u`, via nested duals.
///
/// `omega^T u = (grad f)^T (sign u)`, so a single inner tangent along
/// `sign u` yields the scalar and the outer tangent differentiates it;
/// one second-order pass per output coordinate, J never formed.
/// Quadratic games short-circuit to the exact closed form `M sign u`.
pub fn jt_vec(game: &Game, z: &StrategyPoint, u: &[f64]) -> Result<DVector<f64>> {
    let d = z.dim();
    if u.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: u.len(),
        });
    }
    if let Some(m) = game.quadratic_matrix() {
        // J = sign M, so J^T u = M^T sign u = M sign u.
        let sel = SignedBlockSelector::new(z.dx(), z.dy());
        let su = DVector::from_vec(sel.apply_pos_neg(u));
        return Ok(m * su);
    }

    let sel = SignedBlockSelector::new(z.dx(), z.dy());
    let w = sel.apply_pos_neg(u);
    let zc = z.coords_slice();
    let mut coords: Vec<Dual2> = zc
        .iter()
        .zip(w.iter())
        .map(|(&c, &t)| Dual::constant(Dual::new(c, t)))
        .collect();
    let mut out = DVector::zeros(d);
    for k in 0..d {
        coords[k].eps = Dual::new(1.0, 0.0);
        let r = game.cost_at(&coords)?;
        coords[k].eps = Dual::new(0.0, 0.0);
        if !r.eps.eps.is_finite() {
            return Err(Error::NonFinite {
                context: "jt_vec",
                coords: zc.to_vec(),
                coord_index: Some(k),
            });
        }
        out[k] = r.eps.eps;
    }
    Ok(out)
}

/// `J(z) v` assembled from two Jacobian-transpose products:
/// `diag(I,-I) J^T (v1, 0) + diag(-I, I) J^T (0, v2)`.
pub fn j_vec_via_two_jtv(game: &Game, z: &StrategyPoint, v: &[f64]) -> Result<DVector<f64>> {
    let d = z.dim();
    if v.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: v.len(),
        });
    }
    let sel = SignedBlockSelector::new(z.dx(), z.dy());
    let a = jt_vec(game, z, &sel.head_block(v))?;
    let b = jt_vec(game, z, &sel.tail_block(v))?;
    let pa = sel.apply_pos_neg(a.as_slice());
    let pb = sel.apply_neg_pos(b.as_slice());
    Ok(DVector::from_iterator(
        d,
        pa.iter().zip(pb.iter()).map(|(x, y)| x + y),
    ))
}
