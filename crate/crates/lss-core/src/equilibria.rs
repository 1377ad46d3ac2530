//! Critical-point search and classification: differential Nash
//! equilibrium, non-Nash LASE, linearly unstable, or non-hyperbolic.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{limiting_h, DampingFunction, LambdaFunction};
use crate::error::{Error, Result};
use crate::game::{eval_jacobian, eval_omega, Game, StrategyPoint};

/// Real-part tolerance for hyperbolicity and definiteness checks.
pub const SPECTRAL_TAU: f64 = 1e-8;

/// Residual bound every reported critical point satisfies.
pub const RESIDUAL_BOUND: f64 = 1e-10;

/// A converged Newton root of omega.
#[derive(Clone, Debug, Serialize)]
pub struct CriticalPoint {
    pub z: StrategyPoint,
    pub omega_residual: f64,
    pub newton_iters: u32,
    pub seed_point: StrategyPoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Dne,
    NonNashLase,
    Unstable,
    NonHyperbolic,
}

/// Complex number serialized as {"re": _, "im": _}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl ComplexValue {
    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// Eigenstructure of a critical point plus its classification.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub jacobian_eigs: Vec<ComplexValue>,
    pub s_eigs_x: Vec<f64>,
    pub s_eigs_y: Vec<f64>,
    /// Eigenvalues of the central-difference Jacobian of the adjusted
    /// field h at the point.
    pub h_eigs: Vec<ComplexValue>,
    pub classification: Classification,
    pub hyperbolic: bool,
}

/// Axis-aligned search region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl SearchBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidInput("search box needs matching lo/hi".to_string()));
        }
        for (l, h) in lo.iter().zip(hi.iter()) {
            if !(l.is_finite() && h.is_finite()) || l > h {
                return Err(Error::InvalidInput(format!(
                    "search box bounds must be finite with lo <= hi (got [{l}, {h}])"
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    /// Same [lo, hi] on every axis.
    pub fn cube(lo: f64, hi: f64, dim: usize) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, coords: &[f64]) -> bool {
        coords
            .iter()
            .zip(self.lo.iter().zip(self.hi.iter()))
            .all(|(c, (l, h))| *c >= *l && *c <= *h)
    }

    fn grid(&self, n: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self
            .lo
            .iter()
            .zip(self.hi.iter())
            .map(|(&l, &h)| {
                (0..n)
                    .map(|i| l + (h - l) * i as f64 / (n - 1) as f64)
                    .collect()
            })
            .collect();
        let mut seeds = vec![Vec::new()];
        for axis in &axes {
            let mut next = Vec::with_capacity(seeds.len() * axis.len());
            for s in &seeds {
                for &c in axis {
                    let mut t = s.clone();
                    t.push(c);
                    next.push(t);
                }
            }
            seeds = next;
        }
        seeds
    }
}

/// Outcome of a multistart search: deduplicated points plus seed
/// bookkeeping (singular Newton steps skip the seed, they are not fatal).
#[derive(Clone, Debug, Serialize)]
pub struct SearchReport {
    pub points: Vec<CriticalPoint>,
    pub seeds_tried: usize,
    pub seeds_skipped: usize,
}

/// Newton's method on omega from every node of a grid over `search_box`,
/// deduplicated at distance 1e-6. Grid seeding is for d <= 4; use
/// [`find_critical_points_seeded`] with explicit seeds beyond that.
pub fn find_critical_points(
    game: &Game,
    search_box: &SearchBox,
    grid_n: usize,
    newton_tol: f64,
    max_iters: u32,
) -> Result<SearchReport> {
    if search_box.dim() != game.dim() {
        return Err(Error::DimensionMismatch {
            expected: game.dim(),
            got: search_box.dim(),
        });
    }
    if game.dim() > 4 {
        return Err(Error::InvalidInput(
            "grid seeding supports d <= 4; supply seeds explicitly".to_string(),
        ));
    }
    if grid_n < 2 {
        return Err(Error::InvalidInput("grid_n must be >= 2".to_string()));
    }
    let seeds: Vec<StrategyPoint> = search_box
        .grid(grid_n)
        .into_iter()
        .map(|c| game.point(&c))
        .collect::<Result<_>>()?;
    find_critical_points_seeded(game, &seeds, Some(search_box), newton_tol, max_iters)
}

/// Newton multistart from explicit seeds. Converged roots outside
/// `within` (when given) are dropped.
pub fn find_critical_points_seeded(
    game: &Game,
    seeds: &[StrategyPoint],
    within: Option<&SearchBox>,
    newton_tol: f64,
    max_iters: u32,
) -> Result<SearchReport> {
    if !(newton_tol > 0.0 && newton_tol <= RESIDUAL_BOUND) {
        return Err(Error::InvalidInput(format!(
            "newton_tol must be in (0, {RESIDUAL_BOUND}], got {newton_tol}"
        )));
    }
    let mut report = SearchReport {
        points: Vec::new(),
        seeds_tried: seeds.len(),
        seeds_skipped: 0,
    };
    'seeds: for seed in seeds {
        let mut z = seed.clone();
        let mut iters = 0u32;
        loop {
            let w = eval_omega(game, &z)?.into_vector();
            let res = w.norm();
            if res <= newton_tol {
                if let Some(bx) = within {
                    if !bx.contains(z.coords_slice()) {
                        continue 'seeds;
                    }
                }
                let dup = report
                    .points
                    .iter()
                    .any(|p| (p.z.coords() - z.coords()).norm() < 1e-6);
                if !dup {
                    report.points.push(CriticalPoint {
                        z: z.clone(),
                        omega_residual: res,
                        newton_iters: iters,
                        seed_point: seed.clone(),
                    });
                }
                continue 'seeds;
            }
            if iters >= max_iters {
                continue 'seeds;
            }
            let j = eval_jacobian(game, &z)?.matrix;
            let step = match j.lu().solve(&w) {
                Some(s) => s,
                None => {
                    report.seeds_skipped += 1;
                    continue 'seeds;
                }
            };
            let next = z.coords() - step;
            if next.iter().any(|c| !c.is_finite()) || next.norm() > 1e8 {
                continue 'seeds;
            }
            z = z.with_coords(next)?;
            iters += 1;
        }
    }
    report.points.sort_by(|a, b| {
        let (na, nb) = (a.z.coords().norm(), b.z.coords().norm());
        na.partial_cmp(&nb)
            .unwrap()
            .then_with(|| a.z.coords_slice().partial_cmp(b.z.coords_slice()).unwrap())
    });
    Ok(report)
}

fn complex_eigs(m: &DMatrix<f64>) -> Vec<ComplexValue> {
    let eig = m.clone().complex_eigenvalues();
    let mut out: Vec<ComplexValue> = eig.iter().map(|c| ComplexValue { re: c.re, im: c.im }).collect();
    out.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
    out
}

fn symmetric_eigs(m: &DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    e
}

/// Dense eigendecompositions of J, D^2_xx f, D^2_yy f, plus the
/// central-difference Jacobian of h, classified per the definiteness and
/// spectral rules (tau = 1e-8).
pub fn classify(
    game: &Game,
    point: &CriticalPoint,
    lambda: &LambdaFunction,
    damping: &DampingFunction,
) -> Result<SpectrumReport> {
    if point.omega_residual > 1e-8 {
        return Err(Error::InvalidInput(format!(
            "classify needs omega residual <= 1e-8, got {:.3e}",
            point.omega_residual
        )));
    }
    let jac = eval_jacobian(game, &point.z)?;
    let jacobian_eigs = complex_eigs(&jac.matrix);
    let s_eigs_x = symmetric_eigs(&jac.d2xx());
    let s_eigs_y = symmetric_eigs(&jac.d2yy());

    let h_jac = fd_jacobian_of_h(game, &point.z, lambda, damping, 1e-5)?;
    let h_eigs = complex_eigs(&h_jac);

    let tau = SPECTRAL_TAU;
    let min_sx = s_eigs_x.iter().copied().fold(f64::INFINITY, f64::min);
    let max_sy = s_eigs_y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let hyperbolic = jacobian_eigs.iter().all(|e| e.re.abs() > tau);

    let classification = if min_sx > tau && max_sy < -tau {
        Classification::Dne
    } else if jacobian_eigs.iter().all(|e| e.re > tau) {
        Classification::NonNashLase
    } else if !hyperbolic {
        Classification::NonHyperbolic
    } else {
        Classification::Unstable
    };

    Ok(SpectrumReport {
        jacobian_eigs,
        s_eigs_x,
        s_eigs_y,
        h_eigs,
        classification,
        hyperbolic,
    })
}

/// Central-difference Jacobian of the adjusted field h; an independent
/// numeric path, deliberately not the AD one.
pub fn fd_jacobian_of_h(
    game: &Game,
    z: &StrategyPoint,
    lambda: &LambdaFunction,
    damping: &DampingFunction,
    step: f64,
) -> Result<DMatrix<f64>> {
    let d = z.dim();
    let mut out = DMatrix::zeros(d, d);
    for k in 0..d {
        let mut hi = z.coords().clone();
        let mut lo = z.coords().clone();
        hi[k] += step;
        lo[k] -= step;
        let fhi = limiting_h(game, &z.with_coords(hi)?, lambda, damping)?;
        let flo = limiting_h(game, &z.with_coords(lo)?, lambda, damping)?;
        let col = (fhi - flo) / (2.0 * step);
        out.set_column(k, &DVector::from_column_slice(col.as_slice()));
    }
    Ok(out)
}

/// Samples where the adjustment u exactly opposes omega (h would gain a
/// spurious zero there).
#[derive(Clone, Debug, Serialize)]
pub struct EigenvectorAssumptionReport {
    /// Indices into the sample list where ||u + omega|| <= 1e-8 ||omega||.
    pub violations: Vec<usize>,
    pub checked: usize,
    /// Samples with ||omega|| < 1e-8, excluded from the test.
    pub skipped_critical: usize,
    /// Smallest observed ||u + omega|| / ||omega||.
    pub min_ratio: f64,
}

/// Uniform grid of sample points over a box (test and scan helper).
pub fn grid_samples(game: &Game, bx: &SearchBox, n: usize) -> Result<Vec<StrategyPoint>> {
    if bx.dim() != game.dim() {
        return Err(Error::DimensionMismatch {
            expected: game.dim(),
            got: bx.dim(),
        });
    }
    bx.grid(n).into_iter().map(|c| game.point(&c)).collect()
}

/// Scan samples for violations of the no-eigenvector assumption of the
/// adjusted dynamics.
pub fn check_eigenvector_assumption(
    game: &Game,
    samples: &[StrategyPoint],
    lambda: &LambdaFunction,
) -> Result<EigenvectorAssumptionReport> {
    let mut report = EigenvectorAssumptionReport {
        violations: Vec::new(),
        checked: 0,
        skipped_critical: 0,
        min_ratio: f64::INFINITY,
    };
    for (i, z) in samples.iter().enumerate() {
        let w = eval_omega(game, z)?.into_vector();
        let wn = w.norm();
        if wn < 1e-8 {
            report.skipped_critical += 1;
            continue;
        }
        let j = eval_jacobian(game, z)?.matrix;
        let lam = lambda.value(&w);
        let m = j.transpose() * &j + DMatrix::identity(z.dim(), z.dim()) * lam;
        let sol = match m.clone().lu().solve(&(j.transpose() * &w)) {
            Some(s) => s,
            None => {
                let min_sv = m.svd(false, false).singular_values.min();
                return Err(Error::SingularSolve {
                    coords: z.coords_slice().to_vec(),
                    min_singular_value: min_sv,
                });
            }
        };
        let u = j.transpose() * sol;
        let ratio = (u + &w).norm() / wn;
        report.min_ratio = report.min_ratio.min(ratio);
        if ratio <= 1e-8 {
            report.violations.push(i);
        }
        report.checked += 1;
    }
    Ok(report)
}
