use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use lss_core::dynamics::{DampingFunction, LambdaFunction};
use lss_core::equilibria::{classify, find_critical_points, Classification, SearchBox, SpectrumReport};
use serde::Serialize;

use crate::game_io::{load_game, parse_floats};
use crate::Outcome;

#[derive(Args, Clone, Debug)]
pub struct AnalyzeArgs {
    /// Game spec JSON file.
    #[arg(long)]
    pub game: PathBuf,
    /// Search box: "lo,hi" for all axes or "lo1,hi1,lo2,hi2,...".
    #[arg(long = "box", default_value = "-20,20", allow_hyphen_values = true)]
    pub search_box: String,
    /// Seed grid nodes per axis.
    #[arg(long, default_value_t = 40)]
    pub grid: usize,
    #[arg(long = "newton-tol", default_value_t = 1e-12)]
    pub newton_tol: f64,
    #[arg(long = "max-iters", default_value_t = 200)]
    pub max_iters: u32,
    /// Regularizer bound xi1 for lambda(z).
    #[arg(long, default_value_t = 1e-4)]
    pub xi1: f64,
    /// Damping exponent xi2 for g(u).
    #[arg(long, default_value_t = 1e-4)]
    pub xi2: f64,
    /// Output path for the JSON report (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct PointRecord {
    z: Vec<f64>,
    residual: f64,
    classification: Classification,
    #[serde(flatten)]
    spectrum: SpectrumFields,
}

#[derive(Serialize)]
struct SpectrumFields {
    jacobian_eigs: Vec<lss_core::equilibria::ComplexValue>,
    s_eigs_x: Vec<f64>,
    s_eigs_y: Vec<f64>,
    h_eigs: Vec<lss_core::equilibria::ComplexValue>,
    hyperbolic: bool,
}

fn spectrum_fields(report: &SpectrumReport) -> SpectrumFields {
    SpectrumFields {
        jacobian_eigs: report.jacobian_eigs.clone(),
        s_eigs_x: report.s_eigs_x.clone(),
        s_eigs_y: report.s_eigs_y.clone(),
        h_eigs: report.h_eigs.clone(),
        hyperbolic: report.hyperbolic,
    }
}

pub fn parse_box(text: &str, dim: usize) -> Result<SearchBox> {
    let vals = parse_floats(text)?;
    let (lo, hi) = if vals.len() == 2 {
        (vec![vals[0]; dim], vec![vals[1]; dim])
    } else if vals.len() == 2 * dim {
        let mut lo = Vec::with_capacity(dim);
        let mut hi = Vec::with_capacity(dim);
        for pair in vals.chunks_exact(2) {
            lo.push(pair[0]);
            hi.push(pair[1]);
        }
        (lo, hi)
    } else {
        anyhow::bail!("field `box` needs 2 or {} numbers, got {}", 2 * dim, vals.len());
    };
    Ok(SearchBox::new(lo, hi)?)
}

pub fn run(args: AnalyzeArgs) -> Result<Outcome> {
    let loaded = load_game(&args.game)?;
    let bx = parse_box(&args.search_box, loaded.game.dim())?;
    let lambda = LambdaFunction::new(args.xi1)?;
    let damping = DampingFunction::new(args.xi2)?;

    let search = find_critical_points(&loaded.game, &bx, args.grid, args.newton_tol, args.max_iters)?;
    let mut records = Vec::with_capacity(search.points.len());
    let mut any_non_hyperbolic = false;
    for cp in &search.points {
        let report = classify(&loaded.game, cp, &lambda, &damping)?;
        any_non_hyperbolic |= report.classification == Classification::NonHyperbolic;
        records.push(PointRecord {
            z: cp.z.coords_slice().to_vec(),
            residual: cp.omega_residual,
            classification: report.classification,
            spectrum: spectrum_fields(&report),
        });
    }

    let text = serde_json::to_string_pretty(&records)?;
    match &args.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => println!("{text}"),
    }
    eprintln!(
        "analyze: {} point(s) from {} seed(s) ({} skipped on singular steps)",
        search.points.len(),
        search.seeds_tried,
        search.seeds_skipped
    );
    if any_non_hyperbolic {
        return Ok(Outcome::AnalysisWarning);
    }
    Ok(Outcome::Ok)
}
