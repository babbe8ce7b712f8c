//! Reference solutions and the error metrics measured against them.

mod fd;
mod grid;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::Field;

pub use fd::{
    fd_laplace_solve, fd_solve, optimal_omega, CornerSingularity, FdProblem, FdSolution, Layered, DEFAULT_MAX_ITER,
    DEFAULT_OMEGA,
};
pub use grid::{fmt17, grid_sample, FieldGrid, MAX_NODES};

/// Heated-box solution: `1` on `x = 0`, `0` on the other three sides.
/// On `x = 0` returns the boundary value, with `1/2` at the two corners.
pub fn analytic_box(x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        return if y > 0.0 && y < 1.0 { 1.0 } else { 0.5 };
    }
    2.0 / PI * ((PI * y).sin() / (PI * x).sinh()).atan()
}

/// The odd-harmonic sine series of [`analytic_box`] cut after `terms` terms.
pub fn analytic_box_series(x: f64, y: f64, terms: usize) -> f64 {
    (0..terms)
        .map(|k| {
            let n = (2 * k + 1) as f64;
            4.0 / (n * PI) * (-n * PI * x).exp() * (n * PI * y).sin()
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rmse: f64,
    /// Mean absolute difference.
    pub paper_mae: f64,
    pub mean_abs_laplacian: f64,
}

/// Errors of `field` against `oracle` over `points`, plus the mean absolute
/// Laplacian of `field` computed through jets.
pub fn metrics(field: &dyn Field, oracle: &dyn Fn(&[f64]) -> Result<f64>, points: &[Vec<f64>]) -> Result<Metrics> {
    if points.is_empty() {
        return Err(Error::EmptySamples("evaluation points"));
    }
    let (mut sq, mut abs, mut lap) = (0.0, 0.0, 0.0);
    for x in points {
        let j = field.jet(x)?;
        let diff = j.value - oracle(x)?;
        sq += diff * diff;
        abs += diff.abs();
        lap += j.laplacian().abs();
    }
    let n = points.len() as f64;
    let m = Metrics {
        rmse: (sq / n).sqrt(),
        paper_mae: abs / n,
        mean_abs_laplacian: lap / n,
    };
    if !(m.rmse.is_finite() && m.mean_abs_laplacian.is_finite()) {
        return Err(Error::NonFinite("metrics".into()));
    }
    Ok(m)
}
