//! Gradient-ascent navigation on a potential field.

use serde::{Deserialize, Serialize};

use harmonia_core::error::Error as CoreError;
use harmonia_core::geometry::Domain;

use crate::error::{BenchError, Result};

pub const DEFAULT_STEP: f64 = 0.01;
pub const DEFAULT_MAX_STEPS: usize = 10_000;
/// Gradient norm below which a point counts as stationary.
pub const STATIONARY_NORM: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Reached the goal band `y ≥ 1 − step`.
    Reached,
    /// The next step would have left the domain.
    Exited,
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotPath {
    pub points: Vec<[f64; 2]>,
    pub termination: Termination,
}

impl RobotPath {
    pub fn end(&self) -> [f64; 2] {
        *self.points.last().expect("paths hold at least the start")
    }
}

/// Explicit Euler ascent along `∇φ/‖∇φ‖` with fixed step length. Every
/// recorded point lies in `domain`.
pub fn robot_path(
    grad: &dyn Fn(&[f64]) -> harmonia_core::Result<Vec<f64>>,
    domain: &Domain,
    start: [f64; 2],
    step: f64,
    max_steps: usize,
) -> Result<RobotPath> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(BenchError::Config(format!("step must be positive, got {step}")));
    }
    if !domain.contains(&start) {
        return Err(CoreError::OutsideDomain(start.to_vec()).into());
    }
    let mut points = vec![start];
    let mut p = start;
    for _ in 0..max_steps {
        if p[1] >= 1.0 - step {
            return Ok(RobotPath {
                points,
                termination: Termination::Reached,
            });
        }
        let g = grad(&p)?;
        let norm = g[0].hypot(g[1]);
        if !(norm >= STATIONARY_NORM) {
            return Err(BenchError::Stationary {
                point: p.to_vec(),
                norm,
            });
        }
        let next = [p[0] + step * g[0] / norm, p[1] + step * g[1] / norm];
        if !domain.contains(&next) {
            return Ok(RobotPath {
                points,
                termination: Termination::Exited,
            });
        }
        points.push(next);
        p = next;
    }
    let termination = if p[1] >= 1.0 - step {
        Termination::Reached
    } else {
        Termination::MaxSteps
    };
    Ok(RobotPath { points, termination })
}
