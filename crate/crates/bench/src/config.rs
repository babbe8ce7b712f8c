//! Run configuration and its JSON form.

use serde::{Deserialize, Serialize};

use harmonia_core::losses::{ArchConfig, LossWeights, Method};
use harmonia_core::qsim::QHOLO_LR;

use crate::error::{BenchError, Result};
use crate::scenario::{Preset, ScenarioId};

/// Seed of the boundary and collocation samples. Every run of a scenario
/// sees the same points; the run seed only drives initialisation.
pub const PLAN_SEED: u64 = 0;

/// Upper limits accepted from configuration files.
const MAX_EPOCHS: usize = 10_000_000;
const MAX_SAMPLES: usize = 1 << 20;
const MAX_CELLS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioId,
    pub method: Method,
    pub seed: u64,
    #[serde(default = "default_preset")]
    pub preset: Preset,
    #[serde(default)]
    pub epochs: Option<usize>,
    #[serde(default)]
    pub lr: Option<f64>,
    #[serde(default)]
    pub arch: ArchConfig,
    #[serde(default)]
    pub weights: LossWeights,
    /// Points per boundary line (per axis on faces).
    #[serde(default)]
    pub boundary_points: Option<usize>,
    #[serde(default)]
    pub interior_points: Option<usize>,
    /// Resolution of grid oracles along the longest side.
    #[serde(default)]
    pub oracle_cells: Option<usize>,
    #[serde(default)]
    pub eval_cells: Option<usize>,
}

fn default_preset() -> Preset {
    Preset::Fast
}

impl RunConfig {
    pub fn new(scenario: ScenarioId, method: Method, seed: u64, preset: Preset) -> Self {
        Self {
            scenario,
            method,
            seed,
            preset,
            epochs: None,
            lr: None,
            arch: ArchConfig::default(),
            weights: LossWeights::default(),
            boundary_points: None,
            interior_points: None,
            oracle_cells: None,
            eval_cells: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BenchError::Config(m));
        if let Some(e) = self.epochs {
            if e == 0 || e > MAX_EPOCHS {
                return bad(format!("epochs must lie in 1..={MAX_EPOCHS}, got {e}"));
            }
        }
        if let Some(lr) = self.lr {
            if !(lr > 0.0 && lr.is_finite()) {
                return bad(format!("learning rate must be positive, got {lr}"));
            }
        }
        for (name, v, lo) in [
            ("boundary_points", self.boundary_points, 2),
            ("interior_points", self.interior_points, 1),
        ] {
            if let Some(n) = v {
                if n < lo || n > MAX_SAMPLES {
                    return bad(format!("{name} must lie in {lo}..={MAX_SAMPLES}, got {n}"));
                }
            }
        }
        for (name, v) in [("oracle_cells", self.oracle_cells), ("eval_cells", self.eval_cells)] {
            if let Some(n) = v {
                if !(2..=MAX_CELLS).contains(&n) {
                    return bad(format!("{name} must lie in 2..={MAX_CELLS}, got {n}"));
                }
            }
        }
        let a = &self.arch;
        if a.hidden_layers == 0 || a.hidden_layers > 64 || a.width == 0 || a.width > 4096 {
            return bad(format!("unsupported network shape {}x{}", a.hidden_layers, a.width));
        }
        if a.qubits == 0 || a.qubits > 12 || a.qdepth == 0 || a.qdepth > 64 {
            return bad(format!(
                "unsupported circuit shape {} qubits, depth {}",
                a.qubits, a.qdepth
            ));
        }
        if !(a.hpinn_k > 0.0 && a.hpinn_k.is_finite()) {
            return bad(format!("hPINN sharpness must be positive, got {}", a.hpinn_k));
        }
        self.weights.validate()?;
        Ok(())
    }

    pub fn effective_epochs(&self) -> usize {
        self.epochs.unwrap_or(match self.preset {
            Preset::Fast => 4000,
            Preset::Paper => 16000,
        })
    }

    pub fn effective_lr(&self) -> f64 {
        self.lr.unwrap_or(if self.method == Method::QHolomorphic {
            QHOLO_LR
        } else {
            1e-3
        })
    }

    pub fn effective_boundary_points(&self) -> usize {
        self.boundary_points.unwrap_or(match (self.scenario, self.preset) {
            (ScenarioId::Pipe3d, Preset::Fast) => 16,
            (ScenarioId::Pipe3d, Preset::Paper) => 32,
            _ => 100,
        })
    }

    pub fn effective_interior_points(&self) -> usize {
        self.interior_points.unwrap_or(1024)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_json_uses_defaults() {
        let cfg = RunConfig::from_json(r#"{"scenario": "heater", "method": "multiholomorphic", "seed": 3}"#).unwrap();
        assert_eq!(cfg.preset, Preset::Fast);
        assert_eq!(cfg.effective_epochs(), 4000);
        assert_eq!(cfg.effective_lr(), 1e-3);
        assert_eq!(cfg.effective_boundary_points(), 100);
    }

    #[test]
    fn round_trip() {
        let mut cfg = RunConfig::new(ScenarioId::Robot, Method::CurlNet, 7, Preset::Paper);
        cfg.epochs = Some(12);
        assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn quantum_runs_default_to_their_own_step_size() {
        let cfg = RunConfig::new(ScenarioId::HeatBox, Method::QHolomorphic, 0, Preset::Fast);
        assert_eq!(cfg.effective_lr(), QHOLO_LR);
    }

    #[test]
    fn bad_configs_are_rejected() {
        for text in [
            r#"{"scenario": "moon", "method": "pinn", "seed": 0}"#,
            r#"{"scenario": "heater", "method": "pinn", "seed": 0, "epochs": 0}"#,
            r#"{"scenario": "heater", "method": "pinn", "seed": 0, "lr": -1}"#,
            r#"{"scenario": "heater", "method": "pinn", "seed": 0, "typo": 1}"#,
            r#"{"scenario": "heater", "method": "pinn", "seed": 0, "arch": {"width": 0}}"#,
            r#"{"scenario": "heater", "method": "pinn", "seed": 0, "eval_cells": 1}"#,
            r#"[1, 2]"#,
        ] {
            assert!(RunConfig::from_json(text).is_err(), "{text}");
        }
    }
}
