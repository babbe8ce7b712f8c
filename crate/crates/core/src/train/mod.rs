//! Deterministic full-batch training with Adam.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::diffcore::Differentiable;
use crate::error::{Error, Result};

/// Upper bound on the number of recorded loss-trace entries.
pub const MAX_TRACE: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 16000,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("Adam betas must lie in [0, 1)".into()));
        }
        if self.eps <= 0.0 {
            return Err(Error::Config("Adam epsilon must be positive".into()));
        }
        Ok(())
    }
}

/// First and second moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }
}

/// One bias-corrected Adam update at step `t ≥ 1`, in place.
pub fn adam_step(params: &mut [f64], grad: &[f64], state: &mut AdamState, t: usize, cfg: &TrainConfig) -> Result<()> {
    if grad.len() != params.len() || state.m.len() != params.len() || state.v.len() != params.len() {
        return Err(Error::DimensionMismatch {
            expected: params.len(),
            got: grad.len(),
        });
    }
    if t == 0 {
        return Err(Error::Config("Adam steps are counted from 1".into()));
    }
    if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!("gradient component {i} at step {t}")));
    }
    let c1 = 1.0 - cfg.beta1.powi(t as i32);
    let c2 = 1.0 - cfg.beta2.powi(t as i32);
    for i in 0..params.len() {
        let g = grad[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub epoch: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Decimated loss history; the last entry is the loss at `final_params`.
    pub trace: Vec<TraceEntry>,
    pub final_params: Vec<f64>,
    pub final_loss: f64,
    pub initial_loss: f64,
    pub epochs_run: usize,
    /// Excluded from determinism comparisons.
    pub wall_time_s: f64,
    pub seed: u64,
    pub config: TrainConfig,
}

fn trace_stride(epochs: usize) -> usize {
    epochs.div_ceil(MAX_TRACE - 1).max(1)
}

/// Full-batch Adam on `objective` starting from `init`.
pub fn train(objective: &dyn Differentiable, init: Vec<f64>, cfg: &TrainConfig) -> Result<TrainReport> {
    train_with(|p| objective.loss_and_grad(p), |p| objective.loss(p), init, cfg)
}

/// [`train`] with the loss and gradient supplied as closures.
pub fn train_with<G, L>(loss_and_grad: G, loss: L, init: Vec<f64>, cfg: &TrainConfig) -> Result<TrainReport>
where
    G: Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
    L: Fn(&[f64]) -> Result<f64>,
{
    cfg.validate()?;
    let start = Instant::now();
    let stride = trace_stride(cfg.epochs);
    let mut params = init;
    let mut state = AdamState::new(params.len());
    let mut trace = Vec::new();
    let mut initial_loss = f64::NAN;
    let partial = |trace: &[TraceEntry], params: &[f64], epoch: usize, initial_loss: f64| TrainReport {
        trace: trace.to_vec(),
        final_params: params.to_vec(),
        final_loss: f64::NAN,
        initial_loss,
        epochs_run: epoch,
        wall_time_s: start.elapsed().as_secs_f64(),
        seed: cfg.seed,
        config: cfg.clone(),
    };
    for epoch in 0..cfg.epochs {
        let (value, grad) = loss_and_grad(&params)?;
        if epoch == 0 {
            initial_loss = value;
        }
        if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged {
                epoch,
                partial: Box::new(partial(&trace, &params, epoch, initial_loss)),
            });
        }
        if epoch % stride == 0 {
            trace.push(TraceEntry { epoch, loss: value });
        }
        adam_step(&mut params, &grad, &mut state, epoch + 1, cfg)?;
    }
    let final_loss = loss(&params)?;
    if !final_loss.is_finite() {
        return Err(Error::Diverged {
            epoch: cfg.epochs,
            partial: Box::new(partial(&trace, &params, cfg.epochs, initial_loss)),
        });
    }
    trace.push(TraceEntry {
        epoch: cfg.epochs,
        loss: final_loss,
    });
    Ok(TrainReport {
        trace,
        final_params: params,
        final_loss,
        initial_loss,
        epochs_run: cfg.epochs,
        wall_time_s: start.elapsed().as_secs_f64(),
        seed: cfg.seed,
        config: cfg.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Bowl;

    impl Differentiable for Bowl {
        fn param_count(&self) -> usize {
            1
        }
        fn loss(&self, p: &[f64]) -> Result<f64> {
            Ok(p[0] * p[0])
        }
        fn loss_and_grad(&self, p: &[f64]) -> Result<(f64, Vec<f64>)> {
            Ok((p[0] * p[0], vec![2.0 * p[0]]))
        }
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let cfg = TrainConfig::default();
        let mut p = vec![0.3, -2.0];
        let mut s = AdamState::new(2);
        adam_step(&mut p, &[0.0, 0.0], &mut s, 1, &cfg).unwrap();
        assert_eq!(p, vec![0.3, -2.0]);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let cfg = TrainConfig::default();
        let mut p = vec![0.0];
        let mut s = AdamState::new(1);
        adam_step(&mut p, &[1.0], &mut s, 1, &cfg).unwrap();
        assert!((p[0] + 1e-3 / (1.0 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradient_names_step() {
        let cfg = TrainConfig::default();
        let mut s = AdamState::new(1);
        let err = adam_step(&mut [0.0], &[f64::NAN], &mut s, 7, &cfg).unwrap_err();
        assert!(err.to_string().contains("step 7"));
    }

    #[test]
    fn quadratic_decreases_after_burn_in() {
        let cfg = TrainConfig {
            lr: 1e-2,
            ..TrainConfig::default()
        };
        let mut p = vec![1.0];
        let mut s = AdamState::new(1);
        let mut prev = f64::INFINITY;
        for t in 1..=100 {
            let g = [2.0 * p[0]];
            adam_step(&mut p, &g, &mut s, t, &cfg).unwrap();
            if t > 10 {
                assert!(p[0].abs() < prev);
            }
            prev = p[0].abs();
        }
    }

    #[test]
    fn report_trace_ends_at_final_loss() {
        let cfg = TrainConfig {
            epochs: 5000,
            lr: 1e-2,
            ..TrainConfig::default()
        };
        let report = train(&Bowl, vec![1.0], &cfg).unwrap();
        assert!(report.trace.len() <= MAX_TRACE);
        assert_eq!(report.trace.last().unwrap().loss, report.final_loss);
        assert!(report.final_loss < report.initial_loss);
        let again = train(&Bowl, vec![1.0], &cfg).unwrap();
        assert_eq!(report.final_params, again.final_params);
        assert!(train(&Bowl, vec![1.0], &TrainConfig { epochs: 0, ..cfg }).is_err());
    }

    #[test]
    fn divergence_reports_epoch() {
        let blowup = |p: &[f64]| -> Result<(f64, Vec<f64>)> {
            let l = if p[0] < 0.995 { f64::INFINITY } else { p[0] };
            Ok((l, vec![1.0]))
        };
        let cfg = TrainConfig {
            epochs: 100,
            ..TrainConfig::default()
        };
        match train_with(blowup, |p| Ok(p[0]), vec![1.0], &cfg) {
            Err(Error::Diverged { epoch, partial }) => {
                assert!(epoch > 0 && epoch < 100);
                assert_eq!(partial.epochs_run, epoch);
            }
            other => panic!("{other:?}"),
        }
    }
}
