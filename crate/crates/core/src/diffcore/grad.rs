use crate::error::{Error, Result};

/// Gradient of a scalar loss, aligned index-for-index with a flat parameter
/// vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGradient(pub Vec<f64>);

impl ParamGradient {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

/// A scalar loss over a flat parameter vector with an exact gradient.
pub trait Differentiable {
    fn param_count(&self) -> usize;

    fn loss(&self, params: &[f64]) -> Result<f64>;

    /// Loss value and its exact gradient with respect to `params`.
    fn loss_and_grad(&self, params: &[f64]) -> Result<(f64, Vec<f64>)>;
}

/// Exact parameter gradient of `objective`, with finiteness checks.
pub fn param_grad(objective: &dyn Differentiable, params: &[f64]) -> Result<ParamGradient> {
    if params.len() != objective.param_count() {
        return Err(Error::DimensionMismatch {
            expected: objective.param_count(),
            got: params.len(),
        });
    }
    let (loss, grad) = objective.loss_and_grad(params)?;
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss {
            index: params.iter().position(|p| !p.is_finite()),
        });
    }
    if let Some(index) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFiniteLoss { index: Some(index) });
    }
    Ok(ParamGradient(grad))
}

/// Sum of several objectives sharing one parameter vector.
pub struct SumObjective<'a> {
    pub terms: Vec<&'a dyn Differentiable>,
}

impl Differentiable for SumObjective<'_> {
    fn param_count(&self) -> usize {
        self.terms.first().map_or(0, |t| t.param_count())
    }

    fn loss(&self, params: &[f64]) -> Result<f64> {
        self.terms.iter().map(|t| t.loss(params)).sum()
    }

    fn loss_and_grad(&self, params: &[f64]) -> Result<(f64, Vec<f64>)> {
        let mut total = 0.0;
        let mut grad = vec![0.0; params.len()];
        for t in &self.terms {
            let (l, g) = t.loss_and_grad(params)?;
            total += l;
            for (acc, gi) in grad.iter_mut().zip(g) {
                *acc += gi;
            }
        }
        Ok((total, grad))
    }
}

/// Central finite-difference gradient of `f` with step `h`, restricted to the
/// indices in `range` (other entries are left at zero).
pub fn central_difference<F>(f: F, params: &[f64], h: f64, range: std::ops::Range<usize>) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut grad = vec![0.0; params.len()];
    let mut probe = params.to_vec();
    for i in range {
        let orig = probe[i];
        probe[i] = orig + h;
        let fp = f(&probe)?;
        probe[i] = orig - h;
        let fm = f(&probe)?;
        probe[i] = orig;
        grad[i] = (fp - fm) / (2.0 * h);
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Square;

    impl Differentiable for Square {
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
    fn square_gradient() {
        let g = param_grad(&Square, &[3.0]).unwrap();
        assert_eq!(g.0, vec![6.0]);
        let fd = central_difference(|p| Square.loss(p), &[3.0], 1e-5, 0..1).unwrap();
        assert!((fd[0] - 6.0).abs() < 1e-8);
    }

    #[test]
    fn non_finite_loss_names_parameter() {
        let err = param_grad(&Square, &[f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteLoss { index: Some(0) }));
        assert!(param_grad(&Square, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn sum_objective_adds_gradients() {
        let sum = SumObjective {
            terms: vec![&Square, &Square],
        };
        let g = param_grad(&sum, &[1.5]).unwrap();
        assert_eq!(g.0, vec![6.0]);
    }
}
