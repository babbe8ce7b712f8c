use serde::{Deserialize, Serialize};

use super::real::RealMlp;
use crate::diffcore::{check_dim, lift, Jet};
use crate::error::{Error, Result};

/// `(field component, A component, derivative index, sign)`: the field is
/// `F_i = Σ sign · ∂A_j/∂x_k` over the entries with first element `i`.
pub fn curl_terms(dim: usize) -> Result<&'static [(usize, usize, usize, f64)]> {
    const D2: [(usize, usize, usize, f64); 2] = [(0, 0, 1, 1.0), (1, 0, 0, -1.0)];
    const D3: [(usize, usize, usize, f64); 6] = [
        (0, 2, 1, 1.0),
        (0, 1, 2, -1.0),
        (1, 0, 2, 1.0),
        (1, 2, 0, -1.0),
        (2, 1, 0, 1.0),
        (2, 0, 1, -1.0),
    ];
    // A = (y1 … y6) are the coefficients of dx1dx2, dx1dx3, dx1dx4, dx2dx3,
    // dx2dx4, dx3dx4; F is read off the exterior derivative.
    const D4: [(usize, usize, usize, f64); 12] = [
        (0, 3, 3, 1.0),
        (0, 4, 2, -1.0),
        (0, 5, 1, 1.0),
        (1, 1, 3, -1.0),
        (1, 2, 2, 1.0),
        (1, 5, 0, -1.0),
        (2, 0, 3, 1.0),
        (2, 2, 1, -1.0),
        (2, 4, 0, 1.0),
        (3, 0, 2, -1.0),
        (3, 1, 1, 1.0),
        (3, 3, 0, -1.0),
    ];
    match dim {
        2 => Ok(&D2),
        3 => Ok(&D3),
        4 => Ok(&D4),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

/// Number of potential components for a divergence-free field in `dim`
/// dimensions: the `(dim − 2)`-form count 1, 3, 6.
pub fn potential_components(dim: usize) -> Result<usize> {
    match dim {
        2 => Ok(1),
        3 => Ok(3),
        4 => Ok(6),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

/// Divergence-free field from the Jacobian `jac[j][k] = ∂A_j/∂x_k`.
pub fn curl_from_jacobian(dim: usize, jac: &[[f64; 4]]) -> Result<Vec<f64>> {
    let mut f = vec![0.0; dim];
    for &(i, j, k, sign) in curl_terms(dim)? {
        f[i] += sign * jac[j][k];
    }
    Ok(f)
}

/// The curl field and its divergence from jets of the potential components.
pub fn curl_and_divergence(dim: usize, a: &[Jet]) -> Result<(Vec<f64>, f64)> {
    let terms = curl_terms(dim)?;
    if a.len() != potential_components(dim)? {
        return Err(Error::DimensionMismatch {
            expected: potential_components(dim)?,
            got: a.len(),
        });
    }
    let mut f = vec![0.0; dim];
    let mut div = 0.0;
    for &(i, j, k, sign) in terms {
        f[i] += sign * a[j].grad[k];
        div += sign * a[j].hess[k][i];
    }
    Ok((f, div))
}

/// `(φ_C, A)`: a scalar potential and the potential of a divergence-free
/// field, trained so that `∇φ_C` matches the field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurlPair {
    pub phi: RealMlp,
    pub a: RealMlp,
}

impl CurlPair {
    pub fn new(phi: RealMlp, a: RealMlp) -> Result<Self> {
        let dim = phi.dim();
        check_dim(dim)?;
        if phi.spec.output_dim != 1 {
            return Err(Error::InvalidSpec("φ_C must have a single output".into()));
        }
        if a.dim() != dim || a.spec.output_dim != potential_components(dim)? {
            return Err(Error::InvalidSpec(format!(
                "A must map R^{dim} to R^{}",
                potential_components(dim)?
            )));
        }
        Ok(Self { phi, a })
    }

    pub fn dim(&self) -> usize {
        self.phi.dim()
    }

    pub fn param_count(&self) -> usize {
        self.phi.param_count() + self.a.param_count()
    }

    /// Splits a flat parameter vector into `(θ_φ, θ_A)`.
    pub fn split<'a>(&self, params: &'a [f64]) -> Result<(&'a [f64], &'a [f64])> {
        if params.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.param_count(),
                got: params.len(),
            });
        }
        Ok(params.split_at(self.phi.param_count()))
    }

    pub fn init(&self, seed: u64) -> Vec<f64> {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut p = self.phi.init_with(&mut rng);
        p.extend(self.a.init_with(&mut rng));
        p
    }
}

/// The divergence-free field `∇×A` at `x` (2D: `(∂A/∂x₂, −∂A/∂x₁)`).
pub fn curl_field(pair: &CurlPair, params: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    Ok(curl_field_with_divergence(pair, params, x)?.0)
}

/// [`curl_field`] together with its divergence computed from the jets.
pub fn curl_field_with_divergence(pair: &CurlPair, params: &[f64], x: &[f64]) -> Result<(Vec<f64>, f64)> {
    let dim = pair.dim();
    if x.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: x.len(),
        });
    }
    let (_, ap) = pair.split(params)?;
    let a = pair.a.forward_jet(ap, &lift(x, dim)?)?;
    curl_and_divergence(dim, &a)
}
