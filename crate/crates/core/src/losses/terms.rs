//! Per-point loss terms. Each evaluates the field one sample at a time
//! through jets; the batched objective must agree with these.

use crate::diffcore::Jet;
use crate::error::{Error, Result};
use crate::geometry::{BoundarySample, WallSample};
use crate::nets::{curl_field, CurlPair, FieldModel, Network};

/// A scalar field that can be queried pointwise with exact derivatives.
pub trait Field {
    fn jet(&self, x: &[f64]) -> Result<Jet>;

    /// The divergence-free companion field, where one exists.
    fn curl(&self, _x: &[f64]) -> Result<Vec<f64>> {
        Err(Error::Incompatible("field has no divergence-free part".into()))
    }
}

/// A field model paired with its parameters.
pub struct Bound<'a> {
    pub model: &'a FieldModel,
    pub params: &'a [f64],
}

impl Field for Bound<'_> {
    fn jet(&self, x: &[f64]) -> Result<Jet> {
        self.model.eval_point(self.params, x)
    }

    fn curl(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.model.curl_point(self.params, x)
    }
}

/// A whole (possibly piecewise) network paired with its parameters.
pub struct BoundNetwork<'a> {
    pub net: &'a Network,
    pub params: &'a [f64],
}

impl Field for BoundNetwork<'_> {
    fn jet(&self, x: &[f64]) -> Result<Jet> {
        self.net.eval_point(self.params, x)
    }

    fn curl(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.net.curl_point(self.params, x)
    }
}

/// A closure over jets, e.g. `|x| Ok(x[0] * x[0] + x[1] * x[1])`.
pub struct FnField<F> {
    pub dim: usize,
    pub f: F,
}

impl<F> Field for FnField<F>
where
    F: Fn(&[Jet]) -> Result<Jet>,
{
    fn jet(&self, x: &[f64]) -> Result<Jet> {
        (self.f)(&crate::diffcore::lift(x, self.dim)?)
    }
}

/// How the field entering the dielectric flux condition is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldMode {
    /// `E = ∇φ`.
    Gradient,
    /// `E = ∇×A` of a CurlNet.
    Curl,
}

fn nonempty<T>(s: &[T], what: &'static str) -> Result<()> {
    if s.is_empty() {
        Err(Error::EmptySamples(what))
    } else {
        Ok(())
    }
}

/// Mean of `(φ(x) − c)²` over the Dirichlet samples.
pub fn dirichlet_loss(field: &dyn Field, samples: &[BoundarySample]) -> Result<f64> {
    nonempty(samples, "Dirichlet samples")?;
    let mut acc = 0.0;
    for s in samples {
        let r = field.jet(&s.x)?.value - s.value;
        acc += r * r;
    }
    Ok(acc / samples.len() as f64)
}

/// Mean of `(∇φ·n)²` over points on zero-flux walls.
pub fn neumann_loss(field: &dyn Field, samples: &[WallSample]) -> Result<f64> {
    nonempty(samples, "wall samples")?;
    let mut acc = 0.0;
    for s in samples {
        let jet = field.jet(&s.x)?;
        let flux: f64 = jet.gradient().iter().zip(&s.normal).map(|(g, n)| g * n).sum();
        acc += flux * flux;
    }
    Ok(acc / samples.len() as f64)
}

/// Mean of `(∇²φ)²` over the collocation points.
pub fn laplacian_loss(field: &dyn Field, points: &[Vec<f64>]) -> Result<f64> {
    nonempty(points, "collocation points")?;
    let mut acc = 0.0;
    for x in points {
        let l = field.jet(x)?.laplacian();
        acc += l * l;
    }
    Ok(acc / points.len() as f64)
}

/// Mean of `‖∇φ − F‖²` where `F` is the field's divergence-free part.
pub fn curl_match_loss_field(field: &dyn Field, points: &[Vec<f64>]) -> Result<f64> {
    nonempty(points, "collocation points")?;
    let mut acc = 0.0;
    for x in points {
        let g = field.jet(x)?.gradient().to_vec();
        let f = field.curl(x)?;
        acc += g.iter().zip(&f).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    }
    Ok(acc / points.len() as f64)
}

/// Mean of `(φᵢ − φⱼ)² + ‖∇φᵢ − ∇φⱼ‖²` over interface samples.
pub fn interface_loss(a: &dyn Field, b: &dyn Field, samples: &[Vec<f64>]) -> Result<f64> {
    nonempty(samples, "interface samples")?;
    let mut acc = 0.0;
    for x in samples {
        let (ja, jb) = (a.jet(x)?, b.jet(x)?);
        acc += (ja.value - jb.value).powi(2);
        for k in 0..x.len() {
            acc += (ja.grad[k] - jb.grad[k]).powi(2);
        }
    }
    Ok(acc / samples.len() as f64)
}

/// Mean of `‖∇φ_C − ∇×A‖²` over the collocation points.
pub fn curl_match_loss(pair: &CurlPair, params: &[f64], points: &[Vec<f64>]) -> Result<f64> {
    nonempty(points, "collocation points")?;
    let (pp, _) = pair.split(params)?;
    let mut acc = 0.0;
    for x in points {
        if x.len() != pair.dim() {
            return Err(Error::DimensionMismatch {
                expected: pair.dim(),
                got: x.len(),
            });
        }
        let phi = pair.phi.forward_jet(pp, &crate::diffcore::lift(x, x.len())?)?[0];
        let f = curl_field(pair, params, x)?;
        acc += (0..x.len()).map(|k| (phi.grad[k] - f[k]).powi(2)).sum::<f64>();
    }
    Ok(acc / points.len() as f64)
}

/// Mean of `(φ₁ − φ₂)² + (ε₁ E₁·n − ε₂ E₂·n)²` over interface samples,
/// with `n` pointing from medium 1 into medium 2.
pub fn dielectric_loss(
    a: &dyn Field,
    b: &dyn Field,
    samples: &[Vec<f64>],
    normals: &[Vec<f64>],
    eps: (f64, f64),
    mode: FieldMode,
) -> Result<f64> {
    nonempty(samples, "dielectric interface samples")?;
    if normals.len() != samples.len() {
        return Err(Error::DimensionMismatch {
            expected: samples.len(),
            got: normals.len(),
        });
    }
    if !(eps.0 > 0.0 && eps.1 > 0.0) {
        return Err(Error::Config(format!("permittivities must be positive, got {eps:?}")));
    }
    let field = |f: &dyn Field, x: &[f64]| -> Result<Vec<f64>> {
        match mode {
            FieldMode::Gradient => Ok(f.jet(x)?.gradient().to_vec()),
            FieldMode::Curl => f.curl(x),
        }
    };
    let mut acc = 0.0;
    for (x, n) in samples.iter().zip(normals) {
        let jump = a.jet(x)?.value - b.jet(x)?.value;
        let (ea, eb) = (field(a, x)?, field(b, x)?);
        let flux: f64 = (0..x.len()).map(|k| (eps.0 * ea[k] - eps.1 * eb[k]) * n[k]).sum();
        acc += jump * jump + flux * flux;
    }
    Ok(acc / samples.len() as f64)
}
