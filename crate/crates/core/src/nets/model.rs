use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::complex::{ComplexBatch, ComplexMlp};
use super::curl::{curl_and_divergence, curl_terms, CurlPair};
use super::hpinn::{hpinn_eval, HpinnWrap};
use super::real::{Order, RealBatch, RealMlp};
use crate::diffcore::{lift, Jet};
use crate::error::{Error, Result};
use crate::geometry::{DomainDecomposition, Location};
use crate::qsim::{qholo_derivatives, QHoloNet, Spectrum};

/// One trainable scalar field `φ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldModel {
    Real { net: RealMlp },
    Hpinn { net: RealMlp, wrap: HpinnWrap },
    Holomorphic { net: ComplexMlp },
    Curl { pair: CurlPair },
    Quantum { net: QHoloNet },
}

/// What a batched evaluation must produce besides values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Need {
    pub order: Order,
    pub curl: bool,
}

impl Need {
    pub const VALUE: Need = Need {
        order: Order::Value,
        curl: false,
    };
    pub const GRAD: Need = Need {
        order: Order::Grad,
        curl: false,
    };
    pub const LAP: Need = Need {
        order: Order::Lap,
        curl: false,
    };
    pub const CURL: Need = Need {
        order: Order::Value,
        curl: true,
    };

    pub fn with_grad(self) -> Self {
        Need {
            order: self.order.max(Order::Grad),
            ..self
        }
    }

    pub fn with_curl(self) -> Self {
        Need { curl: true, ..self }
    }
}

/// Values, gradients (`n × d`), Laplacians and divergence-free fields
/// (`n × d`) over a batch of points. Unrequested parts are empty.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldEval {
    pub value: Vec<f64>,
    pub grad: Array2<f64>,
    pub lap: Vec<f64>,
    pub curl: Array2<f64>,
}

impl FieldEval {
    fn empty(n: usize, dim: usize, need: Need) -> Self {
        let gd = if need.order >= Order::Grad { dim } else { 0 };
        Self {
            value: vec![0.0; n],
            grad: Array2::zeros((n, gd)),
            lap: if need.order == Order::Lap {
                vec![0.0; n]
            } else {
                Vec::new()
            },
            curl: Array2::zeros((n, if need.curl { dim } else { 0 })),
        }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    /// Zero adjoint with matching shapes.
    pub fn zero_adjoint(&self) -> FieldEval {
        FieldEval {
            value: vec![0.0; self.value.len()],
            grad: Array2::zeros(self.grad.raw_dim()),
            lap: vec![0.0; self.lap.len()],
            curl: Array2::zeros(self.curl.raw_dim()),
        }
    }
}

/// Intermediate state kept between a batched forward and backward pass.
#[derive(Debug, Clone)]
pub enum Tape {
    Real(RealBatch),
    Hpinn { batch: RealBatch, weights: Vec<Jet> },
    Holomorphic(ComplexBatch),
    Curl { phi: RealBatch, a: Option<RealBatch> },
    Quantum,
}

fn real_adjoint(batch: &RealBatch, adj: &FieldEval) -> Array2<f64> {
    let (n, d) = (batch.n, batch.dim);
    let mut out = batch.zero_adjoint();
    for i in 0..n {
        out[[0, i]] = adj.value[i];
        if batch.order >= Order::Grad && adj.grad.ncols() > 0 {
            for k in 0..d {
                out[[0, (1 + k) * n + i]] = adj.grad[[i, k]];
            }
        }
        if batch.order == Order::Lap && !adj.lap.is_empty() {
            for k in 0..d {
                out[[0, (1 + d + k) * n + i]] = adj.lap[i];
            }
        }
    }
    out
}

fn fill_from_real(batch: &RealBatch, eval: &mut FieldEval) {
    for i in 0..batch.n {
        eval.value[i] = batch.value(0, i);
        for k in 0..eval.grad.ncols() {
            eval.grad[[i, k]] = batch.grad(0, k, i);
        }
        if !eval.lap.is_empty() {
            eval.lap[i] = batch.laplacian(0, i);
        }
    }
}

impl FieldModel {
    pub fn dim(&self) -> usize {
        match self {
            FieldModel::Real { net } | FieldModel::Hpinn { net, .. } => net.dim(),
            FieldModel::Curl { pair } => pair.dim(),
            FieldModel::Holomorphic { .. } | FieldModel::Quantum { .. } => 2,
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            FieldModel::Real { net } | FieldModel::Hpinn { net, .. } => net.param_count(),
            FieldModel::Holomorphic { net } => net.param_count(),
            FieldModel::Curl { pair } => pair.param_count(),
            FieldModel::Quantum { net } => net.param_count(),
        }
    }

    pub fn init_with<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            FieldModel::Real { net } | FieldModel::Hpinn { net, .. } => net.init_with(rng),
            FieldModel::Holomorphic { net } => net.init_with(rng),
            FieldModel::Curl { pair } => {
                let mut p = pair.phi.init_with(rng);
                p.extend(pair.a.init_with(rng));
                p
            }
            FieldModel::Quantum { net } => net.init_with(rng),
        }
    }

    /// Whether [`FieldModel::backward_batch`] produces exact gradients. The
    /// quantum circuit relies on finite differences over its angles instead.
    pub fn has_exact_gradient(&self) -> bool {
        !matches!(self, FieldModel::Quantum { .. })
    }

    /// The scalar field with exact spatial derivatives at one point.
    pub fn eval_point(&self, params: &[f64], x: &[f64]) -> Result<Jet> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        match self {
            FieldModel::Real { net } => Ok(net.forward_jet(params, &lift(x, x.len())?)?[0]),
            FieldModel::Hpinn { net, wrap } => hpinn_eval(net, params, x, wrap),
            FieldModel::Holomorphic { net } => net.forward_harmonic(params, x[0], x[1]),
            FieldModel::Curl { pair } => {
                let (pp, _) = pair.split(params)?;
                Ok(pair.phi.forward_jet(pp, &lift(x, x.len())?)?[0])
            }
            FieldModel::Quantum { net } => {
                let d = qholo_derivatives(net, params, x[0], x[1])?;
                let hess = vec![d.hess[0].to_vec(), d.hess[1].to_vec()];
                Ok(Jet::from_parts(2, d.value, &d.grad, &hess))
            }
        }
    }

    /// The divergence-free field `∇×A` of a CurlNet at one point.
    pub fn curl_point(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        let FieldModel::Curl { pair } = self else {
            return Err(Error::Incompatible(
                "only CurlNet fields carry a divergence-free part".into(),
            ));
        };
        let (_, ap) = pair.split(params)?;
        let a = pair.a.forward_jet(ap, &lift(x, x.len())?)?;
        Ok(curl_and_divergence(pair.dim(), &a)?.0)
    }

    pub fn forward_batch(&self, params: &[f64], points: ArrayView2<f64>, need: Need) -> Result<(FieldEval, Tape)> {
        let n = points.nrows();
        let dim = self.dim();
        if points.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: points.ncols(),
            });
        }
        if need.curl && !matches!(self, FieldModel::Curl { .. }) {
            return Err(Error::Incompatible(
                "only CurlNet fields carry a divergence-free part".into(),
            ));
        }
        let mut eval = FieldEval::empty(n, dim, need);
        match self {
            FieldModel::Real { net } => {
                let batch = net.forward_batch(params, points, need.order)?;
                fill_from_real(&batch, &mut eval);
                Ok((eval, Tape::Real(batch)))
            }
            FieldModel::Hpinn { net, wrap } => {
                let batch = net.forward_batch(params, points, need.order)?;
                let weights = (0..n)
                    .map(|i| wrap.weight(points.row(i).as_slice().expect("row-major points")))
                    .collect::<Result<Vec<_>>>()?;
                let c = wrap.value;
                for (i, w) in weights.iter().enumerate() {
                    let m = batch.value(0, i);
                    eval.value[i] = c + w.value * (m - c);
                    for k in 0..eval.grad.ncols() {
                        eval.grad[[i, k]] = w.grad[k] * (m - c) + w.value * batch.grad(0, k, i);
                    }
                    if !eval.lap.is_empty() {
                        let dot: f64 = (0..dim).map(|k| w.grad[k] * batch.grad(0, k, i)).sum();
                        eval.lap[i] = w.laplacian() * (m - c) + 2.0 * dot + w.value * batch.laplacian(0, i);
                    }
                }
                Ok((eval, Tape::Hpinn { batch, weights }))
            }
            FieldModel::Holomorphic { net } => {
                if need.order == Order::Lap {
                    return Err(Error::Incompatible(
                        "holomorphic fields are not trained on a Laplacian residual".into(),
                    ));
                }
                let batch = net.forward_batch(params, points, need.order)?;
                for i in 0..n {
                    eval.value[i] = batch.f(i).re;
                    if need.order == Order::Grad {
                        let d = batch.df(i);
                        eval.grad[[i, 0]] = d.re;
                        eval.grad[[i, 1]] = -d.im;
                    }
                }
                Ok((eval, Tape::Holomorphic(batch)))
            }
            FieldModel::Curl { pair } => {
                let (pp, ap) = pair.split(params)?;
                let phi = pair.phi.forward_batch(pp, points, need.order)?;
                fill_from_real(&phi, &mut eval);
                let a = if need.curl {
                    let a = pair.a.forward_batch(ap, points, Order::Grad)?;
                    for &(c, j, k, sign) in curl_terms(dim)? {
                        for i in 0..n {
                            eval.curl[[i, c]] += sign * a.grad(j, k, i);
                        }
                    }
                    Some(a)
                } else {
                    None
                };
                Ok((eval, Tape::Curl { phi, a }))
            }
            FieldModel::Quantum { net } => {
                let spectrum: Spectrum = net.spectrum(params)?;
                let s = net.input.scale;
                for i in 0..n {
                    let (x, y) = (net.input.apply(0, points[[i, 0]]), net.input.apply(1, points[[i, 1]]));
                    if need.order == Order::Lap {
                        let d = spectrum.derivatives(x, y);
                        eval.value[i] = d.value;
                        eval.grad[[i, 0]] = d.grad[0] / s;
                        eval.grad[[i, 1]] = d.grad[1] / s;
                        eval.lap[i] = d.laplacian / (s * s);
                    } else {
                        let (f, df) = spectrum.eval(x, y);
                        eval.value[i] = f.re;
                        if need.order == Order::Grad {
                            eval.grad[[i, 0]] = df.re / s;
                            eval.grad[[i, 1]] = -df.im / s;
                        }
                    }
                }
                if eval.value.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("quantum network output".into()));
                }
                Ok((eval, Tape::Quantum))
            }
        }
    }

    /// Accumulates `∂L/∂θ` into `grad` given the adjoint `adj` of a batched
    /// evaluation. A no-op for the quantum circuit.
    pub fn backward_batch(&self, params: &[f64], tape: &Tape, adj: &FieldEval, grad: &mut [f64]) -> Result<()> {
        match (self, tape) {
            (FieldModel::Real { net }, Tape::Real(batch)) => {
                net.backward_batch(params, batch, &real_adjoint(batch, adj), grad)
            }
            (FieldModel::Hpinn { net, wrap }, Tape::Hpinn { batch, weights }) => {
                let (n, d) = (batch.n, batch.dim);
                let c = wrap.value;
                let mut out = batch.zero_adjoint();
                for (i, w) in weights.iter().enumerate() {
                    let vb = adj.value[i];
                    let lb = if adj.lap.is_empty() { 0.0 } else { adj.lap[i] };
                    let mut mb = vb * w.value + lb * w.laplacian();
                    for k in 0..adj.grad.ncols() {
                        let gb = adj.grad[[i, k]];
                        mb += gb * w.grad[k];
                        out[[0, (1 + k) * n + i]] = gb * w.value + 2.0 * lb * w.grad[k];
                    }
                    if batch.order == Order::Lap {
                        for k in 0..d {
                            out[[0, (1 + d + k) * n + i]] = lb * w.value;
                        }
                    }
                    out[[0, i]] = mb;
                }
                let _ = c;
                net.backward_batch(params, batch, &out, grad)
            }
            (FieldModel::Holomorphic { net }, Tape::Holomorphic(batch)) => {
                let n = batch.n;
                let mut ar = Array2::zeros(batch.re.raw_dim());
                let mut ai = Array2::zeros(batch.re.raw_dim());
                for i in 0..n {
                    ar[[0, i]] = adj.value[i];
                    if adj.grad.ncols() == 2 {
                        ar[[0, n + i]] = adj.grad[[i, 0]];
                        ai[[0, n + i]] = -adj.grad[[i, 1]];
                    }
                }
                net.backward_batch(params, batch, &ar, &ai, grad)
            }
            (FieldModel::Curl { pair }, Tape::Curl { phi, a }) => {
                let np = pair.phi.param_count();
                let (pp, ap) = pair.split(params)?;
                let (gp, ga) = grad.split_at_mut(np);
                pair.phi.backward_batch(pp, phi, &real_adjoint(phi, adj), gp)?;
                if let Some(a) = a {
                    let n = a.n;
                    let mut out = a.zero_adjoint();
                    for &(c, j, k, sign) in curl_terms(pair.dim())? {
                        for i in 0..n {
                            out[[j, (1 + k) * n + i]] += sign * adj.curl[[i, c]];
                        }
                    }
                    pair.a.backward_batch(ap, a, &out, ga)?;
                }
                Ok(())
            }
            (FieldModel::Quantum { .. }, Tape::Quantum) => Ok(()),
            _ => Err(Error::Incompatible("tape does not belong to this model".into())),
        }
    }
}

/// One or more field models sharing a flat parameter vector. With several
/// parts a partition assigns points to parts and averages on interfaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub parts: Vec<FieldModel>,
    pub partition: Option<DomainDecomposition>,
}

impl Network {
    pub fn single(model: FieldModel) -> Self {
        Self {
            parts: vec![model],
            partition: None,
        }
    }

    /// One subnet per subdomain of `partition`.
    pub fn piecewise(parts: Vec<FieldModel>, partition: DomainDecomposition) -> Result<Self> {
        if parts.len() != partition.len() {
            return Err(Error::InvalidSpec(format!(
                "{} subnets for {} subdomains",
                parts.len(),
                partition.len()
            )));
        }
        Ok(Self {
            parts,
            partition: Some(partition),
        })
    }

    pub fn dim(&self) -> usize {
        self.parts[0].dim()
    }

    pub fn param_count(&self) -> usize {
        self.parts.iter().map(|p| p.param_count()).sum()
    }

    /// Start offset of each part inside the flat parameter vector.
    pub fn offsets(&self) -> Vec<usize> {
        let mut at = 0;
        self.parts
            .iter()
            .map(|p| {
                let o = at;
                at += p.param_count();
                o
            })
            .collect()
    }

    pub fn part_range(&self, i: usize) -> std::ops::Range<usize> {
        let start = self.offsets()[i];
        start..start + self.parts[i].param_count()
    }

    pub fn init(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.parts.iter().flat_map(|p| p.init_with(&mut rng)).collect()
    }

    fn check(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.param_count(),
                got: params.len(),
            });
        }
        Ok(())
    }

    /// Parts owning `x`, with averaging weights.
    pub fn owners(&self, x: &[f64]) -> Result<Vec<(usize, f64)>> {
        match &self.partition {
            None => Ok(vec![(0, 1.0)]),
            Some(dec) => Ok(match dec.locate(x)? {
                Location::Subdomain(i) => vec![(i, 1.0)],
                Location::Interface { pair: (i, j), .. } => vec![(i, 0.5), (j, 0.5)],
            }),
        }
    }

    pub fn eval_point(&self, params: &[f64], x: &[f64]) -> Result<Jet> {
        piecewise_eval(self, params, x)
    }

    /// The divergence-free part at `x` (averaged across interfaces).
    pub fn curl_point(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        self.check(params)?;
        let mut out = vec![0.0; x.len()];
        for (i, w) in self.owners(x)? {
            let f = self.parts[i].curl_point(&params[self.part_range(i)], x)?;
            for (o, v) in out.iter_mut().zip(f) {
                *o += w * v;
            }
        }
        Ok(out)
    }
}

/// The subnet's field inside a subdomain; the mean of the two adjacent
/// subnets on an interface.
pub fn piecewise_eval(net: &Network, params: &[f64], x: &[f64]) -> Result<Jet> {
    net.check(params)?;
    let owners = net.owners(x)?;
    let mut acc: Option<Jet> = None;
    for (i, w) in owners {
        let j = net.parts[i].eval_point(&params[net.part_range(i)], x)?;
        match acc.as_mut() {
            None => acc = Some(j.scale(w)),
            Some(a) => a.axpy(w, &j),
        }
    }
    Ok(acc.expect("at least one owner"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{heater_decomposition, heater_triangle, Domain, Primitive, Rect};
    use crate::nets::{Activation, InputMap, MlpSpec};
    use ndarray::array;

    fn holo(center: f64, scale: f64) -> FieldModel {
        FieldModel::Holomorphic {
            net: ComplexMlp::new(
                MlpSpec::new(1, 1, Activation::Sin).with_shape(2, 8),
                InputMap {
                    center: vec![center, center],
                    scale,
                },
            )
            .unwrap(),
        }
    }

    #[test]
    fn interface_average() {
        let dec = DomainDecomposition::new(
            vec![
                Domain::Rect(Rect::new([0.0, 0.0], [1.0, 0.5])),
                Domain::Rect(Rect::new([0.0, 0.5], [1.0, 1.0])),
            ],
            vec![Primitive::Segment {
                a: [0.0, 0.5],
                b: [1.0, 0.5],
            }],
        )
        .unwrap();
        let net = Network::piecewise(vec![holo(0.5, 0.5), holo(0.5, 0.5)], dec).unwrap();
        let p = net.init(1);
        let x = [0.3, 0.5];
        let a = net.parts[0].eval_point(&p[net.part_range(0)], &x).unwrap();
        let b = net.parts[1].eval_point(&p[net.part_range(1)], &x).unwrap();
        let mid = piecewise_eval(&net, &p, &x).unwrap();
        assert!((mid.value - 0.5 * (a.value + b.value)).abs() < 1e-15);
        let inside = piecewise_eval(&net, &p, &[0.3, 0.2]).unwrap();
        let direct = net.parts[0].eval_point(&p[net.part_range(0)], &[0.3, 0.2]).unwrap();
        assert_eq!(inside.value, direct.value);
        assert!(piecewise_eval(&net, &p, &[1.3, 0.2]).is_err());
    }

    #[test]
    fn multiholomorphic_is_harmonic_inside_every_subdomain() {
        let domain = Domain::RectMinusPolygon {
            outer: Rect::new([0.0, 0.0], [10.0, 10.0]),
            hole: heater_triangle().to_vec(),
        };
        let dec = heater_decomposition(&domain).unwrap();
        let net = Network::piecewise(vec![holo(5.0, 5.0), holo(5.0, 5.0), holo(5.0, 5.0)], dec).unwrap();
        let p = net.init(4);
        for x in [[1.0, 8.0], [9.0, 8.0], [5.0, 1.0]] {
            assert!(piecewise_eval(&net, &p, &x).unwrap().laplacian().abs() < 1e-8);
        }
    }

    #[test]
    fn batched_fields_match_pointwise() {
        let spec = MlpSpec::new(2, 1, Activation::Tanh).with_shape(2, 6);
        let input = InputMap {
            center: vec![0.5, 0.5],
            scale: 0.5,
        };
        let real = RealMlp::new(spec.clone(), input.clone()).unwrap();
        let a = RealMlp::new(spec.clone(), input.clone()).unwrap();
        let wrap = HpinnWrap::new(
            &[crate::geometry::BoundarySegment::dirichlet(
                Primitive::Segment {
                    a: [0.0, 0.0],
                    b: [1.0, 0.0],
                },
                0.3,
            )],
            10.0,
        )
        .unwrap();
        let models = [
            FieldModel::Real { net: real.clone() },
            FieldModel::Hpinn {
                net: real.clone(),
                wrap,
            },
            FieldModel::Curl {
                pair: CurlPair::new(real, a).unwrap(),
            },
        ];
        let pts = array![[0.1, 0.2], [0.8, 0.6]];
        for m in &models {
            let p = m.init_with(&mut ChaCha8Rng::seed_from_u64(2));
            let (eval, _) = m.forward_batch(&p, pts.view(), Need::LAP).unwrap();
            for i in 0..2 {
                let j = m.eval_point(&p, &[pts[[i, 0]], pts[[i, 1]]]).unwrap();
                assert!((eval.value[i] - j.value).abs() < 1e-13);
                assert!((eval.grad[[i, 0]] - j.grad[0]).abs() < 1e-12);
                assert!((eval.lap[i] - j.laplacian()).abs() < 1e-10, "{m:?}");
            }
        }
    }
}
