use ndarray::{s, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::spec::{kaiming_uniform, Activation, InputMap, MlpSpec};
use crate::diffcore::Jet;
use crate::error::{Error, Result};

/// Which input derivatives a batched pass carries alongside the value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Order {
    Value,
    /// Value and gradient.
    Grad,
    /// Value, gradient and the Hessian diagonal.
    Lap,
}

impl Order {
    pub fn channels(self, dim: usize) -> usize {
        match self {
            Order::Value => 1,
            Order::Grad => 1 + dim,
            Order::Lap => 1 + 2 * dim,
        }
    }
}

/// Real-valued MLP `R^d → R^m` with an input normalisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealMlp {
    pub spec: MlpSpec,
    pub input: InputMap,
}

/// Output of a batched forward pass plus what the backward pass needs.
///
/// Activations are laid out as `(features, channels · n)` with channel blocks
/// `[value | ∂_1 … ∂_d | ∂²_11 … ∂²_dd]`, each block `n` columns wide.
#[derive(Debug, Clone)]
pub struct RealBatch {
    pub out: Array2<f64>,
    pub n: usize,
    pub dim: usize,
    pub order: Order,
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
}

impl RealBatch {
    #[inline]
    pub fn value(&self, o: usize, i: usize) -> f64 {
        self.out[[o, i]]
    }

    #[inline]
    pub fn grad(&self, o: usize, k: usize, i: usize) -> f64 {
        self.out[[o, (1 + k) * self.n + i]]
    }

    #[inline]
    pub fn hess_diag(&self, o: usize, k: usize, i: usize) -> f64 {
        self.out[[o, (1 + self.dim + k) * self.n + i]]
    }

    pub fn laplacian(&self, o: usize, i: usize) -> f64 {
        (0..self.dim).map(|k| self.hess_diag(o, k, i)).sum()
    }

    /// Zero adjoint with the shape of `out`.
    pub fn zero_adjoint(&self) -> Array2<f64> {
        Array2::zeros(self.out.raw_dim())
    }
}

/// Views of one layer's weights and biases inside a flat parameter slice.
pub(crate) fn layer_views(spec: &MlpSpec, params: &[f64], reps: usize) -> Vec<(usize, usize, usize)> {
    let mut at = 0;
    let mut out = Vec::new();
    for (fan_in, fan_out) in spec.layer_shapes() {
        out.push((at, fan_in, fan_out));
        at += reps * (fan_in * fan_out + fan_out);
    }
    debug_assert_eq!(at, params.len());
    out
}

fn act_forward(act: Activation, z: &Array2<f64>, n: usize, dim: usize, order: Order) -> Array2<f64> {
    let mut h = Array2::zeros(z.raw_dim());
    for (zr, mut hr) in z.outer_iter().zip(h.outer_iter_mut()) {
        let zr = zr.as_slice().expect("row-major");
        let hr = hr.as_slice_mut().expect("row-major");
        for i in 0..n {
            let (f, s1, s2, _) = act.derivatives(zr[i]);
            hr[i] = f;
            if order >= Order::Grad {
                for k in 0..dim {
                    let zk = zr[(1 + k) * n + i];
                    hr[(1 + k) * n + i] = s1 * zk;
                    if order == Order::Lap {
                        let zkk = zr[(1 + dim + k) * n + i];
                        hr[(1 + dim + k) * n + i] = s2 * zk * zk + s1 * zkk;
                    }
                }
            }
        }
    }
    h
}

fn act_backward(
    act: Activation,
    z: &Array2<f64>,
    hbar: &Array2<f64>,
    n: usize,
    dim: usize,
    order: Order,
) -> Array2<f64> {
    let mut zbar = Array2::zeros(z.raw_dim());
    for ((zr, hb), mut zb) in z.outer_iter().zip(hbar.outer_iter()).zip(zbar.outer_iter_mut()) {
        let zr = zr.as_slice().expect("row-major");
        let hb = hb.as_slice().expect("row-major");
        let zb = zb.as_slice_mut().expect("row-major");
        for i in 0..n {
            let (_, s1, s2, s3) = act.derivatives(zr[i]);
            let mut z0 = hb[i] * s1;
            if order >= Order::Grad {
                for k in 0..dim {
                    let zk = zr[(1 + k) * n + i];
                    let hk = hb[(1 + k) * n + i];
                    z0 += hk * s2 * zk;
                    let mut zkb = hk * s1;
                    if order == Order::Lap {
                        let zkk = zr[(1 + dim + k) * n + i];
                        let hkk = hb[(1 + dim + k) * n + i];
                        zb[(1 + dim + k) * n + i] = hkk * s1;
                        zkb += 2.0 * hkk * s2 * zk;
                        z0 += hkk * (s3 * zk * zk + s2 * zkk);
                    }
                    zb[(1 + k) * n + i] = zkb;
                }
            }
            zb[i] = z0;
        }
    }
    zbar
}

impl RealMlp {
    pub fn new(spec: MlpSpec, input: InputMap) -> Result<Self> {
        spec.validate()?;
        input.validate()?;
        if input.dim() != spec.input_dim {
            return Err(Error::DimensionMismatch {
                expected: spec.input_dim,
                got: input.dim(),
            });
        }
        Ok(Self { spec, input })
    }

    pub fn dim(&self) -> usize {
        self.spec.input_dim
    }

    pub fn param_count(&self) -> usize {
        self.spec.scalar_count()
    }

    pub fn init(&self, seed: u64) -> Vec<f64> {
        self.init_with(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn init_with<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        kaiming_uniform(&self.spec, false, rng)
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.param_count(),
                got: params.len(),
            });
        }
        Ok(())
    }

    /// Pointwise forward pass carrying full jets; returns one jet per output.
    pub fn forward_jet(&self, params: &[f64], x: &[Jet]) -> Result<Vec<Jet>> {
        self.check_params(params)?;
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let jdim = x[0].dim();
        let mut act: Vec<Jet> = x
            .iter()
            .enumerate()
            .map(|(i, xi)| self.input.apply_jet(i, xi))
            .collect();
        let layers = layer_views(&self.spec, params, 1);
        let last = layers.len() - 1;
        for (l, &(at, fan_in, fan_out)) in layers.iter().enumerate() {
            let w = &params[at..at + fan_in * fan_out];
            let b = &params[at + fan_in * fan_out..at + fan_in * fan_out + fan_out];
            let mut next = Vec::with_capacity(fan_out);
            for o in 0..fan_out {
                let mut z = Jet::constant(jdim, b[o]);
                for (j, a) in act.iter().enumerate() {
                    z.axpy(w[o * fan_in + j], a);
                }
                next.push(if l < last {
                    self.spec.activation.apply_jet(&z)
                } else {
                    z
                });
            }
            act = next;
        }
        if let Some(bad) = act.iter().position(|j| !j.is_finite()) {
            return Err(Error::NonFinite(format!("network output {bad}")));
        }
        Ok(act)
    }

    /// Forward pass over `points` (`n × d`), carrying the channels of `order`.
    pub fn forward_batch(&self, params: &[f64], points: ArrayView2<f64>, order: Order) -> Result<RealBatch> {
        self.check_params(params)?;
        let (n, dim) = points.dim();
        if dim != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: dim,
            });
        }
        let c = order.channels(dim);
        let mut a = Array2::zeros((dim, c * n));
        for i in 0..n {
            for k in 0..dim {
                a[[k, i]] = self.input.apply(k, points[[i, k]]);
            }
        }
        if order >= Order::Grad {
            for k in 0..dim {
                a.slice_mut(s![k, (1 + k) * n..(2 + k) * n])
                    .fill(1.0 / self.input.scale);
            }
        }
        let layers = layer_views(&self.spec, params, 1);
        let last = layers.len() - 1;
        let mut inputs = Vec::with_capacity(layers.len());
        let mut pre = Vec::with_capacity(last);
        for (l, &(at, fan_in, fan_out)) in layers.iter().enumerate() {
            let w = ArrayView2::from_shape((fan_out, fan_in), &params[at..at + fan_in * fan_out]).expect("layer shape");
            let b = &params[at + fan_in * fan_out..at + fan_in * fan_out + fan_out];
            let mut z = w.dot(&a);
            for (o, mut row) in z.outer_iter_mut().enumerate() {
                row.slice_mut(s![..n]).mapv_inplace(|v| v + b[o]);
            }
            inputs.push(a);
            if l < last {
                a = act_forward(self.spec.activation, &z, n, dim, order);
                pre.push(z);
            } else {
                if z.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("batched network output".into()));
                }
                return Ok(RealBatch {
                    out: z,
                    n,
                    dim,
                    order,
                    inputs,
                    pre,
                });
            }
        }
        unreachable!("an MLP has at least one layer")
    }

    /// Accumulates `∂L/∂θ` into `grad` given `adj = ∂L/∂out`.
    pub fn backward_batch(&self, params: &[f64], batch: &RealBatch, adj: &Array2<f64>, grad: &mut [f64]) -> Result<()> {
        self.check_params(params)?;
        if grad.len() != params.len() || adj.raw_dim() != batch.out.raw_dim() {
            return Err(Error::DimensionMismatch {
                expected: params.len(),
                got: grad.len(),
            });
        }
        let n = batch.n;
        let layers = layer_views(&self.spec, params, 1);
        let mut zbar = adj.clone();
        for l in (0..layers.len()).rev() {
            let (at, fan_in, fan_out) = layers[l];
            let wbar = zbar.dot(&batch.inputs[l].t());
            for (g, v) in grad[at..at + fan_in * fan_out].iter_mut().zip(wbar.iter()) {
                *g += v;
            }
            let bbar = zbar.slice(s![.., ..n]).sum_axis(Axis(1));
            for (g, v) in grad[at + fan_in * fan_out..at + fan_in * fan_out + fan_out]
                .iter_mut()
                .zip(bbar.iter())
            {
                *g += v;
            }
            if l > 0 {
                let w =
                    ArrayView2::from_shape((fan_out, fan_in), &params[at..at + fan_in * fan_out]).expect("layer shape");
                let abar = w.t().dot(&zbar);
                zbar = act_backward(
                    self.spec.activation,
                    &batch.pre[l - 1],
                    &abar,
                    n,
                    batch.dim,
                    batch.order,
                );
            }
        }
        Ok(())
    }
}
