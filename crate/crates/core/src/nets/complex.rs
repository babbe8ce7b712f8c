use ndarray::{s, Array2, ArrayView2, Axis};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::real::{layer_views, Order};
use super::spec::{kaiming_uniform_with_gain, Activation, InputMap, MlpSpec, COMPLEX_GAIN};
use crate::diffcore::{ComplexJet, Jet};
use crate::error::{Error, Result};

/// Complex-weight MLP `C → C`; its real part is the harmonic field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMlp {
    pub spec: MlpSpec,
    /// Two-dimensional: centre `(c_x, c_y)` and a uniform scale.
    pub input: InputMap,
}

/// Batched complex forward pass. Channel blocks are `[f | df/dz]`.
#[derive(Debug, Clone)]
pub struct ComplexBatch {
    pub re: Array2<f64>,
    pub im: Array2<f64>,
    pub n: usize,
    pub order: Order,
    inputs: Vec<(Array2<f64>, Array2<f64>)>,
    pre: Vec<(Array2<f64>, Array2<f64>)>,
}

impl ComplexBatch {
    pub fn f(&self, i: usize) -> Complex64 {
        Complex64::new(self.re[[0, i]], self.im[[0, i]])
    }

    pub fn df(&self, i: usize) -> Complex64 {
        Complex64::new(self.re[[0, self.n + i]], self.im[[0, self.n + i]])
    }
}

fn holo(act: Activation, z: Complex64) -> (Complex64, Complex64, Complex64) {
    match act {
        Activation::Sin => {
            let (s, c) = (z.sin(), z.cos());
            (s, c, -s)
        }
        Activation::Exp => {
            let e = z.exp();
            (e, e, e)
        }
        Activation::Tanh => unreachable!("validated at construction"),
    }
}

fn split_weights(params: &[f64], at: usize, fan_in: usize, fan_out: usize) -> (Array2<f64>, Array2<f64>) {
    let wr = Array2::from_shape_fn((fan_out, fan_in), |(o, j)| params[at + 2 * (o * fan_in + j)]);
    let wi = Array2::from_shape_fn((fan_out, fan_in), |(o, j)| params[at + 2 * (o * fan_in + j) + 1]);
    (wr, wi)
}

impl ComplexMlp {
    pub fn new(spec: MlpSpec, input: InputMap) -> Result<Self> {
        spec.validate()?;
        input.validate()?;
        if !spec.activation.is_holomorphic() {
            return Err(Error::InvalidSpec(format!(
                "activation {:?} is not holomorphic; use sin or exp",
                spec.activation
            )));
        }
        if spec.input_dim != 1 || spec.output_dim != 1 {
            return Err(Error::InvalidSpec(
                "complex networks map one complex input to one complex output".into(),
            ));
        }
        if input.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: input.dim(),
            });
        }
        Ok(Self { spec, input })
    }

    pub fn param_count(&self) -> usize {
        2 * self.spec.scalar_count()
    }

    pub fn init(&self, seed: u64) -> Vec<f64> {
        self.init_with(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn init_with<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        kaiming_uniform_with_gain(&self.spec, true, COMPLEX_GAIN, rng)
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

    /// `NN_h(z)` evaluated on a complex jet.
    pub fn forward_complex(&self, params: &[f64], z: &ComplexJet) -> Result<ComplexJet> {
        self.check_params(params)?;
        let c = Complex64::new(self.input.center[0], self.input.center[1]);
        let mut act = vec![z.add_scalar(-c).scale(Complex64::new(1.0 / self.input.scale, 0.0))];
        let layers = layer_views(&self.spec, params, 2);
        let last = layers.len() - 1;
        for (l, &(at, fan_in, fan_out)) in layers.iter().enumerate() {
            let bias_at = at + 2 * fan_in * fan_out;
            let mut next = Vec::with_capacity(fan_out);
            for o in 0..fan_out {
                let b = Complex64::new(params[bias_at + 2 * o], params[bias_at + 2 * o + 1]);
                let mut zo = ComplexJet::constant(b);
                for (j, a) in act.iter().enumerate() {
                    let k = at + 2 * (o * fan_in + j);
                    zo.axpy(Complex64::new(params[k], params[k + 1]), a);
                }
                next.push(if l < last {
                    match self.spec.activation {
                        Activation::Sin => zo.sin(),
                        Activation::Exp => zo.exp(),
                        Activation::Tanh => unreachable!("validated at construction"),
                    }
                } else {
                    zo
                });
            }
            act = next;
        }
        let out = act.pop().expect("one output");
        if !out.is_finite() {
            return Err(Error::NonFinite("complex network output".into()));
        }
        Ok(out)
    }

    /// `φ_H(x, y) = Re NN_h(x + i y)` with its spatial derivatives.
    pub fn forward_harmonic(&self, params: &[f64], x: f64, y: f64) -> Result<Jet> {
        Ok(self.forward_complex(params, &ComplexJet::variable(x, y))?.re)
    }

    /// Batched pass over `points` (`(x, y)` pairs). `order` is `Value` or
    /// `Grad`; the Laplacian of a holomorphic network is not propagated.
    pub fn forward_batch(&self, params: &[f64], points: ArrayView2<f64>, order: Order) -> Result<ComplexBatch> {
        self.check_params(params)?;
        if order == Order::Lap {
            return Err(Error::Incompatible(
                "batched complex passes carry at most the first derivative".into(),
            ));
        }
        if points.ncols() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: points.ncols(),
            });
        }
        let n = points.nrows();
        let ch = if order == Order::Grad { 2 } else { 1 };
        let mut ar = Array2::zeros((1, ch * n));
        let mut ai = Array2::zeros((1, ch * n));
        for i in 0..n {
            ar[[0, i]] = self.input.apply(0, points[[i, 0]]);
            ai[[0, i]] = self.input.apply(1, points[[i, 1]]);
        }
        if order == Order::Grad {
            ar.slice_mut(s![0, n..]).fill(1.0 / self.input.scale);
        }
        let layers = layer_views(&self.spec, params, 2);
        let last = layers.len() - 1;
        let mut inputs = Vec::with_capacity(layers.len());
        let mut pre = Vec::with_capacity(last);
        for (l, &(at, fan_in, fan_out)) in layers.iter().enumerate() {
            let (wr, wi) = split_weights(params, at, fan_in, fan_out);
            let mut zr = wr.dot(&ar) - wi.dot(&ai);
            let mut zi = wr.dot(&ai) + wi.dot(&ar);
            let bias_at = at + 2 * fan_in * fan_out;
            for o in 0..fan_out {
                zr.slice_mut(s![o, ..n]).mapv_inplace(|v| v + params[bias_at + 2 * o]);
                zi.slice_mut(s![o, ..n])
                    .mapv_inplace(|v| v + params[bias_at + 2 * o + 1]);
            }
            inputs.push((ar, ai));
            if l == last {
                if zr.iter().chain(zi.iter()).any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("batched complex network output".into()));
                }
                return Ok(ComplexBatch {
                    re: zr,
                    im: zi,
                    n,
                    order,
                    inputs,
                    pre,
                });
            }
            let mut hr = Array2::zeros(zr.raw_dim());
            let mut hi = Array2::zeros(zr.raw_dim());
            for o in 0..fan_out {
                for i in 0..n {
                    let z0 = Complex64::new(zr[[o, i]], zi[[o, i]]);
                    let (f, d1, _) = holo(self.spec.activation, z0);
                    hr[[o, i]] = f.re;
                    hi[[o, i]] = f.im;
                    if ch == 2 {
                        let h1 = d1 * Complex64::new(zr[[o, n + i]], zi[[o, n + i]]);
                        hr[[o, n + i]] = h1.re;
                        hi[[o, n + i]] = h1.im;
                    }
                }
            }
            pre.push((zr, zi));
            ar = hr;
            ai = hi;
        }
        unreachable!("an MLP has at least one layer")
    }

    /// Accumulates `∂L/∂θ` given the adjoints of the outputs in the
    /// convention `∂L/∂Re + i ∂L/∂Im`.
    pub fn backward_batch(
        &self,
        params: &[f64],
        batch: &ComplexBatch,
        adj_re: &Array2<f64>,
        adj_im: &Array2<f64>,
        grad: &mut [f64],
    ) -> Result<()> {
        self.check_params(params)?;
        if grad.len() != params.len() {
            return Err(Error::DimensionMismatch {
                expected: params.len(),
                got: grad.len(),
            });
        }
        let n = batch.n;
        let ch = if batch.order == Order::Grad { 2 } else { 1 };
        let layers = layer_views(&self.spec, params, 2);
        let mut zbr = adj_re.clone();
        let mut zbi = adj_im.clone();
        for l in (0..layers.len()).rev() {
            let (at, fan_in, fan_out) = layers[l];
            let (ar, ai) = &batch.inputs[l];
            let wbr = zbr.dot(&ar.t()) + zbi.dot(&ai.t());
            let wbi = zbi.dot(&ar.t()) - zbr.dot(&ai.t());
            for o in 0..fan_out {
                for j in 0..fan_in {
                    let k = at + 2 * (o * fan_in + j);
                    grad[k] += wbr[[o, j]];
                    grad[k + 1] += wbi[[o, j]];
                }
            }
            let bbr = zbr.slice(s![.., ..n]).sum_axis(Axis(1));
            let bbi = zbi.slice(s![.., ..n]).sum_axis(Axis(1));
            let bias_at = at + 2 * fan_in * fan_out;
            for o in 0..fan_out {
                grad[bias_at + 2 * o] += bbr[o];
                grad[bias_at + 2 * o + 1] += bbi[o];
            }
            if l == 0 {
                break;
            }
            let (wr, wi) = split_weights(params, at, fan_in, fan_out);
            let abr = wr.t().dot(&zbr) + wi.t().dot(&zbi);
            let abi = wr.t().dot(&zbi) - wi.t().dot(&zbr);
            let (pr, pi) = &batch.pre[l - 1];
            let mut nbr = Array2::zeros(pr.raw_dim());
            let mut nbi = Array2::zeros(pr.raw_dim());
            for o in 0..fan_in {
                for i in 0..n {
                    let z0 = Complex64::new(pr[[o, i]], pi[[o, i]]);
                    let (_, d1, d2) = holo(self.spec.activation, z0);
                    let h0 = Complex64::new(abr[[o, i]], abi[[o, i]]);
                    let mut z0b = d1.conj() * h0;
                    if ch == 2 {
                        let z1 = Complex64::new(pr[[o, n + i]], pi[[o, n + i]]);
                        let h1 = Complex64::new(abr[[o, n + i]], abi[[o, n + i]]);
                        z0b += (d2 * z1).conj() * h1;
                        let z1b = d1.conj() * h1;
                        nbr[[o, n + i]] = z1b.re;
                        nbi[[o, n + i]] = z1b.im;
                    }
                    nbr[[o, i]] = z0b.re;
                    nbi[[o, i]] = z0b.im;
                }
            }
            zbr = nbr;
            zbi = nbi;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcore::cauchy_riemann_residual;

    fn unit_net(width: usize, layers: usize) -> ComplexMlp {
        ComplexMlp::new(
            MlpSpec::new(1, 1, Activation::Sin).with_shape(layers, width),
            InputMap {
                center: vec![0.5, 0.5],
                scale: 0.5,
            },
        )
        .unwrap()
    }

    #[test]
    fn tanh_is_rejected() {
        let spec = MlpSpec::new(1, 1, Activation::Tanh);
        assert!(ComplexMlp::new(spec, InputMap::identity(2)).is_err());
    }

    #[test]
    fn random_net_is_harmonic_and_satisfies_cauchy_riemann() {
        let m = unit_net(32, 3);
        let p = m.init(2);
        for (x, y) in [(0.1, 0.2), (0.9, 0.95), (0.5, 0.0)] {
            let phi = m.forward_harmonic(&p, x, y).unwrap();
            assert!(phi.laplacian().abs() < 1e-8);
            let (r1, r2) = cauchy_riemann_residual(&|z: &ComplexJet| m.forward_complex(&p, z), x, y).unwrap();
            assert!(r1.abs() < 1e-9 && r2.abs() < 1e-9);
        }
    }

    #[test]
    fn batch_matches_jets() {
        let m = unit_net(6, 2);
        let p = m.init(4);
        let pts = ndarray::array![[0.2, 0.3], [0.7, 0.1]];
        let b = m.forward_batch(&p, pts.view(), Order::Grad).unwrap();
        for i in 0..2 {
            let out = m
                .forward_complex(&p, &ComplexJet::variable(pts[[i, 0]], pts[[i, 1]]))
                .unwrap();
            assert!((b.f(i) - out.value()).norm() < 1e-13);
            let d = b.df(i);
            assert!((d.re - out.re.grad[0]).abs() < 1e-12);
            assert!((-d.im - out.re.grad[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let m = unit_net(5, 2);
        let p = m.init(8);
        let pts = ndarray::array![[0.2, 0.3], [0.7, 0.1], [0.4, 0.9]];
        // L = Σ (Re f)² + Σ (Re f' + 0.5 Im f')
        let loss = |p: &[f64]| {
            let b = m.forward_batch(p, pts.view(), Order::Grad).unwrap();
            (0..3)
                .map(|i| b.f(i).re.powi(2) + b.df(i).re + 0.5 * b.df(i).im)
                .sum::<f64>()
        };
        let b = m.forward_batch(&p, pts.view(), Order::Grad).unwrap();
        let mut ar = Array2::zeros(b.re.raw_dim());
        let mut ai = Array2::zeros(b.re.raw_dim());
        for i in 0..3 {
            ar[[0, i]] = 2.0 * b.f(i).re;
            ar[[0, 3 + i]] = 1.0;
            ai[[0, 3 + i]] = 0.5;
        }
        let mut g = vec![0.0; p.len()];
        m.backward_batch(&p, &b, &ar, &ai, &mut g).unwrap();
        let h = 1e-5;
        let mut probe = p.clone();
        for j in 0..p.len() {
            probe[j] = p[j] + h;
            let lp = loss(&probe);
            probe[j] = p[j] - h;
            let lm = loss(&probe);
            probe[j] = p[j];
            let fd = (lp - lm) / (2.0 * h);
            if g[j].abs() > 1e-6 {
                assert!((fd - g[j]).abs() <= 1e-4 * g[j].abs(), "param {j}: {fd} vs {}", g[j]);
            }
        }
    }
}
