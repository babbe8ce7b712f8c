use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diffcore::{check_dim, Jet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Sin,
    Exp,
}

impl Activation {
    /// `(σ, σ′, σ″, σ‴)` at `z`.
    #[inline]
    pub fn derivatives(self, z: f64) -> (f64, f64, f64, f64) {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                let s1 = 1.0 - t * t;
                (t, s1, -2.0 * t * s1, s1 * (6.0 * t * t - 2.0))
            }
            Activation::Sin => {
                let (s, c) = z.sin_cos();
                (s, c, -s, -c)
            }
            Activation::Exp => {
                let e = z.exp();
                (e, e, e, e)
            }
        }
    }

    pub fn apply_jet(self, z: &Jet) -> Jet {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Sin => z.sin(),
            Activation::Exp => z.exp(),
        }
    }

    pub fn is_holomorphic(self) -> bool {
        matches!(self, Activation::Sin | Activation::Exp)
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "sin" => Ok(Activation::Sin),
            "exp" => Ok(Activation::Exp),
            other => Err(Error::InvalidSpec(format!("unknown activation '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_layers: usize,
    pub width: usize,
    pub activation: Activation,
    pub output_dim: usize,
}

impl MlpSpec {
    pub fn new(input_dim: usize, output_dim: usize, activation: Activation) -> Self {
        Self {
            input_dim,
            hidden_layers: 3,
            width: 32,
            activation,
            output_dim,
        }
    }

    pub fn with_shape(mut self, hidden_layers: usize, width: usize) -> Self {
        self.hidden_layers = hidden_layers;
        self.width = width;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers == 0 {
            return Err(Error::InvalidSpec("at least one hidden layer is required".into()));
        }
        if self.width == 0 || self.input_dim == 0 || self.output_dim == 0 {
            return Err(Error::InvalidSpec("layer sizes must be positive".into()));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of every linear layer, input to output.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = Vec::with_capacity(self.hidden_layers + 1);
        let mut fan_in = self.input_dim;
        for _ in 0..self.hidden_layers {
            shapes.push((fan_in, self.width));
            fan_in = self.width;
        }
        shapes.push((fan_in, self.output_dim));
        shapes
    }

    /// Number of real scalars per set of weights and biases.
    pub fn scalar_count(&self) -> usize {
        self.layer_shapes().iter().map(|(i, o)| o * i + o).sum()
    }
}

/// Affine input normalisation `(x − center) / scale` with one uniform scale,
/// so `z ↦ (z − c) / s` stays holomorphic in the complex case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputMap {
    pub center: Vec<f64>,
    pub scale: f64,
}

impl InputMap {
    pub fn identity(dim: usize) -> Self {
        Self {
            center: vec![0.0; dim],
            scale: 1.0,
        }
    }

    /// Maps the axis-aligned box `[lo, hi]` into `[−1, 1]` along its longest side.
    pub fn for_box(lo: &[f64], hi: &[f64]) -> Self {
        let center = lo.iter().zip(hi).map(|(a, b)| (a + b) / 2.0).collect();
        let scale = lo.iter().zip(hi).map(|(a, b)| (b - a) / 2.0).fold(0.0, f64::max);
        Self { center, scale }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.dim())?;
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "input scale must be positive, got {}",
                self.scale
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn apply(&self, i: usize, x: f64) -> f64 {
        (x - self.center[i]) / self.scale
    }

    pub fn apply_jet(&self, i: usize, x: &Jet) -> Jet {
        x.add_scalar(-self.center[i]).scale(1.0 / self.scale)
    }
}

/// Weight gain of the real Kaiming-uniform rule, `±√(6 / fan_in)`.
pub const REAL_GAIN: f64 = 2.449_489_742_783_178;
/// Weight gain for complex networks, `±1/√fan_in` before the `1/√2` split.
pub const COMPLEX_GAIN: f64 = 1.0;

/// Kaiming-uniform weights in `±√(6 / fan_in)` and biases in `±1/√fan_in`,
/// layer by layer, weights (row-major, `fan_out × fan_in`) before biases.
/// Complex networks draw real and imaginary parts independently, each scaled
/// by `1/√2`, and store them as adjacent pairs.
pub fn kaiming_uniform<R: Rng>(spec: &MlpSpec, complex: bool, rng: &mut R) -> Vec<f64> {
    kaiming_uniform_with_gain(spec, complex, REAL_GAIN, rng)
}

/// [`kaiming_uniform`] with weight bound `gain/√fan_in`.
pub fn kaiming_uniform_with_gain<R: Rng>(spec: &MlpSpec, complex: bool, gain: f64, rng: &mut R) -> Vec<f64> {
    let reps = if complex { 2 } else { 1 };
    let shrink = if complex { std::f64::consts::FRAC_1_SQRT_2 } else { 1.0 };
    let mut out = Vec::with_capacity(reps * spec.scalar_count());
    for (fan_in, fan_out) in spec.layer_shapes() {
        let wb = gain / (fan_in as f64).sqrt();
        for _ in 0..fan_in * fan_out * reps {
            out.push(rng.gen_range(-wb..wb) * shrink);
        }
        let bb = 1.0 / (fan_in as f64).sqrt();
        for _ in 0..fan_out * reps {
            out.push(rng.gen_range(-bb..bb) * shrink);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_shape() {
        let s = MlpSpec::new(2, 1, Activation::Tanh);
        assert_eq!(s.layer_shapes(), vec![(2, 32), (32, 32), (32, 32), (32, 1)]);
        assert_eq!(s.scalar_count(), 2 * 32 + 32 + 2 * (32 * 32 + 32) + 32 + 1);
        assert!(s.clone().with_shape(0, 4).validate().is_err());
    }

    #[test]
    fn activation_derivatives_match_finite_differences() {
        let h = 1e-5;
        for act in [Activation::Tanh, Activation::Sin, Activation::Exp] {
            for z in [-1.3, 0.0, 0.4, 2.0] {
                let (f, d1, d2, d3) = act.derivatives(z);
                let at = |z: f64| act.derivatives(z);
                assert!((d1 - (at(z + h).0 - at(z - h).0) / (2.0 * h)).abs() < 1e-8);
                assert!((d2 - (at(z + h).1 - at(z - h).1) / (2.0 * h)).abs() < 1e-8);
                assert!((d3 - (at(z + h).2 - at(z - h).2) / (2.0 * h)).abs() < 1e-8);
                assert!(f.is_finite());
            }
        }
    }

    #[test]
    fn width_32_weights_within_bound() {
        let spec = MlpSpec::new(2, 1, Activation::Tanh);
        let p = kaiming_uniform(&spec, false, &mut ChaCha8Rng::seed_from_u64(1));
        // Second layer weights start after the first layer (2·32 + 32).
        let start = 96;
        let bound = (6.0f64 / 32.0).sqrt();
        assert!(p[start..start + 32 * 32].iter().all(|w| w.abs() <= bound));
        let again = kaiming_uniform(&spec, false, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(p, again);
    }

    #[test]
    fn complex_modulus_variance_matches_real() {
        let spec = MlpSpec::new(1, 1, Activation::Sin).with_shape(1, 10_000);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = kaiming_uniform(&spec, true, &mut rng);
        let r = kaiming_uniform(&spec, false, &mut rng);
        // First layer: fan_in = 1, 10⁴ weights.
        let var_c: f64 = c[..20_000].chunks(2).map(|w| w[0] * w[0] + w[1] * w[1]).sum::<f64>() / 1e4;
        let var_r: f64 = r[..10_000].iter().map(|w| w * w).sum::<f64>() / 1e4;
        assert!((var_c / var_r - 1.0).abs() < 0.1, "{var_c} {var_r}");
    }

    #[test]
    fn real_gain_is_sqrt_six() {
        assert!((REAL_GAIN - 6f64.sqrt()).abs() < 1e-15);
    }
}
