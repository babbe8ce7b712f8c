//! Statevector simulation of the quantum holomorphic network
//! `φ(x, y) = Re ⟨0| U₂ · e^{−(x+iy)πĤ} · U₁ |0⟩`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nets::InputMap;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `2^N` complex amplitudes; qubit `j` is bit `j` of the basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    pub amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { n_qubits, amps }
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() || !amps.len().is_power_of_two() {
            return Err(Error::InvalidSpec(format!(
                "{} amplitudes is not a power of two",
                amps.len()
            )));
        }
        Ok(Self {
            n_qubits: amps.len().trailing_zeros() as usize,
            amps,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.amps.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }

    /// Applies the 2×2 matrix `[[m00, m01], [m10, m11]]` to `qubit`.
    pub fn apply_single(&mut self, qubit: usize, m: [[Complex64; 2]; 2]) {
        let bit = 1 << qubit;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    pub fn rz(&mut self, qubit: usize, theta: f64) {
        let p = Complex64::from_polar(1.0, theta / 2.0);
        self.apply_single(qubit, [[p.conj(), ZERO], [ZERO, p]]);
    }

    pub fn ry(&mut self, qubit: usize, theta: f64) {
        let (s, c) = (theta / 2.0).sin_cos();
        let (s, c) = (Complex64::new(s, 0.0), Complex64::new(c, 0.0));
        self.apply_single(qubit, [[c, -s], [s, c]]);
    }

    pub fn cnot(&mut self, control: usize, target: usize) {
        let (cb, tb) = (1 << control, 1 << target);
        for i in 0..self.amps.len() {
            if i & cb != 0 && i & tb == 0 {
                self.amps.swap(i, i | tb);
            }
        }
    }
}

/// Hardware-efficient variational block: per layer an Rz-Ry-Rz triple on
/// every qubit followed by a CNOT chain `j → j+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarBlock {
    pub n_qubits: usize,
    pub depth: usize,
}

impl VarBlock {
    pub fn angle_count(&self) -> usize {
        3 * self.n_qubits * self.depth
    }

    fn check(&self, state: &StateVector, angles: &[f64]) -> Result<()> {
        if state.n_qubits != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                got: state.n_qubits,
            });
        }
        if angles.len() != self.angle_count() {
            return Err(Error::DimensionMismatch {
                expected: self.angle_count(),
                got: angles.len(),
            });
        }
        Ok(())
    }
}

pub fn apply_block(state: &mut StateVector, block: &VarBlock, angles: &[f64]) -> Result<()> {
    block.check(state, angles)?;
    let n = block.n_qubits;
    for layer in 0..block.depth {
        for q in 0..n {
            let a = &angles[3 * (layer * n + q)..3 * (layer * n + q) + 3];
            state.rz(q, a[0]);
            state.ry(q, a[1]);
            state.rz(q, a[2]);
        }
        for q in 0..n.saturating_sub(1) {
            state.cnot(q, q + 1);
        }
    }
    Ok(())
}

/// Applies the inverse (adjoint) of [`apply_block`].
pub fn apply_block_inverse(state: &mut StateVector, block: &VarBlock, angles: &[f64]) -> Result<()> {
    block.check(state, angles)?;
    let n = block.n_qubits;
    for layer in (0..block.depth).rev() {
        for q in (0..n.saturating_sub(1)).rev() {
            state.cnot(q, q + 1);
        }
        for q in (0..n).rev() {
            let a = &angles[3 * (layer * n + q)..3 * (layer * n + q) + 3];
            state.rz(q, -a[2]);
            state.ry(q, -a[1]);
            state.rz(q, -a[0]);
        }
    }
    Ok(())
}

/// Diagonal generator of the feature map. Basis state `m` carries the
/// eigenvalue `E_m = 2m + 1`, the spectrum of `Σ_j 2^j Ẑ_j + 2^N` listed in
/// increasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalHamiltonian {
    pub eigenvalues: Vec<f64>,
}

impl DiagonalHamiltonian {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            eigenvalues: (0..1usize << n_qubits).map(|m| (2 * m + 1) as f64).collect(),
        }
    }
}

/// Multiplies amplitude `m` by `e^{−(x+iy)·π·E_m}`; no renormalisation.
pub fn iqfm_apply(state: &mut StateVector, x: f64, y: f64, h: &DiagonalHamiltonian) -> Result<()> {
    if h.eigenvalues.len() != state.amps.len() {
        return Err(Error::DimensionMismatch {
            expected: state.amps.len(),
            got: h.eigenvalues.len(),
        });
    }
    for (a, e) in state.amps.iter_mut().zip(&h.eigenvalues) {
        *a *= (Complex64::new(x, y) * (-PI * e)).exp();
    }
    if !state.is_finite() {
        return Err(Error::NonFinite(format!("feature map at x = {x}")));
    }
    Ok(())
}

/// Two variational blocks around the complex-exponential feature map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QHoloNet {
    pub block: VarBlock,
    /// Uniform-scale input normalisation applied to `(x, y)` before the
    /// feature map.
    pub input: InputMap,
}

/// Spectral coefficients `c̃_m` with `φ = Re Σ_m c̃_m e^{−(x+iy)πE_m}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub coeffs: Vec<Complex64>,
    pub eigenvalues: Vec<f64>,
}

/// `(value, gradient, Laplacian)` of the quantum field at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QDerivatives {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
    pub laplacian: f64,
}

impl QHoloNet {
    pub fn new(n_qubits: usize, depth: usize, input: InputMap) -> Result<Self> {
        if n_qubits == 0 || n_qubits > 12 || depth == 0 {
            return Err(Error::InvalidSpec(format!(
                "unsupported circuit {n_qubits} qubits × depth {depth}"
            )));
        }
        input.validate()?;
        if input.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: input.dim(),
            });
        }
        Ok(Self {
            block: VarBlock { n_qubits, depth },
            input,
        })
    }

    pub fn param_count(&self) -> usize {
        2 * self.block.angle_count()
    }

    pub fn hamiltonian(&self) -> DiagonalHamiltonian {
        DiagonalHamiltonian::new(self.block.n_qubits)
    }

    /// Angles uniform in `[0, 2π)`.
    pub fn init(&self, seed: u64) -> Vec<f64> {
        self.init_with(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn init_with<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.param_count()).map(|_| rng.gen_range(0.0..2.0 * PI)).collect()
    }

    fn split<'a>(&self, params: &'a [f64]) -> Result<(&'a [f64], &'a [f64])> {
        if params.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.param_count(),
                got: params.len(),
            });
        }
        Ok(params.split_at(self.block.angle_count()))
    }

    /// Direct circuit simulation of `Re ⟨0|Ψ⟩`.
    pub fn eval_circuit(&self, params: &[f64], x: f64, y: f64) -> Result<f64> {
        let (t1, t2) = self.split(params)?;
        let mut state = StateVector::zero(self.block.n_qubits);
        apply_block(&mut state, &self.block, t1)?;
        iqfm_apply(
            &mut state,
            self.input.apply(0, x),
            self.input.apply(1, y),
            &self.hamiltonian(),
        )?;
        apply_block(&mut state, &self.block, t2)?;
        Ok(state.amps[0].re)
    }

    /// `c̃_m = ⟨0|U₂|m⟩ ⟨m|U₁|0⟩`.
    pub fn spectrum(&self, params: &[f64]) -> Result<Spectrum> {
        let (t1, t2) = self.split(params)?;
        let mut a = StateVector::zero(self.block.n_qubits);
        apply_block(&mut a, &self.block, t1)?;
        let mut b = StateVector::zero(self.block.n_qubits);
        apply_block_inverse(&mut b, &self.block, t2)?;
        Ok(Spectrum {
            coeffs: a.amps.iter().zip(&b.amps).map(|(am, bm)| bm.conj() * am).collect(),
            eigenvalues: self.hamiltonian().eigenvalues,
        })
    }
}

impl Spectrum {
    /// `f(z) = Σ c̃_m e^{−zπE_m}` and `f′(z)` at normalised coordinates.
    /// Uses `e^{−zπ(2m+1)} = e^{−zπ}·(e^{−2zπ})^m`.
    pub fn eval(&self, x: f64, y: f64) -> (Complex64, Complex64) {
        let z = Complex64::new(x, y);
        let mut term = (-PI * z).exp();
        let step = (-2.0 * PI * z).exp();
        let mut f = ZERO;
        let mut df = ZERO;
        for (m, c) in self.coeffs.iter().enumerate() {
            let ct = c * term;
            f += ct;
            df += ct * (-PI * (2 * m + 1) as f64);
            term *= step;
        }
        (f, df)
    }

    /// Value, gradient and Laplacian from the spectral form, term by term:
    /// `∂/∂x` brings down `−πE_m` and `∂/∂y` brings down `−iπE_m`.
    pub fn derivatives(&self, x: f64, y: f64) -> QDerivatives {
        let z = Complex64::new(x, y);
        let mut out = QDerivatives {
            value: 0.0,
            grad: [0.0; 2],
            hess: [[0.0; 2]; 2],
            laplacian: 0.0,
        };
        for (c, e) in self.coeffs.iter().zip(&self.eigenvalues) {
            let term = c * (-PI * e * z).exp();
            let kx = Complex64::new(-PI * e, 0.0);
            let ky = Complex64::new(0.0, -PI * e);
            out.value += term.re;
            out.grad[0] += (term * kx).re;
            out.grad[1] += (term * ky).re;
            out.hess[0][0] += (term * kx * kx).re;
            out.hess[0][1] += (term * kx * ky).re;
            out.hess[1][1] += (term * ky * ky).re;
            out.laplacian += (term * (kx * kx + ky * ky)).re;
        }
        out.hess[1][0] = out.hess[0][1];
        out
    }
}

/// `φ_QH(x, y)` via the spectral form.
pub fn qholo_eval(net: &QHoloNet, params: &[f64], x: f64, y: f64) -> Result<f64> {
    Ok(qholo_derivatives(net, params, x, y)?.value)
}

/// Analytic value, gradient (in physical coordinates) and Laplacian.
pub fn qholo_derivatives(net: &QHoloNet, params: &[f64], x: f64, y: f64) -> Result<QDerivatives> {
    let spec = net.spectrum(params)?;
    let s = net.input.scale;
    let mut d = spec.derivatives(net.input.apply(0, x), net.input.apply(1, y));
    d.grad = [d.grad[0] / s, d.grad[1] / s];
    for row in d.hess.iter_mut() {
        for h in row.iter_mut() {
            *h /= s * s;
        }
    }
    d.laplacian /= s * s;
    Ok(d)
}

/// Adam step size for circuit angles.
pub const QHOLO_LR: f64 = 0.05;

/// A trained quantum holomorphic network with its report.
#[derive(Debug, Clone)]
pub struct QHoloFit {
    pub network: crate::nets::Network,
    pub report: crate::train::TrainReport,
}

/// Fits circuit angles to the Dirichlet data of `plan` with Adam at
/// [`QHOLO_LR`]. Angle gradients are central differences.
pub fn train_qholo(
    problem: &crate::losses::ProblemSpec,
    arch: &crate::losses::ArchConfig,
    plan: crate::geometry::SamplePlan,
    epochs: usize,
    seed: u64,
) -> Result<QHoloFit> {
    use crate::losses::{assemble, build_network, LossWeights, Method};
    let network = build_network(Method::QHolomorphic, problem, arch)?;
    let init = network.init(seed);
    let objective = assemble(Method::QHolomorphic, problem, network, plan, LossWeights::default())?;
    let cfg = crate::train::TrainConfig {
        epochs,
        lr: QHOLO_LR,
        seed,
        ..Default::default()
    };
    let report = crate::train::train(&objective, init, &cfg)?;
    Ok(QHoloFit {
        network: objective.network,
        report,
    })
}
