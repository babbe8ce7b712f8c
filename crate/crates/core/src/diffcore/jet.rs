//! Second-order forward propagation over a small spatial input.
//!
//! A [`Jet`] is a scalar carried together with its exact gradient and Hessian
//! with respect to `dim` spatial coordinates (`dim` ∈ {2, 3, 4}). Every
//! elementary operation applies the first- and second-order chain rule, so a
//! computation built from jets yields exact input derivatives at the cost of
//! O(dim²) extra work per operation.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    dim: usize,
    pub value: f64,
    pub grad: [f64; MAX_DIM],
    pub hess: [[f64; MAX_DIM]; MAX_DIM],
}

pub fn check_dim(dim: usize) -> Result<()> {
    if (2..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

/// Seeds the coordinates of `point` as independent variables.
pub fn lift(point: &[f64], dim: usize) -> Result<Vec<Jet>> {
    check_dim(dim)?;
    if point.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: point.len(),
        });
    }
    Ok(point
        .iter()
        .enumerate()
        .map(|(i, &v)| Jet::variable(dim, i, v))
        .collect())
}

impl Jet {
    pub fn constant(dim: usize, value: f64) -> Self {
        debug_assert!((2..=MAX_DIM).contains(&dim));
        Self {
            dim,
            value,
            grad: [0.0; MAX_DIM],
            hess: [[0.0; MAX_DIM]; MAX_DIM],
        }
    }

    pub fn variable(dim: usize, index: usize, value: f64) -> Self {
        let mut jet = Self::constant(dim, value);
        jet.grad[index] = 1.0;
        jet
    }

    /// Builds a jet from explicit parts. Only the upper triangle of `hess` is
    /// read; the lower triangle is mirrored from it.
    pub fn from_parts(dim: usize, value: f64, grad: &[f64], hess: &[Vec<f64>]) -> Self {
        let mut jet = Self::constant(dim, value);
        for i in 0..dim {
            jet.grad[i] = grad[i];
            for j in i..dim {
                jet.hess[i][j] = hess[i][j];
                jet.hess[j][i] = hess[i][j];
            }
        }
        jet
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gradient(&self) -> &[f64] {
        &self.grad[..self.dim]
    }

    pub fn laplacian(&self) -> f64 {
        (0..self.dim).map(|i| self.hess[i][i]).sum()
    }

    pub fn is_finite(&self) -> bool {
        let d = self.dim;
        self.value.is_finite()
            && self.grad[..d].iter().all(|g| g.is_finite())
            && self.hess[..d].iter().all(|row| row[..d].iter().all(|h| h.is_finite()))
    }

    /// Applies a scalar function given its value and first two derivatives at
    /// `self.value`.
    #[inline]
    pub fn chain(&self, f: f64, df: f64, d2f: f64) -> Self {
        let d = self.dim;
        let mut out = Self::constant(d, f);
        for i in 0..d {
            out.grad[i] = df * self.grad[i];
        }
        for i in 0..d {
            for j in i..d {
                let h = d2f * self.grad[i] * self.grad[j] + df * self.hess[i][j];
                out.hess[i][j] = h;
                out.hess[j][i] = h;
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let d = self.dim;
        let mut out = *self;
        out.value *= s;
        for i in 0..d {
            out.grad[i] *= s;
            for j in 0..d {
                out.hess[i][j] *= s;
            }
        }
        out
    }

    pub fn add_scalar(&self, c: f64) -> Self {
        let mut out = *self;
        out.value += c;
        out
    }

    /// `self += s * other`, the inner step of an affine combination.
    #[inline]
    pub fn axpy(&mut self, s: f64, other: &Jet) {
        let d = self.dim;
        self.value += s * other.value;
        for i in 0..d {
            self.grad[i] += s * other.grad[i];
            for j in 0..d {
                self.hess[i][j] += s * other.hess[i][j];
            }
        }
    }

    pub fn recip(&self) -> Result<Self> {
        if self.value == 0.0 {
            return Err(Error::DivisionByZero);
        }
        let r = 1.0 / self.value;
        Ok(self.chain(r, -r * r, 2.0 * r * r * r))
    }

    pub fn checked_div(&self, rhs: &Jet) -> Result<Self> {
        Ok(*self * rhs.recip()?)
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn tanh(&self) -> Self {
        let t = self.value.tanh();
        let dt = 1.0 - t * t;
        self.chain(t, dt, -2.0 * t * dt)
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn sinh(&self) -> Self {
        let (s, c) = (self.value.sinh(), self.value.cosh());
        self.chain(s, c, s)
    }

    pub fn cosh(&self) -> Self {
        let (s, c) = (self.value.sinh(), self.value.cosh());
        self.chain(c, s, c)
    }

    pub fn ln(&self) -> Self {
        let r = 1.0 / self.value;
        self.chain(self.value.ln(), r, -r * r)
    }

    pub fn sqrt(&self) -> Self {
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.value))
    }

    pub fn powi(&self, n: i32) -> Self {
        let v = self.value;
        let nf = f64::from(n);
        self.chain(v.powi(n), nf * v.powi(n - 1), nf * (nf - 1.0) * v.powi(n - 2))
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Jet) -> Jet {
        debug_assert_eq!(self.dim, rhs.dim);
        self.axpy(1.0, &rhs);
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: Jet) -> Jet {
        debug_assert_eq!(self.dim, rhs.dim);
        self.axpy(-1.0, &rhs);
        self
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        debug_assert_eq!(self.dim, rhs.dim);
        let d = self.dim;
        let mut out = Jet::constant(d, self.value * rhs.value);
        for i in 0..d {
            out.grad[i] = self.grad[i] * rhs.value + rhs.grad[i] * self.value;
        }
        for i in 0..d {
            for j in i..d {
                let h = self.hess[i][j] * rhs.value
                    + rhs.hess[i][j] * self.value
                    + self.grad[i] * rhs.grad[j]
                    + rhs.grad[i] * self.grad[j];
                out.hess[i][j] = h;
                out.hess[j][i] = h;
            }
        }
        out
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

/// Unchecked division; a zero denominator yields non-finite parts. Use
/// [`Jet::checked_div`] where the denominator may vanish.
impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        let r = 1.0 / rhs.value;
        self * rhs.chain(r, -r * r, 2.0 * r * r * r)
    }
}

/// The elementary operations exposed through [`jet_apply`].
#[derive(Debug, Clone, PartialEq)]
pub enum ElementaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Sin,
    Cos,
    Tanh,
    Exp,
    /// `bias + Σ weights[k] · args[k]`
    Affine {
        weights: Vec<f64>,
        bias: f64,
    },
}

pub fn jet_apply(op: &ElementaryOp, args: &[Jet]) -> Result<Jet> {
    let arity = |n: usize| -> Result<()> {
        if args.len() == n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: n,
                got: args.len(),
            })
        }
    };
    if let Some(first) = args.first() {
        if args.iter().any(|a| a.dim != first.dim) {
            return Err(Error::DimensionMismatch {
                expected: first.dim,
                got: args.iter().find(|a| a.dim != first.dim).map_or(0, |a| a.dim),
            });
        }
    }
    let out = match op {
        ElementaryOp::Add => {
            arity(2)?;
            args[0] + args[1]
        }
        ElementaryOp::Sub => {
            arity(2)?;
            args[0] - args[1]
        }
        ElementaryOp::Mul => {
            arity(2)?;
            args[0] * args[1]
        }
        ElementaryOp::Div => {
            arity(2)?;
            args[0].checked_div(&args[1])?
        }
        ElementaryOp::Sin => {
            arity(1)?;
            args[0].sin()
        }
        ElementaryOp::Cos => {
            arity(1)?;
            args[0].cos()
        }
        ElementaryOp::Tanh => {
            arity(1)?;
            args[0].tanh()
        }
        ElementaryOp::Exp => {
            arity(1)?;
            args[0].exp()
        }
        ElementaryOp::Affine { weights, bias } => {
            arity(weights.len())?;
            let dim = args.first().map_or(2, |a| a.dim);
            let mut acc = Jet::constant(dim, *bias);
            for (w, a) in weights.iter().zip(args) {
                acc.axpy(*w, a);
            }
            acc
        }
    };
    if !out.is_finite() {
        return Err(Error::NonFinite(format!("{op:?}")));
    }
    Ok(out)
}

/// Laplacian of a jet-evaluable scalar field at `x`.
pub fn laplacian<F>(f: F, x: &[f64]) -> Result<f64>
where
    F: Fn(&[Jet]) -> Result<Jet>,
{
    let seeds = lift(x, x.len())?;
    let out = f(&seeds)?;
    if !out.is_finite() {
        return Err(Error::NonFinite("laplacian".into()));
    }
    Ok(out.laplacian())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(f: impl Fn(&[Jet]) -> Jet, x: &[f64]) {
        let h = 1e-4;
        let d = x.len();
        let jet = f(&lift(x, d).unwrap());
        let val = |p: &[f64]| f(&lift(p, d).unwrap()).value;
        for i in 0..d {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            let g = (val(&xp) - val(&xm)) / (2.0 * h);
            assert!(
                (g - jet.grad[i]).abs() <= 1e-6 * g.abs().max(1.0),
                "grad {i}: {g} vs {}",
                jet.grad[i]
            );
            for j in 0..d {
                let mut pp = x.to_vec();
                let mut pm = x.to_vec();
                let mut mp = x.to_vec();
                let mut mm = x.to_vec();
                pp[i] += h;
                pp[j] += h;
                pm[i] += h;
                pm[j] -= h;
                mp[i] -= h;
                mp[j] += h;
                mm[i] -= h;
                mm[j] -= h;
                let hij = (val(&pp) - val(&pm) - val(&mp) + val(&mm)) / (4.0 * h * h);
                assert!(
                    (hij - jet.hess[i][j]).abs() <= 1e-6 * hij.abs().max(1.0),
                    "hess {i}{j}: {hij} vs {}",
                    jet.hess[i][j]
                );
            }
        }
    }

    #[test]
    fn lift_seeds_unit_vectors() {
        let jets = lift(&[0.5, 0.5], 2).unwrap();
        assert_eq!(jets[0].value, 0.5);
        assert_eq!(jets[0].gradient(), &[1.0, 0.0]);
        assert_eq!(jets[0].hess, [[0.0; 4]; 4]);
        let jets = lift(&[1.0, 2.0, 3.0], 3).unwrap();
        assert_eq!(jets[2].gradient(), &[0.0, 0.0, 1.0]);
        let jets = lift(&[0.1, -0.2, 0.3, 0.4], 4).unwrap();
        let mut sum = [0.0; 4];
        for j in &jets {
            for (s, g) in sum.iter_mut().zip(j.gradient()) {
                *s += g;
            }
        }
        assert_eq!(sum, [1.0; 4]);
    }

    #[test]
    fn lift_rejects_bad_dimension() {
        assert!(matches!(lift(&[1.0], 1), Err(Error::UnsupportedDimension(1))));
        assert!(matches!(lift(&[0.0; 5], 5), Err(Error::UnsupportedDimension(5))));
        assert!(matches!(lift(&[0.0; 3], 2), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn sin_at_origin() {
        let x = lift(&[0.0, 0.0], 2).unwrap();
        let s = jet_apply(&ElementaryOp::Sin, &x[..1]).unwrap();
        assert_eq!(s.value, 0.0);
        assert_eq!(s.gradient(), &[1.0, 0.0]);
        assert_eq!(s.hess[0][0], 0.0);
    }

    #[test]
    fn harmonic_polynomial() {
        let x = lift(&[1.0, 2.0], 2).unwrap();
        let f = x[0] * x[0] - x[1] * x[1];
        assert_eq!(f.value, -3.0);
        assert_eq!(f.gradient(), &[2.0, -4.0]);
        assert_eq!(f.hess[0][0], 2.0);
        assert_eq!(f.hess[1][1], -2.0);
        assert_eq!(f.laplacian(), 0.0);
    }

    #[test]
    fn tanh_affine_matches_finite_differences() {
        fd_check(|x| (x[0] * 3.0 + x[1] * 2.0).tanh(), &[0.1, 0.2]);
    }

    #[test]
    fn laplacian_examples() {
        let harm = laplacian(|x| Ok(x[0] * x[0] - x[1] * x[1]), &[0.3, -0.7]).unwrap();
        assert_eq!(harm, 0.0);
        let bowl = laplacian(|x| Ok(x[0] * x[0] + x[1] * x[1]), &[0.3, -0.7]).unwrap();
        assert!((bowl - 4.0).abs() < 1e-15);
        let log = laplacian(|x| Ok((x[0] * x[0] + x[1] * x[1]).ln()), &[0.3, 0.4]).unwrap();
        assert!(log.abs() < 1e-9, "{log}");
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let x = lift(&[0.0, 1.0], 2).unwrap();
        assert!(matches!(
            jet_apply(&ElementaryOp::Div, &[x[1], x[0]]),
            Err(Error::DivisionByZero)
        ));
    }

    #[test]
    fn overflow_is_flagged() {
        let x = lift(&[800.0, 0.0], 2).unwrap();
        assert!(matches!(
            jet_apply(&ElementaryOp::Exp, &x[..1]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn affine_combination() {
        let x = lift(&[1.0, 2.0, 3.0], 3).unwrap();
        let op = ElementaryOp::Affine {
            weights: vec![1.0, -1.0, 0.5],
            bias: 0.25,
        };
        let y = jet_apply(&op, &x).unwrap();
        assert_eq!(y.value, 1.0 - 2.0 + 1.5 + 0.25);
        assert_eq!(y.gradient(), &[1.0, -1.0, 0.5]);
        assert!(jet_apply(&op, &x[..2]).is_err());
    }
}
