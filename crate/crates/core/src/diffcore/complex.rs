//! Complex arithmetic over pairs of real jets.
//!
//! A [`ComplexJet`] holds `u + i v` where `u` and `v` are real functions of
//! `(x, y)` carried as jets. The holomorphic operations below are expressed
//! through real jet arithmetic, so the harmonicity of `u` is observed rather
//! than assumed.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use super::jet::{lift, Jet};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexJet {
    pub re: Jet,
    pub im: Jet,
}

impl ComplexJet {
    /// `z = x + i y` seeded at the given point.
    pub fn variable(x: f64, y: f64) -> Self {
        let seeds = lift(&[x, y], 2).expect("dimension 2 is supported");
        Self {
            re: seeds[0],
            im: seeds[1],
        }
    }

    pub fn constant(c: Complex64) -> Self {
        Self {
            re: Jet::constant(2, c.re),
            im: Jet::constant(2, c.im),
        }
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value, self.im.value)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            re: self.re.scale(c.re) - self.im.scale(c.im),
            im: self.re.scale(c.im) + self.im.scale(c.re),
        }
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: Complex64, other: &ComplexJet) {
        self.re.axpy(c.re, &other.re);
        self.re.axpy(-c.im, &other.im);
        self.im.axpy(c.im, &other.re);
        self.im.axpy(c.re, &other.im);
    }

    pub fn add_scalar(&self, c: Complex64) -> Self {
        Self {
            re: self.re.add_scalar(c.re),
            im: self.im.add_scalar(c.im),
        }
    }

    pub fn sin(&self) -> Self {
        Self {
            re: self.re.sin() * self.im.cosh(),
            im: self.re.cos() * self.im.sinh(),
        }
    }

    pub fn cos(&self) -> Self {
        Self {
            re: self.re.cos() * self.im.cosh(),
            im: -(self.re.sin() * self.im.sinh()),
        }
    }

    pub fn exp(&self) -> Self {
        let m = self.re.exp();
        Self {
            re: m * self.im.cos(),
            im: m * self.im.sin(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            re: self.re,
            im: -self.im,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    /// `(∂u/∂x − ∂v/∂y, ∂u/∂y + ∂v/∂x)`; both vanish for holomorphic maps.
    pub fn cauchy_riemann(&self) -> (f64, f64) {
        (self.re.grad[0] - self.im.grad[1], self.re.grad[1] + self.im.grad[0])
    }
}

impl Add for ComplexJet {
    type Output = ComplexJet;
    fn add(self, rhs: Self) -> Self {
        Self {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}

impl Sub for ComplexJet {
    type Output = ComplexJet;
    fn sub(self, rhs: Self) -> Self {
        Self {
            re: self.re - rhs.re,
            im: self.im - rhs.im,
        }
    }
}

impl Mul for ComplexJet {
    type Output = ComplexJet;
    fn mul(self, rhs: Self) -> Self {
        Self {
            re: self.re * rhs.re - self.im * rhs.im,
            im: self.re * rhs.im + self.im * rhs.re,
        }
    }
}

/// A map `C → C` that can be evaluated on complex jets.
pub trait ComplexField {
    fn eval_complex(&self, z: &ComplexJet) -> Result<ComplexJet>;
}

impl<F> ComplexField for F
where
    F: Fn(&ComplexJet) -> Result<ComplexJet>,
{
    fn eval_complex(&self, z: &ComplexJet) -> Result<ComplexJet> {
        self(z)
    }
}

/// Cauchy-Riemann residuals `(r1, r2)` of `net` at `(x, y)`.
pub fn cauchy_riemann_residual(net: &dyn ComplexField, x: f64, y: f64) -> Result<(f64, f64)> {
    let out = net.eval_complex(&ComplexJet::variable(x, y))?;
    Ok(out.cauchy_riemann())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_is_holomorphic() {
        let sq = |z: &ComplexJet| Ok(*z * *z);
        let (r1, r2) = cauchy_riemann_residual(&sq, 0.3, -1.2).unwrap();
        assert_eq!((r1, r2), (0.0, 0.0));
        let out = ComplexJet::variable(0.3, -1.2);
        let sq = out * out;
        assert!((sq.re.value - (0.09 - 1.44)).abs() < 1e-15);
        assert_eq!(sq.re.laplacian(), 0.0);
    }

    #[test]
    fn conjugate_is_not_holomorphic() {
        let conj = |z: &ComplexJet| Ok(z.conj());
        let (r1, r2) = cauchy_riemann_residual(&conj, 0.5, 0.5).unwrap();
        assert_eq!(r1, 2.0);
        assert_eq!(r2, 0.0);
    }

    #[test]
    fn transcendental_maps_match_num_complex() {
        let z = ComplexJet::variable(0.7, -0.4);
        let zc = z.value();
        for (jet, reference) in [(z.sin(), zc.sin()), (z.cos(), zc.cos()), (z.exp(), zc.exp())] {
            assert!((jet.value() - reference).norm() < 1e-15);
            let (r1, r2) = jet.cauchy_riemann();
            assert!(r1.abs() < 1e-14 && r2.abs() < 1e-14);
            assert!(jet.re.laplacian().abs() < 1e-14);
        }
    }

    #[test]
    fn axpy_matches_scale_and_add() {
        let z = ComplexJet::variable(0.2, 0.9);
        let w = z.sin();
        let c = Complex64::new(0.3, -1.1);
        let mut acc = z;
        acc.axpy(c, &w);
        let direct = z + w.scale(c);
        assert!((acc.value() - direct.value()).norm() < 1e-15);
        assert!((acc.re.grad[0] - direct.re.grad[0]).abs() < 1e-15);
    }
}
