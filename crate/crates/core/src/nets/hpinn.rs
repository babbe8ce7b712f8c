use serde::{Deserialize, Serialize};

use super::real::RealMlp;
use crate::diffcore::{lift, Jet};
use crate::error::{Error, Result};
use crate::geometry::{distance_jet, BoundarySegment, Primitive};

/// The boundary set whose Dirichlet value is built into the architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HpinnWrap {
    pub set: Vec<Primitive>,
    pub value: f64,
    pub k: f64,
}

impl HpinnWrap {
    /// Wraps `segments`, which must all carry the same Dirichlet value.
    pub fn new(segments: &[BoundarySegment], k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Config(format!("hPINN sharpness k must be positive, got {k}")));
        }
        let mut value = None;
        let mut set = Vec::new();
        for seg in segments {
            let Some(v) = seg.dirichlet_value() else {
                return Err(Error::Incompatible("hPINN can only wrap Dirichlet segments".into()));
            };
            match value {
                None => value = Some(v),
                Some(c) if c != v => {
                    return Err(Error::Incompatible(format!(
                        "hPINN wraps a single boundary value, found both {c} and {v}"
                    )))
                }
                _ => {}
            }
            set.push(seg.primitive.clone());
        }
        let value = value.ok_or(Error::EmptySamples("hPINN wrapped boundary"))?;
        Ok(Self { set, value, k })
    }

    /// Wraps the zero-valued Dirichlet segments of a scenario.
    pub fn zero_valued(segments: &[BoundarySegment], k: f64) -> Result<Self> {
        let zeros: Vec<BoundarySegment> = segments
            .iter()
            .filter(|s| s.dirichlet_value() == Some(0.0))
            .cloned()
            .collect();
        Self::new(&zeros, k)
    }

    /// `w(x) = 1 − e^{−k d(x)}` as a jet.
    pub fn weight(&self, x: &[f64]) -> Result<Jet> {
        let d = distance_jet(&self.set, x)?;
        let e = d.scale(-self.k).exp();
        Ok(-(e.add_scalar(-1.0)))
    }
}

/// `c + w(x)·(MLP(x) − c)`, which equals `c` exactly where `d(x) = 0`.
pub fn hpinn_eval(mlp: &RealMlp, params: &[f64], x: &[f64], wrap: &HpinnWrap) -> Result<Jet> {
    let m = mlp.forward_jet(params, &lift(x, x.len())?)?[0];
    let w = wrap.weight(x)?;
    Ok((w * m.add_scalar(-wrap.value)).add_scalar(wrap.value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::{Activation, InputMap, MlpSpec};

    fn edge(a: [f64; 2], b: [f64; 2], v: f64) -> BoundarySegment {
        BoundarySegment::dirichlet(Primitive::Segment { a, b }, v)
    }

    #[test]
    fn boundary_value_is_exact() {
        let mlp = RealMlp::new(MlpSpec::new(2, 1, Activation::Tanh), InputMap::identity(2)).unwrap();
        let p = mlp.init(1);
        let wrap = HpinnWrap::new(&[edge([0.0, 0.0], [1.0, 0.0], 0.25)], 10.0).unwrap();
        for t in [0.0, 0.3, 1.0] {
            assert_eq!(hpinn_eval(&mlp, &p, &[t, 0.0], &wrap).unwrap().value, 0.25);
        }
    }

    #[test]
    fn substitution_example() {
        let wrap = HpinnWrap::new(&[edge([0.0, 0.0], [1.0, 0.0], 0.0)], 10.0).unwrap();
        let w = wrap.weight(&[0.5, 0.1]).unwrap();
        // MLP ≡ 1 gives φ = w.
        assert!((w.value - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        let tiny = HpinnWrap { k: 1e-9, ..wrap };
        assert!(tiny.weight(&[0.5, 0.1]).unwrap().value < 1e-9);
    }

    #[test]
    fn mixed_values_rejected() {
        let segs = [edge([0.0, 0.0], [1.0, 0.0], 0.0), edge([1.0, 0.0], [1.0, 1.0], 1.0)];
        assert!(HpinnWrap::new(&segs, 10.0).is_err());
        let wrap = HpinnWrap::zero_valued(&segs, 10.0).unwrap();
        assert_eq!(wrap.set.len(), 1);
        assert!(HpinnWrap::new(&segs[..1], 0.0).is_err());
    }
}
