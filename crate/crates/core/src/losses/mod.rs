//! Loss terms and the per-method composite objectives.

mod objective;
mod terms;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundarySegment, Domain, DomainDecomposition};
use crate::nets::{Activation, ComplexMlp, CurlPair, FieldModel, HpinnWrap, InputMap, MlpSpec, Network, RealMlp};
use crate::qsim::QHoloNet;

pub use objective::{assemble, pointwise_bundle, Objective};
pub use terms::{
    curl_match_loss, curl_match_loss_field, dielectric_loss, dirichlet_loss, interface_loss, laplacian_loss,
    neumann_loss, Bound, BoundNetwork, Field, FieldMode, FnField,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossTerm {
    Dirichlet,
    Laplacian,
    Interface,
    CurlMatch,
    Dielectric,
    Neumann,
}

impl LossTerm {
    pub const ALL: [LossTerm; 6] = [
        LossTerm::Dirichlet,
        LossTerm::Laplacian,
        LossTerm::Interface,
        LossTerm::CurlMatch,
        LossTerm::Dielectric,
        LossTerm::Neumann,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossTerm::Dirichlet => "dirichlet",
            LossTerm::Laplacian => "laplacian",
            LossTerm::Interface => "interface",
            LossTerm::CurlMatch => "curl_match",
            LossTerm::Dielectric => "dielectric",
            LossTerm::Neumann => "neumann",
        }
    }
}

/// Per-term weights; the paper's objectives are unweighted sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub dirichlet: f64,
    pub laplacian: f64,
    pub interface: f64,
    pub curl_match: f64,
    pub dielectric: f64,
    pub neumann: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            dirichlet: 1.0,
            laplacian: 1.0,
            interface: 1.0,
            curl_match: 1.0,
            dielectric: 1.0,
            neumann: 1.0,
        }
    }
}

impl LossWeights {
    pub fn get(&self, term: LossTerm) -> f64 {
        match term {
            LossTerm::Dirichlet => self.dirichlet,
            LossTerm::Laplacian => self.laplacian,
            LossTerm::Interface => self.interface,
            LossTerm::CurlMatch => self.curl_match,
            LossTerm::Dielectric => self.dielectric,
            LossTerm::Neumann => self.neumann,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for t in LossTerm::ALL {
            let w = self.get(t);
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::Config(format!(
                    "loss weight {} must be finite and ≥ 0, got {w}",
                    t.name()
                )));
            }
        }
        Ok(())
    }
}

/// Named loss terms with their weights and values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossBundle {
    pub terms: Vec<(LossTerm, f64, f64)>,
    pub total: f64,
}

impl LossBundle {
    pub fn from_terms(terms: Vec<(LossTerm, f64, f64)>) -> Self {
        let total = terms.iter().map(|(_, w, v)| w * v).sum();
        Self { terms, total }
    }

    pub fn value(&self, term: LossTerm) -> Option<f64> {
        self.terms.iter().find(|t| t.0 == term).map(|t| t.2)
    }

    pub fn term_set(&self) -> Vec<LossTerm> {
        let mut s: Vec<LossTerm> = self.terms.iter().map(|t| t.0).collect();
        s.sort();
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Pinn,
    Hpinn,
    Holomorphic,
    #[serde(rename = "curlnet")]
    CurlNet,
    Multiholomorphic,
    Xpinn,
    #[serde(rename = "qholomorphic")]
    QHolomorphic,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Pinn,
        Method::Hpinn,
        Method::Holomorphic,
        Method::CurlNet,
        Method::Multiholomorphic,
        Method::Xpinn,
        Method::QHolomorphic,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Method::Pinn => "pinn",
            Method::Hpinn => "hpinn",
            Method::Holomorphic => "holomorphic",
            Method::CurlNet => "curlnet",
            Method::Multiholomorphic => "multiholomorphic",
            Method::Xpinn => "xpinn",
            Method::QHolomorphic => "qholomorphic",
        }
    }

    /// Display name used in tables.
    pub fn label(self) -> &'static str {
        match self {
            Method::Pinn => "PINN",
            Method::Hpinn => "hPINN",
            Method::Holomorphic => "Holomorphic",
            Method::CurlNet => "CurlNet",
            Method::Multiholomorphic => "Multiholomorphic",
            Method::Xpinn => "XPINN",
            Method::QHolomorphic => "qHolomorphic",
        }
    }

    pub fn needs_decomposition(self) -> bool {
        matches!(self, Method::Multiholomorphic | Method::Xpinn)
    }

    pub fn is_exactly_harmonic(self) -> bool {
        matches!(
            self,
            Method::Holomorphic | Method::Multiholomorphic | Method::QHolomorphic
        )
    }

    /// Loss terms of the method on a problem without a dielectric interface.
    pub fn base_terms(self) -> &'static [LossTerm] {
        use LossTerm::*;
        match self {
            Method::Pinn => &[Dirichlet, Laplacian],
            Method::Hpinn => &[Dirichlet, Laplacian],
            Method::Holomorphic | Method::QHolomorphic => &[Dirichlet],
            Method::CurlNet => &[Dirichlet, CurlMatch],
            Method::Multiholomorphic => &[Dirichlet, Interface],
            Method::Xpinn => &[Dirichlet, Laplacian, Interface],
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
    }
}

/// Permittivities of the two media of a dielectric problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DielectricSpec {
    pub eps1: f64,
    pub eps2: f64,
}

/// What a loss needs to know about a scenario.
///
/// With `dielectric` set, `decomposition` holds the two media and every
/// method trains one net per medium. Otherwise the decomposition is only
/// used by the domain-decomposed methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub domain: Domain,
    pub segments: Vec<BoundarySegment>,
    pub decomposition: Option<DomainDecomposition>,
    pub dielectric: Option<DielectricSpec>,
}

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Number of subnets a method trains on this problem.
    pub fn part_count(&self, method: Method) -> usize {
        match (
            &self.decomposition,
            self.dielectric.is_some() || method.needs_decomposition(),
        ) {
            (Some(d), true) => d.len(),
            _ => 1,
        }
    }
}

/// Rejects method/problem pairings the constructions do not cover.
pub fn check_compatible(method: Method, problem: &ProblemSpec) -> Result<()> {
    let dim = problem.dim();
    if matches!(
        method,
        Method::Holomorphic | Method::Multiholomorphic | Method::QHolomorphic
    ) && dim != 2
    {
        return Err(Error::Incompatible(format!(
            "{} networks are built from functions of one complex variable and need a 2D domain, got {dim}D",
            method.label()
        )));
    }
    if method.needs_decomposition() {
        if problem.dielectric.is_some() {
            return Err(Error::Incompatible(format!(
                "{} stitches subdomains by continuity; this problem couples its media through the dielectric condition",
                method.label()
            )));
        }
        if problem.decomposition.is_none() {
            return Err(Error::Incompatible(format!(
                "{} needs a simply-connected decomposition and the problem has none",
                method.label()
            )));
        }
    }
    if method == Method::Hpinn && !problem.segments.iter().any(|s| s.dirichlet_value() == Some(0.0)) {
        return Err(Error::Incompatible(
            "hPINN builds zero-valued Dirichlet pieces into the network and the problem has none".into(),
        ));
    }
    if problem.dielectric.is_some() {
        match &problem.decomposition {
            Some(d) if d.len() == 2 && d.interfaces.len() == 1 => {}
            _ => {
                return Err(Error::Incompatible(
                    "a dielectric problem needs exactly two media separated by one interface".into(),
                ))
            }
        }
    }
    Ok(())
}

/// The term set a method trains on a problem.
pub fn term_set(method: Method, problem: &ProblemSpec) -> Vec<LossTerm> {
    let mut terms = method.base_terms().to_vec();
    if problem.dielectric.is_some() {
        terms.push(LossTerm::Dielectric);
    }
    if problem.segments.iter().any(|s| s.dirichlet_value().is_none()) {
        terms.push(LossTerm::Neumann);
    }
    terms.sort();
    terms
}

/// Network shapes used when building a method's network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArchConfig {
    pub hidden_layers: usize,
    pub width: usize,
    pub hpinn_k: f64,
    pub qubits: usize,
    pub qdepth: usize,
    /// Use `exp` instead of `sin` in holomorphic networks.
    pub holomorphic_exp: bool,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            hidden_layers: 3,
            width: 32,
            hpinn_k: 10.0,
            qubits: 4,
            qdepth: 4,
            holomorphic_exp: false,
        }
    }
}

/// The untrained network a method uses on a problem.
pub fn build_network(method: Method, problem: &ProblemSpec, arch: &ArchConfig) -> Result<Network> {
    check_compatible(method, problem)?;
    let dim = problem.dim();
    let (lo, hi) = problem.domain.bounding_box();
    let input = InputMap::for_box(&lo, &hi);
    let shape = |spec: MlpSpec| spec.with_shape(arch.hidden_layers, arch.width);
    let real = |out: usize| RealMlp::new(shape(MlpSpec::new(dim, out, Activation::Tanh)), input.clone());
    let make = || -> Result<FieldModel> {
        Ok(match method {
            Method::Pinn | Method::Xpinn => FieldModel::Real { net: real(1)? },
            Method::Hpinn => FieldModel::Hpinn {
                net: real(1)?,
                wrap: HpinnWrap::zero_valued(&problem.segments, arch.hpinn_k)?,
            },
            Method::Holomorphic | Method::Multiholomorphic => {
                let act = if arch.holomorphic_exp {
                    Activation::Exp
                } else {
                    Activation::Sin
                };
                FieldModel::Holomorphic {
                    net: ComplexMlp::new(shape(MlpSpec::new(1, 1, act)), input.clone())?,
                }
            }
            Method::CurlNet => FieldModel::Curl {
                pair: CurlPair::new(real(1)?, real(crate::nets::potential_components(dim)?)?)?,
            },
            Method::QHolomorphic => {
                let extent = (0..dim).map(|k| hi[k] - lo[k]).fold(0.0, f64::max);
                let unit = InputMap {
                    center: lo.clone(),
                    scale: extent,
                };
                FieldModel::Quantum {
                    net: QHoloNet::new(arch.qubits, arch.qdepth, unit)?,
                }
            }
        })
    };
    let parts = problem.part_count(method);
    if parts == 1 {
        return Ok(Network::single(make()?));
    }
    let dec = problem
        .decomposition
        .clone()
        .expect("part_count > 1 implies a decomposition");
    Network::piecewise((0..parts).map(|_| make()).collect::<Result<_>>()?, dec)
}
