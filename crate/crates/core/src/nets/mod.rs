//! Network families: real MLPs, holomorphic complex MLPs, CurlNet pairs,
//! hPINN wrappers and piecewise compositions over a domain decomposition.

mod complex;
mod curl;
mod hpinn;
pub mod io;
mod model;
mod real;
mod spec;

pub use complex::{ComplexBatch, ComplexMlp};
pub use curl::{
    curl_and_divergence, curl_field, curl_field_with_divergence, curl_from_jacobian, curl_terms, potential_components,
    CurlPair,
};
pub use hpinn::{hpinn_eval, HpinnWrap};
pub use model::{piecewise_eval, FieldEval, FieldModel, Need, Network, Tape};
pub use real::{Order, RealBatch, RealMlp};
pub use spec::{kaiming_uniform, kaiming_uniform_with_gain, Activation, InputMap, MlpSpec, COMPLEX_GAIN, REAL_GAIN};
