//! Exact input derivatives (values, gradients, Hessians) and parameter
//! gradients.

mod complex;
mod grad;
mod jet;

pub use complex::{cauchy_riemann_residual, ComplexField, ComplexJet};
pub use grad::{central_difference, param_grad, Differentiable, ParamGradient, SumObjective};
pub use jet::{check_dim, jet_apply, laplacian, lift, ElementaryOp, Jet, MAX_DIM};
