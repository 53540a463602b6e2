//! Exact higher-order directional derivatives, kernels and derivative correlations.

pub mod correlation;
pub mod fd;
pub mod jet;
pub mod kernel;

pub use correlation::{
    correlation, correlation_norm_hopm, prefactor, CorrelationResult, CorrelationSpec, CorrelationValue,
};
pub use fd::finite_difference_mixed;
pub use jet::{partitions, JetBundle, JetModel, MAX_DIRECTIONS};
pub use kernel::{jacobian, kernel_eval, kernel_from_jacobians, kernel_layerwise, KernelMatrix};

use crate::error::Result;
use crate::network::Model;
use crate::scalar::Scalar;

impl<S: Scalar> JetModel<S> for Model<S> {
    fn jet_forward(&self, theta: &[S], x: &[S], dirs: &[&[S]]) -> Result<JetBundle<S>> {
        match self {
            Model::Fcnn(f) => f.jet_forward(theta, x, dirs),
            Model::Quadratic(q) => q.jet_forward(theta, x, dirs),
        }
    }

    fn mixed_partial_grad(&self, theta: &[S], x: &[S], dirs: &[&[S]], cot: &[S]) -> Result<Vec<S>> {
        match self {
            Model::Fcnn(f) => f.mixed_partial_grad(theta, x, dirs, cot),
            Model::Quadratic(q) => q.mixed_partial_grad(theta, x, dirs, cot),
        }
    }
}
