//! Derivative correlations and linearized training dynamics of wide networks.
//!
//! Every numerical routine is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix `f64`, which the experiment drivers use.

pub mod asymptotics;
pub mod derivatives;
pub mod dynamics;
pub mod error;
pub mod network;
pub mod rng;
pub mod scalar;
pub mod selftest;
pub mod tensor;
pub mod validation;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use tensor::{DenseTensor, NormEstimate, NormMethod, NormOptions};

pub type Tensor = tensor::DenseTensor<f64>;
pub type Norm = tensor::NormEstimate<f64>;
pub type Params = network::NetworkParams<f64>;
pub type Network = network::Fcnn<f64>;
pub type AnyModel = network::Model<f64>;
pub type Jets = derivatives::JetBundle<f64>;
pub type Correlation = derivatives::CorrelationResult<f64>;
pub type Trace = dynamics::TrainingTrace;
