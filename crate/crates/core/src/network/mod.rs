//! Model families, initialization and the learning task.

pub mod activation;
pub mod config;
pub mod fcnn;
pub mod params;
pub mod quadratic;
pub mod task;

use std::collections::BTreeMap;

pub use activation::{activation_bound_audit, Activation, ActivationAudit};
pub use config::{InitScheme, ModelKind, NetworkConfig, TargetKind, TaskSpec, VarianceRule};
pub use fcnn::{Fcnn, Layers};
pub use params::{init_params, Block, NetworkParams};
pub use quadratic::QuadraticPerp;
pub use task::{InputStream, Task};

use crate::asymptotics::SweepSample;
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::{norm2, Scalar};

/// A parameterized map `F(θ)(x)` with a flat parameter vector.
pub trait Hypothesis<S: Scalar>: Send + Sync {
    fn param_count(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;

    /// True when every derivative of order ≥ 2 in `θ` vanishes identically.
    fn is_linear_in_params(&self) -> bool;

    fn output(&self, theta: &[S], x: &[S]) -> Result<Vec<S>>;

    /// Output together with `Σ_i c_i ∇F_i`, where `c = cot(output)`.
    fn pullback(&self, theta: &[S], x: &[S], cot: &mut dyn FnMut(&[S]) -> Vec<S>) -> Result<(Vec<S>, Vec<S>)>;

    fn vjp(&self, theta: &[S], x: &[S], cot: &[S]) -> Result<Vec<S>> {
        Ok(self.pullback(theta, x, &mut |_| cot.to_vec())?.1)
    }

    /// `∇θ F_i(x)`.
    fn gradient(&self, theta: &[S], x: &[S], output_index: usize) -> Result<Vec<S>> {
        if output_index >= self.output_dim() {
            return Err(Error::Input(format!(
                "output index {output_index} out of range for {} outputs",
                self.output_dim()
            )));
        }
        let mut e = vec![S::zero(); self.output_dim()];
        e[output_index] = S::one();
        self.vjp(theta, x, &e)
    }
}

/// Any supported model, built from a configuration.
#[derive(Clone, Debug)]
pub enum Model<S> {
    Fcnn(Fcnn<S>),
    Quadratic(QuadraticPerp<S>),
}

impl<S: Scalar> Model<S> {
    /// `seed` fixes the model's non-trainable randomness (per-neuron activations, features).
    pub fn new(config: &NetworkConfig, seed: u64) -> Result<Self> {
        match config.model_kind {
            ModelKind::QuadraticPerp => Ok(Model::Quadratic(QuadraticPerp::new(config, seed)?)),
            _ => Ok(Model::Fcnn(Fcnn::new(config, seed)?)),
        }
    }

    pub fn as_fcnn(&self) -> Option<&Fcnn<S>> {
        match self {
            Model::Fcnn(f) => Some(f),
            Model::Quadratic(_) => None,
        }
    }

    fn inner(&self) -> &dyn Hypothesis<S> {
        match self {
            Model::Fcnn(f) => f,
            Model::Quadratic(q) => q,
        }
    }
}

impl<S: Scalar> Hypothesis<S> for Model<S> {
    fn param_count(&self) -> usize {
        self.inner().param_count()
    }
    fn input_dim(&self) -> usize {
        self.inner().input_dim()
    }
    fn output_dim(&self) -> usize {
        self.inner().output_dim()
    }
    fn is_linear_in_params(&self) -> bool {
        self.inner().is_linear_in_params()
    }
    fn output(&self, theta: &[S], x: &[S]) -> Result<Vec<S>> {
        self.inner().output(theta, x)
    }
    fn pullback(&self, theta: &[S], x: &[S], cot: &mut dyn FnMut(&[S]) -> Vec<S>) -> Result<(Vec<S>, Vec<S>)> {
        self.inner().pullback(theta, x, cot)
    }
}

/// `‖F^{(l)}‖/√n_l` for every layer `l ≥ 1`, over a width grid and seeds, at a fixed input.
///
/// Returns one sample list per layer index.
pub fn layer_norm_audit(
    config: &NetworkConfig,
    widths: &[usize],
    seeds: usize,
    x: &[f64],
    master_seed: u64,
) -> Result<BTreeMap<usize, Vec<SweepSample>>> {
    let mut out: BTreeMap<usize, Vec<SweepSample>> = BTreeMap::new();
    for &n in widths {
        let c = config.with_width(n);
        for s in 0..seeds as u64 {
            let cell = rng::mix(&[master_seed, rng::label_hash("layer-norm"), n as u64, s]);
            let net = Fcnn::<f64>::new(&c, cell)?;
            let p = init_params::<f64>(&c, cell)?;
            let layers = net.forward(&p.theta, x)?;
            for (l, h) in layers.pre.iter().enumerate().skip(1) {
                out.entry(l)
                    .or_default()
                    .push(SweepSample::new(n, s, norm2(h) / (h.len() as f64).sqrt()));
            }
        }
    }
    Ok(out)
}
