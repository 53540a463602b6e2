use super::config::{NetworkConfig, TargetKind, TaskSpec};
use super::fcnn::Fcnn;
use super::params::init_params;
use super::Hypothesis;
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::{dot, Scalar};

#[derive(Clone, Debug)]
enum Target<S> {
    Teacher { net: Fcnn<S>, theta: Vec<S> },
    Analytic { w: Vec<S> },
}

/// Input distribution, target function and fixed probe set.
///
/// Inputs are uniform on a sphere of fixed radius.
#[derive(Clone, Debug)]
pub struct Task<S> {
    input_dim: usize,
    output_dim: usize,
    target: Target<S>,
    probes: Vec<Vec<S>>,
    seed: u64,
    radius: f64,
}

impl<S: Scalar> Task<S> {
    pub fn new(spec: &TaskSpec, input_dim: usize, output_dim: usize) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::Config("task dimensions must be positive".into()));
        }
        if !(spec.input_radius > 0.0 && spec.input_radius.is_finite()) {
            return Err(Error::Config(format!(
                "input radius must be positive, got {}",
                spec.input_radius
            )));
        }
        if !(spec.teacher_bias_variance >= 0.0 && spec.teacher_bias_variance.is_finite()) {
            return Err(Error::Config(
                "teacher bias variance must be finite and nonnegative".into(),
            ));
        }
        let target = match spec.target {
            TargetKind::Teacher => {
                let c = NetworkConfig {
                    depth: 3,
                    input_dim,
                    output_dim,
                    width: spec.teacher_width,
                    bias_variance: spec.teacher_bias_variance,
                    ..NetworkConfig::default()
                };
                let seed = rng::mix(&[spec.seed, rng::label_hash("teacher")]);
                Target::Teacher {
                    net: Fcnn::new(&c, seed)?,
                    theta: init_params(&c, seed)?.theta,
                }
            }
            TargetKind::Analytic => {
                if output_dim != 1 {
                    return Err(Error::Config("analytic target has a scalar output".into()));
                }
                let mut g = rng::seeded(rng::mix(&[spec.seed, rng::label_hash("analytic")]));
                Target::Analytic {
                    w: rng::sphere_vec(&mut g, input_dim, 1.0 / spec.input_radius),
                }
            }
        };
        let mut g = rng::seeded(rng::mix(&[spec.seed, rng::label_hash("probes")]));
        let radius = spec.input_radius;
        let probes = (0..spec.probe_count)
            .map(|_| rng::sphere_vec(&mut g, input_dim, radius))
            .collect();
        Ok(Self {
            input_dim,
            output_dim,
            target,
            probes,
            seed: spec.seed,
            radius,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn input_radius(&self) -> f64 {
        self.radius
    }

    pub fn probes(&self) -> &[Vec<S>] {
        &self.probes
    }

    pub fn target(&self, x: &[S]) -> Result<Vec<S>> {
        match &self.target {
            Target::Teacher { net, theta } => net.output(theta, x),
            Target::Analytic { w } => {
                if x.len() != w.len() {
                    return Err(Error::Input("input dimension mismatch".into()));
                }
                Ok(vec![dot(w, x).sin()])
            }
        }
    }

    /// Fresh training inputs for one run; the stream never revisits an index.
    pub fn stream(&self, run_seed: u64) -> InputStream<S> {
        InputStream {
            rng: rng::seeded(rng::mix(&[self.seed, run_seed, rng::label_hash("stream")])),
            dim: self.input_dim,
            radius: self.radius,
            next_id: 0,
            _marker: std::marker::PhantomData,
        }
    }

    pub fn draw(&self, seed: u64, count: usize) -> Vec<Vec<S>> {
        let mut g = rng::seeded(rng::mix(&[self.seed, seed, rng::label_hash("draw")]));
        (0..count)
            .map(|_| rng::sphere_vec(&mut g, self.input_dim, self.radius))
            .collect()
    }
}

pub struct InputStream<S> {
    rng: rng::Rng,
    dim: usize,
    radius: f64,
    next_id: u64,
    _marker: std::marker::PhantomData<S>,
}

impl<S: Scalar> Iterator for InputStream<S> {
    type Item = (u64, Vec<S>);

    fn next(&mut self) -> Option<Self::Item> {
        let id = self.next_id;
        self.next_id += 1;
        Some((id, rng::sphere_vec(&mut self.rng, self.dim, self.radius)))
    }
}
