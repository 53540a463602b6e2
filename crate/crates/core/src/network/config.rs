use serde::{Deserialize, Serialize};

use super::activation::Activation;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Fcnn,
    FcnnPerNeuron,
    QuadraticPerp,
    /// Depth-1, bias-free, identity network: `F = θ·x`.
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitScheme {
    Gaussian,
    UniformSymmetric,
    RademacherScaled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceRule {
    FanIn,
    FanOut,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    pub model_kind: ModelKind,
    /// Number of affine layers `L`.
    pub depth: usize,
    pub input_dim: usize,
    pub output_dim: usize,
    /// Hidden width `n`; sweeps override it.
    pub width: usize,
    pub activation: Activation,
    /// Also apply `φ` to the input layer.
    pub activate_input: bool,
    pub init_scheme: InitScheme,
    pub weight_variance_rule: VarianceRule,
    pub bias_variance: f64,
    pub biases: bool,
    /// `η = c_η / n`.
    pub c_eta: f64,
    /// Quadratic model only: draw frequencies in `±ω` pairs, which makes
    /// `f(x)·g(x′) = 0` for every pair of inputs, not just `x = x′`.
    pub antithetic_features: bool,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            model_kind: ModelKind::Fcnn,
            depth: 3,
            input_dim: 4,
            output_dim: 1,
            width: 64,
            activation: Activation::Tanh,
            activate_input: false,
            init_scheme: InitScheme::Gaussian,
            weight_variance_rule: VarianceRule::FanIn,
            bias_variance: 1.0,
            biases: true,
            c_eta: 1.0,
            antithetic_features: true,
        }
    }
}

impl NetworkConfig {
    pub fn linear(input_dim: usize) -> Self {
        Self {
            model_kind: ModelKind::Linear,
            depth: 1,
            input_dim,
            output_dim: 1,
            width: input_dim,
            activation: Activation::Identity,
            biases: false,
            ..Self::default()
        }
    }

    pub fn quadratic_perp(input_dim: usize, features: usize) -> Self {
        Self {
            model_kind: ModelKind::QuadraticPerp,
            depth: 1,
            input_dim,
            output_dim: 1,
            width: features,
            biases: false,
            ..Self::default()
        }
    }

    pub fn with_width(&self, width: usize) -> Self {
        Self { width, ..self.clone() }
    }

    pub fn eta(&self) -> f64 {
        self.c_eta / self.width as f64
    }

    /// `n_0..n_L`.
    pub fn widths(&self) -> Vec<usize> {
        match self.model_kind {
            ModelKind::Linear => vec![self.input_dim, self.output_dim],
            ModelKind::QuadraticPerp => vec![self.input_dim, self.width],
            _ => {
                let mut w = vec![self.input_dim];
                w.extend(std::iter::repeat(self.width).take(self.depth - 1));
                w.push(self.output_dim);
                w
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.input_dim == 0 || self.output_dim == 0 || self.width == 0 {
            return fail("dimensions must be positive".into());
        }
        if !(self.c_eta > 0.0 && self.c_eta.is_finite()) {
            return fail(format!("c_eta must be positive, got {}", self.c_eta));
        }
        if !(self.bias_variance >= 0.0 && self.bias_variance.is_finite()) {
            return fail(format!("bias_variance must be nonnegative, got {}", self.bias_variance));
        }
        match self.model_kind {
            ModelKind::Fcnn | ModelKind::FcnnPerNeuron if self.depth < 2 => {
                fail(format!("fcnn depth must be at least 2, got {}", self.depth))
            }
            ModelKind::Linear if self.depth != 1 || !self.activation.is_linear() || self.biases => {
                fail("linear model is depth 1, identity, bias-free".into())
            }
            ModelKind::QuadraticPerp if self.output_dim != 1 => fail("quadratic model needs a scalar output".into()),
            ModelKind::QuadraticPerp if self.width % if self.antithetic_features { 4 } else { 2 } != 0 => {
                fail(format!(
                    "feature count {} does not split into (cos, sin) pairs of ±ω",
                    self.width
                ))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    /// Fixed-width tanh network drawn from the task seed.
    Teacher,
    /// `sin(x·w)` with a seeded unit `w`.
    Analytic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskSpec {
    pub target: TargetKind,
    pub teacher_width: usize,
    pub probe_count: usize,
    pub seed: u64,
    /// Inputs are uniform on the sphere of this radius.
    pub input_radius: f64,
    /// Bias variance of the teacher network; zero keeps the target odd in `x`.
    pub teacher_bias_variance: f64,
}

impl Default for TaskSpec {
    fn default() -> Self {
        Self {
            target: TargetKind::Teacher,
            teacher_width: 16,
            probe_count: 32,
            seed: 7,
            input_radius: 1.0,
            teacher_bias_variance: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let c = NetworkConfig {
            init_scheme: InitScheme::RademacherScaled,
            model_kind: ModelKind::FcnnPerNeuron,
            ..NetworkConfig::default()
        };
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"rademacher-scaled\""));
        assert_eq!(serde_json::from_str::<NetworkConfig>(&s).unwrap(), c);
    }

    #[test]
    fn unknown_scheme_is_rejected() {
        let err = serde_json::from_str::<NetworkConfig>(r#"{"init_scheme": "xavier"}"#);
        assert!(err.is_err());
    }

    #[test]
    fn widths_and_validation() {
        assert_eq!(NetworkConfig::default().widths(), vec![4, 64, 64, 1]);
        assert!(NetworkConfig::linear(3).validate().is_ok());
        assert!(NetworkConfig {
            depth: 1,
            ..NetworkConfig::default()
        }
        .validate()
        .is_err());
        assert!(NetworkConfig {
            c_eta: 0.0,
            ..NetworkConfig::default()
        }
        .validate()
        .is_err());
        assert!(NetworkConfig::quadratic_perp(2, 7).validate().is_err());
    }
}
