//! Quadratic model with a second derivative perpendicular to the first:
//! `z(x) = θ·f(x) + (θ·g(x))²`, `g = A f`.

use rand_distr::{Distribution, StandardNormal};

use super::config::{ModelKind, NetworkConfig};
use super::Hypothesis;
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::{dot, Scalar};

/// Random Fourier features `f_{2k} = cos(ω_k·x)`, `f_{2k+1} = sin(ω_k·x)`.
///
/// `A` rotates every `(cos, sin)` pair by 90°, so `g_{2k} = −f_{2k+1}` and
/// `g_{2k+1} = f_{2k}`; hence `g(x)·f(x) = 0` at every input.
#[derive(Clone, Debug)]
pub struct QuadraticPerp<S> {
    input_dim: usize,
    /// `n/2` frequency vectors, row-major.
    omegas: Vec<S>,
}

impl<S: Scalar> QuadraticPerp<S> {
    pub fn new(config: &NetworkConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        if config.model_kind != ModelKind::QuadraticPerp {
            return Err(Error::Unsupported("not a quadratic model config".into()));
        }
        let d = config.input_dim;
        let mut g = rng::seeded(rng::mix(&[seed, rng::label_hash("fourier")]));
        // ω ~ N(0, I/d): inputs of norm √d give ω·x ~ N(0, 1)
        let sd = 1.0 / (d as f64).sqrt();
        let distinct = if config.antithetic_features {
            config.width / 4
        } else {
            config.width / 2
        };
        let mut omegas: Vec<S> = (0..distinct * d)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut g);
                S::of(sd * z)
            })
            .collect();
        if config.antithetic_features {
            let mirrored: Vec<S> = omegas.iter().map(|w| -*w).collect();
            omegas.extend(mirrored);
        }
        Ok(Self { input_dim: d, omegas })
    }

    pub fn feature_count(&self) -> usize {
        2 * self.omegas.len() / self.input_dim
    }

    /// `(f(x), g(x))`.
    pub fn features(&self, x: &[S]) -> Result<(Vec<S>, Vec<S>)> {
        if x.len() != self.input_dim {
            return Err(Error::Input(format!(
                "input has length {}, expected {}",
                x.len(),
                self.input_dim
            )));
        }
        let n = self.feature_count();
        let mut f = vec![S::zero(); n];
        let mut g = vec![S::zero(); n];
        for (k, w) in self.omegas.chunks_exact(self.input_dim).enumerate() {
            let (s, c) = dot(w, x).sin_cos();
            f[2 * k] = c;
            f[2 * k + 1] = s;
            g[2 * k] = -s;
            g[2 * k + 1] = c;
        }
        Ok((f, g))
    }

    fn check(&self, theta: &[S]) -> Result<()> {
        if theta.len() != self.feature_count() {
            return Err(Error::Input(format!(
                "parameter vector has length {}, expected {}",
                theta.len(),
                self.feature_count()
            )));
        }
        Ok(())
    }
}

impl<S: Scalar> Hypothesis<S> for QuadraticPerp<S> {
    fn param_count(&self) -> usize {
        self.feature_count()
    }

    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn output_dim(&self) -> usize {
        1
    }

    fn is_linear_in_params(&self) -> bool {
        false
    }

    fn output(&self, theta: &[S], x: &[S]) -> Result<Vec<S>> {
        self.check(theta)?;
        let (f, g) = self.features(x)?;
        let tg = dot(theta, &g);
        Ok(vec![dot(theta, &f) + tg * tg])
    }

    fn pullback(&self, theta: &[S], x: &[S], cot: &mut dyn FnMut(&[S]) -> Vec<S>) -> Result<(Vec<S>, Vec<S>)> {
        self.check(theta)?;
        let (f, g) = self.features(x)?;
        let tg = dot(theta, &g);
        let z = vec![dot(theta, &f) + tg * tg];
        let c = cot(&z);
        if c.len() != 1 {
            return Err(Error::Input("cotangent length differs from output dimension".into()));
        }
        let two_tg = S::of(2.0) * tg;
        let grad = f.iter().zip(&g).map(|(fi, gi)| c[0] * (*fi + two_tg * *gi)).collect();
        Ok((z, grad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(n: usize) -> QuadraticPerp<f64> {
        let c = NetworkConfig {
            antithetic_features: n % 4 == 0,
            ..NetworkConfig::quadratic_perp(3, n)
        };
        QuadraticPerp::new(&c, 4).unwrap()
    }

    #[test]
    fn antithetic_pairs_are_perpendicular_across_inputs() {
        let m = model(64);
        let (f, _) = m.features(&[0.3, -1.2, 0.8]).unwrap();
        let (_, g) = m.features(&[1.1, 0.4, -0.2]).unwrap();
        assert!(dot(&f, &g).abs() < 1e-12);
        let c = NetworkConfig {
            antithetic_features: false,
            ..NetworkConfig::quadratic_perp(3, 64)
        };
        let m = QuadraticPerp::<f64>::new(&c, 4).unwrap();
        let (f, _) = m.features(&[0.3, -1.2, 0.8]).unwrap();
        let (_, g) = m.features(&[1.1, 0.4, -0.2]).unwrap();
        assert!(dot(&f, &g).abs() > 1e-3);
    }

    #[test]
    fn zero_theta() {
        let m = model(8);
        let x = [0.3, 1.0, -0.5];
        assert_eq!(m.output(&[0.0; 8], &x).unwrap(), vec![0.0]);
        let (f, _) = m.features(&x).unwrap();
        assert_eq!(m.gradient(&[0.0; 8], &x, 0).unwrap(), f);
    }

    #[test]
    fn perpendicular_at_every_input() {
        let m = model(64);
        for i in 0..10 {
            let x = [i as f64 * 0.3, -1.0, 0.5 * i as f64];
            let (f, g) = m.features(&x).unwrap();
            assert!(dot(&f, &g).abs() < 1e-12);
        }
    }

    #[test]
    fn two_dimensional_rotation() {
        let m = model(2);
        let (f, g) = m.features(&[0.2, 0.4, -0.1]).unwrap();
        assert_eq!(g, vec![-f[1], f[0]]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = model(6);
        let theta = [0.2, -0.1, 0.5, 0.3, -0.7, 0.05];
        let x = [0.1, 0.9, -0.4];
        let g = m.gradient(&theta, &x, 0).unwrap();
        for k in 0..6 {
            let mut tp = theta;
            let mut tm = theta;
            tp[k] += 1e-6;
            tm[k] -= 1e-6;
            let fd = (m.output(&tp, &x).unwrap()[0] - m.output(&tm, &x).unwrap()[0]) / 2e-6;
            assert!((fd - g[k]).abs() < 1e-8);
        }
    }
}
