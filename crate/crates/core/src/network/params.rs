use std::io::{BufRead, Write};

use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use super::config::{InitScheme, ModelKind, NetworkConfig, VarianceRule};
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

/// A named rectangular slice of the flat parameter vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Flat parameter vector `θ` with its block layout; every index belongs to exactly one block.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams<S> {
    pub blocks: Vec<Block>,
    pub theta: Vec<S>,
}

/// Block layout for a configuration: `W_l` (n_l × n_{l−1}) then `b_l` per layer.
pub fn layout(config: &NetworkConfig) -> Vec<Block> {
    let mut blocks = Vec::new();
    let mut offset = 0;
    let mut push = |name: String, rows: usize, cols: usize| {
        blocks.push(Block {
            name,
            rows,
            cols,
            offset,
        });
        offset += rows * cols;
    };
    if config.model_kind == ModelKind::QuadraticPerp {
        push("theta".into(), config.width, 1);
        return blocks;
    }
    let w = config.widths();
    for l in 1..w.len() {
        push(format!("W{l}"), w[l], w[l - 1]);
        if config.biases {
            push(format!("b{l}"), w[l], 1);
        }
    }
    blocks
}

impl<S: Scalar> NetworkParams<S> {
    pub fn zeros(config: &NetworkConfig) -> Self {
        let blocks = layout(config);
        let n = blocks.last().map_or(0, |b| b.offset + b.len());
        Self {
            blocks,
            theta: vec![S::zero(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn block(&self, name: &str) -> Option<&[S]> {
        self.blocks
            .iter()
            .find(|b| b.name == name)
            .map(|b| &self.theta[b.range()])
    }

    pub fn with_theta(&self, theta: Vec<S>) -> Result<Self> {
        if theta.len() != self.theta.len() {
            return Err(Error::Input(format!(
                "parameter vector of length {} for a layout of {}",
                theta.len(),
                self.theta.len()
            )));
        }
        Ok(Self {
            blocks: self.blocks.clone(),
            theta,
        })
    }

    /// Write a JSON header line followed by little-endian `f64` values.
    pub fn write_snapshot<W: Write>(&self, mut out: W) -> Result<()> {
        let header = SnapshotHeader {
            scalar: S::NAME.to_string(),
            len: self.theta.len(),
            blocks: self.blocks.clone(),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for v in &self.theta {
            out.write_all(&v.as_f64().to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_snapshot<R: BufRead>(mut input: R) -> Result<Self> {
        let mut line = String::new();
        input.read_line(&mut line)?;
        let header: SnapshotHeader = serde_json::from_str(line.trim_end())?;
        let expected = header.blocks.last().map_or(0, |b| b.offset + b.len());
        if expected != header.len {
            return Err(Error::Input("snapshot header is inconsistent".into()));
        }
        let mut bytes = vec![0u8; 8 * header.len];
        input.read_exact(&mut bytes)?;
        let theta = bytes
            .chunks_exact(8)
            .map(|c| S::of(f64::from_le_bytes(c.try_into().expect("8 bytes"))))
            .collect();
        Ok(Self {
            blocks: header.blocks,
            theta,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct SnapshotHeader {
    scalar: String,
    len: usize,
    blocks: Vec<Block>,
}

/// Draw `len` i.i.d. values with mean 0 and the given variance.
pub fn draw<S: Scalar>(scheme: InitScheme, variance: f64, len: usize, g: &mut rng::Rng) -> Vec<S> {
    let sd = variance.sqrt();
    match scheme {
        InitScheme::Gaussian => (0..len)
            .map(|_| {
                let z: f64 = StandardNormal.sample(g);
                S::of(sd * z)
            })
            .collect(),
        InitScheme::UniformSymmetric => {
            let half = 3f64.sqrt() * sd;
            if half == 0.0 {
                return vec![S::zero(); len];
            }
            let u = Uniform::new_inclusive(-half, half);
            (0..len).map(|_| S::of(u.sample(g))).collect()
        }
        InitScheme::RademacherScaled => {
            let coin = Uniform::new(0u8, 2);
            (0..len)
                .map(|_| S::of(if coin.sample(g) == 0 { -sd } else { sd }))
                .collect()
        }
    }
}

/// Independent, symmetric, variance-normalized initialization.
///
/// Weights of `W_l` have variance `1/n_{l−1}` (fan-in) or `1/n_l` (fan-out);
/// biases have `bias_variance`. The quadratic model starts at `θ = 0`.
pub fn init_params<S: Scalar>(config: &NetworkConfig, seed: u64) -> Result<NetworkParams<S>> {
    config.validate()?;
    let mut p = NetworkParams::zeros(config);
    if config.model_kind == ModelKind::QuadraticPerp {
        return Ok(p);
    }
    for (i, b) in p.blocks.clone().iter().enumerate() {
        let mut g = rng::seeded(rng::mix(&[seed, i as u64]));
        let variance = if b.name.starts_with('W') {
            match config.weight_variance_rule {
                VarianceRule::FanIn => 1.0 / b.cols as f64,
                VarianceRule::FanOut => 1.0 / b.rows as f64,
            }
        } else {
            config.bias_variance
        };
        let vals = draw::<S>(config.init_scheme, variance, b.len(), &mut g);
        p.theta[b.range()].copy_from_slice(&vals);
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(v: &[f64]) -> (f64, f64, f64) {
        let n = v.len() as f64;
        let m1 = v.iter().sum::<f64>() / n;
        let m2 = v.iter().map(|x| x * x).sum::<f64>() / n;
        let m3 = v.iter().map(|x| x * x * x).sum::<f64>() / n;
        (m1, m2, m3)
    }

    #[test]
    fn rademacher_values() {
        let c = NetworkConfig {
            input_dim: 64,
            init_scheme: InitScheme::RademacherScaled,
            ..NetworkConfig::default()
        };
        let p = init_params::<f64>(&c, 3).unwrap();
        assert!(p.block("W1").unwrap().iter().all(|w| (w.abs() - 0.125).abs() < 1e-15));
    }

    #[test]
    fn fan_in_variance_and_symmetry() {
        for scheme in [
            InitScheme::Gaussian,
            InitScheme::UniformSymmetric,
            InitScheme::RademacherScaled,
        ] {
            let c = NetworkConfig {
                width: 256,
                init_scheme: scheme,
                ..NetworkConfig::default()
            };
            let p = init_params::<f64>(&c, 11).unwrap();
            let w = p.block("W2").unwrap();
            let (m1, m2, m3) = moments(w);
            assert!((m2 * 256.0 - 1.0).abs() < 0.15, "{scheme:?} variance {m2}");
            let n = w.len() as f64;
            // standard errors of the first and third sample moments
            let se1 = (m2 / n).sqrt();
            let m6 = w.iter().map(|x| x.powi(6)).sum::<f64>() / n;
            let se3 = (m6 / n).sqrt();
            assert!(m1.abs() < 3.0 * se1, "{scheme:?} mean {m1}");
            assert!(m3.abs() < 3.0 * se3, "{scheme:?} third moment {m3}");
        }
    }

    #[test]
    fn fan_out_rule() {
        let c = NetworkConfig {
            input_dim: 512,
            width: 64,
            weight_variance_rule: VarianceRule::FanOut,
            ..NetworkConfig::default()
        };
        let p = init_params::<f64>(&c, 1).unwrap();
        let (_, m2, _) = moments(p.block("W1").unwrap());
        assert!((m2 * 64.0 - 1.0).abs() < 0.1);
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let c = NetworkConfig::default();
        let a = init_params::<f64>(&c, 5).unwrap();
        let b = init_params::<f64>(&c, 5).unwrap();
        let d = init_params::<f64>(&c, 6).unwrap();
        assert!(a.theta.iter().zip(&b.theta).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_ne!(a.theta, d.theta);
    }

    #[test]
    fn layout_covers_every_index_once() {
        let c = NetworkConfig::default();
        let blocks = layout(&c);
        let mut next = 0;
        for b in &blocks {
            assert_eq!(b.offset, next);
            next += b.len();
        }
        assert_eq!(next, 64 * 4 + 64 + 64 * 64 + 64 + 64 + 1);
    }

    #[test]
    fn snapshot_round_trip() {
        let p = init_params::<f64>(&NetworkConfig::default(), 9).unwrap();
        let mut buf = Vec::new();
        p.write_snapshot(&mut buf).unwrap();
        let q = NetworkParams::<f64>::read_snapshot(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn zero_bias_variance() {
        let c = NetworkConfig {
            bias_variance: 0.0,
            init_scheme: InitScheme::UniformSymmetric,
            ..NetworkConfig::default()
        };
        let p = init_params::<f64>(&c, 2).unwrap();
        assert!(p.block("b1").unwrap().iter().all(|b| *b == 0.0));
    }
}
