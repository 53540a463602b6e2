//! Reference derivatives by truncated multivariate hyper-dual arithmetic.
//!
//! A number carries one coefficient per subset of `k` infinitesimals with
//! `ε_j² = 0`. Elementary functions are applied through power series in the
//! nilpotent part, so nothing here shares code with the jet propagation or
//! the activation derivative tables used elsewhere in the crate.

use crate::network::{Activation, NetworkConfig, NetworkParams};
use crate::DenseTensor;

#[derive(Clone, Debug, PartialEq)]
pub struct Hd {
    pub c: Vec<f64>,
}

impl Hd {
    pub fn constant(k: usize, v: f64) -> Self {
        let mut c = vec![0.0; 1 << k];
        c[0] = v;
        Self { c }
    }

    pub fn k(&self) -> usize {
        self.c.len().trailing_zeros() as usize
    }

    pub fn add(&self, o: &Hd) -> Hd {
        Hd {
            c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Hd {
        Hd {
            c: self.c.iter().map(|a| a * s).collect(),
        }
    }

    pub fn mul(&self, o: &Hd) -> Hd {
        let m = self.c.len();
        let mut c = vec![0.0; m];
        for s in 0..m {
            // all T ⊆ s
            let mut t = s;
            loop {
                c[s] += self.c[t] * o.c[s ^ t];
                if t == 0 {
                    break;
                }
                t = (t - 1) & s;
            }
        }
        Hd { c }
    }

    fn nilpotent(&self) -> Hd {
        let mut e = self.clone();
        e.c[0] = 0.0;
        e
    }

    /// `Σ_m coeffs[m] ε^m` with `ε` the nilpotent part.
    fn series(&self, coeffs: &[f64]) -> Hd {
        let k = self.k();
        let eps = self.nilpotent();
        let mut out = Hd::constant(k, coeffs[0]);
        let mut power = Hd::constant(k, 1.0);
        for c in coeffs.iter().skip(1) {
            power = power.mul(&eps);
            out = out.add(&power.scale(*c));
        }
        out
    }

    pub fn exp(&self) -> Hd {
        let k = self.k();
        let e0 = self.c[0].exp();
        let mut coeffs = vec![e0];
        for m in 1..=k {
            coeffs.push(coeffs[m - 1] / m as f64);
        }
        self.series(&coeffs)
    }

    pub fn recip(&self) -> Hd {
        let k = self.k();
        let a = self.c[0];
        let coeffs: Vec<f64> = (0..=k).map(|m| (-1f64).powi(m as i32) / a.powi(m as i32 + 1)).collect();
        self.series(&coeffs)
    }

    pub fn ln(&self) -> Hd {
        let k = self.k();
        let a = self.c[0];
        let mut coeffs = vec![a.ln()];
        for m in 1..=k {
            coeffs.push((-1f64).powi(m as i32 + 1) / (m as f64 * a.powi(m as i32)));
        }
        self.series(&coeffs)
    }

    pub fn sin(&self) -> Hd {
        let k = self.k();
        let (s, c) = self.c[0].sin_cos();
        let mut coeffs = Vec::new();
        let mut fact = 1.0;
        for m in 0..=k {
            if m > 0 {
                fact *= m as f64;
            }
            let d = [s, c, -s, -c][m % 4];
            coeffs.push(d / fact);
        }
        self.series(&coeffs)
    }

    pub fn tanh(&self) -> Hd {
        // (e^{2a} − 1)/(e^{2a} + 1)
        let k = self.k();
        let e = self.scale(2.0).exp();
        let num = e.add(&Hd::constant(k, -1.0));
        let den = e.add(&Hd::constant(k, 1.0));
        num.mul(&den.recip())
    }

    pub fn softplus(&self) -> Hd {
        let k = self.k();
        self.exp().add(&Hd::constant(k, 1.0)).ln()
    }
}

pub fn apply(act: Activation, h: &Hd) -> Hd {
    match act {
        Activation::Tanh => h.tanh(),
        Activation::Sin => h.sin(),
        Activation::Softplus => h.softplus(),
        Activation::Identity => h.clone(),
        Activation::Erf => panic!("erf is not supported by the hyper-dual oracle"),
    }
}

/// Every output's mixed partial along `dirs`, by a naive forward pass in hyper-dual numbers.
pub fn mixed_partial(config: &NetworkConfig, params: &NetworkParams<f64>, x: &[f64], dirs: &[&[f64]]) -> Vec<f64> {
    let k = dirs.len();
    let theta: Vec<Hd> = (0..params.theta.len())
        .map(|a| {
            let mut h = Hd::constant(k, params.theta[a]);
            for (j, d) in dirs.iter().enumerate() {
                h.c[1 << j] = d[a];
            }
            h
        })
        .collect();
    let block = |name: &str| params.blocks.iter().find(|b| b.name == name).cloned();
    let widths = config.widths();
    let mut layer: Vec<Hd> = x.iter().map(|v| Hd::constant(k, *v)).collect();
    for l in 1..widths.len() {
        let a: Vec<Hd> = if l > 1 || config.activate_input {
            layer.iter().map(|h| apply(config.activation, h)).collect()
        } else {
            layer.clone()
        };
        let w = block(&format!("W{l}")).expect("weight block");
        let b = block(&format!("b{l}"));
        layer = (0..widths[l])
            .map(|i| {
                let mut acc = match &b {
                    Some(b) => theta[b.offset + i].clone(),
                    None => Hd::constant(k, 0.0),
                };
                for j in 0..widths[l - 1] {
                    acc = acc.add(&theta[w.offset + i * widths[l - 1] + j].mul(&a[j]));
                }
                acc
            })
            .collect();
    }
    let full = (1 << k) - 1;
    layer.iter().map(|h| h.c[full]).collect()
}

/// Dense `∇^{order} F_i(x)` as a tensor of shape `[N; order]`.
pub fn dense_derivative(
    config: &NetworkConfig,
    params: &NetworkParams<f64>,
    x: &[f64],
    output: usize,
    order: usize,
) -> DenseTensor<f64> {
    let n = params.theta.len();
    let units: Vec<Vec<f64>> = (0..n)
        .map(|a| {
            let mut e = vec![0.0; n];
            e[a] = 1.0;
            e
        })
        .collect();
    let mut seen = std::collections::HashMap::new();
    DenseTensor::from_fn(vec![n; order], |idx| {
        // mixed partials are symmetric: evaluate each sorted multi-index once
        let mut key = idx.to_vec();
        key.sort_unstable();
        *seen.entry(key.clone()).or_insert_with(|| {
            let dirs: Vec<&[f64]> = key.iter().map(|a| units[*a].as_slice()).collect();
            mixed_partial(config, params, x, &dirs)[output]
        })
    })
    .expect("finite derivatives")
}
