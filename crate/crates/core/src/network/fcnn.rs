//! Fully connected network `F^{(l)} = W_l φ(F^{(l−1)}) + b_l`.

use super::activation::Activation;
use super::config::{ModelKind, NetworkConfig};
use super::params::{layout, Block};
use super::Hypothesis;
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::{axpy, dot, Scalar};
use rand_distr::{Distribution, Uniform};

#[derive(Clone, Debug)]
pub struct Fcnn<S> {
    widths: Vec<usize>,
    activation: Activation,
    activate_input: bool,
    /// `(W_l offset, b_l offset)` per layer `l = 1..L`, stored at index `l − 1`.
    offsets: Vec<(usize, Option<usize>)>,
    param_count: usize,
    /// Per-neuron `(a_j, c_j)` with `φ_j(u) = φ(a_j u + c_j)`, indexed by the layer whose values are activated.
    modulation: Option<Vec<Vec<(S, S)>>>,
}

/// Pre-activations `F^{(0..L)}` and activations `a^{(0..L−1)}` of one forward pass.
#[derive(Clone, Debug)]
pub struct Layers<S> {
    pub pre: Vec<Vec<S>>,
    pub post: Vec<Vec<S>>,
}

impl<S: Scalar> Layers<S> {
    pub fn output(&self) -> &[S] {
        self.pre.last().expect("at least one layer")
    }
}

impl<S: Scalar> Fcnn<S> {
    /// `seed` only feeds the per-neuron activation variant.
    pub fn new(config: &NetworkConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        if config.model_kind == ModelKind::QuadraticPerp {
            return Err(Error::Unsupported("quadratic model is not an fcnn".into()));
        }
        let widths = config.widths();
        let blocks = layout(config);
        let mut offsets = Vec::new();
        let mut it = blocks.iter().peekable();
        while let Some(w) = it.next() {
            let b = it.next_if(|b: &&Block| b.name.starts_with('b')).map(|b| b.offset);
            offsets.push((w.offset, b));
        }
        let param_count = blocks.last().map_or(0, |b| b.offset + b.len());
        let modulation = (config.model_kind == ModelKind::FcnnPerNeuron).then(|| {
            let mut g = rng::seeded(rng::mix(&[seed, rng::label_hash("per-neuron")]));
            let ua = Uniform::new_inclusive(0.5, 1.5);
            let uc = Uniform::new_inclusive(-0.5, 0.5);
            (0..widths.len() - 1)
                .map(|l| {
                    (0..widths[l])
                        .map(|_| (S::of(ua.sample(&mut g)), S::of(uc.sample(&mut g))))
                        .collect()
                })
                .collect()
        });
        Ok(Self {
            widths,
            activation: config.activation,
            activate_input: config.activate_input,
            offsets,
            param_count,
            modulation,
        })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn depth(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// Whether layer `l`'s values pass through `φ` before the next affine map.
    pub fn is_activated(&self, l: usize) -> bool {
        l > 0 || self.activate_input
    }

    pub fn has_biases(&self) -> bool {
        self.offsets.iter().all(|o| o.1.is_some())
    }

    /// Flat offsets of `W_l` and `b_l`, `l ≥ 1`.
    pub fn layer_offsets(&self, l: usize) -> (usize, Option<usize>) {
        self.offsets[l - 1]
    }

    /// `out[k] = φ_j^(k)(u)` for neuron `j` of layer `l`.
    #[inline]
    pub fn act_derivatives(&self, l: usize, j: usize, u: S, out: &mut [S]) {
        match &self.modulation {
            Some(m) => {
                let (a, c) = m[l][j];
                self.activation.derivatives(a * u + c, out);
                let mut p = S::one();
                for o in out.iter_mut().skip(1) {
                    p *= a;
                    *o *= p;
                }
            }
            None => self.activation.derivatives(u, out),
        }
    }

    #[inline]
    pub fn act_value(&self, l: usize, j: usize, u: S) -> S {
        match &self.modulation {
            Some(m) => {
                let (a, c) = m[l][j];
                self.activation.value(a * u + c)
            }
            None => self.activation.value(u),
        }
    }

    fn check(&self, theta: &[S], x: &[S]) -> Result<()> {
        if theta.len() != self.param_count {
            return Err(Error::Input(format!(
                "parameter vector has length {}, expected {}",
                theta.len(),
                self.param_count
            )));
        }
        if x.len() != self.widths[0] {
            return Err(Error::Input(format!(
                "input has length {}, expected {}",
                x.len(),
                self.widths[0]
            )));
        }
        Ok(())
    }

    /// `y = W_l a + b_l`.
    pub fn affine(&self, theta: &[S], l: usize, a: &[S], with_bias: bool) -> Vec<S> {
        let (wo, bo) = self.offsets[l - 1];
        let (rows, cols) = (self.widths[l], self.widths[l - 1]);
        (0..rows)
            .map(|i| {
                let row = &theta[wo + i * cols..wo + (i + 1) * cols];
                let b = match (with_bias, bo) {
                    (true, Some(bo)) => theta[bo + i],
                    _ => S::zero(),
                };
                dot(row, a) + b
            })
            .collect()
    }

    /// `W_lᵀ y`.
    pub fn affine_transpose(&self, theta: &[S], l: usize, y: &[S]) -> Vec<S> {
        let (wo, _) = self.offsets[l - 1];
        let (rows, cols) = (self.widths[l], self.widths[l - 1]);
        let mut out = vec![S::zero(); cols];
        for i in 0..rows {
            if y[i] != S::zero() {
                axpy(y[i], &theta[wo + i * cols..wo + (i + 1) * cols], &mut out);
            }
        }
        out
    }

    pub fn activate(&self, l: usize, h: &[S]) -> Vec<S> {
        if self.is_activated(l) {
            h.iter().enumerate().map(|(j, u)| self.act_value(l, j, *u)).collect()
        } else {
            h.to_vec()
        }
    }

    pub fn forward(&self, theta: &[S], x: &[S]) -> Result<Layers<S>> {
        self.check(theta, x)?;
        let depth = self.depth();
        let mut pre = Vec::with_capacity(depth + 1);
        let mut post = Vec::with_capacity(depth);
        pre.push(x.to_vec());
        for l in 1..=depth {
            let a = self.activate(l - 1, &pre[l - 1]);
            pre.push(self.affine(theta, l, &a, true));
            post.push(a);
        }
        Ok(Layers { pre, post })
    }

    /// Accumulate `Σ_i cot_i ∇θ F^{(L)}_i` into `grad` given a forward pass.
    pub fn backward(&self, theta: &[S], layers: &Layers<S>, cot: &[S], grad: &mut [S]) {
        let mut ybar = cot.to_vec();
        let mut d = [S::zero(); 2];
        for l in (1..=self.depth()).rev() {
            let (wo, bo) = self.offsets[l - 1];
            let cols = self.widths[l - 1];
            let a = &layers.post[l - 1];
            for (i, yi) in ybar.iter().enumerate() {
                if *yi != S::zero() {
                    axpy(*yi, a, &mut grad[wo + i * cols..wo + (i + 1) * cols]);
                }
            }
            if let Some(bo) = bo {
                for (i, yi) in ybar.iter().enumerate() {
                    grad[bo + i] += *yi;
                }
            }
            if l == 1 {
                break;
            }
            let mut abar = self.affine_transpose(theta, l, &ybar);
            if self.is_activated(l - 1) {
                for (j, v) in abar.iter_mut().enumerate() {
                    self.act_derivatives(l - 1, j, layers.pre[l - 1][j], &mut d);
                    *v *= d[1];
                }
            }
            ybar = abar;
        }
    }
}

impl<S: Scalar> Hypothesis<S> for Fcnn<S> {
    fn param_count(&self) -> usize {
        self.param_count
    }

    fn input_dim(&self) -> usize {
        self.widths[0]
    }

    fn output_dim(&self) -> usize {
        *self.widths.last().expect("nonempty")
    }

    fn is_linear_in_params(&self) -> bool {
        self.depth() == 1
    }

    fn output(&self, theta: &[S], x: &[S]) -> Result<Vec<S>> {
        Ok(self.forward(theta, x)?.pre.pop().expect("output layer"))
    }

    fn pullback(&self, theta: &[S], x: &[S], cot: &mut dyn FnMut(&[S]) -> Vec<S>) -> Result<(Vec<S>, Vec<S>)> {
        let layers = self.forward(theta, x)?;
        let c = cot(layers.output());
        if c.len() != self.output_dim() {
            return Err(Error::Input("cotangent length differs from output dimension".into()));
        }
        let mut grad = vec![S::zero(); self.param_count];
        self.backward(theta, &layers, &c, &mut grad);
        Ok((layers.pre.last().expect("output").clone(), grad))
    }
}
