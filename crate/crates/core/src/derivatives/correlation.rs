//! Derivative correlations
//! `C^{D,d} = η^{D/2+d}/(D!d!) ∇^{D+d}F_{i_0}(x_0) · ∇F_{i_1}(x_1) ⋯ ∇F_{i_d}(x_d)`,
//! with `D` free parameter indices.

use serde::{Deserialize, Serialize};

use super::jet::JetModel;
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::{norm2, Scalar};
use crate::tensor::{NormEstimate, NormMethod, NormOptions};

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationSpec<S> {
    /// Number of free parameter indices `D`.
    pub free: usize,
    /// Number of gradient slots `d`.
    pub d: usize,
    /// `x_0..x_d`.
    pub inputs: Vec<Vec<S>>,
    /// `i_0..i_d`.
    pub output_indices: Vec<usize>,
}

impl<S: Scalar> CorrelationSpec<S> {
    /// All outputs at index 0.
    pub fn new(free: usize, inputs: Vec<Vec<S>>) -> Self {
        let d = inputs.len().saturating_sub(1);
        Self {
            free,
            d,
            output_indices: vec![0; inputs.len()],
            inputs,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Input("correlations need d >= 1".into()));
        }
        if self.free + self.d > 4 {
            return Err(Error::UnsupportedOrder(format!(
                "D + d = {} exceeds 4",
                self.free + self.d
            )));
        }
        if self.inputs.len() != self.d + 1 || self.output_indices.len() != self.d + 1 {
            return Err(Error::Input(format!("need {} inputs and output indices", self.d + 1)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum CorrelationValue<S> {
    Scalar(S),
    Vector(Vec<S>),
    Norm(NormEstimate<S>),
}

impl<S: Scalar> CorrelationValue<S> {
    /// `|C|`, `‖C‖₂`, or the estimated subordinate norm.
    pub fn magnitude(&self) -> S {
        match self {
            CorrelationValue::Scalar(v) => v.abs(),
            CorrelationValue::Vector(v) => norm2(v),
            CorrelationValue::Norm(n) => n.value,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationResult<S> {
    pub free: usize,
    pub d: usize,
    pub inputs: Vec<Vec<S>>,
    pub output_indices: Vec<usize>,
    pub value: CorrelationValue<S>,
    pub eta: S,
    pub prefactor: S,
    pub prefactor_applied: bool,
}

/// `η^{D/2+d} / (D! d!)`.
pub fn prefactor<S: Scalar>(free: usize, d: usize, eta: S) -> S {
    let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    eta.powf(S::of(free as f64 / 2.0 + d as f64)) / S::of(fact(free) * fact(d))
}

fn gradients<S: Scalar, M: JetModel<S> + ?Sized>(
    model: &M,
    theta: &[S],
    spec: &CorrelationSpec<S>,
) -> Result<Vec<Vec<S>>> {
    (1..=spec.d)
        .map(|a| model.gradient(theta, &spec.inputs[a], spec.output_indices[a]))
        .collect()
}

fn one_hot<S: Scalar>(len: usize, i: usize) -> Result<Vec<S>> {
    if i >= len {
        return Err(Error::Input(format!("output index {i} out of range for {len} outputs")));
    }
    let mut e = vec![S::zero(); len];
    e[i] = S::one();
    Ok(e)
}

/// `C^{0,d}` (a scalar) or `C^{1,d}` (a flat vector over the free index).
pub fn correlation<S: Scalar, M: JetModel<S> + ?Sized>(
    model: &M,
    theta: &[S],
    spec: &CorrelationSpec<S>,
    eta: S,
) -> Result<CorrelationResult<S>> {
    spec.validate()?;
    let i0 = spec.output_indices[0];
    let e = one_hot(model.output_dim(), i0)?;
    let grads = gradients(model, theta, spec)?;
    let dirs: Vec<&[S]> = grads.iter().map(|g| g.as_slice()).collect();
    let c = prefactor(spec.free, spec.d, eta);
    let value = match spec.free {
        0 => CorrelationValue::Scalar(c * model.mixed_partial(theta, &spec.inputs[0], &dirs)?[i0]),
        1 => {
            let v = model.mixed_partial_grad(theta, &spec.inputs[0], &dirs, &e)?;
            CorrelationValue::Vector(v.into_iter().map(|x| c * x).collect())
        }
        _ => {
            return Err(Error::Unsupported(
                "two or more free indices: use correlation_norm_hopm".into(),
            ))
        }
    };
    Ok(CorrelationResult {
        free: spec.free,
        d: spec.d,
        inputs: spec.inputs.clone(),
        output_indices: spec.output_indices.clone(),
        value,
        eta,
        prefactor: c,
        prefactor_applied: true,
    })
}

/// Subordinate norm of `C^{2,d}` over its two free indices, matrix-free.
///
/// The free matrix `M = ∇^{2+d}F · g^d` is symmetric, so the iteration
/// `v ← Mv/‖Mv‖` drives `‖Mv‖ = max_u uᵀMv` to `‖M‖`; every iterate is a
/// certified lower bound. Each product `Mv` is one reverse sweep through a
/// jet with directions `g_1..g_d, v`.
pub fn correlation_norm_hopm<S: Scalar, M: JetModel<S> + ?Sized>(
    model: &M,
    theta: &[S],
    spec: &CorrelationSpec<S>,
    eta: S,
    opts: &NormOptions,
) -> Result<CorrelationResult<S>> {
    spec.validate()?;
    if spec.free != 2 {
        return Err(Error::Unsupported(format!(
            "matrix-free norm needs D = 2, got {}",
            spec.free
        )));
    }
    if opts.restarts == 0 || !(opts.tol > 0.0) {
        return Err(Error::Input("restarts >= 1 and tol > 0 required".into()));
    }
    let e = one_hot(model.output_dim(), spec.output_indices[0])?;
    let grads = gradients(model, theta, spec)?;
    let n = model.param_count();
    let apply = |v: &[S]| -> Result<Vec<S>> {
        let mut dirs: Vec<&[S]> = grads.iter().map(|g| g.as_slice()).collect();
        dirs.push(v);
        model.mixed_partial_grad(theta, &spec.inputs[0], &dirs, &e)
    };
    let mut best: Option<NormEstimate<S>> = None;
    let mut total_iters = 0;
    for r in 0..opts.restarts {
        let mut v: Vec<S> = if r == 0 {
            grads[0].clone()
        } else {
            let mut g = rng::seeded(rng::mix(&[opts.seed, r as u64]));
            rng::normal_vec(&mut g, n)
        };
        let nv = norm2(&v);
        if nv == S::zero() {
            v = vec![S::one(); n];
        }
        let nv = norm2(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        let mut value = S::zero();
        let mut u = v.clone();
        let mut converged = false;
        let mut iters = 0;
        loop {
            iters += 1;
            let w = apply(&v)?;
            let lam = norm2(&w);
            if lam == S::zero() {
                value = S::zero();
                converged = true;
                break;
            }
            let delta = (lam - value).abs();
            u = w.iter().map(|x| *x / lam).collect();
            value = lam;
            if delta <= S::of(opts.tol) * lam {
                converged = true;
                break;
            }
            if iters >= opts.max_iters {
                break;
            }
            v.clone_from(&u);
        }
        total_iters += iters;
        if best.as_ref().map_or(true, |b| value > b.value) {
            best = Some(NormEstimate {
                value,
                method: NormMethod::PowerIteration,
                restarts: opts.restarts,
                iterations: 0,
                converged,
                is_lower_bound: true,
                maximizers: vec![u.clone(), v.clone()],
            });
        }
    }
    let mut est = best.expect("at least one restart");
    est.iterations = total_iters;
    let c = prefactor(2, spec.d, eta);
    est.value *= c;
    Ok(CorrelationResult {
        free: 2,
        d: spec.d,
        inputs: spec.inputs.clone(),
        output_indices: spec.output_indices.clone(),
        value: CorrelationValue::Norm(est),
        eta,
        prefactor: c,
        prefactor_applied: true,
    })
}
