//! Analytic activations with closed-form derivatives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Highest derivative order available from [`Activation::derivatives`].
pub const MAX_ORDER: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Tanh,
    Erf,
    Sin,
    Softplus,
    Identity,
}

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Coefficients (ascending powers) of p' · (1 − u²) for tanh, or p' · u(1 − u) for the sigmoid.
fn chain_poly(p: &[f64], quadratic: [f64; 3]) -> Vec<f64> {
    let dp: Vec<f64> = p.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect();
    let mut out = vec![0.0; dp.len() + 2];
    for (i, c) in dp.iter().enumerate() {
        for (j, q) in quadratic.iter().enumerate() {
            out[i + j] += c * q;
        }
    }
    out
}

fn poly_table(first: Vec<f64>, quadratic: [f64; 3]) -> Vec<Vec<f64>> {
    let mut table = vec![first];
    while table.len() < MAX_ORDER + 1 {
        let next = chain_poly(table.last().expect("nonempty"), quadratic);
        table.push(next);
    }
    table
}

fn horner<S: Scalar>(coeffs: &[f64], u: S) -> S {
    coeffs.iter().rev().fold(S::zero(), |acc, c| acc * u + S::of(*c))
}

thread_local! {
    // tanh^(k) = P_k(tanh), P_0 = u
    static TANH_POLY: Vec<Vec<f64>> = poly_table(vec![0.0, 1.0], [1.0, 0.0, -1.0]);
    // softplus^(k+1) = Q_k(σ), Q_0 = u
    static SIGMOID_POLY: Vec<Vec<f64>> = poly_table(vec![0.0, 1.0], [0.0, 1.0, -1.0]);
}

impl Activation {
    pub const ALL: [Activation; 5] = [
        Activation::Tanh,
        Activation::Erf,
        Activation::Sin,
        Activation::Softplus,
        Activation::Identity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Erf => "erf",
            Activation::Sin => "sin",
            Activation::Softplus => "softplus",
            Activation::Identity => "identity",
        }
    }

    /// Constant `B` with `|φ^[k]| ≤ B·(k+1)!` on `[-10, 10]` for `k ≤ 4`.
    pub fn bound_constant(self) -> f64 {
        1.0
    }

    pub fn is_linear(self) -> bool {
        self == Activation::Identity
    }

    pub fn value<S: Scalar>(self, x: S) -> S {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Erf => x.erf(),
            Activation::Sin => x.sin(),
            Activation::Softplus => softplus(x),
            Activation::Identity => x,
        }
    }

    pub fn derivative<S: Scalar>(self, x: S, order: usize) -> S {
        let mut buf = [S::zero(); MAX_ORDER + 1];
        self.derivatives(x, &mut buf[..=order]);
        buf[order]
    }

    /// Fill `out[k] = φ^(k)(x)` for `k < out.len()`.
    pub fn derivatives<S: Scalar>(self, x: S, out: &mut [S]) {
        assert!(out.len() <= MAX_ORDER + 1, "derivative order above {MAX_ORDER}");
        if out.is_empty() {
            return;
        }
        match self {
            Activation::Tanh => {
                let t = x.tanh();
                TANH_POLY.with(|p| {
                    for (k, o) in out.iter_mut().enumerate() {
                        *o = horner(&p[k], t);
                    }
                });
            }
            Activation::Softplus => {
                out[0] = softplus(x);
                let s = sigmoid(x);
                SIGMOID_POLY.with(|p| {
                    for (k, o) in out.iter_mut().enumerate().skip(1) {
                        *o = horner(&p[k - 1], s);
                    }
                });
            }
            Activation::Erf => {
                out[0] = x.erf();
                let g = S::of(FRAC_2_SQRT_PI) * (-x * x).exp();
                // physicists' Hermite: erf^(k+1) = (-1)^k H_k · g
                let two = S::of(2.0);
                let (mut h_prev, mut h) = (S::zero(), S::one());
                for k in 1..out.len() {
                    let sign = if (k - 1) % 2 == 0 { S::one() } else { -S::one() };
                    out[k] = sign * h * g;
                    let next = two * x * h - two * S::of((k - 1) as f64) * h_prev;
                    h_prev = h;
                    h = next;
                }
            }
            Activation::Sin => {
                let (s, c) = x.sin_cos();
                for (k, o) in out.iter_mut().enumerate() {
                    *o = match k % 4 {
                        0 => s,
                        1 => c,
                        2 => -s,
                        _ => -c,
                    };
                }
            }
            Activation::Identity => {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = match k {
                        0 => x,
                        1 => S::one(),
                        _ => S::zero(),
                    };
                }
            }
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Activation::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown activation `{s}`")))
    }
}

fn softplus<S: Scalar>(x: S) -> S {
    x.max(S::zero()) + (-x.abs()).exp().ln_1p()
}

fn sigmoid<S: Scalar>(x: S) -> S {
    if x >= S::zero() {
        S::one() / (S::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (S::one() + e)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderAudit {
    pub order: usize,
    pub max_abs: f64,
    pub bound: f64,
    pub max_fd_rel_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivationAudit {
    pub activation: Activation,
    pub domain: (f64, f64),
    pub samples: usize,
    pub orders: Vec<OrderAudit>,
}

/// Check `|φ^[k]| ≤ B·(k+1)!` on a sample grid and compare every derivative
/// with a central difference of the one below it.
pub fn activation_bound_audit(
    act: Activation,
    domain: (f64, f64),
    max_order: usize,
    samples: usize,
) -> Result<ActivationAudit> {
    const STEP: f64 = 1e-4;
    const FD_TOL: f64 = 1e-5;
    if max_order == 0 || max_order > 4 {
        return Err(Error::UnsupportedOrder(format!(
            "audit order {max_order} outside 1..=4"
        )));
    }
    if !(domain.0 < domain.1) || samples < 2 {
        return Err(Error::Input(format!("bad audit domain {domain:?} / {samples} samples")));
    }
    let b = act.bound_constant();
    let mut orders: Vec<OrderAudit> = (1..=max_order)
        .map(|k| OrderAudit {
            order: k,
            max_abs: 0.0,
            bound: b * factorial(k + 1),
            max_fd_rel_error: 0.0,
        })
        .collect();
    let mut here = [0.0f64; MAX_ORDER + 1];
    let mut plus = [0.0f64; MAX_ORDER + 1];
    let mut minus = [0.0f64; MAX_ORDER + 1];
    for i in 0..samples {
        let x = domain.0 + (domain.1 - domain.0) * i as f64 / (samples - 1) as f64;
        act.derivatives(x, &mut here[..=max_order]);
        act.derivatives(x + STEP, &mut plus[..max_order]);
        act.derivatives(x - STEP, &mut minus[..max_order]);
        for o in orders.iter_mut() {
            let k = o.order;
            let v = here[k];
            if !v.is_finite() {
                return Err(audit_error(act, k, x, "non-finite derivative".into()));
            }
            o.max_abs = o.max_abs.max(v.abs());
            if v.abs() > o.bound {
                return Err(audit_error(
                    act,
                    k,
                    x,
                    format!("|φ^[{k}]| = {} exceeds {}", v.abs(), o.bound),
                ));
            }
            let fd = (plus[k - 1] - minus[k - 1]) / (2.0 * STEP);
            let rel = (fd - v).abs() / v.abs().max(1.0);
            o.max_fd_rel_error = o.max_fd_rel_error.max(rel);
            if rel > FD_TOL {
                return Err(audit_error(
                    act,
                    k,
                    x,
                    format!("finite difference {fd} vs closed form {v}"),
                ));
            }
        }
    }
    Ok(ActivationAudit {
        activation: act,
        domain,
        samples,
        orders,
    })
}

fn audit_error(act: Activation, order: usize, x: f64, reason: String) -> Error {
    Error::Audit {
        activation: act.name().to_string(),
        order,
        x,
        reason,
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_activations_pass_the_audit() {
        for act in Activation::ALL {
            let report = activation_bound_audit(act, (-10.0, 10.0), 4, 2001).unwrap();
            assert_eq!(report.orders.len(), 4);
        }
    }

    #[test]
    fn tanh_first_derivative_peak() {
        let r = activation_bound_audit(Activation::Tanh, (-10.0, 10.0), 1, 2001).unwrap();
        assert!((r.orders[0].max_abs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn higher_orders_match_finite_differences() {
        // orders 5 and 6 are used by reverse sweeps through jets
        for act in Activation::ALL {
            for i in 0..41 {
                let x = -4.0 + 0.2 * i as f64;
                for k in 5..=MAX_ORDER {
                    let h = 1e-4;
                    let fd = (act.derivative(x + h, k - 1) - act.derivative(x - h, k - 1)) / (2.0 * h);
                    let v = act.derivative(x, k);
                    assert!((fd - v).abs() <= 1e-5 * v.abs().max(1.0), "{act:?} k={k} x={x}");
                }
            }
        }
    }

    #[test]
    fn known_values() {
        assert!((Activation::Erf.derivative(0.0, 1) - FRAC_2_SQRT_PI).abs() < 1e-15);
        assert!((Activation::Softplus.derivative(0.0f64, 1) - 0.5).abs() < 1e-15);
        assert!((Activation::Softplus.value(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(Activation::Tanh.derivative(0.0, 2), 0.0);
        assert!((Activation::Tanh.derivative(0.0f64, 3) + 2.0).abs() < 1e-15);
        assert!(Activation::Softplus.value(800.0f64).is_finite());
    }

    #[test]
    fn f32_agrees() {
        for k in 0..=4 {
            let a = Activation::Tanh.derivative(0.3f32, k) as f64;
            let b = Activation::Tanh.derivative(0.3f64, k);
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!("erf".parse::<Activation>().unwrap(), Activation::Erf);
        assert!("relu".parse::<Activation>().is_err());
    }
}
