//! One SGD step and the three linearized references `F_lin`, `F̂`, `θ_lin`.

use super::cost::Cost;
use crate::derivatives::jacobian;
use crate::error::{Error, Result};
use crate::network::Hypothesis;
use crate::scalar::{axpy, dot, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct SgdStep<S> {
    /// `F(θ)(x)` before the step.
    pub output: Vec<S>,
    pub loss: S,
    pub cprime: Vec<S>,
}

/// `θ ← θ − η ∇F(θ)(x) C′(F(θ)(x), y)`.
pub fn sgd_step<S: Scalar, M: Hypothesis<S> + ?Sized>(
    model: &M,
    theta: &mut [S],
    x: &[S],
    y: &[S],
    cost: Cost,
    eta: S,
) -> Result<SgdStep<S>> {
    if !(eta > S::zero()) {
        return Err(Error::Input("learning rate must be positive".into()));
    }
    let mut cprime = Vec::new();
    let (output, grad) = model.pullback(theta, x, &mut |out| {
        cprime = cost.gradient(out, y);
        cprime.clone()
    })?;
    axpy(-eta, &grad, theta);
    Ok(SgdStep {
        loss: cost.value(&output, y),
        output,
        cprime,
    })
}

/// `F(θ_0)(x)` and the Jacobian `∇F(θ_0)(x)` (one row per output).
#[derive(Clone, Debug, PartialEq)]
pub struct PointLinearization<S> {
    pub f0: Vec<S>,
    pub jacobian: Vec<Vec<S>>,
}

impl<S: Scalar> PointLinearization<S> {
    pub fn new<M: Hypothesis<S> + ?Sized>(model: &M, theta0: &[S], x: &[S]) -> Result<Self> {
        Ok(Self {
            f0: model.output(theta0, x)?,
            jacobian: jacobian(model, theta0, x)?,
        })
    }

    /// `F̂(θ) = F(θ_0) + ∇F(θ_0)ᵀ(θ − θ_0)`.
    pub fn eval(&self, theta: &[S], theta0: &[S]) -> Vec<S> {
        let diff: Vec<S> = theta.iter().zip(theta0).map(|(a, b)| *a - *b).collect();
        self.f0
            .iter()
            .zip(&self.jacobian)
            .map(|(f, row)| *f + dot(row, &diff))
            .collect()
    }

    /// `Θ_0(self, other) = η ∇F(θ_0)(self) ∇F(θ_0)(other)ᵀ`.
    pub fn kernel(&self, other: &Self, eta: S) -> Vec<Vec<S>> {
        self.jacobian
            .iter()
            .map(|a| other.jacobian.iter().map(|b| eta * dot(a, b)).collect())
            .collect()
    }
}

/// `F̂(θ)(x)` from scratch.
pub fn f_hat_eval<S: Scalar, M: Hypothesis<S> + ?Sized>(
    model: &M,
    theta: &[S],
    theta0: &[S],
    x: &[S],
) -> Result<Vec<S>> {
    Ok(PointLinearization::new(model, theta0, x)?.eval(theta, theta0))
}

/// `θ_lin ← θ_lin − η ∇F(θ_0)(x_s) C′(F_lin(s)(x_s), y)`.
pub fn theta_lin_step<S: Scalar>(theta_lin: &mut [S], at_x: &PointLinearization<S>, cprime: &[S], eta: S) {
    for (row, c) in at_x.jacobian.iter().zip(cprime) {
        axpy(-eta * *c, row, theta_lin);
    }
}

/// `F_lin(s)` on a point set fixed before the first step.
///
/// Each tracked point keeps its `θ_0` linearization, so the kernel row
/// `Θ_0(p, x_s)` costs one dot product per output pair.
#[derive(Clone, Debug)]
pub struct LinTracker<S> {
    eta: S,
    points: Vec<PointLinearization<S>>,
    values: Vec<Vec<S>>,
    steps: usize,
}

impl<S: Scalar> LinTracker<S> {
    pub fn new<M: Hypothesis<S> + ?Sized>(model: &M, theta0: &[S], points: &[Vec<S>], eta: S) -> Result<Self> {
        let points = points
            .iter()
            .map(|p| PointLinearization::new(model, theta0, p))
            .collect::<Result<Vec<_>>>()?;
        let values = points.iter().map(|p| p.f0.clone()).collect();
        Ok(Self {
            eta,
            points,
            values,
            steps: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn eta(&self) -> S {
        self.eta
    }

    /// `F_lin(s)(p_i)`.
    pub fn value(&self, i: usize) -> Result<&[S]> {
        self.values
            .get(i)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::CacheMiss(format!("point {i} of {}", self.values.len())))
    }

    pub fn point(&self, i: usize) -> Result<&PointLinearization<S>> {
        self.points
            .get(i)
            .ok_or_else(|| Error::CacheMiss(format!("point {i} of {}", self.points.len())))
    }

    /// `F_lin(s+1)(p) = F_lin(s)(p) − Θ_0(p, x_s) C′` for every tracked `p`.
    pub fn lin_step(&mut self, at_x: &PointLinearization<S>, cprime: &[S]) {
        for (p, v) in self.points.iter().zip(self.values.iter_mut()) {
            let k = p.kernel(at_x, self.eta);
            for (vi, row) in v.iter_mut().zip(&k) {
                *vi -= dot(row, cprime);
            }
        }
        self.steps += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{init_params, Fcnn, NetworkConfig};
    use crate::rng;

    fn tanh_net() -> (Fcnn<f64>, Vec<f64>) {
        let c = NetworkConfig {
            width: 16,
            input_dim: 3,
            ..NetworkConfig::default()
        };
        (Fcnn::new(&c, 1).unwrap(), init_params(&c, 1).unwrap().theta)
    }

    #[test]
    fn zero_cprime_leaves_params_unchanged() {
        let (net, theta) = tanh_net();
        let x = [0.2, -0.7, 1.0];
        let y = net.output(&theta, &x).unwrap();
        let mut t = theta.clone();
        sgd_step(&net, &mut t, &x, &y, Cost::Mse, 0.1).unwrap();
        assert_eq!(t, theta);
    }

    #[test]
    fn linear_model_closed_form() {
        let c = NetworkConfig::linear(4);
        let net = Fcnn::<f64>::new(&c, 0).unwrap();
        let mut theta = vec![0.3, -0.2, 0.8, 0.1];
        let x = [1.0, 0.5, -0.5, 2.0];
        let y = [0.4];
        let eta = 0.05;
        let r = dot(&theta, &x) - y[0];
        let expected: Vec<f64> = theta.iter().zip(&x).map(|(t, xi)| t - eta * xi * r).collect();
        sgd_step(&net, &mut theta, &x, &y, Cost::Mse, eta).unwrap();
        for (a, b) in theta.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn nonpositive_rate_is_rejected() {
        let (net, mut theta) = tanh_net();
        assert!(sgd_step(&net, &mut theta, &[0.0; 3], &[0.0], Cost::Mse, 0.0).is_err());
    }

    #[test]
    fn single_point_geometric_decay() {
        let (net, theta) = tanh_net();
        let x = vec![0.4, 1.1, -0.3];
        let y = [0.7];
        let eta = 0.02;
        let mut tr = LinTracker::new(&net, &theta, &[x.clone()], eta).unwrap();
        let at_x = tr.point(0).unwrap().clone();
        let k = at_x.kernel(&at_x, eta)[0][0];
        let r0 = tr.value(0).unwrap()[0] - y[0];
        for s in 1..=30 {
            let cp = Cost::Mse.gradient(tr.value(0).unwrap(), &y);
            tr.lin_step(&at_x, &cp);
            let expected = (1.0 - k).powi(s) * r0;
            assert!((tr.value(0).unwrap()[0] - y[0] - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn untracked_point_is_a_cache_miss() {
        let (net, theta) = tanh_net();
        let tr = LinTracker::new(&net, &theta, &[vec![0.0; 3]], 0.1).unwrap();
        assert!(matches!(tr.value(1), Err(Error::CacheMiss(_))));
    }

    #[test]
    fn f_hat_is_first_order_accurate() {
        let (net, theta) = tanh_net();
        let x = [0.5, -0.5, 0.9];
        assert_eq!(
            f_hat_eval(&net, &theta, &theta, &x).unwrap(),
            net.output(&theta, &x).unwrap()
        );
        let mut g = rng::seeded(3);
        let v: Vec<f64> = rng::sphere_vec(&mut g, theta.len(), 1.0);
        let lin = PointLinearization::new(&net, &theta, &x).unwrap();
        let eps = [1e-1, 1e-2, 1e-3, 1e-4];
        let errs: Vec<f64> = eps
            .iter()
            .map(|e| {
                let t: Vec<f64> = theta.iter().zip(&v).map(|(a, b)| a + e * b).collect();
                (net.output(&t, &x).unwrap()[0] - lin.eval(&t, &theta)[0]).abs()
            })
            .collect();
        let lx: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
        let ly: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
        let (slope, ..) = crate::asymptotics::ols(&lx, &ly);
        assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn one_theta_lin_step_by_hand() {
        let (net, theta) = tanh_net();
        let x = [0.1, 0.2, 0.3];
        let at_x = PointLinearization::new(&net, &theta, &x).unwrap();
        let mut t = theta.clone();
        theta_lin_step(&mut t, &at_x, &[0.5], 0.01);
        for i in 0..theta.len() {
            assert!((t[i] - theta[i] + 0.01 * at_x.jacobian[0][i] * 0.5).abs() < 1e-15);
        }
    }
}
