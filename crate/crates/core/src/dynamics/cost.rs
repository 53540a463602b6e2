//! Per-sample costs `C(u, y)` with their first and second derivatives in `u`.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;
use crate::tensor::jacobi_eigen;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cost {
    /// `½‖u − y‖²`.
    #[default]
    Mse,
    /// `Σ log cosh(u_i − y_i)`.
    LogCosh,
}

impl Cost {
    pub const ALL: [Cost; 2] = [Cost::Mse, Cost::LogCosh];

    pub fn name(self) -> &'static str {
        match self {
            Cost::Mse => "mse",
            Cost::LogCosh => "logcosh",
        }
    }

    pub fn value<S: Scalar>(self, u: &[S], y: &[S]) -> S {
        let half = S::of(0.5);
        let ln2 = S::of(std::f64::consts::LN_2);
        u.iter()
            .zip(y)
            .map(|(a, b)| {
                let r = *a - *b;
                match self {
                    Cost::Mse => half * r * r,
                    // |r| + ln(1 + e^{−2|r|}) − ln 2, stable for large |r|
                    Cost::LogCosh => r.abs() + (-(r.abs() + r.abs())).exp().ln_1p() - ln2,
                }
            })
            .fold(S::zero(), |acc, v| acc + v)
    }

    /// `C′(u, y)`.
    pub fn gradient<S: Scalar>(self, u: &[S], y: &[S]) -> Vec<S> {
        u.iter()
            .zip(y)
            .map(|(a, b)| match self {
                Cost::Mse => *a - *b,
                Cost::LogCosh => (*a - *b).tanh(),
            })
            .collect()
    }

    /// `C″(u, y)` as a dense `d × d` matrix.
    pub fn hessian<S: Scalar>(self, u: &[S], y: &[S]) -> Vec<Vec<S>> {
        let d = u.len();
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        if i != j {
                            return S::zero();
                        }
                        match self {
                            Cost::Mse => S::one(),
                            Cost::LogCosh => {
                                let t = (u[i] - y[i]).tanh();
                                S::one() - t * t
                            }
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// `sup_u ‖C″(u, y)‖₂`.
    pub fn curvature_bound(self) -> f64 {
        1.0
    }
}

impl FromStr for Cost {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Cost::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown cost `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityAudit {
    pub cost: Cost,
    pub samples: usize,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

impl ConvexityAudit {
    pub fn passed(&self) -> bool {
        self.min_eigenvalue >= -1e-12
    }
}

/// Eigenvalues of `C″` at `samples` points with `u, y` uniform in `[−radius, radius]^dim`.
pub fn convexity_audit(cost: Cost, dim: usize, samples: usize, radius: f64, seed: u64) -> ConvexityAudit {
    use rand::Rng;
    let mut g = rng::seeded(seed);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for _ in 0..samples {
        let u: Vec<f64> = (0..dim).map(|_| g.gen_range(-radius..=radius)).collect();
        let y: Vec<f64> = (0..dim).map(|_| g.gen_range(-radius..=radius)).collect();
        let h: Vec<f64> = cost.hessian(&u, &y).into_iter().flatten().collect();
        let (eig, _) = jacobi_eigen(&h, dim);
        for e in eig {
            lo = lo.min(e);
            hi = hi.max(e);
        }
    }
    ConvexityAudit {
        cost,
        samples,
        min_eigenvalue: lo,
        max_eigenvalue: hi,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_finite_differences() {
        let y = [0.3f64, -1.2];
        for cost in Cost::ALL {
            for u0 in [-3.0f64, -0.4, 0.0, 0.9, 5.0] {
                let u = [u0, 0.5 * u0 + 0.1];
                let g = cost.gradient(&u, &y);
                let h = cost.hessian(&u, &y);
                for i in 0..2 {
                    let (mut up, mut um) = (u, u);
                    up[i] += 1e-5;
                    um[i] -= 1e-5;
                    let fd = (cost.value(&up, &y) - cost.value(&um, &y)) / 2e-5;
                    assert!((fd - g[i]).abs() < 1e-8, "{cost:?} C′");
                    let fd2 = (cost.gradient(&up, &y)[i] - cost.gradient(&um, &y)[i]) / 2e-5;
                    assert!((fd2 - h[i][i]).abs() < 1e-8, "{cost:?} C″");
                }
            }
        }
    }

    #[test]
    fn zero_at_target() {
        for cost in Cost::ALL {
            assert_eq!(cost.value(&[0.7], &[0.7]), 0.0);
            assert_eq!(cost.gradient(&[0.7], &[0.7]), vec![0.0]);
        }
    }

    #[test]
    fn logcosh_is_stable_far_from_target() {
        let v = Cost::LogCosh.value(&[800.0f64], &[0.0]);
        assert!((v - (800.0 - std::f64::consts::LN_2)).abs() < 1e-9);
    }

    #[test]
    fn convexity() {
        for cost in Cost::ALL {
            let a = convexity_audit(cost, 3, 200, 10.0, 1);
            assert!(a.passed(), "{a:?}");
            assert!(a.max_eigenvalue <= cost.curvature_bound() + 1e-12);
        }
    }

    #[test]
    fn names_round_trip() {
        for cost in Cost::ALL {
            assert_eq!(cost.name().parse::<Cost>().unwrap(), cost);
        }
        assert!("hinge".parse::<Cost>().is_err());
    }
}
