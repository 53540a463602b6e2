//! Central-difference oracle for mixed directional derivatives.

use crate::error::{Error, Result};
use crate::network::Hypothesis;
use crate::scalar::Scalar;

fn polarized<S: Scalar, M: Hypothesis<S> + ?Sized>(
    model: &M,
    theta: &[S],
    x: &[S],
    dirs: &[&[S]],
    h: S,
) -> Result<Vec<S>> {
    let k = dirs.len();
    let mut acc = vec![S::zero(); model.output_dim()];
    let mut point = theta.to_vec();
    for signs in 0..1usize << k {
        point.copy_from_slice(theta);
        let mut parity = S::one();
        for (j, v) in dirs.iter().enumerate() {
            let s = if signs & (1 << j) != 0 {
                parity = -parity;
                -h
            } else {
                h
            };
            for (p, vi) in point.iter_mut().zip(v.iter()) {
                *p += s * *vi;
            }
        }
        for (a, f) in acc.iter_mut().zip(model.output(&point, x)?) {
            *a += parity * f;
        }
    }
    let denom = (S::of(2.0) * h).powi(k as i32);
    Ok(acc.into_iter().map(|a| a / denom).collect())
}

/// `∂^k F/∂t_1..∂t_k` by `±step` polarization with one Richardson pass:
/// `(4 D(step/2) − D(step)) / 3`.
pub fn finite_difference_mixed<S: Scalar, M: Hypothesis<S> + ?Sized>(
    model: &M,
    theta: &[S],
    x: &[S],
    dirs: &[&[S]],
    step: S,
) -> Result<Vec<S>> {
    if dirs.len() > 3 {
        return Err(Error::UnsupportedOrder(format!(
            "finite differences support order <= 3, got {}",
            dirs.len()
        )));
    }
    if !(step > S::zero()) {
        return Err(Error::Input("step must be positive".into()));
    }
    if dirs.iter().any(|d| d.len() != theta.len()) {
        return Err(Error::Input("direction length differs from parameter count".into()));
    }
    let coarse = polarized(model, theta, x, dirs, step)?;
    let fine = polarized(model, theta, x, dirs, step / S::of(2.0))?;
    Ok(fine
        .iter()
        .zip(&coarse)
        .map(|(f, c)| (S::of(4.0) * *f - *c) / S::of(3.0))
        .collect())
}
