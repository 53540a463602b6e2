//! The kernel `Θ(x, x') = η ∇F(x)ᵀ ∇F(x')`, directly and by layer recursion.

use crate::error::{Error, Result};
use crate::network::{Fcnn, Hypothesis};
use crate::scalar::{dot, Scalar};

/// Row-major `d_Y × d_Y` matrix.
pub type KernelMatrix<S> = Vec<Vec<S>>;

pub fn jacobian<S: Scalar, M: Hypothesis<S> + ?Sized>(model: &M, theta: &[S], x: &[S]) -> Result<Vec<Vec<S>>> {
    (0..model.output_dim()).map(|i| model.gradient(theta, x, i)).collect()
}

pub fn kernel_from_jacobians<S: Scalar>(jx: &[Vec<S>], jy: &[Vec<S>], eta: S) -> KernelMatrix<S> {
    jx.iter()
        .map(|gi| jy.iter().map(|gj| eta * dot(gi, gj)).collect())
        .collect()
}

pub fn kernel_eval<S: Scalar, M: Hypothesis<S> + ?Sized>(
    model: &M,
    theta: &[S],
    x: &[S],
    x2: &[S],
    eta: S,
) -> Result<KernelMatrix<S>> {
    let jx = jacobian(model, theta, x)?;
    let jy = if x == x2 {
        jx.clone()
    } else {
        jacobian(model, theta, x2)?
    };
    Ok(kernel_from_jacobians(&jx, &jy, eta))
}

/// Layer recursion
/// `Θ_(l) = W_l D_{l−1}(x) Θ_(l−1) D_{l−1}(x') W_lᵀ + η (a_{l−1}(x)·a_{l−1}(x') + β) I`,
/// with `D = diag(φ'(F^{(l−1)}))` and `β = 1` when the network has biases.
pub fn kernel_layerwise<S: Scalar>(net: &Fcnn<S>, theta: &[S], x: &[S], x2: &[S], eta: S) -> Result<KernelMatrix<S>> {
    let fx = net.forward(theta, x)?;
    let fy = net.forward(theta, x2)?;
    let w = net.widths();
    let beta = if net.has_biases() { S::one() } else { S::zero() };
    let diag_term = |l: usize| eta * (dot(&fx.post[l - 1], &fy.post[l - 1]) + beta);
    // Θ_(1) is a multiple of the identity
    let n1 = w[1];
    let mut k = vec![S::zero(); n1 * n1];
    let c = diag_term(1);
    for i in 0..n1 {
        k[i * n1 + i] = c;
    }
    for l in 2..w.len() {
        let (rows, cols) = (w[l], w[l - 1]);
        let (wo, _) = net.layer_offsets(l);
        let wl = &theta[wo..wo + rows * cols];
        let deriv = |h: &[S]| -> Vec<S> {
            if net.is_activated(l - 1) {
                h.iter()
                    .enumerate()
                    .map(|(j, u)| {
                        let mut d = [S::zero(); 2];
                        net.act_derivatives(l - 1, j, *u, &mut d);
                        d[1]
                    })
                    .collect()
            } else {
                vec![S::one(); h.len()]
            }
        };
        let (dx, dy) = (deriv(&fx.pre[l - 1]), deriv(&fy.pre[l - 1]));
        // B = W D(x), C = W D(x'), then B K Cᵀ
        let scaled = |dv: &[S]| -> Vec<S> {
            let mut m = wl.to_vec();
            for row in m.chunks_exact_mut(cols) {
                for (v, s) in row.iter_mut().zip(dv) {
                    *v *= *s;
                }
            }
            m
        };
        let (b, cm) = (scaled(&dx), scaled(&dy));
        let mut bk = vec![S::zero(); rows * cols];
        for i in 0..rows {
            let out = &mut bk[i * cols..(i + 1) * cols];
            for (p, bip) in b[i * cols..(i + 1) * cols].iter().enumerate() {
                if *bip != S::zero() {
                    crate::scalar::axpy(*bip, &k[p * cols..(p + 1) * cols], out);
                }
            }
        }
        let c = diag_term(l);
        let mut next = vec![S::zero(); rows * rows];
        for i in 0..rows {
            for j in 0..rows {
                next[i * rows + j] = dot(&bk[i * cols..(i + 1) * cols], &cm[j * cols..(j + 1) * cols]);
            }
            next[i * rows + i] += c;
        }
        k = next;
    }
    let out = *w.last().expect("nonempty");
    if k.len() != out * out {
        return Err(Error::Input("kernel recursion shape mismatch".into()));
    }
    Ok(k.chunks_exact(out).map(|r| r.to_vec()).collect())
}
