//! Multilinear jets: subset-indexed mixed partials propagated layer by layer.
//!
//! For directions `v_1..v_k`, the coefficient `c_S` of a layer is
//! `∂^{|S|} F^{(l)}(θ + Σ t_j v_j) / ∏_{j∈S} ∂t_j` at `t = 0`. Subsets are
//! bitmasks over `0..k`.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::network::{Fcnn, Hypothesis, QuadraticPerp};
use crate::scalar::{dot, Scalar};

/// Largest supported number of directions.
pub const MAX_DIRECTIONS: usize = 4;

/// Set partitions of every mask below `2^MAX_DIRECTIONS`, as lists of block masks.
pub fn partitions(mask: usize) -> &'static [Vec<usize>] {
    static TABLE: OnceLock<Vec<Vec<Vec<usize>>>> = OnceLock::new();
    &TABLE.get_or_init(|| (0..1 << MAX_DIRECTIONS).map(build_partitions).collect())[mask]
}

fn build_partitions(mask: usize) -> Vec<Vec<usize>> {
    if mask == 0 {
        return vec![Vec::new()];
    }
    let low = mask & mask.wrapping_neg();
    let rest = mask ^ low;
    let mut out = Vec::new();
    // every block containing the lowest element
    let mut sub = rest;
    loop {
        let block = low | sub;
        for mut p in build_partitions(rest & !sub) {
            p.insert(0, block);
            out.push(p);
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & rest;
    }
    out
}

/// Mixed-partial coefficients of every layer.
#[derive(Clone, Debug)]
pub struct JetBundle<S> {
    pub k: usize,
    /// `pre[l][S]`: coefficients of `F^{(l)}`, `l = 0..=L`.
    pub pre: Vec<Vec<Vec<S>>>,
    /// `post[l][S]`: coefficients of the (possibly activated) layer `l` fed forward, `l = 0..L`.
    pub post: Vec<Vec<Vec<S>>>,
}

impl<S: Scalar> JetBundle<S> {
    pub fn full_mask(&self) -> usize {
        (1 << self.k) - 1
    }

    /// `∂^k F / ∂t_1..∂t_k` for every output.
    pub fn top(&self) -> &[S] {
        &self.pre.last().expect("output layer")[self.full_mask()]
    }

    pub fn coefficient(&self, layer: usize, mask: usize) -> &[S] {
        &self.pre[layer][mask]
    }
}

/// Models with exact directional derivatives of any order up to [`MAX_DIRECTIONS`].
pub trait JetModel<S: Scalar>: Hypothesis<S> {
    fn jet_forward(&self, theta: &[S], x: &[S], dirs: &[&[S]]) -> Result<JetBundle<S>>;

    /// `∇θ ⟨cot, ∂^k F/∂t_1..∂t_k⟩` with the directions held fixed.
    fn mixed_partial_grad(&self, theta: &[S], x: &[S], dirs: &[&[S]], cot: &[S]) -> Result<Vec<S>>;

    fn mixed_partial(&self, theta: &[S], x: &[S], dirs: &[&[S]]) -> Result<Vec<S>> {
        Ok(self.jet_forward(theta, x, dirs)?.top().to_vec())
    }
}

pub(crate) fn check_dirs<S: Scalar>(n: usize, dirs: &[&[S]]) -> Result<()> {
    if dirs.len() > MAX_DIRECTIONS {
        return Err(Error::UnsupportedOrder(format!(
            "{} directions, at most {MAX_DIRECTIONS} supported",
            dirs.len()
        )));
    }
    if let Some(d) = dirs.iter().find(|d| d.len() != n) {
        return Err(Error::Input(format!("direction of length {}, expected {n}", d.len())));
    }
    Ok(())
}

fn is_zero<S: Scalar>(v: &[S]) -> bool {
    v.iter().all(|x| *x == S::zero())
}

impl<S: Scalar> Fcnn<S> {
    fn layer_is_zero(&self, v: &[S], l: usize) -> bool {
        let (wo, bo) = self.layer_offsets(l);
        let w = self.widths();
        is_zero(&v[wo..wo + w[l] * w[l - 1]]) && bo.map_or(true, |b| is_zero(&v[b..b + w[l]]))
    }

    /// `Σ_π φ^{(|π|)}(h_∅) ∏_{B∈π} h_B` for every mask, one neuron at a time.
    fn activation_jet(&self, l: usize, h: &[Vec<S>], k: usize) -> Vec<Vec<S>> {
        let masks = 1 << k;
        if !self.is_activated(l) {
            return h.to_vec();
        }
        let n = h[0].len();
        let mut out = vec![vec![S::zero(); n]; masks];
        let mut d = [S::zero(); MAX_DIRECTIONS + 2];
        for j in 0..n {
            self.act_derivatives(l, j, h[0][j], &mut d[..=k]);
            for (mask, o) in out.iter_mut().enumerate() {
                let mut acc = S::zero();
                for p in partitions(mask) {
                    let mut term = d[p.len()];
                    for b in p {
                        term *= h[*b][j];
                    }
                    acc += term;
                }
                o[j] = acc;
            }
        }
        out
    }
}

impl<S: Scalar> JetModel<S> for Fcnn<S> {
    fn jet_forward(&self, theta: &[S], x: &[S], dirs: &[&[S]]) -> Result<JetBundle<S>> {
        check_dirs(self.param_count(), dirs)?;
        if theta.len() != self.param_count() || x.len() != self.input_dim() {
            return Err(Error::Input("parameter or input length mismatch".into()));
        }
        let k = dirs.len();
        let masks = 1 << k;
        let widths = self.widths().to_vec();
        let mut h0 = vec![vec![S::zero(); widths[0]]; masks];
        h0[0] = x.to_vec();
        let mut pre = vec![h0];
        let mut post = Vec::new();
        for l in 1..widths.len() {
            let a = self.activation_jet(l - 1, &pre[l - 1], k);
            let live: Vec<bool> = dirs.iter().map(|v| !self.layer_is_zero(v, l)).collect();
            let (_, bo) = self.layer_offsets(l);
            let mut h = Vec::with_capacity(masks);
            for mask in 0..masks {
                let mut acc = if mask == 0 || !is_zero(&a[mask]) {
                    self.affine(theta, l, &a[mask], mask == 0)
                } else {
                    vec![S::zero(); widths[l]]
                };
                for (j, v) in dirs.iter().enumerate() {
                    if mask & (1 << j) == 0 || !live[j] {
                        continue;
                    }
                    let rest = mask ^ (1 << j);
                    if !is_zero(&a[rest]) {
                        let t = self.affine(v, l, &a[rest], false);
                        for (o, t) in acc.iter_mut().zip(&t) {
                            *o += *t;
                        }
                    }
                    if let (0, Some(bo)) = (rest, bo) {
                        for (o, b) in acc.iter_mut().zip(&v[bo..bo + widths[l]]) {
                            *o += *b;
                        }
                    }
                }
                h.push(acc);
            }
            pre.push(h);
            post.push(a);
        }
        Ok(JetBundle { k, pre, post })
    }

    fn mixed_partial_grad(&self, theta: &[S], x: &[S], dirs: &[&[S]], cot: &[S]) -> Result<Vec<S>> {
        if cot.len() != self.output_dim() {
            return Err(Error::Input("cotangent length differs from output dimension".into()));
        }
        let jet = self.jet_forward(theta, x, dirs)?;
        let k = jet.k;
        let masks = 1 << k;
        let full = masks - 1;
        let widths = self.widths().to_vec();
        let depth = widths.len() - 1;
        let mut grad = vec![S::zero(); self.param_count()];
        let mut hbar = vec![vec![S::zero(); widths[depth]]; masks];
        hbar[full] = cot.to_vec();
        let mut d = [S::zero(); MAX_DIRECTIONS + 2];
        for l in (1..=depth).rev() {
            let (wo, bo) = self.layer_offsets(l);
            let cols = widths[l - 1];
            let a = &jet.post[l - 1];
            for mask in 0..masks {
                if is_zero(&hbar[mask]) || is_zero(&a[mask]) {
                    continue;
                }
                for (i, hb) in hbar[mask].iter().enumerate() {
                    if *hb != S::zero() {
                        crate::scalar::axpy(*hb, &a[mask], &mut grad[wo + i * cols..wo + (i + 1) * cols]);
                    }
                }
            }
            if let Some(bo) = bo {
                for (i, hb) in hbar[0].iter().enumerate() {
                    grad[bo + i] += *hb;
                }
            }
            if l == 1 {
                break;
            }
            // ā_S = W_lᵀ h̄_S + Σ_{j∉S} V_jᵀ h̄_{S∪j}
            let mut abar: Vec<Vec<S>> = (0..masks)
                .map(|mask| {
                    let mut acc = if is_zero(&hbar[mask]) {
                        vec![S::zero(); cols]
                    } else {
                        self.affine_transpose(theta, l, &hbar[mask])
                    };
                    for (j, v) in dirs.iter().enumerate() {
                        let up = mask | (1 << j);
                        if up == mask || is_zero(&hbar[up]) {
                            continue;
                        }
                        let t = self.affine_transpose(v, l, &hbar[up]);
                        for (o, t) in acc.iter_mut().zip(&t) {
                            *o += *t;
                        }
                    }
                    acc
                })
                .collect();
            if !self.is_activated(l - 1) {
                hbar = abar;
                continue;
            }
            let h = &jet.pre[l - 1];
            let mut next = vec![vec![S::zero(); cols]; masks];
            for j in 0..cols {
                self.act_derivatives(l - 1, j, h[0][j], &mut d[..=k + 1]);
                for (mask, ab) in abar.iter_mut().enumerate() {
                    let c = ab[j];
                    if c == S::zero() {
                        continue;
                    }
                    for p in partitions(mask) {
                        let mut prod = S::one();
                        for b in p {
                            prod *= h[*b][j];
                        }
                        next[0][j] += c * d[p.len() + 1] * prod;
                        for (bi, b) in p.iter().enumerate() {
                            let mut others = d[p.len()];
                            for (bj, b2) in p.iter().enumerate() {
                                if bi != bj {
                                    others *= h[*b2][j];
                                }
                            }
                            next[*b][j] += c * others;
                        }
                    }
                }
            }
            hbar = next;
        }
        Ok(grad)
    }
}

impl<S: Scalar> JetModel<S> for QuadraticPerp<S> {
    fn jet_forward(&self, theta: &[S], x: &[S], dirs: &[&[S]]) -> Result<JetBundle<S>> {
        check_dirs(self.param_count(), dirs)?;
        let z0 = self.output(theta, x)?;
        let (f, g) = self.features(x)?;
        let k = dirs.len();
        let alpha = dot(theta, &g);
        let beta: Vec<S> = dirs.iter().map(|v| dot(v, &g)).collect();
        let gamma: Vec<S> = dirs.iter().map(|v| dot(v, &f)).collect();
        let two = S::of(2.0);
        let coeffs = (0..1usize << k)
            .map(|mask| {
                let idx: Vec<usize> = (0..k).filter(|j| mask & (1 << j) != 0).collect();
                let c = match idx.as_slice() {
                    [] => z0[0],
                    [j] => gamma[*j] + two * alpha * beta[*j],
                    [i, j] => two * beta[*i] * beta[*j],
                    _ => S::zero(),
                };
                vec![c]
            })
            .collect();
        Ok(JetBundle {
            k,
            pre: vec![coeffs],
            post: Vec::new(),
        })
    }

    fn mixed_partial_grad(&self, theta: &[S], x: &[S], dirs: &[&[S]], cot: &[S]) -> Result<Vec<S>> {
        check_dirs(self.param_count(), dirs)?;
        if cot.len() != 1 || theta.len() != self.param_count() {
            return Err(Error::Input("cotangent or parameter length mismatch".into()));
        }
        let (f, g) = self.features(x)?;
        let two = S::of(2.0);
        // ∇θ of the k-th coefficient: f + 2αg, then 2β_j g, then constants
        let scale = match dirs.len() {
            0 => {
                let a = two * dot(theta, &g);
                return Ok(f.iter().zip(&g).map(|(fi, gi)| cot[0] * (*fi + a * *gi)).collect());
            }
            1 => two * dot(dirs[0], &g),
            _ => S::zero(),
        };
        Ok(g.iter().map(|gi| cot[0] * scale * *gi).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_counts_are_bell_numbers() {
        assert_eq!(partitions(0).len(), 1);
        assert_eq!(partitions(0b1).len(), 1);
        assert_eq!(partitions(0b11).len(), 2);
        assert_eq!(partitions(0b111).len(), 5);
        assert_eq!(partitions(0b1111).len(), 15);
        assert_eq!(partitions(0b1010).len(), 2);
        for mask in 0..16 {
            for p in partitions(mask) {
                assert_eq!(p.iter().fold(0, |acc, b| acc | b), mask);
                assert_eq!(p.iter().map(|b: &usize| b.count_ones()).sum::<u32>(), mask.count_ones());
            }
        }
    }
}
