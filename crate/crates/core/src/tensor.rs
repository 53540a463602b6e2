//! Dense real tensors and their subordinate (injective) and Frobenius norms.
//!
//! The subordinate norm of a rank-`r` tensor is the supremum of its full
//! contraction against one unit vector per mode. For `r = 1` it is the
//! Euclidean norm, for `r = 2` the largest singular value. For `r >= 3` it is
//! NP-hard in general; [`subordinate_norm`] runs alternating maximization
//! (higher-order power method) from several seeded starts and reports a
//! certified lower bound, while [`brute_force_norm`] searches a dense grid on
//! the product of spheres for tiny tensors and serves as the reference.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::{norm2, Scalar};

/// Row-major dense tensor. Rank 0 is a scalar with an empty shape.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor<S> {
    shape: Vec<usize>,
    values: Vec<S>,
}

impl<S: Scalar> DenseTensor<S> {
    pub fn new(shape: Vec<usize>, values: Vec<S>) -> Result<Self> {
        if shape.iter().any(|&e| e == 0) {
            return Err(Error::Input(format!("zero extent in shape {shape:?}")));
        }
        let expected: usize = shape.iter().product();
        if expected != values.len() {
            return Err(Error::Input(format!(
                "shape {shape:?} needs {expected} values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite entry at flat index {i}")));
        }
        Ok(Self { shape, values })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            values: vec![S::zero(); len],
        }
    }

    pub fn scalar(v: S) -> Result<Self> {
        Self::new(Vec::new(), vec![v])
    }

    pub fn vector(v: Vec<S>) -> Result<Self> {
        Self::new(vec![v.len()], v)
    }

    pub fn matrix(rows: usize, cols: usize, values: Vec<S>) -> Result<Self> {
        Self::new(vec![rows, cols], values)
    }

    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> S) -> Result<Self> {
        let len: usize = shape.iter().product();
        let mut values = Vec::with_capacity(len);
        let mut idx = vec![0usize; shape.len()];
        for flat in 0..len {
            if flat > 0 {
                increment(&mut idx, &shape);
            }
            values.push(f(&idx));
        }
        Self::new(shape, values)
    }

    /// Seeded tensor with i.i.d. standard normal entries.
    pub fn random_normal(shape: Vec<usize>, seed: u64) -> Self {
        let len = shape.iter().product();
        let mut r = rng::seeded(seed);
        Self {
            shape,
            values: rng::normal_vec(&mut r, len),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    pub fn strides(&self) -> Vec<usize> {
        strides(&self.shape)
    }

    pub fn get(&self, index: &[usize]) -> Result<S> {
        if index.len() != self.rank() || index.iter().zip(&self.shape).any(|(i, e)| i >= e) {
            return Err(Error::Input(format!(
                "index {index:?} out of bounds for shape {:?}",
                self.shape
            )));
        }
        let flat = index.iter().zip(self.strides()).map(|(i, s)| i * s).sum::<usize>();
        Ok(self.values[flat])
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == S::zero())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(S, S) -> S) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::Input(format!(
                "shape mismatch {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Self::new(
            self.shape.clone(),
            self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, factor: S) -> Self {
        Self {
            shape: self.shape.clone(),
            values: self.values.iter().map(|v| *v * factor).collect(),
        }
    }

    /// True when the tensor is invariant under every permutation of its modes.
    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        let r = self.rank();
        if r < 2 || self.shape.iter().any(|&e| e != self.shape[0]) {
            return false;
        }
        let scale = self
            .values
            .iter()
            .fold(0.0f64, |m, v| m.max(v.as_f64().abs()))
            .max(f64::MIN_POSITIVE);
        let st = self.strides();
        let mut idx = vec![0usize; r];
        for flat in 0..self.len() {
            if flat > 0 {
                increment(&mut idx, &self.shape);
            }
            // adjacent transpositions generate the symmetric group
            for k in 0..r - 1 {
                let mut swapped = idx.clone();
                swapped.swap(k, k + 1);
                let other: usize = swapped.iter().zip(&st).map(|(i, s)| i * s).sum();
                let diff = (self.values[flat] - self.values[other]).as_f64().abs();
                if diff > rel_tol * scale {
                    return false;
                }
            }
        }
        true
    }

    /// Debug dump: one row per entry, `i0,...,i{r-1},value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header: Vec<String> = (0..self.rank()).map(|k| format!("i{k}")).collect();
        if header.is_empty() {
            writeln!(out, "value")?;
        } else {
            writeln!(out, "{},value", header.join(","))?;
        }
        let mut idx = vec![0usize; self.rank()];
        for (flat, v) in self.values.iter().enumerate() {
            if flat > 0 {
                increment(&mut idx, &self.shape);
            }
            let mut row: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
            row.push(format!("{:e}", v.as_f64()));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn strides(shape: &[usize]) -> Vec<usize> {
    let mut st = vec![1usize; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        st[k] = st[k + 1] * shape[k + 1];
    }
    st
}

/// Row-major multi-index increment.
fn increment(idx: &mut [usize], shape: &[usize]) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return;
        }
        idx[k] = 0;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMethod {
    ExactMatrix,
    PowerIteration,
    BruteForce,
}

/// Value of a subordinate-norm computation and how it was obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate<S> {
    pub value: S,
    pub method: NormMethod,
    pub restarts: usize,
    pub iterations: usize,
    pub converged: bool,
    pub is_lower_bound: bool,
    /// One unit vector per mode attaining `value` (up to sign).
    pub maximizers: Vec<Vec<S>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormOptions {
    pub restarts: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self {
            restarts: 16,
            tol: 1e-10,
            max_iters: 500,
            seed: 0,
        }
    }
}

/// Frobenius norm: square root of the sum of squared entries.
pub fn frobenius_norm<S: Scalar>(m: &DenseTensor<S>) -> S {
    norm2(m.values())
}

/// Contract the listed modes of `m` with vectors; remaining modes keep their order.
pub fn contract<S: Scalar>(m: &DenseTensor<S>, vectors: &[(usize, &[S])]) -> Result<DenseTensor<S>> {
    let r = m.rank();
    let mut weights: Vec<Option<&[S]>> = vec![None; r];
    for (mode, v) in vectors {
        if *mode >= r {
            return Err(Error::Input(format!("mode {mode} out of range for rank {r}")));
        }
        if weights[*mode].is_some() {
            return Err(Error::Input(format!("mode {mode} contracted twice")));
        }
        if v.len() != m.shape[*mode] {
            return Err(Error::Input(format!(
                "vector of length {} on mode {mode} of extent {}",
                v.len(),
                m.shape[*mode]
            )));
        }
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::Input(format!("non-finite vector entry {i} on mode {mode}")));
        }
        weights[*mode] = Some(v);
    }
    let out_shape: Vec<usize> = (0..r).filter(|k| weights[*k].is_none()).map(|k| m.shape[k]).collect();
    let out_strides = strides(&out_shape);
    let free: Vec<usize> = (0..r).filter(|k| weights[*k].is_none()).collect();
    let mut out = vec![S::zero(); out_shape.iter().product()];
    let mut idx = vec![0usize; r];
    for (flat, &val) in m.values.iter().enumerate() {
        if flat > 0 {
            increment(&mut idx, &m.shape);
        }
        let mut w = val;
        for (k, wk) in weights.iter().enumerate() {
            if let Some(v) = wk {
                w *= v[idx[k]];
            }
        }
        let o: usize = free.iter().zip(&out_strides).map(|(k, s)| idx[*k] * s).sum();
        out[o] += w;
    }
    DenseTensor::new(out_shape, out)
}

/// Outer product; the result's shape is the concatenation of both shapes.
pub fn direct_product<S: Scalar>(a: &DenseTensor<S>, b: &DenseTensor<S>) -> DenseTensor<S> {
    let mut shape = a.shape.clone();
    shape.extend_from_slice(&b.shape);
    let mut values = Vec::with_capacity(a.len() * b.len());
    for x in &a.values {
        for y in &b.values {
            values.push(*x * *y);
        }
    }
    DenseTensor { shape, values }
}

/// Entrywise `p`-th power.
pub fn elementwise_power<S: Scalar>(m: &DenseTensor<S>, p: u32) -> Result<DenseTensor<S>> {
    if p == 0 {
        return Err(Error::Input("elementwise power needs p >= 1".into()));
    }
    DenseTensor::new(m.shape.clone(), m.values.iter().map(|v| v.powi(p as i32)).collect())
}

/// `sqrt(mean ||M||^2 / N)` over samples sharing one shape of `N` elements.
pub fn norm_expectation<S: Scalar>(samples: &[DenseTensor<S>], opts: &NormOptions) -> Result<S> {
    let first = samples
        .first()
        .ok_or_else(|| Error::Input("norm expectation needs at least one sample".into()))?;
    let mut acc = 0.0f64;
    for (i, s) in samples.iter().enumerate() {
        if s.shape != first.shape {
            return Err(Error::Input(format!(
                "sample {i} has shape {:?}, expected {:?}",
                s.shape, first.shape
            )));
        }
        let n = if s.rank() == 0 {
            s.values[0].abs()
        } else {
            subordinate_norm(s, opts)?.value
        };
        acc += n.as_f64().powi(2);
    }
    let count = first.len() as f64;
    Ok(S::of((acc / samples.len() as f64 / count).sqrt()))
}

fn check_norm_input<S: Scalar>(m: &DenseTensor<S>, opts: &NormOptions) -> Result<()> {
    if m.rank() == 0 {
        return Err(Error::Input(
            "subordinate norm is defined for rank >= 1; take |value| for scalars".into(),
        ));
    }
    if opts.restarts == 0 {
        return Err(Error::Input("restarts must be >= 1".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Input("tol must be > 0".into()));
    }
    if m.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("tensor has non-finite entries".into()));
    }
    Ok(())
}

/// Subordinate norm `sup M·(v¹ × … × vʳ)` over unit vectors.
///
/// Rank 1 is exact. Higher ranks use alternating maximization and report a
/// certified lower bound; fully symmetric tensors additionally run the
/// shared-vector iteration seeded from the best plain restart.
pub fn subordinate_norm<S: Scalar>(m: &DenseTensor<S>, opts: &NormOptions) -> Result<NormEstimate<S>> {
    check_norm_input(m, opts)?;
    if m.rank() == 1 {
        let value = norm2(m.values());
        let maximizer = if value > S::zero() {
            m.values.iter().map(|v| *v / value).collect()
        } else {
            unit(m.shape[0], 0)
        };
        return Ok(NormEstimate {
            value,
            method: NormMethod::ExactMatrix,
            restarts: 1,
            iterations: 0,
            converged: true,
            is_lower_bound: false,
            maximizers: vec![maximizer],
        });
    }
    if m.rank() >= 3 && m.is_symmetric(1e-12) {
        let fallback = plain_hopm(m, opts)?;
        let sym = symmetric_hopm(m, opts, Some(&fallback.maximizers[0]))?;
        return Ok(if sym.value >= fallback.value {
            NormEstimate {
                restarts: sym.restarts + fallback.restarts,
                iterations: sym.iterations + fallback.iterations,
                ..sym
            }
        } else {
            NormEstimate {
                restarts: sym.restarts + fallback.restarts,
                iterations: sym.iterations + fallback.iterations,
                ..fallback
            }
        });
    }
    plain_hopm(m, opts)
}

fn unit<S: Scalar>(len: usize, at: usize) -> Vec<S> {
    let mut v = vec![S::zero(); len];
    v[at] = S::one();
    v
}

/// Contract `m` with `vs[j]` on every mode `j != skip`.
fn contract_all_but<S: Scalar>(m: &DenseTensor<S>, vs: &[Vec<S>], skip: usize) -> Vec<S> {
    let r = m.rank();
    let mut out = vec![S::zero(); m.shape[skip]];
    let mut idx = vec![0usize; r];
    for (flat, &val) in m.values.iter().enumerate() {
        if flat > 0 {
            increment(&mut idx, &m.shape);
        }
        let mut w = val;
        for k in 0..r {
            if k != skip {
                w *= vs[k][idx[k]];
            }
        }
        out[idx[skip]] += w;
    }
    out
}

fn random_unit<S: Scalar>(r: &mut rng::Rng, len: usize) -> Vec<S> {
    rng::sphere_vec(r, len, 1.0)
}

/// Alternating maximization over all modes (plain higher-order power method).
///
/// The first restart starts from the leading unfolding vectors, the rest at random.
pub fn plain_hopm<S: Scalar>(m: &DenseTensor<S>, opts: &NormOptions) -> Result<NormEstimate<S>> {
    check_norm_input(m, opts)?;
    let r = m.rank();
    let mut best: Option<NormEstimate<S>> = None;
    let mut total_iters = 0;
    for restart in 0..opts.restarts {
        let mut g = rng::seeded(rng::mix(&[opts.seed, restart as u64, 0x484F_504D]));
        let mut vs: Vec<Vec<S>> = if restart == 0 {
            (0..r).map(|k| leading_unfolding_vector(m, k)).collect()
        } else {
            m.shape.iter().map(|&e| random_unit(&mut g, e)).collect()
        };
        let mut prev = f64::NEG_INFINITY;
        let mut obj = S::zero();
        let mut converged = false;
        let mut iters = 0;
        while iters < opts.max_iters {
            iters += 1;
            for k in 0..r {
                let u = contract_all_but(m, &vs, k);
                let nu = norm2(&u);
                // a zero contraction keeps the previous vector
                if nu > S::zero() {
                    vs[k] = u.iter().map(|x| *x / nu).collect();
                }
                obj = nu;
            }
            let o = obj.as_f64();
            if (o - prev).abs() < opts.tol * o.abs().max(1.0) {
                converged = true;
                break;
            }
            prev = o;
        }
        total_iters += iters;
        if best.as_ref().map_or(true, |b| obj > b.value) {
            best = Some(NormEstimate {
                value: obj,
                method: NormMethod::PowerIteration,
                restarts: opts.restarts,
                iterations: 0,
                converged,
                is_lower_bound: true,
                maximizers: vs,
            });
        }
    }
    let mut best = best.expect("restarts >= 1");
    best.iterations = total_iters;
    Ok(best)
}

/// Shared-vector iteration for fully symmetric tensors.
///
/// Shifted symmetric power iteration `v <- normalize(M v^{r-1} + α v)` with
/// `α = (r-1)·||M||_F`, which makes the objective monotone. Even ranks also
/// maximize `-M` so that the larger magnitude extremum is found.
pub fn symmetric_hopm<S: Scalar>(
    m: &DenseTensor<S>,
    opts: &NormOptions,
    init: Option<&[S]>,
) -> Result<NormEstimate<S>> {
    check_norm_input(m, opts)?;
    if !m.is_symmetric(1e-12) {
        return Err(Error::Input("symmetric iteration needs a symmetric tensor".into()));
    }
    let r = m.rank();
    let n = m.shape[0];
    let alpha = S::of((r - 1) as f64) * frobenius_norm(m);
    let signs: &[f64] = if r % 2 == 0 { &[1.0, -1.0] } else { &[1.0] };
    let mut starts: Vec<Vec<S>> = Vec::new();
    if let Some(v) = init {
        starts.push(v.to_vec());
    }
    starts.push(leading_unfolding_vector(m, 0));
    for restart in 0..opts.restarts {
        let mut g = rng::seeded(rng::mix(&[opts.seed, restart as u64, 0x5359_4D4D]));
        starts.push(random_unit(&mut g, n));
    }
    let mut best_val = S::neg_infinity();
    let mut best_v = unit(n, 0);
    let mut best_conv = false;
    let mut total_iters = 0;
    for start in &starts {
        for &sign in signs {
            let sgn = S::of(sign);
            let mut v = start.clone();
            let nv = norm2(&v);
            if nv == S::zero() {
                continue;
            }
            v.iter_mut().for_each(|x| *x /= nv);
            let mut prev = f64::NEG_INFINITY;
            let mut f = S::zero();
            let mut converged = false;
            let mut iters = 0;
            while iters < opts.max_iters {
                iters += 1;
                let vs: Vec<Vec<S>> = vec![v.clone(); r];
                let u = contract_all_but(m, &vs, 0);
                f = sgn * crate::scalar::dot(&u, &v);
                let mut w: Vec<S> = u.iter().zip(&v).map(|(ui, vi)| sgn * *ui + alpha * *vi).collect();
                let nw = norm2(&w);
                if nw > S::zero() {
                    w.iter_mut().for_each(|x| *x /= nw);
                    v = w;
                }
                let o = f.as_f64();
                if (o - prev).abs() < opts.tol * o.abs().max(1.0) {
                    converged = true;
                    break;
                }
                prev = o;
            }
            total_iters += iters;
            let vs: Vec<Vec<S>> = vec![v.clone(); r];
            let fin = crate::scalar::dot(&contract_all_but(m, &vs, 0), &v).abs();
            let val = fin.max(f.abs());
            if val > best_val {
                best_val = val;
                best_v = v;
                best_conv = converged;
            }
        }
    }
    Ok(NormEstimate {
        value: best_val.max(S::zero()),
        method: NormMethod::PowerIteration,
        restarts: starts.len(),
        iterations: total_iters,
        converged: best_conv,
        is_lower_bound: true,
        maximizers: vec![best_v; r],
    })
}

/// Dominant left singular vector of the mode-`mode` unfolding (HOSVD start).
fn leading_unfolding_vector<S: Scalar>(m: &DenseTensor<S>, mode: usize) -> Vec<S> {
    let n = m.shape[mode];
    let mut gram = vec![0.0f64; n * n];
    // fibres along `mode`: all other indices fixed
    let stride = m.strides()[mode];
    for (flat, _) in m.values.iter().enumerate() {
        if (flat / stride) % n != 0 {
            continue;
        }
        for i in 0..n {
            let ai = m.values[flat + i * stride].as_f64();
            for j in 0..n {
                gram[i * n + j] += ai * m.values[flat + j * stride].as_f64();
            }
        }
    }
    let (eig, vecs) = jacobi_eigen(&gram, n);
    let top = eig
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .map_or(0, |t| t.0);
    (0..n).map(|i| S::of(vecs[i * n + top])).collect()
}

/// Largest singular value of a matrix via Jacobi diagonalization of its Gram matrix.
pub fn spectral_norm_exact<S: Scalar>(m: &DenseTensor<S>) -> Result<NormEstimate<S>> {
    if m.rank() != 2 {
        return Err(Error::Input(format!(
            "exact spectral norm needs rank 2, got {}",
            m.rank()
        )));
    }
    let (rows, cols) = (m.shape[0], m.shape[1]);
    let a: Vec<f64> = m.values.iter().map(|v| v.as_f64()).collect();
    let mut gram = vec![0.0f64; cols * cols];
    for i in 0..cols {
        for j in 0..cols {
            gram[i * cols + j] = (0..rows).map(|k| a[k * cols + i] * a[k * cols + j]).sum();
        }
    }
    let (eig, vecs) = jacobi_eigen(&gram, cols);
    let (top, &lambda) = eig
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .expect("cols >= 1");
    let sigma = lambda.max(0.0).sqrt();
    let right: Vec<f64> = (0..cols).map(|i| vecs[i * cols + top]).collect();
    let mut left: Vec<f64> = (0..rows)
        .map(|k| (0..cols).map(|i| a[k * cols + i] * right[i]).sum())
        .collect();
    let nl = left.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nl > 0.0 {
        left.iter_mut().for_each(|x| *x /= nl);
    } else {
        left = vec![0.0; rows];
        left[0] = 1.0;
    }
    Ok(NormEstimate {
        value: S::of(sigma),
        method: NormMethod::ExactMatrix,
        restarts: 1,
        iterations: 0,
        converged: true,
        is_lower_bound: false,
        maximizers: vec![
            left.into_iter().map(S::of).collect(),
            right.into_iter().map(S::of).collect(),
        ],
    })
}

/// Cyclic Jacobi eigen-decomposition of a symmetric `n×n` matrix.
/// Returns eigenvalues and column eigenvectors (row-major `n×n`).
pub(crate) fn jacobi_eigen(sym: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = sym.to_vec();
    let mut v = vec![0.0f64; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        let diag: f64 = (0..n).map(|i| a[i * n + i] * a[i * n + i]).sum();
        if off <= 1e-30 * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}

/// Limits for [`brute_force_norm`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BruteForceCap {
    pub max_extent: usize,
    pub max_rank: usize,
    /// Total number of sphere angles searched (modes after the first).
    pub max_angles: usize,
}

impl Default for BruteForceCap {
    fn default() -> Self {
        Self {
            max_extent: 4,
            max_rank: 4,
            max_angles: 6,
        }
    }
}

/// Grid search over products of unit spheres with local coordinate-ascent refinement.
///
/// The first mode is maximized in closed form (the norm of the remaining
/// contraction), so only modes `1..r` are gridded, each on a hemisphere in
/// hyperspherical angles with `grid_density` points per angle.
pub fn brute_force_norm<S: Scalar>(m: &DenseTensor<S>, grid_density: usize) -> Result<NormEstimate<S>> {
    brute_force_norm_capped(m, grid_density, BruteForceCap::default())
}

pub fn brute_force_norm_capped<S: Scalar>(
    m: &DenseTensor<S>,
    grid_density: usize,
    cap: BruteForceCap,
) -> Result<NormEstimate<S>> {
    if m.rank() == 0 {
        return Err(Error::Input("brute force norm needs rank >= 1".into()));
    }
    if grid_density < 2 {
        return Err(Error::Input("grid density must be >= 2".into()));
    }
    if m.rank() > cap.max_rank || m.shape.iter().any(|&e| e > cap.max_extent) {
        return Err(Error::Size(format!(
            "shape {:?} exceeds brute-force cap (rank <= {}, extents <= {})",
            m.shape, cap.max_rank, cap.max_extent
        )));
    }
    let angles_per_mode: Vec<usize> = m.shape[1..].iter().map(|e| e - 1).collect();
    let total_angles: usize = angles_per_mode.iter().sum();
    if total_angles > cap.max_angles {
        return Err(Error::Size(format!(
            "{total_angles} sphere angles exceed cap {}",
            cap.max_angles
        )));
    }
    let a: Vec<f64> = m.values.iter().map(|v| v.as_f64()).collect();
    let shape = m.shape.clone();

    let objective = |angles: &[f64]| -> (f64, Vec<Vec<f64>>) {
        let mut vs = Vec::with_capacity(shape.len() - 1);
        let mut off = 0;
        for &na in &angles_per_mode {
            vs.push(sphere_point(&angles[off..off + na]));
            off += na;
        }
        let u = contract_tail(&a, &shape, &vs);
        (u.iter().map(|x| x * x).sum::<f64>().sqrt(), vs)
    };

    // grid points per angle: the last angle of each sphere spans [0, π), others [0, π]
    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(total_angles);
    for &na in &angles_per_mode {
        for j in 0..na {
            let pts: Vec<f64> = if j + 1 == na {
                (0..grid_density)
                    .map(|t| t as f64 * std::f64::consts::PI / grid_density as f64)
                    .collect()
            } else {
                (0..grid_density)
                    .map(|t| t as f64 * std::f64::consts::PI / (grid_density - 1) as f64)
                    .collect()
            };
            axes.push(pts);
        }
    }

    // refine from the best grid-local maxima, which sit in distinct basins
    const KEEP: usize = 8;
    let total_points = grid_density.pow(total_angles as u32);
    let mut values = Vec::with_capacity(total_points);
    let mut counter = vec![0usize; total_angles];
    let sizes = vec![grid_density; total_angles];
    let mut angles = vec![0.0f64; total_angles];
    for p in 0..total_points {
        if p > 0 {
            increment(&mut counter, &sizes);
        }
        for (k, c) in counter.iter().enumerate() {
            angles[k] = axes[k][*c];
        }
        values.push(objective(&angles).0);
    }
    let mut evaluations = total_points;
    let decode = |mut p: usize| -> Vec<usize> {
        let mut idx = vec![0usize; total_angles];
        for k in (0..total_angles).rev() {
            idx[k] = p % grid_density;
            p /= grid_density;
        }
        idx
    };
    let mut peaks: Vec<usize> = (0..total_points)
        .filter(|&p| {
            let idx = decode(p);
            let mut stride = 1;
            for k in (0..total_angles).rev() {
                let up = idx[k] + 1 < grid_density && values[p + stride] > values[p];
                let down = idx[k] > 0 && values[p - stride] > values[p];
                if up || down {
                    return false;
                }
                stride *= grid_density;
            }
            true
        })
        .collect();
    peaks.sort_by(|a, b| values[*b].total_cmp(&values[*a]));
    peaks.truncate(KEEP);
    let best: Vec<(f64, Vec<f64>)> = peaks
        .into_iter()
        .map(|p| {
            (
                values[p],
                decode(p).iter().enumerate().map(|(k, c)| axes[k][*c]).collect(),
            )
        })
        .collect();

    let step0 = std::f64::consts::PI / (grid_density - 1) as f64;
    let mut overall = (f64::NEG_INFINITY, Vec::new());
    for (mut val, mut ang) in best {
        let mut step = step0;
        let mut guard = 0;
        while step > 1e-11 && guard < 200_000 {
            guard += 1;
            let mut improved = false;
            for k in 0..ang.len() {
                for dir in [1.0, -1.0] {
                    let mut trial = ang.clone();
                    trial[k] += dir * step;
                    let (tv, _) = objective(&trial);
                    evaluations += 1;
                    if tv > val {
                        val = tv;
                        ang = trial;
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        if val > overall.0 {
            overall = (val, ang);
        }
    }
    let (value, vs_tail) = objective(&overall.1);
    let mut first = contract_tail(&a, &shape, &vs_tail);
    let nf = first.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nf > 0.0 {
        first.iter_mut().for_each(|x| *x /= nf);
    } else {
        first = vec![0.0; shape[0]];
        first[0] = 1.0;
    }
    let mut maximizers = vec![first.into_iter().map(S::of).collect::<Vec<S>>()];
    maximizers.extend(vs_tail.into_iter().map(|v| v.into_iter().map(S::of).collect()));
    Ok(NormEstimate {
        value: S::of(value),
        method: NormMethod::BruteForce,
        restarts: 1,
        iterations: evaluations,
        converged: true,
        is_lower_bound: false,
        maximizers,
    })
}

/// Point on the unit sphere in `R^{angles.len()+1}` from hyperspherical angles.
fn sphere_point(angles: &[f64]) -> Vec<f64> {
    let m = angles.len() + 1;
    let mut out = vec![0.0; m];
    let mut sin_prod = 1.0;
    for (k, a) in angles.iter().enumerate() {
        out[k] = sin_prod * a.cos();
        sin_prod *= a.sin();
    }
    out[m - 1] = sin_prod;
    out
}

/// Contract modes `1..r` of a row-major tensor with `vs`, leaving mode 0.
fn contract_tail(a: &[f64], shape: &[usize], vs: &[Vec<f64>]) -> Vec<f64> {
    let mut cur = a.to_vec();
    let mut cur_len = a.len();
    for k in (1..shape.len()).rev() {
        let e = shape[k];
        let outer = cur_len / e;
        let v = &vs[k - 1];
        let mut next = vec![0.0; outer];
        for (o, slot) in next.iter_mut().enumerate() {
            let row = &cur[o * e..(o + 1) * e];
            *slot = row.iter().zip(v).map(|(x, y)| x * y).sum();
        }
        cur = next;
        cur_len = outer;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_tensor_has_zero_norm() {
        let z = DenseTensor::<f64>::zeros(vec![3, 3, 3]);
        let est = subordinate_norm(&z, &NormOptions::default()).unwrap();
        assert_eq!(est.value, 0.0);
        assert!(est.is_lower_bound);
    }

    #[test]
    fn rank_one_product_of_unit_vectors_has_norm_one() {
        let u = DenseTensor::vector(vec![0.6, 0.8, 0.0]).unwrap();
        let w = DenseTensor::vector(vec![0.0, 1.0, 0.0]).unwrap();
        let z = DenseTensor::vector(vec![1.0 / 2f64.sqrt(), 0.0, -1.0 / 2f64.sqrt()]).unwrap();
        let m = direct_product(&direct_product(&u, &w), &z);
        let est = subordinate_norm(&m, &NormOptions::default()).unwrap();
        assert_relative_eq!(est.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn vector_norms_agree() {
        let v = DenseTensor::vector(vec![3.0, 4.0]).unwrap();
        assert_eq!(frobenius_norm(&v), 5.0);
        let est = subordinate_norm(&v, &NormOptions::default()).unwrap();
        assert_eq!(est.value, 5.0);
        assert_eq!(est.method, NormMethod::ExactMatrix);
    }

    #[test]
    fn identity_matrix_norms() {
        let id = DenseTensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_relative_eq!(frobenius_norm(&id), 2f64.sqrt());
        let est = subordinate_norm(&id, &NormOptions::default()).unwrap();
        assert_relative_eq!(est.value, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn rank_zero_and_non_finite_are_rejected() {
        let s = DenseTensor::scalar(2.0).unwrap();
        assert!(matches!(
            subordinate_norm(&s, &NormOptions::default()),
            Err(Error::Input(_))
        ));
        assert!(DenseTensor::new(vec![2], vec![1.0, f64::NAN]).is_err());
        assert!(DenseTensor::new(vec![2, 2], vec![1.0; 3]).is_err());
    }

    #[test]
    fn brute_force_small_cases() {
        let d = DenseTensor::matrix(2, 2, vec![2.0, 0.0, 0.0, 1.0]).unwrap();
        assert_relative_eq!(brute_force_norm(&d, 16).unwrap().value, 2.0, epsilon = 1e-10);
        let u = DenseTensor::vector(vec![2.0, 0.0, 0.0]).unwrap();
        let w = DenseTensor::vector(vec![1.0, 2.0, 2.0]).unwrap();
        let m = direct_product(&u, &w);
        assert_relative_eq!(brute_force_norm(&m, 16).unwrap().value, 6.0, epsilon = 1e-9);
    }

    #[test]
    fn brute_force_cap_is_enforced() {
        let big = DenseTensor::<f64>::zeros(vec![5, 2]);
        assert!(matches!(brute_force_norm(&big, 8), Err(Error::Size(_))));
        let many = DenseTensor::<f64>::zeros(vec![4, 4, 4, 4]);
        assert!(matches!(brute_force_norm(&many, 8), Err(Error::Size(_))));
    }

    #[test]
    fn contraction_examples() {
        let id = DenseTensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let e1 = [1.0, 0.0];
        let c = contract(&id, &[(0, &e1)]).unwrap();
        assert_eq!(c.values(), &[1.0, 0.0]);
        let zero = [0.0, 0.0];
        let c = contract(&id, &[(1, &zero)]).unwrap();
        assert!(c.is_zero());
        assert!(contract(&id, &[(0, &[1.0, 0.0, 0.0][..])]).is_err());
        assert!(contract(&id, &[(0, &e1), (0, &e1)]).is_err());
    }

    #[test]
    fn contraction_with_maximizers_recovers_norm() {
        let m = DenseTensor::<f64>::random_normal(vec![3, 3, 3], 11);
        let est = subordinate_norm(&m, &NormOptions::default()).unwrap();
        let vs: Vec<(usize, &[f64])> = est
            .maximizers
            .iter()
            .enumerate()
            .map(|(k, v)| (k, v.as_slice()))
            .collect();
        let s = contract(&m, &vs).unwrap();
        assert_eq!(s.rank(), 0);
        assert_relative_eq!(s.values()[0].abs(), est.value, epsilon = 1e-9);
    }

    #[test]
    fn direct_product_examples() {
        let a = DenseTensor::vector(vec![2.0]).unwrap();
        let b = DenseTensor::vector(vec![3.0]).unwrap();
        let p = direct_product(&a, &b);
        assert_eq!(p.shape(), &[1, 1]);
        assert_relative_eq!(
            subordinate_norm(&p, &NormOptions::default()).unwrap().value,
            6.0,
            epsilon = 1e-12
        );
        let z = DenseTensor::vector(vec![0.0, 0.0]).unwrap();
        assert!(direct_product(&z, &b).is_zero());
    }

    #[test]
    fn seeded_product_law_with_exact_formulas() {
        let a = DenseTensor::<f64>::random_normal(vec![2, 2], 5);
        let b = DenseTensor::<f64>::random_normal(vec![3], 6);
        let p = direct_product(&a, &b);
        let lhs = subordinate_norm(&p, &NormOptions::default()).unwrap().value;
        let rhs = spectral_norm_exact(&a).unwrap().value * frobenius_norm(&b);
        assert_relative_eq!(lhs, rhs, max_relative = 1e-8);
    }

    #[test]
    fn norm_expectation_examples() {
        let unit = DenseTensor::vector(vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        let ne = norm_expectation(&[unit], &NormOptions::default()).unwrap();
        assert_relative_eq!(ne, 0.5);
        let z = DenseTensor::<f64>::zeros(vec![4]);
        assert_eq!(norm_expectation(&[z.clone(), z], &NormOptions::default()).unwrap(), 0.0);
        let mismatched = [DenseTensor::<f64>::zeros(vec![4]), DenseTensor::zeros(vec![3])];
        assert!(norm_expectation(&mismatched, &NormOptions::default()).is_err());
        assert!(norm_expectation::<f64>(&[], &NormOptions::default()).is_err());
    }

    #[test]
    fn normal_vectors_have_unit_norm_expectation() {
        let samples: Vec<_> = (0..200)
            .map(|s| DenseTensor::<f64>::random_normal(vec![64], 1000 + s))
            .collect();
        let ne = norm_expectation(&samples, &NormOptions::default()).unwrap();
        assert!((ne - 1.0).abs() < 0.05, "{ne}");
    }

    #[test]
    fn elementwise_power_examples() {
        let v = DenseTensor::vector(vec![1.0, -2.0]).unwrap();
        assert_eq!(elementwise_power(&v, 1).unwrap(), v);
        assert_eq!(elementwise_power(&v, 2).unwrap().values(), &[1.0, 4.0]);
        assert!(elementwise_power(&v, 0).is_err());
    }

    #[test]
    fn spectral_norm_exact_matches_power_iteration() {
        let m = DenseTensor::<f64>::random_normal(vec![5, 3], 3);
        let exact = spectral_norm_exact(&m).unwrap().value;
        let it = subordinate_norm(&m, &NormOptions::default()).unwrap().value;
        assert_relative_eq!(exact, it, max_relative = 1e-9);
    }

    #[test]
    fn csv_dump_has_one_row_per_entry() {
        let m = DenseTensor::<f64>::random_normal(vec![2, 3], 1);
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "i0,i1,value");
        assert_eq!(lines.len(), 7);
        assert!(lines[6].starts_with("1,2,"));
    }

    #[test]
    fn works_in_single_precision() {
        let m = DenseTensor::<f32>::random_normal(vec![3, 3], 9);
        let est = subordinate_norm(&m, &NormOptions::default()).unwrap();
        assert!(est.value <= frobenius_norm(&m) + 1e-5);
    }
}
