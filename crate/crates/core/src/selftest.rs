//! Seeded invariant battery for the tensor norms.
//!
//! Shared by the test suite and the `norm-selftest` subcommand.

use serde::Serialize;

use crate::rng;
use crate::tensor::{
    brute_force_norm, contract, direct_product, frobenius_norm, plain_hopm, subordinate_norm, DenseTensor, NormOptions,
};

/// Deliberate corruption used to check that the battery can fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Flip the sign of the product-law right-hand side.
    ProductSign,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvariantOutcome {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    /// Largest violation observed, in the invariant's own units.
    pub worst: f64,
    pub detail: String,
}

impl InvariantOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

struct Tally {
    name: &'static str,
    cases: usize,
    failures: usize,
    worst: f64,
    detail: String,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            cases: 0,
            failures: 0,
            worst: f64::NEG_INFINITY,
            detail: String::new(),
        }
    }

    /// `excess > 0` is a violation.
    fn record(&mut self, excess: f64, what: impl FnOnce() -> String) {
        self.cases += 1;
        if excess > self.worst {
            self.worst = excess;
        }
        if excess > 0.0 || excess.is_nan() {
            self.failures += 1;
            if self.detail.is_empty() {
                self.detail = what();
            }
        }
    }

    fn finish(self) -> InvariantOutcome {
        InvariantOutcome {
            name: self.name,
            cases: self.cases,
            failures: self.failures,
            worst: self.worst,
            detail: self.detail,
        }
    }
}

const SHAPES: &[&[usize]] = &[
    &[3, 3, 3],
    &[2, 3, 4],
    &[4, 4],
    &[2, 2, 2, 2],
    &[3, 2, 4],
    &[4, 3],
    &[3, 3],
    &[2, 4, 2],
];

fn shape_for(case: usize) -> Vec<usize> {
    SHAPES[case % SHAPES.len()].to_vec()
}

fn symmetrize(m: &DenseTensor<f64>) -> DenseTensor<f64> {
    let r = m.rank();
    let shape = m.shape().to_vec();
    let perms = permutations(r);
    DenseTensor::from_fn(shape, |idx| {
        let mut acc = 0.0;
        for p in &perms {
            let permuted: Vec<usize> = p.iter().map(|&k| idx[k]).collect();
            acc += m.get(&permuted).expect("in bounds");
        }
        acc / perms.len() as f64
    })
    .expect("finite")
}

fn permutations(r: usize) -> Vec<Vec<usize>> {
    if r == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(r - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, r - 1);
            out.push(q);
        }
    }
    out
}

/// The primary tensor `A` of each battery case, for debug dumps.
pub fn battery_tensors(cases: usize, seed: u64) -> Vec<DenseTensor<f64>> {
    (0..cases)
        .map(|case| {
            let cs = rng::mix(&[seed, case as u64]);
            DenseTensor::random_normal(shape_for(case), rng::mix(&[cs, 1]))
        })
        .collect()
}

/// Run every norm invariant over `cases` seeded tensors each.
pub fn run_norm_battery(cases: usize, seed: u64, fault: Option<Fault>) -> Vec<InvariantOutcome> {
    let opts = NormOptions {
        seed,
        ..NormOptions::default()
    };
    let norm = |m: &DenseTensor<f64>| subordinate_norm(m, &opts).expect("valid tensor").value;

    let mut triangle = Tally::new("triangle inequality");
    let mut contraction = Tally::new("contraction bound");
    let mut product = Tally::new("product law");
    let mut dominance = Tally::new("frobenius dominance");
    let mut rank_one = Tally::new("rank-1 frobenius equality");
    let mut oracle = Tally::new("brute-force oracle agreement");
    let mut symmetric = Tally::new("symmetric maximizer");

    for case in 0..cases {
        let cs = rng::mix(&[seed, case as u64]);
        let shape = shape_for(case);
        let a = DenseTensor::<f64>::random_normal(shape.clone(), rng::mix(&[cs, 1]));
        let b = DenseTensor::<f64>::random_normal(shape.clone(), rng::mix(&[cs, 2]));

        let (na, nb) = (norm(&a), norm(&b));
        let nab = norm(&a.add(&b).expect("same shape"));
        triangle.record(nab - (na + nb) - 1e-8, || {
            format!("case {case}: ||A+B|| = {nab} > {na} + {nb}")
        });

        let mut g = rng::seeded(rng::mix(&[cs, 3]));
        let units: Vec<Vec<f64>> = shape.iter().map(|&e| rng::sphere_vec(&mut g, e, 1.0)).collect();
        // contract a nonempty proper subset of modes when possible
        let upto = (case % shape.len()).max(1).min(shape.len() - 1).max(1);
        let pairs: Vec<(usize, &[f64])> = (0..upto).map(|k| (k, units[k].as_slice())).collect();
        let reduced = contract(&a, &pairs).expect("shapes match");
        let nr = if reduced.rank() == 0 {
            reduced.values()[0].abs()
        } else {
            norm(&reduced)
        };
        contraction.record(nr - na - 1e-8, || format!("case {case}: ||M·v|| = {nr} > ||M|| = {na}"));

        let small = DenseTensor::<f64>::random_normal(vec![2 + case % 2, 2], rng::mix(&[cs, 4]));
        let vec3 = DenseTensor::<f64>::random_normal(vec![3], rng::mix(&[cs, 5]));
        let p = direct_product(&small, &vec3);
        let (np, ns, nv) = (norm(&p), norm(&small), norm(&vec3));
        let rhs = match fault {
            Some(Fault::ProductSign) => -ns * nv,
            None => ns * nv,
        };
        product.record((np - rhs).abs() - 1e-6 * (ns * nv).abs(), || {
            format!("case {case}: ||A×B|| = {np}, ||A||·||B|| = {rhs}")
        });

        let fa = frobenius_norm(&a);
        dominance.record(na - fa - 1e-10, || {
            format!("case {case}: ||M|| = {na} > ||M||_F = {fa}")
        });

        let v = DenseTensor::<f64>::random_normal(vec![2 + case % 5], rng::mix(&[cs, 6]));
        let (nv1, fv1) = (norm(&v), frobenius_norm(&v));
        rank_one.record((nv1 - fv1).abs() - 1e-12 * fv1, || {
            format!("case {case}: rank-1 ||v|| = {nv1} vs {fv1}")
        });

        let bf = brute_force_norm(&a, 12).expect("within cap").value;
        oracle.record((na - bf).abs() - 1e-5 * bf, || {
            format!("case {case} shape {shape:?}: power iteration {na} vs brute force {bf}")
        });

        let cube = DenseTensor::<f64>::random_normal(vec![3 + case % 2; 3], rng::mix(&[cs, 7]));
        let sym = symmetrize(&cube);
        let plain = plain_hopm(&sym, &opts).expect("valid").value;
        // the symmetric path of the norm: shared-vector iteration with a plain fallback restart
        let shared = norm(&sym);
        debug_assert!(sym.is_symmetric(1e-12));
        symmetric.record(plain - shared - 1e-8, || {
            format!("case {case}: symmetric {shared} < plain {plain}")
        });
    }

    vec![
        triangle.finish(),
        contraction.finish(),
        product.finish(),
        dominance.finish(),
        rank_one.finish(),
        oracle.finish(),
        symmetric.finish(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutations_count() {
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(4).len(), 24);
    }

    #[test]
    fn injected_fault_is_detected() {
        let out = run_norm_battery(4, 1, Some(Fault::ProductSign));
        let product = out.iter().find(|o| o.name == "product law").unwrap();
        assert!(!product.passed());
    }
}
