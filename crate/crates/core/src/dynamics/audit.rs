//! Proper-normalization (PGDML) conditions measured across a width grid.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::cost::Cost;
use super::linear::sgd_step;
use crate::asymptotics::{fit_power_law, AsymptoticFit, SweepSample};
use crate::derivatives::{jacobian, JetModel};
use crate::error::Result;
use crate::network::{init_params, Hypothesis, Model, NetworkConfig, Task};
use crate::rng;
use crate::scalar::{dot, norm2};

/// Statistic names emitted by [`pgdml_cell`], in report order.
pub const PGDML_STATISTICS: [&str; 6] = [
    "pgdml1_output",
    "pgdml2_first_step",
    "pgdml3_kernel_ratio",
    "pgdml4_order2",
    "pgdml4_order3",
    "kernel_diag",
];

/// All PGDML statistics for one `(width, seed)` cell, at the first two probes.
///
/// 1. `‖F(θ_0)(x)‖`
/// 2. `‖F(θ(1))(x) − F(θ_0)(x)‖` after one step on the first stream input
/// 3. `|Θ_0(x, x′)| / (η ‖∇F(x)‖ ‖∇F(x′)‖)`, the kernel against its maximal
///    scale `(Nη)(‖∇F‖/√N)²`
/// 4. `|∇^D F[u^D]| / (‖∇F‖/√N)^D` for a random unit `u` and `D = 2, 3`:
///    typical derivative entries against powers of the typical gradient entry
///
/// plus the kernel diagonal `Θ_0(x, x)`. Only output 0 is used.
pub fn pgdml_cell(
    config: &NetworkConfig,
    task: &Task<f64>,
    cost: Cost,
    seed: u64,
) -> Result<BTreeMap<&'static str, f64>> {
    let model = Model::<f64>::new(config, seed)?;
    let theta0 = init_params::<f64>(config, seed)?.theta;
    let eta = config.eta();
    let (x, x2) = (&task.probes()[0], &task.probes()[1]);
    let n_params = theta0.len() as f64;
    let mut out = BTreeMap::new();

    let f0 = model.output(&theta0, x)?;
    out.insert("pgdml1_output", norm2(&f0));

    let (_, xs) = task.stream(seed).next().expect("streams are infinite");
    let ys = task.target(&xs)?;
    let mut theta1 = theta0.clone();
    sgd_step(&model, &mut theta1, &xs, &ys, cost, eta)?;
    let f1 = model.output(&theta1, x)?;
    let step: Vec<f64> = f1.iter().zip(&f0).map(|(a, b)| a - b).collect();
    out.insert("pgdml2_first_step", norm2(&step));

    let g = &jacobian(&model, &theta0, x)?[0];
    let g2 = &jacobian(&model, &theta0, x2)?[0];
    let (ng, ng2) = (norm2(g), norm2(g2));
    out.insert("pgdml3_kernel_ratio", (eta * dot(g, g2)).abs() / (eta * ng * ng2));
    out.insert("kernel_diag", eta * ng * ng);

    let mut r = rng::seeded(rng::mix(&[seed, rng::label_hash("pgdml-direction")]));
    let u: Vec<f64> = rng::sphere_vec(&mut r, theta0.len(), 1.0);
    let typical = ng / n_params.sqrt();
    for (name, order) in [("pgdml4_order2", 2), ("pgdml4_order3", 3)] {
        let dirs: Vec<&[f64]> = vec![&u; order];
        let v = model.mixed_partial(&theta0, x, &dirs)?[0];
        out.insert(name, v.abs() / typical.powi(order as i32));
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PgdmlReport {
    pub samples: BTreeMap<String, Vec<SweepSample>>,
    pub fits: BTreeMap<String, AsymptoticFit>,
}

/// [`pgdml_cell`] over `widths × seeds`, fitted per statistic at the given quantile.
pub fn pgdml_audit(
    config: &NetworkConfig,
    task: &Task<f64>,
    cost: Cost,
    widths: &[usize],
    seeds: &[u64],
    quantile: f64,
) -> Result<PgdmlReport> {
    let mut samples: BTreeMap<String, Vec<SweepSample>> = BTreeMap::new();
    for &n in widths {
        let c = config.with_width(n);
        for &seed in seeds {
            for (name, v) in pgdml_cell(&c, task, cost, seed)? {
                samples
                    .entry(name.to_string())
                    .or_default()
                    .push(SweepSample::new(n, seed, v));
            }
        }
    }
    let fits = samples
        .iter()
        .map(|(k, s)| Ok((k.clone(), fit_power_law(s, quantile)?)))
        .collect::<Result<_>>()?;
    Ok(PgdmlReport { samples, fits })
}
