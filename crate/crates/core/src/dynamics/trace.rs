//! SGD run side by side with its linearization, recorded step by step.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::cost::Cost;
use super::linear::{sgd_step, theta_lin_step, LinTracker, PointLinearization};
use crate::asymptotics::ols;
use crate::derivatives::{jacobian, kernel_from_jacobians, JetModel};
use crate::error::{Error, Result};
use crate::network::Task;
use crate::scalar::{dot, norm2, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TraceOptions {
    /// Number of SGD steps `S`; rows are recorded for `s = 0..=S`.
    pub steps: usize,
    /// Learning-rate multiplier `r`.
    pub rescale: f64,
    /// Selects the input stream.
    pub seed: u64,
    pub divergence_threshold: f64,
    /// Refuse runs with `r·η` at or above `stability_margin` times the stability threshold.
    pub stability_margin: Option<f64>,
    /// Steps at which the second-order perturbation identity is evaluated.
    pub identity_steps: Vec<usize>,
    /// Probe indices of the pair whose kernel drift is tracked.
    pub kernel_pair: (usize, usize),
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            steps: 200,
            rescale: 1.0,
            seed: 0,
            divergence_threshold: 1e6,
            stability_margin: Some(1.0),
            identity_steps: Vec::new(),
            kernel_pair: (0, 1),
        }
    }
}

/// Quantities at step `s`, before the update that consumes `x_s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub x_id: u64,
    pub loss_sgd: f64,
    pub loss_lin: f64,
    /// `‖C′(F_lin(s)(x_s), ŷ(x_s))‖`.
    pub cprime_norm: f64,
    /// Max and mean of `‖F(θ(s)) − F_lin(s)‖` over the probe set.
    pub delta_max: f64,
    pub delta_mean: f64,
    /// `‖θ(s) − θ_lin(s)‖`.
    pub zeta_norm: f64,
    /// `ϱ(s) = Σ_{s′<s} ‖C′(F_lin(s′)(x_{s′}))‖`.
    pub rho: f64,
    /// `‖Θ(θ(s)) − Θ_0‖_F / ‖Θ_0‖_F` on the kernel pair.
    pub kernel_drift: f64,
}

pub const TRACE_CSV_HEADER: &str =
    "step,x_id,loss_sgd,loss_lin,cprime_norm,delta_max,delta_mean,zeta_norm,rho,kernel_drift";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    Diverged { step: usize, loss: f64 },
}

/// `‖C′‖ ≈ A e^{−s/T}` fitted over the first half of the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// `−1/slope`; infinite when the fitted slope is not negative.
    pub t: f64,
    pub slope: f64,
    pub r_squared: f64,
    pub points: usize,
    /// Negative slope and `r² ≥ 0.9`.
    pub exponential: bool,
}

/// `δ ≈ ∇F(θ_0)ᵀ(θ − θ_lin) + ½ ∇²F(θ_0)[Δ, Δ]` with `Δ = θ − θ_0`, over the probe set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub step: usize,
    /// `‖δ‖` stacked over probes.
    pub delta_norm: f64,
    /// `‖δ − prediction‖ / ‖δ‖`; zero when both vanish.
    pub residual: f64,
    /// The same with only the first-order term.
    pub first_order_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub eta: f64,
    pub rescale: f64,
    pub seed: u64,
    pub status: RunStatus,
    pub rows: Vec<TraceRow>,
    /// Probe mean of `‖C′(F_lin(s)(p))‖`, the smoothed decay signal.
    pub probe_cprime: Vec<f64>,
    pub decay: Option<DecayFit>,
    pub identity: Vec<IdentityReport>,
    /// RMS target magnitude over the probes.
    pub output_scale: f64,
}

impl TrainingTrace {
    pub fn row(&self, step: usize) -> Option<&TraceRow> {
        self.rows.get(step).filter(|r| r.step == step)
    }

    pub fn max_delta(&self) -> f64 {
        self.rows.iter().map(|r| r.delta_max).fold(0.0, f64::max)
    }

    /// Log-log slope of `δ_max(s)` against `s` over `s ∈ [from, to]`.
    pub fn delta_slope(&self, from: usize, to: usize) -> Option<f64> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .rows
            .iter()
            .filter(|r| r.step >= from.max(1) && r.step <= to && r.delta_max > 0.0)
            .map(|r| ((r.step as f64).ln(), r.delta_max.ln()))
            .unzip();
        (xs.len() >= 3).then(|| ols(&xs, &ys).0)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{TRACE_CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                r.step,
                r.x_id,
                r.loss_sgd,
                r.loss_lin,
                r.cprime_norm,
                r.delta_max,
                r.delta_mean,
                r.zeta_norm,
                r.rho,
                r.kernel_drift
            )?;
        }
        Ok(())
    }
}

/// Fit `log y` against `s` by least squares; `None` with fewer than 3 positive values.
pub fn fit_decay(values: &[f64]) -> Option<DecayFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0 && v.is_finite())
        .map(|(s, v)| (s as f64, v.ln()))
        .unzip();
    if xs.len() < 3 {
        return None;
    }
    let (slope, _, _, r2) = ols(&xs, &ys);
    Some(DecayFit {
        t: if slope < 0.0 { -1.0 / slope } else { f64::INFINITY },
        slope,
        r_squared: r2,
        points: xs.len(),
        exponential: slope < 0.0 && r2 >= 0.9,
    })
}

/// Largest stable single-sample rate: `2 / (sup‖C″‖ · max_p ‖∇F(θ_0)(p)‖_F²)`.
pub fn stability_threshold<S: Scalar, M: JetModel<S> + ?Sized>(
    model: &M,
    theta0: &[S],
    points: &[Vec<S>],
    cost: Cost,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for p in points {
        let j = jacobian(model, theta0, p)?;
        let sq: f64 = j.iter().map(|row| dot(row, row).as_f64()).sum();
        worst = worst.max(sq);
    }
    Ok(2.0 / (cost.curvature_bound() * worst))
}

fn stacked_norm(rows: &[Vec<f64>]) -> f64 {
    rows.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

fn identity_report<S: Scalar, M: JetModel<S> + ?Sized>(
    model: &M,
    step: usize,
    theta: &[S],
    theta0: &[S],
    theta_lin: &[S],
    tracker: &LinTracker<S>,
    probes: &[Vec<S>],
) -> Result<IdentityReport> {
    let delta_theta: Vec<S> = theta.iter().zip(theta0).map(|(a, b)| *a - *b).collect();
    let zeta: Vec<S> = theta.iter().zip(theta_lin).map(|(a, b)| *a - *b).collect();
    let mut deltas = Vec::new();
    let mut miss = Vec::new();
    let mut miss1 = Vec::new();
    for (i, p) in probes.iter().enumerate() {
        let f = model.output(theta, p)?;
        let lin = tracker.value(i)?;
        let at_p = tracker.point(i)?;
        let second = model.mixed_partial(theta0, p, &[&delta_theta, &delta_theta])?;
        let d: Vec<f64> = f.iter().zip(lin).map(|(a, b)| (*a - *b).as_f64()).collect();
        let first: Vec<f64> = at_p.jacobian.iter().map(|row| dot(row, &zeta).as_f64()).collect();
        miss1.push(d.iter().zip(&first).map(|(a, b)| a - b).collect::<Vec<_>>());
        miss.push(
            d.iter()
                .zip(&first)
                .zip(&second)
                .map(|((a, b), c)| a - b - 0.5 * c.as_f64())
                .collect::<Vec<_>>(),
        );
        deltas.push(d);
    }
    let dn = stacked_norm(&deltas);
    let rel = |m: f64| if m == 0.0 { 0.0 } else { m / dn };
    Ok(IdentityReport {
        step,
        delta_norm: dn,
        residual: rel(stacked_norm(&miss)),
        first_order_residual: rel(stacked_norm(&miss1)),
    })
}

fn frob<S: Scalar>(k: &[Vec<S>]) -> f64 {
    k.iter().flatten().map(|v| v.as_f64() * v.as_f64()).sum::<f64>().sqrt()
}

/// Run `S` single-sample SGD steps at rate `r·η` from `θ_0`, with `F_lin`,
/// `θ_lin` and `F̂` advanced on the same input stream.
///
/// `F_lin` is tracked pointwise on the probes; at the fresh training input
/// it is read off as `F̂(θ_lin(s))(x_s)`, which equals `F_lin(s)(x_s)`.
pub fn train_and_trace<S: Scalar, M: JetModel<S> + ?Sized>(
    model: &M,
    theta0: &[S],
    task: &Task<S>,
    cost: Cost,
    eta: f64,
    opts: &TraceOptions,
) -> Result<TrainingTrace> {
    let probes = task.probes();
    let (ka, kb) = opts.kernel_pair;
    if ka >= probes.len() || kb >= probes.len() {
        return Err(Error::Input("kernel pair outside the probe set".into()));
    }
    let rate = eta * opts.rescale;
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::Input(format!("learning rate r·η = {rate} must be positive")));
    }
    if let Some(margin) = opts.stability_margin {
        let limit = margin * stability_threshold(model, theta0, probes, cost)?;
        if rate >= limit {
            return Err(Error::Config(format!(
                "r·η = {rate:e} is above the stability threshold {limit:e}"
            )));
        }
    }
    let rate_s = S::of(rate);
    let mut tracker = LinTracker::new(model, theta0, probes, rate_s)?;
    let k0 = {
        let (a, b) = (tracker.point(ka)?, tracker.point(kb)?);
        kernel_from_jacobians(&a.jacobian, &b.jacobian, S::of(eta))
    };
    let k0_norm = frob(&k0);
    let targets = probes.iter().map(|p| task.target(p)).collect::<Result<Vec<_>>>()?;
    let output_scale = (targets.iter().flatten().map(|v| v.as_f64().powi(2)).sum::<f64>()
        / (targets.len() * task.output_dim()) as f64)
        .sqrt();

    let mut theta = theta0.to_vec();
    let mut theta_lin = theta0.to_vec();
    let mut rows = Vec::with_capacity(opts.steps + 1);
    let mut probe_cprime = Vec::with_capacity(opts.steps + 1);
    let mut identity = Vec::new();
    let mut rho = 0.0;
    let mut status = RunStatus::Completed;
    for (step, (x_id, x)) in (0..=opts.steps).zip(task.stream(opts.seed)) {
        let y = task.target(&x)?;
        let at_x = PointLinearization::new(model, theta0, &x)?;
        let f_lin_x = at_x.eval(&theta_lin, theta0);
        let cprime_lin = cost.gradient(&f_lin_x, &y);
        let cprime_norm = norm2(&cprime_lin).as_f64();

        let mut dmax = 0.0f64;
        let mut dsum = 0.0;
        let mut pc = 0.0;
        for (i, p) in probes.iter().enumerate() {
            let f = model.output(&theta, p)?;
            let lin = tracker.value(i)?;
            let d: Vec<S> = f.iter().zip(lin).map(|(a, b)| *a - *b).collect();
            let dn = norm2(&d).as_f64();
            dmax = dmax.max(dn);
            dsum += dn;
            pc += norm2(&cost.gradient(lin, &targets[i])).as_f64();
        }
        probe_cprime.push(pc / probes.len() as f64);
        let zeta: Vec<S> = theta.iter().zip(&theta_lin).map(|(a, b)| *a - *b).collect();
        let kernel_drift = if step == 0 {
            0.0
        } else {
            let k = kernel_from_jacobians(
                &jacobian(model, &theta, &probes[ka])?,
                &jacobian(model, &theta, &probes[kb])?,
                S::of(eta),
            );
            let diff: Vec<Vec<S>> = k
                .iter()
                .zip(&k0)
                .map(|(r, r0)| r.iter().zip(r0).map(|(a, b)| *a - *b).collect())
                .collect();
            frob(&diff) / k0_norm
        };
        if opts.identity_steps.contains(&step) {
            identity.push(identity_report(
                model, step, &theta, theta0, &theta_lin, &tracker, probes,
            )?);
        }

        let loss_sgd = if step < opts.steps {
            sgd_step(model, &mut theta, &x, &y, cost, rate_s)?.loss
        } else {
            cost.value(&model.output(&theta, &x)?, &y)
        }
        .as_f64();
        rows.push(TraceRow {
            step,
            x_id,
            loss_sgd,
            loss_lin: cost.value(&f_lin_x, &y).as_f64(),
            cprime_norm,
            delta_max: dmax,
            delta_mean: dsum / probes.len() as f64,
            zeta_norm: norm2(&zeta).as_f64(),
            rho,
            kernel_drift,
        });
        if !(loss_sgd <= opts.divergence_threshold) {
            status = RunStatus::Diverged { step, loss: loss_sgd };
            break;
        }
        if step < opts.steps {
            tracker.lin_step(&at_x, &cprime_lin);
            theta_lin_step(&mut theta_lin, &at_x, &cprime_lin, rate_s);
        }
        rho += cprime_norm;
    }
    let half = probe_cprime.len() / 2 + 1;
    Ok(TrainingTrace {
        eta,
        rescale: opts.rescale,
        seed: opts.seed,
        status,
        decay: fit_decay(&probe_cprime[..half.min(probe_cprime.len())]),
        rows,
        probe_cprime,
        identity,
        output_scale,
    })
}
