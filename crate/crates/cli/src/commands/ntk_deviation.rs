//! Deviation of SGD from its linearization, `δ(s) = F(θ(s)) − F_lin(s)`, across widths and rates.

use std::collections::BTreeMap;
use std::path::Path;

use ntkcorr_core::asymptotics::{quantile_sorted, SweepSample};
use ntkcorr_core::dynamics::{train_and_trace, DecayFit, IdentityReport, RunStatus, TraceOptions, TrainingTrace};
use ntkcorr_core::network::{init_params, Model, Task};
use serde::Serialize;

use super::{distinct_widths, SweepResult};
use crate::config::{ensure_writable, rescale_label, Command, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::output::{self, CellRecord};
use crate::svg::{Plot, Series};
use crate::sweep::{run_cells, CellStatus};

const LABEL: &str = "ntk-deviation";
pub const SUMMARY_FILE: &str = "deviation_summary.json";
pub const TRACES_DIR: &str = "traces";

/// Statistics with a power-law fit across widths.
const FITTED: [&str; 4] = ["delta_fixed", "delta_max", "delta_max_rel", "identity_residual"];

/// One training run as written next to its trace.
#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub n: usize,
    pub seed_index: u64,
    pub seed: u64,
    pub eta: f64,
    pub rescale: f64,
    pub status: RunStatus,
    pub decay: Option<DecayFit>,
    pub identity: Vec<IdentityReport>,
    pub output_scale: f64,
}

/// Per-width medians for one rescale.
#[derive(Clone, Debug, Default, Serialize)]
pub struct WidthSummary {
    pub delta_fixed: f64,
    pub flatness_slope: f64,
    pub decay_r_squared: f64,
    /// Median over seeds of `δ_r(s*) / δ_{r_0}(s*)`, paired by seed, for `r ≠ r_0`.
    pub rescale_ratio: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct DeviationSummary {
    pub fixed_step: usize,
    pub rescales: Vec<f64>,
    /// `rescale label -> width -> medians`.
    pub per_width: BTreeMap<String, BTreeMap<usize, WidthSummary>>,
    /// `2^{−b}` for the fitted `δ(s*) ∝ n^b`, per rescale: the ratio between widths `n/2` and `n`.
    pub width_halving_ratio: BTreeMap<String, f64>,
    pub ok: usize,
    pub diverged: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, Default)]
pub struct DeviationRun {
    pub sweep: SweepResult,
    pub summary: DeviationSummary,
}

/// Named statistics of one run; NaN where the run did not reach the required step.
pub fn run_statistics(trace: &TrainingTrace, fixed_step: usize) -> Vec<(&'static str, f64)> {
    let steps = trace.rows.last().map_or(0, |r| r.step);
    let completed = trace.status == RunStatus::Completed;
    let nan_unless = |ok: bool, v: f64| if ok { v } else { f64::NAN };
    let delta_fixed = trace.row(fixed_step).map_or(f64::NAN, |r| r.delta_max);
    let max = trace.max_delta();
    vec![
        ("delta_fixed", delta_fixed),
        ("delta_max", nan_unless(completed, max)),
        ("delta_max_rel", nan_unless(completed, max / trace.output_scale)),
        (
            "flatness_slope",
            nan_unless(completed, trace.delta_slope(steps / 2, steps).unwrap_or(f64::NAN)),
        ),
        (
            "decay_r_squared",
            trace.decay.as_ref().map_or(f64::NAN, |d| d.r_squared),
        ),
        ("decay_t", trace.decay.as_ref().map_or(f64::NAN, |d| d.t)),
        (
            "identity_residual",
            trace.identity.first().map_or(f64::NAN, |i| i.residual),
        ),
    ]
}

fn train(config: &ExperimentConfig, task: &Task<f64>, n: usize, seed: u64, rescale: f64) -> CliResult<TrainingTrace> {
    let c = config.network.with_width(n);
    let model = Model::<f64>::new(&c, seed)?;
    let theta0 = init_params::<f64>(&c, seed)?.theta;
    let opts = TraceOptions {
        steps: config.steps,
        rescale,
        seed,
        identity_steps: vec![config.fixed_step],
        stability_margin: config.stability_margin,
        ..TraceOptions::default()
    };
    Ok(train_and_trace(&model, &theta0, task, config.cost, c.eta(), &opts)?)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.retain(|x| x.is_finite());
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

fn trajectory_plot(r: &str, traces: &[(usize, &TrainingTrace)]) -> String {
    let mut by_width: BTreeMap<usize, Vec<&TrainingTrace>> = BTreeMap::new();
    for (n, t) in traces {
        by_width.entry(*n).or_default().push(t);
    }
    let series = by_width
        .iter()
        .map(|(n, ts)| {
            let len = ts.iter().map(|t| t.rows.len()).max().unwrap_or(0);
            let pts = (1..len)
                .map(|s| {
                    (
                        s as f64,
                        median(
                            ts.iter()
                                .filter_map(|t| t.rows.get(s))
                                .map(|row| row.delta_max)
                                .collect(),
                        ),
                    )
                })
                .collect();
            Series::line(format!("n = {n}"), pts)
        })
        .collect();
    Plot {
        title: format!("median δ_max(s), {r}"),
        x_label: "step s".into(),
        y_label: "δ_max".into(),
        log_x: true,
        log_y: true,
        series,
    }
    .render()
}

pub fn run(config: &ExperimentConfig, out: &Path) -> CliResult<DeviationRun> {
    config.validate(Command::NtkDeviation)?;
    ensure_writable(out)?;
    let task = Task::<f64>::new(&config.task_spec(), config.network.input_dim, config.network.output_dim)?;
    let selected = config.selected_statistics(Command::NtkDeviation);
    let grid: Vec<(usize, u64, f64)> = config
        .widths
        .iter()
        .flat_map(|&n| (0..config.seeds as u64).flat_map(move |s| config.rescales.iter().map(move |&r| (n, s, r))))
        .collect();
    let results = run_cells(&grid, config.jobs, |&(n, s, r)| {
        train(config, &task, n, config.cell_seed(LABEL, n, s), r)
    })?;

    let hash = output::config_hash(config);
    let mut res = DeviationRun::default();
    let mut traces: BTreeMap<String, Vec<(usize, &TrainingTrace)>> = BTreeMap::new();
    for (&(n, s, r), result) in grid.iter().zip(&results) {
        let rl = rescale_label(r);
        let stem = format!("n{n}_s{s}_{rl}");
        let status = match result {
            Ok(trace) => {
                let mut buf = Vec::new();
                trace.write_csv(&mut buf)?;
                output::write_text(
                    &out.join(TRACES_DIR).join(format!("{stem}.csv")),
                    &String::from_utf8(buf).expect("ascii"),
                )?;
                let record = RunRecord {
                    config_hash: hash.clone(),
                    n,
                    seed_index: s,
                    seed: trace.seed,
                    eta: trace.eta,
                    rescale: r,
                    status: trace.status.clone(),
                    decay: trace.decay.clone(),
                    identity: trace.identity.clone(),
                    output_scale: trace.output_scale,
                };
                output::write_json(&out.join(TRACES_DIR).join(format!("{stem}.json")), &record)?;
                traces.entry(rl.clone()).or_default().push((n, trace));
                for (name, v) in run_statistics(trace, config.fixed_step) {
                    if selected.iter().any(|x| x == name) {
                        res.sweep
                            .samples
                            .push((format!("{name}_{rl}"), SweepSample::new(n, s, v)));
                    }
                }
                match trace.status {
                    RunStatus::Completed => CellStatus::Ok,
                    RunStatus::Diverged { step, .. } => CellStatus::Diverged { step },
                }
            }
            Err(message) => {
                for name in &selected {
                    res.sweep
                        .samples
                        .push((format!("{name}_{rl}"), SweepSample::new(n, s, f64::NAN)));
                }
                CellStatus::Failed {
                    message: message.clone(),
                }
            }
        };
        match status {
            CellStatus::Ok => res.summary.ok += 1,
            CellStatus::Diverged { .. } => res.summary.diverged += 1,
            CellStatus::Failed { .. } => res.summary.failed += 1,
        }
        res.sweep.cells.push(CellRecord {
            label: rl,
            n,
            seed: s,
            status,
        });
    }
    output::write_samples(&out.join(output::SAMPLES_FILE), &res.sweep.samples)?;
    output::write_cells(&out.join(output::CELLS_FILE), &res.sweep.cells)?;
    if res.summary.ok == 0 {
        return Err(if res.summary.diverged > 0 {
            CliError::AllDiverged
        } else {
            CliError::InsufficientData("every run failed".into())
        });
    }

    let grouped = output::by_statistic(&res.sweep.samples);
    let fit_names: Vec<String> = config
        .rescales
        .iter()
        .flat_map(|&r| {
            FITTED
                .iter()
                .filter(|s| selected.iter().any(|x| x == *s))
                .map(move |s| format!("{s}_{}", rescale_label(r)))
        })
        .filter(|name| grouped.contains_key(name))
        .collect();
    let fits = if distinct_widths(&config.widths) >= 3 {
        let fits = output::fit_all(&grouped, &fit_names, config.quantile)?;
        res.sweep.warnings.extend(fits.values().filter_map(|f| f.warning()));
        fits
    } else {
        res.sweep.warnings.push("fewer than 3 widths: no width fits".into());
        BTreeMap::new()
    };

    res.summary.fixed_step = config.fixed_step;
    res.summary.rescales = config.rescales.clone();
    let base = rescale_label(config.rescales[0]);
    let lookup = |name: &str| -> BTreeMap<(usize, u64), f64> {
        grouped
            .get(name)
            .map_or_else(BTreeMap::new, |v| v.iter().map(|s| ((s.n, s.seed), s.value)).collect())
    };
    let base_fixed = lookup(&format!("delta_fixed_{base}"));
    for &r in &config.rescales {
        let rl = rescale_label(r);
        let fixed = lookup(&format!("delta_fixed_{rl}"));
        let slope = lookup(&format!("flatness_slope_{rl}"));
        let r2 = lookup(&format!("decay_r_squared_{rl}"));
        let mut widths: Vec<usize> = config.widths.clone();
        widths.sort_unstable();
        widths.dedup();
        let per: BTreeMap<usize, WidthSummary> = widths
            .iter()
            .map(|&n| {
                let at = |m: &BTreeMap<(usize, u64), f64>| -> Vec<f64> {
                    m.range((n, 0)..=(n, u64::MAX)).map(|(_, v)| *v).collect()
                };
                let rescale_ratio = (rl != base).then(|| {
                    median(
                        fixed
                            .range((n, 0)..=(n, u64::MAX))
                            .filter_map(|(k, v)| base_fixed.get(k).map(|b| v / b))
                            .collect(),
                    )
                });
                let summary = WidthSummary {
                    delta_fixed: median(at(&fixed)),
                    flatness_slope: median(at(&slope)),
                    decay_r_squared: median(at(&r2)),
                    rescale_ratio,
                };
                (n, summary)
            })
            .collect();
        res.summary.per_width.insert(rl.clone(), per);
        if let Some(f) = fits.get(&format!("delta_fixed_{rl}")) {
            if !f.fit.is_degenerate() {
                res.summary
                    .width_halving_ratio
                    .insert(rl.clone(), 2f64.powf(-f.fit.exponent));
            }
        }
        if let Some(ts) = traces.get(&rl) {
            output::write_text(
                &out.join(output::PLOTS_DIR).join(format!("delta_trajectories_{rl}.svg")),
                &trajectory_plot(&rl, ts),
            )?;
        }
    }

    output::write_fits(out, "NTK deviation", &grouped, &fits)?;
    output::write_json(&out.join(SUMMARY_FILE), &res.summary)?;
    output::write_run_metadata(out, LABEL, config, &res.sweep.warnings)?;
    res.sweep.fits = fits.into_iter().map(|(k, f)| (k, f.report)).collect();
    Ok(res)
}
