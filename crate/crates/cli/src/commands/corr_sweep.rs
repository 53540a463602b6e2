//! Correlation-function magnitudes `‖C^{D,d}‖` at initialization across widths.

use std::path::Path;

use ntkcorr_core::asymptotics::SweepSample;
use ntkcorr_core::derivatives::{correlation, correlation_norm_hopm, CorrelationSpec};
use ntkcorr_core::network::{init_params, Model, Task};
use ntkcorr_core::NormOptions;

use super::{distinct_widths, SweepResult};
use crate::config::{ensure_writable, parse_correlation_statistic, Command, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::output::{self, CellRecord};
use crate::sweep::{run_cells, CellStatus};

/// Magnitude of one correlation function on a fresh network of width `n`.
///
/// `same` evaluates every slot at `x_0`; otherwise the `d + 1` inputs are
/// independent draws.
pub fn correlation_cell(
    config: &ExperimentConfig,
    task: &Task<f64>,
    statistic: &str,
    n: usize,
    seed: u64,
) -> CliResult<f64> {
    let (free, d, same) = parse_correlation_statistic(statistic)
        .ok_or_else(|| CliError::Input(format!("`{statistic}` is not a correlation statistic")))?;
    let c = config.network.with_width(n);
    let model = Model::<f64>::new(&c, seed)?;
    let theta = init_params::<f64>(&c, seed)?.theta;
    let mut inputs = task.draw(seed, d + 1);
    if same {
        let x0 = inputs[0].clone();
        inputs.iter_mut().for_each(|x| x.clone_from(&x0));
    }
    let spec = CorrelationSpec::new(free, inputs);
    let result = if free == 2 {
        let opts = NormOptions {
            restarts: 1,
            tol: 1e-4,
            max_iters: 100,
            seed,
        };
        correlation_norm_hopm(&model, &theta, &spec, c.eta(), &opts)?
    } else {
        correlation(&model, &theta, &spec, c.eta())?
    };
    Ok(result.value.magnitude())
}

pub fn run(config: &ExperimentConfig, out: &Path) -> CliResult<SweepResult> {
    config.validate(Command::CorrSweep)?;
    if distinct_widths(&config.widths) < 3 {
        return Err(CliError::InsufficientData(format!(
            "corr-sweep needs at least 3 distinct widths, got {:?}",
            config.widths
        )));
    }
    ensure_writable(out)?;
    let task = Task::<f64>::new(&config.task_spec(), config.network.input_dim, config.network.output_dim)?;
    let selected = config.selected_statistics(Command::CorrSweep);
    let grid: Vec<(&str, usize, u64)> = selected
        .iter()
        .flat_map(|name| {
            config
                .widths
                .iter()
                .flat_map(move |&n| (0..config.seeds as u64).map(move |s| (name.as_str(), n, s)))
        })
        .collect();
    let results = run_cells(&grid, config.jobs, |&(name, n, s)| {
        correlation_cell(config, &task, name, n, config.cell_seed(name, n, s))
    })?;

    let mut res = SweepResult::default();
    for (&(name, n, seed), r) in grid.iter().zip(results) {
        let (value, status) = match r {
            Ok(v) => (v, CellStatus::Ok),
            Err(message) => (f64::NAN, CellStatus::Failed { message }),
        };
        res.samples.push((name.to_string(), SweepSample::new(n, seed, value)));
        res.cells.push(CellRecord {
            label: name.to_string(),
            n,
            seed,
            status,
        });
    }
    let grouped = output::by_statistic(&res.samples);
    let fits = output::fit_all(&grouped, &selected, config.quantile)?;
    res.warnings = fits.values().filter_map(|f| f.warning()).collect();
    output::write_samples(&out.join(output::SAMPLES_FILE), &res.samples)?;
    output::write_cells(&out.join(output::CELLS_FILE), &res.cells)?;
    output::write_fits(out, "correlation sweep", &grouped, &fits)?;
    output::write_run_metadata(out, Command::CorrSweep.name(), config, &res.warnings)?;
    res.fits = fits.into_iter().map(|(k, f)| (k, f.report)).collect();
    Ok(res)
}
