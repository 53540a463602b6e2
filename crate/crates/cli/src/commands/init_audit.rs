//! Initialization audit: layer norms and PGDML statistics across widths.

use std::path::Path;

use ntkcorr_core::asymptotics::SweepSample;
use ntkcorr_core::dynamics::pgdml_cell;
use ntkcorr_core::network::{init_params, Fcnn, ModelKind, Task};

use super::{distinct_widths, SweepResult};
use crate::config::{ensure_writable, Command, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::output::{self, CellRecord};
use crate::sweep::{run_cells, CellStatus};

const LABEL: &str = "init-audit";

fn cell(config: &ExperimentConfig, task: &Task<f64>, n: usize, seed: u64) -> CliResult<Vec<(String, f64)>> {
    let c = config.network.with_width(n);
    let mut out = Vec::new();
    if c.model_kind != ModelKind::QuadraticPerp {
        let net = Fcnn::<f64>::new(&c, seed)?;
        let theta = init_params::<f64>(&c, seed)?.theta;
        let layers = net.forward(&theta, &task.probes()[0])?;
        for (l, h) in layers.pre.iter().enumerate().skip(1) {
            out.push((
                format!("layer{l}_norm"),
                (h.iter().map(|v| v * v).sum::<f64>() / h.len() as f64).sqrt(),
            ));
        }
    }
    for (name, v) in pgdml_cell(&c, task, config.cost, seed)? {
        out.push((name.to_string(), v));
    }
    Ok(out)
}

pub fn run(config: &ExperimentConfig, out: &Path) -> CliResult<SweepResult> {
    config.validate(Command::InitAudit)?;
    if distinct_widths(&config.widths) < 3 {
        return Err(CliError::InsufficientData(format!(
            "init-audit needs at least 3 distinct widths, got {:?}",
            config.widths
        )));
    }
    ensure_writable(out)?;
    let task = Task::<f64>::new(&config.task_spec(), config.network.input_dim, config.network.output_dim)?;
    let selected = config.selected_statistics(Command::InitAudit);
    let grid: Vec<(usize, u64)> = config
        .widths
        .iter()
        .flat_map(|&n| (0..config.seeds as u64).map(move |s| (n, s)))
        .collect();
    let results = run_cells(&grid, config.jobs, |&(n, s)| {
        cell(config, &task, n, config.cell_seed(LABEL, n, s))
    })?;

    let mut res = SweepResult::default();
    for (&(n, seed), r) in grid.iter().zip(results) {
        let status = match r {
            Ok(values) => {
                for (name, v) in values.into_iter().filter(|(name, _)| selected.contains(name)) {
                    res.samples.push((name, SweepSample::new(n, seed, v)));
                }
                CellStatus::Ok
            }
            Err(message) => {
                for name in &selected {
                    res.samples.push((name.clone(), SweepSample::new(n, seed, f64::NAN)));
                }
                CellStatus::Failed { message }
            }
        };
        res.cells.push(CellRecord {
            label: LABEL.into(),
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
    output::write_fits(out, "initialization audit", &grouped, &fits)?;
    output::write_run_metadata(out, LABEL, config, &res.warnings)?;
    res.fits = fits.into_iter().map(|(k, f)| (k, f.report)).collect();
    Ok(res)
}
