//! Files written by the experiment commands.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use ntkcorr_core::asymptotics::{fit_power_law, write_samples_csv, AsymptoticFit, FitReport, SweepSample};
use ntkcorr_core::rng;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::svg::{self, Plot, Series};
use crate::sweep::CellStatus;

pub const SAMPLES_FILE: &str = "samples.csv";
pub const CELLS_FILE: &str = "cells.csv";
pub const SUMMARY_FILE: &str = "exponent_summary.csv";
pub const RUN_FILE: &str = "run.json";
pub const FITS_DIR: &str = "fits";
pub const PLOTS_DIR: &str = "plots";

/// Outcome of one sweep cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellRecord {
    pub label: String,
    pub n: usize,
    pub seed: u64,
    pub status: CellStatus,
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_samples(path: &Path, samples: &[(String, SweepSample)]) -> CliResult<()> {
    let mut buf = Vec::new();
    write_samples_csv(samples, &mut buf)?;
    write_text(path, &String::from_utf8(buf).expect("ascii"))
}

/// `label,n,seed,status,message`, sorted by `(label, n, seed)`.
pub fn write_cells(path: &Path, cells: &[CellRecord]) -> CliResult<()> {
    let mut sorted: Vec<&CellRecord> = cells.iter().collect();
    sorted.sort_by(|a, b| (&a.label, a.n, a.seed).cmp(&(&b.label, b.n, b.seed)));
    let mut buf = Vec::new();
    writeln!(buf, "label,n,seed,status,message")?;
    for c in sorted {
        let message = match &c.status {
            CellStatus::Ok => String::new(),
            CellStatus::Diverged { step } => format!("diverged at step {step}"),
            CellStatus::Failed { message } => message.replace([',', '\n'], ";"),
        };
        writeln!(buf, "{},{},{},{},{message}", c.label, c.n, c.seed, c.status.label())?;
    }
    write_text(path, &String::from_utf8(buf).expect("utf-8"))
}

/// A fitted statistic with its serialized summary.
#[derive(Clone, Debug)]
pub struct FittedStatistic {
    pub fit: AsymptoticFit,
    pub report: FitReport,
}

impl FittedStatistic {
    pub fn warning(&self) -> Option<String> {
        self.fit
            .is_degenerate()
            .then(|| format!("{}: degenerate fit", self.report.statistic))
    }
}

/// Group samples by statistic, keeping only finite values.
pub fn by_statistic(samples: &[(String, SweepSample)]) -> BTreeMap<String, Vec<SweepSample>> {
    let mut out: BTreeMap<String, Vec<SweepSample>> = BTreeMap::new();
    for (name, s) in samples {
        if s.value.is_finite() {
            out.entry(name.clone()).or_default().push(*s);
        }
    }
    for v in out.values_mut() {
        v.sort_by_key(|s| (s.n, s.seed));
    }
    out
}

/// Fit every listed statistic; fewer than three widths is an input error.
pub fn fit_all(
    grouped: &BTreeMap<String, Vec<SweepSample>>,
    statistics: &[String],
    quantile: f64,
) -> CliResult<BTreeMap<String, FittedStatistic>> {
    let mut out = BTreeMap::new();
    for name in statistics {
        let samples = grouped
            .get(name)
            .ok_or_else(|| CliError::InsufficientData(format!("no usable samples for {name}")))?;
        let fit = fit_power_law(samples, quantile).map_err(|e| match e {
            ntkcorr_core::Error::InsufficientData(m) => CliError::InsufficientData(format!("{name}: {m}")),
            other => CliError::Core(other),
        })?;
        let report = FitReport::from_fit(name, &fit);
        out.insert(name.clone(), FittedStatistic { fit, report });
    }
    Ok(out)
}

/// Log-log scatter of the samples with the fitted quantile envelope.
pub fn fit_plot(name: &str, samples: &[SweepSample], fit: &AsymptoticFit) -> String {
    let mut series = vec![Series::points(
        "samples",
        samples.iter().map(|s| (s.n as f64, s.value)).collect(),
    )];
    series.push(Series::points(
        format!("q{} per width", fit.quantile),
        fit.per_width_stats
            .iter()
            .map(|(n, w)| (*n as f64, w.q_quantile))
            .collect(),
    ));
    if !fit.is_degenerate() {
        let (lo, hi) = (fit.widths()[0], *fit.widths().last().expect("nonempty"));
        series.push(Series::line(
            format!("fit n^{:.3}", fit.exponent),
            vec![(lo as f64, fit.envelope(lo)), (hi as f64, fit.envelope(hi))],
        ));
    }
    Plot {
        title: name.to_string(),
        x_label: "width n".into(),
        y_label: name.to_string(),
        log_x: true,
        log_y: true,
        series,
    }
    .render()
}

/// Fit JSONs, plots and the combined exponent table under `dir`.
pub fn write_fits(
    dir: &Path,
    title: &str,
    grouped: &BTreeMap<String, Vec<SweepSample>>,
    fits: &BTreeMap<String, FittedStatistic>,
) -> CliResult<()> {
    let mut csv = String::from("statistic,exponent,exponent_stderr,r_squared,quantile,status\n");
    let mut rows = Vec::new();
    for (name, f) in fits {
        write_json(&dir.join(FITS_DIR).join(format!("{name}.json")), &f.report)?;
        write_text(
            &dir.join(PLOTS_DIR).join(format!("{name}.svg")),
            &fit_plot(name, &grouped[name], &f.fit),
        )?;
        let status = if f.fit.is_degenerate() { "degenerate" } else { "ok" };
        csv.push_str(&format!(
            "{name},{:e},{:e},{:e},{},{status}\n",
            f.report.exponent, f.report.exponent_stderr, f.report.r_squared, f.report.quantile
        ));
        rows.push(vec![
            name.clone(),
            format!("{:.3}", f.report.exponent),
            format!("{:.3}", f.report.exponent_stderr),
            format!("{:.3}", f.report.r_squared),
            status.to_string(),
        ]);
    }
    write_text(&dir.join(SUMMARY_FILE), &csv)?;
    write_text(
        &dir.join(PLOTS_DIR).join("summary.svg"),
        &svg::table(title, &["statistic", "exponent", "stderr", "r^2", "status"], &rows),
    )
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    command: &'a str,
    config_hash: String,
    master_seed: u64,
    config: &'a ExperimentConfig,
    warnings: &'a [String],
}

pub fn config_hash(config: &ExperimentConfig) -> String {
    format!("{:016x}", rng::label_hash(&config.to_json()))
}

pub fn write_run_metadata(dir: &Path, command: &str, config: &ExperimentConfig, warnings: &[String]) -> CliResult<()> {
    write_json(
        &dir.join(RUN_FILE),
        &RunMetadata {
            command,
            config_hash: config_hash(config),
            master_seed: config.master_seed,
            config,
            warnings,
        },
    )
}

/// Every `fits/*.json` file below `root`, sorted.
pub fn find_fit_files(root: &Path) -> CliResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let Ok(entries) = std::fs::read_dir(&dir) else { continue };
        for e in entries {
            let path = e?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|x| x == "json")
                && path.parent().and_then(|p| p.file_name()).is_some_and(|n| n == FITS_DIR)
            {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}
