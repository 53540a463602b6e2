//! `suite`: every acceptance experiment in one run, with a pass/fail line per criterion.

use std::path::Path;

use ntkcorr_core::validation;

use super::{corr_sweep, init_audit, ntk_deviation, report, selftest};
use crate::config::{deviation_network, rescale_label, Command, ExperimentConfig};
use crate::criteria::{self, Criterion};
use crate::error::{CliError, CliResult};
use crate::output;

pub const ACCEPTANCE_FILE: &str = "acceptance.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    /// The desk-scale grids.
    Full,
    /// Smaller grids that still resolve every criterion, for tests.
    Quick,
}

#[derive(Clone, Debug)]
pub struct SuiteConfigs {
    pub init_audit: ExperimentConfig,
    pub corr_sweep: ExperimentConfig,
    pub deviation: ExperimentConfig,
    pub flatness: ExperimentConfig,
    pub quadratic_features: Vec<usize>,
    pub quadratic_steps: usize,
}

impl SuiteConfigs {
    pub fn new(scale: Scale, jobs: usize, master_seed: u64) -> Self {
        let base = |cmd: Command| ExperimentConfig {
            jobs,
            master_seed,
            ..ExperimentConfig::default_for(cmd)
        };
        let mut init_audit = base(Command::InitAudit);
        let mut corr_sweep = base(Command::CorrSweep);
        let mut deviation = base(Command::NtkDeviation);
        let flatness = ExperimentConfig {
            experiment: "ntk-flatness".into(),
            network: deviation_network(2.0),
            widths: vec![512],
            seeds: if scale == Scale::Quick { 2 } else { 4 },
            steps: 400,
            fixed_step: 400,
            rescales: vec![1.0],
            ..base(Command::NtkDeviation)
        };
        let mut quadratic_features = vec![256, 512, 1024];
        if scale == Scale::Quick {
            init_audit.widths = vec![32, 64, 128, 256, 512];
            init_audit.seeds = 8;
            corr_sweep.widths = vec![32, 64, 128, 256];
            corr_sweep.seeds = 8;
            deviation.widths = vec![64, 128, 256, 512];
            deviation.seeds = 4;
            quadratic_features = vec![256, 512];
        }
        Self {
            init_audit,
            corr_sweep,
            deviation,
            flatness,
            quadratic_features,
            quadratic_steps: 200,
        }
    }
}

fn same_bytes(a: &Path, b: &Path) -> bool {
    match (std::fs::read(a), std::fs::read(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

/// Run every experiment under `out` and evaluate the criteria.
///
/// `progress` receives each criterion line as soon as it is decided.
pub fn run(configs: &SuiteConfigs, out: &Path, mut progress: impl FnMut(&Criterion)) -> CliResult<Vec<Criterion>> {
    let seed = configs.init_audit.master_seed;
    let mut results = Vec::new();
    let mut push = |c: Criterion, results: &mut Vec<Criterion>| {
        progress(&c);
        results.push(c);
    };

    let (outcomes, _) = selftest::run(selftest::CASES, seed, false, None)?;
    push(criteria::norm_algebra(&outcomes), &mut results);
    push(
        criteria::jet_correctness(
            validation::jet_vs_finite_differences(50, seed),
            validation::linear_model_higher_orders(seed),
        ),
        &mut results,
    );
    push(
        criteria::oracle_equivalence(&validation::dense_correlation_oracle(seed)),
        &mut results,
    );
    push(
        criteria::kernel_recursion(validation::kernel_recursion(20, seed)),
        &mut results,
    );

    let audit = init_audit::run(&configs.init_audit, &out.join("init-audit"))?;
    push(criteria::flat_initialization(&audit), &mut results);

    let corr = corr_sweep::run(&configs.corr_sweep, &out.join("corr-sweep"))?;
    push(criteria::correlation_decay(&corr), &mut results);

    let dev = ntk_deviation::run(&configs.deviation, &out.join("ntk-deviation"))?;
    let rates = &configs.deviation.rescales;
    let base = rescale_label(rates[0]);
    push(
        criteria::linearization_decay(&dev, &format!("delta_fixed_{base}")),
        &mut results,
    );
    let flat = ntk_deviation::run(&configs.flatness, &out.join("ntk-flatness"))?;
    push(
        criteria::deviation_over_time(&flat, &rescale_label(configs.flatness.rescales[0])),
        &mut results,
    );
    let doubled = rates
        .iter()
        .find(|r| **r == 2.0 * rates[0])
        .map(|r| rescale_label(*r))
        .ok_or_else(|| CliError::Input("the deviation rescales need r and 2r".into()))?;
    push(criteria::reparametrization(&dev, &base, &doubled), &mut results);

    let quadratic: Vec<_> = configs
        .quadratic_features
        .iter()
        .map(|&f| validation::quadratic_perpendicular(f, configs.quadratic_steps, true, seed))
        .collect();
    push(criteria::quadratic_model(&quadratic), &mut results);

    let rerun = ExperimentConfig {
        jobs: configs.init_audit.jobs % 4 + 1,
        ..configs.init_audit.clone()
    };
    let again = out.join("determinism").join("init-audit");
    init_audit::run(&rerun, &again)?;
    let compared: Vec<(String, bool)> = [output::SAMPLES_FILE, output::CELLS_FILE, output::SUMMARY_FILE]
        .iter()
        .map(|f| {
            (
                f.to_string(),
                same_bytes(&out.join("init-audit").join(f), &again.join(f)),
            )
        })
        .collect();
    push(criteria::determinism(&compared), &mut results);

    let required: Vec<String> = [&audit.fits, &corr.fits, &dev.sweep.fits]
        .iter()
        .flat_map(|f| f.keys().cloned())
        .collect();
    report::run(out, out, &required)?;
    output::write_json(&out.join(ACCEPTANCE_FILE), &results)?;
    Ok(results)
}
