//! One module per subcommand. Each runs from an [`ExperimentConfig`], writes
//! its files under an output directory and returns what it measured.

pub mod corr_sweep;
pub mod init_audit;
pub mod ntk_deviation;
pub mod report;
pub mod selftest;
pub mod suite;

use std::collections::BTreeMap;

use ntkcorr_core::asymptotics::{FitReport, SweepSample};

use crate::output::CellRecord;

/// Samples, cell outcomes and fits of one sweep command.
#[derive(Clone, Debug, Default)]
pub struct SweepResult {
    pub samples: Vec<(String, SweepSample)>,
    pub cells: Vec<CellRecord>,
    pub fits: BTreeMap<String, FitReport>,
    pub warnings: Vec<String>,
}

impl SweepResult {
    pub fn exponent(&self, statistic: &str) -> Option<f64> {
        self.fits.get(statistic).map(|f| f.exponent)
    }

    /// Finite values of `statistic` as `(n, seed, value)`.
    pub fn values(&self, statistic: &str) -> Vec<SweepSample> {
        self.samples
            .iter()
            .filter(|(name, s)| name == statistic && s.value.is_finite())
            .map(|(_, s)| *s)
            .collect()
    }
}

fn distinct_widths(widths: &[usize]) -> usize {
    let mut w = widths.to_vec();
    w.sort_unstable();
    w.dedup();
    w.len()
}
