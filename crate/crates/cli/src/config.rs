use std::path::{Path, PathBuf};

use ntkcorr_core::dynamics::{Cost, PGDML_STATISTICS};
use ntkcorr_core::network::{NetworkConfig, TaskSpec};
use ntkcorr_core::rng;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Subcommands that run experiments from an [`ExperimentConfig`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    InitAudit,
    CorrSweep,
    NtkDeviation,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::InitAudit => "init-audit",
            Command::CorrSweep => "corr-sweep",
            Command::NtkDeviation => "ntk-deviation",
        }
    }
}

/// `(D, d)` pairs swept by `corr-sweep`.
pub const CORRELATION_ORDERS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (2, 1)];

pub fn correlation_statistic(free: usize, d: usize, same: bool) -> String {
    format!("corr_D{free}_d{d}_{}", if same { "same" } else { "distinct" })
}

/// Parse `corr_D{D}_d{d}_{distinct|same}`.
pub fn parse_correlation_statistic(name: &str) -> Option<(usize, usize, bool)> {
    let rest = name.strip_prefix("corr_D")?;
    let (free, rest) = rest.split_once("_d")?;
    let (d, mode) = rest.split_once('_')?;
    let same = match mode {
        "same" => true,
        "distinct" => false,
        _ => return None,
    };
    let (free, d) = (free.parse().ok()?, d.parse().ok()?);
    CORRELATION_ORDERS.contains(&(free, d)).then_some((free, d, same))
}

/// Per-run statistics of `ntk-deviation`; each is emitted once per rescale as `{name}_r{r}`.
pub const DEVIATION_STATISTICS: [&str; 7] = [
    "delta_fixed",
    "delta_max",
    "delta_max_rel",
    "flatness_slope",
    "decay_r_squared",
    "decay_t",
    "identity_residual",
];

pub fn rescale_label(r: f64) -> String {
    format!("r{r}")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub network: NetworkConfig,
    pub task: TaskSpec,
    pub cost: Cost,
    /// Hidden widths `n` of the sweep.
    pub widths: Vec<usize>,
    /// Seeds per width.
    pub seeds: usize,
    /// Subset of the command's registered statistics; empty selects all.
    pub statistics: Vec<String>,
    /// SGD steps `S` per training run.
    pub steps: usize,
    /// Learning-rate multipliers `r`.
    pub rescales: Vec<f64>,
    /// Step at which `δ` and the perturbation identity are read off.
    pub fixed_step: usize,
    /// Quantile fitted across seeds at each width.
    pub quantile: f64,
    /// Runs at or above this fraction of the stability threshold are refused; `null` disables the check.
    pub stability_margin: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub jobs: usize,
    pub master_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: "custom".into(),
            network: NetworkConfig::default(),
            task: TaskSpec::default(),
            cost: Cost::Mse,
            widths: vec![32, 64, 128, 256, 512],
            seeds: 16,
            statistics: Vec::new(),
            steps: 100,
            rescales: vec![1.0],
            fixed_step: 100,
            quantile: 0.95,
            stability_margin: Some(1.0),
            output_dir: None,
            jobs: 1,
            master_seed: 0,
        }
    }
}

impl ExperimentConfig {
    /// The configuration a command runs when no file is given.
    pub fn default_for(command: Command) -> Self {
        match command {
            Command::InitAudit => Self {
                experiment: "init-audit".into(),
                widths: vec![32, 64, 128, 256, 512, 1024],
                ..Self::default()
            },
            Command::CorrSweep => Self {
                experiment: "corr-sweep".into(),
                ..Self::default()
            },
            Command::NtkDeviation => Self {
                experiment: "ntk-deviation".into(),
                network: deviation_network(0.5),
                widths: vec![64, 128, 256, 512],
                seeds: 8,
                rescales: vec![1.0, 2.0],
                ..Self::default()
            },
        }
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialize")
    }

    /// Every statistic `command` can emit under this configuration.
    pub fn registered_statistics(&self, command: Command) -> Vec<String> {
        match command {
            Command::InitAudit => {
                let layers = self.network.widths().len() - 1;
                let mut v: Vec<String> = (1..=layers).map(|l| format!("layer{l}_norm")).collect();
                v.extend(PGDML_STATISTICS.iter().map(|s| s.to_string()));
                v
            }
            Command::CorrSweep => [false, true]
                .iter()
                .flat_map(|&same| {
                    CORRELATION_ORDERS
                        .iter()
                        .map(move |&(f, d)| correlation_statistic(f, d, same))
                })
                .collect(),
            Command::NtkDeviation => DEVIATION_STATISTICS.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// The configured statistics, or all registered ones.
    pub fn selected_statistics(&self, command: Command) -> Vec<String> {
        if self.statistics.is_empty() {
            self.registered_statistics(command)
        } else {
            self.statistics.clone()
        }
    }

    pub fn validate(&self, command: Command) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Input(m));
        self.network.validate()?;
        if self.widths.is_empty() || self.widths.contains(&0) {
            return bad("widths must be a nonempty list of positive integers".into());
        }
        if self.seeds == 0 {
            return bad("seeds must be positive".into());
        }
        if self.jobs == 0 {
            return bad("jobs must be positive".into());
        }
        if !(self.quantile > 0.0 && self.quantile <= 1.0) {
            return bad(format!("quantile {} outside (0, 1]", self.quantile));
        }
        let registered = self.registered_statistics(command);
        if let Some(s) = self.statistics.iter().find(|s| !registered.contains(s)) {
            return bad(format!("statistic `{s}` is not registered for {}", command.name()));
        }
        if command == Command::NtkDeviation {
            if self.rescales.is_empty() || self.rescales.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
                return bad("rescales must be a nonempty list of positive factors".into());
            }
            if self.steps == 0 || self.fixed_step > self.steps {
                return bad(format!(
                    "need 0 < fixed_step = {} <= steps = {}",
                    self.fixed_step, self.steps
                ));
            }
        }
        Ok(())
    }

    /// The task spec with its seed tied to the master seed.
    pub fn task_spec(&self) -> TaskSpec {
        TaskSpec {
            seed: rng::mix(&[self.master_seed, self.task.seed]),
            ..self.task.clone()
        }
    }

    /// Seed of cell `(label, n, seed_index)`; independent of every other cell.
    pub fn cell_seed(&self, label: &str, n: usize, seed_index: u64) -> u64 {
        rng::mix(&[self.master_seed, rng::label_hash(label), n as u64, seed_index])
    }
}

/// Depth-3 tanh student on 16-dimensional unit-sphere inputs with zero bias
/// variance, the regime in which the linearized residual decays exponentially.
pub fn deviation_network(c_eta: f64) -> NetworkConfig {
    NetworkConfig {
        input_dim: 16,
        bias_variance: 0.0,
        c_eta,
        ..NetworkConfig::default()
    }
}

/// Create `dir` if needed and check that files can be written into it.
pub fn ensure_writable(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
    let probe = dir.join(".ntkcorr-write-probe");
    std::fs::write(&probe, b"")
        .and_then(|_| std::fs::remove_file(&probe))
        .map_err(|e| CliError::Input(format!("{} is not writable: {e}", dir.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        for cmd in [Command::InitAudit, Command::CorrSweep, Command::NtkDeviation] {
            let c = ExperimentConfig {
                statistics: vec!["a".into()],
                output_dir: Some("out/x".into()),
                ..ExperimentConfig::default_for(cmd)
            };
            assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
        }
    }

    #[test]
    fn partial_files_fill_defaults() {
        let c = ExperimentConfig::from_json(r#"{"widths": [8, 16], "network": {"width": 8}}"#).unwrap();
        assert_eq!(c.widths, vec![8, 16]);
        assert_eq!(c.seeds, 16);
        assert!(ExperimentConfig::from_json(r#"{"widht": [8]}"#).is_err());
    }

    #[test]
    fn statistic_names() {
        assert_eq!(correlation_statistic(1, 2, true), "corr_D1_d2_same");
        assert_eq!(parse_correlation_statistic("corr_D2_d1_distinct"), Some((2, 1, false)));
        assert_eq!(parse_correlation_statistic("corr_D2_d2_distinct"), None);
        assert_eq!(parse_correlation_statistic("corr_D0_d1_twice"), None);
        assert_eq!(rescale_label(2.0), "r2");
        assert_eq!(rescale_label(0.5), "r0.5");
    }

    #[test]
    fn unknown_statistic_is_rejected() {
        let c = ExperimentConfig {
            statistics: vec!["corr_D5_d1_same".into()],
            ..ExperimentConfig::default()
        };
        assert!(matches!(c.validate(Command::CorrSweep), Err(CliError::Input(_))));
        let ok = ExperimentConfig {
            statistics: vec!["corr_D0_d2_same".into()],
            ..ExperimentConfig::default()
        };
        ok.validate(Command::CorrSweep).unwrap();
    }

    #[test]
    fn cell_seeds_do_not_shift_with_the_grid() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig {
            widths: vec![16, 32, 64, 128, 256, 512, 1024],
            ..a.clone()
        };
        assert_eq!(a.cell_seed("x", 64, 3), b.cell_seed("x", 64, 3));
        assert_ne!(a.cell_seed("x", 64, 3), a.cell_seed("y", 64, 3));
        assert_ne!(a.cell_seed("x", 64, 3), a.cell_seed("x", 64, 4));
    }
}
