//! Learning-rate calibration by doubling search on the linearized dynamics.

use serde::{Deserialize, Serialize};

use super::cost::Cost;
use super::linear::{LinTracker, PointLinearization};
use crate::error::{Error, Result};
use crate::network::{init_params, Model, NetworkConfig, Task};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Largest tried `c_η` whose linearized run converged monotonically.
    pub c_eta: f64,
    /// Every tried value with its verdict, in search order.
    pub tried: Vec<(f64, bool)>,
}

/// Probe-mean `C(F_lin(s)(p), ŷ(p))` at `s = 0, window, 2·window, …, steps`.
pub fn linearized_loss_curve(
    config: &NetworkConfig,
    task: &Task<f64>,
    cost: Cost,
    seed: u64,
    steps: usize,
    window: usize,
) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::Input("window must be positive".into()));
    }
    let model = Model::<f64>::new(config, seed)?;
    let theta0 = init_params::<f64>(config, seed)?.theta;
    let probes = task.probes();
    let targets = probes.iter().map(|p| task.target(p)).collect::<Result<Vec<_>>>()?;
    let mut tracker = LinTracker::new(&model, &theta0, probes, config.eta())?;
    let mut theta_lin = theta0.clone();
    let probe_loss = |t: &LinTracker<f64>| -> Result<f64> {
        let mut sum = 0.0;
        for (i, y) in targets.iter().enumerate() {
            sum += cost.value(t.value(i)?, y);
        }
        Ok(sum / targets.len() as f64)
    };
    let mut curve = vec![probe_loss(&tracker)?];
    for (s, (_, x)) in (1..=steps).zip(task.stream(seed)) {
        let y = task.target(&x)?;
        let at_x = PointLinearization::new(&model, &theta0, &x)?;
        let cp = cost.gradient(&at_x.eval(&theta_lin, &theta0), &y);
        tracker.lin_step(&at_x, &cp);
        super::linear::theta_lin_step(&mut theta_lin, &at_x, &cp, config.eta());
        if s % window == 0 {
            curve.push(probe_loss(&tracker)?);
        }
    }
    Ok(curve)
}

/// Every windowed value finite and strictly below the previous one.
pub fn converges_monotonically(curve: &[f64]) -> bool {
    curve.len() >= 2 && curve.iter().all(|v| v.is_finite()) && curve.windows(2).all(|w| w[1] < w[0])
}

/// Double `c_η` from `start` while the linearized run on `task` converges
/// monotonically, at most `max_doublings` times.
pub fn calibrate_c_eta(
    config: &NetworkConfig,
    task: &Task<f64>,
    cost: Cost,
    seed: u64,
    start: f64,
    steps: usize,
    max_doublings: usize,
) -> Result<Calibration> {
    if !(start > 0.0 && start.is_finite()) {
        return Err(Error::Input("starting c_eta must be positive".into()));
    }
    let window = (steps / 8).max(1);
    let mut tried = Vec::new();
    let mut best = None;
    let mut c = start;
    for _ in 0..=max_doublings {
        let cfg = NetworkConfig {
            c_eta: c,
            ..config.clone()
        };
        let ok = converges_monotonically(&linearized_loss_curve(&cfg, task, cost, seed, steps, window)?);
        tried.push((c, ok));
        if !ok {
            break;
        }
        best = Some(c);
        c *= 2.0;
    }
    let c_eta = best.ok_or_else(|| Error::Config(format!("no monotone rate at or above c_eta = {start}")))?;
    Ok(Calibration { c_eta, tried })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::TaskSpec;

    #[test]
    fn monotonicity_verdicts() {
        assert!(converges_monotonically(&[3.0, 2.0, 1.0]));
        assert!(!converges_monotonically(&[3.0, 3.5, 1.0]));
        assert!(!converges_monotonically(&[3.0, f64::NAN]));
        assert!(!converges_monotonically(&[3.0]));
    }

    #[test]
    fn search_stops_at_the_first_failure() {
        let config = NetworkConfig {
            width: 32,
            input_dim: 16,
            bias_variance: 0.0,
            ..NetworkConfig::default()
        };
        let task = Task::new(&TaskSpec::default(), 16, 1).unwrap();
        let cal = calibrate_c_eta(&config, &task, Cost::Mse, 0, 0.25, 80, 12).unwrap();
        let (last, ok) = *cal.tried.last().unwrap();
        assert!(!ok || cal.tried.len() == 13);
        assert!(cal.c_eta <= last);
        assert!(cal.tried.iter().rev().skip(1).all(|(_, ok)| *ok));
        // far past the stability bound the linear model blows up
        let huge = NetworkConfig { c_eta: 1e4, ..config };
        let curve = linearized_loss_curve(&huge, &task, Cost::Mse, 0, 40, 5).unwrap();
        assert!(!converges_monotonically(&curve));
    }
}
