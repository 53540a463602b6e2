//! The acceptance criteria, each evaluated from measured artifacts.

use ntkcorr_core::selftest::InvariantOutcome;
use ntkcorr_core::validation::QuadraticOutcome;
use serde::Serialize;

use crate::commands::ntk_deviation::DeviationRun;
use crate::commands::SweepResult;
use crate::config::correlation_statistic;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Criterion {
    pub id: usize,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Criterion {
    pub fn new(id: usize, name: &str, passed: bool, detail: String) -> Self {
        Self {
            id,
            name: name.into(),
            passed,
            detail,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {:<32} {}  {}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.detail
        )
    }
}

pub const NORM_MIN_CASES: usize = 50;
pub const JET_FD_TOL: f64 = 1e-5;
pub const LINEAR_ZERO_TOL: f64 = 1e-12;
pub const ORACLE_TOL: f64 = 1e-8;
pub const KERNEL_TOL: f64 = 1e-8;
pub const FLAT_BAND: f64 = 0.15;
pub const FLATNESS_SLOPE_MAX: f64 = 0.1;
pub const DECAY_R2_MIN: f64 = 0.9;
pub const FLATNESS_MIN_WIDTH: usize = 512;
pub const QUADRATIC_MIN_FEATURES: usize = 256;
pub const QUADRATIC_REL_MAX: f64 = 1e-3;

/// 1. Every invariant group holds on at least 50 cases.
pub fn norm_algebra(outcomes: &[InvariantOutcome]) -> Criterion {
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed()).map(|o| o.name).collect();
    let min_cases = outcomes.iter().map(|o| o.cases).min().unwrap_or(0);
    Criterion::new(
        1,
        "norm algebra",
        failed.is_empty() && min_cases >= NORM_MIN_CASES && outcomes.len() >= 5,
        format!("{} groups, min {min_cases} cases, failed {failed:?}", outcomes.len()),
    )
}

/// 2. Jets against finite differences, and exact zeros on a linear model.
pub fn jet_correctness(fd_error: f64, linear_max: f64) -> Criterion {
    Criterion::new(
        2,
        "jet correctness",
        fd_error <= JET_FD_TOL && linear_max <= LINEAR_ZERO_TOL,
        format!("fd rel err {fd_error:.2e} (<= {JET_FD_TOL:e}), linear model max {linear_max:.1e}"),
    )
}

/// 3. Every supported correlation against the dense construction.
pub fn oracle_equivalence(errors: &[(String, f64)]) -> Criterion {
    let (label, worst) = errors
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .cloned()
        .unwrap_or_else(|| ("none".into(), f64::NAN));
    Criterion::new(
        3,
        "small-instance oracle",
        !errors.is_empty() && errors.iter().all(|(_, e)| *e <= ORACLE_TOL),
        format!("{} checks, worst {worst:.2e} at {label}", errors.len()),
    )
}

/// 4. Layer recursion against the direct kernel.
pub fn kernel_recursion(worst: f64) -> Criterion {
    Criterion::new(
        4,
        "kernel recursion",
        worst <= KERNEL_TOL,
        format!("worst rel err {worst:.2e} (<= {KERNEL_TOL:e})"),
    )
}

/// 5. Width exponents of the layer norms, `‖F(θ_0)‖` and `Θ_0(x, x)` near zero.
pub fn flat_initialization(audit: &SweepResult) -> Criterion {
    let mut names: Vec<String> = audit.fits.keys().filter(|k| k.starts_with("layer")).cloned().collect();
    names.extend(["pgdml1_output".to_string(), "kernel_diag".to_string()]);
    let mut parts = Vec::new();
    let mut ok = true;
    for name in &names {
        match audit.exponent(name) {
            Some(b) => {
                ok &= b.abs() <= FLAT_BAND;
                parts.push(format!("{name} {b:+.3}"));
            }
            None => {
                ok = false;
                parts.push(format!("{name} missing"));
            }
        }
    }
    Criterion::new(5, "initialization flatness", ok, parts.join(", "))
}

/// 6. Decay bands for the correlation functions.
pub fn correlation_decay(sweep: &SweepResult) -> Criterion {
    let bands = [
        (correlation_statistic(0, 2, false), -0.4),
        (correlation_statistic(1, 1, false), -0.25),
        (correlation_statistic(0, 2, true), -0.2),
        (correlation_statistic(1, 2, true), -0.2),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, max) in &bands {
        let b = sweep.exponent(name).unwrap_or(f64::NAN);
        ok &= b <= *max;
        parts.push(format!("{name} {b:+.3} (<= {max})"));
    }
    Criterion::new(6, "correlation decay", ok, parts.join(", "))
}

/// 7. `δ` at the fixed step scales as `n^{-1}` within 0.4.
pub fn linearization_decay(dev: &DeviationRun, statistic: &str) -> Criterion {
    let b = dev.sweep.exponent(statistic).unwrap_or(f64::NAN);
    Criterion::new(
        7,
        "linearization decay",
        (b + 1.0).abs() <= 0.4,
        format!("{statistic} exponent {b:+.3} (-1 +/- 0.4)"),
    )
}

/// 8. Flat `δ_max(s)` over the second half of every wide run with exponential decay.
pub fn deviation_over_time(dev: &DeviationRun, rescale: &str) -> Criterion {
    let slopes = dev.sweep.values(&format!("flatness_slope_{rescale}"));
    let r2 = dev.sweep.values(&format!("decay_r_squared_{rescale}"));
    let mut qualifying = Vec::new();
    for s in slopes.iter().filter(|s| s.n >= FLATNESS_MIN_WIDTH) {
        if let Some(q) = r2.iter().find(|q| q.n == s.n && q.seed == s.seed) {
            if q.value >= DECAY_R2_MIN {
                qualifying.push((s.value, q.value));
            }
        }
    }
    let worst = qualifying.iter().map(|q| q.0).fold(f64::NEG_INFINITY, f64::max);
    Criterion::new(
        8,
        "deviation over time",
        !qualifying.is_empty() && worst <= FLATNESS_SLOPE_MAX,
        format!(
            "{} runs with r^2 >= {DECAY_R2_MIN}, slopes {:?}",
            qualifying.len(),
            qualifying
                .iter()
                .map(|q| format!("{:+.2} (r^2 {:.3})", q.0, q.1))
                .collect::<Vec<_>>()
        ),
    )
}

/// 9. Doubling `r` or halving `n` both scale fixed-step `δ` by `2 ± 1`.
pub fn reparametrization(dev: &DeviationRun, base: &str, doubled: &str) -> Criterion {
    let in_band = |v: f64| (1.0..=3.0).contains(&v);
    let ratios: Vec<(usize, f64)> = dev
        .summary
        .per_width
        .get(doubled)
        .map(|m| {
            m.iter()
                .map(|(n, w)| (*n, w.rescale_ratio.unwrap_or(f64::NAN)))
                .collect()
        })
        .unwrap_or_default();
    let halving = dev.summary.width_halving_ratio.get(base).copied().unwrap_or(f64::NAN);
    Criterion::new(
        9,
        "reparametrization response",
        !ratios.is_empty() && ratios.iter().all(|(_, v)| in_band(*v)) && in_band(halving),
        format!(
            "rate doubling {}, width halving {halving:.2} (2 +/- 1)",
            ratios
                .iter()
                .map(|(n, v)| format!("n={n}: {v:.2}"))
                .collect::<Vec<_>>()
                .join(" ")
        ),
    )
}

/// 10. The quadratic model stays linear while its Hessian does not vanish.
pub fn quadratic_model(outcomes: &[QuadraticOutcome]) -> Criterion {
    let wide: Vec<&QuadraticOutcome> = outcomes
        .iter()
        .filter(|o| o.features >= QUADRATIC_MIN_FEATURES)
        .collect();
    let ok = !wide.is_empty()
        && wide
            .iter()
            .all(|o| o.relative_deviation <= QUADRATIC_REL_MAX && o.hessian_along_g > 0.0);
    Criterion::new(
        10,
        "quadratic-perpendicular model",
        ok,
        wide.iter()
            .map(|o| {
                format!(
                    "N={}: dev {:.1e}, |hess| {:.2}",
                    o.features, o.relative_deviation, o.hessian_along_g
                )
            })
            .collect::<Vec<_>>()
            .join(", "),
    )
}

/// 11. Reruns wrote byte-identical files.
pub fn determinism(compared: &[(String, bool)]) -> Criterion {
    let differing: Vec<&str> = compared.iter().filter(|c| !c.1).map(|c| c.0.as_str()).collect();
    Criterion::new(
        11,
        "determinism",
        !compared.is_empty() && differing.is_empty(),
        format!("{} files compared, differing {differing:?}", compared.len()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commands::ntk_deviation::WidthSummary;
    use ntkcorr_core::asymptotics::SweepSample;

    fn deviation(ratios: &[(usize, f64)], halving: f64) -> DeviationRun {
        let mut dev = DeviationRun::default();
        dev.summary.per_width.insert(
            "r2".into(),
            ratios
                .iter()
                .map(|&(n, r)| {
                    (
                        n,
                        WidthSummary {
                            rescale_ratio: Some(r),
                            ..WidthSummary::default()
                        },
                    )
                })
                .collect(),
        );
        dev.summary.width_halving_ratio.insert("r1".into(), halving);
        dev
    }

    #[test]
    fn reparametrization_band_is_two_plus_minus_one() {
        assert!(reparametrization(&deviation(&[(64, 1.0), (128, 3.0)], 2.0), "r1", "r2").passed);
        assert!(!reparametrization(&deviation(&[(64, 3.2)], 2.0), "r1", "r2").passed);
        assert!(!reparametrization(&deviation(&[(64, 2.0)], 0.9), "r1", "r2").passed);
        assert!(!reparametrization(&deviation(&[], 2.0), "r1", "r2").passed);
    }

    #[test]
    fn flatness_needs_a_qualifying_wide_run() {
        let mut dev = DeviationRun::default();
        let push = |dev: &mut DeviationRun, name: &str, n, seed, v| {
            dev.sweep.samples.push((name.to_string(), SweepSample::new(n, seed, v)));
        };
        push(&mut dev, "flatness_slope_r1", 256, 0, -1.0);
        push(&mut dev, "decay_r_squared_r1", 256, 0, 0.99);
        assert!(!deviation_over_time(&dev, "r1").passed, "narrow runs do not count");
        push(&mut dev, "flatness_slope_r1", 512, 0, 0.5);
        push(&mut dev, "decay_r_squared_r1", 512, 0, 0.5);
        assert!(
            !deviation_over_time(&dev, "r1").passed,
            "no confirmed exponential decay"
        );
        push(&mut dev, "flatness_slope_r1", 512, 1, 0.05);
        push(&mut dev, "decay_r_squared_r1", 512, 1, 0.95);
        assert!(deviation_over_time(&dev, "r1").passed);
        push(&mut dev, "flatness_slope_r1", 1024, 0, 0.2);
        push(&mut dev, "decay_r_squared_r1", 1024, 0, 0.95);
        assert!(!deviation_over_time(&dev, "r1").passed);
    }

    #[test]
    fn determinism_and_quadratic_checks() {
        assert!(determinism(&[("a".into(), true)]).passed);
        assert!(!determinism(&[("a".into(), true), ("b".into(), false)]).passed);
        assert!(!determinism(&[]).passed);
        let q = |features, relative_deviation, hessian_along_g| QuadraticOutcome {
            features,
            relative_deviation,
            hessian_along_g,
        };
        assert!(quadratic_model(&[q(128, 1.0, 1.0), q(256, 1e-4, 2.0)]).passed);
        assert!(!quadratic_model(&[q(256, 1e-4, 0.0)]).passed);
        assert!(!quadratic_model(&[q(128, 1e-4, 1.0)]).passed);
    }

    #[test]
    fn lines_carry_the_verdict() {
        let c = kernel_recursion(1e-3);
        assert!(!c.passed);
        assert!(c.line().contains("FAIL"));
        assert!(kernel_recursion(1e-12).line().contains("PASS"));
    }
}
