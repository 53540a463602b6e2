use ntkcorr_core::asymptotics::{fit_power_law, SweepSample};
use ntkcorr_core::dynamics::{
    f_hat_eval, pgdml_cell, sgd_step, theta_lin_step, train_and_trace, Cost, LinTracker, PointLinearization, RunStatus,
    TraceOptions,
};
use ntkcorr_core::network::{init_params, Hypothesis, Model, NetworkConfig, Task, TaskSpec};
use ntkcorr_core::{validation, Error};
use proptest::prelude::*;

fn tanh_config(width: usize) -> NetworkConfig {
    NetworkConfig {
        width,
        input_dim: 16,
        bias_variance: 0.0,
        c_eta: 0.5,
        ..NetworkConfig::default()
    }
}

fn setup(config: &NetworkConfig, seed: u64) -> (Model<f64>, Vec<f64>, Task<f64>) {
    let task = Task::new(&TaskSpec::default(), config.input_dim, config.output_dim).unwrap();
    let model = Model::new(config, seed).unwrap();
    let theta0 = init_params::<f64>(config, seed).unwrap().theta;
    (model, theta0, task)
}

#[test]
fn linear_model_never_deviates() {
    let c = NetworkConfig {
        c_eta: 0.5,
        ..NetworkConfig::linear(5)
    };
    let (model, theta0, task) = setup(&c, 3);
    let opts = TraceOptions {
        steps: 500,
        seed: 1,
        identity_steps: vec![0, 250],
        ..TraceOptions::default()
    };
    let tr = train_and_trace(&model, &theta0, &task, Cost::Mse, c.eta(), &opts).unwrap();
    assert_eq!(tr.status, RunStatus::Completed);
    assert_eq!(tr.rows.len(), 501);
    for r in &tr.rows {
        assert!(r.delta_max <= 1e-10, "step {}: δ = {}", r.step, r.delta_max);
        assert!(r.zeta_norm <= 1e-10, "step {}: ζ = {}", r.step, r.zeta_norm);
        assert!(r.kernel_drift <= 1e-10, "step {}: drift = {}", r.step, r.kernel_drift);
    }
    // training does make progress
    assert!(tr.rows[500].loss_lin < tr.rows[0].loss_lin);
}

#[test]
fn f_hat_of_theta_lin_is_f_lin() {
    let c = NetworkConfig {
        width: 32,
        input_dim: 4,
        c_eta: 1.0,
        ..NetworkConfig::default()
    };
    let (model, theta0, task) = setup(&c, 5);
    let eta = c.eta();
    let probes = task.probes();
    let mut tracker = LinTracker::new(&model, &theta0, probes, eta).unwrap();
    let mut theta_lin = theta0.clone();
    let mut worst: f64 = 0.0;
    for (_, x) in task.stream(2).take(100) {
        let y = task.target(&x).unwrap();
        let at_x = PointLinearization::new(&model, &theta0, &x).unwrap();
        let cp = Cost::Mse.gradient(&at_x.eval(&theta_lin, &theta0), &y);
        tracker.lin_step(&at_x, &cp);
        theta_lin_step(&mut theta_lin, &at_x, &cp, eta);
        for (i, p) in probes.iter().enumerate() {
            let a = f_hat_eval(&model, &theta_lin, &theta0, p).unwrap()[0];
            worst = worst.max((a - tracker.value(i).unwrap()[0]).abs());
        }
    }
    assert_eq!(tracker.steps(), 100);
    assert!(worst <= 1e-9, "{worst}");
}

#[test]
fn reruns_are_bitwise_identical() {
    let c = tanh_config(32);
    let (model, theta0, task) = setup(&c, 4);
    let opts = TraceOptions {
        steps: 40,
        seed: 9,
        identity_steps: vec![10],
        ..TraceOptions::default()
    };
    let run = || {
        let tr = train_and_trace(&model, &theta0, &task, Cost::Mse, c.eta(), &opts).unwrap();
        let mut csv = Vec::new();
        tr.write_csv(&mut csv).unwrap();
        (tr, csv)
    };
    let (a, csv_a) = run();
    let (b, csv_b) = run();
    assert_eq!(a, b);
    assert_eq!(csv_a, csv_b);
    let other = train_and_trace(
        &model,
        &theta0,
        &task,
        Cost::Mse,
        c.eta(),
        &TraceOptions { seed: 10, ..opts },
    )
    .unwrap();
    assert_ne!(a.rows[1].loss_sgd, other.rows[1].loss_sgd);
}

#[test]
fn huge_rate_diverges_with_partial_trace() {
    let c = NetworkConfig {
        c_eta: 400.0,
        ..tanh_config(16)
    };
    let (model, theta0, task) = setup(&c, 1);
    let opts = TraceOptions {
        steps: 300,
        stability_margin: None,
        ..TraceOptions::default()
    };
    let tr = train_and_trace(&model, &theta0, &task, Cost::Mse, c.eta(), &opts).unwrap();
    match tr.status {
        RunStatus::Diverged { step, loss } => {
            assert!(loss > 1e6 || loss.is_nan());
            assert_eq!(tr.rows.len(), step + 1);
            assert!(step < 300);
        }
        RunStatus::Completed => panic!("expected divergence"),
    }
}

#[test]
fn rate_above_threshold_is_refused() {
    let c = NetworkConfig {
        c_eta: 400.0,
        ..tanh_config(16)
    };
    let (model, theta0, task) = setup(&c, 1);
    let err = train_and_trace(&model, &theta0, &task, Cost::Mse, c.eta(), &TraceOptions::default());
    assert!(matches!(err, Err(Error::Config(_))));
}

#[test]
fn identity_is_trivial_at_the_start() {
    let c = tanh_config(32);
    let (model, theta0, task) = setup(&c, 2);
    let opts = TraceOptions {
        steps: 5,
        identity_steps: vec![0],
        ..TraceOptions::default()
    };
    let tr = train_and_trace(&model, &theta0, &task, Cost::Mse, c.eta(), &opts).unwrap();
    let id = &tr.identity[0];
    assert_eq!((id.step, id.delta_norm, id.residual), (0, 0.0, 0.0));
    assert_eq!(tr.rows[0].delta_max, 0.0);
    assert_eq!(tr.rows[0].zeta_norm, 0.0);
}

#[test]
fn identity_is_exact_for_the_quadratic_model() {
    let c = NetworkConfig {
        c_eta: 0.5,
        antithetic_features: false,
        ..NetworkConfig::quadratic_perp(4, 32)
    };
    let spec = TaskSpec {
        input_radius: 2.0,
        ..TaskSpec::default()
    };
    let task = Task::new(&spec, 4, 1).unwrap();
    let model = Model::new(&c, 1).unwrap();
    let theta0 = init_params::<f64>(&c, 1).unwrap().theta;
    let opts = TraceOptions {
        steps: 30,
        identity_steps: vec![10, 30],
        ..TraceOptions::default()
    };
    let tr = train_and_trace(&model, &theta0, &task, Cost::Mse, c.eta(), &opts).unwrap();
    for id in &tr.identity {
        assert!(id.delta_norm > 1e-8, "nothing to explain at step {}", id.step);
        assert!(id.residual < 1e-8, "step {}: {}", id.step, id.residual);
        assert!(id.first_order_residual > 1e-3);
    }
}

#[test]
fn identity_residual_shrinks_with_width() {
    let mut samples = Vec::new();
    for n in [32usize, 64, 128, 256] {
        for seed in 0..4u64 {
            let c = tanh_config(n);
            let (model, theta0, task) = setup(&c, seed);
            let opts = TraceOptions {
                steps: 50,
                seed,
                identity_steps: vec![50],
                ..TraceOptions::default()
            };
            let tr = train_and_trace(&model, &theta0, &task, Cost::Mse, c.eta(), &opts).unwrap();
            samples.push(SweepSample::new(n, seed, tr.identity[0].residual));
        }
    }
    let fit = fit_power_law(&samples, 0.5).unwrap();
    assert!(fit.exponent < 0.0, "{fit:?}");
}

#[test]
fn antithetic_quadratic_model_stays_linear() {
    let out = validation::quadratic_perpendicular(256, 200, true, 0);
    assert!(out.relative_deviation <= 1e-3, "{}", out.relative_deviation);
    assert!(out.hessian_along_g > 1.0, "{}", out.hessian_along_g);
}

#[test]
fn independent_frequencies_deviate_more() {
    let anti = validation::quadratic_perpendicular(64, 100, true, 1);
    let indep = validation::quadratic_perpendicular(64, 100, false, 1);
    assert!(indep.relative_deviation > 10.0 * anti.relative_deviation);
}

#[test]
fn linear_model_has_no_higher_derivative_hierarchy() {
    let c = NetworkConfig {
        c_eta: 0.5,
        ..NetworkConfig::linear(4)
    };
    let task = Task::new(&TaskSpec::default(), 4, 1).unwrap();
    let cell = pgdml_cell(&c, &task, Cost::Mse, 3).unwrap();
    assert_eq!(cell["pgdml4_order2"], 0.0);
    assert_eq!(cell["pgdml4_order3"], 0.0);
    assert!(cell["pgdml1_output"] > 0.0);
}

/// Final loss after `steps` steps of rate `eta` on one repeated input.
fn repeated_input_loss(model: &Model<f64>, theta0: &[f64], x: &[f64], y: &[f64], eta: f64, steps: usize) -> f64 {
    let mut theta = theta0.to_vec();
    for _ in 0..steps {
        sgd_step(model, &mut theta, x, y, Cost::Mse, eta).unwrap();
    }
    Cost::Mse.value(&model.output(&theta, x).unwrap(), y)
}

#[test]
fn halving_the_rate_approaches_gradient_flow() {
    let c = NetworkConfig {
        width: 16,
        input_dim: 3,
        ..NetworkConfig::default()
    };
    let (model, theta0, _) = setup(&c, 8);
    let x = [0.6, -0.8, 0.0];
    let y = [1.5];
    let time = 0.1;
    let gap = |eta: f64| {
        let s = (time / eta).round() as usize;
        (repeated_input_loss(&model, &theta0, &x, &y, eta, s)
            - repeated_input_loss(&model, &theta0, &x, &y, eta / 2.0, 2 * s))
        .abs()
    };
    let (g1, g2) = (gap(0.01), gap(0.005));
    // the Euler gap is first order in η, so it halves with η
    let ratio = g2 / g1;
    assert!(g1 < 0.05, "{g1}");
    assert!((ratio - 0.5).abs() < 0.1, "{g1} {g2}");
    assert!(g1 > 0.0);
}

#[test]
fn wider_models_deviate_less() {
    let dev = |n: usize| {
        (0..3u64)
            .map(|seed| {
                let c = tanh_config(n);
                let (model, theta0, task) = setup(&c, seed);
                let opts = TraceOptions {
                    steps: 60,
                    seed,
                    ..TraceOptions::default()
                };
                train_and_trace(&model, &theta0, &task, Cost::Mse, c.eta(), &opts)
                    .unwrap()
                    .rows[60]
                    .delta_max
            })
            .sum::<f64>()
    };
    assert!(dev(128) < dev(16));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn trace_rows_are_well_formed(seed in 0u64..1000, width in 4usize..24, c_eta in 0.1f64..1.5) {
        let c = NetworkConfig { width, input_dim: 3, c_eta, ..NetworkConfig::default() };
        let (model, theta0, task) = setup(&c, seed);
        let opts = TraceOptions { steps: 25, seed, stability_margin: None, ..TraceOptions::default() };
        let tr = train_and_trace(&model, &theta0, &task, Cost::LogCosh, c.eta(), &opts).unwrap();
        for (i, r) in tr.rows.iter().enumerate() {
            prop_assert_eq!(r.step, i);
            prop_assert_eq!(r.x_id, i as u64);
        }
        for w in tr.rows.windows(2) {
            prop_assert!(w[1].rho >= w[0].rho);
            prop_assert!((w[1].rho - w[0].rho - w[0].cprime_norm).abs() <= 1e-12 * w[1].rho.max(1.0));
        }
        prop_assert!(tr.rows.iter().all(|r| r.delta_mean <= r.delta_max));
    }

    #[test]
    fn zero_residual_leaves_theta_lin_fixed(seed in 0u64..1000) {
        let c = NetworkConfig { width: 8, input_dim: 3, ..NetworkConfig::default() };
        let (model, theta0, task) = setup(&c, seed);
        let at_x = PointLinearization::new(&model, &theta0, &task.probes()[0]).unwrap();
        let mut t = theta0.clone();
        theta_lin_step(&mut t, &at_x, &[0.0], c.eta());
        prop_assert_eq!(t, theta0);
    }
}
