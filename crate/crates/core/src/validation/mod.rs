//! Measured agreement between the derivative machinery and independent
//! oracles, shared by the test suites and the `suite` command.
//!
//! Every check returns its worst observed error so callers can print it
//! against their own tolerance.

pub mod hyperdual;

use crate::derivatives::{
    correlation, correlation_norm_hopm, finite_difference_mixed, jacobian, kernel_eval, kernel_layerwise,
    CorrelationSpec, CorrelationValue, JetModel,
};
use crate::dynamics::{train_and_trace, Cost, TraceOptions};
use crate::network::{
    init_params, Activation, Fcnn, Hypothesis, Model, ModelKind, NetworkConfig, QuadraticPerp, Task, TaskSpec,
};
use crate::rng;
use crate::tensor::{contract, spectral_norm_exact};
use crate::NormOptions;

fn unit(g: &mut rng::Rng, n: usize) -> Vec<f64> {
    rng::sphere_vec(g, n, 1.0)
}

fn input(g: &mut rng::Rng, d: usize) -> Vec<f64> {
    rng::sphere_vec(g, d, (d as f64).sqrt())
}

fn tanh_net(width: usize, depth: usize, seed: u64) -> (NetworkConfig, Fcnn<f64>, Vec<f64>) {
    let c = NetworkConfig {
        width,
        depth,
        input_dim: 3,
        ..NetworkConfig::default()
    };
    let net = Fcnn::new(&c, seed).unwrap();
    let p = init_params::<f64>(&c, seed).unwrap();
    (c, net, p.theta)
}

/// Worst `|fd − jet| / |jet|` over `cases` seeded width-8 tanh networks and orders 1..=3.
pub fn jet_vs_finite_differences(cases: usize, seed: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for case in 0..cases as u64 {
        let (_, net, theta) = tanh_net(8, 3, rng::mix(&[seed, case]));
        let mut g = rng::seeded(rng::mix(&[seed, case, 1]));
        let x = input(&mut g, 3);
        let dirs: Vec<Vec<f64>> = (0..3).map(|_| unit(&mut g, theta.len())).collect();
        for order in 1..=3 {
            let d: Vec<&[f64]> = dirs[..order].iter().map(|v| v.as_slice()).collect();
            let jet = net.mixed_partial(&theta, &x, &d).unwrap()[0];
            let fd = finite_difference_mixed(&net, &theta, &x, &d, 1e-2).unwrap()[0];
            worst = worst.max((fd - jet).abs() / jet.abs());
        }
    }
    worst
}

/// Worst relative disagreement with hyper-dual arithmetic for `k = 1..=4` over several activations.
pub fn jet_vs_hyperdual(cases: usize, seed: u64) -> f64 {
    let acts = [Activation::Tanh, Activation::Sin, Activation::Softplus];
    let mut worst: f64 = 0.0;
    for case in 0..cases as u64 {
        let c = NetworkConfig {
            width: 5,
            depth: 2 + (case as usize % 3),
            input_dim: 2,
            output_dim: 1 + (case as usize % 2),
            activation: acts[case as usize % 3],
            activate_input: case % 4 == 1,
            ..NetworkConfig::default()
        };
        let s = rng::mix(&[seed, case]);
        let net = Fcnn::new(&c, s).unwrap();
        let p = init_params::<f64>(&c, s).unwrap();
        let mut g = rng::seeded(rng::mix(&[s, 1]));
        let x = input(&mut g, 2);
        let dirs: Vec<Vec<f64>> = (0..4).map(|_| unit(&mut g, p.len())).collect();
        for k in 0..=4 {
            let d: Vec<&[f64]> = dirs[..k].iter().map(|v| v.as_slice()).collect();
            let jet = net.mixed_partial(&p.theta, &x, &d).unwrap();
            let oracle = hyperdual::mixed_partial(&c, &p, &x, &d);
            let scale = oracle.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
            for (a, b) in jet.iter().zip(&oracle) {
                worst = worst.max((a - b).abs() / scale);
            }
        }
    }
    worst
}

/// Largest `|·|` of any order ≥ 2 quantity on the exactly linear model.
pub fn linear_model_higher_orders(seed: u64) -> f64 {
    let c = NetworkConfig::linear(5);
    let net = Fcnn::<f64>::new(&c, 0).unwrap();
    let mut g = rng::seeded(seed);
    let theta = rng::normal_vec::<f64>(&mut g, 5);
    let xs: Vec<Vec<f64>> = (0..5).map(|_| input(&mut g, 5)).collect();
    let dirs: Vec<Vec<f64>> = (0..4).map(|_| unit(&mut g, 5)).collect();
    let mut worst: f64 = 0.0;
    for k in 2..=4 {
        let d: Vec<&[f64]> = dirs[..k].iter().map(|v| v.as_slice()).collect();
        worst = worst.max(net.mixed_partial(&theta, &xs[0], &d).unwrap()[0].abs());
        worst = worst.max(
            net.mixed_partial_grad(&theta, &xs[0], &d[..k - 1], &[1.0])
                .unwrap()
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs())),
        );
    }
    let opts = NormOptions::default();
    for (free, d) in [(0, 2), (0, 3), (0, 4), (1, 1), (1, 2), (1, 3), (2, 1), (2, 2)] {
        let spec = CorrelationSpec::new(free, xs[..=d].to_vec());
        let r = if free == 2 {
            correlation_norm_hopm(&net, &theta, &spec, 0.5, &opts).unwrap()
        } else {
            correlation(&net, &theta, &spec, 0.5).unwrap()
        };
        worst = worst.max(r.value.magnitude());
    }
    worst
}

fn prefactor(free: usize, d: usize, eta: f64) -> f64 {
    let fact = |k: usize| (1..=k).product::<usize>() as f64;
    eta.powf(free as f64 / 2.0 + d as f64) / (fact(free) * fact(d))
}

/// `(label, relative error)` for every supported `C^{D,d}` against dense derivative tensors.
pub fn dense_correlation_oracle(seed: u64) -> Vec<(String, f64)> {
    let toys = [
        NetworkConfig {
            width: 3,
            depth: 2,
            input_dim: 2,
            ..NetworkConfig::default()
        },
        NetworkConfig {
            width: 2,
            depth: 3,
            input_dim: 2,
            activation: Activation::Sin,
            ..NetworkConfig::default()
        },
        NetworkConfig {
            width: 3,
            depth: 2,
            input_dim: 2,
            output_dim: 2,
            activation: Activation::Softplus,
            ..NetworkConfig::default()
        },
    ];
    let eta = 0.3;
    let mut out = Vec::new();
    for (t, c) in toys.iter().enumerate() {
        let s = rng::mix(&[seed, t as u64]);
        let net = Fcnn::new(c, s).unwrap();
        let p = init_params::<f64>(c, s).unwrap();
        assert!(p.len() <= 40);
        let mut g = rng::seeded(rng::mix(&[s, 9]));
        let xs: Vec<Vec<f64>> = (0..5).map(|_| input(&mut g, 2)).collect();
        let outs: Vec<usize> = (0..5).map(|a| (a + t) % c.output_dim).collect();
        // gradients from the oracle itself
        let grads: Vec<Vec<f64>> = (0..5)
            .map(|a| hyperdual::dense_derivative(c, &p, &xs[a], outs[a], 1).into_values())
            .collect();
        for (free, d) in [(0, 1), (0, 2), (0, 3), (0, 4), (1, 1), (1, 2), (1, 3), (2, 1), (2, 2)] {
            let full = hyperdual::dense_derivative(c, &p, &xs[0], outs[0], free + d);
            let pairs: Vec<(usize, &[f64])> = (0..d).map(|a| (free + a, grads[a + 1].as_slice())).collect();
            let reduced = contract(&full, &pairs).unwrap();
            let spec = CorrelationSpec {
                free,
                d,
                inputs: xs[..=d].to_vec(),
                output_indices: outs[..=d].to_vec(),
            };
            let pf = prefactor(free, d, eta);
            let err = match free {
                0 => {
                    let reference = pf * reduced.values()[0];
                    let got = match correlation(&net, &p.theta, &spec, eta).unwrap().value {
                        CorrelationValue::Scalar(v) => v,
                        other => panic!("expected a scalar, got {other:?}"),
                    };
                    (got - reference).abs() / reference.abs()
                }
                1 => {
                    let got = match correlation(&net, &p.theta, &spec, eta).unwrap().value {
                        CorrelationValue::Vector(v) => v,
                        other => panic!("expected a vector, got {other:?}"),
                    };
                    let num: f64 = got
                        .iter()
                        .zip(reduced.values())
                        .map(|(a, b)| (a - pf * b).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    let den: f64 = reduced.values().iter().map(|b| (pf * b).powi(2)).sum::<f64>().sqrt();
                    num / den
                }
                _ => {
                    let reference = pf * spectral_norm_exact(&reduced).unwrap().value;
                    let opts = NormOptions {
                        restarts: 3,
                        tol: 1e-15,
                        max_iters: 20_000,
                        seed: 1,
                    };
                    let got = correlation_norm_hopm(&net, &p.theta, &spec, eta, &opts).unwrap();
                    (got.value.magnitude() - reference).abs() / reference
                }
            };
            out.push((format!("toy {t} C^{{{free},{d}}}"), err));
        }
    }
    out
}

/// Worst relative gap between the layer recursion and the direct kernel over `cases` networks.
pub fn kernel_recursion(cases: usize, seed: u64) -> f64 {
    let acts = [Activation::Tanh, Activation::Erf, Activation::Sin, Activation::Softplus];
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let c = NetworkConfig {
            model_kind: if case % 5 == 3 {
                ModelKind::FcnnPerNeuron
            } else {
                ModelKind::Fcnn
            },
            width: 8 + 8 * (case % 4),
            depth: 2 + case % 3,
            input_dim: 3,
            output_dim: 1 + case % 2,
            activation: acts[case % 4],
            activate_input: case % 3 == 2,
            biases: case % 7 != 6,
            ..NetworkConfig::default()
        };
        let s = rng::mix(&[seed, case as u64]);
        let net = Fcnn::new(&c, s).unwrap();
        let p = init_params::<f64>(&c, s).unwrap();
        let mut g = rng::seeded(rng::mix(&[s, 2]));
        let (x, y) = (input(&mut g, 3), input(&mut g, 3));
        let eta = c.eta();
        let a = kernel_eval(&net, &p.theta, &x, &y, eta).unwrap();
        let b = kernel_layerwise(&net, &p.theta, &x, &y, eta).unwrap();
        let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for (ra, rb) in a.iter().zip(&b) {
            for (u, v) in ra.iter().zip(rb) {
                worst = worst.max((u - v).abs() / scale);
            }
        }
    }
    worst
}

/// Worst relative gap between `∇F·v` and the single-direction jet over `cases` seeded draws.
pub fn gradient_vs_jet(cases: usize, seed: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for case in 0..cases as u64 {
        let (_, net, theta) = tanh_net(6, 3, rng::mix(&[seed, case]));
        let mut g = rng::seeded(rng::mix(&[seed, case, 3]));
        let x = input(&mut g, 3);
        let v = rng::normal_vec::<f64>(&mut g, theta.len());
        let grad = net.gradient(&theta, &x, 0).unwrap();
        let lhs: f64 = grad.iter().zip(&v).map(|(a, b)| a * b).sum();
        let rhs = net.mixed_partial(&theta, &x, &[&v]).unwrap()[0];
        worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1e-300));
    }
    worst
}

pub struct QuadraticOutcome {
    pub features: usize,
    /// `max_s δ_max(s) / output scale`.
    pub relative_deviation: f64,
    /// `|∇²F(θ_0)(x)[g, g]|` at the first probe, with `g` the feature direction `A f(x)`.
    pub hessian_along_g: f64,
}

/// Train the quadratic model with `features` Fourier features for `steps` steps.
pub fn quadratic_perpendicular(features: usize, steps: usize, antithetic: bool, seed: u64) -> QuadraticOutcome {
    let d = 4;
    let config = NetworkConfig {
        c_eta: 0.5,
        antithetic_features: antithetic,
        ..NetworkConfig::quadratic_perp(d, features)
    };
    let spec = TaskSpec {
        input_radius: (d as f64).sqrt(),
        ..TaskSpec::default()
    };
    let task = Task::<f64>::new(&spec, d, 1).unwrap();
    let model = Model::<f64>::new(&config, seed).unwrap();
    let theta0 = init_params::<f64>(&config, seed).unwrap().theta;
    let opts = TraceOptions {
        steps,
        seed,
        ..TraceOptions::default()
    };
    let trace = train_and_trace(&model, &theta0, &task, Cost::Mse, config.eta(), &opts).unwrap();

    let x = &task.probes()[0];
    let q = QuadraticPerp::<f64>::new(&config, seed).unwrap();
    let (_, g) = q.features(x).unwrap();
    let hess = model.mixed_partial(&theta0, x, &[&g, &g]).unwrap()[0];
    assert_eq!(jacobian(&model, &theta0, x).unwrap()[0].len(), features);
    QuadraticOutcome {
        features,
        relative_deviation: trace.max_delta() / trace.output_scale,
        hessian_along_g: hess.abs(),
    }
}
