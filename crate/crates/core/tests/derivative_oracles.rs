use ntkcorr_core::derivatives::{
    correlation, finite_difference_mixed, kernel_eval, CorrelationSpec, CorrelationValue, JetModel,
};
use ntkcorr_core::network::{init_params, Fcnn, Hypothesis, ModelKind, NetworkConfig, QuadraticPerp};
use ntkcorr_core::rng;
use ntkcorr_core::validation as checks;
use proptest::prelude::*;

#[test]
fn jets_match_hyperdual_arithmetic() {
    let worst = checks::jet_vs_hyperdual(12, 3);
    assert!(worst < 1e-11, "worst relative gap {worst:e}");
}

#[test]
fn jets_match_finite_differences() {
    let worst = checks::jet_vs_finite_differences(50, 17);
    assert!(worst < 1e-5, "worst relative gap {worst:e}");
}

#[test]
fn gradient_is_the_first_jet() {
    let worst = checks::gradient_vs_jet(20, 5);
    assert!(worst < 1e-10, "worst relative gap {worst:e}");
}

#[test]
fn correlations_match_dense_tensors() {
    for (label, err) in checks::dense_correlation_oracle(23) {
        assert!(err < 1e-8, "{label}: relative error {err:e}");
    }
}

#[test]
fn linear_model_has_no_higher_derivatives() {
    assert_eq!(checks::linear_model_higher_orders(4), 0.0);
}

#[test]
fn layer_recursion_reproduces_the_kernel() {
    let worst = checks::kernel_recursion(20, 8);
    assert!(worst < 1e-10, "worst relative gap {worst:e}");
}

#[test]
fn first_correlation_is_the_kernel() {
    let c = NetworkConfig {
        width: 32,
        output_dim: 2,
        ..NetworkConfig::default()
    };
    let net = Fcnn::<f64>::new(&c, 1).unwrap();
    let p = init_params::<f64>(&c, 1).unwrap();
    let mut g = rng::seeded(2);
    let x: Vec<f64> = rng::sphere_vec(&mut g, 4, 2.0);
    let y: Vec<f64> = rng::sphere_vec(&mut g, 4, 2.0);
    let k = kernel_eval(&net, &p.theta, &x, &y, c.eta()).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let spec = CorrelationSpec {
                free: 0,
                d: 1,
                inputs: vec![x.clone(), y.clone()],
                output_indices: vec![i, j],
            };
            let CorrelationValue::Scalar(v) = correlation(&net, &p.theta, &spec, c.eta()).unwrap().value else {
                panic!("scalar expected")
            };
            assert!((v - k[i][j]).abs() <= 1e-12 * k[i][j].abs().max(1e-3));
        }
    }
}

#[test]
fn quadratic_model_second_derivative() {
    let c = NetworkConfig::quadratic_perp(3, 64);
    let m = QuadraticPerp::<f64>::new(&c, 4).unwrap();
    let mut g = rng::seeded(9);
    let theta: Vec<f64> = rng::normal_vec(&mut g, 64);
    let x: Vec<f64> = rng::sphere_vec(&mut g, 3, 3f64.sqrt());
    let (_, gf) = m.features(&x).unwrap();
    let (u, v): (Vec<f64>, Vec<f64>) = (rng::normal_vec(&mut g, 64), rng::normal_vec(&mut g, 64));
    let gu: f64 = gf.iter().zip(&u).map(|(a, b)| a * b).sum();
    let gv: f64 = gf.iter().zip(&v).map(|(a, b)| a * b).sum();
    let exact = 2.0 * gu * gv;
    let jet = m.mixed_partial(&theta, &x, &[&u, &v]).unwrap()[0];
    let fd = finite_difference_mixed(&m, &theta, &x, &[&u, &v], 1e-2).unwrap()[0];
    assert!((jet - exact).abs() <= 1e-10 * exact.abs());
    assert!((fd - exact).abs() <= 1e-6 * exact.abs());
    let third = m.mixed_partial(&theta, &x, &[&u, &v, &u]).unwrap()[0];
    assert_eq!(third, 0.0);
}

#[test]
fn quadratic_model_same_input_correlation_vanishes() {
    let c = NetworkConfig::quadratic_perp(3, 64);
    let m = QuadraticPerp::<f64>::new(&c, 4).unwrap();
    let theta = vec![0.0; 64];
    let mut g = rng::seeded(1);
    let x: Vec<f64> = rng::sphere_vec(&mut g, 3, 3f64.sqrt());
    let spec = CorrelationSpec::new(0, vec![x.clone(), x.clone(), x]);
    let v = correlation(&m, &theta, &spec, c.eta()).unwrap().value.magnitude();
    assert!(v < 1e-15, "{v:e}");
}

#[test]
fn per_neuron_variant_matches_finite_differences() {
    let c = NetworkConfig {
        model_kind: ModelKind::FcnnPerNeuron,
        width: 8,
        input_dim: 3,
        ..NetworkConfig::default()
    };
    let net = Fcnn::<f64>::new(&c, 6).unwrap();
    let p = init_params::<f64>(&c, 6).unwrap();
    let mut g = rng::seeded(6);
    let x: Vec<f64> = rng::sphere_vec(&mut g, 3, 3f64.sqrt());
    let dirs: Vec<Vec<f64>> = (0..3).map(|_| rng::sphere_vec(&mut g, p.len(), 1.0)).collect();
    for k in 1..=3 {
        let d: Vec<&[f64]> = dirs[..k].iter().map(|v| v.as_slice()).collect();
        let jet = net.mixed_partial(&p.theta, &x, &d).unwrap()[0];
        let fd = finite_difference_mixed(&net, &p.theta, &x, &d, 1e-2).unwrap()[0];
        assert!((jet - fd).abs() < 1e-5 * jet.abs(), "order {k}: {jet} vs {fd}");
    }
}

#[test]
fn orders_above_four_are_rejected() {
    let c = NetworkConfig {
        width: 4,
        ..NetworkConfig::default()
    };
    let net = Fcnn::<f64>::new(&c, 0).unwrap();
    let x = vec![vec![0.5; 4]; 4];
    let spec = CorrelationSpec::new(2, x);
    assert!(correlation(&net, &vec![0.0; net.param_count()], &spec, 0.1).is_err());
}

fn small() -> (Fcnn<f64>, Vec<f64>, Vec<f64>) {
    let c = NetworkConfig {
        width: 6,
        input_dim: 3,
        ..NetworkConfig::default()
    };
    let net = Fcnn::new(&c, 2).unwrap();
    let p = init_params::<f64>(&c, 2).unwrap();
    (net, p.theta, vec![0.3, -1.1, 0.8])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mixed_partials_are_symmetric(seed in 0u64..1000) {
        let (net, theta, x) = small();
        let mut g = rng::seeded(seed);
        let dirs: Vec<Vec<f64>> = (0..3).map(|_| rng::normal_vec(&mut g, theta.len())).collect();
        let a = net.mixed_partial(&theta, &x, &[&dirs[0], &dirs[1], &dirs[2]]).unwrap()[0];
        let b = net.mixed_partial(&theta, &x, &[&dirs[2], &dirs[0], &dirs[1]]).unwrap()[0];
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-6));
    }

    #[test]
    fn mixed_partials_are_multilinear(seed in 0u64..1000, s in -3.0f64..3.0) {
        let (net, theta, x) = small();
        let mut g = rng::seeded(seed);
        let u: Vec<f64> = rng::normal_vec(&mut g, theta.len());
        let v: Vec<f64> = rng::normal_vec(&mut g, theta.len());
        let w: Vec<f64> = rng::normal_vec(&mut g, theta.len());
        let comb: Vec<f64> = u.iter().zip(&v).map(|(a, b)| s * a + b).collect();
        let lhs = net.mixed_partial(&theta, &x, &[&comb, &w]).unwrap()[0];
        let rhs = s * net.mixed_partial(&theta, &x, &[&u, &w]).unwrap()[0]
            + net.mixed_partial(&theta, &x, &[&v, &w]).unwrap()[0];
        prop_assert!((lhs - rhs).abs() <= 1e-11 * (lhs.abs() + rhs.abs()).max(1e-6));
    }

    #[test]
    fn reverse_sweep_is_the_adjoint(seed in 0u64..1000) {
        let (net, theta, x) = small();
        let mut g = rng::seeded(seed);
        let u: Vec<f64> = rng::normal_vec(&mut g, theta.len());
        let v: Vec<f64> = rng::normal_vec(&mut g, theta.len());
        let grad = net.mixed_partial_grad(&theta, &x, &[&u], &[1.0]).unwrap();
        let lhs: f64 = grad.iter().zip(&v).map(|(a, b)| a * b).sum();
        let rhs = net.mixed_partial(&theta, &x, &[&u, &v]).unwrap()[0];
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-6));
    }
}
