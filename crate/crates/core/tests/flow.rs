mod common;

use ndarray::{Array1, Array2};
use rand::Rng;
use seqot::wgf::{run_flow, surrogate_gradient, surrogate_loss, tv_distance, w2_squared, FlowState};
use seqot::{build_cost_matrix, exact_solve_uniform, uniform_weights, CostKind, SolverConfig};

#[test]
fn w2_on_uniform_weights_matches_oracle() {
    let mut rng = common::rng(4);
    let support = Array2::from_shape_fn((5, 2), |_| rng.random::<f64>());
    // Disjoint halves of one support: pd on the originals, nu on shifted copies.
    let shifted = support.mapv(|x| x + 0.3);
    let both = ndarray::concatenate![ndarray::Axis(0), support, shifted];
    let u = uniform_weights(5).unwrap();
    let zeros = Array1::<f64>::zeros(5);
    let pd = ndarray::concatenate![ndarray::Axis(0), u, zeros];
    let nu = ndarray::concatenate![ndarray::Axis(0), zeros, u];
    let w2 = w2_squared(nu.view(), pd.view(), both.view(), &SolverConfig::default()).unwrap();
    let cross = build_cost_matrix(support.view(), shifted.view(), CostKind::SquaredEuclidean).unwrap();
    let oracle = common::brute_force_assignment(&cross.values().to_owned()) / 5.0;
    assert!((w2 - oracle).abs() <= 1e-4, "{w2} vs {oracle}");
    assert!((exact_solve_uniform(&cross).unwrap().0 - oracle).abs() <= 1e-12);
}

#[test]
fn surrogate_gradient_matches_finite_differences() {
    let cfg = SolverConfig {
        outer_iters: 200_000,
        tolerance: 1e-15,
        ..SolverConfig::default()
    };
    let h = 1e-5;
    let mut rng = common::rng(31);
    for _ in 0..10 {
        let support = Array2::from_shape_fn((4, 2), |_| rng.random::<f64>());
        let theta = Array1::from_shape_fn(4, |_| rng.random::<f64>() * 2.0 - 1.0);
        let target = Array1::from_shape_fn(4, |_| rng.random::<f64>() + 0.1);
        let target = &target / target.sum();
        let state = FlowState::new(support.clone(), theta.clone(), target.clone(), 0.5, 0.1).unwrap();
        let analytic = surrogate_gradient(&state, &cfg).unwrap();
        let numeric = Array1::from_shape_fn(4, |k| {
            let eval = |delta: f64| {
                let mut t = theta.clone();
                t[k] += delta;
                let s = FlowState::new(support.clone(), t, target.clone(), 0.5, 0.1).unwrap();
                surrogate_loss(&s, &cfg).unwrap()
            };
            (eval(h) - eval(-h)) / (2.0 * h)
        });
        let diff = (&analytic - &numeric).mapv(|x| x * x).sum().sqrt();
        let scale = numeric.mapv(|x| x * x).sum().sqrt().max(1e-12);
        assert!(diff / scale <= 1e-3, "{analytic} vs {numeric}");
    }
}

#[test]
fn flow_reaches_random_target() {
    let mut rng = common::rng(0);
    let support = Array2::from_shape_fn((10, 2), |_| rng.random::<f64>());
    let raw = Array1::from_shape_fn(10, |_| rng.random::<f64>() + 0.1);
    let target = &raw / raw.sum();
    let state = FlowState::uniform(support, target.clone(), 0.5, 0.1).unwrap();
    let trajectory = run_flow(state, 500, 0.05, &SolverConfig::default()).unwrap();
    assert!(trajectory.converged);
    let last = trajectory.records.last().unwrap();
    assert!(last.tv <= 0.05);
    assert_eq!(last.tv, tv_distance(trajectory.final_state.nu().view(), target.view()));
    for pair in trajectory.records.windows(2) {
        assert!(pair[0].kl >= 0.0 && pair[0].w2 >= 0.0);
        if pair[0].step >= 10 {
            assert!(pair[1].kl <= pair[0].kl + 1e-6, "step {}", pair[1].step);
        }
    }
}
