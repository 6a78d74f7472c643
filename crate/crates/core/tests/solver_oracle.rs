mod common;

use ndarray::{Array1, Array2};
use rand::Rng;
use seqot::matching::hungarian;
use seqot::{
    build_cost_matrix, exact_solve_uniform, ipot_solve, plan_residual, sinkhorn_solve, uniform_weights, CostKind,
    CostMatrix, SolverConfig, SolverStatus,
};

fn cosine_instance(seed: u64, n: usize, m: usize) -> CostMatrix {
    let mut rng = common::rng(seed);
    let a = common::unit_rows(&mut rng, n, 5);
    let b = common::unit_rows(&mut rng, m, 5);
    build_cost_matrix(a.view(), b.view(), CostKind::Cosine).unwrap()
}

#[test]
fn ipot_agrees_with_brute_force() {
    let cfg = SolverConfig::default();
    for n in 2..=7 {
        for seed in 0..10 {
            let c = cosine_instance(100 * n as u64 + seed, n, n);
            let u = uniform_weights(n).unwrap();
            let report = ipot_solve(&c, u.view(), u.view(), &cfg).unwrap();
            let oracle = common::brute_force_assignment(&c.values().to_owned()) / n as f64;
            let got = report.distance().unwrap();
            assert!((got - oracle).abs() <= 1e-4, "n={n} seed={seed}: {got} vs {oracle}");
        }
    }
}

#[test]
fn exact_oracle_matches_independent_enumeration() {
    for n in 1..=6 {
        let c = cosine_instance(7 + n as u64, n, n);
        let (distance, perm) = exact_solve_uniform(&c).unwrap();
        let oracle = common::brute_force_assignment(&c.values().to_owned()) / n as f64;
        assert!((distance - oracle).abs() <= 1e-12);
        let direct: f64 = perm.iter().enumerate().map(|(i, &j)| c.values()[[i, j]]).sum::<f64>() / n as f64;
        assert!((direct - distance).abs() <= 1e-12);
    }
}

#[test]
fn ok_plans_are_feasible() {
    let mut rng = common::rng(3);
    for trial in 0..30 {
        let (n, m) = (rng.random_range(1..7), rng.random_range(1..7));
        let c = cosine_instance(500 + trial, n, m);
        let u: Array1<f64> = Array1::from_shape_fn(n, |_| rng.random::<f64>() + 0.05);
        let v: Array1<f64> = Array1::from_shape_fn(m, |_| rng.random::<f64>() + 0.05);
        let (u, v) = (&u / u.sum(), &v / v.sum());
        for report in [
            ipot_solve(&c, u.view(), v.view(), &SolverConfig::default()).unwrap(),
            sinkhorn_solve(&c, u.view(), v.view(), &SolverConfig::default()).unwrap(),
        ] {
            if report.status == SolverStatus::Ok {
                let plan = report.plan().unwrap();
                assert!(plan_residual(plan) <= 1e-6);
                assert!(plan.matrix().iter().all(|&t| t >= 0.0));
            }
        }
    }
}

#[test]
fn transposed_problem_has_same_distance() {
    // The row and column updates are not interleaved symmetrically, so the two
    // runs only agree once both are converged well past the default tolerance.
    let cfg = SolverConfig {
        outer_iters: 20_000,
        tolerance: 1e-12,
        ..SolverConfig::default()
    };
    for seed in 0..10 {
        let c = cosine_instance(900 + seed, 4, 6);
        let mut rng = common::rng(seed);
        let u = Array1::from_shape_fn(4, |_| rng.random::<f64>() + 0.1);
        let v = Array1::from_shape_fn(6, |_| rng.random::<f64>() + 0.1);
        let (u, v) = (&u / u.sum(), &v / v.sum());
        let forward = ipot_solve(&c, u.view(), v.view(), &cfg).unwrap();
        let backward = ipot_solve(&c.transpose(), v.view(), u.view(), &cfg).unwrap();
        let (a, b) = (forward.distance().unwrap(), backward.distance().unwrap());
        assert!((a - b).abs() <= 1e-8, "seed {seed}: {a} vs {b}");
    }
}

#[test]
fn solvers_are_deterministic() {
    let c = cosine_instance(42, 5, 5);
    let u = uniform_weights(5).unwrap();
    let cfg = SolverConfig::default();
    assert_eq!(
        ipot_solve(&c, u.view(), u.view(), &cfg).unwrap(),
        ipot_solve(&c, u.view(), u.view(), &cfg).unwrap()
    );
    assert_eq!(
        sinkhorn_solve(&c, u.view(), u.view(), &cfg).unwrap(),
        sinkhorn_solve(&c, u.view(), u.view(), &cfg).unwrap()
    );
}

#[test]
fn proximal_cost_does_not_increase() {
    for seed in 0..10 {
        let c = cosine_instance(1200 + seed, 5, 5);
        let u = uniform_weights(5).unwrap();
        let costs: Vec<f64> = [10, 100, 1000]
            .iter()
            .map(|&t| {
                let cfg = SolverConfig {
                    outer_iters: t,
                    tolerance: f64::MIN_POSITIVE,
                    ..SolverConfig::default()
                };
                ipot_solve(&c, u.view(), u.view(), &cfg).unwrap().distance().unwrap()
            })
            .collect();
        assert!(costs[1] <= costs[0] + 1e-6 && costs[2] <= costs[1] + 1e-6, "seed {seed}: {costs:?}");
    }
}

#[test]
fn identical_sequences_cost_nothing() {
    let mut rng = common::rng(8);
    let s = common::uniform_matrix(&mut rng, 6, 4);
    let c = build_cost_matrix(s.view(), s.view(), CostKind::Cosine).unwrap();
    let u = uniform_weights(6).unwrap();
    let report = ipot_solve(&c, u.view(), u.view(), &SolverConfig::default()).unwrap();
    assert!(report.distance().unwrap() <= 1e-6);
}

#[test]
fn transport_relaxes_assignment() {
    for n in 2..=7 {
        let c = cosine_instance(3000 + n as u64, n, n);
        let u = uniform_weights(n).unwrap();
        let ot = ipot_solve(&c, u.view(), u.view(), &SolverConfig::default()).unwrap().distance().unwrap();
        let assignment = hungarian(c.values()).unwrap().total_cost / n as f64;
        assert!(ot <= assignment + 1e-6);
        assert!((ot - assignment).abs() <= 1e-4);
    }
}

#[test]
fn hungarian_matches_brute_force() {
    let mut rng = common::rng(77);
    for n in 1..=7 {
        for _ in 0..5 {
            let c = Array2::from_shape_fn((n, n), |_| rng.random::<f64>() * 10.0);
            let result = hungarian(c.view()).unwrap();
            assert_eq!(result.total_cost, common::brute_force_assignment(&c));
            let mut cols: Vec<usize> = result.assignment.iter().map(|&(_, j)| j).collect();
            cols.sort_unstable();
            assert_eq!(cols, (0..n).collect::<Vec<_>>());
        }
    }
}

#[test]
fn sinkhorn_approaches_exact_as_regularization_fades() {
    let c = cosine_instance(6, 6, 6);
    let u = uniform_weights(6).unwrap();
    let (exact, _) = exact_solve_uniform(&c).unwrap();
    let mut previous = f64::INFINITY;
    for eps in [0.1, 1.0, 10.0, 100.0] {
        let cfg = SolverConfig {
            epsilon: eps,
            ..SolverConfig::default()
        };
        let d = sinkhorn_solve(&c, u.view(), u.view(), &cfg).unwrap().distance().unwrap();
        assert!(d.is_finite() && d >= exact - 1e-9);
        assert!(d <= previous + 1e-9);
        previous = d;
    }
    assert!(previous - exact <= 1e-2);
}
