mod common;

use seqot::{build_cost_matrix, CostKind};

fn naive(x: &[f64], y: &[f64], kind: CostKind) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let ny = y.iter().map(|a| a * a).sum::<f64>().sqrt();
    let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
    match kind {
        CostKind::Cosine => 1.0 - dot / (nx * ny),
        CostKind::Euclidean => sq.sqrt(),
        CostKind::SquaredEuclidean => sq,
    }
}

#[test]
fn matches_naive_double_loop() {
    let mut rng = common::rng(11);
    let a = common::uniform_matrix(&mut rng, 3, 5);
    let b = common::uniform_matrix(&mut rng, 4, 5);
    for kind in CostKind::ALL {
        let c = build_cost_matrix(a.view(), b.view(), kind).unwrap();
        assert_eq!(c.values().dim(), (3, 4));
        for i in 0..3 {
            for j in 0..4 {
                let x = a.row(i).to_vec();
                let y = b.row(j).to_vec();
                let expected = naive(&x, &y, kind);
                assert!((c.values()[[i, j]] - expected).abs() <= 1e-12, "{kind} ({i},{j})");
            }
        }
    }
}
