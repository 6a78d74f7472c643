use crate::error::{OtError, Result};
use crate::transport::CostMatrix;

/// Largest instance the exhaustive oracle accepts (8! = 40320 permutations).
pub const ORACLE_MAX_N: usize = 8;

/// Exact OT distance for a square instance with uniform marginals.
///
/// With uniform weights on both sides the optimum is attained at a
/// permutation matrix scaled by `1/n`, so enumerating all permutations is
/// exact. Returns the distance and the lexicographically smallest optimal
/// permutation (`perm[i]` is the column matched to row `i`).
pub fn exact_solve_uniform(cost: &CostMatrix) -> Result<(f64, Vec<usize>)> {
    if !cost.is_square() {
        return Err(OtError::NotSquare {
            rows: cost.nrows(),
            cols: cost.ncols(),
        });
    }
    let n = cost.nrows();
    if n > ORACLE_MAX_N {
        return Err(OtError::OracleTooLarge(n));
    }
    let c = cost.values();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = perm.clone();
    let mut best_total = f64::INFINITY;
    loop {
        let total: f64 = perm.iter().enumerate().map(|(i, &j)| c[[i, j]]).sum();
        // strict comparison keeps the first (lexicographically smallest) optimum
        if total < best_total {
            best_total = total;
            best.copy_from_slice(&perm);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok((best_total / n as f64, best))
}

/// Advances `perm` to the next permutation in lexicographic order.
/// Returns `false` (leaving `perm` untouched) once the last one is reached.
pub fn next_permutation(perm: &mut [usize]) -> bool {
    if perm.len() < 2 {
        return false;
    }
    let Some(pivot) = (0..perm.len() - 1).rev().find(|&i| perm[i] < perm[i + 1]) else {
        return false;
    };
    let successor = (pivot + 1..perm.len())
        .rev()
        .find(|&j| perm[j] > perm[pivot])
        .expect("a larger element exists right of the pivot");
    perm.swap(pivot, successor);
    perm[pivot + 1..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostKind;
    use ndarray::{array, Array2};

    fn cm(values: Array2<f64>) -> CostMatrix {
        CostMatrix::new(values, CostKind::SquaredEuclidean).unwrap()
    }

    #[test]
    fn identity_is_optimal_for_zero_diagonal() {
        let (d, p) = exact_solve_uniform(&cm(array![[0.0, 1.0], [1.0, 0.0]])).unwrap();
        assert_eq!(d, 0.0);
        assert_eq!(p, vec![0, 1]);
        let (d, _) = exact_solve_uniform(&cm(array![[0.0, 5.0, 2.0], [3.0, 0.0, 1.0], [4.0, 4.0, 0.0]])).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn swap_is_optimal() {
        let (d, p) = exact_solve_uniform(&cm(array![[4.0, 1.0], [2.0, 3.0]])).unwrap();
        assert_eq!(d, 1.5);
        assert_eq!(p, vec![1, 0]);
    }

    #[test]
    fn ties_resolve_lexicographically() {
        let (d, p) = exact_solve_uniform(&cm(Array2::ones((3, 3)))).unwrap();
        assert_eq!(d, 1.0);
        assert_eq!(p, vec![0, 1, 2]);
    }

    #[test]
    fn rejects_large_and_rectangular() {
        assert!(matches!(
            exact_solve_uniform(&cm(Array2::zeros((9, 9)))),
            Err(OtError::OracleTooLarge(9))
        ));
        assert!(matches!(
            exact_solve_uniform(&cm(Array2::zeros((2, 3)))),
            Err(OtError::NotSquare { .. })
        ));
    }

    #[test]
    fn enumerates_all_permutations_in_order() {
        let mut p = vec![0, 1, 2, 3];
        let mut seen = vec![p.clone()];
        while next_permutation(&mut p) {
            assert!(p > *seen.last().unwrap());
            seen.push(p.clone());
        }
        assert_eq!(seen.len(), 24);
    }
}
