//! Hard token matching and minimum-cost assignment.
//!
//! These are the non-transport rungs of the matching hierarchy: hard matching
//! counts shared tokens, soft bipartite matching pairs tokens one-to-one to
//! minimize summed cost (solved by the Hungarian algorithm), and OT matching
//! (see [`crate::solvers`]) relaxes the one-to-one constraint to a coupling.

use std::collections::HashMap;
use std::hash::Hash;

use ndarray::{Array2, ArrayView2};

use crate::error::{OtError, Result};

/// Multiplier applied to the largest entry when padding rectangular instances.
pub const PADDING_FACTOR: f64 = 10.0;

/// A one-to-one assignment of rows to columns.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// `(row, column)` pairs, sorted by row.
    pub assignment: Vec<(usize, usize)>,
    pub total_cost: f64,
}

impl MatchResult {
    /// Column assigned to each row.
    pub fn permutation(&self) -> Vec<usize> {
        self.assignment.iter().map(|&(_, j)| j).collect()
    }
}

/// Size of the multiset intersection: `sum_t min(count_a(t), count_b(t))`.
pub fn hard_match<T: Hash + Eq>(a: &[T], b: &[T]) -> usize {
    let mut counts: HashMap<&T, usize> = HashMap::new();
    for t in a {
        *counts.entry(t).or_default() += 1;
    }
    let mut shared = 0;
    for t in b {
        if let Some(c) = counts.get_mut(t) {
            if *c > 0 {
                *c -= 1;
                shared += 1;
            }
        }
    }
    shared
}

/// Pads a rectangular cost matrix to square with `PADDING_FACTOR * max`.
pub fn pad_square(cost: ArrayView2<'_, f64>) -> Array2<f64> {
    let (n, m) = cost.dim();
    let size = n.max(m);
    let max = cost.iter().copied().fold(0.0, f64::max);
    let fill = if max > 0.0 { PADDING_FACTOR * max } else { 1.0 };
    let mut padded = Array2::from_elem((size, size), fill);
    padded.slice_mut(ndarray::s![..n, ..m]).assign(&cost);
    padded
}

/// Minimum-cost perfect assignment on a square matrix.
///
/// Runs the O(n^3) shortest-augmenting-path Hungarian method, then picks the
/// lexicographically smallest assignment among all optimal ones by searching
/// the tight edges of the final dual solution. `total_cost` is summed over
/// rows in order.
pub fn hungarian(cost: ArrayView2<'_, f64>) -> Result<MatchResult> {
    let (n, m) = cost.dim();
    if n != m {
        return Err(OtError::NotSquare { rows: n, cols: m });
    }
    if n == 0 {
        return Err(OtError::Empty("assignment cost matrix"));
    }
    if cost.iter().any(|x| !x.is_finite()) {
        return Err(OtError::NonFinite("assignment cost matrix"));
    }

    let (row_pot, col_pot, mut assign) = solve_assignment(cost);

    let scale = 1.0 + cost.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let tight_tol = 1e-10 * scale * n as f64;
    let tight: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| cost[[i, j]] - row_pot[i] - col_pot[j] <= tight_tol)
                .collect()
        })
        .collect();
    lexicographic_refine(&tight, &mut assign);

    let total_cost = assign.iter().enumerate().map(|(i, &j)| cost[[i, j]]).sum();
    Ok(MatchResult {
        assignment: assign.into_iter().enumerate().collect(),
        total_cost,
    })
}

/// Returns (row potentials, column potentials, row -> column assignment).
fn solve_assignment(cost: ArrayView2<'_, f64>) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let n = cost.nrows();
    // 1-based arrays; index 0 is the virtual source row/column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assign = vec![0usize; n];
    for j in 1..=n {
        assign[owner[j] - 1] = j - 1;
    }
    (u[1..].to_vec(), v[1..].to_vec(), assign)
}

/// Rewrites `assign` (a perfect matching on `tight`) into the
/// lexicographically smallest perfect matching of the tight graph.
fn lexicographic_refine(tight: &[Vec<usize>], assign: &mut [usize]) {
    let n = assign.len();
    let mut owner = vec![usize::MAX; n];
    for (i, &j) in assign.iter().enumerate() {
        owner[j] = i;
    }
    let mut fixed_col = vec![false; n];

    for i in 0..n {
        for &j in &tight[i] {
            if fixed_col[j] {
                continue;
            }
            if assign[i] == j {
                break;
            }
            // Give column j to row i; its previous owner must reach the
            // column row i releases through an alternating path.
            let saved = (assign.to_vec(), owner.clone());
            let released = assign[i];
            let displaced = owner[j];
            owner[released] = usize::MAX;
            assign[i] = j;
            owner[j] = i;
            let mut visited = fixed_col.clone();
            visited[j] = true;
            if augment(displaced, tight, assign, &mut owner, &mut visited) {
                break;
            }
            assign.copy_from_slice(&saved.0);
            owner = saved.1;
        }
        fixed_col[assign[i]] = true;
    }
}

fn augment(row: usize, tight: &[Vec<usize>], assign: &mut [usize], owner: &mut [usize], visited: &mut [bool]) -> bool {
    for &c in &tight[row] {
        if visited[c] {
            continue;
        }
        visited[c] = true;
        if owner[c] == usize::MAX || augment(owner[c], tight, assign, owner, visited) {
            assign[row] = c;
            owner[c] = row;
            return true;
        }
    }
    false
}
