//! Pointwise transport costs and cost-matrix assembly.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{OtError, Result};
use crate::transport::CostMatrix;

/// Cost assigned to a cosine pair when either vector has zero norm.
pub const ZERO_NORM_COSINE_COST: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CostKind {
    /// `1 - x.y / (|x| |y|)`, in `[0, 2]`.
    #[default]
    Cosine,
    /// `|x - y|`.
    Euclidean,
    /// `|x - y|^2`.
    SquaredEuclidean,
}

impl CostKind {
    pub const ALL: [CostKind; 3] = [CostKind::Cosine, CostKind::Euclidean, CostKind::SquaredEuclidean];

    pub fn as_str(self) -> &'static str {
        match self {
            CostKind::Cosine => "cosine",
            CostKind::Euclidean => "euclidean",
            CostKind::SquaredEuclidean => "squared_euclidean",
        }
    }
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CostKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "cosine" => Ok(CostKind::Cosine),
            "euclidean" => Ok(CostKind::Euclidean),
            "squared_euclidean" | "sqeuclidean" => Ok(CostKind::SquaredEuclidean),
            other => Err(format!(
                "unknown cost kind {other:?} (expected cosine, euclidean or squared_euclidean)"
            )),
        }
    }
}

/// Result of a cosine evaluation. `zero_norm` is set when the fallback cost
/// was used because one of the vectors has zero length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineCost {
    pub value: f64,
    pub zero_norm: bool,
}

fn check_dims(x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> Result<()> {
    if x.len() != y.len() {
        return Err(OtError::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
            context: "cost function arguments",
        });
    }
    Ok(())
}

pub fn cosine_cost(x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> Result<CosineCost> {
    check_dims(x, y)?;
    let nx = x.dot(&x).sqrt();
    let ny = y.dot(&y).sqrt();
    if nx == 0.0 || ny == 0.0 {
        return Ok(CosineCost {
            value: ZERO_NORM_COSINE_COST,
            zero_norm: true,
        });
    }
    let value = (1.0 - x.dot(&y) / (nx * ny)).clamp(0.0, 2.0);
    Ok(CosineCost {
        value,
        zero_norm: false,
    })
}

pub fn squared_euclidean_cost(x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> Result<f64> {
    check_dims(x, y)?;
    Ok(x.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum())
}

pub fn euclidean_cost(x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> Result<f64> {
    squared_euclidean_cost(x, y).map(f64::sqrt)
}

/// Evaluates `kind` on one pair. The flag reports a cosine zero-norm fallback.
pub fn pair_cost(kind: CostKind, x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> Result<(f64, bool)> {
    match kind {
        CostKind::Cosine => cosine_cost(x, y).map(|c| (c.value, c.zero_norm)),
        CostKind::Euclidean => euclidean_cost(x, y).map(|c| (c, false)),
        CostKind::SquaredEuclidean => squared_euclidean_cost(x, y).map(|c| (c, false)),
    }
}

/// Gradient of `c(x, y)` with respect to `x`.
///
/// Points where the cost is not differentiable (a zero-norm vector under
/// cosine, `x == y` under euclidean) get a zero gradient and the flag set.
pub fn pair_cost_gradient(
    kind: CostKind,
    x: ArrayView1<'_, f64>,
    y: ArrayView1<'_, f64>,
) -> Result<(Array1<f64>, bool)> {
    check_dims(x, y)?;
    match kind {
        CostKind::SquaredEuclidean => Ok((2.0 * (&x - &y), false)),
        CostKind::Euclidean => {
            let diff = &x - &y;
            let norm = diff.dot(&diff).sqrt();
            if norm == 0.0 {
                Ok((Array1::zeros(x.len()), true))
            } else {
                Ok((diff / norm, false))
            }
        }
        CostKind::Cosine => {
            let nx = x.dot(&x).sqrt();
            let ny = y.dot(&y).sqrt();
            if nx == 0.0 || ny == 0.0 {
                return Ok((Array1::zeros(x.len()), true));
            }
            // d/dx [1 - x.y/(|x||y|)] = -y/(|x||y|) + (x.y) x / (|x|^3 |y|)
            let xy = x.dot(&y);
            let grad = &x * (xy / (nx * nx * nx * ny)) - &y / (nx * ny);
            Ok((grad, false))
        }
    }
}

/// `C_ij = c(S_i, S'_j)` for the rows of two embedding matrices.
///
/// The returned matrix counts the cosine pairs that fell back to
/// [`ZERO_NORM_COSINE_COST`] in [`CostMatrix::zero_norm_pairs`].
pub fn build_cost_matrix(
    source: ArrayView2<'_, f64>,
    target: ArrayView2<'_, f64>,
    kind: CostKind,
) -> Result<CostMatrix> {
    if source.nrows() == 0 || target.nrows() == 0 {
        return Err(OtError::Empty("embedded sequence"));
    }
    if source.ncols() != target.ncols() {
        return Err(OtError::DimensionMismatch {
            expected: source.ncols(),
            found: target.ncols(),
            context: "embedding dimension of cost matrix inputs",
        });
    }
    if source.iter().chain(target.iter()).any(|x| !x.is_finite()) {
        return Err(OtError::NonFinite("cost matrix inputs"));
    }
    let mut values = Array2::zeros((source.nrows(), target.nrows()));
    let mut zero_norm_pairs = 0;
    for (i, x) in source.outer_iter().enumerate() {
        for (j, y) in target.outer_iter().enumerate() {
            let (c, fallback) = pair_cost(kind, x, y)?;
            values[[i, j]] = c;
            zero_norm_pairs += usize::from(fallback);
        }
    }
    let mut matrix = CostMatrix::new(values, kind)?;
    matrix.set_zero_norm_pairs(zero_norm_pairs);
    Ok(matrix)
}
