//! Permutation-matched error metrics and weight inference.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::Serialize;

use crate::error::{GtmError, Result};
use crate::linalg;

/// Minimum-cost perfect assignment for a square cost matrix; entry `i` of the
/// result is the column assigned to row `i`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // Potentials formulation with 1-based sentinel column 0.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Matching {
    /// `perm[i]` is the column of the estimate matched to true column `i`.
    pub perm: Vec<usize>,
    pub max_error: f64,
    pub sum_error: f64,
}

fn column_distance(a: ArrayView2<f64>, i: usize, b: ArrayView2<f64>, j: usize) -> f64 {
    a.column(i)
        .iter()
        .zip(b.column(j).iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Assignment of estimated columns to true columns minimising the summed
/// Euclidean error.
pub fn match_permutation(a_true: ArrayView2<f64>, a_hat: ArrayView2<f64>) -> Result<Matching> {
    if a_true.dim() != a_hat.dim() {
        return Err(GtmError::Shape(format!(
            "true {:?} vs estimate {:?}",
            a_true.dim(),
            a_hat.dim()
        )));
    }
    let k = a_true.ncols();
    if k > 64 {
        return Err(GtmError::InvalidArgument(format!("k = {k} exceeds 64")));
    }
    let cost: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| column_distance(a_true, i, a_hat, j)).collect())
        .collect();
    let perm = hungarian(&cost);
    let errs: Vec<f64> = (0..k).map(|i| cost[i][perm[i]]).collect();
    Ok(Matching {
        max_error: errs.iter().copied().fold(0.0, f64::max),
        sum_error: errs.iter().sum(),
        perm,
    })
}

/// Largest row error between `v_true` and `v_hat` under the column matching
/// `perm` of the primal vertices.
pub fn dual_error(v_true: ArrayView2<f64>, v_hat: ArrayView2<f64>, perm: &[usize]) -> f64 {
    perm.iter()
        .enumerate()
        .map(|(i, &j)| {
            v_true
                .row(i)
                .iter()
                .zip(v_hat.row(j).iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

/// Frobenius distance after reordering the columns of `a_hat` by `perm`.
pub fn matched_frobenius(a_true: ArrayView2<f64>, a_hat: ArrayView2<f64>, perm: &[usize]) -> f64 {
    perm.iter()
        .enumerate()
        .map(|(i, &j)| column_distance(a_true, i, a_hat, j).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Columns scaled to unit length.
pub fn unit_columns(a: &Array2<f64>) -> Array2<f64> {
    let mut out = a.clone();
    for mut c in out.columns_mut() {
        let n = c.dot(&c).sqrt();
        c.mapv_inplace(|x| x / n);
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct DualBound {
    pub dual_error: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Checks `dual_error <= 3 max(|V|^2, |V_hat|^2) |A_hat - A|_F` on matched
/// columns.
pub fn dual_bound(
    a_true: ArrayView2<f64>,
    v_true: ArrayView2<f64>,
    a_hat: ArrayView2<f64>,
    v_hat: ArrayView2<f64>,
    perm: &[usize],
) -> Result<DualBound> {
    let nv = linalg::spectral_norm(v_true)?;
    let nh = linalg::spectral_norm(v_hat)?;
    let frob = matched_frobenius(a_true, a_hat, perm);
    let de = dual_error(v_true, v_hat, perm);
    let bound = 3.0 * nv.max(nh).powi(2) * frob;
    // Rounding floor for exact recoveries.
    let slack = 1e-12 * (1.0 + nv.max(nh));
    Ok(DualBound {
        dual_error: de,
        bound,
        holds: de <= bound + slack,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InferredWeights {
    /// `V_hat x`, unclipped.
    pub raw: Vec<f64>,
    /// Negative entries clipped to zero, then renormalised to sum to one.
    pub simplex: Vec<f64>,
}

pub fn infer_weights(v_hat: ArrayView2<f64>, x: ArrayView1<f64>) -> InferredWeights {
    let raw: Array1<f64> = v_hat.dot(&x);
    let clipped: Vec<f64> = raw.iter().map(|&t| t.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    let simplex = if total > 0.0 {
        clipped.iter().map(|t| t / total).collect()
    } else {
        vec![1.0 / raw.len() as f64; raw.len()]
    };
    InferredWeights {
        raw: raw.to_vec(),
        simplex,
    }
}

/// `V_hat X` with rows reordered so that row `i` estimates topic `i`.
pub fn infer_all(v_hat: ArrayView2<f64>, x: ArrayView2<f64>, perm: &[usize]) -> Array2<f64> {
    let w = v_hat.dot(&x);
    let mut out = Array2::zeros(w.dim());
    for (i, &j) in perm.iter().enumerate() {
        out.row_mut(i).assign(&w.row(j));
    }
    out
}
