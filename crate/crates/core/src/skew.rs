//! Skew parameter of a simplex: the smallest `r >= 1` such that cutting an
//! `r eps` ball out of the simplex around any vertex leaves a hull at least
//! `eps` away from that vertex.

use ndarray::ArrayView2;

use crate::error::{GtmError, Result};
use crate::hull;
use crate::linalg;

const REL_TOL: f64 = 1e-4;

pub fn min_pairwise_distance(vertices: ArrayView2<f64>) -> f64 {
    let k = vertices.ncols();
    let mut best = f64::INFINITY;
    for i in 0..k {
        for j in (i + 1)..k {
            let d = (&vertices.column(i) - &vertices.column(j)).mapv(|x| x * x).sum().sqrt();
            best = best.min(d);
        }
    }
    best
}

/// Distance from vertex `i` to the hull of the simplex minus the open ball of
/// radius `radius` around it. Exact while `radius` does not exceed the
/// shortest edge at `i`: the truncated part is then the hull of the other
/// vertices and the edge points at distance `radius`.
pub fn truncated_distance(vertices: ArrayView2<f64>, i: usize, radius: f64, tol: f64) -> f64 {
    let (dim, k) = vertices.dim();
    let ai = vertices.column(i);
    let mut atoms = Vec::with_capacity(2 * (k - 1) * dim);
    for j in (0..k).filter(|&j| j != i) {
        let aj = vertices.column(j);
        let edge = &aj - &ai;
        let len = edge.mapv(|x| x * x).sum().sqrt();
        atoms.extend(aj.iter());
        atoms.extend(ai.iter().zip(edge.iter()).map(|(a, e)| a + radius * e / len));
    }
    let x: Vec<f64> = ai.to_vec();
    hull::min_distance(&x, &atoms, dim, tol, None).distance
}

/// Skew parameter of the simplex whose vertices are the columns of
/// `vertices`, found by bisection to relative accuracy `1e-4`.
pub fn compute_r(vertices: ArrayView2<f64>, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(GtmError::InvalidArgument(format!("eps = {eps} must be positive")));
    }
    let k = vertices.ncols();
    if k <= 1 {
        return Ok(1.0);
    }
    let a0 = vertices.column(0);
    let diffs = ndarray::Array2::from_shape_fn((vertices.nrows(), k - 1), |(r, c)| {
        vertices[[r, c + 1]] - a0[r]
    });
    if linalg::rank_with_tolerance(diffs.view(), 1e-10) < k - 1 {
        return Err(GtmError::FlatSimplex);
    }
    let min_edge = min_pairwise_distance(vertices);
    if min_edge < 3.0 * eps {
        return Err(GtmError::InvalidArgument(format!(
            "vertex separation {min_edge} is below 3 eps = {}",
            3.0 * eps
        )));
    }
    let tol = eps * 1e-7;
    let holds = |r: f64| (0..k).all(|i| truncated_distance(vertices, i, r * eps, tol) >= eps - tol);

    let max_r = min_edge / eps;
    if !holds(max_r) {
        return Err(GtmError::SkewOutOfRange { eps, max_r });
    }
    if holds(1.0) {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (1.0, max_r);
    while hi - lo > REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn segment_has_unit_skew() {
        let a = array![[0.0, 1.0], [0.0, 0.0]];
        assert_eq!(compute_r(a.view(), 0.01).unwrap(), 1.0);
    }

    #[test]
    fn equilateral_triangle() {
        let s3 = 3f64.sqrt();
        let a = array![[0.0, 1.0, 0.5], [0.0, 0.0, s3 / 2.0]];
        let r = compute_r(a.view(), 0.01).unwrap();
        assert!((r - 2.0 / s3).abs() < 2e-4 * r, "{r}");
    }

    #[test]
    fn collinear_vertices_are_flat() {
        let a = array![[0.0, 1.0, 2.0], [0.0, 1.0, 2.0]];
        assert!(matches!(compute_r(a.view(), 0.01), Err(GtmError::FlatSimplex)));
    }

    #[test]
    fn acute_vertex_increases_skew() {
        let s3 = 3f64.sqrt();
        let eq = array![[0.0, 1.0, 0.5], [0.0, 0.0, s3 / 2.0]];
        let acute = array![[0.0, 1.0, 0.0], [0.0, 0.0, 0.15]];
        let r_eq = compute_r(eq.view(), 0.01).unwrap();
        let r_acute = compute_r(acute.view(), 0.01).unwrap();
        assert!(r_acute > r_eq, "{r_acute} vs {r_eq}");
    }
}
