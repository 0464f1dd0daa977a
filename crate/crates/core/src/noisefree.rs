//! Exact recovery from noise-free two-view samples: estimate the span of the
//! class functionals from view differences, project, take extreme points.

use ndarray::{concatenate, Array1, Array2, ArrayView1, Axis};

use crate::error::{GtmError, Result};
use crate::geometry::{self, PointCloud};
use crate::linalg;
use crate::types::{canonical_column_order, Diagnostics, ProjectionEstimate, RecoveryResult, SampleSet, TopicModel};

/// Default geometric tolerance for noise-free inputs.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Relative singular-value cutoff for the rank of `X1 - X2`.
pub const RANK_TOL: f64 = 1e-10;

/// Projection estimate plus the rank check on `X1 - X2`.
pub fn estimate_projection(samples: &SampleSet, k: usize, diag: &mut Diagnostics) -> Result<ProjectionEstimate> {
    let n = samples.n();
    let est = linalg::last_k_left_projection(samples.difference().view(), k)?;
    let smax = est.singvals.first().copied().unwrap_or(0.0);
    let rank = est.singvals.iter().filter(|&&s| s > RANK_TOL * smax).count();
    diag.rank = Some(rank);
    diag.phase1_singvals = est.singvals.clone();
    diag.warnings.extend(est.warnings.iter().cloned());
    if rank != n - k {
        return Err(GtmError::NullSpaceDimensionMismatch {
            expected: n - k,
            found: rank,
        });
    }
    Ok(est)
}

/// Both views of every document, projected; view 1 of document `i` has id
/// `i` and view 2 has id `m + i`.
pub fn projected_views(samples: &SampleSet, est: &ProjectionEstimate) -> PointCloud {
    let both = concatenate(Axis(1), &[samples.x1.view(), samples.x2.view()]).expect("views share a shape");
    PointCloud::projected(both.view(), est)
}

pub fn recover(samples: &SampleSet, k: usize, tol: f64) -> Result<RecoveryResult> {
    let mut diag = Diagnostics::default();
    let est = estimate_projection(samples, k, &mut diag)?;
    let cloud = projected_views(samples, &est);
    let ext = geometry::extreme_points(&cloud, tol);
    diag.extreme_candidates = ext.indices.len();
    diag.solver_iterations = ext.iterations;
    diag.capped_solves = ext.capped;
    if ext.indices.len() != k {
        return Err(GtmError::ExtremePointCount {
            expected: k,
            found: ext.indices.len(),
            candidates: ext.indices.iter().map(|&i| cloud.lift(i)).collect(),
        });
    }
    let a_hat = cloud.lift_columns(&ext.indices);
    Ok(RecoveryResult::from_vertices(a_hat, Vec::new(), diag))
}

/// `|P x - sum_i (v_i . x) a_i|` for the true projection `P`.
pub fn projection_identity_check(model: &TopicModel, x: ArrayView1<f64>) -> f64 {
    let px = model.projection().dot(&x);
    let coeffs = model.v().dot(&x);
    let recon = model.a().dot(&coeffs);
    let diff: Array1<f64> = &px - &recon;
    diff.dot(&diff).sqrt()
}

/// Recovery when weights depend on the activations through an unknown
/// increasing link: the extreme rays of the projected cloud give the vertex
/// directions, and the dual rows are rescaled to unit length.
pub fn recover_general_link(samples: &SampleSet, k: usize, tol: f64) -> Result<RecoveryResult> {
    let mut diag = Diagnostics::default();
    let est = estimate_projection(samples, k, &mut diag)?;
    let cloud = projected_views(samples, &est);
    let ext = geometry::extreme_rays(&cloud, tol)?;
    diag.extreme_candidates = ext.indices.len();
    diag.solver_iterations = ext.iterations;
    diag.capped_solves = ext.capped;
    let unit = |i: usize| {
        let p = cloud.lift(i);
        let nrm = linalg::norm(&p);
        p.into_iter().map(|x| x / nrm).collect::<Vec<f64>>()
    };
    if ext.indices.len() != k {
        return Err(GtmError::ExtremeRayCount {
            expected: k,
            found: ext.indices.len(),
            candidates: ext.indices.iter().map(|&i| unit(i)).collect(),
        });
    }
    let n = samples.n();
    let mut dirs = Array2::zeros((n, k));
    for (c, &i) in ext.indices.iter().enumerate() {
        dirs.column_mut(c).assign(&Array1::from(unit(i)));
    }
    let a_hat = canonical_column_order(&dirs);
    let mut v_hat = linalg::pseudoinverse(a_hat.view());
    for mut row in v_hat.axis_iter_mut(Axis(0)) {
        let nrm = row.dot(&row).sqrt();
        row.mapv_inplace(|x| x / nrm);
    }
    Ok(RecoveryResult {
        a_hat,
        v_hat,
        clusters: Vec::new(),
        diagnostics: diag,
    })
}
