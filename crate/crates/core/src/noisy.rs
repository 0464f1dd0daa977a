//! Recovery from noisy samples: subspace estimate from view differences,
//! density filtering of fresh projected first views, then punctured-hull
//! vertex detection and single-linkage grouping.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GtmError, Result};
use crate::geometry::{self, PointCloud};
use crate::linalg;
use crate::types::{Diagnostics, MixtureSpec, ProjectionEstimate, RecoveryResult, SampleSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisyParams {
    pub eps: f64,
    pub r: f64,
    pub alpha: f64,
    pub p0_gamma: f64,
    /// `eps / (8 r)`.
    pub eps_prime: f64,
    pub density_radius: f64,
    pub density_count_fraction: f64,
    pub puncture_radius: f64,
    pub hull_margin: f64,
    pub linkage_threshold: f64,
    /// Hull-distance tolerance, `eps' / 100`.
    pub tol: f64,
    /// Only used for diagnostics.
    pub sigma: Option<f64>,
    pub delta0: Option<f64>,
}

impl NoisyParams {
    pub fn new(eps: f64, r: f64, alpha: f64, p0_gamma: f64) -> Result<Self> {
        if !(eps > 0.0) || !(r >= 1.0) || !(alpha > 0.0) || !(p0_gamma > 0.0 && p0_gamma <= 1.0) {
            return Err(GtmError::InvalidArgument(format!(
                "need eps > 0, r >= 1, alpha > 0, 0 < p0_gamma <= 1; got {eps}, {r}, {alpha}, {p0_gamma}"
            )));
        }
        let ep = eps / (8.0 * r);
        Ok(Self {
            eps,
            r,
            alpha,
            p0_gamma,
            eps_prime: ep,
            density_radius: ep / 2.0,
            density_count_fraction: p0_gamma / 2.0,
            puncture_radius: 6.0 * r * ep,
            hull_margin: 2.0 * ep,
            linkage_threshold: 16.0 * r * ep,
            tol: ep / 100.0,
            sigma: None,
            delta0: None,
        })
    }

    /// Thresholds from the known mixture law: `gamma = g(eps' / (8 k alpha))`.
    pub fn from_mixture(eps: f64, r: f64, alpha: f64, k: usize, p0: f64, mixture: &MixtureSpec) -> Result<Self> {
        let ep = eps / (8.0 * r);
        let gamma = mixture.g(ep / (8.0 * k as f64 * alpha), k);
        Self::new(eps, r, alpha, p0 * gamma)
    }

    pub fn with_noise_info(mut self, sigma: f64, delta0: f64) -> Self {
        self.sigma = Some(sigma);
        self.delta0 = Some(delta0);
        self
    }

    /// Whether `eps' <= sigma sqrt(k) / 3`, the regime the density argument
    /// needs. `None` when sigma is unknown.
    pub fn regime_ok(&self, k: usize) -> Option<bool> {
        self.sigma.map(|s| self.eps_prime <= s * (k as f64).sqrt() / 3.0)
    }

    /// Minimum neighbour count for `m2` points.
    pub fn count_threshold(&self, m2: usize) -> usize {
        (self.density_count_fraction * m2 as f64).ceil() as usize
    }
}

/// Projection estimate from noisy view differences; no shrinkage is applied
/// since subtracting a multiple of the identity keeps the singular vectors
/// and their order.
pub fn phase1(samples: &SampleSet, k: usize) -> Result<ProjectionEstimate> {
    linalg::last_k_left_projection(samples.difference().view(), k)
}

fn phase1_diagnostics(est: &ProjectionEstimate, m: usize, params: &NoisyParams, diag: &mut Diagnostics) {
    diag.phase1_singvals = est.singvals.clone();
    diag.warnings.extend(est.warnings.iter().cloned());
    if let (Some(s), Some(d0)) = (params.sigma, params.delta0) {
        let lam = est.gap_eigenvalue(m);
        let ok = lam > 4.0 * s * s + d0 / 2.0;
        diag.gap_condition = Some(ok);
        if !ok {
            diag.warnings.push(format!(
                "gap condition violated: lambda_(n-k) = {lam:.4e} <= 4 sigma^2 + delta0/2 = {:.4e}",
                4.0 * s * s + d0 / 2.0
            ));
        }
    }
}

/// Keeps the points with at least `ceil(p0 gamma m2 / 2)` neighbours (self
/// included) within `eps' / 2`.
pub fn denoise(cloud: &PointCloud, params: &NoisyParams, m2: usize) -> Result<PointCloud> {
    let threshold = params.count_threshold(m2);
    let counts = geometry::ball_counts(cloud, params.density_radius);
    let keep: Vec<usize> = (0..cloud.len()).filter(|&i| counts[i] >= threshold).collect();
    if keep.is_empty() {
        return Err(GtmError::DenoisingAnnihilated { threshold });
    }
    Ok(cloud.subset(&keep))
}

/// Distance from every point to the hull of the points outside its puncture
/// ball; `None` when nothing is left outside.
pub fn punctured_distances(cloud: &PointCloud, params: &NoisyParams) -> Vec<Option<(f64, usize, bool)>> {
    let r2 = params.puncture_radius * params.puncture_radius;
    (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let x = cloud.point(i);
            let outside: Vec<usize> = (0..cloud.len())
                .filter(|&j| {
                    let d2: f64 = x.iter().zip(cloud.point(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                    d2 > r2
                })
                .collect();
            if outside.is_empty() {
                return None;
            }
            let h = geometry::dist_to_subset_hull(x, cloud, &outside, params.tol, None);
            Some((h.distance, h.iterations, h.capped))
        })
        .collect()
}

pub fn phase2(denoised: &PointCloud, params: &NoisyParams, k: usize) -> Result<RecoveryResult> {
    let mut diag = Diagnostics::default();
    phase2_into(denoised, params, k, &mut diag)
}

fn phase2_into(denoised: &PointCloud, params: &NoisyParams, k: usize, diag: &mut Diagnostics) -> Result<RecoveryResult> {
    let dists = punctured_distances(denoised, params);
    let mut cand = Vec::new();
    let mut score = Vec::new();
    for (i, d) in dists.iter().enumerate() {
        match d {
            None => diag.skipped_points += 1,
            Some((dist, it, capped)) => {
                diag.solver_iterations += it;
                diag.capped_solves += usize::from(*capped);
                if *dist >= params.hull_margin {
                    cand.push(i);
                    score.push(*dist);
                }
            }
        }
    }
    if diag.skipped_points > 0 {
        diag.warnings.push(format!(
            "{} points had an empty punctured set and were skipped",
            diag.skipped_points
        ));
    }
    diag.extreme_candidates = cand.len();
    let cand_cloud = denoised.subset(&cand);
    let clustering = geometry::single_linkage(&cand_cloud, params.linkage_threshold);
    diag.cluster_sizes = clustering.clusters.iter().map(Vec::len).collect();
    let clusters_ids: Vec<Vec<usize>> = clustering
        .clusters
        .iter()
        .map(|c| c.iter().map(|&p| cand_cloud.id(p)).collect())
        .collect();
    if clustering.clusters.len() != k {
        return Err(GtmError::VertexClusterCount {
            expected: k,
            found: clustering.clusters.len(),
            clusters: clusters_ids,
        });
    }
    let reps: Vec<usize> = clustering
        .clusters
        .iter()
        .map(|c| {
            // Members are in id order, so the first maximum has the lowest id.
            let mut best = c[0];
            for &p in c {
                if score[p] > score[best] {
                    best = p;
                }
            }
            cand[best]
        })
        .collect();
    let a_hat: Array2<f64> = denoised.lift_columns(&reps);
    Ok(RecoveryResult::from_vertices(a_hat, clusters_ids, diag.clone()))
}

/// Full pipeline. `phase1_set` estimates the subspace; only the first views of
/// `fresh` are projected and filtered.
pub fn recover_noisy(phase1_set: &SampleSet, fresh: &SampleSet, k: usize, params: &NoisyParams) -> Result<RecoveryResult> {
    if phase1_set.n() != fresh.n() {
        return Err(GtmError::Shape(format!(
            "phase-1 samples have n = {}, fresh samples n = {}",
            phase1_set.n(),
            fresh.n()
        )));
    }
    let mut diag = Diagnostics::default();
    let est = phase1(phase1_set, k)?;
    phase1_diagnostics(&est, phase1_set.m(), params, &mut diag);
    diag.regime_ok = params.regime_ok(k);
    let cloud = PointCloud::projected(fresh.x1.view(), &est);
    let m2 = fresh.m();
    let denoised = denoise(&cloud, params, m2)?;
    diag.removed_by_denoising = m2 - denoised.len();
    diag.survivors = denoised.len();
    phase2_into(&denoised, params, k, &mut diag)
}
