//! Shared data types: the ground-truth topic simplex, generator specs, sample
//! sets and recovery outputs.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{GtmError, Result};
use crate::linalg;
use crate::skew;

/// Tolerance for identities that hold exactly by construction.
pub const CONSTRUCTION_TOL: f64 = 1e-10;
/// Tolerance for quantities produced by an estimator.
pub const ESTIMATION_TOL: f64 = 1e-6;

/// Ground-truth simplex: columns of `a` are the pure-topic vectors, rows of
/// `v` the class functionals with `V A = I`.
#[derive(Clone, Debug)]
pub struct TopicModel {
    a: Array2<f64>,
    v: Array2<f64>,
    alpha: f64,
    r: f64,
    reference_eps: f64,
}

impl TopicModel {
    /// Builds the model from its vertex matrix. `V` is the pseudoinverse, `alpha`
    /// the largest column norm and `r` the skew parameter at a reference accuracy
    /// of one thousandth of the smallest vertex separation.
    pub fn new(a: Array2<f64>) -> Result<Self> {
        let k = a.ncols();
        let eps = if k > 1 {
            1e-3 * skew::min_pairwise_distance(a.view())
        } else {
            1e-3 * linalg::norm(&a.column(0).to_vec()).max(1.0)
        };
        Self::with_reference_eps(a, eps)
    }

    pub fn with_reference_eps(a: Array2<f64>, eps: f64) -> Result<Self> {
        let (n, k) = a.dim();
        if k == 0 || k > n {
            return Err(GtmError::InvalidArgument(format!(
                "need 0 < k <= n, got n = {n}, k = {k}"
            )));
        }
        if linalg::rank_with_tolerance(a.view(), 1e-10) < k {
            return Err(GtmError::InvalidArgument("rank deficient".into()));
        }
        let v = linalg::pseudoinverse(a.view());
        let alpha = column_norms(&a).into_iter().fold(0.0, f64::max);
        let r = skew::compute_r(a.view(), eps)?;
        Ok(Self {
            a,
            v,
            alpha,
            r,
            reference_eps: eps,
        })
    }

    /// Unchecked assembly; use [`validate_model`] to audit the invariants.
    pub fn from_parts(a: Array2<f64>, v: Array2<f64>, alpha: f64, r: f64, reference_eps: f64) -> Self {
        Self {
            a,
            v,
            alpha,
            r,
            reference_eps,
        }
    }

    /// Regular simplex `alpha * Q e_i` for a seeded random orthogonal `Q`.
    pub fn equilateral(n: usize, k: usize, alpha: f64, seed: u64) -> Result<Self> {
        let q = random_orthonormal(n, k, seed);
        Self::new(q * alpha)
    }

    /// Gaussian vertex matrix rescaled so the longest column has norm `alpha`.
    pub fn random(n: usize, k: usize, alpha: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = Array2::from_shape_fn((n, k), |_| rng.sample::<f64, _>(StandardNormal));
        let longest = column_norms(&a).into_iter().fold(0.0, f64::max);
        a *= alpha / longest;
        Self::new(a)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::with_reference_eps(&self.a * c, self.reference_eps * c)
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn k(&self) -> usize {
        self.a.ncols()
    }

    pub fn a(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn v(&self) -> &Array2<f64> {
        &self.v
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn reference_eps(&self) -> f64 {
        self.reference_eps
    }

    pub fn vertex(&self, i: usize) -> ArrayView1<'_, f64> {
        self.a.column(i)
    }

    /// Skew parameter at accuracy `eps`.
    pub fn compute_r(&self, eps: f64) -> Result<f64> {
        skew::compute_r(self.a.view(), eps)
    }

    /// Orthogonal projection onto `span{v_1, .., v_k}` (= column space of `A`).
    pub fn projection(&self) -> Array2<f64> {
        linalg::column_space_projection(self.a.view())
    }
}

fn random_orthonormal(n: usize, k: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Array2::from_shape_fn((n, k), |_| rng.sample::<f64, _>(StandardNormal));
    let f = linalg::svd(g.view());
    f.u.slice(ndarray::s![.., ..k]).to_owned()
}

pub fn column_norms(a: &Array2<f64>) -> Vec<f64> {
    a.axis_iter(Axis(1))
        .map(|c| c.dot(&c).sqrt())
        .collect()
}

/// Lists every violated [`TopicModel`] invariant. Empty means valid.
pub fn validate_model(model: &TopicModel) -> Vec<String> {
    let mut out = Vec::new();
    let (n, k) = model.a.dim();
    if k == 0 || k > n {
        out.push(format!("need 0 < k <= n, got n = {n}, k = {k}"));
        return out;
    }
    if linalg::rank_with_tolerance(model.a.view(), 1e-10) < k {
        out.push("rank deficient".to_string());
        return out;
    }
    if model.v.dim() != (k, n) {
        out.push(format!("V has shape {:?}, expected ({k}, {n})", model.v.dim()));
        return out;
    }
    let va = model.v.dot(&model.a);
    let dev = (&va - &Array2::<f64>::eye(k))
        .iter()
        .map(|x| x.abs())
        .fold(0.0, f64::max);
    if dev > CONSTRUCTION_TOL {
        out.push(format!("V A deviates from identity by {dev:e}"));
    }
    let longest = column_norms(&model.a).into_iter().fold(0.0, f64::max);
    if longest > model.alpha * (1.0 + CONSTRUCTION_TOL) {
        out.push(format!("max |a_i| = {longest} exceeds alpha = {}", model.alpha));
    }
    if model.r < 1.0 {
        out.push(format!("r = {} is below 1", model.r));
    } else {
        match skew::compute_r(model.a.view(), model.reference_eps) {
            Ok(r) if (r - model.r).abs() > 1e-3 * r => {
                out.push(format!("r = {} but the skew at eps = {} is {r}", model.r, model.reference_eps))
            }
            Ok(_) => {}
            Err(e) => out.push(format!("skew parameter: {e}")),
        }
    }
    out
}

/// Law of the mixture weights: exact pure mass per topic, near-pure mass per
/// topic spread uniformly over the `eps_pure` L1 ball around `e_i`, and the
/// remainder from a Dirichlet law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub xi: f64,
    pub near_pure_mass: f64,
    pub eps_pure: f64,
    /// Dirichlet concentration for the interior draws; empty means all ones.
    pub interior_conc: Vec<f64>,
}

impl MixtureSpec {
    pub fn validate(&self, k: usize) -> Result<()> {
        let bad = |m: String| Err(GtmError::InvalidArgument(m));
        if !(self.xi > 0.0 && self.xi <= 1.0) {
            return bad(format!("xi = {} must lie in (0, 1]", self.xi));
        }
        if !(0.0..=1.0).contains(&self.near_pure_mass) {
            return bad(format!("near_pure_mass = {} must lie in [0, 1]", self.near_pure_mass));
        }
        if !(self.eps_pure > 0.0 && self.eps_pure <= 1.0) {
            return bad(format!("eps_pure = {} must lie in (0, 1]", self.eps_pure));
        }
        let total = k as f64 * (self.xi + self.near_pure_mass);
        if total > 1.0 + 1e-12 {
            return bad(format!("k (xi + near_pure_mass) = {total} exceeds 1"));
        }
        if !self.interior_conc.is_empty() {
            if self.interior_conc.len() != k {
                return bad(format!(
                    "interior_conc has {} entries, expected {k}",
                    self.interior_conc.len()
                ));
            }
            if self.interior_conc.iter().any(|&c| !(c > 0.0)) {
                return bad("interior_conc entries must be positive".into());
            }
        }
        Ok(())
    }

    /// Lower bound on `Pr[|e_i - w|_1 <= eps]` for every topic `i`.
    ///
    /// Near-pure draws are `(1 - rho/2) e_i + (rho/2) q` with `q` uniform on the
    /// simplex, so `|e_i - w|_1 = rho (1 - q_i)` and `q_i ~ Beta(1, k - 1)`.
    pub fn g(&self, eps: f64, k: usize) -> f64 {
        if eps < 0.0 {
            return 0.0;
        }
        let frac = if k <= 1 {
            1.0
        } else {
            (eps / self.eps_pure).min(1.0).powi(k as i32 - 1)
        };
        self.xi + self.near_pure_mass * frac
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
    /// Probability that a document is delivered without noise.
    pub p0: f64,
}

impl NoiseSpec {
    pub fn noise_free() -> Self {
        Self { sigma: 0.0, p0: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0) {
            return Err(GtmError::InvalidArgument(format!("sigma = {} < 0", self.sigma)));
        }
        if !(self.p0 > 0.0 && self.p0 <= 1.0) {
            return Err(GtmError::InvalidArgument(format!("p0 = {} not in (0, 1]", self.p0)));
        }
        Ok(())
    }
}

/// View-difference law. The null-space component of each view is an isotropic
/// Gaussian with per-coordinate standard deviation `spread`, resampled until
/// the view norm is at most `m_bound`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewSpec {
    pub zeta: f64,
    pub m_bound: f64,
    pub delta0: f64,
    pub spread: f64,
}

impl ViewSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.zeta > 0.0 && self.zeta <= 1.0) {
            return Err(GtmError::InvalidArgument(format!("zeta = {} not in (0, 1]", self.zeta)));
        }
        if !(self.m_bound > 0.0) || !(self.delta0 > 0.0) || !(self.spread >= 0.0) {
            return Err(GtmError::InvalidArgument(
                "m_bound and delta0 must be positive, spread non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Population `(n-k)`-th eigenvalue of `E[(x1 - x2)(x1 - x2)^T]` before clipping.
    pub fn population_gap(&self) -> f64 {
        2.0 * self.spread * self.spread
    }

    /// Whether the gap exceeds `6 sigma^2 + delta0`.
    pub fn gap_condition(&self, noise: &NoiseSpec) -> bool {
        self.population_gap() > 6.0 * noise.sigma * noise.sigma + self.delta0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub mixture: MixtureSpec,
    pub noise: NoiseSpec,
    pub views: ViewSpec,
    pub seed: u64,
    /// Empirical `lambda_{n-k}((1/m) D D^T)` of the noise-free differences.
    pub empirical_gap: Option<f64>,
}

/// Two views of `m` documents as `n x m` column matrices.
#[derive(Clone, Debug)]
pub struct SampleSet {
    pub x1: Array2<f64>,
    pub x2: Array2<f64>,
    pub latent_w: Option<Array2<f64>>,
    pub noisy_flags: Option<Vec<bool>>,
    pub meta: Option<SampleMeta>,
}

impl SampleSet {
    pub fn new(x1: Array2<f64>, x2: Array2<f64>) -> Result<Self> {
        if x1.dim() != x2.dim() {
            return Err(GtmError::Shape(format!(
                "views have shapes {:?} and {:?}",
                x1.dim(),
                x2.dim()
            )));
        }
        Ok(Self {
            x1,
            x2,
            latent_w: None,
            noisy_flags: None,
            meta: None,
        })
    }

    pub fn n(&self) -> usize {
        self.x1.nrows()
    }

    pub fn m(&self) -> usize {
        self.x1.ncols()
    }

    /// `D = X1 - X2`.
    pub fn difference(&self) -> Array2<f64> {
        &self.x1 - &self.x2
    }

    /// Checks shape agreement and, for clean documents with known weights,
    /// `V x1 = V x2 = w`.
    pub fn validate(&self, model: &TopicModel) -> Vec<String> {
        let mut out = Vec::new();
        if self.x1.dim() != self.x2.dim() {
            out.push("views differ in shape".into());
            return out;
        }
        let Some(w) = &self.latent_w else {
            return out;
        };
        let v1 = model.v().dot(&self.x1);
        let v2 = model.v().dot(&self.x2);
        for i in 0..self.m() {
            if self.noisy_flags.as_ref().is_some_and(|f| f[i]) {
                continue;
            }
            for t in 0..model.k() {
                let want = w[[t, i]];
                if (v1[[t, i]] - want).abs() > CONSTRUCTION_TOL || (v2[[t, i]] - want).abs() > CONSTRUCTION_TOL {
                    out.push(format!("document {i}: V x differs from w at topic {t}"));
                    break;
                }
            }
        }
        out
    }

    /// Column-wise concatenation (used to swap or pool sample sets).
    pub fn concat(&self, other: &SampleSet) -> Result<SampleSet> {
        let x1 = ndarray::concatenate(Axis(1), &[self.x1.view(), other.x1.view()])
            .map_err(|e| GtmError::Shape(e.to_string()))?;
        let x2 = ndarray::concatenate(Axis(1), &[self.x2.view(), other.x2.view()])
            .map_err(|e| GtmError::Shape(e.to_string()))?;
        let mut out = SampleSet::new(x1, x2)?;
        if let (Some(a), Some(b)) = (&self.latent_w, &other.latent_w) {
            out.latent_w = ndarray::concatenate(Axis(1), &[a.view(), b.view()]).ok();
        }
        if let (Some(a), Some(b)) = (&self.noisy_flags, &other.noisy_flags) {
            out.noisy_flags = Some(a.iter().chain(b).copied().collect());
        }
        out.meta = self.meta.clone();
        Ok(out)
    }

    /// Keeps the listed documents in the given order.
    pub fn select(&self, cols: &[usize]) -> SampleSet {
        SampleSet {
            x1: self.x1.select(Axis(1), cols),
            x2: self.x2.select(Axis(1), cols),
            latent_w: self.latent_w.as_ref().map(|w| w.select(Axis(1), cols)),
            noisy_flags: self
                .noisy_flags
                .as_ref()
                .map(|f| cols.iter().map(|&c| f[c]).collect()),
            meta: self.meta.clone(),
        }
    }
}

/// Rank-`k` projection estimate `P_hat = W W^T`.
#[derive(Clone, Debug)]
pub struct ProjectionEstimate {
    pub p_hat: Array2<f64>,
    /// Orthonormal `n x k` basis of the range of `p_hat`.
    pub basis: Array2<f64>,
    pub k: usize,
    /// All singular values of the difference matrix, non-increasing.
    pub singvals: Vec<f64>,
    pub warnings: Vec<String>,
}

impl ProjectionEstimate {
    /// Coordinates of `P_hat x` in the basis.
    pub fn coords(&self, x: ArrayView1<f64>) -> Array1<f64> {
        self.basis.t().dot(&x)
    }

    /// `lambda_{n-k}((1/m) D D^T)` read off the singular values.
    pub fn gap_eigenvalue(&self, m: usize) -> f64 {
        let n = self.singvals.len();
        if self.k >= n {
            return f64::INFINITY;
        }
        let s = self.singvals[n - self.k - 1];
        s * s / m as f64
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub rank: Option<usize>,
    pub extreme_candidates: usize,
    pub removed_by_denoising: usize,
    pub survivors: usize,
    pub cluster_sizes: Vec<usize>,
    pub solver_iterations: usize,
    pub capped_solves: usize,
    pub skipped_points: usize,
    pub phase1_singvals: Vec<f64>,
    pub gap_condition: Option<bool>,
    pub regime_ok: Option<bool>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct RecoveryResult {
    /// `n x k`, columns in canonical (lexicographic) order.
    pub a_hat: Array2<f64>,
    /// `k x n`, pseudoinverse of `a_hat`.
    pub v_hat: Array2<f64>,
    /// Vertex-candidate clusters (ids into the denoised cloud); empty for the
    /// noise-free pipeline.
    pub clusters: Vec<Vec<usize>>,
    pub diagnostics: Diagnostics,
}

impl RecoveryResult {
    pub fn from_vertices(mut a_hat: Array2<f64>, clusters: Vec<Vec<usize>>, diagnostics: Diagnostics) -> Self {
        a_hat = canonical_column_order(&a_hat);
        let v_hat = linalg::pseudoinverse(a_hat.view());
        Self {
            a_hat,
            v_hat,
            clusters,
            diagnostics,
        }
    }
}

/// Sorts the columns of `a` lexicographically by their coordinates.
pub fn canonical_column_order(a: &Array2<f64>) -> Array2<f64> {
    let mut cols: Vec<usize> = (0..a.ncols()).collect();
    cols.sort_by(|&i, &j| {
        a.column(i)
            .iter()
            .zip(a.column(j).iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    a.select(Axis(1), &cols)
}
