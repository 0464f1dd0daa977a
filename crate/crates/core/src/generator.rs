//! Synthetic two-view documents with ground truth retained.
//!
//! Every document draws from its own counter-indexed stream, so output is
//! identical whether columns are produced serially or in parallel.

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GtmError, Result};
use crate::linalg;
use crate::types::{MixtureSpec, NoiseSpec, SampleMeta, SampleSet, TopicModel, ViewSpec};

/// Rejection attempts per view before giving up on the norm bound.
pub const MAX_VIEW_ATTEMPTS: usize = 100;

const TAG_MIXTURE: u64 = 0x6d69_7874;
const TAG_VIEWS: u64 = 0x7669_6577;
const TAG_NOISE: u64 = 0x6e6f_6973;
const TAG_MATRIX: u64 = 0x6d61_7478;

#[derive(Clone, Debug)]
pub struct GeneratorConfig {
    pub model: TopicModel,
    pub mixture: MixtureSpec,
    pub views: ViewSpec,
    pub noise: NoiseSpec,
    pub seed: u64,
}

/// Per-coordinate link between topic activations and mixture weights:
/// `w_i = f(v_i . x)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    #[default]
    Identity,
    /// `f(t) = t^2` on `t >= 0`.
    Square,
}

impl Link {
    pub fn apply(self, t: f64) -> f64 {
        match self {
            Link::Identity => t,
            Link::Square => t * t,
        }
    }

    pub fn inverse(self, w: f64) -> f64 {
        match self {
            Link::Identity => w,
            Link::Square => w.max(0.0).sqrt(),
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream for document `index` of the stage identified by `tag`.
pub fn doc_rng(seed: u64, tag: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(tag)));
    rng.set_stream(index as u64);
    rng
}

fn dirichlet(rng: &mut ChaCha8Rng, conc: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = conc
        .iter()
        .map(|&a| Gamma::new(a, 1.0).expect("positive shape").sample(rng))
        .collect();
    let total: f64 = g.iter().sum();
    if total > 0.0 {
        g.iter_mut().for_each(|x| *x /= total);
    } else {
        let i = rng.random_range(0..g.len());
        g.iter_mut().for_each(|x| *x = 0.0);
        g[i] = 1.0;
    }
    g
}

fn mixture_column(spec: &MixtureSpec, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let u: f64 = rng.random();
    let topic = rng.random_range(0..k);
    let pure = k as f64 * spec.xi;
    let near = k as f64 * spec.near_pure_mass;
    if u < pure {
        let mut w = vec![0.0; k];
        w[topic] = 1.0;
        w
    } else if u < pure + near {
        // The L1 ball of radius rho around e_i meets the simplex in the scaled
        // copy (1 - rho/2) e_i + (rho/2) simplex.
        let half = 0.5 * spec.eps_pure;
        let q = dirichlet(rng, &vec![1.0; k]);
        let mut w: Vec<f64> = q.iter().map(|x| half * x).collect();
        w[topic] += 1.0 - half;
        w
    } else if spec.interior_conc.is_empty() {
        dirichlet(rng, &vec![1.0; k])
    } else {
        dirichlet(rng, &spec.interior_conc)
    }
}

/// `k x m` mixture weights, one probability vector per column.
pub fn sample_mixture(cfg: &GeneratorConfig, m: usize) -> Result<Array2<f64>> {
    let k = cfg.model.k();
    cfg.mixture.validate(k)?;
    let cols: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| mixture_column(&cfg.mixture, k, &mut doc_rng(cfg.seed, TAG_MIXTURE, i)))
        .collect();
    Ok(columns_to_matrix(k, &cols))
}

fn columns_to_matrix(rows: usize, cols: &[Vec<f64>]) -> Array2<f64> {
    let mut out = Array2::zeros((rows, cols.len()));
    for (j, c) in cols.iter().enumerate() {
        out.column_mut(j).assign(&Array1::from(c.clone()));
    }
    out
}

/// Noise-free view pair for the weights `w` under the identity link.
pub fn sample_views(cfg: &GeneratorConfig, w: &Array2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
    sample_views_with_link(cfg, w, Link::Identity)
}

/// `x^j = A c + N z^j` with `c_i = f^{-1}(w_i)`, `N` an orthonormal basis of the
/// null space of `V` and `z^j` Gaussian with standard deviation `spread`,
/// redrawn until `|x^j| <= M`.
pub fn sample_views_with_link(cfg: &GeneratorConfig, w: &Array2<f64>, link: Link) -> Result<(Array2<f64>, Array2<f64>)> {
    cfg.views.validate()?;
    let model = &cfg.model;
    let (n, k) = (model.n(), model.k());
    if w.nrows() != k {
        return Err(GtmError::Shape(format!("weights have {} rows, expected {k}", w.nrows())));
    }
    let null = linalg::null_space_basis(model.v().view());
    let free = null.ncols();
    let spread = cfg.views.spread;
    let bound = cfg.views.m_bound;

    let pairs: Vec<Result<(Vec<f64>, Vec<f64>)>> = (0..w.ncols())
        .into_par_iter()
        .map(|i| {
            let mut rng = doc_rng(cfg.seed, TAG_VIEWS, i);
            let c = w.column(i).mapv(|t| link.inverse(t));
            let base = model.a().dot(&c);
            let mut draw = || -> Result<Vec<f64>> {
                for _ in 0..MAX_VIEW_ATTEMPTS {
                    let mut x = base.clone();
                    if free > 0 && spread > 0.0 {
                        let z = Array1::from_shape_fn(free, |_| spread * rng.sample::<f64, _>(StandardNormal));
                        x += &null.dot(&z);
                    }
                    if x.dot(&x).sqrt() <= bound {
                        return Ok(x.to_vec());
                    }
                }
                Err(GtmError::MInfeasible {
                    bound,
                    attempts: MAX_VIEW_ATTEMPTS,
                })
            };
            Ok((draw()?, draw()?))
        })
        .collect();
    let mut x1 = Array2::zeros((n, w.ncols()));
    let mut x2 = Array2::zeros((n, w.ncols()));
    for (i, p) in pairs.into_iter().enumerate() {
        let (a, b) = p?;
        x1.column_mut(i).assign(&Array1::from(a));
        x2.column_mut(i).assign(&Array1::from(b));
    }
    Ok((x1, x2))
}

/// Each document stays clean with probability `p0`; otherwise both views get
/// independent `N(0, sigma^2 I)` noise.
pub fn apply_noise(cfg: &GeneratorConfig, x1: &Array2<f64>, x2: &Array2<f64>) -> Result<(Array2<f64>, Array2<f64>, Vec<bool>)> {
    cfg.noise.validate()?;
    if x1.dim() != x2.dim() {
        return Err(GtmError::Shape("views differ in shape".into()));
    }
    let n = x1.nrows();
    let sigma = cfg.noise.sigma;
    let p0 = cfg.noise.p0;
    let cols: Vec<Option<(Vec<f64>, Vec<f64>)>> = (0..x1.ncols())
        .into_par_iter()
        .map(|i| {
            let mut rng = doc_rng(cfg.seed, TAG_NOISE, i);
            let u: f64 = rng.random();
            if u < p0 {
                return None;
            }
            let e1: Vec<f64> = (0..n).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect();
            let e2: Vec<f64> = (0..n).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect();
            Some((e1, e2))
        })
        .collect();
    let mut y1 = x1.clone();
    let mut y2 = x2.clone();
    let mut flags = vec![false; x1.ncols()];
    for (i, c) in cols.into_iter().enumerate() {
        if let Some((e1, e2)) = c {
            flags[i] = true;
            if sigma > 0.0 {
                y1.column_mut(i).zip_mut_with(&Array1::from(e1), |a, b| *a += b);
                y2.column_mut(i).zip_mut_with(&Array1::from(e2), |a, b| *a += b);
            }
        }
    }
    Ok((y1, y2, flags))
}

/// `n x m` matrix of independent `N(0, sigma^2)` entries.
pub fn gaussian_noise_matrix(n: usize, m: usize, sigma: f64, seed: u64) -> Array2<f64> {
    let cols: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng = doc_rng(seed, TAG_MATRIX, i);
            (0..n).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect()
        })
        .collect();
    columns_to_matrix(n, &cols)
}

/// `lambda_{n-k}((1/m) D D^T)` for the difference matrix `D`.
pub fn empirical_gap(d: &Array2<f64>, k: usize) -> Option<f64> {
    let n = d.nrows();
    if k >= n || d.ncols() == 0 {
        return None;
    }
    let s = linalg::singular_values(d.view());
    let v = s.get(n - k - 1).copied().unwrap_or(0.0);
    Some(v * v / d.ncols() as f64)
}

/// Full sample set: weights, views, noise and metadata.
pub fn generate(cfg: &GeneratorConfig, m: usize) -> Result<SampleSet> {
    generate_with_link(cfg, m, Link::Identity)
}

pub fn generate_with_link(cfg: &GeneratorConfig, m: usize, link: Link) -> Result<SampleSet> {
    let w = sample_mixture(cfg, m)?;
    let (x1, x2) = sample_views_with_link(cfg, &w, link)?;
    let gap = empirical_gap(&(&x1 - &x2), cfg.model.k());
    let (y1, y2, flags) = apply_noise(cfg, &x1, &x2)?;
    let mut set = SampleSet::new(y1, y2)?;
    set.latent_w = Some(w);
    set.noisy_flags = Some(flags);
    set.meta = Some(SampleMeta {
        mixture: cfg.mixture.clone(),
        noise: cfg.noise,
        views: cfg.views,
        seed: cfg.seed,
        empirical_gap: gap,
    });
    Ok(set)
}

/// Indices of documents whose weights equal a pure topic exactly.
pub fn pure_documents(w: &Array2<f64>) -> Vec<usize> {
    w.axis_iter(Axis(1))
        .enumerate()
        .filter(|(_, c)| c.iter().filter(|&&x| x == 1.0).count() == 1)
        .map(|(i, _)| i)
        .collect()
}
