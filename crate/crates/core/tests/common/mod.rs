//! Fixtures and statistical checks shared by the integration tests and the
//! acceptance runner.
#![allow(dead_code)]

use gtm_core::generator;
use gtm_core::geometry::{self, PointCloud};
use gtm_core::harness::{self, presets, TrialPoint, TrialSpec};
use gtm_core::linalg;
use gtm_core::noisy::{self, NoisyParams};
use gtm_core::types::{ProjectionEstimate, SampleSet, TopicModel};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// One draw of the noisy desk configuration with its phase-1 estimate.
pub struct NoisyInstance {
    pub spec: TrialSpec,
    pub model: TopicModel,
    pub params: NoisyParams,
    pub phase1: SampleSet,
    pub fresh: SampleSet,
    pub est: ProjectionEstimate,
    /// Projected fresh first views, lifted back to the ambient space.
    pub fresh_points: Vec<Vec<f64>>,
}

pub fn noisy_point(m: usize, seed: u64) -> TrialPoint {
    TrialPoint { n: 15, k: 3, m, sigma: 0.05, seed }
}

pub fn noisy_instance(seed: u64) -> NoisyInstance {
    let spec = presets::noisy_desk().trial;
    let point = noisy_point(20_000, seed);
    let model = harness::build_model(&spec, point.n, point.k, seed).unwrap();
    let (phase1, fresh) = harness::trial_samples(&spec, &model, &point).unwrap();
    let params = harness::noisy_params(&spec, &model, point.sigma).unwrap();
    let est = noisy::phase1(&phase1, point.k).unwrap();
    let cloud = PointCloud::projected(fresh.x1.view(), &est);
    let fresh_points = (0..cloud.len()).map(|i| cloud.lift(i)).collect();
    NoisyInstance { spec, model, params, phase1, fresh, est, fresh_points }
}

/// `|P - P_hat|_2` of the phase-1 estimate at the noisy configuration.
pub fn phase1_error(m1: usize, seed: u64) -> f64 {
    let spec = presets::noisy_desk().trial;
    let point = noisy_point(m1, seed);
    let model = harness::build_model(&spec, point.n, point.k, seed).unwrap();
    let cfg = harness::generator_config(&spec, &model, point.sigma, harness::role_seed(seed, 1));
    let set = generator::generate(&cfg, m1).unwrap();
    let est = noisy::phase1(&set, point.k).unwrap();
    linalg::spectral_norm((&model.projection() - &est.p_hat).view()).unwrap()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn binomial_se(p: f64, m: usize) -> f64 {
    (p * (1.0 - p) / m as f64).sqrt()
}

/// Mass-concentration constants for the covariance check: `n = 15`,
/// `sigma = 0.05`, `eps = sigma^2 / 2`, `delta = 0.05`.
pub const NOISE_COV_N: usize = 15;
pub const NOISE_COV_SIGMA: f64 = 0.05;
pub const NOISE_COV_DELTA: f64 = 0.05;
/// Sample-size multiplier: the smallest value reaching 99% over pilot seeds
/// `0..400`. Checks use seeds from 1000 on.
pub const NOISE_COV_C: f64 = 7.5;

pub fn noise_cov_eps() -> f64 {
    0.5 * NOISE_COV_SIGMA * NOISE_COV_SIGMA
}

pub fn noise_cov_m(c: f64) -> usize {
    let (n, s, e) = (NOISE_COV_N as f64, NOISE_COV_SIGMA, noise_cov_eps());
    (c * n * s.powi(4) / (e * e) * (1.0 / NOISE_COV_DELTA).ln()).ceil() as usize
}

/// `|(1/m) E E^T - 2 sigma^2 I|_2` with `E` the difference of two
/// independent Gaussian noise matrices.
pub fn noise_cov_deviation(m: usize, seed: u64) -> f64 {
    let (n, s) = (NOISE_COV_N, NOISE_COV_SIGMA);
    let e1 = generator::gaussian_noise_matrix(n, m, s, harness::role_seed(seed, 11));
    let e2 = generator::gaussian_noise_matrix(n, m, s, harness::role_seed(seed, 12));
    let e = &e1 - &e2;
    let cov = e.dot(&e.t()) / m as f64 - Array2::<f64>::eye(n) * (2.0 * s * s);
    linalg::spectral_norm(cov.view()).unwrap()
}

/// Fraction of `seeds` whose deviation is at most `eps`, at multiplier `c`.
pub fn noise_cov_fraction(c: f64, seeds: std::ops::Range<u64>) -> f64 {
    let m = noise_cov_m(c);
    let total = seeds.end - seeds.start;
    let ok = seeds.filter(|&s| noise_cov_deviation(m, s) <= noise_cov_eps()).count();
    ok as f64 / total as f64
}

/// Per vertex: empirical fraction of fresh projected points within
/// `eps' / 4`, and the bound `p0 gamma - 3 SE` it must reach.
pub fn vertex_density(inst: &NoisyInstance) -> Vec<(f64, f64)> {
    let m = inst.fresh_points.len();
    let pg = inst.params.p0_gamma;
    let radius = inst.params.eps_prime / 4.0;
    (0..inst.model.k())
        .map(|i| {
            let a = inst.model.vertex(i).to_vec();
            let hits = inst.fresh_points.iter().filter(|p| dist(p, &a) <= radius).count();
            (hits as f64 / m as f64, pg - 3.0 * binomial_se(pg, m))
        })
        .collect()
}

/// Probe centres in the span of the simplex at distance at least `eps'`
/// (and at most `3 eps'`) from it.
pub fn far_probes(inst: &NoisyInstance, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let a = inst.model.a();
    let (n, k) = a.dim();
    let ep = inst.params.eps_prime;
    let vertices = PointCloud::from_columns(a.view());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        // Near a random vertex half the time, otherwise anywhere on the simplex.
        let w: Vec<f64> = if rng.random_bool(0.5) {
            let mut w = vec![0.0; k];
            w[rng.random_range(0..k)] = 1.0;
            w
        } else {
            let g: Vec<f64> = (0..k).map(|_| -rng.random::<f64>().ln()).collect();
            let t: f64 = g.iter().sum();
            g.into_iter().map(|x| x / t).collect()
        };
        let c: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let mut dir = vec![0.0; n];
        for j in 0..k {
            for r in 0..n {
                dir[r] += c[j] * a[[r, j]];
            }
        }
        let dn = linalg::norm(&dir);
        let radius: f64 = rng.random_range(ep..3.0 * ep);
        let z: Vec<f64> = (0..n)
            .map(|r| (0..k).map(|j| a[[r, j]] * w[j]).sum::<f64>() + radius * dir[r] / dn)
            .collect();
        if geometry::dist_to_hull(&z, &vertices, 1e-12).lower_bound >= ep {
            out.push(z);
        }
    }
    out
}

/// Largest empirical mass of `B(z, eps'/2)` over the probes, and the bound
/// `p0 gamma / 4 + 3 SE`.
pub fn far_sparsity(inst: &NoisyInstance, probes: &[Vec<f64>]) -> (f64, f64) {
    let m = inst.fresh_points.len();
    let radius = inst.params.eps_prime / 2.0;
    let q = inst.params.p0_gamma / 4.0;
    let worst = probes
        .iter()
        .map(|z| inst.fresh_points.iter().filter(|p| dist(p, z) <= radius).count() as f64 / m as f64)
        .fold(0.0, f64::max);
    (worst, q + 3.0 * binomial_se(q, m))
}

pub const BALL_COUNT_K: usize = 3;
pub const BALL_COUNT_GAMMA: f64 = 0.05;
pub const BALL_COUNT_DELTA: f64 = 0.05;
pub const BALL_COUNT_C: f64 = 5.0;

pub fn ball_count_m(c: f64) -> usize {
    (c * BALL_COUNT_K as f64 / BALL_COUNT_GAMMA * (1.0 / BALL_COUNT_DELTA).ln()).ceil() as usize
}

/// Whether a ball of mass `mass` inside the unit cube collects more than
/// `gamma m` of `m` uniform points.
pub fn ball_count_exceeds(mass: f64, m: usize, seed: u64) -> bool {
    let k = BALL_COUNT_K;
    let unit_ball = std::f64::consts::PI.powf(k as f64 / 2.0) / libm_gamma(k as f64 / 2.0 + 1.0);
    let radius = (mass / unit_ball).powf(1.0 / k as f64);
    assert!(radius < 0.5, "ball must fit in the cube");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centre = vec![0.5; k];
    let hits = (0..m)
        .filter(|_| {
            let p: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
            dist(&p, &centre) <= radius
        })
        .count();
    hits as f64 > BALL_COUNT_GAMMA * m as f64
}

/// Gamma function at integers and half-integers.
fn libm_gamma(x: f64) -> f64 {
    if (x - x.round()).abs() < 1e-12 {
        (1..x.round() as u64).map(|i| i as f64).product()
    } else {
        let mut v = std::f64::consts::PI.sqrt();
        let mut t = 0.5;
        while t < x - 0.25 {
            v *= t;
            t += 1.0;
        }
        v
    }
}

/// `(fraction of seeds where a 2 gamma ball exceeds gamma m, fraction where a
/// gamma / 2 ball stays below)`.
pub fn ball_count_fractions(c: f64, seeds: std::ops::Range<u64>) -> (f64, f64) {
    let m = ball_count_m(c);
    let total = (seeds.end - seeds.start) as f64;
    let heavy = seeds.clone().filter(|&s| ball_count_exceeds(2.0 * BALL_COUNT_GAMMA, m, 2 * s)).count();
    let light = seeds.filter(|&s| !ball_count_exceeds(0.5 * BALL_COUNT_GAMMA, m, 2 * s + 1)).count();
    (heavy as f64 / total, light as f64 / total)
}

/// Survivor audit after denoising: the largest survivor distance to the true
/// simplex and the largest vertex distance to its nearest survivor.
pub fn survivor_audit(inst: &NoisyInstance) -> (f64, f64) {
    let cloud = PointCloud::projected(inst.fresh.x1.view(), &inst.est);
    let denoised = noisy::denoise(&cloud, &inst.params, inst.fresh.m()).unwrap();
    let survivors: Vec<Vec<f64>> = (0..denoised.len()).map(|i| denoised.lift(i)).collect();
    let vertices = PointCloud::from_columns(inst.model.a().view());
    let far = survivors
        .iter()
        .map(|p| geometry::dist_to_hull(p, &vertices, 1e-12).distance)
        .fold(0.0, f64::max);
    let uncovered = (0..inst.model.k())
        .map(|i| {
            let a = inst.model.vertex(i).to_vec();
            survivors.iter().map(|p| dist(p, &a)).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    (far, uncovered)
}
