//! Randomised agreement checks between the geometric kernels and the
//! brute-force references in [`crate::oracle`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::geometry::{self, PointCloud};
use crate::oracle;

/// Hull tolerance used by the kernels under test.
pub const KERNEL_TOL: f64 = 1e-9;
/// Allowed gap between solver and reference distances.
pub const DISTANCE_TOL: f64 = 1e-7;

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub instances: usize,
    pub agreed: usize,
    /// Instance indices that disagreed.
    pub failures: Vec<usize>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// A random cloud of at most `max_count` points, sometimes with duplicated
/// points and interior convex combinations mixed in.
fn random_cloud(rng: &mut ChaCha8Rng, dim: usize, max_count: usize) -> Vec<Vec<f64>> {
    let base = rng.random_range(2..=max_count.max(2));
    let mut pts: Vec<Vec<f64>> = (0..base).map(|_| gaussian(rng, dim)).collect();
    while pts.len() < max_count && rng.random_bool(0.3) {
        let a = rng.random_range(0..base);
        pts.push(pts[a].clone());
    }
    while pts.len() < max_count && rng.random_bool(0.4) {
        let a = rng.random_range(0..base);
        let b = rng.random_range(0..base);
        let t: f64 = rng.random_range(0.1..0.9);
        let p = pts[a].iter().zip(&pts[b]).map(|(x, y)| t * x + (1.0 - t) * y).collect();
        pts.push(p);
    }
    pts
}

fn instance_rng(seed: u64, suite: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ suite.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    rng.set_stream(i as u64);
    rng
}

fn suite(name: &'static str, instances: usize, check: impl Fn(usize) -> bool + Sync) -> SuiteReport {
    let failures: Vec<usize> = (0..instances).into_par_iter().filter(|&i| !check(i)).collect();
    SuiteReport {
        name,
        instances,
        agreed: instances - failures.len(),
        failures,
    }
}

pub fn extreme_points_suite(instances: usize, seed: u64) -> SuiteReport {
    suite("extreme_points", instances, |i| {
        let mut rng = instance_rng(seed, 1, i);
        let dim = rng.random_range(1..=6);
        let pts = random_cloud(&mut rng, dim, 25);
        let cloud = PointCloud::from_points(&pts).expect("uniform dimension");
        geometry::extreme_points(&cloud, KERNEL_TOL).indices == oracle::extreme_points_lp(&pts, KERNEL_TOL)
    })
}

pub fn dist_to_hull_suite(instances: usize, seed: u64) -> SuiteReport {
    suite("dist_to_hull", instances, |i| {
        let mut rng = instance_rng(seed, 2, i);
        let dim = rng.random_range(1..=6);
        // Keeps the subset enumeration of the reference cheap.
        let cap = match dim {
            1 | 2 => 25,
            3 | 4 => 16,
            _ => 12,
        };
        let pts = random_cloud(&mut rng, dim, cap);
        let cloud = PointCloud::from_points(&pts).expect("uniform dimension");
        let scale = if rng.random_bool(0.5) { 0.5 } else { 2.0 };
        let x: Vec<f64> = gaussian(&mut rng, dim).into_iter().map(|v| v * scale).collect();
        let h = geometry::dist_to_hull(&x, &cloud, 1e-10);
        let reference = oracle::caratheodory_distance(&x, &pts);
        (h.distance - reference).abs() <= DISTANCE_TOL && !h.capped
    })
}

pub fn extreme_rays_suite(instances: usize, seed: u64) -> SuiteReport {
    suite("extreme_rays", instances, |i| {
        let mut rng = instance_rng(seed, 3, i);
        let dim = rng.random_range(2..=6);
        // Shift along a random axis so the cone is pointed.
        let axis: Vec<f64> = {
            let g = gaussian(&mut rng, dim);
            let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            g.into_iter().map(|v| v / n).collect()
        };
        let pts: Vec<Vec<f64>> = random_cloud(&mut rng, dim, 25)
            .into_iter()
            .map(|p| {
                let radius: f64 = rng.random_range(0.2..3.0);
                p.iter().zip(&axis).map(|(v, a)| radius * (0.5 * v + 2.0 * a)).collect()
            })
            .collect();
        let cloud = PointCloud::from_points(&pts).expect("uniform dimension");
        match geometry::extreme_rays(&cloud, KERNEL_TOL) {
            Ok(set) => set.indices == oracle::extreme_rays_lp(&pts, KERNEL_TOL),
            Err(_) => false,
        }
    })
}

pub fn single_linkage_suite(instances: usize, seed: u64) -> SuiteReport {
    suite("single_linkage", instances, |i| {
        let mut rng = instance_rng(seed, 4, i);
        let dim = rng.random_range(1..=6);
        let pts = random_cloud(&mut rng, dim, 25);
        let cloud = PointCloud::from_points(&pts).expect("uniform dimension");
        let threshold: f64 = rng.random_range(0.05..2.0);
        geometry::single_linkage(&cloud, threshold).clusters == oracle::components_bfs(&pts, threshold)
    })
}

/// All four suites on `instances` random instances each.
pub fn run_all(instances: usize, seed: u64) -> Vec<SuiteReport> {
    vec![
        extreme_points_suite(instances, seed),
        dist_to_hull_suite(instances, seed),
        extreme_rays_suite(instances, seed),
        single_linkage_suite(instances, seed),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_agrees() {
        for r in run_all(20, 11) {
            assert!(r.passed(), "{r:?}");
        }
    }
}
