use gtm_core::harness::{self, presets};
use gtm_core::linalg;
use gtm_core::{generator, TopicModel};
use ndarray::{s, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gaussian(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| rng.sample::<f64, _>(StandardNormal))
}

fn orthogonal(n: usize, seed: u64) -> Array2<f64> {
    linalg::svd(gaussian(n, n, seed).view()).u
}

fn op_norm(a: &Array2<f64>) -> f64 {
    linalg::spectral_norm(a.view()).unwrap()
}

#[test]
fn davis_kahan_bound_on_a_seeded_instance() {
    let (n, k, m) = (8, 3, 40);
    let q = orthogonal(n, 1);
    let range = q.slice(s![.., k..]).to_owned();
    let d = range.dot(&gaussian(n - k, m, 2));
    let p = q.slice(s![.., ..k]).dot(&q.slice(s![.., ..k]).t());
    let e = gaussian(n, m, 3) * 0.01;
    let dhat = &d + &e;
    let p_hat = linalg::last_k_left_projection(dhat.view(), k).unwrap().p_hat;
    let lhs = op_norm(&(&p_hat - &p));
    let h = dhat.dot(&dhat.t()) - d.dot(&d.t());
    let (eig, _) = linalg::symmetric_eigen(d.dot(&d.t()).view());
    let delta0 = eig[n - k - 1];
    let rhs = 2.0 * op_norm(&h) / delta0;
    assert!(lhs > 0.0 && lhs <= rhs, "{lhs} > {rhs}");
}

#[test]
fn pseudoinverse_of_random_tall_matrix() {
    let a = gaussian(6, 3, 4);
    let prod = linalg::pseudoinverse(a.view()).dot(&a);
    let dev = (&prod - &Array2::<f64>::eye(3)).iter().map(|x| x.abs()).fold(0.0, f64::max);
    assert!(dev <= 1e-10);
}

#[test]
fn rank_event_over_seeds() {
    let (n, k, delta) = (20, 3, 0.05f64);
    let m = (17.0 * (1.0 / delta).ln()).ceil() as usize;
    let trial = presets::noisefree_exact().trial;
    let hits = (0..100u64)
        .filter(|&seed| {
            let model = TopicModel::random(n, k, 1.0, seed).unwrap();
            let set = generator::generate(&harness::generator_config(&trial, &model, 0.0, seed), m).unwrap();
            linalg::rank_with_tolerance(set.difference().view(), 1e-10) == n - k
        })
        .count();
    assert!(hits as f64 >= 100.0 * (1.0 - delta), "{hits}/100");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn svd_reconstructs_and_sorts(rows in 1usize..8, cols in 1usize..8, seed in any::<u64>()) {
        let a = gaussian(rows, cols, seed);
        let f = linalg::svd(a.view());
        let back = f.reconstruct().unwrap();
        prop_assert!(op_norm(&(&back - &a)) <= 1e-8 * op_norm(&a).max(1e-300));
        prop_assert!(f.s.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(f.s.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn last_k_is_an_orthogonal_projection(n in 2usize..9, seed in any::<u64>()) {
        let k = 1 + (seed as usize) % (n - 1);
        let d = gaussian(n, 3 * n, seed);
        let p = linalg::last_k_left_projection(d.view(), k).unwrap().p_hat;
        let sym = (&p - &p.t()).iter().map(|x| x.abs()).fold(0.0, f64::max);
        let idem = (&p.dot(&p) - &p).iter().map(|x| x.abs()).fold(0.0, f64::max);
        prop_assert!(sym <= 1e-8 && idem <= 1e-8);
        prop_assert!((p.diag().sum() - k as f64).abs() <= 1e-8);
    }

    #[test]
    fn spectral_norm_is_orthogonally_invariant(n in 1usize..8, cols in 1usize..8, seed in any::<u64>()) {
        let m = gaussian(n, cols, seed);
        let q = orthogonal(n, seed ^ 1);
        let base = op_norm(&m);
        prop_assert!((op_norm(&q.dot(&m)) - base).abs() <= 1e-10 * base.max(1.0));
    }

    #[test]
    fn pseudoinverse_perturbation_bound(seed in any::<u64>(), scale in 1e-6..1e-2f64) {
        let a = gaussian(6, 3, seed);
        let e = gaussian(6, 3, seed ^ 7) * scale;
        let b = &a + &e;
        let (ap, bp) = (linalg::pseudoinverse(a.view()), linalg::pseudoinverse(b.view()));
        let bound = 3.0 * op_norm(&ap).powi(2).max(op_norm(&bp).powi(2)) * op_norm(&e);
        prop_assert!(op_norm(&(&bp - &ap)) <= bound);
    }

    #[test]
    fn weyl_eigenvalue_stability(n in 1usize..8, seed in any::<u64>(), scale in 1e-4..1.0f64) {
        let g = gaussian(n, n, seed);
        let a = &g + &g.t();
        let h = gaussian(n, n, seed ^ 3) * scale;
        let e = &h + &h.t();
        let (la, _) = linalg::symmetric_eigen(a.view());
        let (lb, _) = linalg::symmetric_eigen((&a + &e).view());
        let bound = op_norm(&e) + 1e-10;
        prop_assert!(la.iter().zip(&lb).all(|(x, y)| (x - y).abs() <= bound));
    }
}
