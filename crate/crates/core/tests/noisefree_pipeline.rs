use gtm_core::generator::{self, Link};
use gtm_core::geometry::PointCloud;
use gtm_core::harness::{self, presets, TrialPoint, TrialSpec};
use gtm_core::{eval, noisefree, oracle, Diagnostics, GtmError, SampleSet, TopicModel};
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn exact_spec() -> TrialSpec {
    presets::noisefree_exact().trial
}

fn exact_sample(seed: u64) -> (TopicModel, SampleSet) {
    let spec = exact_spec();
    let (n, k) = (12, 3);
    let m = harness::noisefree_sample_size(n, k, 1.0, 0.2, 0.01, 5.0);
    let model = harness::build_model(&spec, n, k, seed).unwrap();
    let (set, _) = harness::trial_samples(&spec, &model, &TrialPoint { n, k, m, sigma: 0.0, seed }).unwrap();
    (model, set)
}

fn max_abs(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

#[test]
fn exact_recovery_and_weights() {
    for seed in 0..5 {
        let (model, set) = exact_sample(seed);
        let res = noisefree::recover(&set, 3, noisefree::DEFAULT_TOL).unwrap();
        let matching = eval::match_permutation(model.a().view(), res.a_hat.view()).unwrap();
        assert!(matching.max_error <= 1e-6);
        assert!(eval::dual_error(model.v().view(), res.v_hat.view(), &matching.perm) <= 1e-6);
        let w_hat = eval::infer_all(res.v_hat.view(), set.x1.view(), &matching.perm);
        let w = set.latent_w.as_ref().unwrap();
        assert!(max_abs(&(&w_hat - w)) <= 1e-6, "seed {seed}");
    }
}

#[test]
fn missing_pure_topic_is_reported() {
    let (_, set) = exact_sample(1);
    let w = set.latent_w.clone().unwrap();
    // pure documents of topics 0 and 2 only
    let keep: Vec<usize> = generator::pure_documents(&w).into_iter().filter(|&i| w[[1, i]] == 0.0).collect();
    let sub = set.select(&keep);
    match noisefree::recover(&sub, 3, noisefree::DEFAULT_TOL) {
        Err(GtmError::ExtremePointCount { expected, found, .. }) => assert_eq!((expected, found), (3, 2)),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn projection_identity_on_random_points() {
    let model = TopicModel::random(20, 4, 1.0, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..1000 {
        let x: Array1<f64> = (0..20).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        assert!(noisefree::projection_identity_check(&model, x.view()) <= 1e-10 * x.dot(&x).sqrt());
    }
}

#[test]
fn general_link_with_identity_link_matches_directions() {
    for seed in 0..3 {
        let (_, set) = exact_sample(seed);
        let plain = noisefree::recover(&set, 3, noisefree::DEFAULT_TOL).unwrap();
        let rays = noisefree::recover_general_link(&set, 3, noisefree::DEFAULT_TOL).unwrap();
        let dirs = eval::unit_columns(&plain.a_hat);
        let m = eval::match_permutation(dirs.view(), rays.a_hat.view()).unwrap();
        assert!(m.max_error <= 1e-8, "seed {seed}: {}", m.max_error);
    }
}

#[test]
fn square_link_recovers_directions() {
    let spec = presets::general_link().trial;
    let (n, k) = (10, 3);
    let m = harness::noisefree_sample_size(n, k, 1.0, 0.2, 0.01, 5.0);
    for seed in 0..3 {
        let model = harness::build_model(&spec, n, k, seed).unwrap();
        let cfg = harness::generator_config(&spec, &model, 0.0, seed);
        let set = generator::generate_with_link(&cfg, m, Link::Square).unwrap();
        let res = noisefree::recover_general_link(&set, k, noisefree::DEFAULT_TOL).unwrap();
        let dirs = eval::unit_columns(model.a());
        assert!(eval::match_permutation(dirs.view(), res.a_hat.view()).unwrap().max_error <= 1e-6);
    }
}

#[test]
fn interior_only_samples_have_no_k_rays() {
    let (_, set) = exact_sample(2);
    let w = set.latent_w.clone().unwrap();
    let keep: Vec<usize> = (0..set.m()).filter(|&i| w.column(i).iter().all(|&x| x >= 0.05)).collect();
    let sub = set.select(&keep);
    let mut diag = Diagnostics::default();
    let est = noisefree::estimate_projection(&sub, 3, &mut diag).unwrap();
    let cloud = noisefree::projected_views(&sub, &est);
    let pts: Vec<Vec<f64>> = (0..cloud.len()).map(|i| cloud.point(i).to_vec()).collect();
    assert!(oracle::extreme_rays_lp(&pts, 1e-9).len() > 3);
    assert!(matches!(
        noisefree::recover_general_link(&sub, 3, noisefree::DEFAULT_TOL),
        Err(GtmError::ExtremeRayCount { .. })
    ));
}

#[test]
fn recovery_is_scale_equivariant() {
    let (model, set) = exact_sample(4);
    let base = noisefree::recover(&set, 3, noisefree::DEFAULT_TOL).unwrap();
    for c in [0.25, 3.0] {
        let scaled = SampleSet::new(&set.x1 * c, &set.x2 * c).unwrap();
        let res = noisefree::recover(&scaled, 3, noisefree::DEFAULT_TOL).unwrap();
        assert!(max_abs(&(&res.a_hat - &(&base.a_hat * c))) <= 1e-9 * c * model.alpha());
        assert!(max_abs(&(&res.v_hat - &(&base.v_hat / c))) <= 1e-8 / c);
    }
}

#[test]
fn cloud_lifts_back_to_the_simplex() {
    let (model, set) = exact_sample(5);
    let mut diag = Diagnostics::default();
    let est = noisefree::estimate_projection(&set, 3, &mut diag).unwrap();
    let cloud: PointCloud = noisefree::projected_views(&set, &est);
    assert_eq!(cloud.len(), 2 * set.m());
    let w = set.latent_w.as_ref().unwrap();
    let x = cloud.lift(0);
    let expected = model.a().dot(&w.column(0));
    assert!(x.iter().zip(expected.iter()).all(|(a, b)| (a - b).abs() <= 1e-9));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn column_order_does_not_move_the_projection(seed in any::<u64>()) {
        let (_, set) = exact_sample(seed % 50);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..set.m()).collect();
        for i in (1..order.len()).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let mut d1 = Diagnostics::default();
        let mut d2 = Diagnostics::default();
        let a = noisefree::estimate_projection(&set, 3, &mut d1).unwrap();
        let b = noisefree::estimate_projection(&set.select(&order), 3, &mut d2).unwrap();
        prop_assert!(max_abs(&(&a.p_hat - &b.p_hat)) <= 1e-12);
    }

    #[test]
    fn pure_identity_simplex(k in 1usize..6, copies in 1usize..5) {
        let x = Array2::from_shape_fn((k, copies * k), |(r, c)| if c % k == r { 1.0 } else { 0.0 });
        let set = SampleSet::new(x.clone(), x).unwrap();
        let res = noisefree::recover(&set, k, noisefree::DEFAULT_TOL).unwrap();
        let m = eval::match_permutation(Array2::<f64>::eye(k).view(), res.v_hat.t()).unwrap();
        prop_assert!(m.max_error <= 1e-12);
    }
}
