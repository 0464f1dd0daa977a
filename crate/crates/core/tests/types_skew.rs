use gtm_core::{linalg, oracle, skew, validate_model, TopicModel};
use ndarray::{array, Array2};
use proptest::prelude::*;

fn triangle_matrix(v: [[f64; 2]; 3]) -> Array2<f64> {
    Array2::from_shape_fn((2, 3), |(r, c)| v[c][r])
}

fn frobenius(a: &Array2<f64>) -> f64 {
    linalg::frobenius(&a.view())
}

#[test]
fn equilateral_skew_agrees_with_sampled_oracle() {
    let s3 = 3f64.sqrt();
    let v = [[0.0, 0.0], [1.0, 0.0], [0.5, s3 / 2.0]];
    let r = skew::compute_r(triangle_matrix(v).view(), 0.01).unwrap();
    let sampled = oracle::skew_triangle(v, 0.01, 2000);
    assert!((r - sampled).abs() <= 0.05 * sampled, "{r} vs {sampled}");
    assert!((r - 2.0 / s3).abs() <= 1e-3, "{r}");
}

#[test]
fn regular_simplex_skew_stabilises() {
    let a = Array2::<f64>::eye(4);
    let rs: Vec<f64> = [1e-2, 1e-3, 1e-4].iter().map(|&e| skew::compute_r(a.view(), e).unwrap()).collect();
    for w in rs.windows(2) {
        assert!((w[0] - w[1]).abs() <= 1e-3 * w[1], "{rs:?}");
    }
}

#[test]
fn acute_vertex_is_more_skewed_than_equilateral() {
    let s3 = 3f64.sqrt();
    let equilateral = [[0.0, 0.0], [1.0, 0.0], [0.5, s3 / 2.0]];
    let acute = [[0.0, 0.0], [1.0, 0.0], [1.0, 0.15]];
    let eps = 0.01;
    let re = skew::compute_r(triangle_matrix(equilateral).view(), eps).unwrap();
    let ra = skew::compute_r(triangle_matrix(acute).view(), eps).unwrap();
    assert!(ra > re);
    assert!(oracle::skew_triangle(acute, eps, 2000) > oracle::skew_triangle(equilateral, eps, 2000));
}

#[test]
fn model_validation_examples() {
    let identity = TopicModel::new(Array2::eye(2)).unwrap();
    assert!(validate_model(&identity).is_empty());
    let a = array![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]];
    let m = TopicModel::from_parts(a.clone(), a.t().to_owned(), 1.0, identity.r(), identity.reference_eps());
    assert!(validate_model(&m).is_empty(), "{:?}", validate_model(&m));
    let dup = array![[1.0, 1.0], [0.5, 0.5]];
    assert!(TopicModel::new(dup.clone()).is_err());
    let forced = TopicModel::from_parts(dup, Array2::zeros((2, 2)), 1.2, 1.0, 1e-3);
    assert_eq!(validate_model(&forced), vec!["rank deficient".to_string()]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn duals_are_the_pseudoinverse(n in 2usize..9, seed in any::<u64>()) {
        let k = 1 + (seed as usize) % n;
        let model = TopicModel::random(n, k, 1.0, seed).unwrap();
        let pinv = linalg::pseudoinverse(model.a().view());
        prop_assert!(frobenius(&(&pinv - model.v())) <= 1e-8);
        let back = linalg::pseudoinverse(pinv.view());
        prop_assert!(frobenius(&(&back - model.a())) <= 1e-8);
    }

    #[test]
    fn skew_does_not_grow_when_scaled_up(v in prop::array::uniform3(prop::array::uniform2(-1.0..1.0f64))) {
        let a = triangle_matrix(v);
        let area = ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1])).abs();
        prop_assume!(area > 0.05);
        let eps = 1e-3 * skew::min_pairwise_distance(a.view());
        let mut last = f64::INFINITY;
        for c in [1.0, 2.0, 4.0, 8.0] {
            let r = skew::compute_r((&a * c).view(), eps).unwrap();
            prop_assert!(r <= last * (1.0 + 1e-4), "{} then {}", last, r);
            last = r;
        }
    }
}
