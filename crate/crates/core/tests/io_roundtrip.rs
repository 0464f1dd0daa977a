use gtm_core::harness::{self, presets, TrialPoint};
use gtm_core::{io, noisefree};
use ndarray::Array2;
use proptest::prelude::*;

#[test]
fn header_and_payload_layout() {
    let m = Array2::from_shape_vec((2, 3), vec![1.0, -2.5, 3.0, 0.0, 1e-300, f64::MAX]).unwrap();
    let bytes = io::encode_matrix(&m).unwrap();
    assert_eq!(&bytes[..4], b"GTMM");
    assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 2);
    assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 3);
    assert_eq!(bytes.len(), 12 + 6 * 8);
    assert_eq!(f64::from_le_bytes(bytes[20..28].try_into().unwrap()), -2.5);
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(io::decode_matrix(&bad).is_err());
}

#[test]
fn sample_set_and_recovery_survive_a_disk_round_trip() {
    let spec = presets::noisefree_exact().trial;
    let model = harness::build_model(&spec, 12, 3, 2).unwrap();
    let point = TrialPoint { n: 12, k: 3, m: 350, sigma: 0.0, seed: 2 };
    let (set, _) = harness::trial_samples(&spec, &model, &point).unwrap();
    let dir = tempfile::tempdir().unwrap();

    io::write_sample_set(&dir.path().join("set"), &set).unwrap();
    let back = io::read_sample_set(&dir.path().join("set")).unwrap();
    assert_eq!(back.x1, set.x1);
    assert_eq!(back.x2, set.x2);
    assert_eq!(back.latent_w, set.latent_w);
    assert_eq!(back.noisy_flags, set.noisy_flags);
    assert_eq!(
        serde_json::to_string(&back.meta).unwrap(),
        serde_json::to_string(&set.meta).unwrap()
    );

    let res = noisefree::recover(&set, 3, noisefree::DEFAULT_TOL).unwrap();
    io::write_recovery(&dir.path().join("rec"), &res).unwrap();
    let rec = io::read_recovery(&dir.path().join("rec")).unwrap();
    assert_eq!(rec.a_hat, res.a_hat);
    assert_eq!(rec.v_hat, res.v_hat);
    assert_eq!(rec.clusters, res.clusters);

    let cfg = dir.path().join("model.cfg");
    io::write_model(&cfg, &model).unwrap();
    let m2 = io::read_model(&cfg).unwrap();
    assert_eq!(m2.a(), model.a());
    assert_eq!(m2.v(), model.v());
    assert_eq!(m2.r().to_bits(), model.r().to_bits());
}

proptest! {
    #[test]
    fn matrices_round_trip_bit_exactly(rows in 0usize..6, cols in 0usize..6, vals in prop::collection::vec(any::<f64>(), 36)) {
        let m = Array2::from_shape_fn((rows, cols), |(r, c)| vals[r * 6 + c]);
        let back = io::decode_matrix(&io::encode_matrix(&m).unwrap()).unwrap();
        prop_assert_eq!(back.dim(), m.dim());
        prop_assert!(back.iter().zip(m.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn csv_export_round_trips(rows in 1usize..5, cols in 1usize..5, vals in prop::collection::vec(-1e6..1e6f64, 25)) {
        let m = Array2::from_shape_fn((rows, cols), |(r, c)| vals[r * 5 + c]);
        prop_assert_eq!(io::matrix_from_csv(&io::matrix_to_csv(&m)).unwrap(), m);
    }
}
