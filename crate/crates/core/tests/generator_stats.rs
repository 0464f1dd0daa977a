use gtm_core::generator::{self, GeneratorConfig};
use gtm_core::{linalg, MixtureSpec, NoiseSpec, TopicModel, ViewSpec};
use proptest::prelude::*;

fn config(n: usize, k: usize, mixture: MixtureSpec, noise: NoiseSpec, seed: u64) -> GeneratorConfig {
    GeneratorConfig {
        model: TopicModel::random(n, k, 1.0, 100 + seed).unwrap(),
        mixture,
        views: ViewSpec {
            zeta: 1.0,
            m_bound: 20.0,
            delta0: 0.1,
            spread: 0.5,
        },
        noise,
        seed,
    }
}

fn mixture(xi: f64, near: f64, eps_pure: f64) -> MixtureSpec {
    MixtureSpec {
        xi,
        near_pure_mass: near,
        eps_pure,
        interior_conc: vec![],
    }
}

#[test]
fn pure_fraction_matches_xi() {
    let cfg = config(6, 3, mixture(0.05, 0.0, 0.01), NoiseSpec::noise_free(), 1);
    let w = generator::sample_mixture(&cfg, 100_000).unwrap();
    let e1 = w.columns().into_iter().filter(|c| c[0] == 1.0).count() as f64 / 1e5;
    assert!((e1 - 0.05).abs() <= 0.005, "{e1}");
}

#[test]
fn near_pure_frequency_matches_g() {
    let (k, m) = (3, 100_000);
    let spec = mixture(0.05, 0.1, 0.02);
    let cfg = config(6, k, spec.clone(), NoiseSpec::noise_free(), 2);
    let w = generator::sample_mixture(&cfg, m).unwrap();
    assert!(spec.g(spec.eps_pure, k) >= spec.xi + spec.near_pure_mass);
    for eps in [0.005, 0.01, 0.02] {
        for i in 0..k {
            let hits = w
                .columns()
                .into_iter()
                .filter(|c| c.iter().enumerate().map(|(j, x)| if j == i { 1.0 - x } else { *x }).sum::<f64>() <= eps)
                .count();
            let emp = hits as f64 / m as f64;
            let g = spec.g(eps, k);
            let se = (g * (1.0 - g) / m as f64).sqrt();
            // interior draws add at most (eps/2)^(k-1) of their mass
            let interior = (eps / 2.0).powi(k as i32 - 1);
            assert!(emp >= g - 3.0 * se && emp <= g + 3.0 * se + interior, "eps {eps} topic {i}: {emp} vs {g}");
        }
    }
}

#[test]
fn difference_rank_at_generous_m() {
    let cfg = config(10, 2, mixture(0.2, 0.0, 0.01), NoiseSpec::noise_free(), 3);
    let set = generator::generate(&cfg, 200).unwrap();
    assert_eq!(linalg::rank_with_tolerance(set.difference().view(), 1e-10), 8);
}

#[test]
fn noise_energy_is_chi_square_mean() {
    let (n, m, sigma) = (10, 100_000, 0.1);
    let noisy = config(n, 3, mixture(0.1, 0.0, 0.01), NoiseSpec { sigma, p0: 0.5 }, 4);
    let clean = GeneratorConfig {
        noise: NoiseSpec { sigma: 0.0, p0: 0.5 },
        ..noisy.clone()
    };
    let a = generator::generate(&noisy, m).unwrap();
    let b = generator::generate(&clean, m).unwrap();
    let flags = a.noisy_flags.as_ref().unwrap();
    assert_eq!(flags, b.noisy_flags.as_ref().unwrap());
    let diff = &a.x1 - &b.x1;
    let (sum, count) = diff
        .columns()
        .into_iter()
        .zip(flags)
        .filter(|(_, &f)| f)
        .fold((0.0, 0usize), |(s, c), (col, _)| (s + col.dot(&col), c + 1));
    let mean = sum / count as f64;
    let target = n as f64 * sigma * sigma;
    assert!((mean - target).abs() <= 0.02 * target, "{mean} vs {target}");
}

#[test]
fn zero_sigma_keeps_data_but_still_flags() {
    let cfg = config(8, 3, mixture(0.1, 0.0, 0.01), NoiseSpec { sigma: 0.0, p0: 0.3 }, 5);
    let clean_cfg = GeneratorConfig {
        noise: NoiseSpec::noise_free(),
        ..cfg.clone()
    };
    let a = generator::generate(&cfg, 20_000).unwrap();
    let b = generator::generate(&clean_cfg, 20_000).unwrap();
    assert_eq!(a.x1, b.x1);
    assert_eq!(a.x2, b.x2);
    let frac = a.noisy_flags.unwrap().iter().filter(|&&f| f).count() as f64 / 20_000.0;
    assert!((frac - 0.7).abs() < 0.015, "{frac}");
    assert!(b.noisy_flags.unwrap().iter().all(|&f| !f));
}

#[test]
fn empirical_gap_clears_the_noise_margin() {
    let (n, k, sigma) = (15, 3, 0.05);
    let mut cfg = config(n, k, mixture(0.1, 0.05, 0.002), NoiseSpec { sigma, p0: 0.3 }, 6);
    cfg.views = ViewSpec {
        zeta: 1.0,
        m_bound: 8.0,
        delta0: 1.0,
        spread: 1.0,
    };
    let set = generator::generate(&cfg, 10 * n).unwrap();
    let gap = set.meta.unwrap().empirical_gap.unwrap();
    assert!(gap > 6.0 * sigma * sigma + cfg.views.delta0, "{gap}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn views_agree_under_the_duals(seed in any::<u64>(), k in 1usize..5) {
        let cfg = config(8, k, mixture(0.1, 0.1, 0.05), NoiseSpec::noise_free(), seed);
        let set = generator::generate(&cfg, 50).unwrap();
        let v = cfg.model.v();
        let dev = (v.dot(&set.x1) - v.dot(&set.x2)).iter().map(|x| x.abs()).fold(0.0, f64::max);
        prop_assert!(dev <= 1e-12);
    }

    #[test]
    fn identical_configs_give_identical_samples(seed in any::<u64>()) {
        let cfg = config(7, 3, mixture(0.1, 0.1, 0.05), NoiseSpec { sigma: 0.1, p0: 0.4 }, seed);
        let a = generator::generate(&cfg, 40).unwrap();
        let b = generator::generate(&cfg, 40).unwrap();
        prop_assert_eq!(a.x1, b.x1);
        prop_assert_eq!(a.x2, b.x2);
        prop_assert_eq!(a.latent_w, b.latent_w);
        prop_assert_eq!(a.noisy_flags, b.noisy_flags);
    }
}
