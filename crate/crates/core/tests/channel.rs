use approx::assert_relative_eq;
use num_complex::Complex64;
use proptest::prelude::*;
use riscov_core::channel::*;
use riscov_core::rng::RandomStream;
use riscov_core::Error;

fn fig1() -> ScenarioConfig {
    ScenarioConfig::reference(
        Position3::new(0.0, 0.0, 0.0),
        Position3::new(27.0, 25.0, 25.0),
        Position3::new(180.0, 100.0, 25.0),
        16,
        4,
    )
}

#[test]
fn path_loss_examples() {
    let law = PathLossLaw::new(-25.5, 2.4);
    assert_relative_eq!(path_loss_linear(&law, 1.0).unwrap(), 2.818_382_931_264_455e-3, max_relative = 1e-14);
    let direct = PathLossLaw::new(-33.1, 3.5);
    assert_relative_eq!(path_loss_linear(&direct, 100.0).unwrap(), 4.897_788_193_684_456e-11, max_relative = 1e-13);
    assert!(matches!(path_loss_linear(&law, 0.0), Err(Error::Domain { .. })));
    assert!(path_loss_linear(&law, -3.0).is_err());
}

#[test]
fn rician_examples() {
    assert_relative_eq!(rician_factor(1.3, 0.003, 1e-12).unwrap(), 19.952_623_149_688_797, max_relative = 1e-10);
    assert_relative_eq!(rician_factor(1.3, 0.003, 100.0).unwrap(), 10.0, max_relative = 1e-14);
    for d in [1.0, 50.0, 400.0] {
        assert_eq!(rician_factor(0.7, 0.0, d).unwrap(), 10f64.powf(0.7));
    }
}

#[test]
fn los_vector_transcription() {
    // Direct transcription of the steering formula in a separate script,
    // with u_m in element units scaled by λ/2.
    let v = los_vector(0.3, 0.2, 4, 2, 0.1667, 4.0, 1e-3).unwrap();
    let expected = [
        Complex64::new(0.028_284_271_247_461_9, 0.0),
        Complex64::new(0.017_361_632_471_184_156, 0.022_328_764_362_040_367),
        Complex64::new(0.016_945_460_952_800_55, 0.022_646_221_607_524_553),
        Complex64::new(-0.007_476_285_282_287_874, 0.027_278_290_972_453_642),
    ];
    for (a, b) in v.iter().zip(expected) {
        assert!((a - b).norm() < 1e-15);
    }
}

#[test]
fn los_vector_edge_cases() {
    assert!(los_vector(0.4, 0.1, 8, 4, 0.1, 0.0, 1e-3).unwrap().iter().all(|z| z.norm() == 0.0));
    let v = los_vector(0.0, 0.0, 6, 3, 0.1, 2.0, 1e-3).unwrap();
    assert_eq!(v[0], Complex64::new((2.0 * 1e-3 / 3.0f64).sqrt(), 0.0));
    assert!(matches!(los_vector(0.0, 0.0, 6, 4, 0.1, 2.0, 1e-3), Err(Error::Config(_))));
}

#[test]
fn los_norm_is_exact() {
    let cfg = fig1().with_elements(64, 8);
    let stats = link_stats(&cfg).unwrap();
    let (sr, rd) = cfg.los_vectors(&stats).unwrap();
    let nsr: f64 = sr.iter().map(|z| z.norm_sqr()).sum();
    let nrd: f64 = rd.iter().map(|z| z.norm_sqr()).sum();
    assert_relative_eq!(nsr, 64.0 * stats.kappa_sr * stats.beta_sr / (stats.kappa_sr + 1.0), max_relative = 1e-12);
    assert_relative_eq!(nrd, 64.0 * stats.kappa_rd * stats.beta_rd / (stats.kappa_rd + 1.0), max_relative = 1e-12);
}

#[test]
fn link_stats_fig1_geometry() {
    let stats = link_stats(&fig1()).unwrap();
    assert_relative_eq!(stats.d_sr, (27f64 * 27.0 + 625.0 + 625.0).sqrt(), max_relative = 1e-15);
    assert_relative_eq!(stats.d_rd, (153f64 * 153.0 + 75.0 * 75.0).sqrt(), max_relative = 1e-15);
    assert_relative_eq!(stats.nu, 10f64.powf(11.4), max_relative = 1e-12);
    let t = stats.beta_sr * stats.beta_rd / ((stats.kappa_sr + 1.0) * (stats.kappa_rd + 1.0));
    assert_eq!(stats.mu, t);
    assert_eq!(stats.kappa_tilde, stats.kappa_sr + stats.kappa_rd + 1.0);
    assert_eq!(stats.kappa_hat, 1.0 + 2.0 * stats.kappa_sr + 2.0 * stats.kappa_rd);
}

#[test]
fn link_stats_simple_geometry() {
    let cfg = fig1().with_ris(Position3::new(1.0, 0.0, 0.0));
    assert_eq!(link_stats(&cfg).unwrap().d_sr, 1.0);

    let mut sym = fig1();
    sym.destination = Position3::new(100.0, 0.0, 0.0);
    sym.ris = Position3::new(50.0, 30.0, 0.0);
    let s = link_stats(&sym).unwrap();
    assert_eq!(s.d_sr, s.d_rd);
    assert_eq!(s.beta_sr, s.beta_rd);

    let bad = fig1().with_ris(Position3::new(0.0, 0.0, 0.0));
    assert!(matches!(link_stats(&bad), Err(Error::Geometry(_))));
}

#[test]
fn sampling_mean_and_variance() {
    let cfg = fig1();
    let stats = link_stats(&cfg).unwrap();
    let sampler = ChannelSampler::new(&cfg, &stats).unwrap();
    let n = 100_000;
    let m = sampler.m();
    let mut sum = vec![Complex64::new(0.0, 0.0); m];
    let mut sq = vec![0.0; m];
    let mut sd = 0.0;
    let mut stream = RandomStream::new(11);
    for _ in 0..n {
        let r = sampler.sample(&mut stream);
        sd += r.h_sd.norm_sqr();
        for i in 0..m {
            sum[i] += r.h_sr[i];
            sq[i] += (r.h_sr[i] - sampler.los_sr()[i]).norm_sqr();
        }
    }
    let var = stats.beta_sr / (stats.kappa_sr + 1.0);
    // Per real component the standard error is √(var/2n).
    let se = (var / 2.0 / n as f64).sqrt();
    for i in 0..m {
        let mean = sum[i] / n as f64;
        let d = mean - sampler.los_sr()[i];
        assert!(d.re.abs() < 4.0 * se && d.im.abs() < 4.0 * se, "entry {i}");
        assert!((sq[i] / n as f64 / var - 1.0).abs() < 0.05, "entry {i}");
    }
    assert!((sd / n as f64 / stats.beta_sd - 1.0).abs() < 0.03);
}

#[test]
fn pure_los_limit() {
    let cfg = fig1();
    let stats = link_stats(&cfg).unwrap().with_kappas(1e9, 1e9);
    let sampler = ChannelSampler::new(&cfg, &stats).unwrap();
    let r = sampler.sample(&mut RandomStream::new(5));
    for (h, l) in r.h_sr.iter().zip(sampler.los_sr()) {
        assert!((h - l).norm() <= 1e-3 * l.norm());
    }
}

#[test]
fn equal_seeds_give_identical_realizations() {
    let cfg = fig1();
    let stats = link_stats(&cfg).unwrap();
    let a = sample_channels(&cfg, &stats, &mut RandomStream::new(42)).unwrap();
    let b = sample_channels(&cfg, &stats, &mut RandomStream::new(42)).unwrap();
    let c = sample_channels(&cfg, &stats, &mut RandomStream::new(43)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.h_sr, c.h_sr);
}

#[test]
fn config_validation() {
    assert!(fig1().validate().is_ok());
    assert!(matches!(fig1().with_elements(10, 4).validate(), Err(Error::Config(_))));
    let mut c = fig1();
    c.noise_power_dbm = 30.0;
    assert!(c.validate().is_err());
    let mut c = fig1();
    c.direct_law = PathLossLaw::new(-30.0, 9.0);
    assert!(c.validate().is_err());
    assert!(fig1().with_ris(Position3::new(f64::NAN, 0.0, 0.0)).validate().is_err());
}

proptest! {
    #[test]
    fn path_loss_ratio(k0 in -60.0f64..0.0, eta in 1.1f64..8.0, d1 in 0.1f64..1e3, d2 in 0.1f64..1e3) {
        let law = PathLossLaw::new(k0, eta);
        let r = path_loss_linear(&law, d1).unwrap() / path_loss_linear(&law, d2).unwrap();
        prop_assert!((r / (d2 / d1).powf(eta) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn path_loss_decreasing(eta in 1.1f64..8.0, d in 0.1f64..1e3, dd in 1e-3f64..10.0) {
        let law = PathLossLaw::new(-30.0, eta);
        prop_assert!(path_loss_linear(&law, d + dd).unwrap() < path_loss_linear(&law, d).unwrap());
    }

    #[test]
    fn los_entries_share_modulus(az in -3.1f64..3.1, el in -1.5f64..1.5, rows in 1usize..6, n_h in 1usize..6, kappa in 0.0f64..30.0) {
        let v = los_vector(az, el, rows * n_h, n_h, 0.1666, kappa, 1e-4).unwrap();
        let amp = (kappa * 1e-4 / (kappa + 1.0)).sqrt();
        prop_assert_eq!(v.len(), rows * n_h);
        for z in v {
            prop_assert!(z.re.is_finite() && z.im.is_finite());
            prop_assert!((z.norm() - amp).abs() <= 1e-15 + 1e-12 * amp);
        }
    }
}
