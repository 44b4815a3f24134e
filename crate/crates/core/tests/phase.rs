use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use riscov_core::analytic::alpha_bar_sq;
use riscov_core::channel::{link_stats, ChannelRealization, ChannelSampler, Position3, ScenarioConfig};
use riscov_core::phase::*;
use riscov_core::rng::RandomStream;
use riscov_core::Error;

fn scenario(m: usize, n_h: usize) -> ScenarioConfig {
    ScenarioConfig::reference(
        Position3::new(0.0, 0.0, 0.0),
        Position3::new(27.0, 25.0, 25.0),
        Position3::new(140.0, 70.0, 15.0),
        m,
        n_h,
    )
}

fn random_vec(m: usize, stream: &mut RandomStream) -> Vec<Complex64> {
    (0..m).map(|_| stream.complex_normal()).collect()
}

/// Every phase combination on a 16-level grid, calling `f` on each.
fn grid_search(m: usize, mut f: impl FnMut(&[f64])) {
    let levels: Vec<f64> = (0..16).map(|i| -PI + i as f64 * PI / 8.0).collect();
    let mut idx = vec![0usize; m];
    let mut thetas = vec![0.0; m];
    loop {
        for (t, &i) in thetas.iter_mut().zip(&idx) {
            *t = levels[i];
        }
        f(&thetas);
        let mut k = 0;
        loop {
            if k == m {
                return;
            }
            idx[k] += 1;
            if idx[k] < 16 {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

#[test]
fn trivial_profiles() {
    let ones = vec![Complex64::new(1.0, 0.0); 5];
    assert!(long_term_profile(&ones, &ones).unwrap().thetas.iter().all(|&t| t == 0.0));
    let pos = vec![Complex64::new(0.3, 0.0); 5];
    let p = short_term_profile(Complex64::new(2.0, 0.0), &pos, &pos).unwrap();
    assert!(p.thetas.iter().all(|&t| t == 0.0));
    assert_eq!(equal_profile(4).thetas, vec![0.0; 4]);
    assert_eq!(equal_profile(4).design, PhaseDesign::Equal);
}

#[test]
fn long_term_direct_formula() {
    let a = [0.4, -2.0, 3.0];
    let b = [1.1, 2.5, -3.0];
    let sr: Vec<_> = a.iter().map(|&x| Complex64::from_polar(0.7, x)).collect();
    let rd: Vec<_> = b.iter().map(|&x| Complex64::from_polar(1.3, x)).collect();
    let p = long_term_profile(&sr, &rd).unwrap();
    for i in 0..3 {
        assert!((p.thetas[i] - wrap_phase(a[i] - b[i])).abs() < 1e-15);
    }
}

#[test]
fn long_term_rejects_vanishing_los() {
    let sr = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let rd = vec![Complex64::new(1.0, 0.0); 2];
    assert!(matches!(long_term_profile(&sr, &rd), Err(Error::DegenerateLos { index: 1 })));
}

#[test]
fn no_ris_snr() {
    let real = ChannelRealization {
        h_sd: Complex64::new(0.3, -0.4),
        h_sr: vec![],
        h_rd: vec![],
        seed_tag: 0,
    };
    assert_eq!(instantaneous_snr(&real, &equal_profile(0), 10.0).unwrap(), 10.0 * 0.25);
}

#[test]
fn short_term_dominates_every_profile() {
    let cfg = scenario(16, 4);
    let stats = link_stats(&cfg).unwrap();
    let sampler = ChannelSampler::new(&cfg, &stats).unwrap();
    let lt = long_term_profile(sampler.los_sr(), sampler.los_rd()).unwrap();
    let eq = equal_profile(16);
    let mut stream = RandomStream::new(3);
    for _ in 0..10_000 {
        let real = sampler.sample(&mut stream);
        let st = short_term_profile(real.h_sd, &real.h_sr, &real.h_rd).unwrap();
        let rnd = random_profile(16, &mut stream);
        let best = instantaneous_snr(&real, &st, stats.nu).unwrap();
        let closed = optimal_snr(&real, stats.nu);
        assert!((best - closed).abs() <= 1e-10 * closed);
        for p in [&lt, &eq, &rnd] {
            let s = instantaneous_snr(&real, p, stats.nu).unwrap();
            assert!(s >= 0.0);
            assert!(best >= s * (1.0 - 1e-12));
        }
    }
}

#[test]
fn short_term_beats_grid_search() {
    let mut stream = RandomStream::new(17);
    for m in 1..=3 {
        for _ in 0..5 {
            let real = ChannelRealization {
                h_sd: stream.complex_normal() * 0.5,
                h_sr: random_vec(m, &mut stream),
                h_rd: random_vec(m, &mut stream),
                seed_tag: 0,
            };
            let st = short_term_profile(real.h_sd, &real.h_sr, &real.h_rd).unwrap();
            let best = instantaneous_snr(&real, &st, 1.0).unwrap();
            let mut grid_best: f64 = 0.0;
            grid_search(m, |t| {
                let g = real.h_sd + cascaded_gain(&real.h_sr, t, &real.h_rd);
                grid_best = grid_best.max(g.norm_sqr());
            });
            assert!(grid_best <= best * (1.0 + 1e-12));
            // a 16-level grid is within a factor cos²(π/16)ᵐ of the optimum
            assert!(grid_best >= best * (PI / 16.0).cos().powi(2 * m as i32) * 0.999);
        }
    }
}

#[test]
fn long_term_beats_grid_search() {
    let mut stream = RandomStream::new(23);
    for m in 1..=3 {
        for _ in 0..5 {
            let sr: Vec<_> = (0..m).map(|_| Complex64::from_polar(0.2 + stream.uniform(), stream.uniform_in(-PI, PI))).collect();
            let rd: Vec<_> = (0..m).map(|_| Complex64::from_polar(0.2 + stream.uniform(), stream.uniform_in(-PI, PI))).collect();
            let lt = long_term_profile(&sr, &rd).unwrap();
            let best = alpha_bar_sq(&sr, &lt.thetas, &rd);
            let bound: f64 = sr.iter().zip(&rd).map(|(s, r)| s.norm() * r.norm()).sum();
            assert!((best - bound * bound).abs() <= 1e-12 * best);
            let mut grid_best: f64 = 0.0;
            grid_search(m, |t| grid_best = grid_best.max(alpha_bar_sq(&sr, t, &rd)));
            assert!(grid_best <= best * (1.0 + 1e-12));
        }
    }
}

#[test]
fn random_profile_is_uniform() {
    let mut stream = RandomStream::new(99);
    let mut all: Vec<f64> = (0..1000).flat_map(|_| random_profile(100, &mut stream).thetas).collect();
    assert_eq!(all.len(), 100_000);
    all.sort_by(f64::total_cmp);
    let n = all.len() as f64;
    let ks = all
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = (x + PI) / (2.0 * PI);
            (f - i as f64 / n).abs().max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.01, "KS = {ks}");
    assert!(all.iter().all(|&t| (-PI..PI).contains(&t)));
}

#[test]
fn random_profile_is_deterministic() {
    let a = random_profile(32, &mut RandomStream::new(8));
    let b = random_profile(32, &mut RandomStream::new(8));
    assert_eq!(a, b);
}

#[test]
fn design_names_round_trip() {
    for d in PhaseDesign::ALL {
        assert_eq!(d.name().parse::<PhaseDesign>().unwrap(), d);
    }
    assert!("optimal".parse::<PhaseDesign>().is_err());
}

proptest! {
    #[test]
    fn wrapped_phase_range(t in -1e3f64..1e3) {
        let w = wrap_phase(t);
        prop_assert!((-PI..PI).contains(&w));
        let turns = (t - w) / (2.0 * PI);
        prop_assert!((turns - turns.round()).abs() < 1e-9);
    }

    #[test]
    fn global_phase_invariance(seed in 0u64..1_000_000, c in -PI..PI, m in 1usize..20) {
        let mut stream = RandomStream::new(seed);
        let sr = random_vec(m, &mut stream);
        let rd = random_vec(m, &mut stream);
        let thetas: Vec<f64> = (0..m).map(|_| stream.uniform_in(-PI, PI)).collect();
        let shifted: Vec<f64> = thetas.iter().map(|t| t + c).collect();
        let a = cascaded_gain(&sr, &thetas, &rd).norm_sqr();
        let b = cascaded_gain(&sr, &shifted, &rd).norm_sqr();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
    }

    #[test]
    fn short_term_identity(seed in 0u64..1_000_000, m in 0usize..64) {
        let mut stream = RandomStream::new(seed);
        let real = ChannelRealization {
            h_sd: stream.complex_normal(),
            h_sr: random_vec(m, &mut stream),
            h_rd: random_vec(m, &mut stream),
            seed_tag: seed,
        };
        let st = short_term_profile(real.h_sd, &real.h_sr, &real.h_rd).unwrap();
        prop_assert!(st.thetas.iter().all(|t| (-PI..=PI).contains(t)));
        let s = instantaneous_snr(&real, &st, 3.0).unwrap();
        let closed = optimal_snr(&real, 3.0);
        prop_assert!((s - closed).abs() <= 1e-10 * closed);
    }
}
