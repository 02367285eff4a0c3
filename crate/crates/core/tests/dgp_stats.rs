use rand::distributions::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spdnn_core::dgp::{
    mean_function, simulate, simulate_exog_ar1, simulate_with, simulate_with_series,
    StandardizedUniform,
};
use spdnn_core::{DgpKind, SimulationConfig, Task};

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

fn lag1_autocorrelation(v: &[f64]) -> f64 {
    let m = mean(v);
    let num: f64 = v.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    let den: f64 = v.iter().map(|x| (x - m) * (x - m)).sum();
    num / den
}

#[test]
fn exog_ar1_moments() {
    let phi = 0.5;
    let x = simulate_exog_ar1(100_000, 3);
    let sd = (1.0 / (1.0 - phi * phi) as f64).sqrt();
    // CLT band with the AR(1) long-run variance 1 / (1 - phi)^2
    let long_run_sd = 1.0 / (1.0 - phi);
    assert!(mean(&x).abs() <= 3.0 * long_run_sd / (1e5f64).sqrt(), "mean {}", mean(&x));
    assert!((lag1_autocorrelation(&x) - phi).abs() <= 0.02);
    assert!((variance(&x) - sd * sd).abs() <= 0.05);
    assert_eq!(x, simulate_exog_ar1(100_000, 3));
    assert_ne!(x, simulate_exog_ar1(100_000, 4));
}

#[test]
fn standardized_uniform_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let dist = StandardizedUniform::new();
    let draws: Vec<f64> = (0..100_000).map(|_| dist.sample(&mut rng)).collect();
    assert!((variance(&draws) - 1.0).abs() <= 0.02);
    assert!(mean(&draws).abs() <= 0.02);
    let bound = 2.0 / (2.0 / 3f64.sqrt());
    assert!(draws.iter().all(|u| u.abs() <= bound + 1e-12));
}

/// Root of `g` on `[lo, hi]` by bisection.
fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    assert!(g(lo) * g(hi) <= 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(lo) * g(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn dgp1_skeleton_converges_to_fixed_point() {
    for c in [0.0, 0.7, -1.3] {
        let cfg = SimulationConfig {
            noise_scale: 0.0,
            frozen_exog: Some(c),
            ..SimulationConfig::default()
        };
        let traj = simulate_with(DgpKind::Dgp1, 50, 9, &cfg).unwrap();
        let y_star = bisect(|y| 1.0 + 0.35 * y - 0.6 / (1.0 + c * c) - y, -10.0, 10.0);
        for &y in traj.targets() {
            assert!((y - y_star).abs() <= 1e-9, "c = {c}: {y} vs {y_star}");
        }
    }
}

#[test]
fn dgp3_label_frequency_matches_mean_probability() {
    let traj = simulate(DgpKind::Dgp3, 100_000, 21).unwrap();
    let freq = traj.targets().iter().map(|y| (y + 1.0) / 2.0).sum::<f64>() / traj.len() as f64;
    let p_bar = traj
        .rows()
        .map(|x| (1.0 + mean_function(DgpKind::Dgp3, x).unwrap()) / 2.0)
        .sum::<f64>()
        / traj.len() as f64;
    assert!((freq - p_bar).abs() <= 0.01, "{freq} vs {p_bar}");
}

#[test]
fn binary_mean_function_stays_in_unit_interval() {
    for kind in [DgpKind::Dgp3, DgpKind::Dgp4] {
        let traj = simulate(kind, 100_000, 8).unwrap();
        for x in traj.rows() {
            let f = mean_function(kind, x).unwrap();
            assert!((-1.0..=1.0).contains(&f));
        }
        assert!(traj.targets().iter().all(|&y| y == 1.0 || y == -1.0));
    }
}

/// Standard error of a mean from 20 batch means, robust to serial correlation.
fn batch_se(v: &[f64]) -> f64 {
    let means: Vec<f64> = v.chunks(v.len() / 20).take(20).map(mean).collect();
    (variance(&means) / 20.0).sqrt()
}

#[test]
fn halves_have_matching_means() {
    for kind in DgpKind::ALL {
        let traj = simulate(kind, 20_000, 77).unwrap();
        let (a, b) = traj.targets().split_at(10_000);
        let se = (batch_se(a).powi(2) + batch_se(b).powi(2)).sqrt();
        assert!((mean(a) - mean(b)).abs() < 5.0 * se, "{kind}");
    }
}

#[test]
fn feature_rows_regenerate_from_raw_series() {
    for kind in DgpKind::ALL {
        let cfg = SimulationConfig::default();
        let (traj, raw) = simulate_with_series(kind, 500, 4, &cfg).unwrap();
        assert_eq!(raw.y.len(), cfg.burn_in + 500);
        for t in 0..traj.len() {
            assert_eq!(traj.row(t), raw.features_at(kind, cfg.burn_in + t).as_slice());
            assert_eq!(traj.targets()[t], raw.y[cfg.burn_in + t]);
        }
        // feature row t holds the previous targets
        for t in 1..traj.len() {
            assert_eq!(traj.row(t)[0], traj.targets()[t - 1]);
        }
        if kind.task() == Task::Regression {
            let resid: Vec<f64> = traj
                .rows()
                .zip(traj.targets())
                .map(|(x, y)| y - mean_function(kind, x).unwrap())
                .collect();
            let bound = 3f64.sqrt();
            assert!(resid.iter().all(|e| e.abs() <= bound + 1e-12));
        }
    }
}

#[test]
fn simulation_is_deterministic_per_seed() {
    for kind in DgpKind::ALL {
        assert_eq!(simulate(kind, 300, 1).unwrap(), simulate(kind, 300, 1).unwrap());
        assert_ne!(
            simulate(kind, 300, 1).unwrap().targets(),
            simulate(kind, 300, 2).unwrap().targets()
        );
    }
}
