use randbell_core::experiments::{
    distribution_histogram, draw_settings, run_trial, run_trials, violation_curve_vs_m, violation_curve_vs_visibility,
    CountsConfig, ExperimentConfig, Histogram, SettingsMode,
};
use randbell_core::statistics::NoiseModel;
use randbell_core::{Error, TSIRELSON};

#[test]
fn probability_rises_with_visibility() {
    let cfg = ExperimentConfig::new(SettingsMode::Random, 20_000, 1).with_m(3);
    let grid: Vec<f64> = (0..=10).map(|i| 0.7 + 0.03 * i as f64).collect();
    let curve = violation_curve_vs_visibility(&cfg, &grid).unwrap();
    assert!(curve.points.windows(2).all(|w| w[0].probability <= w[1].probability));
    assert_eq!(curve.points[0].probability, 0.0);
}

#[test]
fn probability_rises_with_settings() {
    let cfg = ExperimentConfig::new(SettingsMode::Random, 20_000, 2).with_visibility(0.9).unwrap();
    let curve = violation_curve_vs_m(&cfg, &[2, 3, 4, 5]).unwrap();
    for w in curve.points.windows(2) {
        assert!(w[0].probability < w[1].probability, "{:?}", curve.points);
    }
}

#[test]
fn exact_curve_matches_direct_runs() {
    let cfg = ExperimentConfig::new(SettingsMode::Random, 2000, 3).with_m(3);
    let curve = violation_curve_vs_visibility(&cfg, &[0.85]).unwrap();
    let direct = run_trials(&cfg.clone().with_visibility(0.85).unwrap()).unwrap();
    let p = direct.iter().filter(|r| r.violated).count() as f64 / direct.len() as f64;
    assert!((curve.points[0].probability - p).abs() < 1e-12);
}

#[test]
fn counts_converge_to_exact() {
    let exact = ExperimentConfig::new(SettingsMode::Triads, 200, 4).with_visibility(0.9).unwrap();
    let counts = exact
        .clone()
        .with_counts(CountsConfig { noise: NoiseModel::new(1_000_000.0, 0.0).unwrap(), ..CountsConfig::default() });
    let a = run_trials(&exact).unwrap();
    let b = run_trials(&counts).unwrap();
    let close = a.iter().zip(&b).filter(|(x, y)| (x.chsh.value() - y.chsh.value()).abs() < 0.01).count();
    assert!(close >= 198, "{close} of 200 within 0.01");
}

#[test]
fn trials_are_reproducible_and_independent_of_order() {
    let cfg = ExperimentConfig::new(SettingsMode::Voltages, 50, 5).with_m(3);
    let all = run_trials(&cfg).unwrap();
    for t in [49, 0, 17] {
        assert_eq!(run_trial(&cfg, t).unwrap(), all[t as usize]);
    }
    assert_ne!(draw_settings(&cfg, 0).unwrap(), draw_settings(&cfg, 1).unwrap());
}

#[test]
fn configuration_errors() {
    let bad = [
        ExperimentConfig::new(SettingsMode::Random, 0, 1),
        ExperimentConfig::new(SettingsMode::Random, 10, 1).with_m(1),
        ExperimentConfig::new(SettingsMode::Triads, 10, 1).with_m(4),
        ExperimentConfig::new(SettingsMode::UnbiasedPairs, 10, 1).with_m(3),
        ExperimentConfig::new(SettingsMode::Random, 10, 1)
            .with_counts(CountsConfig { resamples: 10, ..CountsConfig::default() }),
    ];
    for cfg in bad {
        assert!(matches!(run_trials(&cfg), Err(Error::Config(_))), "{cfg:?}");
    }
    assert!(ExperimentConfig::new(SettingsMode::Random, 10, 1).with_visibility(1.5).is_err());
    assert!(ExperimentConfig::new(SettingsMode::Random, 10, 1).with_delta(-0.1).is_err());
}

#[test]
fn histogram_bins() {
    let h = Histogram::from_values(&[0.0, 0.05, 2.0, 2.05, TSIRELSON, 2.9], 0.1).unwrap();
    assert_eq!(h.counts().len(), 29);
    assert_eq!(h.total(), 6);
    assert_eq!(h.counts()[0], 2);
    assert_eq!(h.counts()[20], 2);
    assert_eq!(*h.counts().last().unwrap(), 2);
    let (lo, hi) = h.bin_edges(28);
    assert!((lo - 2.8).abs() < 1e-12 && hi == TSIRELSON);
    assert_eq!(h.mass_below(2.0), 2);
    assert!(Histogram::from_values(&[1.0], 0.0).is_err());
}

#[test]
fn triad_histogram_sits_above_two() {
    let cfg = ExperimentConfig::new(SettingsMode::Triads, 5000, 6);
    let results = run_trials(&cfg).unwrap();
    let h = distribution_histogram(&results, 0.01).unwrap();
    assert_eq!(h.total(), 5000);
    assert_eq!(h.mass_below(2.0), 0);
    let (lo, _) = h.mode();
    assert!((2.5..2.8).contains(&lo), "mode at {lo}");
}
