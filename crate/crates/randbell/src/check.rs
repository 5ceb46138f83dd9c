//! Cross-module invariant suite behind the `check` subcommand.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use randbell_core::chsh::{canonicalize, chsh_max, proof_witness};
use randbell_core::device::{
    bloch_of_observable, conjugated_sigma_z, mz_measurement_vector, mz_unitary_oracle, MzSettings,
};
use randbell_core::experiments::{
    draw_settings, run_trials_with, violation_curve_vs_visibility_with, CountsConfig, ExperimentConfig, Sequential,
    SettingsMode,
};
use randbell_core::quantum::{correlator_matrix, CorrelatorMatrix, WernerState};
use randbell_core::sampling::{random_rotation, Purpose, RngStream};
use randbell_core::statistics::NoiseModel;

use crate::parallel::Parallel;

/// Result of one invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Check = fn(u64, u64, &Parallel) -> Result<String, String>;

const CHECKS: [(&str, Check); 9] = [
    ("triads-always-violate", triads_always_violate),
    ("chsh-max-matches-enumeration", chsh_max_matches_enumeration),
    ("interferometer-matches-unitary", interferometer_matches_unitary),
    ("triad-correlators-orthogonal", triad_correlators_orthogonal),
    ("canonical-form-round-trip", canonical_form_round_trip),
    ("noise-floor", noise_floor),
    ("probability-monotone-in-visibility", probability_monotone),
    ("counts-converge-to-exact", counts_converge),
    ("thread-count-independence", thread_independence),
];

/// Names of the invariants, in execution order.
pub fn check_names() -> impl Iterator<Item = &'static str> {
    CHECKS.iter().map(|(n, _)| *n)
}

/// Runs every invariant with `trials` samples each (`trials ≥ 1`).
pub fn run_suite(trials: u64, seed: u64, exec: &Parallel) -> Vec<CheckOutcome> {
    let trials = trials.max(1);
    CHECKS
        .iter()
        .map(|(name, check)| {
            let (passed, detail) = match check(trials, seed, exec) {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckOutcome { name, passed, detail }
        })
        .collect()
}

fn core_err(e: randbell_core::Error) -> String {
    e.to_string()
}

fn triads_always_violate(trials: u64, seed: u64, _: &Parallel) -> Result<String, String> {
    let cfg = ExperimentConfig::new(SettingsMode::Triads, trials, seed);
    let mut min = f64::INFINITY;
    for t in 0..trials {
        let s = draw_settings(&cfg, t).map_err(core_err)?;
        let e = correlator_matrix(&s.alice, &s.bob, WernerState::SINGLET).map_err(core_err)?;
        let best = chsh_max(&e).map_err(core_err)?.value();
        let proof = proof_witness(&e).map_err(core_err)?.value();
        if !(best > 2.0 && proof > 2.0 && proof <= best + 1e-12) {
            return Err(format!("trial {t}: max {best}, certificate {proof}"));
        }
        min = min.min(best);
    }
    Ok(format!("min CHSH {min:.6} over {trials} trials"))
}

/// Brute force over ordered setting pairs and odd sign patterns.
fn naive_chsh_max(e: &CorrelatorMatrix) -> f64 {
    let mut best: f64 = 0.0;
    for xa in 0..e.rows() {
        for xb in (0..e.rows()).filter(|&x| x != xa) {
            for ya in 0..e.cols() {
                for yb in (0..e.cols()).filter(|&y| y != ya) {
                    let (x, x2, y, y2) = (xa.min(xb), xa.max(xb), ya.min(yb), ya.max(yb));
                    for pattern in [0b0001u32, 0b0010, 0b0100, 0b1000, 0b1110, 0b1101, 0b1011, 0b0111] {
                        let s = |b: u32| if pattern >> b & 1 == 1 { -1.0 } else { 1.0 };
                        let v = s(0) * e.get(x, y) + s(1) * e.get(x, y2) + s(2) * e.get(x2, y) + s(3) * e.get(x2, y2);
                        best = best.max(v.abs());
                    }
                }
            }
        }
    }
    best
}

fn chsh_max_matches_enumeration(trials: u64, seed: u64, _: &Parallel) -> Result<String, String> {
    let mut rng = RngStream::for_purpose(seed, Purpose::General, 1);
    let n = trials.min(2000);
    for i in 0..n {
        let (rows, cols) = (2 + (i % 4) as usize, 2 + (i / 4 % 4) as usize);
        let data = (0..rows * cols).map(|_| 2.0 * rng.uniform() - 1.0).collect();
        let e = CorrelatorMatrix::from_row_major(rows, cols, data).map_err(core_err)?;
        let fast = chsh_max(&e).map_err(core_err)?.value();
        let slow = naive_chsh_max(&e);
        if fast != slow {
            return Err(format!("{rows}x{cols} matrix: {fast} vs {slow}"));
        }
    }
    Ok(format!("{n} matrices identical"))
}

fn interferometer_matches_unitary(trials: u64, seed: u64, _: &Parallel) -> Result<String, String> {
    let mut rng = RngStream::for_purpose(seed, Purpose::General, 2);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let s = MzSettings::new(TAU * rng.uniform(), TAU * rng.uniform()).map_err(core_err)?;
        let oracle = bloch_of_observable(&conjugated_sigma_z(&mz_unitary_oracle(&s)));
        let n = mz_measurement_vector(&s).to_array();
        worst = n.iter().zip(oracle).fold(worst, |w, (a, b)| w.max((a - b).abs()));
    }
    if worst < 1e-10 {
        Ok(format!("max deviation {worst:.1e}"))
    } else {
        Err(format!("max deviation {worst:.3e}"))
    }
}

fn triad_correlators_orthogonal(trials: u64, seed: u64, _: &Parallel) -> Result<String, String> {
    let cfg = ExperimentConfig::new(SettingsMode::Triads, trials, seed);
    let mut rng = RngStream::for_purpose(seed, Purpose::General, 3);
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let v = rng.uniform();
        let s = draw_settings(&cfg, t).map_err(core_err)?;
        let e = correlator_matrix(&s.alice, &s.bob, WernerState::new(v).map_err(core_err)?).map_err(core_err)?;
        for (k, g) in e.gram().iter().enumerate() {
            let target = if k % 4 == 0 { v * v } else { 0.0 };
            worst = worst.max((g - target).abs());
        }
    }
    if worst <= 1e-9 {
        Ok(format!("max Gram deviation {worst:.1e}"))
    } else {
        Err(format!("max Gram deviation {worst:.3e}"))
    }
}

fn canonical_form_round_trip(trials: u64, seed: u64, _: &Parallel) -> Result<String, String> {
    let mut rng = RngStream::for_purpose(seed, Purpose::General, 4);
    for i in 0..trials {
        let mut m = random_rotation(&mut rng);
        if i % 2 == 1 {
            m[1] = m[1].map(|v| -v);
        }
        let e = CorrelatorMatrix::from_array3(m);
        let f = canonicalize(&e).map_err(core_err)?;
        let back = f.reconstruct();
        let err = (0..9).map(|k| (back[k / 3][k % 3] - m[k / 3][k % 3]).abs()).fold(0.0, f64::max);
        let c = f.matrix;
        let cofactor = (c[2][2].abs() - (c[0][0] * c[1][1] - c[0][1] * c[1][0]).abs()).abs();
        if err > 1e-12 || cofactor > 1e-9 || f.certificate_value() < 2.0 - 1e-12 {
            return Err(format!("sample {i}: round-trip {err:e}, cofactor {cofactor:e}"));
        }
    }
    Ok(format!("{trials} orthogonal matrices"))
}

fn noise_floor(trials: u64, seed: u64, exec: &Parallel) -> Result<String, String> {
    let cfg = ExperimentConfig::new(SettingsMode::Random, trials, seed).with_m(5);
    let curve = violation_curve_vs_visibility_with(&cfg, &[FRAC_1_SQRT_2, 0.5, 0.0], exec).map_err(core_err)?;
    match curve.points.iter().find(|p| p.probability != 0.0) {
        None => Ok("no violation at or below 1/sqrt(2)".into()),
        Some(p) => Err(format!("probability {} at V = {}", p.probability, p.axis)),
    }
}

fn probability_monotone(trials: u64, seed: u64, exec: &Parallel) -> Result<String, String> {
    let cfg = ExperimentConfig::new(SettingsMode::Random, trials, seed).with_m(3);
    let grid: Vec<f64> = (0..=6).map(|i| 0.7 + 0.05 * i as f64).collect();
    let curve = violation_curve_vs_visibility_with(&cfg, &grid, exec).map_err(core_err)?;
    for w in curve.points.windows(2) {
        if w[1].probability < w[0].probability {
            return Err(format!("drops from {} to {} at V = {}", w[0].probability, w[1].probability, w[1].axis));
        }
    }
    Ok(format!("{} points non-decreasing", grid.len()))
}

fn counts_converge(trials: u64, seed: u64, exec: &Parallel) -> Result<String, String> {
    let n = trials.min(500);
    let exact = ExperimentConfig::new(SettingsMode::Triads, n, seed).with_visibility(0.9).map_err(core_err)?;
    let counts = exact.clone().with_counts(CountsConfig {
        noise: NoiseModel::new(1_000_000.0, 0.0).map_err(core_err)?,
        ..CountsConfig::default()
    });
    let a = run_trials_with(&exact, exec).map_err(core_err)?;
    let b = run_trials_with(&counts, exec).map_err(core_err)?;
    let close = a.iter().zip(&b).filter(|(x, y)| (x.chsh.value() - y.chsh.value()).abs() < 0.01).count();
    if close as f64 >= 0.99 * n as f64 {
        Ok(format!("{close}/{n} within 0.01 at 1e6 counts"))
    } else {
        Err(format!("only {close}/{n} within 0.01"))
    }
}

fn thread_independence(trials: u64, seed: u64, exec: &Parallel) -> Result<String, String> {
    let cfg = ExperimentConfig::new(SettingsMode::Voltages, trials.min(2000), seed).with_m(4);
    let seq = run_trials_with(&cfg, &Sequential).map_err(core_err)?;
    let par = run_trials_with(&cfg, exec).map_err(core_err)?;
    if seq == par {
        Ok(format!("{} threads match sequential", exec.threads()))
    } else {
        Err("parallel results differ from sequential".into())
    }
}
