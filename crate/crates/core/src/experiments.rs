//! Trial runners and violation-probability curves.
//!
//! A trial draws measurement settings for both parties, obtains the
//! correlator matrix (exactly, or from simulated photon counts) and records
//! the maximal CHSH value. Trial `t` reads only the random streams numbered
//! `t`, so trials can run in any order or in parallel; an [`Executor`]
//! decides how, and results are always assembled in trial order.

use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::fmt;

use crate::chsh::{chsh_max, ChshWitness};
use crate::device::{mz_measurement_vector, phase_from_voltage, MzSettings, PhaseShifterCal};
use crate::error::invalid;
use crate::quantum::{correlator_matrix, BlochVector, WernerState};
use crate::sampling::{
    random_triad, random_unbiased_pair, random_unit_vector, random_voltages, Purpose, RngStream, DEFAULT_VMAX,
};
use crate::statistics::{chsh_error_poisson, violation_probability, Correction, CountsTable, NoiseModel, ShiftedBound};
use crate::{Error, Result, TSIRELSON};

/// Trials per point used for curves unless configured otherwise.
pub const DEFAULT_CURVE_TRIALS: u64 = 100_000;

/// Trials used when replicating a laboratory run.
pub const DEFAULT_EXPERIMENT_TRIALS: u64 = 100;

/// How each party chooses its measurement settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SettingsMode {
    /// One Haar-random orthogonal triad per party (`m = 3`).
    Triads,
    /// `m` independent directions uniform on the sphere.
    Random,
    /// Two orthogonal directions with a Haar-random frame (`m = 2`).
    UnbiasedPairs,
    /// `m` settings from uniformly random heater voltages on uncalibrated devices.
    Voltages,
}

impl SettingsMode {
    /// Command-line spelling.
    pub fn name(self) -> &'static str {
        match self {
            SettingsMode::Triads => "triads",
            SettingsMode::Random => "random",
            SettingsMode::UnbiasedPairs => "unbiased-pairs",
            SettingsMode::Voltages => "voltages",
        }
    }

    /// Parses the command-line spelling.
    pub fn parse(s: &str) -> Option<Self> {
        [Self::Triads, Self::Random, Self::UnbiasedPairs, Self::Voltages].into_iter().find(|m| m.name() == s)
    }

    /// Number of settings the mode imposes, if any.
    pub fn fixed_settings(self) -> Option<usize> {
        match self {
            SettingsMode::Triads => Some(3),
            SettingsMode::UnbiasedPairs => Some(2),
            SettingsMode::Random | SettingsMode::Voltages => None,
        }
    }
}

impl fmt::Display for SettingsMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Heater calibrations of both interferometers. Index 0 drives `φ1`
/// (the `R_Z` shifter), index 1 drives `φ2`.
///
/// They only generate phases from voltages; nothing downstream reads them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceCalibrations {
    /// Alice's two shifters.
    pub alice: [PhaseShifterCal; 2],
    /// Bob's two shifters.
    pub bob: [PhaseShifterCal; 2],
}

impl DeviceCalibrations {
    /// Range of `β` drawn for fabricated heaters, rad/V².
    pub const BETA_BAND: (f64, f64) = (0.135, 0.165);

    /// Draws `α` uniform in `[0, 2π)` and `β` uniform in [`Self::BETA_BAND`]
    /// for each of the four shifters, from calibration stream 0 of `seed`.
    pub fn draw(seed: u64) -> Self {
        let mut rng = RngStream::for_purpose(seed, Purpose::Calibration, 0);
        let (lo, hi) = Self::BETA_BAND;
        let mut next = || {
            let alpha = TAU * rng.uniform();
            let beta = lo + (hi - lo) * rng.uniform();
            PhaseShifterCal::new(alpha, beta).expect("beta band is positive")
        };
        let alice = [next(), next()];
        let bob = [next(), next()];
        Self { alice, bob }
    }
}

/// Finite-statistics settings for a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountsConfig {
    /// Source and background rates.
    pub noise: NoiseModel,
    /// Counting time per setting pair, seconds.
    pub duration: f64,
    /// Whether accidentals are subtracted.
    pub correction: Correction,
    /// Poisson resamples for the per-trial error bar (0 disables it).
    pub resamples: usize,
}

impl Default for CountsConfig {
    fn default() -> Self {
        Self { noise: NoiseModel::default(), duration: 1.0, correction: Correction::Corrected, resamples: 0 }
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// How settings are drawn.
    pub mode: SettingsMode,
    /// Settings per party.
    pub m: usize,
    /// State shared by the parties.
    pub state: WernerState,
    /// Number of trials.
    pub trials: u64,
    /// Threshold a trial must exceed to count as a violation.
    pub bound: ShiftedBound,
    /// Photon-counting simulation; `None` uses exact correlators.
    pub counts: Option<CountsConfig>,
    /// Heater calibrations, required by [`SettingsMode::Voltages`].
    pub calibrations: Option<DeviceCalibrations>,
    /// Upper end of the voltage range, volts.
    pub vmax: f64,
    /// Root seed of every random stream.
    pub seed: u64,
}

impl ExperimentConfig {
    /// Exact-mode configuration with `V = 1`, `δ = 0`, and `m` taken from
    /// the mode when it imposes one (otherwise 2). Voltages mode gets
    /// calibrations drawn from `seed`.
    pub fn new(mode: SettingsMode, trials: u64, seed: u64) -> Self {
        Self {
            mode,
            m: mode.fixed_settings().unwrap_or(2),
            state: WernerState::SINGLET,
            trials,
            bound: ShiftedBound::LOCAL,
            counts: None,
            calibrations: (mode == SettingsMode::Voltages).then(|| DeviceCalibrations::draw(seed)),
            vmax: DEFAULT_VMAX,
            seed,
        }
    }

    /// Sets the number of settings per party.
    pub fn with_m(mut self, m: usize) -> Self {
        self.m = m;
        self
    }

    /// Sets the visibility.
    pub fn with_visibility(mut self, visibility: f64) -> Result<Self> {
        self.state = WernerState::new(visibility)?;
        Ok(self)
    }

    /// Sets the shifted bound `2 + δ`.
    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        self.bound = ShiftedBound::new(delta)?;
        Ok(self)
    }

    /// Enables photon-counting simulation.
    pub fn with_counts(mut self, counts: CountsConfig) -> Self {
        self.counts = Some(counts);
        self
    }

    /// Checks the configuration for conflicts.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("at least one trial is required".into()));
        }
        if self.m < 2 {
            return Err(Error::Config(alloc::format!("CHSH needs m >= 2 settings per party, got {}", self.m)));
        }
        if let Some(fixed) = self.mode.fixed_settings() {
            if self.m != fixed {
                return Err(Error::Config(alloc::format!("mode {} requires m = {fixed}, got {}", self.mode, self.m)));
            }
        }
        if self.mode == SettingsMode::Voltages {
            if self.calibrations.is_none() {
                return Err(Error::Config("voltages mode requires heater calibrations".into()));
            }
            if !(self.vmax > 0.0 && self.vmax.is_finite()) {
                return Err(Error::Config(alloc::format!("maximum voltage must be positive, got {}", self.vmax)));
            }
        }
        if let Some(c) = &self.counts {
            if !(c.duration > 0.0 && c.duration.is_finite()) {
                return Err(Error::Config(alloc::format!("counting duration must be positive, got {}", c.duration)));
            }
            if c.resamples != 0 && c.resamples < crate::statistics::MIN_RESAMPLES {
                return Err(Error::Config(alloc::format!(
                    "error-bar resamples must be 0 or at least {}, got {}",
                    crate::statistics::MIN_RESAMPLES,
                    c.resamples
                )));
            }
        }
        Ok(())
    }
}

/// Measurement directions drawn for one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSettings {
    /// Alice's directions.
    pub alice: Vec<BlochVector>,
    /// Bob's directions.
    pub bob: Vec<BlochVector>,
}

fn voltage_settings(rng: &mut RngStream, m: usize, cal: &[PhaseShifterCal; 2], vmax: f64) -> Result<Vec<BlochVector>> {
    let v = random_voltages(rng, 2 * m, vmax)?;
    v.chunks_exact(2)
        .map(|pair| {
            let phi1 = phase_from_voltage(pair[0], &cal[0])?;
            let phi2 = phase_from_voltage(pair[1], &cal[1])?;
            Ok(mz_measurement_vector(&MzSettings::new(phi1, phi2)?))
        })
        .collect()
}

/// Draws trial `trial`'s settings from its settings stream, Alice first.
pub fn draw_settings(cfg: &ExperimentConfig, trial: u64) -> Result<TrialSettings> {
    let mut rng = RngStream::for_purpose(cfg.seed, Purpose::Settings, trial);
    let mut party = |which: usize| -> Result<Vec<BlochVector>> {
        Ok(match cfg.mode {
            SettingsMode::Triads => random_triad(&mut rng).vectors().to_vec(),
            SettingsMode::Random => (0..cfg.m).map(|_| random_unit_vector(&mut rng)).collect(),
            SettingsMode::UnbiasedPairs => {
                let (a, b) = random_unbiased_pair(&mut rng);
                alloc::vec![a, b]
            }
            SettingsMode::Voltages => {
                let cals = cfg.calibrations.as_ref().ok_or_else(|| Error::Config("missing calibrations".into()))?;
                let cal = if which == 0 { &cals.alice } else { &cals.bob };
                voltage_settings(&mut rng, cfg.m, cal, cfg.vmax)?
            }
        })
    };
    let alice = party(0)?;
    let bob = party(1)?;
    Ok(TrialSettings { alice, bob })
}

/// Outcome of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    /// Trial index (also the random stream number).
    pub trial_index: u64,
    /// The maximal CHSH witness.
    pub chsh: ChshWitness,
    /// Monte Carlo error bar, when counts resampling is enabled.
    pub chsh_error: Option<f64>,
    /// Whether `chsh` exceeds the configured bound.
    pub violated: bool,
}

/// Runs trial `trial` of `cfg`. The configuration is assumed valid.
pub fn run_trial(cfg: &ExperimentConfig, trial: u64) -> Result<TrialResult> {
    let settings = draw_settings(cfg, trial)?;
    let (e, chsh_error) = match &cfg.counts {
        None => (correlator_matrix(&settings.alice, &settings.bob, cfg.state)?, None),
        Some(c) => {
            let mut rng = RngStream::for_purpose(cfg.seed, Purpose::Counts, trial);
            let table =
                CountsTable::simulate(&settings.alice, &settings.bob, cfg.state, &c.noise, c.duration, &mut rng)?;
            let e = table.correlator_matrix(c.correction)?;
            let err = if c.resamples > 0 {
                let mut rng = RngStream::for_purpose(cfg.seed, Purpose::Resampling, trial);
                Some(chsh_error_poisson(&table, c.correction, c.resamples, &mut rng)?)
            } else {
                None
            };
            (e, err)
        }
    };
    let chsh = chsh_max(&e)?;
    Ok(TrialResult { trial_index: trial, chsh, chsh_error, violated: cfg.bound.is_violated_by(chsh.value()) })
}

/// Strategy for evaluating independent work items `0..n`.
///
/// Implementations must return results in index order.
pub trait Executor {
    /// Evaluates `f(i)` for `i` in `0..n`.
    fn map_indices<T, F>(&self, n: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send;
}

/// Runs work items one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_indices<T, F>(&self, n: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

/// Runs every trial of `cfg` with `exec`.
pub fn run_trials_with<E: Executor>(cfg: &ExperimentConfig, exec: &E) -> Result<Vec<TrialResult>> {
    cfg.validate()?;
    exec.map_indices(cfg.trials, |t| run_trial(cfg, t)).into_iter().collect()
}

/// Runs every trial of `cfg` on the calling thread.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    run_trials_with(cfg, &Sequential)
}

/// Quantity on the horizontal axis of a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveAxis {
    /// Visibility `V`.
    Visibility,
    /// Settings per party `m`.
    Settings,
}

/// One point of a violation-probability curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// Axis value (`V` or `m`).
    pub axis: f64,
    /// Fraction of trials exceeding the bound.
    pub probability: f64,
    /// Binomial standard error of `probability`.
    pub stderr: f64,
}

/// Violation probability against `V` or `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolationCurve {
    /// What the axis measures.
    pub axis: CurveAxis,
    /// Points in the order requested.
    pub points: Vec<CurvePoint>,
}

/// Exact maximal CHSH value of trial `trial` for the pure singlet. Since
/// correlators are linear in `V`, the value at visibility `V` is `V` times this.
pub fn unit_visibility_chsh(cfg: &ExperimentConfig, trial: u64) -> Result<f64> {
    let s = draw_settings(cfg, trial)?;
    Ok(chsh_max(&correlator_matrix(&s.alice, &s.bob, WernerState::SINGLET)?)?.value())
}

/// Probability curve over `v_grid` from unit-visibility CHSH values.
pub fn curve_from_unit_values(unit_values: &[f64], v_grid: &[f64], bound: &ShiftedBound) -> Result<ViolationCurve> {
    let points = v_grid
        .iter()
        .map(|&v| {
            WernerState::new(v)?;
            let scaled: Vec<f64> = unit_values.iter().map(|s| v * s).collect();
            let (probability, stderr) = violation_probability(&scaled, bound)?;
            Ok(CurvePoint { axis: v, probability, stderr })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ViolationCurve { axis: CurveAxis::Visibility, points })
}

/// Violation probability at each visibility of `v_grid`.
///
/// In exact mode one settings sample per trial is reused for every grid
/// point; with counts enabled every point is simulated afresh.
pub fn violation_curve_vs_visibility_with<E: Executor>(
    cfg: &ExperimentConfig,
    v_grid: &[f64],
    exec: &E,
) -> Result<ViolationCurve> {
    cfg.validate()?;
    if v_grid.is_empty() {
        return Err(invalid!("visibility grid is empty"));
    }
    if cfg.counts.is_none() {
        let unit: Vec<f64> =
            exec.map_indices(cfg.trials, |t| unit_visibility_chsh(cfg, t)).into_iter().collect::<Result<_>>()?;
        return curve_from_unit_values(&unit, v_grid, &cfg.bound);
    }
    let points = v_grid
        .iter()
        .map(|&v| {
            let point_cfg = ExperimentConfig { state: WernerState::new(v)?, ..cfg.clone() };
            curve_point(v, &run_trials_with(&point_cfg, exec)?, &cfg.bound)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ViolationCurve { axis: CurveAxis::Visibility, points })
}

/// Sequential [`violation_curve_vs_visibility_with`].
pub fn violation_curve_vs_visibility(cfg: &ExperimentConfig, v_grid: &[f64]) -> Result<ViolationCurve> {
    violation_curve_vs_visibility_with(cfg, v_grid, &Sequential)
}

fn curve_point(axis: f64, results: &[TrialResult], bound: &ShiftedBound) -> Result<CurvePoint> {
    let values: Vec<f64> = results.iter().map(|r| r.chsh.value()).collect();
    let (probability, stderr) = violation_probability(&values, bound)?;
    Ok(CurvePoint { axis, probability, stderr })
}

/// Violation probability for each number of settings in `m_grid` at the
/// configured visibility.
pub fn violation_curve_vs_m_with<E: Executor>(
    cfg: &ExperimentConfig,
    m_grid: &[usize],
    exec: &E,
) -> Result<ViolationCurve> {
    if m_grid.is_empty() {
        return Err(invalid!("settings grid is empty"));
    }
    let points = m_grid
        .iter()
        .map(|&m| {
            let point_cfg = ExperimentConfig { m, ..cfg.clone() };
            curve_point(m as f64, &run_trials_with(&point_cfg, exec)?, &cfg.bound)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ViolationCurve { axis: CurveAxis::Settings, points })
}

/// Sequential [`violation_curve_vs_m_with`].
pub fn violation_curve_vs_m(cfg: &ExperimentConfig, m_grid: &[usize]) -> Result<ViolationCurve> {
    violation_curve_vs_m_with(cfg, m_grid, &Sequential)
}

/// Counts of CHSH values in equal-width bins covering `[0, 2√2]`.
///
/// Values at or above the last bin's lower edge land in the last bin;
/// with finite statistics this includes the rare estimates that exceed 2√2.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    bin_width: f64,
    counts: Vec<u64>,
}

impl Histogram {
    /// Bins `values` with width `bin_width`.
    pub fn from_values(values: &[f64], bin_width: f64) -> Result<Self> {
        if !(bin_width > 0.0 && bin_width.is_finite()) {
            return Err(invalid!("bin width must be positive, got {bin_width}"));
        }
        let bins = libm::ceil(TSIRELSON / bin_width).max(1.0) as usize;
        let mut counts = alloc::vec![0u64; bins];
        for &v in values {
            let k = libm::floor(v.max(0.0) / bin_width) as usize;
            counts[k.min(bins - 1)] += 1;
        }
        Ok(Self { bin_width, counts })
    }

    /// Bin width.
    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    /// Per-bin counts.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// `[lo, hi)` of bin `i`; the last bin is closed at 2√2.
    pub fn bin_edges(&self, i: usize) -> (f64, f64) {
        let lo = i as f64 * self.bin_width;
        let hi = ((i + 1) as f64 * self.bin_width).min(TSIRELSON);
        (lo, hi)
    }

    /// Total number of values.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Number of values in bins lying entirely below `x`.
    pub fn mass_below(&self, x: f64) -> u64 {
        (0..self.counts.len()).filter(|&i| self.bin_edges(i).1 <= x).map(|i| self.counts[i]).sum()
    }

    /// Edges of the most populated bin (first one on ties).
    pub fn mode(&self) -> (f64, f64) {
        let mut best = 0;
        for (i, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = i;
            }
        }
        self.bin_edges(best)
    }
}

/// Histogram of the maximal CHSH values of `results`.
pub fn distribution_histogram(results: &[TrialResult], bin_width: f64) -> Result<Histogram> {
    let values: Vec<f64> = results.iter().map(|r| r.chsh.value()).collect();
    Histogram::from_values(&values, bin_width)
}
