//! Finite-statistics layer: photon counting with accidentals.
//!
//! For every pair of settings the four detector pairs record coincidences
//! in a prompt window (`main`) and in a window delayed by a fixed offset
//! (`delayed`). The delayed window sees only accidental coincidences, so
//! subtracting it from the prompt window removes the accidental background
//! on average.

use alloc::format;
use alloc::vec::Vec;

use rand_distr::{Distribution, Poisson};

use crate::chsh::chsh_max;
use crate::error::invalid;
use crate::quantum::{joint_probability, BlochVector, CorrelatorMatrix, WernerState, OUTCOME_PAIRS};
use crate::sampling::RngStream;
use crate::{Error, Result, LOCAL_BOUND};

/// Smallest number of resamples accepted by [`chsh_error_poisson`].
pub const MIN_RESAMPLES: usize = 100;

/// Coincidence counts of one setting pair, in the order `++, +−, −+, −−`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountsRecord {
    /// Prompt-window coincidences.
    pub main: [u64; 4],
    /// Delayed-window (accidental) coincidences.
    pub delayed: [u64; 4],
    duration: f64,
}

impl CountsRecord {
    /// Validates `duration > 0`.
    pub fn new(main: [u64; 4], delayed: [u64; 4], duration: f64) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(invalid!("counting duration must be positive, got {duration}"));
        }
        Ok(Self { main, delayed, duration })
    }

    /// Counting time in seconds.
    pub fn duration(&self) -> f64 {
        self.duration
    }
}

/// Coincidence rates of the source and background.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pair_rate: f64,
    accidental_rate: f64,
}

impl NoiseModel {
    /// Typical coincidence rate of the photon source, counts/s.
    pub const DEFAULT_PAIR_RATE: f64 = 1000.0;

    /// Accidental rate per detector pair, as a fraction of the pair rate,
    /// that dilutes a true visibility of 0.94 to a raw visibility of 0.885.
    pub const LABORATORY_ACCIDENTAL_FRACTION: f64 = (0.94 / 0.885 - 1.0) / 4.0;

    /// Validates non-negative finite rates.
    pub fn new(pair_rate: f64, accidental_rate: f64) -> Result<Self> {
        for (name, r) in [("pair", pair_rate), ("accidental", accidental_rate)] {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(invalid!("{name} rate must be non-negative, got {r}"));
            }
        }
        Ok(Self { pair_rate, accidental_rate })
    }

    /// Background tuned to reproduce the raw-versus-corrected visibility gap.
    pub fn laboratory(pair_rate: f64) -> Result<Self> {
        Self::new(pair_rate, pair_rate * Self::LABORATORY_ACCIDENTAL_FRACTION)
    }

    /// True coincidence rate, counts/s.
    pub fn pair_rate(&self) -> f64 {
        self.pair_rate
    }

    /// Accidental coincidence rate per detector pair, counts/s.
    pub fn accidental_rate(&self) -> f64 {
        self.accidental_rate
    }

    /// Factor by which uncorrected correlators shrink on average.
    pub fn raw_dilution(&self) -> f64 {
        let total = self.pair_rate + 4.0 * self.accidental_rate;
        if total > 0.0 {
            self.pair_rate / total
        } else {
            0.0
        }
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { pair_rate: Self::DEFAULT_PAIR_RATE, accidental_rate: 0.0 }
    }
}

/// Whether accidentals are subtracted before estimating correlators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Correction {
    /// `main − delayed`.
    #[default]
    Corrected,
    /// `main` as recorded.
    Raw,
}

/// The classical bound raised by a statistical margin: `S = 2 + δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedBound {
    delta: f64,
}

impl ShiftedBound {
    /// The unshifted local bound.
    pub const LOCAL: Self = Self { delta: 0.0 };

    /// Validates `δ ≥ 0`.
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(invalid!("bound shift must be non-negative, got {delta}"));
        }
        Ok(Self { delta })
    }

    /// Margin `δ`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Threshold `2 + δ`.
    pub fn bound(&self) -> f64 {
        LOCAL_BOUND + self.delta
    }

    /// Strict exceedance of the threshold.
    pub fn is_violated_by(&self, chsh: f64) -> bool {
        chsh > self.bound()
    }
}

fn poisson(rng: &mut RngStream, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    // mean is positive and finite here, which is all Poisson::new checks
    let dist = Poisson::new(mean).expect("valid Poisson mean");
    dist.sample(rng) as u64
}

/// Draws the prompt and delayed counts for one setting pair.
///
/// `main[k] ~ Poisson(p_k·pair_rate·T + accidental_rate·T)` and
/// `delayed[k] ~ Poisson(accidental_rate·T)`, all independent.
pub fn simulate_counts(
    a: &BlochVector,
    b: &BlochVector,
    state: WernerState,
    noise: &NoiseModel,
    duration: f64,
    rng: &mut RngStream,
) -> Result<CountsRecord> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(invalid!("counting duration must be positive, got {duration}"));
    }
    let background = noise.accidental_rate * duration;
    let mut main = [0u64; 4];
    for (k, (oa, ob)) in OUTCOME_PAIRS.into_iter().enumerate() {
        let p = joint_probability(a, b, state, oa, ob).max(0.0);
        main[k] = poisson(rng, p * noise.pair_rate * duration + background);
    }
    let delayed = core::array::from_fn(|_| poisson(rng, background));
    Ok(CountsRecord { main, delayed, duration })
}

/// `main − delayed` per outcome pair. Negative values are kept.
pub fn subtract_accidentals(c: &CountsRecord) -> [f64; 4] {
    core::array::from_fn(|k| c.main[k] as f64 - c.delayed[k] as f64)
}

/// Counts entering the correlator estimate under `correction`.
pub fn corrected_counts(c: &CountsRecord, correction: Correction) -> [f64; 4] {
    match correction {
        Correction::Corrected => subtract_accidentals(c),
        Correction::Raw => c.main.map(|n| n as f64),
    }
}

/// `(N++ + N−− − N+− − N−+) / Σ N`, clamped to `[−1, 1]`.
pub fn estimate_correlator(n: &[f64; 4]) -> Result<f64> {
    let total = n.iter().sum::<f64>();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::DegenerateData(format!("coincidence total {total} is not positive")));
    }
    Ok(((n[0] + n[3] - n[1] - n[2]) / total).clamp(-1.0, 1.0))
}

/// Counts for every setting pair of an experiment, row-major in
/// `(alice setting, bob setting)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountsTable {
    rows: usize,
    cols: usize,
    records: Vec<CountsRecord>,
}

impl CountsTable {
    /// Validates the record count.
    pub fn new(rows: usize, cols: usize, records: Vec<CountsRecord>) -> Result<Self> {
        if rows == 0 || cols == 0 || records.len() != rows * cols {
            return Err(invalid!("counts table {rows}x{cols} needs {} records, got {}", rows * cols, records.len()));
        }
        Ok(Self { rows, cols, records })
    }

    /// Simulates every setting pair, drawing in row-major order from `rng`.
    pub fn simulate(
        alice: &[BlochVector],
        bob: &[BlochVector],
        state: WernerState,
        noise: &NoiseModel,
        duration: f64,
        rng: &mut RngStream,
    ) -> Result<Self> {
        let mut records = Vec::with_capacity(alice.len() * bob.len());
        for a in alice {
            for b in bob {
                records.push(simulate_counts(a, b, state, noise, duration, rng)?);
            }
        }
        Self::new(alice.len(), bob.len(), records)
    }

    /// Number of Alice settings.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of Bob settings.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Records in row-major order.
    pub fn records(&self) -> &[CountsRecord] {
        &self.records
    }

    /// Correlators estimated from the counts.
    pub fn correlator_matrix(&self, correction: Correction) -> Result<CorrelatorMatrix> {
        let data = self
            .records
            .iter()
            .map(|r| estimate_correlator(&corrected_counts(r, correction)))
            .collect::<Result<Vec<_>>>()?;
        CorrelatorMatrix::from_row_major(self.rows, self.cols, data)
    }

    fn resampled(&self, rng: &mut RngStream) -> Self {
        let records = self
            .records
            .iter()
            .map(|r| CountsRecord {
                main: r.main.map(|n| poisson(rng, n as f64)),
                delayed: r.delayed.map(|n| poisson(rng, n as f64)),
                duration: r.duration,
            })
            .collect();
        Self { rows: self.rows, cols: self.cols, records }
    }
}

/// Monte Carlo error bar of the maximal CHSH value: the standard deviation
/// of `chsh_max` over tables whose counts are redrawn as Poisson variables
/// with the observed counts as means.
///
/// `resamples = 0` disables resampling and reports 0; otherwise at least
/// [`MIN_RESAMPLES`] are required.
pub fn chsh_error_poisson(
    table: &CountsTable,
    correction: Correction,
    resamples: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    if resamples == 0 {
        return Ok(0.0);
    }
    if resamples < MIN_RESAMPLES {
        return Err(invalid!("at least {MIN_RESAMPLES} resamples are needed, got {resamples}"));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..resamples {
        let e = table.resampled(rng).correlator_matrix(correction)?;
        let v = chsh_max(&e)?.value();
        sum += v;
        sum_sq += v * v;
    }
    let n = resamples as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(libm::sqrt(var))
}

/// Fraction of `values` strictly above the shifted bound, with its standard
/// error `√(p(1−p)/n)`.
pub fn violation_probability(values: &[f64], bound: &ShiftedBound) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(invalid!("violation probability of an empty sample"));
    }
    let n = values.len() as f64;
    let hits = values.iter().filter(|&&v| bound.is_violated_by(v)).count() as f64;
    let p = hits / n;
    Ok((p, libm::sqrt(p * (1.0 - p) / n)))
}

/// Visibility implied by a mean CHSH value relative to the mean obtained
/// with the pure singlet.
pub fn estimate_visibility_from_mean(mean_chsh: f64, reference_mean: f64) -> Result<f64> {
    if !(reference_mean.is_finite() && reference_mean > 0.0) {
        return Err(invalid!("reference mean must be positive, got {reference_mean}"));
    }
    Ok(mean_chsh / reference_mean)
}

/// Wilson score interval at 95% confidence for `hits` successes in `n` trials.
pub fn wilson_interval_95(hits: usize, n: usize) -> Result<(f64, f64)> {
    if n == 0 || hits > n {
        return Err(invalid!("binomial interval needs 0 <= hits <= n, n > 0 (got {hits}/{n})"));
    }
    const Z: f64 = 1.959_963_984_540_054;
    let (k, n) = (hits as f64, n as f64);
    let p = k / n;
    let denom = 1.0 + Z * Z / n;
    let centre = (p + Z * Z / (2.0 * n)) / denom;
    let half = Z * libm::sqrt(p * (1.0 - p) / n + Z * Z / (4.0 * n * n)) / denom;
    Ok(((centre - half).max(0.0), (centre + half).min(1.0)))
}
