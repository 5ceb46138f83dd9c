//! Serializable run descriptions and their execution.
//!
//! A [`RunSpec`] holds every parameter of a run, defaults included, and is
//! written at the top of each output file. Executing the same spec again
//! reproduces the same rows, whatever the thread count.

use serde::{Deserialize, Serialize};

use randbell_core::experiments::{
    distribution_histogram, run_trials_with, violation_curve_vs_m_with, violation_curve_vs_visibility_with,
    CountsConfig, Executor, ExperimentConfig, SettingsMode, TrialResult, ViolationCurve,
};
use randbell_core::statistics::{Correction, NoiseModel};

use crate::output::{CurveRow, HistRow, Table, TrialRow};

/// Name written in the metadata.
pub const TOOL: &str = env!("CARGO_PKG_NAME");
/// Version written in the metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// What a run produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    /// One row per trial.
    Trials,
    /// Violation probability per grid point.
    Curve,
    /// Binned CHSH distribution.
    Hist,
}

/// Photon-counting parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsSpec {
    /// Detected pairs per second.
    pub pair_rate: f64,
    /// Counting time per setting pair, seconds.
    pub duration: f64,
    /// Accidental coincidences per second, spread over the four outcomes.
    pub accidental_rate: f64,
    /// `true` when accidentals are subtracted.
    pub corrected: bool,
    /// Poisson resamples for error bars (0 disables them).
    pub resamples: usize,
}

/// Grid of a curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "axis", content = "values")]
pub enum Sweep {
    /// Visibilities.
    Visibility(Vec<f64>),
    /// Settings per party.
    M(Vec<usize>),
}

/// Complete description of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub tool: String,
    pub version: String,
    pub kind: Kind,
    pub mode: String,
    pub m: usize,
    pub visibility: f64,
    pub delta: f64,
    pub seed: u64,
    pub trials: u64,
    pub vmax: f64,
    pub counts: Option<CountsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_width: Option<f64>,
}

/// Why a run could not be carried out.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    /// The parameters are inconsistent or out of range.
    #[error("configuration error: {0}")]
    Config(String),
    /// Something failed while running.
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl From<randbell_core::Error> for RunError {
    fn from(e: randbell_core::Error) -> Self {
        use randbell_core::Error as E;
        match e {
            E::Config(_) | E::InvalidInput(_) => RunError::Config(e.to_string()),
            E::Precondition { .. } | E::DegenerateData(_) => RunError::Runtime(e.to_string()),
        }
    }
}

impl RunSpec {
    /// Spec with the tool's defaults for everything but `kind`, `mode` and `m`.
    pub fn new(kind: Kind, mode: SettingsMode, m: usize) -> Self {
        Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            kind,
            mode: mode.name().into(),
            m,
            visibility: 1.0,
            delta: 0.0,
            seed: 1,
            trials: 100,
            vmax: randbell_core::sampling::DEFAULT_VMAX,
            counts: None,
            sweep: None,
            bin_width: None,
        }
    }

    /// Settings mode named by the spec.
    pub fn settings_mode(&self) -> Result<SettingsMode, RunError> {
        SettingsMode::parse(&self.mode)
            .ok_or_else(|| RunError::Config(format!("unknown settings mode '{}'", self.mode)))
    }

    /// Core configuration at the spec's own visibility and `m`.
    pub fn experiment_config(&self) -> Result<ExperimentConfig, RunError> {
        let mut cfg = ExperimentConfig::new(self.settings_mode()?, self.trials, self.seed)
            .with_m(self.m)
            .with_visibility(self.visibility)?
            .with_delta(self.delta)?;
        cfg.vmax = self.vmax;
        if let Some(c) = &self.counts {
            cfg = cfg.with_counts(CountsConfig {
                noise: NoiseModel::new(c.pair_rate, c.accidental_rate)?,
                duration: c.duration,
                correction: if c.corrected { Correction::Corrected } else { Correction::Raw },
                resamples: c.resamples,
            });
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Runs the spec.
    pub fn execute<E: Executor>(&self, exec: &E) -> Result<Table, RunError> {
        if self.tool != TOOL {
            return Err(RunError::Config(format!("metadata belongs to '{}', not {TOOL}", self.tool)));
        }
        let cfg = self.experiment_config()?;
        match self.kind {
            Kind::Trials => Ok(Table::Trials(trial_rows(&run_trials_with(&cfg, exec)?))),
            Kind::Curve => {
                let curve = match &self.sweep {
                    None => violation_curve_vs_visibility_with(&cfg, &[self.visibility], exec)?,
                    Some(Sweep::Visibility(grid)) => violation_curve_vs_visibility_with(&cfg, grid, exec)?,
                    Some(Sweep::M(grid)) => violation_curve_vs_m_with(&cfg, grid, exec)?,
                };
                Ok(Table::Curve(curve_rows(&curve)))
            }
            Kind::Hist => {
                let width = self.bin_width.ok_or_else(|| RunError::Config("histogram needs a bin width".into()))?;
                let h = distribution_histogram(&run_trials_with(&cfg, exec)?, width)?;
                let rows = (0..h.counts().len())
                    .map(|i| {
                        let (bin_lo, bin_hi) = h.bin_edges(i);
                        HistRow { bin_lo, bin_hi, count: h.counts()[i] }
                    })
                    .collect();
                Ok(Table::Hist(rows))
            }
        }
    }
}

/// Table rows for trial results.
pub fn trial_rows(results: &[TrialResult]) -> Vec<TrialRow> {
    results
        .iter()
        .map(|r| {
            let (x_a, x_a2) = r.chsh.alice();
            let (y_b, y_b2) = r.chsh.bob();
            TrialRow {
                trial: r.trial_index,
                chsh: r.chsh.value(),
                x_a,
                x_a2,
                y_b,
                y_b2,
                minus_pos: r.chsh.minus_position().index(),
                violated: r.violated,
                chsh_err: r.chsh_error,
            }
        })
        .collect()
}

/// Table rows for a curve.
pub fn curve_rows(curve: &ViolationCurve) -> Vec<CurveRow> {
    curve.points.iter().map(|p| CurveRow { axis: p.axis, probability: p.probability, stderr: p.stderr }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use randbell_core::experiments::Sequential;

    #[test]
    fn spec_round_trips_through_json() {
        let mut spec = RunSpec::new(Kind::Curve, SettingsMode::Random, 3);
        spec.sweep = Some(Sweep::Visibility(vec![0.7, 0.8, 0.9000000000000001]));
        spec.counts =
            Some(CountsSpec { pair_rate: 1000.0, duration: 1.0, accidental_rate: 3.0, corrected: false, resamples: 0 });
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<RunSpec>(&text).unwrap(), spec);
    }

    #[test]
    fn bad_specs_are_config_errors() {
        let mut spec = RunSpec::new(Kind::Trials, SettingsMode::Triads, 4);
        assert!(matches!(spec.execute(&Sequential), Err(RunError::Config(_))));
        spec.m = 3;
        spec.mode = "sideways".into();
        assert!(matches!(spec.execute(&Sequential), Err(RunError::Config(_))));
        let mut spec = RunSpec::new(Kind::Trials, SettingsMode::Random, 2);
        spec.visibility = 1.2;
        assert!(matches!(spec.execute(&Sequential), Err(RunError::Config(_))));
    }
}
