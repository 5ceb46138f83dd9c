//! Model of a reconfigurable Mach-Zehnder measurement device.
//!
//! Each party's interferometer holds two thermal phase shifters. The first
//! acts as `R_Z(φ1)`, the second (sandwiched between Hadamard-like
//! directional couplers) as `R_Y(φ2)`, so the device applies
//! `U(φ1, φ2) = R_Y(φ2)·R_Z(φ1)` before a detection in the computational
//! basis. The measured observable is therefore `U†σ_Z U = σ·n` with
//!
//! ```text
//! n = (−sin φ2 cos φ1,  sin φ2 sin φ1,  cos φ2)
//! ```
//!
//! Rotations use the `e^{−iθσ/2}` convention and global phases are dropped.
//! [`mz_unitary_oracle`] builds `U` explicitly so the closed form can be
//! cross-checked by direct conjugation.

use core::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::invalid;
use crate::quantum::BlochVector;
use crate::Result;

/// Reduces an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut r = libm::fmod(theta, TAU);
    if r < 0.0 {
        r += TAU;
    }
    // tiny negative inputs round up to exactly TAU
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Calibration of one heater: `φ(v) = α + β·v²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseShifterCal {
    alpha: f64,
    beta: f64,
}

impl PhaseShifterCal {
    /// Typical quadratic coefficient of the heaters, in rad/V².
    pub const TYPICAL_BETA: f64 = 0.15;

    /// `alpha` is wrapped into `[0, 2π)`; `beta` must be positive.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(invalid!("phase offset {alpha} is not finite"));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(invalid!("phase coefficient beta must be positive, got {beta}"));
        }
        Ok(Self { alpha: wrap_angle(alpha), beta })
    }

    /// Zero-voltage phase `α` in radians.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Quadratic coefficient `β` in rad/V².
    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Phase produced by applying `volts` to a heater, reduced into `[0, 2π)`.
pub fn phase_from_voltage(volts: f64, cal: &PhaseShifterCal) -> Result<f64> {
    if !(volts.is_finite() && volts >= 0.0) {
        return Err(invalid!("heater voltage must be finite and non-negative, got {volts}"));
    }
    Ok(wrap_angle(cal.alpha + cal.beta * volts * volts))
}

/// The two interferometer phases, stored reduced into `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MzSettings {
    phi1: f64,
    phi2: f64,
}

impl MzSettings {
    /// Wraps both phases into `[0, 2π)`.
    pub fn new(phi1: f64, phi2: f64) -> Result<Self> {
        if !phi1.is_finite() || !phi2.is_finite() {
            return Err(invalid!("interferometer phases must be finite, got ({phi1}, {phi2})"));
        }
        Ok(Self { phi1: wrap_angle(phi1), phi2: wrap_angle(phi2) })
    }

    /// Phase of the `R_Z` shifter.
    pub fn phi1(&self) -> f64 {
        self.phi1
    }

    /// Phase of the `R_Y` shifter.
    pub fn phi2(&self) -> f64 {
        self.phi2
    }
}

/// Measurement direction realized by the interferometer.
pub fn mz_measurement_vector(s: &MzSettings) -> BlochVector {
    let (s1, c1) = libm::sincos(s.phi1);
    let (s2, c2) = libm::sincos(s.phi2);
    BlochVector::from_unit_unchecked(-s2 * c1, s2 * s1, c2)
}

/// Explicit 2×2 unitary `U(φ1, φ2) = R_Y(φ2)·R_Z(φ1)` (row-major).
pub fn mz_unitary_oracle(s: &MzSettings) -> [[Complex64; 2]; 2] {
    let (sh1, ch1) = libm::sincos(s.phi1 / 2.0);
    let (sh2, ch2) = libm::sincos(s.phi2 / 2.0);
    // R_Z(φ1) = diag(e^{−iφ1/2}, e^{iφ1/2}); R_Y(φ2) = [[c, −s], [s, c]]
    let rz = [Complex64::new(ch1, -sh1), Complex64::new(ch1, sh1)];
    [[rz[0] * ch2, rz[1] * (-sh2)], [rz[0] * sh2, rz[1] * ch2]]
}

/// Bloch vector of the Hermitian 2×2 observable `m = σ·n` (`n_i = tr(m σ_i)/2`).
pub fn bloch_of_observable(m: &[[Complex64; 2]; 2]) -> [f64; 3] {
    [(m[0][1] + m[1][0]).re / 2.0, (m[1][0] - m[0][1]).im / 2.0, (m[0][0] - m[1][1]).re / 2.0]
}

/// `U†σ_Z U` by explicit matrix products.
pub fn conjugated_sigma_z(u: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let z = [1.0, -1.0];
    // (U†ZU)_{ij} = Σ_k conj(U_{ki}) z_k U_{kj}
    core::array::from_fn(|i| core::array::from_fn(|j| (0..2).map(|k| u[k][i].conj() * z[k] * u[k][j]).sum()))
}
