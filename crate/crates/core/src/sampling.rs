//! Reproducible randomness for trials.
//!
//! Every random draw comes from an [`RngStream`], a ChaCha8 generator keyed
//! by `(seed, purpose)` and positioned on stream `stream_id`. ChaCha is
//! counter based, so any stream can be opened directly without generating
//! the ones before it, and its output is the same on every platform.
//!
//! Key layout: bytes `0..8` hold `seed` and bytes `8..16` hold the
//! [`Purpose`] tag, both little-endian; the remaining bytes are zero. The
//! 64-bit ChaCha stream number is the trial index. Settings, counts,
//! resampling and device calibration therefore never share random numbers.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::invalid;
use crate::quantum::{BlochVector, Triad};
use crate::Result;

/// Upper end of the heater voltage range, in volts.
pub const DEFAULT_VMAX: f64 = 7.0;

/// Independent families of random numbers drawn for one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    /// Ad-hoc use through [`RngStream::new`].
    General = 0,
    /// Measurement settings (directions or voltages).
    Settings = 1,
    /// Simulated photon counts.
    Counts = 2,
    /// Monte Carlo error-bar resampling.
    Resampling = 3,
    /// Per-experiment heater calibrations.
    Calibration = 4,
}

/// A deterministic random stream identified by `(seed, purpose, stream_id)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    purpose: Purpose,
    rng: ChaCha8Rng,
}

impl RngStream {
    /// Opens stream `stream_id` of `seed` for general use.
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self::for_purpose(seed, Purpose::General, stream_id)
    }

    /// Opens stream `stream_id` of `seed` in the `purpose` family.
    pub fn for_purpose(seed: u64, purpose: Purpose, stream_id: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(stream_id);
        Self { seed, stream_id, purpose, rng }
    }

    /// Seed the stream was opened with.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Stream index (the trial index for trial runners).
    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Family of the stream.
    pub fn purpose(&self) -> Purpose {
        self.purpose
    }

    /// Uniform draw from `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Uniformly distributed direction on the Bloch sphere.
///
/// Uses Archimedes' theorem: `z` uniform on `[−1, 1]` and an independent
/// uniform azimuth give the uniform measure on the sphere.
pub fn random_unit_vector(rng: &mut RngStream) -> BlochVector {
    let z = 2.0 * rng.uniform() - 1.0;
    let phi = TAU * rng.uniform();
    let r = libm::sqrt((1.0 - z * z).max(0.0));
    let (s, c) = libm::sincos(phi);
    BlochVector::from_unit_unchecked(r * c, r * s, z)
}

/// Unit quaternion `(w, x, y, z)` drawn uniformly from S³ (Shoemake's
/// subgroup algorithm).
pub fn random_unit_quaternion(rng: &mut RngStream) -> [f64; 4] {
    let u1 = rng.uniform();
    let (t1, t2) = (TAU * rng.uniform(), TAU * rng.uniform());
    let (a, b) = (libm::sqrt(1.0 - u1), libm::sqrt(u1));
    let (s1, c1) = libm::sincos(t1);
    let (s2, c2) = libm::sincos(t2);
    [b * c2, a * s1, a * c1, b * s2]
}

/// Rotation matrix (row-major) of a unit quaternion `(w, x, y, z)`.
pub fn quaternion_to_rotation([w, x, y, z]: [f64; 4]) -> [[f64; 3]; 3] {
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

/// Haar-random rotation matrix.
pub fn random_rotation(rng: &mut RngStream) -> [[f64; 3]; 3] {
    quaternion_to_rotation(random_unit_quaternion(rng))
}

/// Haar-random right-handed measurement triad: the columns of a random rotation.
pub fn random_triad(rng: &mut RngStream) -> Triad {
    Triad::from_rotation_columns(&random_rotation(rng))
}

/// Two orthogonal directions whose frame is Haar distributed.
pub fn random_unbiased_pair(rng: &mut RngStream) -> (BlochVector, BlochVector) {
    let t = random_triad(rng);
    (t[0], t[1])
}

/// `count` independent voltages uniform on `[0, vmax)`.
pub fn random_voltages(rng: &mut RngStream, count: usize, vmax: f64) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(invalid!("voltage count must be positive"));
    }
    if !(vmax > 0.0 && vmax.is_finite()) {
        return Err(invalid!("maximum voltage must be positive, got {vmax}"));
    }
    Ok((0..count).map(|_| vmax * rng.uniform()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = RngStream::new(7, 3);
        let mut b = RngStream::new(7, 3);
        let xs: Vec<u64> = (0..16).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..16).map(|_| b.next_u64()).collect();
        assert_eq!(xs, ys);
        let mut c = RngStream::new(7, 4);
        let mut d = RngStream::for_purpose(7, Purpose::Counts, 3);
        let mut e = RngStream::new(8, 3);
        assert_ne!(c.next_u64(), xs[0]);
        assert_ne!(d.next_u64(), xs[0]);
        assert_ne!(e.next_u64(), xs[0]);
    }

    #[test]
    fn frozen_first_words() {
        // ChaCha8 output for key (seed=0, purpose=0), stream 0; pins the
        // documented derivation so that published seeds stay citable
        let mut r = RngStream::new(0, 0);
        let mut plain = ChaCha8Rng::from_seed([0u8; 32]);
        for _ in 0..8 {
            assert_eq!(r.next_u64(), plain.next_u64());
        }
        let mut r = RngStream::for_purpose(0x0102, Purpose::Resampling, 9);
        let mut key = [0u8; 32];
        key[0] = 0x02;
        key[1] = 0x01;
        key[8] = 3;
        let mut manual = ChaCha8Rng::from_seed(key);
        manual.set_stream(9);
        assert_eq!(r.next_u64(), manual.next_u64());
    }

    #[test]
    fn triads_are_rotations() {
        let mut rng = RngStream::new(1, 0);
        for _ in 0..1000 {
            let t = random_triad(&mut rng);
            for i in 0..3 {
                assert!((t[i].norm() - 1.0).abs() < 1e-12);
                for j in (i + 1)..3 {
                    assert!(t[i].dot(&t[j]).abs() < 1e-12);
                }
            }
            assert!((t.determinant() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unbiased_pairs_are_orthonormal() {
        let mut rng = RngStream::new(2, 0);
        for _ in 0..1000 {
            let (a, b) = random_unbiased_pair(&mut rng);
            assert!(a.dot(&b).abs() < 1e-12);
            assert!((a.norm() - 1.0).abs() < 1e-12 && (b.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn voltages_in_range() {
        let mut rng = RngStream::new(3, 0);
        let v = random_voltages(&mut rng, 100_000, DEFAULT_VMAX).unwrap();
        assert!(v.iter().all(|&x| (0.0..=DEFAULT_VMAX).contains(&x)));
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        assert!((mean - 3.5).abs() < 0.02, "{mean}");
        assert!(random_voltages(&mut rng, 0, 7.0).is_err());
        assert!(random_voltages(&mut rng, 3, 0.0).is_err());
        assert!(random_voltages(&mut rng, 3, -1.0).is_err());
    }
}
