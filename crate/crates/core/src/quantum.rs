//! Bloch-sphere geometry and the correlations of the Werner singlet.
//!
//! For the singlet `|Ψ⁻⟩` every pair of ±1-valued projective measurements
//! along Bloch directions `a` and `b` has correlator `E = −a·b`. Mixing in
//! white noise with weight `1 − V` scales every correlator by the visibility
//! `V` and leaves the marginals uniform.

use alloc::vec::Vec;
use core::ops::{Index, Neg};

use crate::error::invalid;
use crate::{Error, Result, GEOMETRY_TOL};

/// A unit 3-vector: the direction of a projective qubit measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    x: f64,
    y: f64,
    z: f64,
}

impl BlochVector {
    /// `+x̂`
    pub const X: Self = Self { x: 1.0, y: 0.0, z: 0.0 };
    /// `+ŷ`
    pub const Y: Self = Self { x: 0.0, y: 1.0, z: 0.0 };
    /// `+ẑ`
    pub const Z: Self = Self { x: 0.0, y: 0.0, z: 1.0 };

    /// Validates that `(x, y, z)` has unit norm within [`GEOMETRY_TOL`].
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let n2 = x * x + y * y + z * z;
        if !n2.is_finite() || (n2 - 1.0).abs() > GEOMETRY_TOL {
            return Err(invalid!("Bloch vector ({x}, {y}, {z}) has squared norm {n2}, expected 1"));
        }
        Ok(Self { x, y, z })
    }

    /// Normalizes an arbitrary non-zero finite vector.
    pub fn normalize(x: f64, y: f64, z: f64) -> Result<Self> {
        let n = libm::sqrt(x * x + y * y + z * z);
        if !n.is_finite() || n == 0.0 {
            return Err(invalid!("cannot normalize ({x}, {y}, {z})"));
        }
        Ok(Self { x: x / n, y: y / n, z: z / n })
    }

    /// Builds a vector from components known to be normalized by
    /// construction (rotation columns, trigonometric parametrizations).
    pub(crate) const fn from_unit_unchecked(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// x component.
    pub fn x(&self) -> f64 {
        self.x
    }

    /// y component.
    pub fn y(&self) -> f64 {
        self.y
    }

    /// z component.
    pub fn z(&self) -> f64 {
        self.z
    }

    /// Components as an array.
    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Euclidean inner product.
    pub fn dot(&self, other: &Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Cross product. The result is a unit vector only for orthogonal inputs,
    /// so it is returned as plain components.
    pub fn cross(&self, other: &Self) -> [f64; 3] {
        [self.y * other.z - self.z * other.y, self.z * other.x - self.x * other.z, self.x * other.y - self.y * other.x]
    }

    /// Euclidean norm (1 up to rounding).
    pub fn norm(&self) -> f64 {
        libm::sqrt(self.dot(self))
    }

    /// Applies a 3×3 rotation matrix (row-major).
    pub fn rotated(&self, r: &[[f64; 3]; 3]) -> Self {
        let v = self.to_array();
        let c = |i: usize| r[i][0] * v[0] + r[i][1] * v[1] + r[i][2] * v[2];
        Self { x: c(0), y: c(1), z: c(2) }
    }
}

impl Neg for BlochVector {
    type Output = Self;

    fn neg(self) -> Self {
        Self { x: -self.x, y: -self.y, z: -self.z }
    }
}

/// Three mutually orthogonal measurement directions used by one party.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triad {
    vectors: [BlochVector; 3],
}

impl Triad {
    /// The standard basis `(x̂, ŷ, ẑ)`.
    pub const STANDARD: Self = Self { vectors: [BlochVector::X, BlochVector::Y, BlochVector::Z] };

    /// Validates pairwise orthogonality within [`GEOMETRY_TOL`].
    pub fn new(v1: BlochVector, v2: BlochVector, v3: BlochVector) -> Result<Self> {
        let vs = [v1, v2, v3];
        for i in 0..3 {
            for j in (i + 1)..3 {
                let d = vs[i].dot(&vs[j]);
                if d.abs() > GEOMETRY_TOL {
                    return Err(invalid!("triad vectors {i} and {j} are not orthogonal (dot = {d:e})"));
                }
            }
        }
        Ok(Self { vectors: vs })
    }

    /// The columns of a rotation matrix (row-major `r`) form a right-handed triad.
    pub(crate) fn from_rotation_columns(r: &[[f64; 3]; 3]) -> Self {
        let col = |j: usize| BlochVector::from_unit_unchecked(r[0][j], r[1][j], r[2][j]);
        Self { vectors: [col(0), col(1), col(2)] }
    }

    /// The three directions in order.
    pub fn vectors(&self) -> &[BlochVector; 3] {
        &self.vectors
    }

    /// `v1 · (v2 × v3)`: +1 for right-handed triads, −1 for left-handed.
    pub fn determinant(&self) -> f64 {
        let [a, b, c] = &self.vectors;
        let bc = b.cross(c);
        a.x * bc[0] + a.y * bc[1] + a.z * bc[2]
    }

    /// Applies a rotation matrix to every direction.
    pub fn rotated(&self, r: &[[f64; 3]; 3]) -> Self {
        Self { vectors: self.vectors.map(|v| v.rotated(r)) }
    }
}

impl Index<usize> for Triad {
    type Output = BlochVector;

    fn index(&self, i: usize) -> &BlochVector {
        &self.vectors[i]
    }
}

/// The Werner family `V·|Ψ⁻⟩⟨Ψ⁻| + (1 − V)·𝟙/4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WernerState {
    visibility: f64,
}

impl WernerState {
    /// The pure singlet, `V = 1`.
    pub const SINGLET: Self = Self { visibility: 1.0 };

    /// Validates `0 ≤ V ≤ 1`.
    pub fn new(visibility: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&visibility) {
            return Err(invalid!("visibility {visibility} outside [0, 1]"));
        }
        Ok(Self { visibility })
    }

    /// Singlet weight `V`.
    pub fn visibility(&self) -> f64 {
        self.visibility
    }
}

/// A ±1 measurement outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    /// `+1`
    Plus,
    /// `−1`
    Minus,
}

impl Outcome {
    /// Both outcomes, `+1` first.
    pub const ALL: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    /// Numeric value.
    pub fn sign(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }
}

/// The four joint outcome pairs in the order `++, +−, −+, −−`.
pub const OUTCOME_PAIRS: [(Outcome, Outcome); 4] = [
    (Outcome::Plus, Outcome::Plus),
    (Outcome::Plus, Outcome::Minus),
    (Outcome::Minus, Outcome::Plus),
    (Outcome::Minus, Outcome::Minus),
];

/// Correlator `E = −V·(a·b)`.
pub fn correlator(a: &BlochVector, b: &BlochVector, state: WernerState) -> f64 {
    -state.visibility * a.dot(b)
}

/// Probability of the joint outcome `(oa, ob)`: `(1 + oa·ob·E) / 4`.
pub fn joint_probability(a: &BlochVector, b: &BlochVector, state: WernerState, oa: Outcome, ob: Outcome) -> f64 {
    (1.0 + oa.sign() * ob.sign() * correlator(a, b, state)) / 4.0
}

/// Dense `rows × cols` matrix of correlators, row index = Alice's setting,
/// column index = Bob's setting.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CorrelatorMatrix {
    /// Builds a matrix from row-major data.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid!("correlator matrix must be non-empty, got {rows}x{cols}"));
        }
        if data.len() != rows * cols {
            return Err(invalid!("expected {} entries for {rows}x{cols}, got {}", rows * cols, data.len()));
        }
        if let Some(bad) = data.iter().find(|e| !e.is_finite()) {
            return Err(invalid!("non-finite correlator {bad}"));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != cols) {
            return Err(invalid!("ragged rows in correlator matrix"));
        }
        let data = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::from_row_major(rows.len(), cols, data)
    }

    /// The 3×3 matrix from a fixed-size array.
    pub fn from_array3(m: [[f64; 3]; 3]) -> Self {
        Self { rows: 3, cols: 3, data: m.iter().flatten().copied().collect() }
    }

    /// Number of Alice settings.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of Bob settings.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry `(x, y)`; panics when out of bounds.
    pub fn get(&self, x: usize, y: usize) -> f64 {
        assert!(x < self.rows && y < self.cols, "index ({x}, {y}) out of bounds");
        self.data[x * self.cols + y]
    }

    /// Overwrites entry `(x, y)`; panics when out of bounds.
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        assert!(x < self.rows && y < self.cols, "index ({x}, {y}) out of bounds");
        self.data[x * self.cols + y] = value;
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|e| e * factor).collect() }
    }

    /// The transpose.
    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for y in 0..self.cols {
            for x in 0..self.rows {
                data.push(self.get(x, y));
            }
        }
        Self { rows: self.cols, cols: self.rows, data }
    }

    /// The 3×3 array form, if the matrix is 3×3.
    pub fn to_array3(&self) -> Option<[[f64; 3]; 3]> {
        (self.rows == 3 && self.cols == 3).then(|| core::array::from_fn(|i| core::array::from_fn(|j| self.get(i, j))))
    }

    /// Gram matrix `EᵀE` (`cols × cols`, row-major).
    pub fn gram(&self) -> Vec<f64> {
        let n = self.cols;
        let mut g = alloc::vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                g[i * n + j] = (0..self.rows).map(|k| self.get(k, i) * self.get(k, j)).sum();
            }
        }
        g
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, e| f64::max(m, e.abs()))
    }
}

/// Matrix of correlators `E[x][y] = correlator(alice[x], bob[y], state)`.
pub fn correlator_matrix(alice: &[BlochVector], bob: &[BlochVector], state: WernerState) -> Result<CorrelatorMatrix> {
    if alice.is_empty() || bob.is_empty() {
        return Err(Error::InvalidInput(alloc::format!(
            "correlator_matrix needs settings on both sides (got {} and {})",
            alice.len(),
            bob.len()
        )));
    }
    let data = alice.iter().flat_map(|a| bob.iter().map(move |b| correlator(a, b, state))).collect();
    Ok(CorrelatorMatrix { rows: alice.len(), cols: bob.len(), data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn singlet_correlators() {
        assert_eq!(correlator(&BlochVector::Z, &BlochVector::Z, WernerState::SINGLET), -1.0);
        assert_eq!(correlator(&BlochVector::Z, &BlochVector::X, WernerState::SINGLET), 0.0);
        // a·b = 1/2 at 60 degrees
        let b = BlochVector::new(libm::sqrt(3.0) / 2.0, 0.0, 0.5).unwrap();
        assert_close(correlator(&BlochVector::Z, &b, WernerState::new(0.8).unwrap()), -0.4, 1e-15);
    }

    #[test]
    fn joint_probabilities() {
        let s = WernerState::SINGLET;
        let (z, p, m) = (BlochVector::Z, Outcome::Plus, Outcome::Minus);
        assert_eq!(joint_probability(&z, &z, s, p, p), 0.0);
        assert_eq!(joint_probability(&z, &z, s, p, m), 0.5);
        let mixed = WernerState::new(0.0).unwrap();
        for (oa, ob) in OUTCOME_PAIRS {
            assert_eq!(joint_probability(&z, &BlochVector::X, mixed, oa, ob), 0.25);
        }
    }

    #[test]
    fn aligned_triads_give_minus_identity() {
        let t = Triad::STANDARD;
        let e = correlator_matrix(t.vectors(), t.vectors(), WernerState::SINGLET).unwrap();
        assert_eq!(e.as_slice(), &[-1.0, -0.0, -0.0, -0.0, -1.0, -0.0, -0.0, -0.0, -1.0]);
        let e = correlator_matrix(t.vectors(), t.vectors(), WernerState::new(0.9).unwrap()).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                assert_eq!(e.get(x, y), if x == y { -0.9 } else { 0.0 });
            }
        }
    }

    #[test]
    fn empty_settings_rejected() {
        let err = correlator_matrix(&[], &[BlochVector::Z], WernerState::SINGLET).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn construction_validates() {
        assert!(BlochVector::new(1.0, 1.0, 0.0).is_err());
        assert!(BlochVector::new(f64::NAN, 0.0, 0.0).is_err());
        assert!(BlochVector::new(1.0 + 4e-10, 0.0, 0.0).is_ok());
        assert!(BlochVector::normalize(0.0, 0.0, 0.0).is_err());
        assert!(Triad::new(BlochVector::X, BlochVector::X, BlochVector::Z).is_err());
        assert!(WernerState::new(1.01).is_err());
        assert!(WernerState::new(-0.1).is_err());
        assert!(CorrelatorMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0]]).is_err());
    }

    #[test]
    fn standard_triad_is_right_handed() {
        assert_eq!(Triad::STANDARD.determinant(), 1.0);
        let left = Triad::new(BlochVector::Y, BlochVector::X, BlochVector::Z).unwrap();
        assert_eq!(left.determinant(), -1.0);
    }

    #[test]
    fn transpose_and_gram() {
        let e = CorrelatorMatrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        let t = e.transpose();
        assert_eq!((t.rows(), t.cols()), (3, 2));
        assert_eq!(t.get(2, 1), 6.0);
        assert_eq!(e.gram(), vec![17.0, 22.0, 27.0, 22.0, 29.0, 36.0, 27.0, 36.0, 45.0]);
    }
}
