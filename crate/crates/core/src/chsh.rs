//! CHSH expressions over a correlator matrix.
//!
//! A CHSH inequality picks two Alice settings `x ≠ x'`, two Bob settings
//! `y ≠ y'` and places a single minus sign on one of the four terms:
//!
//! ```text
//! | E(x,y) + E(x,y') + E(x',y) + E(x',y') − 2·E(term) | ≤ 2
//! ```
//!
//! For three settings per side there are `3·3·4 = 36` such inequalities.
//! [`chsh_max`] searches all of them. For orthogonal triads
//! [`canonicalize`] and [`proof_witness`] produce a violated inequality
//! constructively, by relabeling the matrix into a normal form where
//! `E11 + E21 − E12 + E22 ≥ 2` always holds.

use core::fmt;

use crate::error::invalid;
use crate::quantum::{CorrelatorMatrix, Triad};
use crate::{Error, Result};

/// Relative tolerance for `EᵀE = c·I` accepted by [`canonicalize`].
pub const ORTHOGONALITY_TOL: f64 = 1e-6;

/// Tolerance used when deciding that a CHSH value sits exactly at the local bound.
pub const BOUND_EQUALITY_TOL: f64 = 1e-9;

/// Position of one of the four terms of a CHSH expression, in the order
/// `(x,y), (x,y'), (x',y), (x',y')`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermPosition(u8);

impl TermPosition {
    /// All four positions in order.
    pub const ALL: [TermPosition; 4] = [TermPosition(0), TermPosition(1), TermPosition(2), TermPosition(3)];

    /// Position from its index `0..4`.
    pub fn new(index: u8) -> Result<Self> {
        if index > 3 {
            return Err(invalid!("term position must be in 0..4, got {index}"));
        }
        Ok(Self(index))
    }

    /// Index `0..4`.
    pub fn index(self) -> u8 {
        self.0
    }

    fn from_cell(alice_second: bool, bob_second: bool) -> Self {
        Self(u8::from(alice_second) * 2 + u8::from(bob_second))
    }
}

/// One CHSH inequality together with its value on a particular matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshWitness {
    alice: (usize, usize),
    bob: (usize, usize),
    minus: TermPosition,
    value: f64,
}

impl ChshWitness {
    /// Evaluates the inequality `(x, x'; y, y')` with the minus sign at `minus` on `e`.
    pub fn evaluate(
        e: &CorrelatorMatrix,
        alice: (usize, usize),
        bob: (usize, usize),
        minus: TermPosition,
    ) -> Result<Self> {
        let value = chsh_terms(e, alice, bob)?;
        Ok(Self { alice, bob, minus, value: signed_sum(&value, minus).abs() })
    }

    /// Alice's pair `(x, x')`.
    pub fn alice(&self) -> (usize, usize) {
        self.alice
    }

    /// Bob's pair `(y, y')`.
    pub fn bob(&self) -> (usize, usize) {
        self.bob
    }

    /// The term carrying the minus sign.
    pub fn minus_position(&self) -> TermPosition {
        self.minus
    }

    /// Absolute value of the CHSH expression.
    pub fn value(&self) -> f64 {
        self.value
    }
}

impl fmt::Display for ChshWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = |p: TermPosition| match p.0 {
            0 => "(x,y)",
            1 => "(x,y')",
            2 => "(x',y)",
            _ => "(x',y')",
        };
        write!(
            f,
            "x={} x'={} y={} y'={} minus on {}: {:.6}",
            self.alice.0,
            self.alice.1,
            self.bob.0,
            self.bob.1,
            name(self.minus),
            self.value
        )
    }
}

fn chsh_terms(e: &CorrelatorMatrix, (x, x2): (usize, usize), (y, y2): (usize, usize)) -> Result<[f64; 4]> {
    let (rows, cols) = (e.rows(), e.cols());
    if x >= rows || x2 >= rows || y >= cols || y2 >= cols {
        return Err(invalid!("witness ({x},{x2};{y},{y2}) out of bounds for a {rows}x{cols} matrix"));
    }
    if x == x2 || y == y2 {
        return Err(invalid!("witness needs two distinct settings per party, got ({x},{x2};{y},{y2})"));
    }
    Ok([e.get(x, y), e.get(x, y2), e.get(x2, y), e.get(x2, y2)])
}

// evaluated left to right so every route to a given expression rounds identically
#[inline]
fn signed_sum(t: &[f64; 4], minus: TermPosition) -> f64 {
    match minus.0 {
        0 => -t[0] + t[1] + t[2] + t[3],
        1 => t[0] - t[1] + t[2] + t[3],
        2 => t[0] + t[1] - t[2] + t[3],
        _ => t[0] + t[1] + t[2] - t[3],
    }
}

/// Signed sum of the witness's expression on `e` (without the absolute value).
pub fn chsh_signed_sum(e: &CorrelatorMatrix, w: &ChshWitness) -> Result<f64> {
    Ok(signed_sum(&chsh_terms(e, w.alice, w.bob)?, w.minus))
}

/// Absolute value of the witness's CHSH expression evaluated on `e`.
pub fn chsh_value(e: &CorrelatorMatrix, w: &ChshWitness) -> Result<f64> {
    chsh_signed_sum(e, w).map(f64::abs)
}

/// Maximal CHSH value over every pair of rows, pair of columns and minus
/// placement. Ties go to the lexicographically smallest
/// `(x, x', y, y', minus)` with `x < x'` and `y < y'`.
pub fn chsh_max(e: &CorrelatorMatrix) -> Result<ChshWitness> {
    let (rows, cols) = (e.rows(), e.cols());
    if rows < 2 || cols < 2 {
        return Err(invalid!("CHSH needs at least two settings per party, got {rows}x{cols}"));
    }
    let mut best = ChshWitness { alice: (0, 1), bob: (0, 1), minus: TermPosition(0), value: f64::NEG_INFINITY };
    for x in 0..rows {
        for x2 in (x + 1)..rows {
            for y in 0..cols {
                for y2 in (y + 1)..cols {
                    let t = [e.get(x, y), e.get(x, y2), e.get(x2, y), e.get(x2, y2)];
                    for minus in TermPosition::ALL {
                        let v = signed_sum(&t, minus).abs();
                        if v > best.value {
                            best = ChshWitness { alice: (x, x2), bob: (y, y2), minus, value: v };
                        }
                    }
                }
            }
        }
    }
    Ok(best)
}

/// A 3×3 correlator matrix relabeled into the normal form used by the
/// constructive violation argument.
///
/// `matrix[i][j] = row_signs[i] · col_signs[j] · original[row_perm[i]][col_perm[j]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalForm {
    /// The relabeled matrix.
    pub matrix: [[f64; 3]; 3],
    /// Original row placed at each canonical row.
    pub row_perm: [usize; 3],
    /// Original column placed at each canonical column.
    pub col_perm: [usize; 3],
    /// Outcome relabeling applied to each canonical row.
    pub row_signs: [i8; 3],
    /// Outcome relabeling applied to each canonical column.
    pub col_signs: [i8; 3],
}

impl CanonicalForm {
    /// Undoes the relabeling, returning the original matrix.
    pub fn reconstruct(&self) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let s = f64::from(self.row_signs[i] * self.col_signs[j]);
                out[self.row_perm[i]][self.col_perm[j]] = s * self.matrix[i][j];
            }
        }
        out
    }

    /// `E11 + E21 − E12 + E22` in canonical coordinates.
    pub fn certificate_value(&self) -> f64 {
        let m = &self.matrix;
        m[0][0] + m[1][0] - m[0][1] + m[1][1]
    }
}

/// Scale `c` such that `EᵀE ≈ c·I`, or the precondition error.
fn orthogonal_scale(e: &CorrelatorMatrix) -> Result<f64> {
    if e.rows() != 3 || e.cols() != 3 {
        return Err(invalid!("canonical form is defined for 3x3 matrices, got {}x{}", e.rows(), e.cols()));
    }
    let g = e.gram();
    let c = (g[0] + g[4] + g[8]) / 3.0;
    if c.is_nan() || c <= ORTHOGONALITY_TOL {
        return Err(Error::Precondition { what: "E^T E = c I with c > 0", deviation: c, tolerance: ORTHOGONALITY_TOL });
    }
    let mut dev: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let target = if i == j { c } else { 0.0 };
            dev = dev.max((g[i * 3 + j] - target).abs());
        }
    }
    if dev > ORTHOGONALITY_TOL {
        return Err(Error::Precondition { what: "E^T E = c I", deviation: dev, tolerance: ORTHOGONALITY_TOL });
    }
    Ok(c)
}

fn sign_of(v: f64) -> i8 {
    if v < 0.0 {
        -1
    } else {
        1
    }
}

/// Relabels an orthogonal (up to scale) 3×3 correlator matrix so that
/// `E11, E22 > 0`, `E33` is the largest entry in absolute value,
/// `E12 ≤ 0` and `E21 ≥ 0`.
///
/// Steps, in order: move the largest-magnitude entry (first in row-major
/// order on ties) to `(3,3)`; order the two remaining columns so the
/// diagonal of the leading 2×2 block dominates its anti-diagonal; flip row
/// signs to make the diagonal positive; finally flip row 2 and column 2
/// together when `E12 > 0` or `E21 < 0`.
pub fn canonicalize(e: &CorrelatorMatrix) -> Result<CanonicalForm> {
    orthogonal_scale(e)?;
    let m = e.to_array3().expect("checked 3x3");

    let (mut pr, mut pc, mut best) = (0, 0, -1.0);
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if v.abs() > best {
                (pr, pc, best) = (i, j, v.abs());
            }
        }
    }
    let rest = |p: usize| {
        let mut it = (0..3).filter(move |&k| k != p);
        [it.next().unwrap(), it.next().unwrap(), p]
    };
    let row_perm = rest(pr);
    let mut col_perm = rest(pc);

    let at = |i: usize, j: usize, cp: &[usize; 3]| m[row_perm[i]][cp[j]];
    if (at(0, 0, &col_perm) * at(1, 1, &col_perm)).abs() < (at(0, 1, &col_perm) * at(1, 0, &col_perm)).abs() {
        col_perm.swap(0, 1);
    }

    let mut row_signs = [sign_of(at(0, 0, &col_perm)), sign_of(at(1, 1, &col_perm)), sign_of(at(2, 2, &col_perm))];
    let mut col_signs = [1i8; 3];

    let build = |rs: &[i8; 3], cs: &[i8; 3]| -> [[f64; 3]; 3] {
        core::array::from_fn(|i| core::array::from_fn(|j| f64::from(rs[i] * cs[j]) * at(i, j, &col_perm)))
    };
    let mut matrix = build(&row_signs, &col_signs);
    if matrix[0][1] > 0.0 || matrix[1][0] < 0.0 {
        row_signs[1] = -row_signs[1];
        col_signs[1] = -col_signs[1];
        matrix = build(&row_signs, &col_signs);
    }

    Ok(CanonicalForm { matrix, row_perm, col_perm, row_signs, col_signs })
}

/// The CHSH inequality `E11 + E21 − E12 + E22` of the canonical form,
/// expressed in the original setting labels and normalized so `x < x'`
/// and `y < y'`.
///
/// Requires an orthogonal matrix (unit scale): rescale by `1/V` first for a
/// Werner state. Its value is at least 2, with equality exactly for aligned
/// triads.
pub fn proof_witness(e: &CorrelatorMatrix) -> Result<ChshWitness> {
    let c = orthogonal_scale(e)?;
    if (c - 1.0).abs() > ORTHOGONALITY_TOL {
        return Err(Error::Precondition {
            what: "E^T E = I (unit scale)",
            deviation: (c - 1.0).abs(),
            tolerance: ORTHOGONALITY_TOL,
        });
    }
    let form = canonicalize(e)?;

    // canonical signs of the certificate, cells (0,0) (0,1) (1,0) (1,1)
    let canonical = [[1i8, -1], [1, 1]];
    let mut signs = [[0i8; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            signs[i][j] = canonical[i][j] * form.row_signs[i] * form.col_signs[j];
        }
    }
    let minus_count = signs.iter().flatten().filter(|&&s| s < 0).count();
    if minus_count == 3 {
        for s in signs.iter_mut().flatten() {
            *s = -*s;
        }
    }
    let (mut ri, mut cj) = (0usize, 0usize);
    for (i, row) in signs.iter().enumerate() {
        for (j, &s) in row.iter().enumerate() {
            if s < 0 {
                (ri, cj) = (i, j);
            }
        }
    }
    let (r0, r1) = (form.row_perm[0], form.row_perm[1]);
    let (c0, c1) = (form.col_perm[0], form.col_perm[1]);
    let alice = if r0 < r1 { (r0, r1) } else { (r1, r0) };
    let bob = if c0 < c1 { (c0, c1) } else { (c1, c0) };
    let minus_row = form.row_perm[ri];
    let minus_col = form.col_perm[cj];
    let minus = TermPosition::from_cell(minus_row == alice.1, minus_col == bob.1);
    ChshWitness::evaluate(e, alice, bob, minus)
}

/// Whether each of Alice's directions equals ± one of Bob's, that is the
/// matrix of dot products is a signed permutation within `tol`.
pub fn is_aligned(a: &Triad, b: &Triad, tol: f64) -> bool {
    let d: [[f64; 3]; 3] = core::array::from_fn(|x| core::array::from_fn(|y| a[x].dot(&b[y])));
    let mut col_hits = [0u8; 3];
    for row in &d {
        let mut hits = 0;
        for (y, v) in row.iter().enumerate() {
            if (v.abs() - 1.0).abs() <= tol {
                hits += 1;
                col_hits[y] += 1;
            } else if v.abs() > tol {
                return false;
            }
        }
        if hits != 1 {
            return false;
        }
    }
    col_hits == [1, 1, 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{correlator_matrix, BlochVector, WernerState};
    use crate::TSIRELSON;
    use core::f64::consts::FRAC_1_SQRT_2;

    fn minus_identity() -> CorrelatorMatrix {
        CorrelatorMatrix::from_array3([[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]])
    }

    fn rz(theta: f64) -> [[f64; 3]; 3] {
        let (s, c) = libm::sincos(theta);
        [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
    }

    fn rotated_pair(theta: f64) -> CorrelatorMatrix {
        let a = Triad::STANDARD;
        let b = a.rotated(&rz(theta));
        correlator_matrix(a.vectors(), b.vectors(), WernerState::SINGLET).unwrap()
    }

    #[test]
    fn value_of_specific_witnesses() {
        let e = minus_identity();
        let w = ChshWitness::evaluate(&e, (0, 1), (0, 1), TermPosition(3)).unwrap();
        assert_eq!(w.value(), 0.0);
        let best = (0..4)
            .map(|k| chsh_value(&e, &ChshWitness::evaluate(&e, (0, 1), (0, 1), TermPosition(k)).unwrap()).unwrap())
            .fold(0.0, f64::max);
        assert_eq!(best, 2.0);

        let zero = CorrelatorMatrix::from_array3([[0.0; 3]; 3]);
        assert_eq!(ChshWitness::evaluate(&zero, (1, 2), (0, 2), TermPosition(1)).unwrap().value(), 0.0);

        let h = FRAC_1_SQRT_2;
        let t = CorrelatorMatrix::from_array3([[h, h, 0.0], [h, -h, 0.0], [0.0, 0.0, 0.0]]);
        let w = ChshWitness::evaluate(&t, (0, 1), (0, 1), TermPosition(3)).unwrap();
        assert!((w.value() - TSIRELSON).abs() < 1e-15);
        assert!((chsh_signed_sum(&t, &w).unwrap() - TSIRELSON).abs() < 1e-15);
    }

    #[test]
    fn witness_bounds_checked() {
        let e = minus_identity();
        assert!(ChshWitness::evaluate(&e, (0, 3), (0, 1), TermPosition(0)).is_err());
        assert!(ChshWitness::evaluate(&e, (1, 1), (0, 1), TermPosition(0)).is_err());
        assert!(TermPosition::new(4).is_err());
        let small = CorrelatorMatrix::from_rows(&[[1.0, 0.0]]).unwrap();
        assert!(chsh_max(&small).is_err());
    }

    #[test]
    fn max_on_aligned_and_rotated_triads() {
        let w = chsh_max(&minus_identity()).unwrap();
        assert_eq!(w.value(), 2.0);
        // first witness reaching 2: rows (0,1), cols (0,1), minus on (x,y')
        assert_eq!((w.alice(), w.bob(), w.minus_position()), ((0, 1), (0, 1), TermPosition(1)));

        let e = rotated_pair(core::f64::consts::FRAC_PI_4);
        assert!((chsh_max(&e).unwrap().value() - TSIRELSON).abs() < 1e-9);
        assert!((chsh_max(&e.scaled(0.5)).unwrap().value() - core::f64::consts::SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn canonical_forms() {
        let f = canonicalize(&minus_identity()).unwrap();
        assert_eq!(f.matrix, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        // E11 is the first largest entry, so it moves to (3,3)
        assert_eq!(f.row_perm, [1, 2, 0]);
        assert_eq!((f.row_signs, f.col_signs), ([-1, -1, -1], [1, 1, 1]));
        assert_eq!(f.reconstruct(), minus_identity().to_array3().unwrap());

        let perm = CorrelatorMatrix::from_array3([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]);
        let f = canonicalize(&perm).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(f.matrix[i][j], if i == j { 1.0 } else { 0.0 });
            }
        }
        assert_eq!(f.reconstruct(), perm.to_array3().unwrap());
    }

    #[test]
    fn canonical_form_of_rotation() {
        let h = FRAC_1_SQRT_2;
        let e = CorrelatorMatrix::from_array3([[h, -h, 0.0], [h, h, 0.0], [0.0, 0.0, 1.0]]);
        let f = canonicalize(&e).unwrap();
        let m = f.matrix;
        assert_eq!(m[2][2], 1.0);
        assert!(m[0][0] > 0.0 && m[1][1] > 0.0 && m[0][1] <= 0.0 && m[1][0] >= 0.0);
        assert!((f.certificate_value() - TSIRELSON).abs() < 1e-15);
    }

    #[test]
    fn non_orthogonal_rejected() {
        let e = CorrelatorMatrix::from_array3([[1.0, 1.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let err = canonicalize(&e).unwrap_err();
        assert!(matches!(err, Error::Precondition { tolerance, .. } if tolerance == ORTHOGONALITY_TOL));
        assert!(canonicalize(&CorrelatorMatrix::from_array3([[0.0; 3]; 3])).is_err());
        let scaled = minus_identity().scaled(0.9);
        assert!(canonicalize(&scaled).is_ok());
        assert!(matches!(proof_witness(&scaled), Err(Error::Precondition { .. })));
        assert!(proof_witness(&CorrelatorMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap()).is_err());
    }

    #[test]
    fn proof_witness_values() {
        assert_eq!(proof_witness(&minus_identity()).unwrap().value(), 2.0);
        let w = proof_witness(&rotated_pair(core::f64::consts::FRAC_PI_4)).unwrap();
        assert!((w.value() - TSIRELSON).abs() < 1e-12);
    }

    #[test]
    fn alignment() {
        let a = Triad::STANDARD;
        assert!(is_aligned(&a, &a, 1e-9));
        let swapped = Triad::new(a[1], a[0], -a[2]).unwrap();
        assert!(is_aligned(&a, &swapped, 1e-9));
        assert!(!is_aligned(&a, &a.rotated(&rz(core::f64::consts::FRAC_PI_4)), 1e-9));
        let tilted = Triad::new(
            BlochVector::normalize(1.0, 1e-3, 0.0).unwrap(),
            BlochVector::normalize(-1e-3, 1.0, 0.0).unwrap(),
            BlochVector::Z,
        )
        .unwrap();
        assert!(!is_aligned(&a, &tilted, 1e-9));
        assert!(is_aligned(&a, &tilted, 1e-2));
    }
}
