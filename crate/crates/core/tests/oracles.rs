//! Implementation-independent oracles: explicit unitary conjugation for the
//! interferometer, naive sign-pattern enumeration for CHSH, and exhaustive
//! relabeling search for the canonical form.

use randbell_core::chsh::{canonicalize, chsh_max, proof_witness, ChshWitness, TermPosition};
use randbell_core::device::{
    bloch_of_observable, conjugated_sigma_z, mz_measurement_vector, mz_unitary_oracle, MzSettings,
};
use randbell_core::quantum::{correlator_matrix, CorrelatorMatrix, Triad, WernerState};
use randbell_core::sampling::{random_rotation, RngStream};
use randbell_core::TSIRELSON;

/// Every CHSH value by brute force over ordered setting pairs and all
/// sign patterns with an odd number of minus signs. Each expression is
/// summed in increasing index order, so equal expressions round equally.
fn naive_chsh_max(e: &CorrelatorMatrix) -> f64 {
    let mut best: f64 = 0.0;
    for xa in 0..e.rows() {
        for xb in 0..e.rows() {
            for ya in 0..e.cols() {
                for yb in 0..e.cols() {
                    if xa == xb || ya == yb {
                        continue;
                    }
                    let (x, x2) = (xa.min(xb), xa.max(xb));
                    let (y, y2) = (ya.min(yb), ya.max(yb));
                    for pattern in 0..16u32 {
                        let signs: Vec<f64> = (0..4).map(|b| if pattern >> b & 1 == 1 { -1.0 } else { 1.0 }).collect();
                        if signs.iter().product::<f64>() > 0.0 {
                            continue;
                        }
                        let v = signs[0] * e.get(x, y)
                            + signs[1] * e.get(x, y2)
                            + signs[2] * e.get(x2, y)
                            + signs[3] * e.get(x2, y2);
                        best = best.max(v.abs());
                    }
                }
            }
        }
    }
    best
}

#[test]
fn mz_closed_form_matches_conjugation_oracle() {
    let mut rng = RngStream::new(2024, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let s = MzSettings::new(std::f64::consts::TAU * rng.uniform(), std::f64::consts::TAU * rng.uniform()).unwrap();
        let u = mz_unitary_oracle(&s);
        // U U† = I
        for i in 0..2 {
            for j in 0..2 {
                let p: num_complex::Complex64 = (0..2).map(|k| u[i][k] * u[j][k].conj()).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((p.re - target).abs() < 1e-12 && p.im.abs() < 1e-12);
            }
        }
        let oracle = bloch_of_observable(&conjugated_sigma_z(&u));
        let n = mz_measurement_vector(&s);
        assert!((n.norm() - 1.0).abs() < 1e-12);
        for (a, b) in n.to_array().iter().zip(oracle) {
            worst = worst.max((a - b).abs());
        }
    }
    assert!(worst < 1e-10, "max deviation {worst:e}");
}

#[test]
fn chsh_max_matches_naive_enumeration() {
    let mut rng = RngStream::new(77, 0);
    for i in 0..1000 {
        let rows = 2 + i % 5;
        let cols = 2 + (i / 5) % 5;
        let data = (0..rows * cols).map(|_| 2.0 * rng.uniform() - 1.0).collect();
        let e = CorrelatorMatrix::from_row_major(rows, cols, data).unwrap();
        let w = chsh_max(&e).unwrap();
        assert_eq!(w.value(), naive_chsh_max(&e), "matrix {e:?}");
    }
}

#[test]
fn rotated_triads_reach_tsirelson_by_brute_force() {
    let (s, c) = std::f64::consts::FRAC_PI_4.sin_cos();
    let rz = [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]];
    let a = Triad::STANDARD;
    let e = correlator_matrix(a.vectors(), a.rotated(&rz).vectors(), WernerState::SINGLET).unwrap();
    assert!((naive_chsh_max(&e) - TSIRELSON).abs() < 1e-9);
    assert!((naive_chsh_max(&e.scaled(0.5)) - std::f64::consts::SQRT_2).abs() < 1e-9);
}

fn permutations() -> Vec<[usize; 3]> {
    vec![[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]]
}

/// All relabelings of `m` that satisfy the normal form, with their
/// certificate values `E11 + E21 − E12 + E22`.
fn normal_forms(m: &[[f64; 3]; 3]) -> Vec<([[f64; 3]; 3], f64)> {
    let mut out = Vec::new();
    for rp in permutations() {
        for cp in permutations() {
            for signs in 0..64u32 {
                let s = |b: u32| if signs >> b & 1 == 1 { -1.0 } else { 1.0 };
                let c: [[f64; 3]; 3] =
                    std::array::from_fn(|i| std::array::from_fn(|j| s(i as u32) * s(3 + j as u32) * m[rp[i]][cp[j]]));
                let largest = c.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
                if c[0][0] > 0.0 && c[1][1] > 0.0 && c[2][2] == largest && c[0][1] <= 0.0 && c[1][0] >= 0.0 {
                    out.push((c, c[0][0] + c[1][0] - c[0][1] + c[1][1]));
                }
            }
        }
    }
    out
}

#[test]
fn canonical_form_is_found_by_exhaustive_search() {
    let (s, c) = std::f64::consts::FRAC_PI_4.sin_cos();
    let rz = [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]];
    let forms = normal_forms(&rz);
    assert!(!forms.is_empty());
    let f = canonicalize(&CorrelatorMatrix::from_array3(rz)).unwrap();
    assert!(forms.iter().any(|(m, _)| *m == f.matrix));
    assert_eq!(f.matrix[2][2], 1.0);

    let mut rng = RngStream::new(5, 0);
    for _ in 0..200 {
        let r = random_rotation(&mut rng);
        let e = CorrelatorMatrix::from_array3(r);
        let f = canonicalize(&e).unwrap();
        let forms = normal_forms(&r);
        // the constructed form is one of the admissible ones
        assert!(forms.iter().any(|(m, _)| m.iter().flatten().zip(f.matrix.iter().flatten()).all(|(a, b)| a == b)));
        // every admissible normal form certifies a violation, and none beats chsh_max
        let best = chsh_max(&e).unwrap().value();
        for (_, v) in &forms {
            assert!(*v >= 2.0 - 1e-12 && *v <= best + 1e-12);
        }
        let w = proof_witness(&e).unwrap();
        assert!((w.value() - f.certificate_value()).abs() < 1e-12);
    }
}

#[test]
fn proof_witness_is_a_valid_witness_in_original_labels() {
    let mut rng = RngStream::new(6, 0);
    for _ in 0..1000 {
        let e = CorrelatorMatrix::from_array3(random_rotation(&mut rng));
        let w = proof_witness(&e).unwrap();
        let (x, x2) = w.alice();
        let (y, y2) = w.bob();
        assert!(x < x2 && y < y2);
        let recomputed =
            ChshWitness::evaluate(&e, (x, x2), (y, y2), TermPosition::new(w.minus_position().index()).unwrap())
                .unwrap();
        assert_eq!(recomputed.value(), w.value());
        assert!(w.value() > 2.0);
    }
}
