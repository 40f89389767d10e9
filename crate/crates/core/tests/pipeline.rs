//! End-to-end checks through the public API against closed-form values.

use approx::assert_abs_diff_eq;
use freeness_lab_core::band::{band_entry_count, band_project, BandPattern};
use freeness_lab_core::concentration::{empirical_tail, herbst_bound, LipschitzStatistic};
use freeness_lab_core::coupling::{couple, diagonal_distance_bound, residual_certificate, CoupledFamily, ReferenceDiagonal};
use freeness_lab_core::freeness::{centered_word_moment, WordSpec};
use freeness_lab_core::haar::{esd, sample_haar_unitary};
use freeness_lab_core::linalg::commutator;
use freeness_lab_core::stats::{mean, std_error};
use freeness_lab_core::{c64, ComplexMatrix, RngStream, UnitaryMatrix};

fn rotated_reference(n: usize, theta: f64) -> UnitaryMatrix {
    let r = ReferenceDiagonal::new(n);
    let phases: Vec<f64> = (0..n).map(|t| r.phase(t) + theta).collect();
    UnitaryMatrix::from_phases(&phases)
}

#[test]
fn rotated_reference_has_uniform_gap() {
    // every eigenvalue sits at angle θ from its reference root, so all
    // distances equal |e^{iθ} − 1| = 2 sin(θ/2)
    let n = 12;
    let theta = 0.2 * std::f64::consts::TAU / n as f64;
    let gap = 2.0 * (theta / 2.0).sin();
    let mut rng = RngStream::new(5, 0).generator();
    let y = sample_haar_unitary(n, &mut rng).unwrap();
    let fam = CoupledFamily::from_parts(&[rotated_reference(n, theta)], &[y]).unwrap();
    let m = &fam.members[0];
    assert_abs_diff_eq!(m.diag_distance_op_norm, gap, epsilon = 1e-10);
    assert_abs_diff_eq!(m.diag_distance_two_norm, gap, epsilon = 1e-10);
    assert_abs_diff_eq!(m.residual_two_norm, gap, epsilon = 1e-9);
    assert!(m.conjugation_defect < 1e-9);
}

#[test]
fn coupled_member_residual_matches_direct_computation() {
    let n = 24;
    let mut rng = RngStream::cell(9, n, 0).generator();
    let fam = couple(n, 2, &mut rng).unwrap();
    let a = ReferenceDiagonal::new(n).matrix();
    for m in &fam.members {
        let vav = m.v.conjugate(&a).unwrap();
        let direct = m.u.as_matrix().two_norm_distance(&vav).unwrap();
        assert_abs_diff_eq!(direct, m.residual_two_norm, epsilon = 1e-12);
        assert_abs_diff_eq!(m.residual_two_norm, m.diag_distance_two_norm, epsilon = 1e-9);
    }
    for k in [2, 4, 8] {
        for (inside, dist) in residual_certificate(&fam, k).unwrap() {
            assert!(!inside || dist <= diagonal_distance_bound(k) + 1e-12);
        }
    }
}

#[test]
fn squared_trace_has_unit_mean() {
    // E|Tr U|² = 1 for Haar U at every n ≥ 1
    let n = 3;
    let xs: Vec<f64> = (0..4000)
        .map(|r| {
            let u = sample_haar_unitary(n, &mut RngStream::cell(2, n, r).generator()).unwrap();
            (u.as_matrix().normalized_trace() * n as f64).norm_sqr()
        })
        .collect();
    assert!((mean(&xs) - 1.0).abs() < 4.0 * std_error(&xs), "{}", mean(&xs));
}

#[test]
fn spectrum_of_phase_matrix_is_its_phases() {
    let phases = [0.3, 1.1, 2.0, 4.5, 6.0];
    let mu = esd(&UnitaryMatrix::from_phases(&phases)).unwrap();
    for (got, want) in mu.phases().iter().zip(phases) {
        assert_abs_diff_eq!(*got, want, epsilon = 1e-10);
    }
}

#[test]
fn projection_of_a_haar_commutant_stays_close() {
    // b commutes with A exactly when it is diagonal; perturb a diagonal and
    // compare the projection error with the commutator bound
    let n = 32;
    let eps = 0.25;
    let reference = ReferenceDiagonal::new(n);
    let mut rng = RngStream::new(3, 1).generator();
    let u = sample_haar_unitary(n, &mut rng).unwrap();
    let d = ComplexMatrix::from_fn(n, |i, j| if i == j { c64::new(i as f64 / n as f64, 0.0) } else { c64::new(0.0, 0.0) }).unwrap();
    let b = d.try_add(&u.as_matrix().scale(c64::new(0.01, 0.0))).unwrap();
    let p = band_project(&b, eps, &reference).unwrap();
    assert!(BandPattern::new(n, eps).unwrap().contains(&p));
    let lhs = b.two_norm_distance(&p).unwrap();
    let comm = commutator(&reference.matrix(), &b).unwrap().two_norm();
    assert!(lhs <= 8.0 * std::f64::consts::PI.sqrt() / eps * comm);
    assert!(p.operator_norm().unwrap() <= 3.0 * b.operator_norm().unwrap() + 1e-12);
}

#[test]
fn band_count_matches_brute_force() {
    for (n, eps) in [(10, 0.1), (10, 0.3), (17, 0.2), (40, 0.05)] {
        let pattern = BandPattern::new(n, eps).unwrap();
        let brute = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| pattern.allows(i, j)).count();
        assert_eq!(band_entry_count(n, eps).unwrap(), brute as u64, "n={n} eps={eps}");
    }
}

#[test]
fn diagonal_word_moment_by_hand() {
    // with V = I and X = diag(1, 2, 3, 6), centering gives diag(−2, −1, 0, 3);
    // the word (1, 2) is tr_n of its square, (4 + 1 + 0 + 9) / 4
    let x = ComplexMatrix::from_diagonal(&[1.0, 2.0, 3.0, 6.0].map(|v| c64::new(v, 0.0))).unwrap();
    let v = vec![UnitaryMatrix::identity(4), UnitaryMatrix::identity(4)];
    let word = WordSpec::new(vec![1, 2]).unwrap();
    let m = centered_word_moment(&v, &[x.clone(), x], &word).unwrap();
    assert_abs_diff_eq!(m.re, 3.5, epsilon = 1e-14);
    assert_abs_diff_eq!(m.im, 0.0, epsilon = 1e-14);
}

#[test]
fn constant_statistic_never_exceeds() {
    let report = empirical_tail(&LipschitzStatistic::zero(), 4, 1000, &[0.01, 0.1], 8).unwrap();
    assert!(report.rows.iter().all(|r| r.exceedances == 0 && r.bound == 0.0));
    assert!(report.all_sound());
}

#[test]
fn herbst_bound_by_hand() {
    // 4·exp(−100·0.25/12)
    assert_abs_diff_eq!(herbst_bound(10, 0.5, 1.0).unwrap(), 4.0 * (-25.0f64 / 12.0).exp(), epsilon = 1e-15);
    assert_abs_diff_eq!(herbst_bound(10, 1.0, 2.0).unwrap(), herbst_bound(10, 0.5, 1.0).unwrap(), epsilon = 1e-15);
}
