use cvcs_core::analysis::{extract_au, her, nullifier_sweep};
use cvcs_core::estimator::{min_symplectic_eigenvalue, project_physical, ProjectionOptions};
use cvcs_core::gaussian::{build_covariance_from_au, symplectic_matrix, symplectic_residual, CovarianceMatrix};
use cvcs_core::lattice::LatticeKind;
use cvcs_core::pumpsynth::{expected_signed_adjacency, honeycomb_scheme, square_scheme, PiTone};
use nalgebra::DMatrix;
use proptest::prelude::*;
use std::f64::consts::PI;

fn signed_symmetric(n: usize, bits: &[i8]) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let v = bits[k % bits.len()] as f64;
            a[(i, j)] = v;
            a[(j, i)] = v;
            k += 1;
        }
    }
    a
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn extract_inverts_build(
        n in 2usize..20,
        bits in prop::collection::vec(-1i8..=1, 1..200),
        diag in prop::collection::vec(0.05f64..1.0, 20),
    ) {
        let a = signed_symmetric(n, &bits);
        let u = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&diag[..n]));
        let v = build_covariance_from_au(&a, &u).unwrap();
        let ex = extract_au(&v).unwrap();
        prop_assert!((&ex.a - &a).amax() < 1e-9);
        prop_assert!((&ex.u - &u).amax() < 1e-9);
    }

    #[test]
    fn her_is_scale_invariant(c in 1e-3f64..1e3, g in 0.05f64..0.8) {
        let scheme = square_scheme(25, 5, g).unwrap();
        let s = symplectic_matrix::<f64>(&scheme, 1.0).unwrap();
        let v = CovarianceMatrix::from_matrix(&s * s.transpose() * 0.5, cvcs_core::gaussian::QuadratureOrdering::Blocked).unwrap();
        let u = extract_au(&v).unwrap().u;
        let h1 = her(&u, 5, LatticeKind::Square).unwrap().her;
        let h2 = her(&(u * c), 5, LatticeKind::Square).unwrap().her;
        prop_assert!((h1 - h2).abs() <= 1e-12 * h1.abs().max(1.0));
    }

    #[test]
    fn sweep_is_pi_periodic(theta in 0.0f64..PI, g in 0.05f64..0.6) {
        let scheme = honeycomb_scheme(12, 3, g, PiTone::default()).unwrap();
        let s = symplectic_matrix::<f64>(&scheme, 1.0).unwrap();
        let v = CovarianceMatrix::from_matrix(&s * s.transpose() * 0.5, cvcs_core::gaussian::QuadratureOrdering::Blocked).unwrap();
        let adj = expected_signed_adjacency(&honeycomb_scheme(12, 3, 1.0, PiTone::default()).unwrap());
        let sw = nullifier_sweep(&v, &adj, &[theta, theta + PI]).unwrap();
        prop_assert!((sw.values[0] - sw.values[1]).abs() < 1e-10);
    }

    #[test]
    fn symplectic_residual_is_small(g in 0.0f64..1.2, nx in 2usize..6) {
        let scheme = square_scheme(4 * nx + 1, nx, g).unwrap();
        let s = symplectic_matrix::<f64>(&scheme, 1.0).unwrap();
        prop_assert!(symplectic_residual(&s) < 1e-10);
    }

    #[test]
    fn projection_lands_on_physical_set(
        n in 1usize..6,
        noise in prop::collection::vec(-0.4f64..0.4, 144),
    ) {
        let d = 2 * n;
        let mut m = DMatrix::from_fn(d, d, |i, j| noise[(i * d + j) % noise.len()]);
        m = (&m + m.transpose()) * 0.5 + DMatrix::identity(d, d) * 0.5;
        let cov = CovarianceMatrix::from_matrix(m, cvcs_core::gaussian::QuadratureOrdering::Blocked).unwrap();
        let p = project_physical(&cov, ProjectionOptions::default()).unwrap();
        prop_assert!(p.nu_min_after >= 0.5 - 1e-8, "nu_min {}", p.nu_min_after);
        prop_assert!(min_symplectic_eigenvalue(&p.cov) >= 0.5 - 1e-8);
    }
}
