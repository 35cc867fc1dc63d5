//! Gaussian-state engine.
//!
//! Units: `hbar = 1`, `[x, p] = i`, so the vacuum has variance 1/2 in every
//! quadrature and a covariance matrix is physical iff all of its symplectic
//! eigenvalues are at least 1/2.

mod cov;
pub mod io;
mod symplectic;

pub use cov::{CovarianceMatrix, QuadratureOrdering, Units};
pub use symplectic::{purity, symplectic_eigenvalues, symplectic_form, symplectic_residual};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lattice::ModeBasis;
use crate::pumpsynth::{coupling_matrix, PumpScheme};
use crate::scalar::Real;

/// Covariance matrix, mean vector and the comb the modes live on.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianState<T: Real> {
    pub cov: CovarianceMatrix<T>,
    /// Quadrature means, in the same ordering as `cov`.
    pub mean: DVector<T>,
    pub basis: ModeBasis,
}

impl<T: Real> GaussianState<T> {
    pub fn vacuum(basis: ModeBasis) -> Self {
        let n = basis.count;
        Self { cov: CovarianceMatrix::vacuum(n, QuadratureOrdering::Blocked), mean: DVector::zeros(2 * n), basis }
    }

    pub fn from_cov(cov: CovarianceMatrix<T>, basis: ModeBasis) -> Result<Self> {
        if cov.n_modes() != basis.count {
            return Err(Error::Dimension { expected: basis.count, got: cov.n_modes() });
        }
        let n = basis.count;
        Ok(Self { cov, mean: DVector::zeros(2 * n), basis })
    }

    pub fn n_modes(&self) -> usize {
        self.basis.count
    }

    /// Same state with covariance and mean stored in `ordering`.
    pub fn reordered(&self, ordering: QuadratureOrdering) -> Self {
        let perm = cov::permutation(self.n_modes(), self.cov.ordering(), ordering);
        let mean = DVector::from_fn(self.mean.len(), |i, _| self.mean[perm[i]]);
        Self { cov: self.cov.reorder(ordering), mean, basis: self.basis.clone() }
    }

    pub fn symplectic_eigenvalues(&self) -> Result<Vec<T>> {
        symplectic_eigenvalues(&self.cov)
    }

    pub fn purity(&self) -> Result<T> {
        purity(&self.cov)
    }
}

/// Symplectic matrix generated by the pump scheme over `tau`, in blocked
/// ordering.
///
/// The quadratic Hamiltonian `H = 1/2 sum_ij (G_ij a_i^+ a_j^+ + h.c.)`
/// gives `dx/dt = Im(G) x - Re(G) p` and `dp/dt = -Re(G) x - Im(G) p`.
pub fn symplectic_matrix<T: Real>(scheme: &PumpScheme, tau: T) -> Result<DMatrix<T>> {
    let g = coupling_matrix::<T>(scheme);
    let n = scheme.basis.count;
    let mut flow = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = g[(i, j)];
            flow[(i, j)] = z.im * tau;
            flow[(i, n + j)] = -z.re * tau;
            flow[(n + i, j)] = -z.re * tau;
            flow[(n + i, n + j)] = -z.im * tau;
        }
    }
    let s = flow.exp();
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("matrix exponential of the flow is not finite".into()));
    }
    Ok(s)
}

/// Evolved state together with the symplectic matrix that produced it.
#[derive(Clone, Debug)]
pub struct Evolution<T: Real> {
    pub state: GaussianState<T>,
    pub symplectic: DMatrix<T>,
}

/// Propagate `state` under `scheme` for interaction time `tau`:
/// `V' = S V S^T`, `mean' = S mean`.
pub fn evolve<T: Real>(state: &GaussianState<T>, scheme: &PumpScheme, tau: T) -> Result<GaussianState<T>> {
    evolve_with_symplectic(state, scheme, tau).map(|e| e.state)
}

pub fn evolve_with_symplectic<T: Real>(state: &GaussianState<T>, scheme: &PumpScheme, tau: T) -> Result<Evolution<T>> {
    if scheme.basis.count != state.n_modes() {
        return Err(Error::Dimension { expected: state.n_modes(), got: scheme.basis.count });
    }
    let s = symplectic_matrix(scheme, tau)?;
    let blocked = state.reordered(QuadratureOrdering::Blocked);
    let v = &s * blocked.cov.entries() * s.transpose();
    let mean = &s * &blocked.mean;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("evolved covariance is not finite".into()));
    }
    let cov = CovarianceMatrix::from_matrix(v, QuadratureOrdering::Blocked)?.symmetrized();
    let out = GaussianState { cov, mean, basis: state.basis.clone() }.reordered(state.cov.ordering());
    Ok(Evolution { state: out, symplectic: s })
}

/// Pure-loss channel of transmissivity `eta`: `V' = eta V + (1 - eta) I / 2`.
pub fn apply_loss<T: Real>(state: &GaussianState<T>, eta: T) -> Result<GaussianState<T>> {
    if !(eta >= T::zero() && eta <= T::one()) {
        return Err(Error::InvalidSpec(format!("transmissivity must lie in [0, 1], got {eta}")));
    }
    let dim = 2 * state.n_modes();
    let v = state.cov.entries() * eta + DMatrix::identity(dim, dim) * ((T::one() - eta) * T::half());
    Ok(GaussianState {
        cov: CovarianceMatrix::from_matrix(v, state.cov.ordering())?,
        mean: &state.mean * eta.sqrt(),
        basis: state.basis.clone(),
    })
}

/// Rotate every quadrature pair by `theta`: `x' = cos x - sin p`,
/// `p' = sin x + cos p`.
pub fn rotate_global<T: Real>(state: &GaussianState<T>, theta: T) -> GaussianState<T> {
    GaussianState {
        cov: state.cov.rotated_global(theta),
        mean: cov::rotate_mean(&state.mean, state.cov.ordering(), |_| theta),
        basis: state.basis.clone(),
    }
}

/// Rotate mode `i` by `thetas[i]`.
pub fn rotate_per_mode<T: Real>(state: &GaussianState<T>, thetas: &[T]) -> Result<GaussianState<T>> {
    let cov = state.cov.rotated_per_mode(thetas)?;
    Ok(GaussianState {
        cov,
        mean: cov::rotate_mean(&state.mean, state.cov.ordering(), |i| thetas[i]),
        basis: state.basis.clone(),
    })
}

/// Per-mode phase delay `theta_i = slope * (f_i - f0)` with the slope in
/// rad/MHz.
pub fn delay_angles<T: Real>(basis: &ModeBasis, rad_per_mhz: f64) -> Vec<T> {
    basis.detunings().into_iter().map(|d| T::lit(rad_per_mhz * d * 1e-6)).collect()
}

pub fn reorder<T: Real>(cov: &CovarianceMatrix<T>, target: QuadratureOrdering) -> CovarianceMatrix<T> {
    cov.reorder(target)
}

/// Pure-state covariance of a finitely squeezed cluster state with weighted
/// adjacency `a` and squeezing matrix `u`, in blocked ordering:
///
/// ```text
/// V = 1/2 [ U^-1      U^-1 A          ]
///         [ A U^-1    U + A U^-1 A    ]
/// ```
pub fn build_covariance_from_au<T: Real>(a: &DMatrix<T>, u: &DMatrix<T>) -> Result<CovarianceMatrix<T>> {
    let n = u.nrows();
    if u.ncols() != n {
        return Err(Error::Dimension { expected: n, got: u.ncols() });
    }
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::Dimension { expected: n, got: a.nrows() });
    }
    let chol = u.clone().cholesky().ok_or_else(|| Error::Numerical("U is not symmetric positive definite".into()))?;
    let u_inv = chol.inverse();
    let u_inv_a = &u_inv * a;
    let a_u_inv = a * &u_inv;
    let bottom = u + a * &u_inv_a;
    let h = T::half();
    let mut v = DMatrix::zeros(2 * n, 2 * n);
    v.view_mut((0, 0), (n, n)).copy_from(&(u_inv * h));
    v.view_mut((0, n), (n, n)).copy_from(&(u_inv_a * h));
    v.view_mut((n, 0), (n, n)).copy_from(&(a_u_inv * h));
    v.view_mut((n, n), (n, n)).copy_from(&(bottom * h));
    Ok(CovarianceMatrix::from_matrix(v, QuadratureOrdering::Blocked)?.symmetrized())
}

/// Squeezing parameter giving 3 dB of phase-insensitive gain,
/// `cosh^2 r = 2`, i.e. `r = arccosh(sqrt 2)`.
pub fn calibrate_g3db<T: Real>() -> T {
    T::lit(2.0).sqrt().acosh()
}

/// Photon-number gain `cosh^2 r` of a non-degenerate amplifier.
pub fn nondegenerate_gain<T: Real>(r: T) -> T {
    let c = r.cosh();
    c * c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pumpsynth::{single_pump_scheme, square_scheme};

    fn tmsv_state(r: f64) -> GaussianState<f64> {
        let scheme = single_pump_scheme(3, r).unwrap();
        evolve(&GaussianState::vacuum(scheme.basis.clone()), &scheme, 1.0).unwrap()
    }

    #[test]
    fn vacuum_is_half_identity() {
        let v = GaussianState::<f64>::vacuum(ModeBasis::integer(1).unwrap());
        assert_eq!(v.cov.entries(), &(DMatrix::identity(2, 2) * 0.5));
        let v3 = GaussianState::<f64>::vacuum(ModeBasis::integer(3).unwrap());
        for nu in v3.symplectic_eigenvalues().unwrap() {
            assert!((nu - 0.5).abs() < 1e-14);
        }
        assert!((v3.purity().unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn two_mode_squeezer_closed_form() {
        for r in [0.2f64, 0.5, 1.0] {
            let s = tmsv_state(r);
            let v = s.cov.entries();
            let (c, sh) = ((2.0 * r).cosh() / 2.0, (2.0 * r).sinh() / 2.0);
            // rows 0 and 2 are modes -1 and +1; mode 0 stays in vacuum.
            for (i, j) in [(0, 0), (2, 2), (3, 3), (5, 5)] {
                assert!((v[(i, j)] - c).abs() < 1e-12);
            }
            assert!((v[(1, 1)] - 0.5).abs() < 1e-14);
            assert!((v[(0, 5)] + sh).abs() < 1e-12);
            assert!((v[(2, 3)] + sh).abs() < 1e-12);
            assert!(v[(0, 2)].abs() < 1e-12);
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let scheme = square_scheme(25, 5, 0.4).unwrap();
        let vac = GaussianState::<f64>::vacuum(scheme.basis.clone());
        let out = evolve(&vac, &scheme, 0.0).unwrap();
        assert_eq!(out.cov.entries(), vac.cov.entries());
    }

    #[test]
    fn evolution_is_symplectic_and_pure() {
        let scheme = square_scheme(25, 5, 0.3).unwrap();
        let vac = GaussianState::<f64>::vacuum(scheme.basis.clone());
        let e = evolve_with_symplectic(&vac, &scheme, 1.0).unwrap();
        assert!(symplectic_residual(&e.symplectic) < 1e-10);
        for nu in e.state.symplectic_eigenvalues().unwrap() {
            assert!((nu - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn loss_limits() {
        let s = tmsv_state(0.5);
        let same = apply_loss(&s, 1.0).unwrap();
        assert_eq!(same.cov.entries(), s.cov.entries());
        let vac = apply_loss(&s, 0.0).unwrap();
        assert_eq!(vac.cov.entries(), &(DMatrix::identity(6, 6) * 0.5));
        assert!(apply_loss(&s, 1.2).is_err());
        assert!(apply_loss(&s, -0.1).is_err());
        let lossy = apply_loss(&s, 0.7).unwrap();
        let nu = lossy.symplectic_eigenvalues().unwrap();
        assert!(*nu.last().unwrap() >= 0.5 - 1e-10);
    }

    #[test]
    fn rotation_identities() {
        let s = tmsv_state(0.4);
        assert_eq!(rotate_global(&s, 0.0).cov.entries(), s.cov.entries());
        let full = rotate_global(&s, std::f64::consts::TAU);
        assert!((full.cov.entries() - s.cov.entries()).abs().max() < 1e-12);
        let back = rotate_global(&rotate_global(&s, 0.77), -0.77);
        assert!((back.cov.entries() - s.cov.entries()).abs().max() < 1e-12);
        let vac = GaussianState::<f64>::vacuum(ModeBasis::integer(5).unwrap());
        assert!((rotate_global(&vac, 1.1).cov.entries() - vac.cov.entries()).abs().max() < 1e-15);
    }

    #[test]
    fn per_mode_rotation_matches_global() {
        let s = tmsv_state(0.4);
        let zero = rotate_per_mode(&s, &[0.0; 3]).unwrap();
        assert_eq!(zero.cov.entries(), s.cov.entries());
        let uni = rotate_per_mode(&s, &[0.3; 3]).unwrap();
        assert!((uni.cov.entries() - rotate_global(&s, 0.3).cov.entries()).abs().max() < 1e-15);
        assert!(rotate_per_mode(&s, &[0.3; 2]).is_err());
    }

    #[test]
    fn delay_map_uses_rad_per_mhz() {
        let basis = ModeBasis::integer(5).unwrap();
        let th: Vec<f64> = delay_angles(&basis, 1.89);
        assert!((th[4] - 2.0 * 1.89).abs() < 1e-12);
        assert!((th[0] + 2.0 * 1.89).abs() < 1e-12);
        assert_eq!(th[2], 0.0);
    }

    #[test]
    fn au_vacuum_and_purity() {
        let n = 4;
        let v = build_covariance_from_au::<f64>(&DMatrix::zeros(n, n), &DMatrix::identity(n, n)).unwrap();
        assert_eq!(v.entries(), &(DMatrix::identity(2 * n, 2 * n) * 0.5));
        let mut a = DMatrix::zeros(n, n);
        a[(0, 1)] = 1.0;
        a[(1, 0)] = 1.0;
        a[(2, 3)] = -1.0;
        a[(3, 2)] = -1.0;
        let u = DMatrix::from_diagonal(&DVector::from_vec(vec![0.3, 0.6, 0.9, 0.1]));
        let v = build_covariance_from_au(&a, &u).unwrap();
        assert!((purity::<f64>(&v).unwrap() - 1.0).abs() < 1e-10);
        assert!(build_covariance_from_au(&a, &DMatrix::zeros(n, n)).is_err());
    }

    #[test]
    fn g3db_calibration() {
        let r: f64 = calibrate_g3db();
        assert!((nondegenerate_gain(r) - 2.0).abs() < 1e-12);
        assert!((r - 0.881_373_587_019_543).abs() < 1e-12);
        assert_eq!(nondegenerate_gain(0.0f64), 1.0);
        let h = 1e-6;
        for r in [0.05f64, 0.3, 0.9, 2.0] {
            let d = (nondegenerate_gain(r + h) - nondegenerate_gain(r - h)) / (2.0 * h);
            assert!(d > 0.0);
        }
    }

    #[test]
    fn single_precision_path() {
        let scheme = single_pump_scheme(3, 0.5).unwrap();
        let s = evolve(&GaussianState::<f32>::vacuum(scheme.basis.clone()), &scheme, 1.0f32).unwrap();
        let c = (1.0f32).cosh() / 2.0;
        assert!((s.cov.entries()[(0, 0)] - c).abs() < 1e-5);
        for nu in s.symplectic_eigenvalues().unwrap() {
            assert!((nu - 0.5).abs() < 1e-4);
        }
    }
}
