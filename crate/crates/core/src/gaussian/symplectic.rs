use nalgebra::DMatrix;

use super::cov::{CovarianceMatrix, QuadratureOrdering};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Symplectic form `Omega` with `Omega[x_i, p_i] = 1`, `Omega[p_i, x_i] = -1`.
pub fn symplectic_form<T: Real>(n: usize, ordering: QuadratureOrdering) -> DMatrix<T> {
    let mut omega = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        let (x, p) = (ordering.x_index(n, i), ordering.p_index(n, i));
        omega[(x, p)] = T::one();
        omega[(p, x)] = -T::one();
    }
    omega
}

/// Frobenius norm of `S Omega S^T - Omega` for a blocked-ordering `S`.
pub fn symplectic_residual<T: Real>(s: &DMatrix<T>) -> T {
    let n = s.nrows() / 2;
    let omega = symplectic_form::<T>(n, QuadratureOrdering::Blocked);
    (s * &omega * s.transpose() - omega).norm()
}

/// Symplectic eigenvalues in descending order.
///
/// With `V = L L^T`, the antisymmetric `M = L^T Omega L` is similar to
/// `Omega V`, and `M^T M` has every `nu_j^2` twice; the doubled spectrum is
/// sorted and every other value kept.
pub fn symplectic_eigenvalues<T: Real>(cov: &CovarianceMatrix<T>) -> Result<Vec<T>> {
    let n = cov.n_modes();
    let chol = cov
        .entries()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("covariance is not positive definite".into()))?;
    let l = chol.l();
    let omega = symplectic_form::<T>(n, cov.ordering());
    let m = l.transpose() * omega * &l;
    let mtm = m.transpose() * &m;
    let eig = mtm
        .try_symmetric_eigen(T::lit(T::EPSILON), 10_000)
        .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))?;
    let mut squares: Vec<T> = eig.eigenvalues.iter().copied().collect();
    squares.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    Ok(squares
        .chunks(2)
        .map(|pair| {
            let mean = (pair[0] + pair[1]) * T::half();
            mean.max(T::zero()).sqrt()
        })
        .collect())
}

/// `prod_j 1 / (2 nu_j)`.
pub fn purity<T: Real>(cov: &CovarianceMatrix<T>) -> Result<T> {
    let nus = symplectic_eigenvalues(cov)?;
    Ok(nus.into_iter().fold(T::one(), |acc, nu| acc / (nu + nu)))
}
