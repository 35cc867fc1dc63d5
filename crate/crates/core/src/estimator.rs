//! Chain inversion: streaming covariance, phase correction, gain and
//! added-noise removal, and projection onto physical covariance matrices.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chain::{volts_scale, ChainConfig, WindowSamples};
use crate::error::{Error, Result};
use crate::gaussian::{
    delay_angles, symplectic_eigenvalues, symplectic_form, CovarianceMatrix, QuadratureOrdering, Units,
};
use crate::lattice::ModeBasis;
use crate::scalar::Real;

/// Running mean and co-moment `sum (x - mean)(x - mean)^T` of windows.
///
/// Blocks are folded in with the pairwise update of Chan, Golub and LeVeque,
/// so one pass is enough and accumulators from disjoint chunks merge exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceAccumulator<T: Real> {
    n: usize,
    mean: DVector<T>,
    comoment: DMatrix<T>,
}

impl<T: Real> CovarianceAccumulator<T> {
    pub fn new(dim: usize) -> Self {
        Self { n: 0, mean: DVector::zeros(dim), comoment: DMatrix::zeros(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn n_windows_seen(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> &DVector<T> {
        &self.mean
    }

    pub fn comoment(&self) -> &DMatrix<T> {
        &self.comoment
    }

    pub fn push(&mut self, x: &[T]) -> Result<()> {
        self.push_block(&DMatrix::from_row_slice(1, x.len(), x))
    }

    /// Fold in a block, one window per row.
    pub fn push_block(&mut self, block: &DMatrix<T>) -> Result<()> {
        if block.ncols() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: block.ncols() });
        }
        if block.nrows() == 0 {
            return Ok(());
        }
        if block.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite sample in stream".into()));
        }
        let nb = block.nrows();
        let mean_b = block.row_mean().transpose();
        let mut centered_t = block.transpose();
        for mut col in centered_t.column_iter_mut() {
            col -= &mean_b;
        }
        // `X^T X` as a plain product goes through the blocked gemm kernel;
        // `tr_mul` does not.
        let comoment_b = &centered_t * centered_t.transpose();
        self.merge(&Self { n: nb, mean: mean_b, comoment: comoment_b })
    }

    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if other.dim() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: other.dim() });
        }
        if other.n == 0 {
            return Ok(());
        }
        if self.n == 0 {
            *self = other.clone();
            return Ok(());
        }
        let (na, nb) = (T::lit(self.n as f64), T::lit(other.n as f64));
        let n = na + nb;
        let delta = &other.mean - &self.mean;
        self.comoment += &other.comoment;
        self.comoment.ger(na * nb / n, &delta, &delta, T::one());
        self.mean.axpy(nb / n, &delta, T::one());
        self.n += other.n;
        Ok(())
    }

    /// Inverse of [`merge`](Self::merge): the accumulator of this stream with
    /// `part` taken out.
    pub fn without(&self, part: &Self) -> Result<Self> {
        if part.dim() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: part.dim() });
        }
        if part.n > self.n {
            return Err(Error::InvalidSpec("cannot remove more windows than were seen".into()));
        }
        if part.n == self.n {
            return Ok(Self::new(self.dim()));
        }
        let rest = self.n - part.n;
        let (n, nb, na) = (T::lit(self.n as f64), T::lit(part.n as f64), T::lit(rest as f64));
        let mean_a = (&self.mean * n - &part.mean * nb) / na;
        let delta = &part.mean - &mean_a;
        let mut comoment = &self.comoment - &part.comoment;
        comoment.ger(-(na * nb / n), &delta, &delta, T::one());
        Ok(Self { n: rest, mean: mean_a, comoment })
    }

    /// Unbiased sample covariance, `comoment / (n - 1)`.
    pub fn covariance(&self) -> Result<DMatrix<T>> {
        if self.n < 2 {
            return Err(Error::InvalidSpec(format!("need at least 2 windows, have {}", self.n)));
        }
        let c = &self.comoment / T::lit((self.n - 1) as f64);
        Ok((&c + c.transpose()) * T::half())
    }
}

/// `V_ij / (Z_c hbar Delta sqrt(omega_i omega_j))` of a volts covariance.
pub fn volts_to_photon<T: Real>(
    volts: &DMatrix<T>,
    basis: &ModeBasis,
    z_c: f64,
    delta_hz: f64,
) -> Result<CovarianceMatrix<T>> {
    if volts.nrows() != 2 * basis.count {
        return Err(Error::Dimension { expected: 2 * basis.count, got: volts.nrows() });
    }
    let s = volts_scale(basis, z_c, delta_hz, QuadratureOrdering::Interleaved);
    let out = DMatrix::from_fn(volts.nrows(), volts.ncols(), |i, j| volts[(i, j)] / T::lit(s[i] * s[j]));
    CovarianceMatrix::from_matrix(out, QuadratureOrdering::Interleaved)
}

/// Raw photon-unit covariance of the windows (gain, noise and delay still in).
pub fn estimate_covariance<T: Real>(
    samples: &WindowSamples<T>,
    z_c: f64,
    delta_hz: f64,
) -> Result<CovarianceMatrix<T>> {
    if samples.n_windows() < 2 {
        return Err(Error::InvalidSpec(format!("need at least 2 windows, have {}", samples.n_windows())));
    }
    let mut acc = CovarianceAccumulator::new(samples.data.ncols());
    acc.push_block(&samples.data)?;
    volts_to_photon(&acc.covariance()?, &samples.basis, z_c, delta_hz)
}

/// Same as [`estimate_covariance`] for an accumulator already filled from a
/// stream.
pub fn covariance_from_accumulator<T: Real>(
    acc: &CovarianceAccumulator<T>,
    basis: &ModeBasis,
    z_c: f64,
    delta_hz: f64,
) -> Result<CovarianceMatrix<T>> {
    volts_to_photon(&acc.covariance()?, basis, z_c, delta_hz)
}

/// Undo the chain delay: rotate mode `i` by `-tau_d (f_i - f_0)`.
pub fn apply_phase_correction<T: Real>(
    cov: &CovarianceMatrix<T>,
    tau_d_rad_per_mhz: f64,
    basis: &ModeBasis,
) -> Result<CovarianceMatrix<T>> {
    let thetas: Vec<T> = delay_angles(basis, -tau_d_rad_per_mhz);
    cov.rotated_per_mode(&thetas)
}

/// Calibrated chain parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationRecord {
    pub gain_db: Vec<f64>,
    /// Photons per quadrature variance.
    pub added_noise_photons: Vec<f64>,
    pub tau_d_rad_per_mhz: f64,
}

impl CalibrationRecord {
    /// The record that exactly describes `cfg`.
    pub fn from_chain(cfg: &ChainConfig, basis: &ModeBasis) -> Result<Self> {
        cfg.validate(basis)?;
        Ok(Self {
            gain_db: vec![cfg.gain_db; basis.count],
            added_noise_photons: cfg.added_noise_photons.per_mode(basis.count)?,
            tau_d_rad_per_mhz: cfg.tau_d_rad_per_mhz,
        })
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.gain_db.len() != n {
            return Err(Error::Dimension { expected: n, got: self.gain_db.len() });
        }
        if self.added_noise_photons.len() != n {
            return Err(Error::Dimension { expected: n, got: self.added_noise_photons.len() });
        }
        for g in &self.gain_db {
            let lin = 10f64.powf(g / 10.0);
            if !(lin.is_finite() && lin > 0.0) {
                return Err(Error::InvalidSpec(format!("gain {g} dB is not usable")));
            }
        }
        if self.added_noise_photons.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidSpec("added noise must be finite and >= 0".into()));
        }
        if !self.tau_d_rad_per_mhz.is_finite() {
            return Err(Error::InvalidSpec("phase-delay slope is not finite".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(format!("calibration record: {e}")))
    }
}

/// `V_ij / sqrt(g_i g_j)` with linear per-mode power gains.
pub fn divide_gain<T: Real>(cov: &CovarianceMatrix<T>, calib: &CalibrationRecord) -> Result<CovarianceMatrix<T>> {
    let n = cov.n_modes();
    calib.validate(n)?;
    let o = cov.ordering();
    let mut amp = vec![0.0; 2 * n];
    for (i, g) in calib.gain_db.iter().enumerate() {
        let a = 10f64.powf(g / 20.0);
        amp[o.x_index(n, i)] = a;
        amp[o.p_index(n, i)] = a;
    }
    let v = cov.entries();
    let out = DMatrix::from_fn(2 * n, 2 * n, |i, j| v[(i, j)] / T::lit(amp[i] * amp[j]));
    CovarianceMatrix::with_units(out, o, cov.units())
}

/// Result of removing the calibrated added noise.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSubtraction<T: Real> {
    pub cov: CovarianceMatrix<T>,
    /// Quadrature indices whose variance went negative.
    pub over_subtracted: Vec<usize>,
}

/// Subtract `n_add_i` from both quadrature variances of mode `i`. Only the
/// diagonal is touched. Expects gain already divided out.
pub fn subtract_added_noise<T: Real>(
    cov: &CovarianceMatrix<T>,
    calib: &CalibrationRecord,
) -> Result<NoiseSubtraction<T>> {
    let n = cov.n_modes();
    calib.validate(n)?;
    let o = cov.ordering();
    let mut v = cov.entries().clone();
    let mut over = Vec::new();
    for (i, n_add) in calib.added_noise_photons.iter().enumerate() {
        for k in [o.x_index(n, i), o.p_index(n, i)] {
            v[(k, k)] -= T::lit(*n_add);
            if v[(k, k)] < T::zero() {
                over.push(k);
            }
        }
    }
    over.sort_unstable();
    if !over.is_empty() {
        log::warn!("added-noise subtraction left {} negative variances", over.len());
    }
    Ok(NoiseSubtraction { cov: CovarianceMatrix::with_units(v, o, Units::Photon)?, over_subtracted: over })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectionOptions {
    pub max_iterations: usize,
    /// Stop when the Frobenius norm of an update drops below this.
    pub tolerance: f64,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self { max_iterations: 500, tolerance: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Projection<T: Real> {
    pub cov: CovarianceMatrix<T>,
    pub iterations: usize,
    pub nu_min_before: f64,
    pub nu_min_after: f64,
    /// `false` when the input was already physical and returned as is.
    pub changed: bool,
}

/// Smallest symplectic eigenvalue, or `-inf` when `V` is not positive definite.
pub fn min_symplectic_eigenvalue<T: Real>(cov: &CovarianceMatrix<T>) -> f64 {
    match symplectic_eigenvalues(cov) {
        Ok(nus) => nus.last().map_or(f64::INFINITY, |v| v.as_f64()),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Closest symmetric `V*` (Frobenius) with `V* + i Omega / 2 >= 0`.
///
/// Dykstra's alternating projections on the Hermitian `W = V + i Omega / 2`:
/// clip negative eigenvalues of `W`, then restore `Im W = Omega / 2` and a
/// symmetric real part. The residual infeasibility left by the stopping rule
/// is removed by shifting the diagonal by `-lambda_min(W)`.
/// A physical input is returned unchanged.
pub fn project_physical<T: Real>(cov: &CovarianceMatrix<T>, opts: ProjectionOptions) -> Result<Projection<T>> {
    let sym = cov.clone().symmetrized();
    let nu_before = min_symplectic_eigenvalue(&sym);
    if nu_before >= 0.5 - 1e-10 {
        return Ok(Projection {
            cov: cov.clone(),
            iterations: 0,
            nu_min_before: nu_before,
            nu_min_after: nu_before,
            changed: false,
        });
    }
    let n = sym.n_modes();
    let dim = 2 * n;
    let half_omega: DMatrix<T> = symplectic_form::<T>(n, sym.ordering()) * T::half();
    let tol = T::lit(opts.tolerance);

    let mut x = sym.entries().clone();
    let mut p_corr = DMatrix::<Complex<T>>::zeros(dim, dim);
    let mut q_corr = DMatrix::<T>::zeros(dim, dim);
    let mut iterations = 0;
    let mut converged = false;
    let mut last_update = T::zero();
    while iterations < opts.max_iterations {
        iterations += 1;
        // Cone step on W = x + i Omega/2 plus its Dykstra correction.
        let w = DMatrix::from_fn(dim, dim, |i, j| Complex::new(x[(i, j)], half_omega[(i, j)])) + &p_corr;
        let y = psd_part(&w)?;
        p_corr = &w - &y;
        // Affine step: keep the symmetric real part.
        let real = DMatrix::from_fn(dim, dim, |i, j| y[(i, j)].re) + &q_corr;
        let next = (&real + real.transpose()) * T::half();
        q_corr = &real - &next;
        last_update = (&next - &x).norm();
        x = next;
        if last_update < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { iterations, residual: last_update.as_f64() });
    }
    // W + delta I >= 0 with delta = -lambda_min(W) gives nu_min >= 1/2.
    let w = DMatrix::from_fn(dim, dim, |i, j| Complex::new(x[(i, j)], half_omega[(i, j)]));
    let lambda_min = hermitian_min_eigenvalue(&w)?;
    if lambda_min < T::zero() {
        for i in 0..dim {
            x[(i, i)] -= lambda_min;
        }
    }
    let out = CovarianceMatrix::with_units(x, sym.ordering(), sym.units())?;
    let nu_after = min_symplectic_eigenvalue(&out);
    Ok(Projection { cov: out, iterations, nu_min_before: nu_before, nu_min_after: nu_after, changed: true })
}

fn hermitian_min_eigenvalue<T: Real>(w: &DMatrix<Complex<T>>) -> Result<T> {
    let eig = w
        .clone()
        .try_symmetric_eigen(T::lit(T::EPSILON), 10_000)
        .ok_or_else(|| Error::Numerical("Hermitian eigensolver did not converge".into()))?;
    Ok(eig.eigenvalues.iter().copied().fold(T::max_value().unwrap_or_else(T::one), |a, b| a.min(b)))
}

/// Projection of a Hermitian matrix onto the positive semidefinite cone.
fn psd_part<T: Real>(w: &DMatrix<Complex<T>>) -> Result<DMatrix<Complex<T>>> {
    let eig = w
        .clone()
        .try_symmetric_eigen(T::lit(T::EPSILON), 10_000)
        .ok_or_else(|| Error::Numerical("Hermitian eigensolver did not converge".into()))?;
    let clipped = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|l| Complex::new(l.max(T::zero()), T::zero())),
    );
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&clipped) * q.adjoint())
}

/// Element-wise standard error of a sample covariance of `m` Gaussian windows
/// with true covariance `v`: `sqrt((V_ii V_jj + V_ij^2) / m)`.
pub fn sampling_sigma<T: Real>(v: &DMatrix<T>, m: usize) -> DMatrix<T> {
    let mt = T::lit(m as f64);
    DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| ((v[(i, i)] * v[(j, j)] + v[(i, j)] * v[(i, j)]) / mt).sqrt())
}

/// Every correction in order: photon normalisation, phase correction, gain
/// division, noise subtraction. Returns the stages applied by name.
pub fn invert_chain<T: Real>(
    raw_photon: &CovarianceMatrix<T>,
    basis: &ModeBasis,
    calib: &CalibrationRecord,
) -> Result<(NoiseSubtraction<T>, Vec<String>)> {
    let corrected = apply_phase_correction(raw_photon, calib.tau_d_rad_per_mhz, basis)?;
    let divided = divide_gain(&corrected, calib)?;
    let sub = subtract_added_noise(&divided, calib)?;
    let stages = ["estimate", "phase_correction", "gain_division", "noise_subtraction"].map(String::from).to_vec();
    Ok((sub, stages))
}

/// Delete-one-block jackknife of a statistic of the stream.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jackknife {
    pub value: f64,
    pub sigma: f64,
    pub blocks: usize,
}

/// Apply `stat` to the full stream and to each leave-one-block-out stream.
pub fn jackknife<T: Real>(
    blocks: &[CovarianceAccumulator<T>],
    mut stat: impl FnMut(&CovarianceAccumulator<T>) -> Result<f64>,
) -> Result<Jackknife> {
    let k = blocks.len();
    if k < 2 {
        return Err(Error::InvalidSpec("jackknife needs at least 2 blocks".into()));
    }
    let mut total = CovarianceAccumulator::new(blocks[0].dim());
    for b in blocks {
        total.merge(b)?;
    }
    let value = stat(&total)?;
    let mut loo = Vec::with_capacity(k);
    for b in blocks {
        loo.push(stat(&total.without(b)?)?);
    }
    let mean = loo.iter().sum::<f64>() / k as f64;
    let var = loo.iter().map(|v| (v - mean).powi(2)).sum::<f64>() * (k as f64 - 1.0) / k as f64;
    Ok(Jackknife { value, sigma: var.sqrt(), blocks: k })
}
