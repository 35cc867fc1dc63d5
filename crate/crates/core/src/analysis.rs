//! Cluster-state diagnostics on a covariance matrix.
//!
//! Nullifiers are `N_i = p_i - sum_j A_ij x_j` with a normalized `A`; their
//! vacuum reference is `(1 + deg_i) / 2`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{
    covariance_from_accumulator, invert_chain, CalibrationRecord, CovarianceAccumulator, Jackknife,
};
use crate::gaussian::{CovarianceMatrix, QuadratureOrdering};
use crate::lattice::{AdjacencyMatrix, LatticeKind, ModeBasis};
use crate::scalar::Real;

/// Condition number of `V_xx` above which a ridge is added.
pub const CONDITION_LIMIT: f64 = 1e10;

/// Default relative threshold of [`normalize_adjacency`].
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// `(A, U)` read off a covariance matrix together with diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct AuExtraction<T: Real> {
    /// Symmetrized weighted adjacency.
    pub a: DMatrix<T>,
    pub u: DMatrix<T>,
    pub condition: f64,
    /// `max |A - A^T|` before symmetrization.
    pub asymmetry: f64,
    /// Ridge added to `V_xx`, if any.
    pub ridge: Option<f64>,
}

/// `U = (V_xx)^-1 / 2`, `A = 2 U V_xp`.
pub fn extract_au<T: Real>(cov: &CovarianceMatrix<T>) -> Result<AuExtraction<T>> {
    let n = cov.n_modes();
    let (mut vxx, vxp, _) = cov.blocks();
    let eig = vxx
        .clone()
        .try_symmetric_eigen(T::lit(T::EPSILON), 10_000)
        .ok_or_else(|| Error::Numerical("eigensolver failed on V_xx".into()))?;
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), l| (lo.min(l.as_f64()), hi.max(l.as_f64().abs())));
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    let mut ridge = None;
    if condition > CONDITION_LIMIT {
        let r = 1e-12 * vxx.trace().as_f64() / n as f64;
        log::warn!("V_xx condition number {condition:.3e}; adding ridge {r:.3e}");
        for i in 0..n {
            vxx[(i, i)] += T::lit(r);
        }
        ridge = Some(r);
    }
    let inv = vxx.cholesky().ok_or(Error::IllConditioned { condition })?.inverse();
    let mut u = inv * T::half();
    u = (&u + u.transpose()) * T::half();
    let a_raw = (&u * &vxp) * T::lit(2.0);
    let asymmetry = (&a_raw - a_raw.transpose()).amax().as_f64();
    let a = (&a_raw + a_raw.transpose()) * T::half();
    Ok(AuExtraction { a, u, condition, asymmetry, ridge })
}

/// Map `|A_ij| >= tau_rel max|A|` to `sign(A_ij)`, everything else to 0.
pub fn normalize_adjacency<T: Real>(a: &DMatrix<T>, labels: &[i32], tau_rel: f64) -> Result<AdjacencyMatrix> {
    if !(tau_rel > 0.0 && tau_rel < 1.0) {
        return Err(Error::InvalidSpec(format!("threshold must lie in (0, 1), got {tau_rel}")));
    }
    let n = a.nrows();
    if a.ncols() != n || labels.len() != n {
        return Err(Error::Dimension { expected: n, got: labels.len() });
    }
    let sym = (a + a.transpose()) * T::half();
    let max = sym.amax().as_f64();
    let mut out = DMatrix::<i8>::zeros(n, n);
    if max > 0.0 {
        for i in 0..n {
            for j in 0..n {
                let v = sym[(i, j)].as_f64();
                if i != j && v.abs() >= tau_rel * max {
                    out[(i, j)] = if v > 0.0 { 1 } else { -1 };
                }
            }
        }
    }
    AdjacencyMatrix::from_entries(labels.to_vec(), out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullifierReport {
    pub variances: Vec<f64>,
    pub vacuum_references: Vec<f64>,
    pub normalized: Vec<f64>,
    /// Mean of `normalized` over modes with at least one neighbour.
    pub mean_normalized: f64,
    pub db: f64,
    /// Rotation the report was evaluated at.
    pub theta: f64,
    /// Jackknife-over-window-blocks estimate of how many standard deviations
    /// the mean lies below vacuum, when samples were available.
    pub jackknife_sigmas_below_vacuum: Option<f64>,
}

struct Nullifiers {
    variances: Vec<f64>,
    references: Vec<f64>,
    mean: f64,
}

fn nullifier_core<T: Real>(cov: &CovarianceMatrix<T>, adj: &AdjacencyMatrix) -> Result<Nullifiers> {
    let n = cov.n_modes();
    if adj.n() != n {
        return Err(Error::Dimension { expected: n, got: adj.n() });
    }
    let o = cov.ordering();
    let v = cov.entries();
    let x = |i| o.x_index(n, i);
    let p = |i| o.p_index(n, i);
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| (0..n).filter(|&j| adj.get(i, j) != 0).map(|j| (j, f64::from(adj.get(i, j)))).collect())
        .collect();
    let mut variances = Vec::with_capacity(n);
    let mut references = Vec::with_capacity(n);
    let (mut sum, mut count) = (0.0, 0usize);
    for (i, row) in rows.iter().enumerate() {
        let mut var = v[(p(i), p(i))].as_f64();
        for &(j, a) in row {
            var -= 2.0 * a * v[(p(i), x(j))].as_f64();
            for &(k, b) in row {
                var += a * b * v[(x(j), x(k))].as_f64();
            }
        }
        let reference = 0.5 * (1.0 + row.len() as f64);
        if !row.is_empty() {
            sum += var / reference;
            count += 1;
        }
        variances.push(var);
        references.push(reference);
    }
    let mean = if count > 0 { sum / count as f64 } else { 1.0 };
    Ok(Nullifiers { variances, references, mean })
}

/// Nullifier variances of `cov` for the graph `adj`.
pub fn nullifier_variances<T: Real>(cov: &CovarianceMatrix<T>, adj: &AdjacencyMatrix) -> Result<NullifierReport> {
    let core = nullifier_core(cov, adj)?;
    let normalized = core.variances.iter().zip(&core.references).map(|(v, r)| v / r).collect();
    let db = if core.mean > 0.0 { 10.0 * core.mean.log10() } else { f64::NEG_INFINITY };
    Ok(NullifierReport {
        variances: core.variances,
        vacuum_references: core.references,
        normalized,
        mean_normalized: core.mean,
        db,
        theta: 0.0,
        jackknife_sigmas_below_vacuum: None,
    })
}

/// `theta_k = k pi / points`, `k = 0..points`.
pub fn theta_grid(points: usize) -> Vec<f64> {
    (0..points).map(|k| k as f64 * std::f64::consts::PI / points as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub thetas: Vec<f64>,
    pub values: Vec<f64>,
    pub theta_star: f64,
    pub min_value: f64,
    pub min_db: f64,
}

/// Mean normalized nullifier variance after a global rotation by each angle.
pub fn nullifier_sweep<T: Real>(cov: &CovarianceMatrix<T>, adj: &AdjacencyMatrix, thetas: &[f64]) -> Result<Sweep> {
    if thetas.is_empty() {
        return Err(Error::InvalidSpec("empty rotation grid".into()));
    }
    let values = thetas
        .iter()
        .map(|&t| nullifier_core(&cov.rotated_global(T::lit(t)), adj).map(|c| c.mean))
        .collect::<Result<Vec<_>>>()?;
    let (k, min_value) =
        values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (k, v)| if v < best.1 { (k, v) } else { best });
    Ok(Sweep { thetas: thetas.to_vec(), theta_star: thetas[k], min_value, min_db: squeezing_db(min_value)?, values })
}

/// `10 log10(value)`.
pub fn squeezing_db(value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(10.0 * value.log10())
    } else {
        Err(Error::Numerical(format!("squeezing needs a positive variance ratio, got {value}")))
    }
}

/// Offsets probed by the hidden-entanglement ratio.
pub fn her_offsets(kind: LatticeKind, n_x: usize) -> Result<Vec<i64>> {
    let nx = n_x as i64;
    let pos = match kind {
        LatticeKind::Square => vec![2, 2 * nx],
        LatticeKind::Honeycomb => vec![2, nx - 2, nx],
        LatticeKind::SinglePump => {
            return Err(Error::InvalidSpec(
                "hidden-entanglement offsets are defined for square and honeycomb lattices".into(),
            ))
        }
    };
    let mut ks: Vec<i64> = pos.iter().flat_map(|&k| [-k, k]).filter(|&k| k != 0).collect();
    ks.sort_unstable();
    ks.dedup();
    Ok(ks)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HerReport {
    pub her: f64,
    pub offsets: Vec<i64>,
    /// `(k, (N / N_k) sum_i |U_{i,i+k}| / Tr U)` per offset.
    pub contributions: Vec<(i64, f64)>,
    pub kind: LatticeKind,
}

/// `HER = sum_{i, k in K} (N / (N - |k|)) |U_{i,i+k}| / Tr U`.
pub fn her<T: Real>(u: &DMatrix<T>, n_x: usize, kind: LatticeKind) -> Result<HerReport> {
    let n = u.nrows();
    if u.ncols() != n {
        return Err(Error::Dimension { expected: n, got: u.ncols() });
    }
    let offsets = her_offsets(kind, n_x)?;
    if let Some(k) = offsets.iter().find(|k| k.unsigned_abs() as usize >= n) {
        return Err(Error::OutOfRange { what: "HER offset", index: *k });
    }
    let trace = u.trace().as_f64();
    if !(trace > 0.0) {
        return Err(Error::Numerical(format!("Tr U must be positive, got {trace}")));
    }
    let mut contributions = Vec::with_capacity(offsets.len());
    for &k in &offsets {
        let nk = n - k.unsigned_abs() as usize;
        let s: f64 = (0..n as i64)
            .filter_map(|i| {
                let j = i + k;
                (0..n as i64).contains(&j).then(|| u[(i as usize, j as usize)].as_f64().abs())
            })
            .sum();
        contributions.push((k, n as f64 / nk as f64 * s / trace));
    }
    let total = contributions.iter().map(|c| c.1).sum();
    Ok(HerReport { her: total, offsets, contributions, kind })
}

/// Mode pairs `i < j` at a hidden-entanglement offset that are not edges of
/// `target`.
pub fn hidden_positions(target: &AdjacencyMatrix, kind: LatticeKind, n_x: usize) -> Result<Vec<(usize, usize)>> {
    let n = target.n();
    let mut out = Vec::new();
    for k in her_offsets(kind, n_x)?.into_iter().filter(|&k| k > 0) {
        let k = k as usize;
        for i in 0..n.saturating_sub(k) {
            if target.get(i, i + k) == 0 {
                out.push((i, i + k));
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Mean `|V|` over the `x x`, `x p` and `p x` entries of a mode pair. The
/// `p p` entry is left out: it holds the two-step terms of `A U^-1 A` even for
/// an ideal state.
fn pair_magnitude<T: Real>(cov: &CovarianceMatrix<T>, i: usize, j: usize) -> f64 {
    let (n, o, v) = (cov.n_modes(), cov.ordering(), cov.entries());
    let (xi, pi, xj, pj) = (o.x_index(n, i), o.p_index(n, i), o.x_index(n, j), o.p_index(n, j));
    (v[(xi, xj)].as_f64().abs() + v[(xi, pj)].as_f64().abs() + v[(pi, xj)].as_f64().abs()) / 3.0
}

/// `c_hid / c_can`: mean pair correlation over hidden positions divided by the
/// same over target edges.
pub fn canonical_hidden_ratio<T: Real>(
    cov: &CovarianceMatrix<T>,
    target: &AdjacencyMatrix,
    hidden: &[(usize, usize)],
) -> Result<f64> {
    let n = cov.n_modes();
    if target.n() != n {
        return Err(Error::Dimension { expected: n, got: target.n() });
    }
    let canonical: Vec<(usize, usize)> = target.edges().into_iter().map(|(i, j, _)| (i, j)).collect();
    if canonical.is_empty() || hidden.is_empty() {
        return Err(Error::InvalidSpec("canonical and hidden position sets must be non-empty".into()));
    }
    for &(i, j) in hidden {
        if i >= n || j >= n {
            return Err(Error::OutOfRange { what: "hidden position", index: i.max(j) as i64 });
        }
        if target.get(i, j) != 0 {
            return Err(Error::InvalidSpec(format!("position ({i}, {j}) is both canonical and hidden")));
        }
    }
    let mean =
        |ps: &[(usize, usize)]| ps.iter().map(|&(i, j)| pair_magnitude(cov, i, j)).sum::<f64>() / ps.len() as f64;
    let c_can = mean(&canonical);
    if c_can == 0.0 {
        return Err(Error::Numerical("canonical correlations vanish".into()));
    }
    Ok(mean(hidden) / c_can)
}

/// Full diagnostic of one covariance matrix against a target lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct Analysis<T: Real> {
    pub sweep: Sweep,
    /// Nullifiers at the optimal angle.
    pub nullifiers: NullifierReport,
    /// `(A, U)` extracted at the optimal angle.
    pub extraction: AuExtraction<T>,
    pub recovered: AdjacencyMatrix,
    pub her: Option<HerReport>,
}

/// Sweep, then extract `(A, U)`, nullifiers and HER at `theta*`.
pub fn analyze<T: Real>(
    cov: &CovarianceMatrix<T>,
    target: &AdjacencyMatrix,
    kind: LatticeKind,
    n_x: usize,
    thetas: &[f64],
) -> Result<Analysis<T>> {
    let cov = cov.reorder(QuadratureOrdering::Blocked);
    let sweep = nullifier_sweep(&cov, target, thetas)?;
    let rotated = cov.rotated_global(T::lit(sweep.theta_star));
    let mut nullifiers = nullifier_variances(&rotated, target)?;
    nullifiers.theta = sweep.theta_star;
    let extraction = extract_au(&rotated)?;
    let recovered = normalize_adjacency(&extraction.a, target.labels(), DEFAULT_THRESHOLD)?;
    let her = match kind {
        LatticeKind::SinglePump => None,
        _ => Some(her(&extraction.u, n_x, kind)?),
    };
    Ok(Analysis { sweep, nullifiers, extraction, recovered, her })
}

/// Jackknife of the mean normalized nullifier at `theta` over window blocks,
/// each block inverted through the full chain correction.
pub fn nullifier_jackknife(
    blocks: &[CovarianceAccumulator<f64>],
    basis: &ModeBasis,
    z_c: f64,
    delta_hz: f64,
    calib: &CalibrationRecord,
    target: &AdjacencyMatrix,
    theta: f64,
) -> Result<Jackknife> {
    crate::estimator::jackknife(blocks, |acc| {
        let raw = covariance_from_accumulator(acc, basis, z_c, delta_hz)?;
        let (sub, _) = invert_chain(&raw, basis, calib)?;
        Ok(nullifier_core(&sub.cov.rotated_global(theta), target)?.mean)
    })
}

/// `(1 - mean) / sigma`.
pub fn sigmas_below_vacuum(jk: &Jackknife) -> Option<f64> {
    (jk.sigma > 0.0).then(|| (1.0 - jk.value) / jk.sigma)
}
