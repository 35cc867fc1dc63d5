use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Layout of the quadrature vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureOrdering {
    /// `(x_1, p_1, ..., x_N, p_N)`
    #[serde(rename = "mode_interleaved")]
    Interleaved,
    /// `(x_1, ..., x_N, p_1, ..., p_N)`
    #[serde(rename = "quadrature_blocked")]
    Blocked,
}

impl QuadratureOrdering {
    pub fn as_str(self) -> &'static str {
        match self {
            QuadratureOrdering::Interleaved => "mode_interleaved",
            QuadratureOrdering::Blocked => "quadrature_blocked",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mode_interleaved" => Ok(QuadratureOrdering::Interleaved),
            "quadrature_blocked" => Ok(QuadratureOrdering::Blocked),
            other => Err(Error::Parse(format!("unknown ordering {other:?}"))),
        }
    }

    #[inline]
    pub fn x_index(self, _n: usize, mode: usize) -> usize {
        match self {
            QuadratureOrdering::Interleaved => 2 * mode,
            QuadratureOrdering::Blocked => mode,
        }
    }

    #[inline]
    pub fn p_index(self, n: usize, mode: usize) -> usize {
        match self {
            QuadratureOrdering::Interleaved => 2 * mode + 1,
            QuadratureOrdering::Blocked => n + mode,
        }
    }

    /// Mode owning quadrature index `idx`.
    #[inline]
    pub fn mode_of(self, n: usize, idx: usize) -> usize {
        match self {
            QuadratureOrdering::Interleaved => idx / 2,
            QuadratureOrdering::Blocked => idx % n,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    /// Photon-number units: vacuum variance 1/2.
    Photon,
    /// Raw detector units.
    VoltSquared,
}

impl Units {
    pub fn as_str(self) -> &'static str {
        match self {
            Units::Photon => "photon",
            Units::VoltSquared => "volt_squared",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "photon" => Ok(Units::Photon),
            "volt_squared" => Ok(Units::VoltSquared),
            other => Err(Error::Parse(format!("unknown units {other:?}"))),
        }
    }
}

/// Real symmetric `2N x 2N` covariance matrix tagged with its ordering and units.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix<T: Real> {
    entries: DMatrix<T>,
    ordering: QuadratureOrdering,
    units: Units,
}

/// `perm[i]` is the source index feeding target index `i`.
pub(crate) fn permutation(n: usize, from: QuadratureOrdering, to: QuadratureOrdering) -> Vec<usize> {
    let mut perm = vec![0; 2 * n];
    for mode in 0..n {
        perm[to.x_index(n, mode)] = from.x_index(n, mode);
        perm[to.p_index(n, mode)] = from.p_index(n, mode);
    }
    perm
}

pub(crate) fn rotate_mean<T: Real>(
    mean: &DVector<T>,
    ordering: QuadratureOrdering,
    angle: impl Fn(usize) -> T,
) -> DVector<T> {
    let n = mean.len() / 2;
    let mut out = mean.clone();
    for i in 0..n {
        let (xi, pi) = (ordering.x_index(n, i), ordering.p_index(n, i));
        let (s, c) = angle(i).sin_cos();
        out[xi] = c * mean[xi] - s * mean[pi];
        out[pi] = s * mean[xi] + c * mean[pi];
    }
    out
}

impl<T: Real> CovarianceMatrix<T> {
    /// Wrap a photon-unit matrix. Fails unless square with even dimension.
    pub fn from_matrix(entries: DMatrix<T>, ordering: QuadratureOrdering) -> Result<Self> {
        Self::with_units(entries, ordering, Units::Photon)
    }

    pub fn with_units(entries: DMatrix<T>, ordering: QuadratureOrdering, units: Units) -> Result<Self> {
        let d = entries.nrows();
        if entries.ncols() != d {
            return Err(Error::Dimension { expected: d, got: entries.ncols() });
        }
        if !d.is_multiple_of(2) || d == 0 {
            return Err(Error::InvalidSpec(format!("covariance dimension {d} is not a positive even number")));
        }
        Ok(Self { entries, ordering, units })
    }

    pub fn vacuum(n: usize, ordering: QuadratureOrdering) -> Self {
        Self { entries: DMatrix::identity(2 * n, 2 * n) * T::half(), ordering, units: Units::Photon }
    }

    pub fn n_modes(&self) -> usize {
        self.entries.nrows() / 2
    }

    pub fn entries(&self) -> &DMatrix<T> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<T> {
        self.entries
    }

    pub fn ordering(&self) -> QuadratureOrdering {
        self.ordering
    }

    pub fn units(&self) -> Units {
        self.units
    }

    pub fn with_units_tag(mut self, units: Units) -> Self {
        self.units = units;
        self
    }

    /// Largest `|V_ij - V_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> T {
        let scale = self.entries.amax();
        if scale == T::zero() {
            return T::zero();
        }
        (&self.entries - self.entries.transpose()).amax() / scale
    }

    pub fn is_symmetric(&self, rel_tol: T) -> bool {
        self.asymmetry() <= rel_tol
    }

    pub fn symmetrized(mut self) -> Self {
        let t = self.entries.transpose();
        self.entries = (&self.entries + t) * T::half();
        self
    }

    /// Exact permutation into `target` ordering.
    pub fn reorder(&self, target: QuadratureOrdering) -> Self {
        if target == self.ordering {
            return self.clone();
        }
        let n = self.n_modes();
        let perm = permutation(n, self.ordering, target);
        let entries = DMatrix::from_fn(2 * n, 2 * n, |i, j| self.entries[(perm[i], perm[j])]);
        Self { entries, ordering: target, units: self.units }
    }

    pub fn to_blocked(&self) -> Self {
        self.reorder(QuadratureOrdering::Blocked)
    }

    /// `(V_xx, V_xp, V_pp)` blocks.
    pub fn blocks(&self) -> (DMatrix<T>, DMatrix<T>, DMatrix<T>) {
        let b = self.to_blocked();
        let n = self.n_modes();
        (
            b.entries.view((0, 0), (n, n)).into_owned(),
            b.entries.view((0, n), (n, n)).into_owned(),
            b.entries.view((n, n), (n, n)).into_owned(),
        )
    }

    /// Apply the block-diagonal rotation `R_{theta_i}` to every mode.
    pub fn rotated_per_mode(&self, thetas: &[T]) -> Result<Self> {
        let n = self.n_modes();
        if thetas.len() != n {
            return Err(Error::Dimension { expected: n, got: thetas.len() });
        }
        let trig: Vec<(T, T)> = thetas.iter().map(|t| t.sin_cos()).collect();
        Ok(self.rotate_with(|i| trig[i]))
    }

    pub fn rotated_global(&self, theta: T) -> Self {
        let sc = theta.sin_cos();
        self.rotate_with(|_| sc)
    }

    fn rotate_with(&self, trig: impl Fn(usize) -> (T, T)) -> Self {
        let n = self.n_modes();
        let o = self.ordering;
        let v = &self.entries;
        let mut out = v.clone();
        for i in 0..n {
            let (si, ci) = trig(i);
            let (xi, pi) = (o.x_index(n, i), o.p_index(n, i));
            for j in 0..n {
                let (sj, cj) = trig(j);
                let (xj, pj) = (o.x_index(n, j), o.p_index(n, j));
                let (a, b, c, d) = (v[(xi, xj)], v[(xi, pj)], v[(pi, xj)], v[(pi, pj)]);
                // Rows by R_i = [[ci, -si], [si, ci]].
                let (ra, rb) = (ci * a - si * c, ci * b - si * d);
                let (rc, rd) = (si * a + ci * c, si * b + ci * d);
                // Columns by R_j^T.
                out[(xi, xj)] = ra * cj - rb * sj;
                out[(xi, pj)] = ra * sj + rb * cj;
                out[(pi, xj)] = rc * cj - rd * sj;
                out[(pi, pj)] = rc * sj + rd * cj;
            }
        }
        Self { entries: out, ordering: o, units: self.units }
    }
}
