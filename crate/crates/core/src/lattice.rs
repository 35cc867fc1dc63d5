//! Frequency-comb mode bases and target lattice graphs.
//!
//! Modes carry signed labels centred on half the reference pump frequency.
//! Every matrix in the crate stores modes in ascending frequency order, so
//! row `r` of an `N`-mode integer basis holds label `r - (N-1)/2`, and the
//! half-integer basis holds `-N/2 ..= -1` followed by `1 ..= N/2`.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Placement of the comb relative to the centre frequency.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffsetKind {
    /// Mode `m` at `f0 + m * spacing`, with a mode sitting on `f0`.
    Integer,
    /// Mode `m` at `f0 + sign(m) (|m| - 1/2) spacing`; no mode at `f0`.
    HalfInteger,
}

/// An equally spaced comb of `count` modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeBasis {
    pub count: usize,
    /// Comb spacing in Hz (the measurement bandwidth `1/T`).
    pub spacing_hz: f64,
    /// Centre frequency `f0` in Hz.
    pub center_hz: f64,
    pub offset_kind: OffsetKind,
}

pub const DEFAULT_CENTER_HZ: f64 = 4.2e9;
pub const DEFAULT_SPACING_HZ: f64 = 1.0e6;

impl ModeBasis {
    pub fn new(count: usize, spacing_hz: f64, center_hz: f64, offset_kind: OffsetKind) -> Result<Self> {
        let basis = Self { count, spacing_hz, center_hz, offset_kind };
        basis.validate()?;
        Ok(basis)
    }

    /// Integer comb with the default 4.2 GHz centre and 1 MHz spacing.
    pub fn integer(count: usize) -> Result<Self> {
        Self::new(count, DEFAULT_SPACING_HZ, DEFAULT_CENTER_HZ, OffsetKind::Integer)
    }

    /// Half-integer comb. The default centre is shifted by half a spacing so
    /// that twice the centre is an odd multiple of the spacing.
    pub fn half_integer(count: usize) -> Result<Self> {
        Self::new(count, DEFAULT_SPACING_HZ, DEFAULT_CENTER_HZ + 0.5 * DEFAULT_SPACING_HZ, OffsetKind::HalfInteger)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidSpec("mode count must be positive".into()));
        }
        match self.offset_kind {
            OffsetKind::Integer if self.count.is_multiple_of(2) => {
                return Err(Error::InvalidSpec(format!("integer comb needs an odd mode count, got {}", self.count)))
            }
            OffsetKind::HalfInteger if self.count % 2 == 1 => {
                return Err(Error::InvalidSpec(format!(
                    "half-integer comb needs an even mode count, got {}",
                    self.count
                )))
            }
            _ => {}
        }
        if !(self.spacing_hz > 0.0) || !self.spacing_hz.is_finite() {
            return Err(Error::InvalidSpec("spacing must be positive".into()));
        }
        if !self.center_hz.is_finite() {
            return Err(Error::InvalidSpec("center frequency must be finite".into()));
        }
        let lowest = self.labels().first().map(|&m| self.offset_units(m)).unwrap_or(0.0);
        if self.center_hz + lowest * self.spacing_hz <= 0.0 {
            return Err(Error::InvalidSpec("all mode frequencies must be positive".into()));
        }
        Ok(())
    }

    /// Largest label magnitude.
    pub fn half_width(&self) -> i32 {
        match self.offset_kind {
            OffsetKind::Integer => ((self.count - 1) / 2) as i32,
            OffsetKind::HalfInteger => (self.count / 2) as i32,
        }
    }

    /// Signed labels in ascending frequency (row) order.
    pub fn labels(&self) -> Vec<i32> {
        let h = self.half_width();
        match self.offset_kind {
            OffsetKind::Integer => (-h..=h).collect(),
            OffsetKind::HalfInteger => (-h..=-1).chain(1..=h).collect(),
        }
    }

    pub fn contains(&self, label: i32) -> bool {
        let h = self.half_width();
        match self.offset_kind {
            OffsetKind::Integer => label.abs() <= h,
            OffsetKind::HalfInteger => label != 0 && label.abs() <= h,
        }
    }

    pub fn row_of(&self, label: i32) -> Result<usize> {
        if !self.contains(label) {
            return Err(Error::OutOfRange { what: "mode label", index: label as i64 });
        }
        let h = self.half_width();
        Ok(match self.offset_kind {
            OffsetKind::Integer => (label + h) as usize,
            OffsetKind::HalfInteger if label < 0 => (label + h) as usize,
            OffsetKind::HalfInteger => (label + h - 1) as usize,
        })
    }

    pub fn label_of(&self, row: usize) -> Result<i32> {
        if row >= self.count {
            return Err(Error::OutOfRange { what: "mode row", index: row as i64 });
        }
        let h = self.half_width();
        let r = row as i32;
        Ok(match self.offset_kind {
            OffsetKind::Integer => r - h,
            OffsetKind::HalfInteger if r < h => r - h,
            OffsetKind::HalfInteger => r - h + 1,
        })
    }

    /// Offset from the centre in units of the spacing (may be half-integer).
    pub fn offset_units(&self, label: i32) -> f64 {
        match self.offset_kind {
            OffsetKind::Integer => label as f64,
            OffsetKind::HalfInteger => label.signum() as f64 * (label.abs() as f64 - 0.5),
        }
    }

    /// Twice the offset in units of the spacing; always an integer.
    pub fn doubled_offset(&self, label: i32) -> i64 {
        match self.offset_kind {
            OffsetKind::Integer => 2 * label as i64,
            OffsetKind::HalfInteger => label.signum() as i64 * (2 * label.abs() as i64 - 1),
        }
    }

    /// Inverse of [`ModeBasis::doubled_offset`], when a mode sits there.
    pub fn label_at_doubled_offset(&self, doubled: i64) -> Option<i32> {
        let label = match self.offset_kind {
            OffsetKind::Integer if doubled % 2 == 0 => doubled / 2,
            OffsetKind::HalfInteger if doubled % 2 != 0 => doubled.signum() * (doubled.abs() + 1) / 2,
            _ => return None,
        };
        let label = i32::try_from(label).ok()?;
        self.contains(label).then_some(label)
    }

    /// Frequency of mode `label` in Hz.
    pub fn mode_frequency(&self, label: i32) -> Result<f64> {
        if !self.contains(label) {
            return Err(Error::OutOfRange { what: "mode label", index: label as i64 });
        }
        Ok(self.center_hz + self.offset_units(label) * self.spacing_hz)
    }

    /// Mode frequencies in Hz, row order.
    pub fn frequencies(&self) -> Vec<f64> {
        self.labels().into_iter().map(|m| self.center_hz + self.offset_units(m) * self.spacing_hz).collect()
    }

    /// Detunings `f_i - f0` in Hz, row order.
    pub fn detunings(&self) -> Vec<f64> {
        self.labels().into_iter().map(|m| self.offset_units(m) * self.spacing_hz).collect()
    }
}

/// Free-standing form of [`ModeBasis::mode_frequency`].
pub fn mode_frequency(basis: &ModeBasis, index: i32) -> Result<f64> {
    basis.mode_frequency(index)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeKind {
    Square,
    Honeycomb,
    SinglePump,
}

/// Target topology: kind, total mode count and lattice width.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub kind: LatticeKind,
    pub n: usize,
    pub n_x: usize,
}

impl LatticeSpec {
    pub fn square(n: usize, n_x: usize) -> Result<Self> {
        let spec = Self { kind: LatticeKind::Square, n, n_x };
        spec.validate()?;
        Ok(spec)
    }

    pub fn honeycomb(n: usize, n_x: usize) -> Result<Self> {
        let spec = Self { kind: LatticeKind::Honeycomb, n, n_x };
        spec.validate()?;
        Ok(spec)
    }

    /// Independent pairs `(m, -m)`; the width is not used and is stored as 1.
    pub fn single_pump(n: usize) -> Result<Self> {
        let spec = Self { kind: LatticeKind::SinglePump, n, n_x: 1 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            LatticeKind::SinglePump => {
                if self.n.is_multiple_of(2) {
                    return Err(Error::InvalidSpec(format!("single-pump comb needs odd N, got {}", self.n)));
                }
            }
            LatticeKind::Square | LatticeKind::Honeycomb => {
                if self.n_x < 2 {
                    return Err(Error::InvalidSpec(format!("lattice width must be >= 2, got {}", self.n_x)));
                }
                if self.n < 2 * self.n_x {
                    return Err(Error::InvalidSpec(format!(
                        "N = {} too small for two rows of width {}",
                        self.n, self.n_x
                    )));
                }
                let parity_ok = match self.kind {
                    LatticeKind::Square => self.n % 2 == 1,
                    _ => self.n.is_multiple_of(2),
                };
                if !parity_ok {
                    return Err(Error::InvalidSpec(format!("N = {} has the wrong parity for {:?}", self.n, self.kind)));
                }
            }
        }
        Ok(())
    }

    pub fn offset_kind(&self) -> OffsetKind {
        match self.kind {
            LatticeKind::Honeycomb => OffsetKind::HalfInteger,
            _ => OffsetKind::Integer,
        }
    }

    /// Basis with default centre and spacing for this lattice.
    pub fn default_basis(&self) -> Result<ModeBasis> {
        match self.offset_kind() {
            OffsetKind::Integer => ModeBasis::integer(self.n),
            OffsetKind::HalfInteger => ModeBasis::half_integer(self.n),
        }
    }
}

/// Symmetric adjacency matrix with entries in `{0, +1, -1}` and zero diagonal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    labels: Vec<i32>,
    entries: DMatrix<i8>,
}

impl AdjacencyMatrix {
    pub fn zeros(labels: Vec<i32>) -> Self {
        let n = labels.len();
        Self { labels, entries: DMatrix::zeros(n, n) }
    }

    pub fn from_entries(labels: Vec<i32>, entries: DMatrix<i8>) -> Result<Self> {
        let n = labels.len();
        if entries.nrows() != n || entries.ncols() != n {
            return Err(Error::Dimension { expected: n, got: entries.nrows() });
        }
        for i in 0..n {
            if entries[(i, i)] != 0 {
                return Err(Error::InvalidSpec(format!("nonzero diagonal at row {i}")));
            }
            for j in 0..n {
                let v = entries[(i, j)];
                if !(-1..=1).contains(&v) {
                    return Err(Error::InvalidSpec(format!("entry {v} at ({i}, {j}) not in {{0, +-1}}")));
                }
                if v != entries[(j, i)] {
                    return Err(Error::InvalidSpec(format!("asymmetric entry at ({i}, {j})")));
                }
            }
        }
        Ok(Self { labels, entries })
    }

    pub(crate) fn set_edge(&mut self, i: usize, j: usize, w: i8) {
        debug_assert!(i != j);
        self.entries[(i, j)] = w;
        self.entries[(j, i)] = w;
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[i32] {
        &self.labels
    }

    pub fn entries(&self) -> &DMatrix<i8> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.entries[(i, j)]
    }

    /// Edges `(row_i, row_j, weight)` with `row_i < row_j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize, i8)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = self.entries[(i, j)];
                if w != 0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n()).map(|i| self.entries.row(i).iter().filter(|&&v| v != 0).count()).collect()
    }

    /// Same support with all weights set to +1.
    pub fn unsigned(&self) -> Self {
        Self { labels: self.labels.clone(), entries: self.entries.map(|v| v.abs()) }
    }

    pub fn same_support(&self, other: &Self) -> bool {
        self.unsigned() == other.unsigned()
    }

    pub fn to_real<T: Real>(&self) -> DMatrix<T> {
        self.entries.map(|v| T::lit(v as f64))
    }
}

/// Square lattice on a chiral cylinder of circumference `n_x`.
///
/// Mode `m` links to `-m +- 1` and `-m +- n_x` whenever the partner exists.
pub fn build_square_adjacency(spec: &LatticeSpec) -> Result<AdjacencyMatrix> {
    if spec.kind != LatticeKind::Square {
        return Err(Error::InvalidSpec(format!("expected a square spec, got {:?}", spec.kind)));
    }
    spec.validate()?;
    let basis = ModeBasis::integer(spec.n)?;
    let nx = spec.n_x as i32;
    let mut a = AdjacencyMatrix::zeros(basis.labels());
    for m in basis.labels() {
        for partner in [-m + 1, -m - 1, -m + nx, -m - nx] {
            if partner != m && basis.contains(partner) {
                a.set_edge(basis.row_of(m)?, basis.row_of(partner)?, 1);
            }
        }
    }
    Ok(a)
}

/// Honeycomb lattice on the half-integer comb.
///
/// Two modes link when their doubled offsets add up to twice one of the
/// tone offsets `+1`, `-1` or `n_x - 1`.
pub fn build_honeycomb_adjacency(spec: &LatticeSpec) -> Result<AdjacencyMatrix> {
    if spec.kind != LatticeKind::Honeycomb {
        return Err(Error::InvalidSpec(format!("expected a honeycomb spec, got {:?}", spec.kind)));
    }
    spec.validate()?;
    let basis = ModeBasis::half_integer(spec.n)?;
    let offsets = [1i64, -1, spec.n_x as i64 - 1];
    let mut a = AdjacencyMatrix::zeros(basis.labels());
    for m in basis.labels() {
        let d = basis.doubled_offset(m);
        for k in offsets {
            if let Some(partner) = basis.label_at_doubled_offset(2 * k - d) {
                if partner != m {
                    a.set_edge(basis.row_of(m)?, basis.row_of(partner)?, 1);
                }
            }
        }
    }
    Ok(a)
}

/// Pairs `(m, -m)` produced by a single pump at the reference frequency.
pub fn build_single_pump_adjacency(spec: &LatticeSpec) -> Result<AdjacencyMatrix> {
    if spec.kind != LatticeKind::SinglePump {
        return Err(Error::InvalidSpec(format!("expected a single-pump spec, got {:?}", spec.kind)));
    }
    spec.validate()?;
    let basis = ModeBasis::integer(spec.n)?;
    let mut a = AdjacencyMatrix::zeros(basis.labels());
    for m in 1..=basis.half_width() {
        a.set_edge(basis.row_of(m)?, basis.row_of(-m)?, 1);
    }
    Ok(a)
}

pub fn build_adjacency(spec: &LatticeSpec) -> Result<AdjacencyMatrix> {
    match spec.kind {
        LatticeKind::Square => build_square_adjacency(spec),
        LatticeKind::Honeycomb => build_honeycomb_adjacency(spec),
        LatticeKind::SinglePump => build_single_pump_adjacency(spec),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GraphStats {
    pub degrees: Vec<usize>,
    pub component_count: usize,
    pub bipartite: bool,
}

/// Degrees, connected components (BFS) and bipartiteness (BFS 2-colouring).
pub fn graph_stats(a: &AdjacencyMatrix) -> GraphStats {
    let n = a.n();
    let neighbours: Vec<Vec<usize>> = (0..n).map(|i| (0..n).filter(|&j| a.get(i, j) != 0).collect()).collect();
    let mut colour: Vec<Option<bool>> = vec![None; n];
    let mut components = 0;
    let mut bipartite = true;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if colour[start].is_some() {
            continue;
        }
        components += 1;
        colour[start] = Some(false);
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            let cu = colour[u].unwrap();
            for &v in &neighbours[u] {
                match colour[v] {
                    None => {
                        colour[v] = Some(!cu);
                        queue.push_back(v);
                    }
                    Some(cv) if cv == cu => bipartite = false,
                    _ => {}
                }
            }
        }
    }
    GraphStats { degrees: neighbours.iter().map(Vec::len).collect(), component_count: components, bipartite }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphFormat {
    Dot,
    EdgeCsv,
}

impl FromStr for GraphFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dot" => Ok(GraphFormat::Dot),
            "edge_csv" | "csv" => Ok(GraphFormat::EdgeCsv),
            other => Err(Error::UnsupportedFormat(other.to_string())),
        }
    }
}

/// Render the graph with signed mode labels, edges in row order.
///
/// `edge_csv` has columns `i,j,weight`; `dot` emits an undirected graph
/// where each edge carries its signed weight as a label and negative edges
/// are dashed.
pub fn export_graph(a: &AdjacencyMatrix, format: GraphFormat) -> String {
    let labels = a.labels();
    let mut out = String::new();
    match format {
        GraphFormat::EdgeCsv => {
            out.push_str("i,j,weight\n");
            for (i, j, w) in a.edges() {
                let _ = writeln!(out, "{},{},{}", labels[i], labels[j], w);
            }
        }
        GraphFormat::Dot => {
            out.push_str("graph cluster {\n  node [shape=circle];\n");
            for m in labels {
                let _ = writeln!(out, "  \"{m}\";");
            }
            for (i, j, w) in a.edges() {
                let style = if w < 0 { ", style=dashed" } else { "" };
                let _ = writeln!(out, "  \"{}\" -- \"{}\" [label=\"{:+}\"{}];", labels[i], labels[j], w, style);
            }
            out.push_str("}\n");
        }
    }
    out
}
