//! Synthetic measurement chain.
//!
//! A window is one draw of the `2N` demodulated quadratures in volts,
//! mode-interleaved `(x_1, p_1, ..., x_N, p_N)`. The chain delays mode `i` by
//! `theta_i = tau_d (f_i - f_0)`, adds uncorrelated amplifier noise, applies
//! the power gain and converts photon units to volts with
//! `sqrt(Z_c hbar Delta omega_i)` per quadrature.
//!
//! Samples come from `x = sqrt(g) D L z`, where `L` is the lower Cholesky
//! factor of the photon-unit target covariance, `D` the volts scale and `z`
//! standard normals drawn from ChaCha8 one window at a time. The stream is
//! therefore identical for every block size.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{delay_angles, CovarianceMatrix, GaussianState, QuadratureOrdering, Units};
use crate::lattice::ModeBasis;
use crate::scalar::Real;

/// Reduced Planck constant in J s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Windows per generated block.
pub const DEFAULT_BLOCK_SIZE: usize = 4096;

pub const STREAM_MAGIC: &str = "cvcs-samples v1";

/// Amplifier added noise in photons per quadrature variance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AddedNoise {
    Uniform(f64),
    PerMode(Vec<f64>),
}

impl Default for AddedNoise {
    fn default() -> Self {
        AddedNoise::Uniform(14.0)
    }
}

impl AddedNoise {
    pub fn per_mode(&self, n: usize) -> Result<Vec<f64>> {
        let v = match self {
            AddedNoise::Uniform(x) => vec![*x; n],
            AddedNoise::PerMode(v) if v.len() == n => v.clone(),
            AddedNoise::PerMode(v) => return Err(Error::Dimension { expected: n, got: v.len() }),
        };
        if let Some(bad) = v.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::InvalidSpec(format!("added noise must be finite and >= 0, got {bad}")));
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub added_noise_photons: AddedNoise,
    pub gain_db: f64,
    /// Ohms.
    pub z_c: f64,
    /// Detection bandwidth in Hz; `None` uses the comb spacing.
    pub delta_hz: Option<f64>,
    pub tau_d_rad_per_mhz: f64,
    pub seed: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            added_noise_photons: AddedNoise::default(),
            gain_db: 40.0,
            z_c: 50.0,
            delta_hz: None,
            tau_d_rad_per_mhz: 1.89,
            seed: 0,
        }
    }
}

impl ChainConfig {
    /// Transparent chain: no noise, unit gain, no delay.
    pub fn ideal(seed: u64) -> Self {
        Self {
            added_noise_photons: AddedNoise::Uniform(0.0),
            gain_db: 0.0,
            tau_d_rad_per_mhz: 0.0,
            seed,
            ..Self::default()
        }
    }

    pub fn gain_linear(&self) -> f64 {
        10f64.powf(self.gain_db / 10.0)
    }

    pub fn delta(&self, basis: &ModeBasis) -> f64 {
        self.delta_hz.unwrap_or(basis.spacing_hz)
    }

    pub fn validate(&self, basis: &ModeBasis) -> Result<()> {
        self.added_noise_photons.per_mode(basis.count)?;
        let g = self.gain_linear();
        if !(g.is_finite() && g > 0.0) {
            return Err(Error::InvalidSpec(format!("gain {} dB is not usable", self.gain_db)));
        }
        if !(self.z_c.is_finite() && self.z_c > 0.0) {
            return Err(Error::InvalidSpec(format!("impedance must be positive, got {}", self.z_c)));
        }
        let d = self.delta(basis);
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::InvalidSpec(format!("bandwidth must be positive, got {d}")));
        }
        if !self.tau_d_rad_per_mhz.is_finite() {
            return Err(Error::InvalidSpec("phase-delay slope is not finite".into()));
        }
        Ok(())
    }
}

/// Per-quadrature factor `sqrt(Z_c hbar Delta omega_i)` in the given ordering.
pub fn volts_scale(basis: &ModeBasis, z_c: f64, delta_hz: f64, ordering: QuadratureOrdering) -> Vec<f64> {
    let n = basis.count;
    let mut s = vec![0.0; 2 * n];
    for (i, f) in basis.frequencies().into_iter().enumerate() {
        let v = (z_c * HBAR * delta_hz * std::f64::consts::TAU * f).sqrt();
        s[ordering.x_index(n, i)] = v;
        s[ordering.p_index(n, i)] = v;
    }
    s
}

/// `V_ij -> V_ij Z_c hbar Delta sqrt(omega_i omega_j)`.
pub fn photon_to_volts<T: Real>(
    cov: &CovarianceMatrix<T>,
    basis: &ModeBasis,
    z_c: f64,
    delta_hz: f64,
) -> Result<CovarianceMatrix<T>> {
    if cov.n_modes() != basis.count {
        return Err(Error::Dimension { expected: basis.count, got: cov.n_modes() });
    }
    let s = volts_scale(basis, z_c, delta_hz, cov.ordering());
    let v = cov.entries();
    let out = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * T::lit(s[i] * s[j]));
    CovarianceMatrix::with_units(out, cov.ordering(), Units::VoltSquared)
}

/// Windows in memory, one row per window.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowSamples<T: Real> {
    pub basis: ModeBasis,
    /// `M x 2N`, mode-interleaved columns.
    pub data: DMatrix<T>,
}

impl<T: Real> WindowSamples<T> {
    pub fn n_windows(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_modes(&self) -> usize {
        self.basis.count
    }
}

/// Photon-unit covariance seen at the digitizer before the volts scale:
/// delayed state plus added noise, times the gain. Mode-interleaved.
pub fn chain_covariance<T: Real>(state: &GaussianState<T>, cfg: &ChainConfig) -> Result<CovarianceMatrix<T>> {
    cfg.validate(&state.basis)?;
    let thetas: Vec<T> = delay_angles(&state.basis, cfg.tau_d_rad_per_mhz);
    let rotated = state.cov.reorder(QuadratureOrdering::Interleaved).rotated_per_mode(&thetas)?;
    let noise = cfg.added_noise_photons.per_mode(state.n_modes())?;
    let mut v = rotated.into_entries();
    for (i, n_add) in noise.iter().enumerate() {
        v[(2 * i, 2 * i)] += T::lit(*n_add);
        v[(2 * i + 1, 2 * i + 1)] += T::lit(*n_add);
    }
    v *= T::lit(cfg.gain_linear());
    CovarianceMatrix::from_matrix(v, QuadratureOrdering::Interleaved)
}

/// Stateful block generator of chain windows.
pub struct WindowStream<T: Real> {
    basis: ModeBasis,
    /// `(sqrt(g) D L)^T`, so a block is `Z * factor_t`.
    factor_t: DMatrix<T>,
    rng: ChaCha8Rng,
    remaining: usize,
    block_size: usize,
}

impl<T: Real> WindowStream<T> {
    pub fn new(state: &GaussianState<T>, m: usize, cfg: &ChainConfig) -> Result<Self> {
        Self::with_block_size(state, m, cfg, DEFAULT_BLOCK_SIZE)
    }

    pub fn with_block_size(state: &GaussianState<T>, m: usize, cfg: &ChainConfig, block_size: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidSpec("window count must be at least 1".into()));
        }
        if block_size == 0 {
            return Err(Error::InvalidSpec("block size must be at least 1".into()));
        }
        let nus = state.symplectic_eigenvalues().map_err(|_| Error::NotPhysical { nu_min: f64::NAN })?;
        let nu_min = nus.last().map_or(0.0, |v| v.as_f64());
        if nu_min < 0.5 - 1e-8 {
            return Err(Error::NotPhysical { nu_min });
        }
        let target = chain_covariance(state, cfg)?;
        let g = cfg.gain_linear();
        // Factor the photon-unit matrix without the gain, which is better scaled.
        let unscaled = target.entries() * T::lit(1.0 / g);
        let l = unscaled
            .cholesky()
            .ok_or_else(|| Error::Numerical("chain covariance is not positive definite".into()))?
            .l();
        let scale = volts_scale(&state.basis, cfg.z_c, cfg.delta(&state.basis), QuadratureOrdering::Interleaved);
        let d = DVector::from_iterator(scale.len(), scale.iter().map(|s| T::lit(s * g.sqrt())));
        let factor = DMatrix::from_diagonal(&d) * l;
        Ok(Self {
            basis: state.basis.clone(),
            factor_t: factor.transpose(),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            remaining: m,
            block_size,
        })
    }

    pub fn basis(&self) -> &ModeBasis {
        &self.basis
    }

    pub fn remaining(&self) -> usize {
        self.remaining
    }

    /// Next block of at most `block_size` windows.
    pub fn next_block(&mut self) -> Option<DMatrix<T>> {
        if self.remaining == 0 {
            return None;
        }
        let rows = self.remaining.min(self.block_size);
        let d = self.factor_t.nrows();
        let mut z = DMatrix::<T>::zeros(rows, d);
        for r in 0..rows {
            for c in 0..d {
                let v: f64 = StandardNormal.sample(&mut self.rng);
                z[(r, c)] = T::lit(v);
            }
        }
        self.remaining -= rows;
        Some(z * &self.factor_t)
    }
}

impl<T: Real> Iterator for WindowStream<T> {
    type Item = DMatrix<T>;

    fn next(&mut self) -> Option<DMatrix<T>> {
        self.next_block()
    }
}

/// Draw `m` windows into memory.
pub fn sample_windows<T: Real>(state: &GaussianState<T>, m: usize, cfg: &ChainConfig) -> Result<WindowSamples<T>> {
    let stream = WindowStream::new(state, m, cfg)?;
    let d = 2 * state.n_modes();
    let mut data = DMatrix::zeros(m, d);
    let mut row = 0;
    for block in stream {
        data.view_mut((row, 0), (block.nrows(), d)).copy_from(&block);
        row += block.nrows();
    }
    Ok(WindowSamples { basis: state.basis.clone(), data })
}

/// First line of a binary sample stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamHeader {
    pub format: String,
    pub n_modes: usize,
    pub n_windows: usize,
    pub ordering: QuadratureOrdering,
    pub basis: ModeBasis,
    pub config: ChainConfig,
}

impl StreamHeader {
    pub fn new(basis: ModeBasis, n_windows: usize, config: ChainConfig) -> Self {
        Self {
            format: STREAM_MAGIC.to_string(),
            n_modes: basis.count,
            n_windows,
            ordering: QuadratureOrdering::Interleaved,
            basis,
            config,
        }
    }
}

/// Writes the JSON header line, then each window as `2N` little-endian `f64`.
pub struct StreamWriter<W: Write> {
    out: W,
    width: usize,
    expected: usize,
    written: usize,
}

impl<W: Write> StreamWriter<W> {
    pub fn new(mut out: W, header: &StreamHeader) -> Result<Self> {
        let line = serde_json::to_string(header)?;
        writeln!(out, "{line}")?;
        Ok(Self { out, width: 2 * header.n_modes, expected: header.n_windows, written: 0 })
    }

    pub fn write_block<T: Real>(&mut self, block: &DMatrix<T>) -> Result<()> {
        if block.ncols() != self.width {
            return Err(Error::Dimension { expected: self.width, got: block.ncols() });
        }
        let mut buf = Vec::with_capacity(8 * self.width);
        for r in 0..block.nrows() {
            buf.clear();
            for c in 0..self.width {
                buf.extend_from_slice(&block[(r, c)].as_f64().to_le_bytes());
            }
            self.out.write_all(&buf)?;
        }
        self.written += block.nrows();
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        if self.written != self.expected {
            return Err(Error::InvalidSpec(format!(
                "stream header announced {} windows, wrote {}",
                self.expected, self.written
            )));
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Block reader for the binary stream.
pub struct StreamReader<R: BufRead> {
    input: R,
    header: StreamHeader,
    remaining: usize,
    block_size: usize,
}

impl<R: BufRead> StreamReader<R> {
    pub fn new(mut input: R) -> Result<Self> {
        let mut line = String::new();
        input.read_line(&mut line)?;
        let header: StreamHeader =
            serde_json::from_str(line.trim_end()).map_err(|e| Error::Parse(format!("bad stream header: {e}")))?;
        if header.format != STREAM_MAGIC {
            return Err(Error::UnsupportedFormat(header.format));
        }
        let remaining = header.n_windows;
        Ok(Self { input, header, remaining, block_size: DEFAULT_BLOCK_SIZE })
    }

    pub fn header(&self) -> &StreamHeader {
        &self.header
    }

    pub fn next_block<T: Real>(&mut self) -> Result<Option<DMatrix<T>>> {
        if self.remaining == 0 {
            return Ok(None);
        }
        let rows = self.remaining.min(self.block_size);
        let width = 2 * self.header.n_modes;
        let mut bytes = vec![0u8; 8 * rows * width];
        self.input.read_exact(&mut bytes)?;
        let mut block = DMatrix::zeros(rows, width);
        for (k, chunk) in bytes.chunks_exact(8).enumerate() {
            let v = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
            block[(k / width, k % width)] = T::lit(v);
        }
        self.remaining -= rows;
        Ok(Some(block))
    }

    pub fn read_all<T: Real>(mut self) -> Result<WindowSamples<T>> {
        let width = 2 * self.header.n_modes;
        let mut data = DMatrix::zeros(self.header.n_windows, width);
        let mut row = 0;
        while let Some(b) = self.next_block::<T>()? {
            data.view_mut((row, 0), (b.nrows(), width)).copy_from(&b);
            row += b.nrows();
        }
        Ok(WindowSamples { basis: self.header.basis, data })
    }
}

/// CSV fallback: `#`-prefixed JSON header, then one window per line.
pub fn write_samples_csv<T: Real, W: Write>(mut w: W, samples: &WindowSamples<T>, cfg: &ChainConfig) -> Result<()> {
    let header = StreamHeader::new(samples.basis.clone(), samples.n_windows(), cfg.clone());
    writeln!(w, "# {}", serde_json::to_string(&header)?)?;
    let mut line = String::new();
    for r in 0..samples.data.nrows() {
        line.clear();
        for c in 0..samples.data.ncols() {
            if c > 0 {
                line.push(',');
            }
            line.push_str(&crate::gaussian::io::fmt_num(samples.data[(r, c)].as_f64()));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_samples_csv<T: Real, R: BufRead>(r: R) -> Result<(StreamHeader, WindowSamples<T>)> {
    let mut lines = r.lines();
    let first = lines.next().ok_or_else(|| Error::Parse("empty sample file".into()))??;
    let json = first.strip_prefix('#').ok_or_else(|| Error::Parse("missing sample header".into()))?;
    let header: StreamHeader =
        serde_json::from_str(json.trim()).map_err(|e| Error::Parse(format!("bad sample header: {e}")))?;
    let width = 2 * header.n_modes;
    let mut values = Vec::with_capacity(header.n_windows * width);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let before = values.len();
        for s in line.split(',') {
            let v: f64 = s.trim().parse().map_err(|e| Error::Parse(format!("bad sample {s:?}: {e}")))?;
            values.push(T::lit(v));
        }
        if values.len() - before != width {
            return Err(Error::Dimension { expected: width, got: values.len() - before });
        }
    }
    let m = values.len() / width;
    if m != header.n_windows {
        return Err(Error::Dimension { expected: header.n_windows, got: m });
    }
    let data = DMatrix::from_row_slice(m, width, &values);
    let basis = header.basis.clone();
    Ok((header, WindowSamples { basis, data }))
}
