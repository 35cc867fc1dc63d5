//! Pump schemes: which tones to apply for a target lattice, the waveform they
//! sum to, and the first-order pairing graph they induce.
//!
//! A tone with offset `k` sits at `2 f0 + k * spacing` and pairs every two
//! modes whose frequencies add up to it.

use std::f64::consts::{PI, TAU};

use nalgebra::Complex;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{AdjacencyMatrix, LatticeKind, LatticeSpec, ModeBasis};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PumpTone {
    /// Frequency offset in units of the comb spacing.
    pub k: i32,
    /// Dimensionless pump strength.
    pub amplitude: f64,
    /// Phase in radians, `[0, 2pi)`.
    pub phase: f64,
}

impl PumpTone {
    pub fn new(k: i32, amplitude: f64, phase: f64) -> Result<Self> {
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(Error::InvalidSpec(format!("tone amplitude must be >= 0, got {amplitude}")));
        }
        if !phase.is_finite() {
            return Err(Error::InvalidSpec("tone phase must be finite".into()));
        }
        Ok(Self { k, amplitude, phase: phase.rem_euclid(TAU) })
    }

    /// Complex amplitude `g e^{i phi}`.
    pub fn complex_amplitude(&self) -> Complex<f64> {
        Complex::from_polar(self.amplitude, self.phase)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PumpScheme {
    pub basis: ModeBasis,
    pub target: LatticeSpec,
    pub tones: Vec<PumpTone>,
}

/// Which honeycomb tone carries the pi phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PiTone {
    Plus1,
    Minus1,
    #[default]
    Vertical,
}

impl PiTone {
    pub fn from_offset(k: i32, n_x: usize) -> Result<Self> {
        match k {
            1 => Ok(PiTone::Plus1),
            -1 => Ok(PiTone::Minus1),
            k if k == n_x as i32 - 1 => Ok(PiTone::Vertical),
            other => Err(Error::InvalidSpec(format!("pi tone must be one of +1, -1, {}; got {other}", n_x as i32 - 1))),
        }
    }

    fn offset(self, n_x: usize) -> i32 {
        match self {
            PiTone::Plus1 => 1,
            PiTone::Minus1 => -1,
            PiTone::Vertical => n_x as i32 - 1,
        }
    }
}

impl PumpScheme {
    pub fn new(basis: ModeBasis, target: LatticeSpec, tones: Vec<PumpTone>) -> Result<Self> {
        let scheme = Self { basis, target, tones };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn validate(&self) -> Result<()> {
        self.basis.validate()?;
        self.target.validate()?;
        if self.basis.count != self.target.n {
            return Err(Error::Dimension { expected: self.target.n, got: self.basis.count });
        }
        if self.basis.offset_kind != self.target.offset_kind() {
            return Err(Error::InvalidSpec(format!(
                "{:?} target needs a {:?} basis",
                self.target.kind,
                self.target.offset_kind()
            )));
        }
        for (i, t) in self.tones.iter().enumerate() {
            if !(t.amplitude >= 0.0) || !t.amplitude.is_finite() || !t.phase.is_finite() {
                return Err(Error::InvalidSpec(format!("tone {i} has invalid amplitude or phase")));
            }
            if self.tones[..i].iter().any(|o| o.k == t.k) {
                return Err(Error::InvalidSpec(format!("duplicate tone offset {}", t.k)));
            }
        }
        Ok(())
    }

    /// Same scheme with every amplitude replaced by `g`.
    pub fn with_amplitude(&self, g: f64) -> Result<Self> {
        let tones = self.tones.iter().map(|t| PumpTone::new(t.k, g, t.phase)).collect::<Result<Vec<_>>>()?;
        Self::new(self.basis.clone(), self.target, tones)
    }

    /// Pairs of rows `(i, j)`, `i < j`, linked by tone `tone`.
    pub fn tone_pairs(&self, tone: &PumpTone) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, m) in self.basis.labels().into_iter().enumerate() {
            let d = self.basis.doubled_offset(m);
            if let Some(p) = self.basis.label_at_doubled_offset(2 * tone.k as i64 - d) {
                let j = self.basis.row_of(p).expect("label in basis");
                if j > i {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let scheme: Self = serde_json::from_str(s)?;
        scheme.validate()?;
        Ok(scheme)
    }
}

/// Four equal tones at `+-1` and `+-n_x`; the `-n_x` tone carries phase pi.
pub fn square_scheme(n: usize, n_x: usize, g: f64) -> Result<PumpScheme> {
    let target = LatticeSpec::square(n, n_x)?;
    let nx = n_x as i32;
    let tones = vec![
        PumpTone::new(1, g, 0.0)?,
        PumpTone::new(-1, g, 0.0)?,
        PumpTone::new(nx, g, 0.0)?,
        PumpTone::new(-nx, g, PI)?,
    ];
    PumpScheme::new(ModeBasis::integer(n)?, target, tones)
}

/// Three equal tones at `+1`, `-1` and `n_x - 1`, one of them at phase pi.
pub fn honeycomb_scheme(n: usize, n_x: usize, g: f64, pi_tone: PiTone) -> Result<PumpScheme> {
    if n_x < 3 {
        return Err(Error::InvalidSpec(format!("honeycomb scheme needs n_x >= 3, got {n_x}")));
    }
    let target = LatticeSpec::honeycomb(n, n_x)?;
    let pi_k = pi_tone.offset(n_x);
    let tones = [1, -1, n_x as i32 - 1]
        .into_iter()
        .map(|k| PumpTone::new(k, g, if k == pi_k { PI } else { 0.0 }))
        .collect::<Result<Vec<_>>>()?;
    PumpScheme::new(ModeBasis::half_integer(n)?, target, tones)
}

/// One tone at the reference frequency, pairing `m` with `-m`.
pub fn single_pump_scheme(n: usize, g: f64) -> Result<PumpScheme> {
    let target = LatticeSpec::single_pump(n)?;
    PumpScheme::new(ModeBasis::integer(n)?, target, vec![PumpTone::new(0, g, 0.0)?])
}

/// Build the scheme matching a lattice spec with default tone phases.
pub fn scheme_for(spec: &LatticeSpec, g: f64, pi_tone: PiTone) -> Result<PumpScheme> {
    match spec.kind {
        LatticeKind::Square => square_scheme(spec.n, spec.n_x, g),
        LatticeKind::Honeycomb => honeycomb_scheme(spec.n, spec.n_x, g, pi_tone),
        LatticeKind::SinglePump => single_pump_scheme(spec.n, g),
    }
}

/// Pump signal `sum_k g_k cos(Omega_k t + phi_k)` at time `t` (seconds).
///
/// When every tone frequency is an integer multiple of the spacing the phase
/// is reduced modulo one period before evaluating the cosine, which keeps the
/// waveform exactly periodic in `1 / spacing`.
pub fn pump_waveform(scheme: &PumpScheme, t: f64) -> f64 {
    let basis = &scheme.basis;
    let u = t * basis.spacing_hz;
    let (whole, frac) = (u.floor(), u - u.floor());
    scheme
        .tones
        .iter()
        .map(|tone| {
            let harmonic = 2.0 * basis.center_hz / basis.spacing_hz + tone.k as f64;
            let cycles = if (harmonic - harmonic.round()).abs() < 1e-9 {
                let h = harmonic.round();
                // h * whole is an integer number of cycles.
                (h * frac).rem_euclid(1.0)
            } else {
                (harmonic * (whole + frac)).rem_euclid(1.0)
            };
            tone.amplitude * (TAU * cycles + tone.phase).cos()
        })
        .sum()
}

/// First-order pairing graph: rows `i != j` are linked when some tone pairs
/// them. Tones with zero amplitude do not link anything.
pub fn expected_adjacency(scheme: &PumpScheme) -> AdjacencyMatrix {
    let mut a = AdjacencyMatrix::zeros(scheme.basis.labels());
    for tone in scheme.tones.iter().filter(|t| t.amplitude > 0.0) {
        for (i, j) in scheme.tone_pairs(tone) {
            a.set_edge(i, j, 1);
        }
    }
    a
}

/// Pairing graph with the sign of `Re G_ij`, the weak-pump sign pattern of
/// the cluster state (edges of a pi-phase tone come out negative).
///
/// Edges whose summed coupling has vanishing real part are dropped.
pub fn expected_signed_adjacency(scheme: &PumpScheme) -> AdjacencyMatrix {
    let g = coupling_matrix::<f64>(scheme);
    let n = scheme.basis.count;
    let scale = g.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut a = AdjacencyMatrix::zeros(scheme.basis.labels());
    for i in 0..n {
        for j in (i + 1)..n {
            let re = g[(i, j)].re;
            if re.abs() > 1e-12 * scale {
                a.set_edge(i, j, re.signum() as i8);
            }
        }
    }
    a
}

/// Complex coupling matrix `G_ij = sum_k g_k e^{i phi_k} [f_i + f_j = Omega_k]`.
///
/// Symmetric; the degenerate self-pairing `i == j` is left out.
pub fn coupling_matrix<T: Real>(scheme: &PumpScheme) -> DMatrix<Complex<T>> {
    let n = scheme.basis.count;
    let mut g = DMatrix::from_element(n, n, Complex::new(T::zero(), T::zero()));
    for tone in &scheme.tones {
        let z = tone.complex_amplitude();
        let z = Complex::new(T::lit(z.re), T::lit(z.im));
        for (i, j) in scheme.tone_pairs(tone) {
            g[(i, j)] += z;
            g[(j, i)] += z;
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_honeycomb_adjacency, build_square_adjacency, graph_stats};

    #[test]
    fn square_scheme_tones() {
        let s = square_scheme(25, 5, 0.3).unwrap();
        let mut ks: Vec<i32> = s.tones.iter().map(|t| t.k).collect();
        ks.sort();
        assert_eq!(ks, vec![-5, -1, 1, 5]);
        for t in &s.tones {
            assert_eq!(t.amplitude, 0.3);
            assert_eq!(t.phase, if t.k == -5 { PI } else { 0.0 });
        }
        assert!(square_scheme(25, 1, 0.3).is_err());
        assert!(square_scheme(25, 5, -0.1).is_err());
    }

    #[test]
    fn honeycomb_scheme_pi_selector() {
        let a = honeycomb_scheme(50, 10, 0.2, PiTone::Plus1).unwrap();
        let b = honeycomb_scheme(50, 10, 0.2, PiTone::Minus1).unwrap();
        let ks: Vec<i32> = a.tones.iter().map(|t| t.k).collect();
        assert_eq!(ks, vec![1, -1, 9]);
        let differing = a.tones.iter().zip(&b.tones).filter(|(x, y)| x != y).count();
        assert_eq!(differing, 2);
        let diff_phase = a.tones.iter().zip(&b.tones).filter(|(x, y)| x.phase != y.phase).count();
        assert_eq!(diff_phase, 2);
        assert_eq!(PiTone::from_offset(9, 10).unwrap(), PiTone::Vertical);
        assert!(PiTone::from_offset(5, 10).is_err());
        assert!(honeycomb_scheme(50, 2, 0.2, PiTone::Vertical).is_err());
    }

    #[test]
    fn pi_selectors_differ_in_exactly_one_tone_relative_to_default() {
        let d = honeycomb_scheme(50, 10, 0.2, PiTone::Vertical).unwrap();
        let p = honeycomb_scheme(50, 10, 0.2, PiTone::Plus1).unwrap();
        // Moving the pi phase touches the old and the new tone.
        let changed: Vec<i32> =
            d.tones.iter().zip(&p.tones).filter(|(x, y)| x.phase != y.phase).map(|(x, _)| x.k).collect();
        assert_eq!(changed, vec![1, 9]);
    }

    #[test]
    fn single_pump_pairs() {
        let s = single_pump_scheme(9, 0.4).unwrap();
        let a = expected_adjacency(&s);
        let labels = a.labels().to_vec();
        for (i, j, _) in a.edges() {
            assert_eq!(labels[i], -labels[j]);
        }
        assert_eq!(a.edges().len(), 4);
        assert_eq!(a.degrees()[4], 0);
        assert_eq!(expected_adjacency(&single_pump_scheme(5, 1.0).unwrap()).edges().len(), 2);
        assert!(expected_adjacency(&single_pump_scheme(9, 0.0).unwrap()).edges().is_empty());
    }

    #[test]
    fn square_expected_matches_lattice() {
        for (n, nx) in [(25, 5), (81, 9), (31, 4), (15, 3)] {
            let s = square_scheme(n, nx, 1.0).unwrap();
            let want = build_square_adjacency(&LatticeSpec::square(n, nx).unwrap()).unwrap();
            assert_eq!(expected_adjacency(&s), want, "N={n} Nx={nx}");
        }
    }

    #[test]
    fn honeycomb_expected_matches_lattice() {
        for (n, nx) in [(50, 10), (40, 8), (12, 3)] {
            let s = honeycomb_scheme(n, nx, 1.0, PiTone::Vertical).unwrap();
            let want = build_honeycomb_adjacency(&LatticeSpec::honeycomb(n, nx).unwrap()).unwrap();
            assert_eq!(expected_adjacency(&s), want);
        }
        let hc = build_honeycomb_adjacency(&LatticeSpec::honeycomb(50, 10).unwrap()).unwrap();
        assert_eq!(graph_stats(&hc).component_count, 2);
    }

    #[test]
    fn signed_adjacency_follows_tone_phase() {
        let s = square_scheme(25, 5, 1.0).unwrap();
        let a = expected_signed_adjacency(&s);
        let labels = a.labels().to_vec();
        for (i, j, w) in a.edges() {
            let sum = labels[i] + labels[j];
            assert_eq!(w, if sum == -5 { -1 } else { 1 });
        }
        assert!(a.same_support(&expected_adjacency(&s)));
    }

    #[test]
    fn empty_scheme_gives_zero_matrix() {
        let spec = LatticeSpec::square(9, 2).unwrap();
        let s = PumpScheme::new(ModeBasis::integer(9).unwrap(), spec, vec![]).unwrap();
        assert!(expected_adjacency(&s).edges().is_empty());
        assert!(coupling_matrix::<f64>(&s).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn duplicate_offsets_rejected() {
        let spec = LatticeSpec::square(9, 2).unwrap();
        let tones = vec![PumpTone::new(1, 1.0, 0.0).unwrap(), PumpTone::new(1, 1.0, 0.0).unwrap()];
        assert!(PumpScheme::new(ModeBasis::integer(9).unwrap(), spec, tones).is_err());
    }

    #[test]
    fn coupling_single_pump_three_modes() {
        let s = single_pump_scheme(3, 0.7).unwrap();
        let g = coupling_matrix::<f64>(&s);
        assert_eq!(g[(0, 2)], Complex::new(0.7, 0.0));
        assert_eq!(g[(2, 0)], Complex::new(0.7, 0.0));
        let nonzero = g.iter().filter(|z| z.norm() != 0.0).count();
        assert_eq!(nonzero, 2);
    }

    #[test]
    fn coupling_square_has_four_antidiagonals() {
        let s = square_scheme(25, 5, 1.0).unwrap();
        let g = coupling_matrix::<f64>(&s);
        let mut sums: Vec<usize> = Vec::new();
        for i in 0..25 {
            for j in 0..25 {
                if g[(i, j)].norm() != 0.0 && !sums.contains(&(i + j)) {
                    sums.push(i + j);
                }
            }
        }
        sums.sort();
        // Row sum i + j = 24 + k for a tone at offset k.
        assert_eq!(sums, vec![19, 23, 25, 29]);
    }

    #[test]
    fn waveform_values() {
        let single = single_pump_scheme(3, 0.8).unwrap();
        assert!((pump_waveform(&single, 0.0) - 0.8).abs() < 1e-15);
        let sq = square_scheme(25, 5, 1.0).unwrap();
        assert!((pump_waveform(&sq, 0.0) - 2.0).abs() < 1e-12);
        assert_eq!(pump_waveform(&square_scheme(25, 5, 0.0).unwrap(), 1.3e-7), 0.0);
    }

    #[test]
    fn waveform_is_periodic() {
        let schemes = [
            square_scheme(25, 5, 1.0).unwrap(),
            honeycomb_scheme(50, 10, 0.5, PiTone::Vertical).unwrap(),
            single_pump_scheme(9, 1.0).unwrap(),
        ];
        for s in &schemes {
            let period = 1.0 / s.basis.spacing_hz;
            let scale: f64 = s.tones.iter().map(|t| t.amplitude).sum();
            for t in [0.0, 1.234e-8, 3.3e-7, 7.77e-7] {
                let a = pump_waveform(s, t);
                let b = pump_waveform(s, t + period);
                // t + period rounds at ~1e-22 s; at 8.4 GHz that is ~1e-11 rad.
                assert!((a - b).abs() <= 1e-9 * scale, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let s = honeycomb_scheme(50, 10, 0.123456789, PiTone::Minus1).unwrap();
        let back = PumpScheme::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(s, back);
    }
}
