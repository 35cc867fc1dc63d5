//! Pipeline driver behind the `cvcs` binary.
//!
//! Every file written here starts with a metadata header carrying the tool
//! version and the SHA-256 of the run configuration (output directory
//! excluded), and all numbers use the fixed 17-digit rendering, so two runs
//! of the same configuration produce byte-identical files.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use cvcs_core::analysis::{
    analyze, canonical_hidden_ratio, hidden_positions, nullifier_jackknife, nullifier_sweep, sigmas_below_vacuum,
    theta_grid, Analysis, HerReport, NullifierReport, Sweep, DEFAULT_THRESHOLD,
};
use cvcs_core::chain::{ChainConfig, WindowStream};
use cvcs_core::estimator::{
    covariance_from_accumulator, invert_chain, project_physical, CalibrationRecord, CovarianceAccumulator,
    ProjectionOptions,
};
use cvcs_core::gaussian::io::{fmt_num, write_covariance_csv, write_matrix_csv, CovarianceSidecar, MATRIX_MAGIC};
use cvcs_core::gaussian::{apply_loss, calibrate_g3db, evolve, CovarianceMatrix, GaussianState, QuadratureOrdering};
use cvcs_core::lattice::{AdjacencyMatrix, LatticeKind, LatticeSpec, ModeBasis};
use cvcs_core::pumpsynth::{expected_signed_adjacency, scheme_for, PiTone, PumpScheme};

pub const TOOL: &str = "cvcs";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const REPORT_MAGIC: &str = "cvcs-report v1";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: cvcs_core::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 configuration, 2 numerical failure, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io { .. } => 3,
            CliError::Stage { source, .. } if source.is_config() => 1,
            CliError::Stage { source, .. } if source.is_io() => 3,
            CliError::Stage { .. } => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

trait StageExt<T> {
    fn stage(self, stage: &'static str) -> CliResult<T>;
}

impl<T> StageExt<T> for cvcs_core::Result<T> {
    fn stage(self, stage: &'static str) -> CliResult<T> {
        self.map_err(|source| CliError::Stage { stage, source })
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Everything a run needs. Pump amplitudes are in units of `g_3dB`; with
/// `tau = 1` a tone of strength `g / g_3dB` has amplitude
/// `(g / g_3dB) arccosh(sqrt 2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeSpec,
    pub pi_tone: PiTone,
    pub pump_amplitudes: Vec<f64>,
    /// Output transmissivity applied after the pump.
    pub loss_eta: f64,
    /// Windows per point; 0 skips sampling and estimation.
    pub windows: usize,
    pub chain: ChainConfig,
    pub theta_points: usize,
    pub threshold: f64,
    pub jackknife_blocks: usize,
    pub project: bool,
    /// Not serialized, so neither the hash nor the summary depends on it.
    #[serde(skip_serializing)]
    pub output_dir: PathBuf,
    /// Point `i` of the ladder samples with seed `seed + i`.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            lattice: LatticeSpec::square(25, 5).expect("valid default lattice"),
            pi_tone: PiTone::default(),
            pump_amplitudes: vec![0.05, 0.1, 0.15, 0.2, 0.25],
            loss_eta: 1.0,
            windows: 0,
            chain: ChainConfig::default(),
            theta_points: 180,
            threshold: DEFAULT_THRESHOLD,
            jackknife_blocks: 20,
            project: true,
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> CliResult<()> {
        self.lattice.validate().stage("config")?;
        let basis = self.basis()?;
        if self.pump_amplitudes.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(CliError::Config("pump amplitudes must be finite and >= 0".into()));
        }
        if !(self.loss_eta >= 0.0 && self.loss_eta <= 1.0) {
            return Err(CliError::Config(format!("loss_eta must lie in [0, 1], got {}", self.loss_eta)));
        }
        if self.theta_points == 0 {
            return Err(CliError::Config("theta_points must be at least 1".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(CliError::Config(format!("threshold must lie in (0, 1), got {}", self.threshold)));
        }
        if self.windows == 1 {
            return Err(CliError::Config("windows must be 0 or at least 2".into()));
        }
        if self.windows > 0 && !(2..=self.windows).contains(&self.jackknife_blocks) {
            return Err(CliError::Config("jackknife_blocks must lie in [2, windows]".into()));
        }
        self.chain.validate(&basis).stage("config")?;
        self.scheme(0.0)?;
        Ok(())
    }

    pub fn basis(&self) -> CliResult<ModeBasis> {
        self.lattice.default_basis().stage("config")
    }

    /// Scheme with every tone at `g_over_g3db` times the 3 dB amplitude.
    pub fn scheme(&self, g_over_g3db: f64) -> CliResult<PumpScheme> {
        scheme_for(&self.lattice, g_over_g3db * calibrate_g3db::<f64>(), self.pi_tone).stage("synth")
    }

    /// Signed graph the nullifiers are evaluated against.
    pub fn target(&self) -> CliResult<AdjacencyMatrix> {
        Ok(expected_signed_adjacency(&self.scheme(1.0)?))
    }

    /// SHA-256 of the canonical JSON of the configuration.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Header lines shared by every emitted file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
}

impl Meta {
    pub fn new(config_sha256: String) -> Self {
        Self { tool: TOOL.into(), version: VERSION.into(), config_sha256 }
    }

    pub fn for_config(cfg: &RunConfig) -> Self {
        Self::new(cfg.hash())
    }

    fn pairs(&self) -> Vec<(String, String)> {
        vec![
            ("tool".into(), format!("{} {}", self.tool, self.version)),
            ("config_sha256".into(), self.config_sha256.clone()),
        ]
    }

    fn csv_header(&self) -> String {
        let mut s = format!("# {REPORT_MAGIC}\n");
        for (k, v) in self.pairs() {
            s.push_str(&format!("# {k}={v}\n"));
        }
        s
    }
}

/// Create the parent directory and write `contents`.
pub fn write_file(path: &Path, contents: &[u8]) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, contents).map_err(io_err(path))
}

#[derive(Serialize)]
struct WithMeta<'a, T: Serialize> {
    meta: &'a Meta,
    #[serde(flatten)]
    body: &'a T,
}

pub fn write_json<T: Serialize>(path: &Path, meta: &Meta, body: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(&WithMeta { meta, body })
        .map_err(|e| CliError::Stage { stage: "report", source: e.into() })?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub fn write_cov(path: &Path, meta: &Meta, cov: &CovarianceMatrix<f64>) -> CliResult<()> {
    let mut buf = Vec::new();
    write_covariance_csv(&mut buf, cov, &meta.pairs()).stage("report")?;
    write_file(path, &buf)
}

pub fn write_matrix(path: &Path, meta: &Meta, name: &str, m: &nalgebra::DMatrix<f64>) -> CliResult<()> {
    let mut pairs = vec![("matrix".to_string(), name.to_string())];
    pairs.extend(meta.pairs());
    let mut buf = Vec::new();
    write_matrix_csv(&mut buf, MATRIX_MAGIC, &pairs, m).stage("report")?;
    write_file(path, &buf)
}

/// Graph exports with a comment header (`//` for DOT, `#` for CSV).
pub fn render_graph(adj: &AdjacencyMatrix, format: cvcs_core::lattice::GraphFormat, meta: &Meta) -> String {
    let body = cvcs_core::lattice::export_graph(adj, format);
    let mark = match format {
        cvcs_core::lattice::GraphFormat::Dot => "//",
        cvcs_core::lattice::GraphFormat::EdgeCsv => "#",
    };
    let mut out = String::new();
    for (k, v) in meta.pairs() {
        out.push_str(&format!("{mark} {k}={v}\n"));
    }
    out.push_str(&body);
    out
}

/// Files of `cvcs synth`.
pub fn synth(cfg: &RunConfig, g_over_g3db: f64, dir: &Path) -> CliResult<()> {
    let meta = Meta::for_config(cfg);
    let scheme = cfg.scheme(g_over_g3db)?;
    write_json(&dir.join("scheme.json"), &meta, &scheme)?;
    let adj = cvcs_core::pumpsynth::expected_adjacency(&scheme);
    write_file(
        &dir.join("adjacency.csv"),
        render_graph(&adj, cvcs_core::lattice::GraphFormat::EdgeCsv, &meta).as_bytes(),
    )?;
    write_file(&dir.join("graph.dot"), render_graph(&adj, cvcs_core::lattice::GraphFormat::Dot, &meta).as_bytes())?;
    Ok(())
}

/// Lossy pumped state at one ladder point.
pub fn simulate(cfg: &RunConfig, g_over_g3db: f64) -> CliResult<GaussianState<f64>> {
    let scheme = cfg.scheme(g_over_g3db)?;
    let vacuum = GaussianState::vacuum(scheme.basis.clone());
    let pumped = evolve(&vacuum, &scheme, 1.0).stage("simulate")?;
    apply_loss(&pumped, cfg.loss_eta).stage("simulate")
}

/// Stream `m` windows of `state` through the chain into per-block
/// accumulators.
pub fn sample_into_blocks(
    state: &GaussianState<f64>,
    m: usize,
    chain: &ChainConfig,
    blocks: usize,
) -> CliResult<Vec<CovarianceAccumulator<f64>>> {
    let stream = WindowStream::new(state, m, chain).stage("sample")?;
    let dim = 2 * state.n_modes();
    fold_blocks(stream.map(Ok), m, dim, blocks)
}

/// Split a stream of `m` windows into `blocks` contiguous accumulators.
fn fold_blocks(
    chunks: impl Iterator<Item = CliResult<nalgebra::DMatrix<f64>>>,
    m: usize,
    dim: usize,
    blocks: usize,
) -> CliResult<Vec<CovarianceAccumulator<f64>>> {
    let mut accs: Vec<_> = (0..blocks).map(|_| CovarianceAccumulator::new(dim)).collect();
    let bound = |b: usize| b * m / blocks;
    let (mut row, mut b) = (0usize, 0usize);
    for chunk in chunks {
        let chunk = chunk?;
        let mut start = 0;
        while start < chunk.nrows() {
            while row + start >= bound(b + 1) {
                b += 1;
            }
            let take = (bound(b + 1) - (row + start)).min(chunk.nrows() - start);
            accs[b].push_block(&chunk.rows(start, take).into_owned()).stage("estimate")?;
            start += take;
        }
        row += chunk.nrows();
    }
    Ok(accs)
}

/// Estimation results at one ladder point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimatePoint {
    pub theta_star: f64,
    pub min_db: f64,
    pub min_db_unprojected: f64,
    pub her: Option<f64>,
    pub jackknife_sigmas_below_vacuum: Option<f64>,
    pub projection_changed: bool,
    pub nu_min_before_projection: f64,
    pub over_subtracted: usize,
}

pub struct EstimateOutput {
    pub point: EstimatePoint,
    pub analysis: Analysis<f64>,
    pub cov: CovarianceMatrix<f64>,
}

/// Invert the chain for a filled set of accumulators and analyze the result.
pub fn estimate_and_analyze(
    cfg: &RunConfig,
    accs: &[CovarianceAccumulator<f64>],
    chain: &ChainConfig,
) -> CliResult<EstimateOutput> {
    let basis = cfg.basis()?;
    let target = cfg.target()?;
    let calib = CalibrationRecord::from_chain(chain, &basis).stage("estimate")?;
    let mut total = CovarianceAccumulator::new(2 * basis.count);
    for a in accs {
        total.merge(a).stage("estimate")?;
    }
    let delta = chain.delta(&basis);
    let raw = covariance_from_accumulator(&total, &basis, chain.z_c, delta).stage("estimate")?;
    let (sub, _) = invert_chain(&raw, &basis, &calib).stage("estimate")?;
    let thetas = theta_grid(cfg.theta_points);
    // Only the sweep: an unphysical estimate can have a singular V_xx.
    let unprojected = nullifier_sweep(&sub.cov, &target, &thetas).stage("analyze")?;
    let (cov, changed, nu_before) = if cfg.project {
        let p = project_physical(&sub.cov, ProjectionOptions::default()).stage("project")?;
        (p.cov, p.changed, p.nu_min_before)
    } else {
        (sub.cov.clone(), false, cvcs_core::estimator::min_symplectic_eigenvalue(&sub.cov))
    };
    let mut analysis = analyze(&cov, &target, cfg.lattice.kind, cfg.lattice.n_x, &thetas).stage("analyze")?;
    let jk = if accs.len() >= 2 {
        let jk = nullifier_jackknife(accs, &basis, chain.z_c, delta, &calib, &target, analysis.sweep.theta_star)
            .stage("jackknife")?;
        sigmas_below_vacuum(&jk)
    } else {
        None
    };
    analysis.nullifiers.jackknife_sigmas_below_vacuum = jk;
    let point = EstimatePoint {
        theta_star: analysis.sweep.theta_star,
        min_db: analysis.sweep.min_db,
        min_db_unprojected: unprojected.min_db,
        her: analysis.her.as_ref().map(|h| h.her),
        jackknife_sigmas_below_vacuum: jk,
        projection_changed: changed,
        nu_min_before_projection: nu_before,
        over_subtracted: sub.over_subtracted.len(),
    };
    Ok(EstimateOutput { point, analysis, cov })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointSummary {
    pub index: usize,
    pub g_over_g3db: f64,
    pub g_tau: f64,
    pub theta_star: f64,
    pub min_normalized: f64,
    pub min_db: f64,
    pub her: Option<f64>,
    pub hidden_over_canonical: Option<f64>,
    pub recovered_matches_target: bool,
    pub estimate: Option<EstimatePoint>,
}

#[derive(Serialize)]
struct AnalysisFile<'a> {
    sweep: &'a Sweep,
    nullifiers: &'a NullifierReport,
    her: &'a Option<HerReport>,
    condition: f64,
    asymmetry: f64,
    ridge: Option<f64>,
}

/// Write sweep, reports and `A`, `U` of one analysis into `dir` with a name
/// prefix.
pub fn write_analysis(dir: &Path, prefix: &str, meta: &Meta, a: &Analysis<f64>) -> CliResult<()> {
    let file = AnalysisFile {
        sweep: &a.sweep,
        nullifiers: &a.nullifiers,
        her: &a.her,
        condition: a.extraction.condition,
        asymmetry: a.extraction.asymmetry,
        ridge: a.extraction.ridge,
    };
    write_json(&dir.join(format!("{prefix}analysis.json")), meta, &file)?;
    let mut sweep = meta.csv_header();
    sweep.push_str("theta,mean_normalized_variance\n");
    for (t, v) in a.sweep.thetas.iter().zip(&a.sweep.values) {
        sweep.push_str(&format!("{},{}\n", fmt_num(*t), fmt_num(*v)));
    }
    write_file(&dir.join(format!("{prefix}sweep.csv")), sweep.as_bytes())?;
    write_matrix(&dir.join(format!("{prefix}A.csv")), meta, "A", &a.extraction.a)?;
    write_matrix(&dir.join(format!("{prefix}U.csv")), meta, "U", &a.extraction.u)?;
    Ok(())
}

fn run_point(cfg: &RunConfig, meta: &Meta, index: usize, g: f64) -> CliResult<PointSummary> {
    let dir = cfg.output_dir.join(format!("g{index:02}"));
    let target = cfg.target()?;
    let state = simulate(cfg, g)?;
    let thetas = theta_grid(cfg.theta_points);
    let sim = analyze(&state.cov, &target, cfg.lattice.kind, cfg.lattice.n_x, &thetas).stage("analyze")?;
    write_cov(&dir.join("V.csv"), meta, &state.cov)?;
    write_analysis(&dir, "", meta, &sim)?;
    let ratio = if cfg.lattice.kind == LatticeKind::SinglePump {
        None
    } else {
        let hidden = hidden_positions(&target, cfg.lattice.kind, cfg.lattice.n_x).stage("analyze")?;
        let rotated = state.cov.rotated_global(sim.sweep.theta_star);
        canonical_hidden_ratio(&rotated, &target, &hidden).ok()
    };
    let estimate = if cfg.windows > 0 {
        let chain = ChainConfig { seed: cfg.seed.wrapping_add(index as u64), ..cfg.chain.clone() };
        let accs = sample_into_blocks(&state, cfg.windows, &chain, cfg.jackknife_blocks)?;
        let est = estimate_and_analyze(cfg, &accs, &chain)?;
        write_cov(&dir.join("V_est.csv"), meta, &est.cov)?;
        write_analysis(&dir, "est_", meta, &est.analysis)?;
        Some(est.point)
    } else {
        None
    };
    Ok(PointSummary {
        index,
        g_over_g3db: g,
        g_tau: g * calibrate_g3db::<f64>(),
        theta_star: sim.sweep.theta_star,
        min_normalized: sim.sweep.min_value,
        min_db: sim.sweep.min_db,
        her: sim.her.as_ref().map(|h| h.her),
        hidden_over_canonical: ratio,
        recovered_matches_target: sim.recovered.unsigned() == target.unsigned(),
        estimate,
    })
}

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a RunConfig,
    points: &'a [PointSummary],
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

/// Run the whole ladder, points in parallel, and write the reports.
pub fn pipeline(cfg: &RunConfig) -> CliResult<Vec<PointSummary>> {
    cfg.validate()?;
    let meta = Meta::for_config(cfg);
    let results: Vec<CliResult<PointSummary>> =
        cfg.pump_amplitudes.par_iter().enumerate().map(|(i, &g)| run_point(cfg, &meta, i, g)).collect();
    let points = results.into_iter().collect::<CliResult<Vec<_>>>()?;

    let mut null = meta.csv_header();
    null.push_str("g_over_g3db,g_tau,theta_star,min_normalized,min_db,est_theta_star,est_min_db,est_min_db_unprojected,jackknife_sigmas_below_vacuum\n");
    let mut her = meta.csv_header();
    her.push_str("g_over_g3db,her,est_her,hidden_over_canonical\n");
    for p in &points {
        let e = p.estimate.as_ref();
        null.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            fmt_num(p.g_over_g3db),
            fmt_num(p.g_tau),
            fmt_num(p.theta_star),
            fmt_num(p.min_normalized),
            fmt_num(p.min_db),
            opt(e.map(|e| e.theta_star)),
            opt(e.map(|e| e.min_db)),
            opt(e.map(|e| e.min_db_unprojected)),
            opt(e.and_then(|e| e.jackknife_sigmas_below_vacuum)),
        ));
        her.push_str(&format!(
            "{},{},{},{}\n",
            fmt_num(p.g_over_g3db),
            opt(p.her),
            opt(e.and_then(|e| e.her)),
            opt(p.hidden_over_canonical),
        ));
    }
    write_file(&cfg.output_dir.join("nullifier_vs_g.csv"), null.as_bytes())?;
    write_file(&cfg.output_dir.join("her_vs_g.csv"), her.as_bytes())?;
    write_json(&cfg.output_dir.join("summary.json"), &meta, &Summary { config: cfg, points: &points })?;
    Ok(points)
}

/// Sidecar written next to an estimated or simulated covariance.
pub fn sidecar(
    cov: &CovarianceMatrix<f64>,
    basis: &ModeBasis,
    stages: Vec<String>,
    extra: &[(&str, String)],
) -> CovarianceSidecar {
    CovarianceSidecar {
        n_modes: cov.n_modes(),
        ordering: cov.ordering(),
        units: cov.units(),
        basis: basis.clone(),
        stages,
        meta: extra
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .chain([("nu_min".to_string(), fmt_num(cvcs_core::estimator::min_symplectic_eigenvalue(cov)))])
            .collect(),
    }
}

/// SHA-256 of a file's bytes.
pub fn file_hash(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Open a sample file written by `cvcs sample` (binary or CSV) and fold it
/// into `blocks` accumulators.
pub fn read_samples_into_blocks(
    path: &Path,
    blocks: usize,
) -> CliResult<(cvcs_core::chain::StreamHeader, Vec<CovarianceAccumulator<f64>>)> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = BufReader::new(file);
    let first = {
        use std::io::BufRead;
        let buf = reader.fill_buf().map_err(io_err(path))?;
        buf.first().copied()
    };
    let (header, chunks): (_, Box<dyn Iterator<Item = CliResult<nalgebra::DMatrix<f64>>>>) = match first {
        Some(b'{') => {
            let mut r = cvcs_core::chain::StreamReader::new(reader).stage("read samples")?;
            let header = r.header().clone();
            let mut out = Vec::new();
            while let Some(b) = r.next_block::<f64>().stage("read samples")? {
                out.push(Ok(b));
            }
            (header, Box::new(out.into_iter()))
        }
        Some(b'#') => {
            let (header, samples) = cvcs_core::chain::read_samples_csv::<f64, _>(reader).stage("read samples")?;
            (header, Box::new(std::iter::once(Ok(samples.data))))
        }
        _ => return Err(CliError::Config(format!("{}: not a sample stream", path.display()))),
    };
    let m = header.n_windows;
    let blocks = blocks.clamp(1, m.max(1));
    let dim = 2 * header.n_modes;
    Ok((header, fold_blocks(chunks, m, dim, blocks)?))
}

/// Write samples of one ladder point as a binary stream.
pub fn write_sample_stream(path: &Path, state: &GaussianState<f64>, m: usize, chain: &ChainConfig) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let file = File::create(path).map_err(io_err(path))?;
    let header = cvcs_core::chain::StreamHeader::new(state.basis.clone(), m, chain.clone());
    let mut w = cvcs_core::chain::StreamWriter::new(BufWriter::new(file), &header).stage("sample")?;
    for block in WindowStream::new(state, m, chain).stage("sample")? {
        w.write_block(&block).stage("sample")?;
    }
    w.finish().stage("sample")?.flush().map_err(io_err(path))?;
    Ok(())
}

/// Load a covariance CSV as a blocked photon-unit matrix.
pub fn read_cov(path: &Path) -> CliResult<CovarianceMatrix<f64>> {
    let file = File::open(path).map_err(io_err(path))?;
    let cov = cvcs_core::gaussian::io::read_covariance_csv::<f64, _>(BufReader::new(file)).stage("read covariance")?;
    Ok(cov.reorder(QuadratureOrdering::Blocked))
}
