use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cvcs_cli::{
    estimate_and_analyze, file_hash, pipeline, read_cov, read_samples_into_blocks, render_graph, sidecar, simulate,
    synth, write_analysis, write_cov, write_file, write_json, write_sample_stream, CliError, CliResult, Meta,
    RunConfig,
};
use cvcs_core::analysis::{analyze, theta_grid};
use cvcs_core::chain::{write_samples_csv, AddedNoise};
use cvcs_core::estimator::CalibrationRecord;
use cvcs_core::lattice::{GraphFormat, LatticeKind};
use cvcs_core::pumpsynth::{expected_adjacency, PiTone};

#[derive(Parser)]
#[command(name = "cvcs", version, about = "Cluster-state synthesis, simulation and analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// JSON run configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// square, honeycomb or single_pump.
    #[arg(long)]
    lattice: Option<String>,
    /// Number of comb modes.
    #[arg(long)]
    n: Option<usize>,
    /// Lattice circumference N_x.
    #[arg(long)]
    nx: Option<usize>,
    /// Honeycomb tone carrying the pi phase: plus1, minus1 or vertical.
    #[arg(long)]
    pi_tone: Option<String>,
    /// Comma-separated pump amplitudes in units of g_3dB.
    #[arg(long, value_delimiter = ',')]
    g: Option<Vec<f64>>,
    /// Output transmissivity in [0, 1].
    #[arg(long)]
    eta: Option<f64>,
    /// Windows per ladder point; 0 skips sampling.
    #[arg(long)]
    windows: Option<usize>,
    /// Points of the quadrature-rotation sweep over [0, pi).
    #[arg(long)]
    theta_points: Option<usize>,
    /// Added noise in photons per quadrature, all modes.
    #[arg(long)]
    noise: Option<f64>,
    /// Chain power gain in dB.
    #[arg(long)]
    gain_db: Option<f64>,
    /// Phase-delay slope in rad/MHz.
    #[arg(long)]
    tau_d: Option<f64>,
    /// Sampler seed; ladder point i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Skip the physicality projection of estimates.
    #[arg(long)]
    no_project: bool,
    /// Output directory.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn resolve(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        if let Some(kind) = &self.lattice {
            cfg.lattice.kind = parse_enum::<LatticeKind>(kind, "lattice")?;
            if cfg.lattice.kind == LatticeKind::SinglePump {
                cfg.lattice.n_x = 1;
            }
        }
        if let Some(n) = self.n {
            cfg.lattice.n = n;
        }
        if let Some(nx) = self.nx {
            cfg.lattice.n_x = nx;
        }
        if let Some(t) = &self.pi_tone {
            cfg.pi_tone = parse_enum::<PiTone>(t, "pi tone")?;
        }
        if let Some(g) = &self.g {
            cfg.pump_amplitudes = g.clone();
        }
        if let Some(eta) = self.eta {
            cfg.loss_eta = eta;
        }
        if let Some(m) = self.windows {
            cfg.windows = m;
        }
        if let Some(t) = self.theta_points {
            cfg.theta_points = t;
        }
        if let Some(noise) = self.noise {
            cfg.chain.added_noise_photons = AddedNoise::Uniform(noise);
        }
        if let Some(g) = self.gain_db {
            cfg.chain.gain_db = g;
        }
        if let Some(t) = self.tau_d {
            cfg.chain.tau_d_rad_per_mhz = t;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if self.no_project {
            cfg.project = false;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_enum<T: serde::de::DeserializeOwned>(s: &str, what: &str) -> CliResult<T> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| CliError::Config(format!("unknown {what} {s:?}")))
}

#[derive(Subcommand)]
enum Command {
    /// Write the pump scheme and its predicted graph.
    Synth {
        #[command(flatten)]
        o: Overrides,
    },
    /// Simulate the first ladder point and write its covariance.
    Simulate {
        #[command(flatten)]
        o: Overrides,
    },
    /// Draw chain windows for the first ladder point.
    Sample {
        #[command(flatten)]
        o: Overrides,
        /// Write CSV instead of the binary stream.
        #[arg(long)]
        csv: bool,
    },
    /// Invert the chain for a sample file.
    Estimate {
        #[command(flatten)]
        o: Overrides,
        #[arg(long)]
        samples: PathBuf,
        /// Calibration record; defaults to the stream's own chain settings.
        #[arg(long)]
        calibration: Option<PathBuf>,
    },
    /// Nullifier sweep, (A, U) and HER of a covariance file.
    Analyze {
        #[command(flatten)]
        o: Overrides,
        #[arg(long)]
        cov: PathBuf,
    },
    /// Simulate, optionally sample and estimate, and analyze every ladder point.
    Pipeline {
        #[command(flatten)]
        o: Overrides,
    },
    /// Export the target graph, or the graph recovered from a covariance.
    Export {
        #[command(flatten)]
        o: Overrides,
        /// dot or edge_csv.
        #[arg(long, default_value = "dot")]
        format: String,
        #[arg(long)]
        cov: Option<PathBuf>,
    },
}

fn first_g(cfg: &RunConfig) -> f64 {
    cfg.pump_amplitudes.first().copied().unwrap_or(0.0)
}

fn run(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Synth { o } => {
            let cfg = o.resolve()?;
            synth(&cfg, first_g(&cfg), &cfg.output_dir)
        }
        Command::Simulate { o } => {
            let cfg = o.resolve()?;
            let meta = Meta::for_config(&cfg);
            let state = simulate(&cfg, first_g(&cfg))?;
            write_cov(&cfg.output_dir.join("V.csv"), &meta, &state.cov)?;
            let side = sidecar(&state.cov, &state.basis, vec!["simulate".into(), "loss".into()], &[]);
            write_json(&cfg.output_dir.join("V.json"), &meta, &side)
        }
        Command::Sample { o, csv } => {
            let cfg = o.resolve()?;
            if cfg.windows < 2 {
                return Err(CliError::Config("sample needs --windows >= 2".into()));
            }
            let state = simulate(&cfg, first_g(&cfg))?;
            let chain = cvcs_core::chain::ChainConfig { seed: cfg.seed, ..cfg.chain.clone() };
            if csv {
                let samples = cvcs_core::chain::sample_windows(&state, cfg.windows, &chain)
                    .map_err(|source| CliError::Stage { stage: "sample", source })?;
                let mut buf = Vec::new();
                write_samples_csv(&mut buf, &samples, &chain)
                    .map_err(|source| CliError::Stage { stage: "sample", source })?;
                write_file(&cfg.output_dir.join("samples.csv"), &buf)
            } else {
                write_sample_stream(&cfg.output_dir.join("samples.bin"), &state, cfg.windows, &chain)
            }
        }
        Command::Estimate { o, samples, calibration } => {
            let cfg = o.resolve()?;
            let (header, accs) = read_samples_into_blocks(&samples, cfg.jackknife_blocks)?;
            if header.basis.count != cfg.lattice.n {
                return Err(CliError::Config(format!(
                    "sample stream has {} modes, configuration {}",
                    header.basis.count, cfg.lattice.n
                )));
            }
            let mut chain = header.config.clone();
            let mut calib_hash = String::from("stream");
            if let Some(path) = &calibration {
                let text =
                    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
                let rec = CalibrationRecord::from_json(&text)
                    .map_err(|source| CliError::Stage { stage: "calibration", source })?;
                rec.validate(header.basis.count).map_err(|source| CliError::Stage { stage: "calibration", source })?;
                chain = chain_from_record(&chain, &rec)?;
                calib_hash = file_hash(path)?;
            }
            let meta = Meta::for_config(&cfg);
            let est = estimate_and_analyze(&cfg, &accs, &chain)?;
            write_cov(&cfg.output_dir.join("V_est.csv"), &meta, &est.cov)?;
            let mut stages: Vec<String> =
                ["estimate", "phase_correction", "gain_division", "noise_subtraction"].map(String::from).to_vec();
            if est.point.projection_changed {
                stages.push("physicality_projection".into());
            }
            let side = sidecar(&est.cov, &header.basis, stages, &[("calibration_sha256", calib_hash)]);
            write_json(&cfg.output_dir.join("V_est.json"), &meta, &side)?;
            write_analysis(&cfg.output_dir, "est_", &meta, &est.analysis)
        }
        Command::Analyze { o, cov } => {
            let cfg = o.resolve()?;
            let v = read_cov(&cov)?;
            let target = cfg.target()?;
            let a = analyze(&v, &target, cfg.lattice.kind, cfg.lattice.n_x, &theta_grid(cfg.theta_points))
                .map_err(|source| CliError::Stage { stage: "analyze", source })?;
            write_analysis(&cfg.output_dir, "", &Meta::for_config(&cfg), &a)
        }
        Command::Pipeline { o } => {
            let cfg = o.resolve()?;
            let points = pipeline(&cfg)?;
            for p in points {
                log::info!("g/g3dB = {}: min {:.3} dB at theta {:.4}", p.g_over_g3db, p.min_db, p.theta_star);
            }
            Ok(())
        }
        Command::Export { o, format, cov } => {
            let cfg = o.resolve()?;
            let fmt: GraphFormat = format.parse().map_err(|source| CliError::Stage { stage: "export", source })?;
            let adj = match &cov {
                Some(path) => {
                    let v = read_cov(path)?;
                    let target = cfg.target()?;
                    analyze(&v, &target, cfg.lattice.kind, cfg.lattice.n_x, &theta_grid(cfg.theta_points))
                        .map_err(|source| CliError::Stage { stage: "analyze", source })?
                        .recovered
                }
                None => expected_adjacency(&cfg.scheme(1.0)?),
            };
            let name = match fmt {
                GraphFormat::Dot => "graph.dot",
                GraphFormat::EdgeCsv => "graph.csv",
            };
            write_file(&cfg.output_dir.join(name), render_graph(&adj, fmt, &Meta::for_config(&cfg)).as_bytes())
        }
    }
}

/// Chain settings whose calibration equals `rec`. Per-mode gains must agree,
/// since the chain model has a single gain.
fn chain_from_record(
    base: &cvcs_core::chain::ChainConfig,
    rec: &CalibrationRecord,
) -> CliResult<cvcs_core::chain::ChainConfig> {
    let g = rec.gain_db.first().copied().unwrap_or(0.0);
    if rec.gain_db.iter().any(|x| *x != g) {
        return Err(CliError::Config("per-mode gains must be equal for this chain model".into()));
    }
    Ok(cvcs_core::chain::ChainConfig {
        gain_db: g,
        added_noise_photons: AddedNoise::PerMode(rec.added_noise_photons.clone()),
        tau_d_rad_per_mhz: rec.tau_d_rad_per_mhz,
        ..base.clone()
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
