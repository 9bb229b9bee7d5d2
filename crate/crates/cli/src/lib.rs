//! `maxp` command-line front end: synthesis, residual extraction, sparsity
//! metrics, polarity, DSM eigenvectors and the benchmark report.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use maxp_lp::lp::DEFAULT_ORDER;
use maxp_lp::maxp::{FirstPassInput, MaxPConfig, Method, DEFAULT_ANTICAUSAL_ORDER};
use maxp_lp::pitch::{detect_gci, estimate_f0, read_gci_file, GciConfig, GciTrack, PitchConfig};
use maxp_lp::resample::resample;
use maxp_lp::wav::read_wav;
use maxp_lp::SampleBuffer;

pub mod analysis;
pub mod bench;
pub mod manifest;
pub mod synth;

/// Environment variable overriding `--jobs`.
pub const JOBS_ENV: &str = "MAXP_JOBS";

#[derive(Debug, Parser)]
#[command(name = "maxp", version, about = "Maximum-phase sparse linear prediction toolkit")]
pub struct Cli {
    /// Worker threads (default: available cores; MAXP_JOBS overrides).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic mixed-phase corpus with ground truth.
    Synth(synth::SynthArgs),
    /// Residual WAV plus per-frame models.
    Residual(analysis::ResidualArgs),
    /// Sparsity of a signal and of its residual.
    Metrics(analysis::MetricsArgs),
    /// Polarity verdict; exit code 0 for +1, 1 for -1.
    Polarity(analysis::PolarityArgs),
    /// First eigenvectors of GCI-synchronous residual frames.
    Dsm(analysis::DsmArgs),
    /// Sparsity and computation-time report over a corpus manifest.
    Bench(bench::BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GciSourceArg {
    Auto,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FirstPass {
    Original,
    Preemphasized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse::<Method>().map_err(|e| e.to_string())
}

/// Analysis settings shared by the subcommands.
#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// lp2, wlp2, lp1, maxp_lp2, maxp_wlp2 or maxp_lp1.
    #[arg(long, default_value = "maxp_lp2", value_parser = parse_method)]
    pub method: Method,
    /// Total prediction order K.
    #[arg(long = "order", default_value_t = DEFAULT_ORDER)]
    pub order: usize,
    /// Anticausal order Ka.
    #[arg(long = "anticausal-order", default_value_t = DEFAULT_ANTICAUSAL_ORDER)]
    pub anticausal_order: usize,
    /// Preemphasis candidates for the filter 1 + alpha z^-1, comma separated
    /// (alpha = -1 is the first differencer).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-1,-0.7")]
    pub alphas: Vec<f64>,
    /// Signal the first MaxP inverse filter is applied to.
    #[arg(long = "first-pass", value_enum, default_value_t = FirstPass::Original)]
    pub first_pass: FirstPass,
    #[arg(long = "frame-ms", default_value_t = 25.0)]
    pub frame_ms: f64,
    #[arg(long = "hop-ms", default_value_t = 5.0)]
    pub hop_ms: f64,
    /// Input is resampled to this rate before analysis.
    #[arg(long = "target-rate", default_value_t = 8000.0)]
    pub target_rate: f64,
    #[arg(long = "gci-source", value_enum, default_value_t = GciSourceArg::Auto)]
    pub gci_source: GciSourceArg,
    /// GCI file (one time in seconds per line); implies `--gci-source file`.
    #[arg(long = "gci-file")]
    pub gci_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: Method::MaxpLp2,
            order: DEFAULT_ORDER,
            anticausal_order: DEFAULT_ANTICAUSAL_ORDER,
            alphas: maxp_lp::maxp::DEFAULT_ALPHAS.to_vec(),
            first_pass: FirstPass::Original,
            frame_ms: 25.0,
            hop_ms: 5.0,
            target_rate: 8000.0,
            gci_source: GciSourceArg::Auto,
            gci_file: None,
            format: OutputFormat::Json,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn maxp(&self) -> Result<MaxPConfig> {
        let cfg = MaxPConfig {
            total_order: self.order,
            anticausal_order: self.anticausal_order,
            alpha_candidates: self.alphas.clone(),
            base_method: self.method.base(),
            first_pass_input: match self.first_pass {
                FirstPass::Original => FirstPassInput::Original,
                FirstPass::Preemphasized => FirstPassInput::Preemphasized,
            },
            ..MaxPConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a WAV file and resamples it to the target rate.
    pub fn load(&self, path: &Path) -> Result<SampleBuffer> {
        let input = read_wav(path).with_context(|| format!("reading {}", path.display()))?;
        for w in &input.warnings {
            eprintln!("warning: {w}");
        }
        Ok(resample(&input.buffer, self.target_rate)?)
    }

    /// GCIs from `--gci-file`, or detected on `buffer` when the source is auto.
    pub fn gcis(&self, buffer: &SampleBuffer) -> Result<GciTrack> {
        match (&self.gci_file, self.gci_source) {
            (Some(path), _) => read_gci_file(path).with_context(|| format!("reading {}", path.display())),
            (None, GciSourceArg::File) => bail!("--gci-source file needs --gci-file"),
            (None, GciSourceArg::Auto) => {
                let f0 = estimate_f0(buffer, &PitchConfig::default())?;
                let cfg = GciConfig {
                    lp: self.maxp()?,
                    ..GciConfig::default()
                };
                Ok(detect_gci(buffer, &f0, &cfg)?)
            }
        }
    }

    pub fn gcis_if_needed(&self, buffer: &SampleBuffer, method: Method) -> Result<Option<GciTrack>> {
        if method.needs_gcis() {
            self.gcis(buffer).map(Some)
        } else {
            Ok(None)
        }
    }
}

/// Thread count: `MAXP_JOBS`, then `--jobs`, then rayon's default.
pub fn configure_jobs(flag: Option<usize>) -> Result<()> {
    let env = match std::env::var(JOBS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .with_context(|| format!("{JOBS_ENV} must be a positive integer, got {v:?}"))?,
        ),
        Err(_) => None,
    };
    if let Some(n) = env.or(flag) {
        if n == 0 {
            bail!("job count must be at least 1");
        }
        // A second initialization (e.g. in tests) keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    configure_jobs(cli.jobs)?;
    match cli.command {
        Command::Synth(a) => synth::run(&a),
        Command::Residual(a) => analysis::residual(&a),
        Command::Metrics(a) => analysis::metrics(&a),
        Command::Polarity(a) => analysis::polarity(&a),
        Command::Dsm(a) => analysis::dsm(&a),
        Command::Bench(a) => bench::run(&a),
    }
}
