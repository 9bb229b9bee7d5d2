use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use serde::Serialize;

use maxp_lp::apps::dsm::DEFAULT_NORM_LENGTH;
use maxp_lp::apps::{
    detect_polarity, extract_residual_frames, pca, pulse_concentration, EigenModel, PolarityConfig,
};
use maxp_lp::maxp::{analyze_utterance, Method};
use maxp_lp::metrics::{Metric, SparsityReport};
use maxp_lp::pitch::{estimate_f0, PitchConfig};
use maxp_lp::wav::write_wav_f32;

use crate::{OutputFormat, RunConfig};

#[derive(Debug, Args)]
pub struct ResidualArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Residual WAV (32-bit float).
    #[arg(long)]
    pub output: PathBuf,
    /// Per-frame report; defaults to the output path with a .json or .csv
    /// extension.
    #[arg(long)]
    pub frames: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunConfig,
}

#[derive(Debug, Serialize)]
struct FrameOut {
    index: usize,
    start: usize,
    alpha_chosen: Option<f64>,
    gini: Option<f64>,
    causal: Option<Vec<f64>>,
    anticausal: Option<Vec<f64>>,
}

#[derive(Debug, Serialize)]
struct FramesReport {
    method: Method,
    rate: f64,
    frame_length: usize,
    hop: usize,
    order: usize,
    anticausal_order: Option<usize>,
    frames: Vec<FrameOut>,
}

fn csv_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn residual(args: &ResidualArgs) -> Result<i32> {
    let run = &args.run;
    let cfg = run.maxp()?;
    let buffer = run.load(&args.input)?;
    let gcis = run.gcis_if_needed(&buffer, run.method)?;
    let analysis = analyze_utterance(&buffer, run.method, &cfg, gcis.as_ref(), run.frame_ms, run.hop_ms)?;
    write_wav_f32(&args.output, &analysis.residual)?;

    let frames: Vec<FrameOut> = analysis
        .frames
        .iter()
        .map(|f| FrameOut {
            index: f.index,
            start: f.start,
            alpha_chosen: f.models.as_ref().and_then(|m| m.alpha),
            gini: f.gini,
            causal: f.models.as_ref().map(|m| m.causal.coefficients().to_vec()),
            anticausal: f
                .models
                .as_ref()
                .and_then(|m| m.anticausal.as_ref().map(|b| b.coefficients().to_vec())),
        })
        .collect();
    let ext = match run.format {
        OutputFormat::Json => "json",
        OutputFormat::Csv => "csv",
    };
    let frames_path = args.frames.clone().unwrap_or_else(|| args.output.with_extension(ext));
    match run.format {
        OutputFormat::Json => {
            let report = FramesReport {
                method: run.method,
                rate: buffer.rate(),
                frame_length: analysis.grid.length,
                hop: analysis.grid.hop,
                order: cfg.total_order,
                anticausal_order: run.method.is_maxp().then_some(cfg.anticausal_order),
                frames,
            };
            std::fs::write(&frames_path, serde_json::to_string_pretty(&report)? + "\n")?;
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_path(&frames_path)?;
            w.write_record(["index", "start", "alpha_chosen", "gini"])?;
            for f in &frames {
                w.write_record([
                    f.index.to_string(),
                    f.start.to_string(),
                    csv_opt(f.alpha_chosen),
                    csv_opt(f.gini),
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(0)
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub run: RunConfig,
}

#[derive(Debug, Serialize)]
struct MetricsOut {
    method: Method,
    speech: SparsityReport,
    residual: SparsityReport,
    improvement_pct: Improvement,
}

#[derive(Debug, Serialize)]
struct Improvement {
    kurtosis: f64,
    hoyer: f64,
    gini: f64,
}

/// Sparsity of the whole signal and of its residual, with the relative
/// improvement in percent.
pub fn metrics(args: &MetricsArgs) -> Result<i32> {
    let run = &args.run;
    let cfg = run.maxp()?;
    let buffer = run.load(&args.input)?;
    let gcis = run.gcis_if_needed(&buffer, run.method)?;
    let analysis = analyze_utterance(&buffer, run.method, &cfg, gcis.as_ref(), run.frame_ms, run.hop_ms)?;
    let speech = SparsityReport::of(buffer.samples())?;
    let residual = SparsityReport::of(analysis.residual.samples())?;
    let pct = |m: Metric| 100.0 * (residual.get(m) - speech.get(m)) / speech.get(m);
    let improvement = Improvement {
        kurtosis: pct(Metric::Kurtosis),
        hoyer: pct(Metric::Hoyer),
        gini: pct(Metric::Gini),
    };
    match run.format {
        OutputFormat::Json => {
            let out = MetricsOut {
                method: run.method,
                speech,
                residual,
                improvement_pct: improvement,
            };
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            w.write_record(["signal", "n", "kurtosis", "hoyer", "gini"])?;
            for (name, r) in [("speech", &speech), ("residual", &residual)] {
                w.write_record([
                    name.to_string(),
                    r.n.to_string(),
                    r.kurtosis.to_string(),
                    r.hoyer.to_string(),
                    r.gini.to_string(),
                ])?;
            }
            w.write_record([
                "improvement_pct".to_string(),
                String::new(),
                improvement.kurtosis.to_string(),
                improvement.hoyer.to_string(),
                improvement.gini.to_string(),
            ])?;
            w.flush()?;
        }
    }
    Ok(0)
}

#[derive(Debug, Args)]
pub struct PolarityArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub run: RunConfig,
}

/// Prints the verdict as JSON; exit code 0 for +1 and 1 for -1.
pub fn polarity(args: &PolarityArgs) -> Result<i32> {
    let run = &args.run;
    let buffer = run.load(&args.input)?;
    let cfg = PolarityConfig {
        lp: run.maxp()?,
        win_ms: run.frame_ms,
        hop_ms: run.hop_ms,
        ..PolarityConfig::default()
    };
    let verdict = detect_polarity(&buffer, run.method, &cfg)?;
    if verdict.low_confidence {
        eprintln!("warning: low-confidence polarity verdict");
    }
    println!("{}", serde_json::to_string_pretty(&verdict)?);
    Ok(if verdict.polarity > 0 { 0 } else { 1 })
}

#[derive(Debug, Args)]
pub struct DsmArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Samples per normalized frame (even, at least 32).
    #[arg(long = "norm-length", default_value_t = DEFAULT_NORM_LENGTH)]
    pub norm_length: usize,
    /// Half-width of the concentration window around the frame center.
    #[arg(long = "halfwidth-ms", default_value_t = 0.5)]
    pub halfwidth_ms: f64,
    /// Writes `<prefix>.eigenvectors.csv` and `<prefix>.json`.
    #[arg(long = "out-prefix")]
    pub out_prefix: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunConfig,
}

#[derive(Debug, Serialize)]
struct DsmOut<'a> {
    method: Method,
    frames: usize,
    norm_length: usize,
    concentration: f64,
    components_for_90pct: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<&'a EigenModel>,
}

pub fn dsm(args: &DsmArgs) -> Result<i32> {
    let run = &args.run;
    let cfg = run.maxp()?;
    let buffer = run.load(&args.input)?;
    let gcis = run.gcis(&buffer)?;
    if gcis.len() < 2 {
        bail!("need at least 2 glottal closure instants, found {}", gcis.len());
    }
    let f0 = estimate_f0(&buffer, &PitchConfig::default())?;
    let analysis = analyze_utterance(&buffer, run.method, &cfg, Some(&gcis), run.frame_ms, run.hop_ms)?;
    let frames = extract_residual_frames(&analysis.residual, &gcis, &f0, args.norm_length)?;
    if frames.insufficient {
        bail!("only {} usable GCI-synchronous frames, need at least 2", frames.len());
    }
    let model = pca(&frames.rows)?;
    let summary = |with_model: bool| DsmOut {
        method: run.method,
        frames: frames.len(),
        norm_length: args.norm_length,
        concentration: pulse_concentration(model.first(), args.halfwidth_ms, buffer.rate())
            .unwrap_or(0.0),
        components_for_90pct: model.components_for(0.9),
        model: with_model.then_some(&model),
    };
    if let Some(prefix) = &args.out_prefix {
        let csv_path = PathBuf::from(format!("{}.eigenvectors.csv", prefix.display()));
        std::fs::write(csv_path, model.eigenvectors_csv())?;
        let json_path = PathBuf::from(format!("{}.json", prefix.display()));
        std::fs::write(json_path, serde_json::to_string_pretty(&summary(true))? + "\n")?;
    }
    println!("{}", serde_json::to_string_pretty(&summary(false))?);
    Ok(0)
}
