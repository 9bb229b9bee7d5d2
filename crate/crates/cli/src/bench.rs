use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Args;

use maxp_lp::maxp::{analyze_utterance, Method};
use maxp_lp::metrics::{paired_t_test, sparsity_improvement, Metric};
use maxp_lp::pitch::{read_gci_file, GciTrack};
use maxp_lp::signal::{frame_signal, WindowKind};
use maxp_lp::SampleBuffer;

use crate::manifest::{resolve, Manifest};
use crate::RunConfig;

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Methods to compare, comma separated (default: all six).
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    /// Sparsity metrics, comma separated (default: kurtosis, hoyer, gini).
    #[arg(long, value_delimiter = ',')]
    pub metrics: Vec<String>,
    /// Report CSV (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunConfig,
}

pub const REPORT_HEADER: &str = "metric,method,frames,mean_improvement_pct,p_value_vs_conventional,timing_rct_pct,timing_factor_vs_conventional";

struct Utterance {
    buffer: SampleBuffer,
    gcis: Option<GciTrack>,
}

/// Frame key: (utterance, frame index).
type Key = (usize, usize);

struct MethodResult {
    /// Per metric, per-frame improvement in percent.
    improvements: HashMap<Metric, BTreeMap<Key, f64>>,
    compute_seconds: f64,
}

fn load_corpus(args: &BenchArgs, need_gcis: bool) -> Result<Vec<Utterance>> {
    let (manifest, base) = Manifest::read(&args.manifest)?;
    if manifest.utterances.is_empty() {
        bail!("manifest {} lists no utterances", args.manifest.display());
    }
    let run = &args.run;
    manifest
        .utterances
        .iter()
        .map(|entry| {
            let buffer = run.load(&resolve(&base, &entry.wav))?;
            let gcis = match (&entry.gci, need_gcis) {
                (_, false) => None,
                (Some(p), true) => {
                    let p = resolve(&base, p);
                    Some(read_gci_file(&p).with_context(|| format!("reading {}", p.display()))?)
                }
                (None, true) => Some(run.gcis(&buffer)?),
            };
            Ok(Utterance { buffer, gcis })
        })
        .collect()
}

fn evaluate(corpus: &[Utterance], method: Method, metrics: &[Metric], run: &RunConfig) -> Result<MethodResult> {
    let cfg = run.maxp()?;
    let mut improvements: HashMap<Metric, BTreeMap<Key, f64>> =
        metrics.iter().map(|m| (*m, BTreeMap::new())).collect();
    let mut compute_seconds = 0.0;
    for (u, utt) in corpus.iter().enumerate() {
        let started = Instant::now();
        let analysis = analyze_utterance(&utt.buffer, method, &cfg, utt.gcis.as_ref(), run.frame_ms, run.hop_ms)?;
        compute_seconds += started.elapsed().as_secs_f64();

        let speech = frame_signal(&utt.buffer, run.frame_ms, run.hop_ms, WindowKind::Hanning)?;
        let residual = frame_signal(&analysis.residual, run.frame_ms, run.hop_ms, WindowKind::Hanning)?;
        for ((rec, s), r) in analysis.frames.iter().zip(&speech.frames).zip(&residual.frames) {
            if rec.models.is_none() {
                continue;
            }
            for m in metrics {
                if let Ok(v) = sparsity_improvement(s.samples(), r.samples(), *m) {
                    if v.is_finite() {
                        improvements.get_mut(m).unwrap().insert((u, rec.index), 100.0 * v);
                    }
                }
            }
        }
    }
    Ok(MethodResult {
        improvements,
        compute_seconds,
    })
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn fmt(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else {
        String::new()
    }
}

/// Paired t-test p-value over the frames both methods could analyze.
fn p_value(a: &BTreeMap<Key, f64>, b: &BTreeMap<Key, f64>) -> f64 {
    let (x, y): (Vec<f64>, Vec<f64>) = a
        .iter()
        .filter_map(|(k, va)| b.get(k).map(|vb| (*va, *vb)))
        .unzip();
    paired_t_test(&x, &y).map(|t| t.p_value).unwrap_or(f64::NAN)
}

/// Relative sparsity improvement, significance against the conventional
/// counterpart and relative computation time for each (metric, method).
pub fn run(args: &BenchArgs) -> Result<i32> {
    let methods: Vec<Method> = if args.methods.is_empty() {
        Method::ALL.to_vec()
    } else {
        args.methods.iter().map(|s| s.parse::<Method>()).collect::<Result<_, _>>()?
    };
    let metrics: Vec<Metric> = if args.metrics.is_empty() {
        Metric::ALL.to_vec()
    } else {
        args.metrics.iter().map(|s| s.parse::<Metric>()).collect::<Result<_, _>>()?
    };
    let mut all = methods.clone();
    for m in &methods {
        if !all.contains(&m.conventional()) {
            all.push(m.conventional());
        }
    }
    let corpus = load_corpus(args, all.iter().any(|m| m.needs_gcis()))?;
    let audio_seconds: f64 = corpus.iter().map(|u| u.buffer.len() as f64 / u.buffer.rate()).sum();
    if audio_seconds <= 0.0 {
        bail!("corpus contains no audio");
    }

    let mut results = HashMap::new();
    for m in &all {
        results.insert(*m, evaluate(&corpus, *m, &metrics, &args.run)?);
    }
    let rct = |m: Method| 100.0 * results[&m].compute_seconds / audio_seconds;

    let mut out = String::new();
    out.push_str(REPORT_HEADER);
    out.push('\n');
    for metric in &metrics {
        for m in &methods {
            let imp = &results[m].improvements[metric];
            let base = m.conventional();
            let p = if base == *m {
                f64::NAN
            } else {
                p_value(imp, &results[&base].improvements[metric])
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                metric.name(),
                m.name(),
                imp.len(),
                fmt(mean(imp.values().copied())),
                if p.is_finite() { format!("{p:.6e}") } else { String::new() },
                fmt(rct(*m)),
                fmt(rct(*m) / rct(base)),
            ));
        }
    }
    match &args.output {
        Some(path) => std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(out.as_bytes())?,
    }
    Ok(0)
}
