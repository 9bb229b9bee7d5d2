use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use maxp_lp::pitch::write_gci_file;
use maxp_lp::synth::{make_corpus, CorpusRanges};
use maxp_lp::wav::write_wav_f32;

use crate::manifest::{Manifest, ManifestEntry};

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seconds per utterance.
    #[arg(long, default_value_t = 1.0)]
    pub duration: f64,
    #[arg(long, default_value_t = 8000.0)]
    pub rate: f64,
    /// Leave out the additive noise.
    #[arg(long)]
    pub noiseless: bool,
}

/// Writes `utt_NNN.wav`, `.truth.json` and `.gci` per utterance plus
/// `manifest.json`.
pub fn run(args: &SynthArgs) -> Result<i32> {
    let ranges = CorpusRanges {
        rate: args.rate,
        duration: args.duration,
        snr_db: if args.noiseless { None } else { CorpusRanges::default().snr_db },
        ..CorpusRanges::default()
    };
    let corpus = make_corpus(args.count, &ranges, args.seed)?;
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let mut utterances = Vec::with_capacity(corpus.len());
    for (i, truth) in corpus.iter().enumerate() {
        let id = format!("utt_{i:03}");
        let wav = PathBuf::from(format!("{id}.wav"));
        let truth_path = PathBuf::from(format!("{id}.truth.json"));
        let gci = PathBuf::from(format!("{id}.gci"));
        write_wav_f32(args.out_dir.join(&wav), &truth.signal)?;
        let json = serde_json::to_string_pretty(&truth.record())?;
        std::fs::write(args.out_dir.join(&truth_path), json + "\n")?;
        write_gci_file(&truth.gcis, args.out_dir.join(&gci))?;
        utterances.push(ManifestEntry {
            id,
            wav,
            truth: Some(truth_path),
            gci: Some(gci),
            spec: Some(truth.spec.clone()),
        });
    }
    let manifest = Manifest {
        seed: Some(args.seed),
        utterances,
    };
    let path = args.out_dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    println!("{}", path.display());
    Ok(0)
}
