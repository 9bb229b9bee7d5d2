use maxp_lp::apps::{detect_polarity, extract_residual_frames, pca, PolarityConfig};
use maxp_lp::maxp::{analyze_utterance, maxp_analyze, FirstPassInput, FrameModels, MaxPConfig, Method};
use maxp_lp::pitch::{detect_gci, estimate_f0, GciConfig, PitchConfig};
use maxp_lp::signal::{hanning, Frame, SampleBuffer, WindowKind};
use maxp_lp::synth::{corpus_spec, make_corpus, synthesize, CorpusRanges};
use maxp_lp::wav::{read_wav, write_wav_f32};

fn noiseless() -> CorpusRanges {
    CorpusRanges {
        snr_db: None,
        ..CorpusRanges::default()
    }
}

#[test]
fn true_filters_recover_the_excitation() {
    for truth in make_corpus(6, &noiseless(), 11).unwrap() {
        let models = FrameModels {
            causal: truth.causal_filter.clone(),
            anticausal: Some(truth.anticausal_filter.clone()),
            alpha: None,
        };
        let r = models.apply(truth.signal.samples());
        let e = truth.excitation.samples();
        let err: f64 = r.iter().zip(e).map(|(a, b)| (a - b).powi(2)).sum();
        let energy: f64 = e.iter().map(|v| v * v).sum();
        assert!((err / energy).sqrt() < 1e-6);
    }
}

#[test]
fn minimum_phase_frame_needs_little_second_stage() {
    let mut spec = corpus_spec(&noiseless(), 5, 0);
    spec.glottal = None;
    let truth = synthesize(&spec).unwrap();
    let w = hanning(200);
    let start = 2000;
    let x: Vec<f64> = truth.signal.samples()[start..start + 200]
        .iter()
        .zip(&w)
        .map(|(a, b)| a * b)
        .collect();
    let frame = Frame::new(x, start, WindowKind::Hanning, spec.rate).unwrap();
    // Filtering the preemphasized frame leaves a white first residual.
    let cfg = MaxPConfig {
        first_pass_input: FirstPassInput::Preemphasized,
        ..MaxPConfig::default()
    };
    let r = maxp_analyze(&frame, &cfg, None).unwrap();
    for b in r.anticausal_model.coefficients() {
        assert!(b.abs() < 0.15, "anticausal coefficient {b}");
    }
    // Filtering the original frame leaves the preemphasis tilt, which the
    // second stage picks up as b1 = -alpha.
    let r = maxp_analyze(&frame, &MaxPConfig::default(), None).unwrap();
    let b = r.anticausal_model.coefficients();
    assert!((b[0] + r.alpha_chosen).abs() < 0.1, "{b:?} for alpha {}", r.alpha_chosen);
    assert!(b[1].abs() < 0.15);
}

#[test]
fn detected_gcis_follow_f0() {
    for truth in make_corpus(4, &noiseless(), 21).unwrap() {
        let f0 = estimate_f0(&truth.signal, &PitchConfig::default()).unwrap();
        let gcis = detect_gci(&truth.signal, &f0, &GciConfig::default()).unwrap();
        let t = gcis.instants();
        assert!(t.len() > 10);
        assert!(t.windows(2).all(|p| p[1] > p[0]));
        let mut consistent = 0;
        for p in t.windows(2) {
            let expected = 1.0 / f0.at(p[0]).max(1.0);
            if ((p[1] - p[0]) / expected - 1.0).abs() <= 0.2 {
                consistent += 1;
            }
        }
        assert!(consistent as f64 >= 0.9 * (t.len() - 1) as f64, "{consistent}/{}", t.len() - 1);
    }
}

#[test]
fn f0_ignores_amplitude() {
    let truth = &make_corpus(1, &CorpusRanges::default(), 4).unwrap()[0];
    let a = estimate_f0(&truth.signal, &PitchConfig::default()).unwrap();
    let b = estimate_f0(&truth.signal.scaled(0.013), &PitchConfig::default()).unwrap();
    assert_eq!(a.times, b.times);
    assert_eq!(a.voiced_count(), b.voiced_count());
    for t in &a.times {
        assert!((a.at(*t) - b.at(*t)).abs() < 1e-6);
    }
}

#[test]
fn polarity_flips_with_the_signal() {
    let cfg = PolarityConfig::default();
    for truth in make_corpus(3, &CorpusRanges::default(), 8).unwrap() {
        let flipped = truth.signal.scaled(-1.0);
        for method in [Method::MaxpLp2, Method::Lp2] {
            let a = detect_polarity(&truth.signal, method, &cfg).unwrap();
            let b = detect_polarity(&flipped, method, &cfg).unwrap();
            assert_eq!(a.polarity, -b.polarity);
            assert!((a.differenced_skewness.abs() - b.differenced_skewness.abs()).abs() < 1e-9);
        }
    }
}

#[test]
fn eigenmodel_is_orthonormal_and_sorted() {
    let truth = &make_corpus(1, &CorpusRanges::default(), 2).unwrap()[0];
    let cfg = MaxPConfig::default();
    let analysis = analyze_utterance(&truth.signal, Method::MaxpLp2, &cfg, None, 25.0, 5.0).unwrap();
    let f0 = estimate_f0(&truth.signal, &PitchConfig::default()).unwrap();
    let frames = extract_residual_frames(&analysis.residual, &truth.gcis, &f0, 64).unwrap();
    assert!(!frames.insufficient);
    let model = pca(&frames.rows).unwrap();
    assert_eq!(model.eigenvectors.len(), 64);
    assert!(model.eigenvalues.windows(2).all(|p| p[0] >= p[1]));
    for (i, u) in model.eigenvectors.iter().enumerate() {
        for (j, v) in model.eigenvectors.iter().enumerate() {
            let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
            let expected = if i == j { 1.0 } else { 0.0 };
            assert!((dot - expected).abs() < 1e-9);
        }
    }
    let last = *model.cumulative_variance.last().unwrap();
    assert!((last - 1.0).abs() < 1e-12);
}

#[test]
fn wav_round_trip_keeps_float_samples() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.wav");
    let truth = &make_corpus(1, &CorpusRanges::default(), 1).unwrap()[0];
    write_wav_f32(&path, &truth.signal).unwrap();
    let back = read_wav(&path).unwrap();
    assert_eq!(back.buffer.len(), truth.signal.len());
    assert_eq!(back.buffer.rate(), truth.signal.rate());
    for (a, b) in back.buffer.samples().iter().zip(truth.signal.samples()) {
        assert!((a - b).abs() <= 1e-7 * b.abs().max(1e-3));
    }
    let silent = SampleBuffer::zeros(10, 8000.0).unwrap();
    write_wav_f32(&path, &silent).unwrap();
    assert!(read_wav(&path).unwrap().buffer.samples().iter().all(|v| *v == 0.0));
}
