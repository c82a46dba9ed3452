//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line (visible with `cargo test --test acceptance -- --nocapture`).

use std::path::PathBuf;
use std::time::Instant;

use cgrnn_core::data::{generate_synthetic, SynthSpec};
use cgrnn_core::dsp::{
    compute_ild, compute_imd, compute_ipd, extract_basic, hann_window, stft_frame, BasicKind,
    Complex, FftPlan, FrameGrid, StereoSpectrum, Waveform,
};
use cgrnn_core::eval::compute_eer;
use cgrnn_core::gradcheck::GRAD_TOLERANCE;
use cgrnn_core::model::gradsuite::{check_full_model, run_layer_suite};
use cgrnn_core::model::{
    gru_cell_forward, init_params, load_checkpoint, model_forward, save_checkpoint, CellKind,
    ConvStreamConfig, GruWeights, ModelConfig,
};
use cgrnn_core::train::{load_dataset, train_fold, LoadedChunk, TrainConfig};
use cgrnn_core::Rng;

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cgrnn-acceptance-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

// ---------------------------------------------------------------------------
// Criterion 1: gradient suite over >= 20 seeds, relative error < 1e-5,
// 64-bit, under one minute.
// ---------------------------------------------------------------------------
#[test]
fn criterion_1_gradient_suite() {
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 1..=20u64 {
        for check in run_layer_suite(seed, None).unwrap() {
            assert!(
                check.pass,
                "criterion 1 FAIL: seed {seed}, layer {} rel err {} at {}[{}]",
                check.layer, check.worst_rel, check.worst_tensor, check.worst_index
            );
            worst = worst.max(check.worst_rel);
        }
        let full = check_full_model(seed, seed % 2 == 0, 4).unwrap();
        assert!(
            full.pass,
            "criterion 1 FAIL: seed {seed}, full model rel err {} at {}[{}]",
            full.worst_rel, full.worst_tensor, full.worst_index
        );
        worst = worst.max(full.worst_rel);
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "criterion 1 FAIL: took {elapsed:.1}s (>= 60s)");
    println!(
        "[PASS] criterion 1: conv-gmp/gru/simple-rnn/dense/bce + full tiny model match finite \
         differences over 20 seeds, worst rel err {worst:.2e} < {GRAD_TOLERANCE:.0e}, {elapsed:.1}s"
    );
}

// ---------------------------------------------------------------------------
// Criterion 2: GRU analytic point test and state boundedness.
// ---------------------------------------------------------------------------
#[test]
fn criterion_2_gru_point_and_boundedness() {
    // Zero weights: h_t = 0.5 * h_{t-1} exactly (bitwise).
    let w = GruWeights::<f64>::zeros(8, 5);
    let mut rng = Rng::new(2024);
    for _ in 0..50 {
        let h_prev: Vec<f64> = (0..8).map(|_| rng.range(-1.0, 1.0)).collect();
        let x: Vec<f64> = (0..5).map(|_| rng.range(-5.0, 5.0)).collect();
        let (h, _) = gru_cell_forward(&x, &h_prev, &w, CellKind::Gru).unwrap();
        for (ht, hp) in h.iter().zip(&h_prev) {
            assert_eq!(
                ht.to_bits(),
                (0.5 * hp).to_bits(),
                "criterion 2 FAIL: zero-weight cell is not exactly half the state"
            );
        }
    }

    // Boundedness over 1000-step random rollouts.
    for seed in 0..5u64 {
        let mut rng = Rng::new(3000 + seed);
        let w = GruWeights::<f64> {
            wr: rng.uniform_tensor(6, 3, -1.5, 1.5),
            wz: rng.uniform_tensor(6, 3, -1.5, 1.5),
            wh: rng.uniform_tensor(6, 3, -1.5, 1.5),
            rr: rng.uniform_tensor(6, 6, -1.5, 1.5),
            rz: rng.uniform_tensor(6, 6, -1.5, 1.5),
            rh: rng.uniform_tensor(6, 6, -1.5, 1.5),
            br: rng.uniform_tensor(1, 6, -0.5, 0.5),
            bz: rng.uniform_tensor(1, 6, -0.5, 0.5),
            bh: rng.uniform_tensor(1, 6, -0.5, 0.5),
        };
        let mut h: Vec<f64> = (0..6).map(|_| rng.range(-1.0, 1.0)).collect();
        for step in 0..1000 {
            let x = [rng.range(-4.0, 4.0), rng.range(-4.0, 4.0), rng.range(-4.0, 4.0)];
            let (h_new, _) = gru_cell_forward(&x, &h, &w, CellKind::Gru).unwrap();
            h = h_new;
            assert!(
                h.iter().all(|v| v.abs() <= 1.0),
                "criterion 2 FAIL: state left [-1,1] at step {step} (seed {seed})"
            );
        }
    }
    println!(
        "[PASS] criterion 2: zero-weight GRU halves the state exactly; 1000-step rollouts stay \
         inside [-1, 1]"
    );
}

// ---------------------------------------------------------------------------
// Criterion 3: DSP analytic values, channel-swap antisymmetry, Parseval.
// ---------------------------------------------------------------------------

/// Direct O(n^2) DFT oracle (independent of the FFT implementation).
fn dft_direct(signal: &[f64]) -> Vec<Complex<f64>> {
    let n = signal.len();
    (0..n / 2 + 1)
        .map(|k| {
            let mut re = 0.0;
            let mut im = 0.0;
            for (i, &x) in signal.iter().enumerate() {
                let angle = -2.0 * std::f64::consts::PI * (k * i) as f64 / n as f64;
                re += x * angle.cos();
                im += x * angle.sin();
            }
            Complex::new(re, im)
        })
        .collect()
}

fn one_frame_spectrum(left: Vec<Complex<f64>>, right: Vec<Complex<f64>>) -> StereoSpectrum<f64> {
    use cgrnn_core::dsp::features::ComplexSpectrogram;
    StereoSpectrum {
        left: ComplexSpectrogram::from_rows(1, left),
        right: ComplexSpectrogram::from_rows(1, right),
    }
}

#[test]
fn criterion_3_dsp_analytic() {
    // ILD(2, 1) = 20 log10 2 dB.
    let spec = one_frame_spectrum(
        vec![Complex::new(2.0, 0.0); 257],
        vec![Complex::new(1.0, 0.0); 257],
    );
    let ild = compute_ild(&spec);
    for &v in ild.data.data() {
        assert!(
            (v - 6.020599913279624).abs() < 1e-9,
            "criterion 3 FAIL: ILD(2,1) = {v}"
        );
    }
    // IMD(2, 1) = 1 exactly.
    let imd = compute_imd(&spec);
    for &v in imd.data.data() {
        assert_eq!(v, 1.0, "criterion 3 FAIL: IMD(2,1) = {v}");
    }
    // IPD(i, 1) = pi/2.
    let spec_ipd = one_frame_spectrum(
        vec![Complex::new(0.0, 1.0); 257],
        vec![Complex::new(1.0, 0.0); 257],
    );
    let ipd = compute_ipd(&spec_ipd);
    for &v in ipd.data.data() {
        assert!(
            (v - std::f64::consts::FRAC_PI_2).abs() < 1e-12,
            "criterion 3 FAIL: IPD(i,1) = {v}"
        );
    }

    // Channel-swap antisymmetry on random spectra.
    let mut rng = Rng::new(33);
    for _ in 0..20 {
        let l: Vec<Complex<f64>> = (0..257)
            .map(|_| Complex::new(rng.range(-2.0, 2.0), rng.range(-2.0, 2.0)))
            .collect();
        let r: Vec<Complex<f64>> = (0..257)
            .map(|_| Complex::new(rng.range(-2.0, 2.0), rng.range(-2.0, 2.0)))
            .collect();
        let fwd = one_frame_spectrum(l.clone(), r.clone());
        let swp = one_frame_spectrum(r, l);
        let (ild_f, ild_s) = (compute_ild(&fwd), compute_ild(&swp));
        for (a, b) in ild_f.data.data().iter().zip(ild_s.data.data()) {
            assert!((a + b).abs() < 1e-9, "criterion 3 FAIL: ILD swap {a} vs {b}");
        }
        let (imd_f, imd_s) = (compute_imd(&fwd), compute_imd(&swp));
        for (a, b) in imd_f.data.data().iter().zip(imd_s.data.data()) {
            assert!((a + b).abs() < 1e-12, "criterion 3 FAIL: IMD swap {a} vs {b}");
        }
        let (ipd_f, ipd_s) = (compute_ipd(&fwd), compute_ipd(&swp));
        for (a, b) in ipd_f.data.data().iter().zip(ipd_s.data.data()) {
            let neg = -*a;
            let wrapped = if neg <= -std::f64::consts::PI {
                neg + 2.0 * std::f64::consts::PI
            } else {
                neg
            };
            assert!(
                (wrapped - b).abs() < 1e-9,
                "criterion 3 FAIL: IPD swap {a} vs {b}"
            );
        }
    }

    // Parseval within 1e-6 relative against the direct DFT oracle.
    let mut rng = Rng::new(34);
    for _ in 0..5 {
        let frame: Vec<f64> = (0..512).map(|_| rng.range(-1.0, 1.0)).collect();
        let window = hann_window::<f64>(512);
        let windowed: Vec<f64> = frame.iter().zip(&window).map(|(x, w)| x * w).collect();
        let time_energy: f64 = windowed.iter().map(|v| v * v).sum();

        let plan = FftPlan::<f64>::new(512);
        let spec = stft_frame(&frame, &plan, &window).unwrap();
        let oracle = dft_direct(&windowed);
        let mut freq_energy = 0.0;
        for (k, (c, o)) in spec.iter().zip(&oracle).enumerate() {
            assert!(
                (c.re - o.re).abs() < 1e-8 && (c.im - o.im).abs() < 1e-8,
                "criterion 3 FAIL: FFT disagrees with direct DFT at bin {k}"
            );
            let weight = if k == 0 || k == 256 { 1.0 } else { 2.0 };
            freq_energy += weight * (c.re * c.re + c.im * c.im);
        }
        freq_energy /= 512.0;
        let rel = (time_energy - freq_energy).abs() / time_energy;
        assert!(rel < 1e-6, "criterion 3 FAIL: Parseval rel err {rel}");
    }
    println!(
        "[PASS] criterion 3: ILD 6.0206 dB, IPD pi/2, IMD 1.0, swap antisymmetry, Parseval vs \
         direct DFT"
    );
}

// ---------------------------------------------------------------------------
// Criterion 4: shape conformance at the published dimensions.
// ---------------------------------------------------------------------------
#[test]
fn criterion_4_shape_conformance() {
    // A 4 s chunk frames to 249 and the three basic features have their
    // published widths.
    let mut rng = Rng::new(44);
    let left: Vec<f64> = (0..64_000).map(|_| rng.range(-0.5, 0.5)).collect();
    let right: Vec<f64> = (0..64_000).map(|_| rng.range(-0.5, 0.5)).collect();
    let wave = Waveform::new(left, right, 16_000).unwrap();
    assert_eq!(FrameGrid::default_16k().n_frames(wave.len()).unwrap(), 249);
    assert_eq!(
        extract_basic(&wave, BasicKind::Mfb, None).unwrap().data.shape(),
        (249, 40)
    );
    assert_eq!(
        extract_basic(&wave, BasicKind::Spec, None).unwrap().data.shape(),
        (249, 257)
    );
    assert_eq!(
        extract_basic(&wave, BasicKind::Raw, None).unwrap().data.shape(),
        (249, 512)
    );

    // Default model: 128 pooled outputs per stream, 256-wide GRU input
    // with IMD, 500 -> 7 readout.
    let cfg = ModelConfig::for_basic(BasicKind::Mfb).with_imd(true);
    assert_eq!(cfg.conv_basic.n_filters, 128);
    assert_eq!(cfg.conv_imd.n_filters, 128);
    assert_eq!(cfg.conv_basic, ConvStreamConfig::new(40, 30, 128));
    assert_eq!(cfg.conv_imd, ConvStreamConfig::new(257, 200, 128));
    assert_eq!(cfg.gru_input_dim(), 256);
    assert_eq!(ModelConfig::for_basic(BasicKind::Mfb).gru_input_dim(), 128);

    let params = init_params::<f32>(&cfg, &mut Rng::new(4)).unwrap();
    assert_eq!(params.net.readout.hidden.shape(), (500, 256));
    assert_eq!(params.net.readout.out.shape(), (7, 500));
    assert_eq!(params.net.gru.len(), 3);
    assert_eq!(params.net.gru[0].fwd.wh.shape(), (128, 256));
    assert_eq!(params.net.gru[1].fwd.wh.shape(), (128, 256));

    // End-to-end at full size: the posterior has exactly 7 components.
    let basic = cgrnn_core::dsp::FeatureSequence {
        kind: cgrnn_core::dsp::FeatureKind::Mfb40,
        data: Rng::new(5).uniform_tensor::<f32>(249, 40, -1.0, 1.0),
    };
    let imd = cgrnn_core::dsp::FeatureSequence {
        kind: cgrnn_core::dsp::FeatureKind::Imd257,
        data: Rng::new(6).uniform_tensor::<f32>(249, 257, -1.0, 1.0),
    };
    let (posterior, cache) = model_forward(&params, &basic, Some(&imd)).unwrap();
    assert_eq!(posterior.probs.len(), 7);
    assert_eq!(cache.gru_input.shape(), (249, 256));
    println!(
        "[PASS] criterion 4: 249 frames; features 249x40/257/512; conv streams 128 each; GRU \
         input 256 with IMD; readout 500 -> 7"
    );
}

// ---------------------------------------------------------------------------
// Criterion 5: EER equals the brute-force threshold sweep exactly.
// ---------------------------------------------------------------------------

/// Brute-force oracle, re-derived here: every distinct score is a
/// threshold, rates computed by full scans, same interpolation at the
/// crossing.
fn eer_oracle(scores: &[f64], labels: &[bool]) -> f64 {
    let n_pos = labels.iter().filter(|&&l| l).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    let mut thresholds = scores.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let mut prev = (0.0f64, 1.0f64); // (fpr, fnr) above every score
    for &th in &thresholds {
        let fp = scores
            .iter()
            .zip(labels)
            .filter(|(s, &l)| **s >= th && !l)
            .count() as f64;
        let fn_count = scores
            .iter()
            .zip(labels)
            .filter(|(s, &l)| **s < th && l)
            .count() as f64;
        let point = (fp / n_neg, fn_count / n_pos);
        let d_prev = prev.1 - prev.0;
        let d = point.1 - point.0;
        if d == 0.0 {
            return point.0;
        }
        if d < 0.0 {
            let t = d_prev / (d_prev - d);
            return prev.0 + t * (point.0 - prev.0);
        }
        prev = point;
    }
    unreachable!("two-class input always crosses the diagonal")
}

#[test]
fn criterion_5_eer_oracle_equivalence() {
    let mut rng = Rng::new(55);
    for case in 0..1000 {
        let n = 2 + rng.below(48);
        let mut scores = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            // Mix a coarse grid (tie-heavy) with continuous scores.
            let s = if rng.chance(0.5) {
                (rng.below(10) as f64) / 10.0
            } else {
                rng.uniform()
            };
            scores.push(s);
            labels.push(rng.chance(0.5));
        }
        labels[0] = true;
        labels[1] = false;
        let fast = compute_eer(&scores, &labels).unwrap();
        let slow = eer_oracle(&scores, &labels);
        assert_eq!(
            fast.to_bits(),
            slow.to_bits(),
            "criterion 5 FAIL: case {case}: {fast} vs oracle {slow}"
        );
    }

    // Perfect separation gives exactly zero.
    let eer = compute_eer(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]).unwrap();
    assert_eq!(eer, 0.0, "criterion 5 FAIL: perfect separation EER {eer}");

    // Invariance under strictly monotone transforms, 100 instances.
    for _ in 0..100 {
        let n = 4 + rng.below(30);
        let mut scores = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            scores.push(rng.uniform());
            labels.push(rng.chance(0.5));
        }
        labels[0] = true;
        labels[1] = false;
        let base = compute_eer(&scores, &labels).unwrap();
        let warped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp()).collect();
        let transformed = compute_eer(&warped, &labels).unwrap();
        assert!(
            (base - transformed).abs() < 1e-12,
            "criterion 5 FAIL: monotone transform changed EER {base} -> {transformed}"
        );
    }
    println!(
        "[PASS] criterion 5: EER matches the brute-force sweep exactly on 1000 instances; \
         separation => 0; monotone-transform invariant on 100 instances"
    );
}

// ---------------------------------------------------------------------------
// Criterion 6: overfit a 20-chunk synthetic set to train loss < 0.05.
// ---------------------------------------------------------------------------
#[test]
fn criterion_6_overfit_tiny_dataset() {
    let started = Instant::now();
    let dir = temp_dir("overfit");
    let spec = SynthSpec {
        n_chunks: 20,
        seed: 66,
        tags: vec!['c', 'm'],
        snr_db: (15.0, 25.0),
        mono_twin: false,
        ..Default::default()
    };
    let entries = generate_synthetic(&spec, &dir).unwrap();
    let chunks = load_dataset::<f32>(&entries, &dir, BasicKind::Mfb, false, None).unwrap();

    let mut model_cfg = ModelConfig::for_basic(BasicKind::Mfb);
    model_cfg.conv_basic.n_filters = 12;
    model_cfg.gru_layers = 1;
    model_cfg.gru_units = 16;
    model_cfg.readout_hidden = 32;
    let train_cfg = TrainConfig {
        batch_size: 4,
        max_epochs: 200,
        patience: 200,
        seed: 7,
        learning_rate: 0.01,
        threads: 0,
    };
    let (_, log) = train_fold(&chunks, &chunks, &model_cfg, &train_cfg).unwrap();
    let best_loss = log
        .epochs
        .iter()
        .map(|r| r.train_loss)
        .fold(f64::INFINITY, f64::min);
    let elapsed = started.elapsed().as_secs_f64();
    assert!(
        best_loss < 0.05,
        "criterion 6 FAIL: best train loss {best_loss:.4} after {} epochs",
        log.epochs.len()
    );
    assert!(elapsed < 600.0, "criterion 6 FAIL: took {elapsed:.0}s (>= 600s)");
    std::fs::remove_dir_all(&dir).ok();
    println!(
        "[PASS] criterion 6: train loss {best_loss:.4} < 0.05 within {} epochs, {elapsed:.0}s",
        log.epochs.len()
    );
}

// ---------------------------------------------------------------------------
// Criterion 7: the IMD stream strictly improves average EER on the
// lateralization-only dataset for >= 4 of 5 seeds.
// ---------------------------------------------------------------------------
fn spatial_experiment(seed: u64) -> (f64, f64) {
    let dir = temp_dir(&format!("spatial-{seed}"));
    let spec = SynthSpec {
        n_chunks: 250,
        seed: 7000 + seed,
        tags: vec!['c', 'm', 'v'],
        snr_db: (15.0, 25.0),
        lateral_gains: (1.0, 0.2),
        mono_twin: true,
    };
    let entries = generate_synthetic(&spec, &dir).unwrap();
    let (train_entries, test_entries) = entries.split_at(200);

    // Load once with the IMD stream, derive the mono arm by dropping it.
    let train_imd = load_dataset::<f32>(train_entries, &dir, BasicKind::Mfb, true, None).unwrap();
    let test_imd = load_dataset::<f32>(test_entries, &dir, BasicKind::Mfb, true, None).unwrap();
    let strip = |chunks: &[LoadedChunk<f32>]| -> Vec<LoadedChunk<f32>> {
        chunks
            .iter()
            .map(|c| LoadedChunk {
                imd: None,
                ..c.clone()
            })
            .collect()
    };
    let train_mono = strip(&train_imd);
    let test_mono = strip(&test_imd);

    let mut base_cfg = ModelConfig::for_basic(BasicKind::Mfb);
    base_cfg.conv_basic.n_filters = 16;
    base_cfg.conv_imd.n_filters = 16;
    base_cfg.gru_layers = 1;
    base_cfg.gru_units = 24;
    base_cfg.readout_hidden = 32;
    let train_cfg = TrainConfig {
        batch_size: 16,
        max_epochs: 12,
        patience: 12,
        seed,
        learning_rate: 2e-3,
        threads: 0,
    };

    let cfg_imd = base_cfg.clone().with_imd(true);
    let (params_imd, _) = train_fold(&train_imd, &test_imd, &cfg_imd, &train_cfg).unwrap();
    let report_imd =
        cgrnn_core::train::evaluate(&params_imd, &test_imd, true).unwrap();

    let cfg_mono = base_cfg;
    let (params_mono, _) = train_fold(&train_mono, &test_mono, &cfg_mono, &train_cfg).unwrap();
    let report_mono =
        cgrnn_core::train::evaluate(&params_mono, &test_mono, true).unwrap();

    std::fs::remove_dir_all(&dir).ok();
    (report_imd.average, report_mono.average)
}

#[test]
fn criterion_7_spatial_benefit() {
    let started = Instant::now();
    let mut wins = 0;
    let mut lines = Vec::new();
    for seed in 1..=5u64 {
        let (eer_imd, eer_mono) = spatial_experiment(seed);
        let win = eer_imd < eer_mono;
        wins += win as usize;
        lines.push(format!(
            "  seed {seed}: EER with IMD {eer_imd:.3} vs without {eer_mono:.3} ({})",
            if win { "improved" } else { "no gain" }
        ));
    }
    let elapsed = started.elapsed().as_secs_f64();
    for line in &lines {
        println!("{line}");
    }
    assert!(
        wins >= 4,
        "criterion 7 FAIL: IMD improved EER on only {wins}/5 seeds\n{}",
        lines.join("\n")
    );
    assert!(elapsed < 1800.0, "criterion 7 FAIL: took {elapsed:.0}s (>= 1800s)");
    println!(
        "[PASS] criterion 7: IMD stream strictly lowered average EER on {wins}/5 seeds, \
         {elapsed:.0}s"
    );
}

// ---------------------------------------------------------------------------
// Criterion 8: fixed seed, single-threaded => byte-identical checkpoints
// and logs (the wall-time column of the log is masked: it is the one field
// that cannot be reproducible).
// ---------------------------------------------------------------------------
fn mask_seconds_column(csv: &str) -> String {
    csv.lines()
        .map(|line| {
            let mut fields: Vec<&str> = line.split(',').collect();
            if fields.len() == 4 && fields[0] != "epoch" {
                fields[3] = "-";
            }
            fields.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn criterion_8_determinism() {
    let dir = temp_dir("determinism");
    let spec = SynthSpec {
        n_chunks: 16,
        seed: 88,
        tags: vec!['c', 'm', 'v'],
        ..Default::default()
    };
    let entries = generate_synthetic(&spec, &dir).unwrap();
    let chunks = load_dataset::<f32>(&entries, &dir, BasicKind::Mfb, true, None).unwrap();

    let mut model_cfg = ModelConfig::for_basic(BasicKind::Mfb).with_imd(true);
    model_cfg.conv_basic.n_filters = 8;
    model_cfg.conv_imd.n_filters = 8;
    model_cfg.gru_layers = 1;
    model_cfg.gru_units = 8;
    model_cfg.readout_hidden = 12;
    let train_cfg = TrainConfig {
        batch_size: 8,
        max_epochs: 3,
        patience: 3,
        seed: 99,
        learning_rate: 1e-3,
        threads: 1,
    };

    let run = |tag: &str| -> (Vec<u8>, String) {
        let (params, log) = train_fold(&chunks, &chunks, &model_cfg, &train_cfg).unwrap();
        let path = dir.join(format!("{tag}.ckpt"));
        save_checkpoint(&path, &params).unwrap();
        (std::fs::read(&path).unwrap(), log.to_csv())
    };
    let (ckpt_a, log_a) = run("a");
    let (ckpt_b, log_b) = run("b");
    assert_eq!(ckpt_a, ckpt_b, "criterion 8 FAIL: checkpoints differ between runs");
    assert_eq!(
        mask_seconds_column(&log_a),
        mask_seconds_column(&log_b),
        "criterion 8 FAIL: logs differ between runs (seconds masked)"
    );
    std::fs::remove_dir_all(&dir).ok();
    println!(
        "[PASS] criterion 8: two single-threaded runs produced byte-identical checkpoints and \
         logs (wall-time column masked)"
    );
}

// ---------------------------------------------------------------------------
// Criterion 9: checkpoint round-trip reproduces bit-identical posteriors.
// ---------------------------------------------------------------------------
#[test]
fn criterion_9_checkpoint_round_trip() {
    let dir = temp_dir("roundtrip");
    let spec = SynthSpec {
        n_chunks: 10,
        seed: 909,
        tags: vec!['c', 'm', 'v'],
        ..Default::default()
    };
    let entries = generate_synthetic(&spec, &dir).unwrap();
    let chunks = load_dataset::<f32>(&entries, &dir, BasicKind::Mfb, true, None).unwrap();

    let mut cfg = ModelConfig::for_basic(BasicKind::Mfb).with_imd(true);
    cfg.conv_basic.n_filters = 8;
    cfg.conv_imd.n_filters = 8;
    cfg.gru_layers = 1;
    cfg.gru_units = 8;
    cfg.readout_hidden = 12;
    let params = init_params::<f32>(&cfg, &mut Rng::new(11)).unwrap();

    let path = dir.join("model.ckpt");
    save_checkpoint(&path, &params).unwrap();
    let loaded = load_checkpoint::<f32>(&path).unwrap();

    for chunk in &chunks {
        let (p1, _) = model_forward(&params, &chunk.basic, chunk.imd.as_ref()).unwrap();
        let (p2, _) = model_forward(&loaded, &chunk.basic, chunk.imd.as_ref()).unwrap();
        for (a, b) in p1.probs.iter().zip(&p2.probs) {
            assert_eq!(
                a.to_bits(),
                b.to_bits(),
                "criterion 9 FAIL: posterior changed after checkpoint round trip"
            );
        }
    }
    std::fs::remove_dir_all(&dir).ok();
    println!("[PASS] criterion 9: save/load reproduces bit-identical posteriors on 10 chunks");
}
