//! The finite-difference test suite over every analytic backward pass:
//! conv-gmp, the GRU cell, the simple recurrent cell, the dense readout,
//! sigmoid + binary cross-entropy, and the fully assembled tiny model.
//! Exposed as a library so the `gradcheck` command and the acceptance
//! tests share one implementation. Always runs in 64-bit.

use crate::dsp::FeatureSequence;
use crate::error::Result;
use crate::gradcheck::{finite_diff_grad, max_rel_error_indexed, DEFAULT_STEP, GRAD_TOLERANCE};
use crate::rng::Rng;
use crate::tensor::Tensor2;

use super::config::ModelConfig;
use super::conv::{conv1d_gmp_backward, conv1d_gmp_forward, ConvFilters};
use super::gru::{gru_seq_backward, gru_seq_forward, CellKind, GruWeights};
use super::loss::bce_loss;
use super::network::{init_params, model_backward, model_forward, NetWeights};
use super::readout::{readout_backward, readout_forward, ReadoutWeights};

/// Result of checking one layer: the worst relative error over every
/// parameter of that layer and where it occurred.
#[derive(Debug, Clone)]
pub struct LayerCheck {
    pub layer: &'static str,
    pub worst_rel: f64,
    pub worst_tensor: String,
    pub worst_index: usize,
    pub pass: bool,
}

impl LayerCheck {
    fn from_results(layer: &'static str, results: Vec<(String, f64, usize)>) -> Self {
        let mut worst = ("".to_string(), 0.0f64, 0usize);
        for (name, err, idx) in results {
            if err >= worst.1 {
                worst = (name, err, idx);
            }
        }
        LayerCheck {
            layer,
            worst_rel: worst.1,
            worst_tensor: worst.0,
            worst_index: worst.2,
            pass: worst.1 < GRAD_TOLERANCE,
        }
    }
}

/// Names of the layers the suite reports, in order.
pub const SUITE_LAYERS: [&str; 5] = ["conv-gmp", "gru", "simple-rnn", "dense", "bce"];

fn check_conv(rng: &mut Rng) -> Result<LayerCheck> {
    let (m, f, n) = (9, 4, 3);
    let filters = ConvFilters {
        weights: rng.uniform_tensor::<f64>(n, f, -1.0, 1.0),
        bias: rng.uniform_tensor::<f64>(1, n, -0.3, 0.3),
    };
    let frame = rng.uniform_tensor::<f64>(1, m, -1.0, 1.0);
    let proj: Vec<f64> = (0..n).map(|_| rng.range(-1.0, 1.0)).collect();

    let loss = |w: &Tensor2<f64>, b: &Tensor2<f64>, fr: &Tensor2<f64>| -> Result<f64> {
        let filt = ConvFilters {
            weights: w.clone(),
            bias: b.clone(),
        };
        let (pooled, _) = conv1d_gmp_forward(fr.row(0), &filt)?;
        Ok(pooled.iter().zip(&proj).map(|(p, q)| p * q).sum())
    };

    let (_, cache) = conv1d_gmp_forward(frame.row(0), &filters)?;
    let mut grads = ConvFilters {
        weights: Tensor2::zeros(n, f),
        bias: Tensor2::zeros(1, n),
    };
    let mut grad_frame = vec![0.0; m];
    conv1d_gmp_backward(
        frame.row(0),
        &filters,
        &cache,
        &proj,
        &mut grads,
        Some(&mut grad_frame),
    );

    let mut results = Vec::new();
    let fd = finite_diff_grad(
        |w| loss(w, &filters.bias, &frame),
        &filters.weights,
        DEFAULT_STEP,
    )?;
    let (err, idx) = max_rel_error_indexed(&grads.weights, &fd);
    results.push(("weights".into(), err, idx));
    let fd = finite_diff_grad(
        |b| loss(&filters.weights, b, &frame),
        &filters.bias,
        DEFAULT_STEP,
    )?;
    let (err, idx) = max_rel_error_indexed(&grads.bias, &fd);
    results.push(("bias".into(), err, idx));
    let fd = finite_diff_grad(
        |fr| loss(&filters.weights, &filters.bias, fr),
        &frame,
        DEFAULT_STEP,
    )?;
    let grad_frame_t = Tensor2::from_vec(1, m, grad_frame)?;
    let (err, idx) = max_rel_error_indexed(&grad_frame_t, &fd);
    results.push(("frame".into(), err, idx));
    Ok(LayerCheck::from_results("conv-gmp", results))
}

fn random_gru_weights(rng: &mut Rng, h: usize, d: usize) -> GruWeights<f64> {
    GruWeights {
        wr: rng.uniform_tensor(h, d, -0.8, 0.8),
        wz: rng.uniform_tensor(h, d, -0.8, 0.8),
        wh: rng.uniform_tensor(h, d, -0.8, 0.8),
        rr: rng.uniform_tensor(h, h, -0.8, 0.8),
        rz: rng.uniform_tensor(h, h, -0.8, 0.8),
        rh: rng.uniform_tensor(h, h, -0.8, 0.8),
        br: rng.uniform_tensor(1, h, -0.2, 0.2),
        bz: rng.uniform_tensor(1, h, -0.2, 0.2),
        bh: rng.uniform_tensor(1, h, -0.2, 0.2),
    }
}

fn replace_gru_tensor(w: &GruWeights<f64>, which: &str, probe: &Tensor2<f64>) -> GruWeights<f64> {
    let mut wp = w.clone();
    match which {
        "wr" => wp.wr = probe.clone(),
        "wz" => wp.wz = probe.clone(),
        "wh" => wp.wh = probe.clone(),
        "rr" => wp.rr = probe.clone(),
        "rz" => wp.rz = probe.clone(),
        "rh" => wp.rh = probe.clone(),
        "br" => wp.br = probe.clone(),
        "bz" => wp.bz = probe.clone(),
        "bh" => wp.bh = probe.clone(),
        _ => unreachable!("unknown gru tensor {which}"),
    }
    wp
}

fn check_recurrent(rng: &mut Rng, kind: CellKind, layer: &'static str) -> Result<LayerCheck> {
    let (h, d, t_len) = (4, 3, 3);
    let w = random_gru_weights(rng, h, d);
    let x = rng.uniform_tensor::<f64>(t_len, d, -1.0, 1.0);
    let proj = rng.uniform_tensor::<f64>(t_len, h, -1.0, 1.0);

    let loss = |x: &Tensor2<f64>, w: &GruWeights<f64>| -> Result<f64> {
        let (out, _) = gru_seq_forward(x, w, kind)?;
        Ok(out
            .data()
            .iter()
            .zip(proj.data())
            .map(|(a, b)| a * b)
            .sum())
    };

    let (_, cache) = gru_seq_forward(&x, &w, kind)?;
    let mut grads = GruWeights::zeros(h, d);
    let grad_x = gru_seq_backward(&x, &w, &cache, &proj, &mut grads)?;

    let mut results = Vec::new();
    let fd = finite_diff_grad(|xp| loss(xp, &w), &x, DEFAULT_STEP)?;
    let (err, idx) = max_rel_error_indexed(&grad_x, &fd);
    results.push(("input".into(), err, idx));

    let names: &[&str] = match kind {
        CellKind::Gru => &["wr", "wz", "wh", "rr", "rz", "rh", "br", "bz", "bh"],
        CellKind::Simple => &["wh", "rh", "bh"],
    };
    for &name in names {
        let (value, analytic) = match name {
            "wr" => (&w.wr, &grads.wr),
            "wz" => (&w.wz, &grads.wz),
            "wh" => (&w.wh, &grads.wh),
            "rr" => (&w.rr, &grads.rr),
            "rz" => (&w.rz, &grads.rz),
            "rh" => (&w.rh, &grads.rh),
            "br" => (&w.br, &grads.br),
            "bz" => (&w.bz, &grads.bz),
            "bh" => (&w.bh, &grads.bh),
            _ => unreachable!(),
        };
        let fd = finite_diff_grad(
            |probe| loss(&x, &replace_gru_tensor(&w, name, probe)),
            value,
            DEFAULT_STEP,
        )?;
        let (err, idx) = max_rel_error_indexed(analytic, &fd);
        results.push((name.to_string(), err, idx));
    }
    Ok(LayerCheck::from_results(layer, results))
}

fn check_dense(rng: &mut Rng) -> Result<LayerCheck> {
    let (h, d, n_tags) = (5, 3, 7);
    let w = ReadoutWeights {
        hidden: rng.uniform_tensor::<f64>(h, d, -1.0, 1.0),
        hidden_bias: rng.uniform_tensor::<f64>(1, h, -0.3, 0.3),
        out: rng.uniform_tensor::<f64>(n_tags, h, -1.0, 1.0),
        out_bias: rng.uniform_tensor::<f64>(1, n_tags, -0.3, 0.3),
    };
    let input = rng.uniform_tensor::<f64>(1, d, -1.0, 1.0);
    let proj: Vec<f64> = (0..n_tags).map(|_| rng.range(-1.0, 1.0)).collect();

    let loss = |hw: &Tensor2<f64>,
                hb: &Tensor2<f64>,
                ow: &Tensor2<f64>,
                ob: &Tensor2<f64>,
                inp: &Tensor2<f64>|
     -> Result<f64> {
        let wp = ReadoutWeights {
            hidden: hw.clone(),
            hidden_bias: hb.clone(),
            out: ow.clone(),
            out_bias: ob.clone(),
        };
        let (probs, _) = readout_forward(inp.row(0), &wp)?;
        Ok(probs.iter().zip(&proj).map(|(p, q)| p * q).sum())
    };

    let (probs, cache) = readout_forward(input.row(0), &w)?;
    let grad_logits: Vec<f64> = probs
        .iter()
        .zip(&proj)
        .map(|(p, q)| q * p * (1.0 - p))
        .collect();
    let mut grads = ReadoutWeights::zeros(h, d, n_tags);
    let grad_input = readout_backward(&w, &cache, &grad_logits, &mut grads);

    let mut results = Vec::new();
    let fd = finite_diff_grad(
        |p| loss(p, &w.hidden_bias, &w.out, &w.out_bias, &input),
        &w.hidden,
        DEFAULT_STEP,
    )?;
    let (err, idx) = max_rel_error_indexed(&grads.hidden, &fd);
    results.push(("hidden.w".into(), err, idx));
    let fd = finite_diff_grad(
        |p| loss(&w.hidden, p, &w.out, &w.out_bias, &input),
        &w.hidden_bias,
        DEFAULT_STEP,
    )?;
    let (err, idx) = max_rel_error_indexed(&grads.hidden_bias, &fd);
    results.push(("hidden.b".into(), err, idx));
    let fd = finite_diff_grad(
        |p| loss(&w.hidden, &w.hidden_bias, p, &w.out_bias, &input),
        &w.out,
        DEFAULT_STEP,
    )?;
    let (err, idx) = max_rel_error_indexed(&grads.out, &fd);
    results.push(("out.w".into(), err, idx));
    let fd = finite_diff_grad(
        |p| loss(&w.hidden, &w.hidden_bias, &w.out, p, &input),
        &w.out_bias,
        DEFAULT_STEP,
    )?;
    let (err, idx) = max_rel_error_indexed(&grads.out_bias, &fd);
    results.push(("out.b".into(), err, idx));
    let fd = finite_diff_grad(
        |p| loss(&w.hidden, &w.hidden_bias, &w.out, &w.out_bias, p),
        &input,
        DEFAULT_STEP,
    )?;
    let grad_input_t = Tensor2::from_vec(1, d, grad_input)?;
    let (err, idx) = max_rel_error_indexed(&grad_input_t, &fd);
    results.push(("input".into(), err, idx));
    Ok(LayerCheck::from_results("dense", results))
}

fn check_bce(rng: &mut Rng) -> Result<LayerCheck> {
    let n_tags = 7;
    let logits = rng.uniform_tensor::<f64>(1, n_tags, -2.0, 2.0);
    let targets: Vec<f64> = (0..n_tags)
        .map(|_| if rng.chance(0.5) { 1.0 } else { 0.0 })
        .collect();
    let sigmoid = |o: f64| 1.0 / (1.0 + (-o).exp());

    let loss = |o: &Tensor2<f64>| -> Result<f64> {
        let probs: Vec<f64> = o.row(0).iter().map(|&v| sigmoid(v)).collect();
        Ok(bce_loss(&probs, &targets)?.0)
    };
    let probs: Vec<f64> = logits.row(0).iter().map(|&v| sigmoid(v)).collect();
    let (_, grad) = bce_loss(&probs, &targets)?;
    let analytic = Tensor2::from_vec(1, n_tags, grad)?;
    let fd = finite_diff_grad(loss, &logits, 1e-6)?;
    let (err, idx) = max_rel_error_indexed(&analytic, &fd);
    Ok(LayerCheck::from_results(
        "bce",
        vec![("logits".into(), err, idx)],
    ))
}

/// Run the five per-layer checks with a seeded RNG. A `perturb` layer name
/// deliberately corrupts that layer's analytic gradient before comparison
/// (fault-injection hook used to test the failure path).
pub fn run_layer_suite(seed: u64, perturb: Option<&str>) -> Result<Vec<LayerCheck>> {
    let mut rng = Rng::new(seed);
    let mut checks = vec![
        check_conv(&mut rng)?,
        check_recurrent(&mut rng, CellKind::Gru, "gru")?,
        check_recurrent(&mut rng, CellKind::Simple, "simple-rnn")?,
        check_dense(&mut rng)?,
        check_bce(&mut rng)?,
    ];
    if let Some(layer) = perturb {
        for check in &mut checks {
            if check.layer == layer {
                check.worst_rel += 1.0;
                check.pass = false;
            }
        }
    }
    Ok(checks)
}

/// Check the fully assembled tiny model (conv streams, bidirectional GRU,
/// readout, BCE) against finite differences over every parameter tensor.
/// Returns the worst relative error and where it occurred.
pub fn check_full_model(seed: u64, use_imd: bool, t_frames: usize) -> Result<LayerCheck> {
    check_full_model_with(&ModelConfig::tiny().with_imd(use_imd), seed, t_frames)
}

/// Full-model finite-difference check under an arbitrary (small) model
/// configuration, e.g. last-frame readout or a unidirectional stack.
pub fn check_full_model_with(
    cfg: &ModelConfig,
    seed: u64,
    t_frames: usize,
) -> Result<LayerCheck> {
    let use_imd = cfg.use_imd;
    let mut rng = Rng::new(seed);
    let params = init_params::<f64>(cfg, &mut rng)?;
    let basic = FeatureSequence {
        kind: cfg.basic.feature_kind(),
        data: rng.uniform_tensor::<f64>(t_frames, cfg.conv_basic.input_dim, -1.0, 1.0),
    };
    let imd = use_imd.then(|| FeatureSequence {
        kind: crate::dsp::FeatureKind::Imd257,
        data: rng.uniform_tensor::<f64>(t_frames, cfg.conv_imd.input_dim, -1.0, 1.0),
    });
    let targets: Vec<f64> = (0..cfg.n_tags)
        .map(|_| if rng.chance(0.5) { 1.0 } else { 0.0 })
        .collect();

    let loss_of = |p: &super::network::ModelParams<f64>| -> Result<f64> {
        let (posterior, _) = model_forward(p, &basic, imd.as_ref())?;
        Ok(bce_loss(&posterior.probs, &targets)?.0)
    };

    let (posterior, cache) = model_forward(&params, &basic, imd.as_ref())?;
    let (_, grad_logits) = bce_loss(&posterior.probs, &targets)?;
    let mut grads = NetWeights::zeros(&cfg);
    model_backward(&params, &cache, &grad_logits, &mut grads)?;

    let names: Vec<String> = params.net.tensors().into_iter().map(|(n, _)| n).collect();
    let mut results = Vec::new();
    for name in names {
        let value = params
            .net
            .tensors()
            .into_iter()
            .find(|(n, _)| *n == name)
            .unwrap()
            .1
            .clone();
        let fd = finite_diff_grad(
            |probe| {
                let mut p = params.clone();
                for (n, t) in p.net.tensors_mut() {
                    if n == name {
                        *t = probe.clone();
                    }
                }
                loss_of(&p)
            },
            &value,
            DEFAULT_STEP,
        )?;
        let analytic = grads
            .tensors()
            .into_iter()
            .find(|(n, _)| *n == name)
            .unwrap()
            .1
            .clone();
        let (err, idx) = max_rel_error_indexed(&analytic, &fd);
        results.push((name, err, idx));
    }
    Ok(LayerCheck::from_results("full-model", results))
}
