//! Saliency-sensing encoder and per-clip regressor.
//!
//! Each encoder layer applies multi-head self-attention with a
//! residual connection, computes a sigmoid gate from a position-wise
//! feed-forward network, and multiplies the gate into the residual
//! stream:
//!
//! ```text
//! v_bar = x + MultiHeadAttention(x)
//! gate  = sigmoid(FeedForward(v_bar))
//! out   = gate * v_bar           (elementwise)
//! ```
//!
//! Dimensions are preserved at every layer. The regressor maps either
//! the final gates or the final hidden states through two affine
//! layers (ReLU between, sigmoid after) to one score per clip. The
//! backward pass is written out by hand; the forward cache keeps
//! every intermediate the reverse sweep needs.

use ndarray::{s, Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

use super::{EncoderConfig, RegressorInput};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerParams {
    pub w_q: Array2<f64>,
    pub b_q: Array1<f64>,
    pub w_k: Array2<f64>,
    pub b_k: Array1<f64>,
    pub w_v: Array2<f64>,
    pub b_v: Array1<f64>,
    pub w_o: Array2<f64>,
    pub b_o: Array1<f64>,
    pub w_ff1: Array2<f64>,
    pub b_ff1: Array1<f64>,
    pub w_ff2: Array2<f64>,
    pub b_ff2: Array1<f64>,
}

/// Weights of the gated-attention scorer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GatedScorer {
    pub config: EncoderConfig,
    pub regressor_input: RegressorInput,
    pub layers: Vec<LayerParams>,
    pub reg_w1: Array2<f64>,
    pub reg_b1: Array1<f64>,
    pub reg_w2: Array1<f64>,
    pub reg_b2: f64,
}

/// Gradient buffers matching [`GatedScorer`] shape for shape.
#[derive(Debug, Clone)]
pub struct GatedGrads {
    pub layers: Vec<LayerParams>,
    pub reg_w1: Array2<f64>,
    pub reg_b1: Array1<f64>,
    pub reg_w2: Array1<f64>,
    pub reg_b2: f64,
}

fn xavier(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-a..a))
}

impl LayerParams {
    fn init(rng: &mut ChaCha8Rng, d: usize, ffn: usize) -> Self {
        Self {
            w_q: xavier(rng, d, d),
            b_q: Array1::zeros(d),
            w_k: xavier(rng, d, d),
            b_k: Array1::zeros(d),
            w_v: xavier(rng, d, d),
            b_v: Array1::zeros(d),
            w_o: xavier(rng, d, d),
            b_o: Array1::zeros(d),
            w_ff1: xavier(rng, d, ffn),
            b_ff1: Array1::zeros(ffn),
            w_ff2: xavier(rng, ffn, d),
            b_ff2: Array1::zeros(d),
        }
    }

    fn zeros(d: usize, ffn: usize) -> Self {
        Self {
            w_q: Array2::zeros((d, d)),
            b_q: Array1::zeros(d),
            w_k: Array2::zeros((d, d)),
            b_k: Array1::zeros(d),
            w_v: Array2::zeros((d, d)),
            b_v: Array1::zeros(d),
            w_o: Array2::zeros((d, d)),
            b_o: Array1::zeros(d),
            w_ff1: Array2::zeros((d, ffn)),
            b_ff1: Array1::zeros(ffn),
            w_ff2: Array2::zeros((ffn, d)),
            b_ff2: Array1::zeros(d),
        }
    }
}

impl GatedScorer {
    pub fn init(config: &EncoderConfig, regressor_input: RegressorInput) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let d = config.model_dim;
        let layers = (0..config.num_layers)
            .map(|_| LayerParams::init(&mut rng, d, config.ffn_dim))
            .collect();
        Ok(Self {
            config: config.clone(),
            regressor_input,
            layers,
            reg_w1: xavier(&mut rng, d, d),
            reg_b1: Array1::zeros(d),
            reg_w2: {
                let m = xavier(&mut rng, d, 1);
                m.column(0).to_owned()
            },
            reg_b2: 0.0,
        })
    }

    pub fn zero_grads(&self) -> GatedGrads {
        let d = self.config.model_dim;
        let ffn = self.config.ffn_dim;
        GatedGrads {
            layers: (0..self.layers.len())
                .map(|_| LayerParams::zeros(d, ffn))
                .collect(),
            reg_w1: Array2::zeros((d, d)),
            reg_b1: Array1::zeros(d),
            reg_w2: Array1::zeros(d),
            reg_b2: 0.0,
        }
    }
}

pub(crate) struct LayerCache {
    x: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    att: Vec<Array2<f64>>,
    ctx: Array2<f64>,
    v_bar: Array2<f64>,
    f1: Array2<f64>,
    a1: Array2<f64>,
    gate: Array2<f64>,
    out: Array2<f64>,
}

/// Forward activations of one input sequence.
pub struct GatedForward {
    pub(crate) layers: Vec<LayerCache>,
    reg_in: Array2<f64>,
    r1: Array2<f64>,
    a: Array2<f64>,
    predictions: Vec<f64>,
}

impl GatedForward {
    pub fn predictions(&self) -> &[f64] {
        &self.predictions
    }

    /// `(residual, gate, output)` tensors of layer `i`.
    pub fn layer_trace(&self, i: usize) -> (&Array2<f64>, &Array2<f64>, &Array2<f64>) {
        let layer = &self.layers[i];
        (&layer.v_bar, &layer.gate, &layer.out)
    }

    /// Gate values of the final layer.
    pub fn final_gates(&self) -> &Array2<f64> {
        &self.layers.last().expect("at least one layer").gate
    }

    /// Hidden states of the final layer.
    pub fn final_hidden(&self) -> &Array2<f64> {
        &self.layers.last().expect("at least one layer").out
    }
}

fn row_softmax(m: &Array2<f64>) -> Array2<f64> {
    let mut out = m.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|z| (z - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|e| e / sum);
    }
    out
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl GatedScorer {
    fn check_features(&self, features: &Array2<f64>) -> Result<()> {
        if features.nrows() == 0 {
            return Err(invalid("feature sequence is empty"));
        }
        if features.ncols() != self.config.model_dim {
            return Err(invalid(format!(
                "feature dim {} does not match model dim {}",
                features.ncols(),
                self.config.model_dim
            )));
        }
        Ok(())
    }

    /// Runs the full encoder + regressor, caching intermediates.
    pub fn forward(&self, features: &Array2<f64>) -> Result<GatedForward> {
        self.check_features(features)?;
        let heads = self.config.num_heads;
        let head_dim = self.config.model_dim / heads;
        let scale = 1.0 / (head_dim as f64).sqrt();

        let mut x = features.clone();
        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let q = x.dot(&layer.w_q) + &layer.b_q;
            let k = x.dot(&layer.w_k) + &layer.b_k;
            let v = x.dot(&layer.w_v) + &layer.b_v;

            let n = x.nrows();
            let mut ctx = Array2::zeros((n, self.config.model_dim));
            let mut att = Vec::with_capacity(heads);
            for h in 0..heads {
                let cols = s![.., h * head_dim..(h + 1) * head_dim];
                let qh = q.slice(cols);
                let kh = k.slice(cols);
                let vh = v.slice(cols);
                let logits = qh.dot(&kh.t()) * scale;
                let probs = row_softmax(&logits);
                let ctx_h = probs.dot(&vh);
                ctx.slice_mut(cols).assign(&ctx_h);
                att.push(probs);
            }

            let attn_out = ctx.dot(&layer.w_o) + &layer.b_o;
            let v_bar = &x + &attn_out;
            let f1 = v_bar.dot(&layer.w_ff1) + &layer.b_ff1;
            let a1 = f1.mapv(|z| z.max(0.0));
            let f2 = a1.dot(&layer.w_ff2) + &layer.b_ff2;
            let gate = f2.mapv(sigmoid);
            let out = &gate * &v_bar;

            caches.push(LayerCache {
                x,
                q,
                k,
                v,
                att,
                ctx,
                v_bar,
                f1,
                a1,
                gate: gate.clone(),
                out: out.clone(),
            });
            x = out;
        }

        let reg_in = match self.regressor_input {
            RegressorInput::Gates => caches.last().expect("layers").gate.clone(),
            RegressorInput::HiddenStates => caches.last().expect("layers").out.clone(),
        };
        let r1 = reg_in.dot(&self.reg_w1) + &self.reg_b1;
        let a = r1.mapv(|z| z.max(0.0));
        let predictions: Vec<f64> = a
            .rows()
            .into_iter()
            .map(|row| sigmoid(row.dot(&self.reg_w2) + self.reg_b2))
            .collect();

        Ok(GatedForward {
            layers: caches,
            reg_in,
            r1,
            a,
            predictions,
        })
    }

    /// Accumulates parameter gradients for `d(loss)/d(predictions)`.
    pub fn backward(&self, pass: &GatedForward, d_pred: &[f64], grads: &mut GatedGrads) {
        let n = pass.predictions.len();
        assert_eq!(d_pred.len(), n, "gradient length mismatch");

        // Regressor: sigmoid, affine, relu, affine.
        let mut d_r2 = Array1::zeros(n);
        for i in 0..n {
            let p = pass.predictions[i];
            d_r2[i] = d_pred[i] * p * (1.0 - p);
        }
        for i in 0..n {
            grads.reg_w2.scaled_add(d_r2[i], &pass.a.row(i));
        }
        grads.reg_b2 += d_r2.sum();
        let mut d_a = Array2::zeros(pass.a.raw_dim());
        for i in 0..n {
            d_a.row_mut(i).scaled_add(d_r2[i], &self.reg_w2);
        }
        let d_r1 = &d_a * &pass.r1.mapv(|z| if z > 0.0 { 1.0 } else { 0.0 });
        grads.reg_w1 = &grads.reg_w1 + &pass.reg_in.t().dot(&d_r1);
        grads.reg_b1 = &grads.reg_b1 + &d_r1.sum_axis(Axis(0));
        let d_reg_in = d_r1.dot(&self.reg_w1.t());

        // Seed the encoder sweep at the last layer: the regressor
        // consumes either its gates or its hidden states.
        let mut d_out = Array2::zeros(pass.layers.last().expect("layers").out.raw_dim());
        let mut d_gate_extra: Option<Array2<f64>> = None;
        match self.regressor_input {
            RegressorInput::Gates => d_gate_extra = Some(d_reg_in),
            RegressorInput::HiddenStates => d_out = d_reg_in,
        }

        let heads = self.config.num_heads;
        let head_dim = self.config.model_dim / heads;
        let scale = 1.0 / (head_dim as f64).sqrt();

        for (idx, (layer, cache)) in self
            .layers
            .iter()
            .zip(&pass.layers)
            .enumerate()
            .rev()
        {
            let g = &mut grads.layers[idx];

            // out = gate * v_bar
            let mut d_gate = &d_out * &cache.v_bar;
            if let Some(extra) = d_gate_extra.take() {
                d_gate = d_gate + extra;
            }
            let mut d_v_bar = &d_out * &cache.gate;

            // gate = sigmoid(f2); f2 = a1 . w_ff2 + b_ff2
            let d_f2 = &d_gate * &cache.gate.mapv(|s| s * (1.0 - s));
            g.w_ff2 = &g.w_ff2 + &cache.a1.t().dot(&d_f2);
            g.b_ff2 = &g.b_ff2 + &d_f2.sum_axis(Axis(0));
            let d_a1 = d_f2.dot(&layer.w_ff2.t());

            // a1 = relu(f1); f1 = v_bar . w_ff1 + b_ff1
            let d_f1 = &d_a1 * &cache.f1.mapv(|z| if z > 0.0 { 1.0 } else { 0.0 });
            g.w_ff1 = &g.w_ff1 + &cache.v_bar.t().dot(&d_f1);
            g.b_ff1 = &g.b_ff1 + &d_f1.sum_axis(Axis(0));
            d_v_bar = d_v_bar + d_f1.dot(&layer.w_ff1.t());

            // v_bar = x + ctx . w_o + b_o
            let mut d_x = d_v_bar.clone();
            let d_attn_out = d_v_bar;
            g.w_o = &g.w_o + &cache.ctx.t().dot(&d_attn_out);
            g.b_o = &g.b_o + &d_attn_out.sum_axis(Axis(0));
            let d_ctx = d_attn_out.dot(&layer.w_o.t());

            // Per-head scaled dot-product attention.
            let seq = cache.x.nrows();
            let mut d_q = Array2::zeros((seq, self.config.model_dim));
            let mut d_k = Array2::zeros((seq, self.config.model_dim));
            let mut d_v = Array2::zeros((seq, self.config.model_dim));
            for h in 0..heads {
                let cols = s![.., h * head_dim..(h + 1) * head_dim];
                let probs = &cache.att[h];
                let d_ctx_h = d_ctx.slice(cols);
                let vh = cache.v.slice(cols);
                let qh = cache.q.slice(cols);
                let kh = cache.k.slice(cols);

                let d_probs = d_ctx_h.dot(&vh.t());
                d_v.slice_mut(cols).assign(&probs.t().dot(&d_ctx_h));

                // softmax rows backward
                let mut d_logits = Array2::zeros((seq, seq));
                for r in 0..seq {
                    let dot: f64 = (0..seq).map(|c| d_probs[[r, c]] * probs[[r, c]]).sum();
                    for c in 0..seq {
                        d_logits[[r, c]] = probs[[r, c]] * (d_probs[[r, c]] - dot);
                    }
                }

                d_q.slice_mut(cols).assign(&(d_logits.dot(&kh) * scale));
                d_k.slice_mut(cols)
                    .assign(&(d_logits.t().dot(&qh) * scale));
            }

            g.w_q = &g.w_q + &cache.x.t().dot(&d_q);
            g.b_q = &g.b_q + &d_q.sum_axis(Axis(0));
            g.w_k = &g.w_k + &cache.x.t().dot(&d_k);
            g.b_k = &g.b_k + &d_k.sum_axis(Axis(0));
            g.w_v = &g.w_v + &cache.x.t().dot(&d_v);
            g.b_v = &g.b_v + &d_v.sum_axis(Axis(0));

            d_x = d_x + d_q.dot(&layer.w_q.t()) + d_k.dot(&layer.w_k.t()) + d_v.dot(&layer.w_v.t());
            d_out = d_x;
        }
    }
}

// Flat parameter access, used by the optimizer step and the
// finite-difference tests.

fn layer_tensors(layer: &LayerParams) -> Vec<FlatView<'_>> {
    vec![
        FlatView::M(&layer.w_q),
        FlatView::V(&layer.b_q),
        FlatView::M(&layer.w_k),
        FlatView::V(&layer.b_k),
        FlatView::M(&layer.w_v),
        FlatView::V(&layer.b_v),
        FlatView::M(&layer.w_o),
        FlatView::V(&layer.b_o),
        FlatView::M(&layer.w_ff1),
        FlatView::V(&layer.b_ff1),
        FlatView::M(&layer.w_ff2),
        FlatView::V(&layer.b_ff2),
    ]
}

pub(crate) enum FlatView<'a> {
    M(&'a Array2<f64>),
    V(&'a Array1<f64>),
    S(f64),
}

impl GatedScorer {
    fn views(&self) -> Vec<FlatView<'_>> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.extend(layer_tensors(layer));
        }
        out.push(FlatView::M(&self.reg_w1));
        out.push(FlatView::V(&self.reg_b1));
        out.push(FlatView::V(&self.reg_w2));
        out.push(FlatView::S(self.reg_b2));
        out
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut flat = Vec::new();
        for view in self.views() {
            match view {
                FlatView::M(m) => flat.extend(m.iter()),
                FlatView::V(v) => flat.extend(v.iter()),
                FlatView::S(s) => flat.push(s),
            }
        }
        flat
    }

    /// Inverse of [`flatten`](Self::flatten); same tensor order.
    pub fn set_from_flat(&mut self, flat: &[f64]) {
        let mut it = flat.iter().copied();
        for layer in &mut self.layers {
            fill2(&mut layer.w_q, &mut it);
            fill1(&mut layer.b_q, &mut it);
            fill2(&mut layer.w_k, &mut it);
            fill1(&mut layer.b_k, &mut it);
            fill2(&mut layer.w_v, &mut it);
            fill1(&mut layer.b_v, &mut it);
            fill2(&mut layer.w_o, &mut it);
            fill1(&mut layer.b_o, &mut it);
            fill2(&mut layer.w_ff1, &mut it);
            fill1(&mut layer.b_ff1, &mut it);
            fill2(&mut layer.w_ff2, &mut it);
            fill1(&mut layer.b_ff2, &mut it);
        }
        fill2(&mut self.reg_w1, &mut it);
        fill1(&mut self.reg_b1, &mut it);
        fill1(&mut self.reg_w2, &mut it);
        self.reg_b2 = it.next().expect("flat vector too short");
        assert!(it.next().is_none(), "flat vector too long");
    }

    /// One plain gradient-descent step.
    pub fn sgd_step(&mut self, grads: &GatedGrads, learning_rate: f64) {
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            layer.w_q.scaled_add(-learning_rate, &g.w_q);
            layer.b_q.scaled_add(-learning_rate, &g.b_q);
            layer.w_k.scaled_add(-learning_rate, &g.w_k);
            layer.b_k.scaled_add(-learning_rate, &g.b_k);
            layer.w_v.scaled_add(-learning_rate, &g.w_v);
            layer.b_v.scaled_add(-learning_rate, &g.b_v);
            layer.w_o.scaled_add(-learning_rate, &g.w_o);
            layer.b_o.scaled_add(-learning_rate, &g.b_o);
            layer.w_ff1.scaled_add(-learning_rate, &g.w_ff1);
            layer.b_ff1.scaled_add(-learning_rate, &g.b_ff1);
            layer.w_ff2.scaled_add(-learning_rate, &g.w_ff2);
            layer.b_ff2.scaled_add(-learning_rate, &g.b_ff2);
        }
        self.reg_w1.scaled_add(-learning_rate, &grads.reg_w1);
        self.reg_b1.scaled_add(-learning_rate, &grads.reg_b1);
        self.reg_w2.scaled_add(-learning_rate, &grads.reg_w2);
        self.reg_b2 -= learning_rate * grads.reg_b2;
    }
}

impl GatedGrads {
    pub fn flatten(&self) -> Vec<f64> {
        let mut flat = Vec::new();
        for layer in &self.layers {
            for view in layer_tensors(layer) {
                match view {
                    FlatView::M(m) => flat.extend(m.iter()),
                    FlatView::V(v) => flat.extend(v.iter()),
                    FlatView::S(s) => flat.push(s),
                }
            }
        }
        flat.extend(self.reg_w1.iter());
        flat.extend(self.reg_b1.iter());
        flat.extend(self.reg_w2.iter());
        flat.push(self.reg_b2);
        flat
    }
}

fn fill2(m: &mut Array2<f64>, it: &mut impl Iterator<Item = f64>) {
    for v in m.iter_mut() {
        *v = it.next().expect("flat vector too short");
    }
}

fn fill1(m: &mut Array1<f64>, it: &mut impl Iterator<Item = f64>) {
    for v in m.iter_mut() {
        *v = it.next().expect("flat vector too short");
    }
}
