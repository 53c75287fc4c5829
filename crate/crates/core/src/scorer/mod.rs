//! Desk-scale trainable saliency scorer.
//!
//! Two scorer kinds share one training loop: a plain linear model
//! (affine map per clip, handy as a convex sanity case) and the
//! gated-attention encoder with a two-layer regression head. Training
//! is single-threaded, seeded, mini-batch (one video per step)
//! gradient descent; the loss is either mean squared error or the
//! differentiable ranking objective from [`crate::ranking`].

mod benchmark;
mod gated;
mod linear;

pub use benchmark::{make_benchmark, make_distorted_benchmark};
pub use gated::{GatedForward, GatedGrads, GatedScorer, LayerParams};
pub use linear::LinearScorer;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::metrics::{self, ndcg_vm};
use crate::ranking::{mse_loss, neural_ndcg_loss, LossValue};
use crate::timeline::normalize_scores;

/// Shape of the gated-attention encoder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub num_layers: usize,
    pub model_dim: usize,
    pub num_heads: usize,
    pub ffn_dim: usize,
    pub seed: u64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            num_layers: 2,
            model_dim: 16,
            num_heads: 2,
            ffn_dim: 32,
            seed: 0,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_layers == 0 || self.model_dim == 0 || self.num_heads == 0 || self.ffn_dim == 0
        {
            return Err(invalid("all encoder dimensions must be >= 1"));
        }
        if self.model_dim % self.num_heads != 0 {
            return Err(invalid(format!(
                "model dim {} not divisible by {} heads",
                self.model_dim, self.num_heads
            )));
        }
        Ok(())
    }
}

/// Which tensor the regression head consumes.
///
/// The gate values are the literal reading of the architecture; the
/// hidden states are the plausible alternative, kept as a switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressorInput {
    #[default]
    Gates,
    HiddenStates,
}

/// Trainable weights of either scorer kind.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScorerParams {
    Linear(LinearScorer),
    Gated(Box<GatedScorer>),
}

impl ScorerParams {
    pub fn init_linear(dim: usize, seed: u64) -> Self {
        Self::Linear(LinearScorer::init(dim, seed))
    }

    pub fn init_gated(config: &EncoderConfig, regressor_input: RegressorInput) -> Result<Self> {
        Ok(Self::Gated(Box::new(GatedScorer::init(
            config,
            regressor_input,
        )?)))
    }

    pub fn feature_dim(&self) -> usize {
        match self {
            Self::Linear(p) => p.weights.len(),
            Self::Gated(p) => p.config.model_dim,
        }
    }

    /// Predicted saliency, one score per clip.
    pub fn predict(&self, features: &Array2<f64>) -> Result<Vec<f64>> {
        match self {
            Self::Linear(p) => p.predict(features),
            Self::Gated(p) => Ok(p.forward(features)?.predictions().to_vec()),
        }
    }
}

/// Versioned serialized form of trained weights, config embedded.
#[derive(Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub params: ScorerParams,
}

pub const CHECKPOINT_VERSION: u32 = 1;

impl Checkpoint {
    pub fn new(params: ScorerParams) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            params,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| invalid(format!("serialize: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint =
            serde_json::from_str(text).map_err(|e| invalid(format!("checkpoint: {e}")))?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(invalid(format!(
                "unsupported checkpoint version {}",
                ckpt.version
            )));
        }
        Ok(ckpt)
    }
}

/// One video's features and per-clip regression targets in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct SyntheticSample {
    pub features: Array2<f64>,
    pub target_saliency: Vec<f64>,
}

impl SyntheticSample {
    pub fn validate(&self) -> Result<()> {
        if self.features.nrows() != self.target_saliency.len() {
            return Err(invalid(format!(
                "{} feature rows vs {} targets",
                self.features.nrows(),
                self.target_saliency.len()
            )));
        }
        if self.target_saliency.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(invalid("targets must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Training objective selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Mse,
    NeuralNdcg,
}

/// Training hyperparameters. Ranking-loss settings are ignored for MSE.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Cut-off for the ranking loss; `None` supervises the full list.
    pub ndcg_k: Option<usize>,
    pub temperature: f64,
    pub sinkhorn_iterations: usize,
}

impl TrainConfig {
    pub fn new(loss: LossKind, epochs: usize, learning_rate: f64, seed: u64) -> Self {
        Self {
            loss,
            epochs,
            learning_rate,
            seed,
            ndcg_k: None,
            temperature: crate::ranking::DEFAULT_TEMPERATURE,
            sinkhorn_iterations: crate::ranking::DEFAULT_SINKHORN_ITERATIONS,
        }
    }
}

/// Loss and validation quality recorded once per epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_ndcg_at_15: f64,
}

/// Trained weights plus the per-epoch history.
#[derive(Debug)]
pub struct TrainOutcome {
    pub params: ScorerParams,
    pub history: Vec<EpochRecord>,
}

fn loss_and_grad(config: &TrainConfig, pred: &[f64], gt: &[f64]) -> Result<LossValue> {
    match config.loss {
        LossKind::Mse => mse_loss(pred, gt),
        LossKind::NeuralNdcg => {
            let k = config.ndcg_k.unwrap_or(gt.len()).min(gt.len()).max(1);
            neural_ndcg_loss(pred, gt, k, config.temperature, config.sinkhorn_iterations)
        }
    }
}

/// Seeded mini-batch gradient descent, one video per step.
///
/// The epoch history records the mean training loss and the mean
/// validation NDCG@15%. A non-finite loss aborts with
/// [`Error::TrainingDiverged`] naming the epoch.
pub fn train(
    train_set: &[SyntheticSample],
    validation_set: &[SyntheticSample],
    init: ScorerParams,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    if train_set.is_empty() {
        return Err(invalid("training set is empty"));
    }
    if config.epochs == 0 {
        return Err(invalid("epochs must be >= 1"));
    }
    for sample in train_set.iter().chain(validation_set) {
        sample.validate()?;
        if sample.features.ncols() != init.feature_dim() {
            return Err(invalid(format!(
                "sample feature dim {} does not match scorer dim {}",
                sample.features.ncols(),
                init.feature_dim()
            )));
        }
    }

    let mut params = init;
    let mut history = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for &i in &order {
            let sample = &train_set[i];
            let step_loss = match &mut params {
                ScorerParams::Linear(p) => {
                    let pred = p.predict(&sample.features)?;
                    let loss = loss_and_grad(config, &pred, &sample.target_saliency)?;
                    p.apply_gradient(&sample.features, &loss.gradient, config.learning_rate);
                    loss.value
                }
                ScorerParams::Gated(p) => {
                    let pass = p.forward(&sample.features)?;
                    let loss =
                        loss_and_grad(config, pass.predictions(), &sample.target_saliency)?;
                    let mut grads = p.zero_grads();
                    p.backward(&pass, &loss.gradient, &mut grads);
                    p.sgd_step(&grads, config.learning_rate);
                    loss.value
                }
            };
            if !step_loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            epoch_loss += step_loss;
        }
        let train_loss = epoch_loss / train_set.len() as f64;
        let val_ndcg_at_15 = validation_ndcg_at_15(&params, validation_set)?;
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_ndcg_at_15,
        });
    }

    Ok(TrainOutcome { params, history })
}

/// Mean NDCG@15% of scorer predictions over a validation set
/// (NaN when the set is empty).
pub fn validation_ndcg_at_15(
    params: &ScorerParams,
    validation_set: &[SyntheticSample],
) -> Result<f64> {
    if validation_set.is_empty() {
        return Ok(f64::NAN);
    }
    let mut sum = 0.0;
    for sample in validation_set {
        let pred = params.predict(&sample.features)?;
        let gt = normalize_scores(&sample.target_saliency)?;
        sum += ndcg_vm(&pred, &gt)?.at_15;
    }
    Ok(sum / validation_set.len() as f64)
}

/// Full evaluation of a scorer over a sample set: mean NDCG@15%/@all
/// plus mean Kendall tau and Spearman rho (NaN-valued videos are
/// skipped for the correlation means).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScorerEvaluation {
    pub ndcg_at_15: f64,
    pub ndcg_at_all: f64,
    pub kendall_tau: f64,
    pub spearman_rho: f64,
}

pub fn evaluate_scorer(
    params: &ScorerParams,
    samples: &[SyntheticSample],
) -> Result<ScorerEvaluation> {
    if samples.is_empty() {
        return Err(invalid("evaluation set is empty"));
    }
    let mut at15 = 0.0;
    let mut atall = 0.0;
    let mut tau_sum = 0.0;
    let mut tau_n = 0usize;
    let mut rho_sum = 0.0;
    let mut rho_n = 0usize;
    for sample in samples {
        let pred = params.predict(&sample.features)?;
        let gt = normalize_scores(&sample.target_saliency)?;
        let pair = ndcg_vm(&pred, &gt)?;
        at15 += pair.at_15;
        atall += pair.at_all;
        let tau = metrics::kendall_tau(&pred, &gt)?;
        if tau.is_finite() {
            tau_sum += tau;
            tau_n += 1;
        }
        let rho = metrics::spearman_rho(&pred, &gt)?;
        if rho.is_finite() {
            rho_sum += rho;
            rho_n += 1;
        }
    }
    let n = samples.len() as f64;
    Ok(ScorerEvaluation {
        ndcg_at_15: at15 / n,
        ndcg_at_all: atall / n,
        kendall_tau: if tau_n > 0 { tau_sum / tau_n as f64 } else { f64::NAN },
        spearman_rho: if rho_n > 0 { rho_sum / rho_n as f64 } else { f64::NAN },
    })
}

/// History rows as CSV (`epoch,train_loss,val_ndcg_at_15`).
pub fn history_to_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,train_loss,val_ndcg_at_15\n");
    for record in history {
        out.push_str(&format!(
            "{},{},{}\n",
            record.epoch, record.train_loss, record.val_ndcg_at_15
        ));
    }
    out
}

/// Encoder contract entry point: runs the saliency-sensing stack and
/// returns the final hidden states and the final layer's gates.
pub fn encoder_forward(
    features: &Array2<f64>,
    params: &GatedScorer,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let pass = params.forward(features)?;
    Ok((pass.final_hidden().clone(), pass.final_gates().clone()))
}

/// Regression head alone: two affine layers with a ReLU between and a
/// sigmoid after, applied per position.
pub fn regress_scores(hidden_or_gate: &Array2<f64>, params: &GatedScorer) -> Result<Vec<f64>> {
    if hidden_or_gate.ncols() != params.config.model_dim {
        return Err(invalid(format!(
            "input dim {} does not match model dim {}",
            hidden_or_gate.ncols(),
            params.config.model_dim
        )));
    }
    let r1 = hidden_or_gate.dot(&params.reg_w1) + &params.reg_b1;
    let a = r1.mapv(|z| z.max(0.0));
    Ok(a.rows()
        .into_iter()
        .map(|row| 1.0 / (1.0 + (-(row.dot(&params.reg_w2) + params.reg_b2)).exp()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn tiny_config(seed: u64) -> EncoderConfig {
        EncoderConfig {
            num_layers: 2,
            model_dim: 4,
            num_heads: 2,
            ffn_dim: 6,
            seed,
        }
    }

    #[test]
    fn config_validation() {
        assert!(EncoderConfig::default().validate().is_ok());
        let bad = EncoderConfig {
            model_dim: 5,
            num_heads: 2,
            ..EncoderConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_ffn_weights_give_half_gates() {
        let config = tiny_config(3);
        let mut scorer = GatedScorer::init(&config, RegressorInput::Gates).unwrap();
        for layer in &mut scorer.layers {
            layer.w_ff1.fill(0.0);
            layer.b_ff1.fill(0.0);
            layer.w_ff2.fill(0.0);
            layer.b_ff2.fill(0.0);
        }
        let features = Array2::from_shape_fn((3, 4), |(i, j)| (i + j) as f64 * 0.1);
        let (_, gates) = encoder_forward(&features, &scorer).unwrap();
        for &g in gates.iter() {
            assert_eq!(g, 0.5);
        }
    }

    #[test]
    fn single_clip_attention_is_identity_mixing() {
        let config = tiny_config(7);
        let scorer = GatedScorer::init(&config, RegressorInput::Gates).unwrap();
        let features = Array2::from_shape_fn((1, 4), |(_, j)| 0.3 + j as f64 * 0.2);
        let pass = scorer.forward(&features).unwrap();
        // With one clip, softmax attention weights are exactly 1, so
        // the context equals the value projection and the output is
        // gate * (input + w_o(v) + b_o).
        let layer = &scorer.layers[0];
        let v = features.dot(&layer.w_v) + &layer.b_v;
        let v_bar = &features + &(v.dot(&layer.w_o) + &layer.b_o);
        let (got_v_bar, _, _) = pass.layer_trace(0);
        for (a, b) in got_v_bar.iter().zip(v_bar.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn regressor_zero_weights_output_half() {
        let config = tiny_config(11);
        let mut scorer = GatedScorer::init(&config, RegressorInput::Gates).unwrap();
        scorer.reg_w1.fill(0.0);
        scorer.reg_b1.fill(0.0);
        scorer.reg_w2.fill(0.0);
        scorer.reg_b2 = 0.0;
        let features = Array2::from_shape_fn((5, 4), |(i, j)| (i * j) as f64 * 0.05);
        let pred = scorer.forward(&features).unwrap().predictions().to_vec();
        assert_eq!(pred.len(), 5);
        for p in pred {
            assert_eq!(p, 0.5);
        }
    }

    #[test]
    fn forward_matches_straightforward_reimplementation() {
        // Oracle: an index-by-index reimplementation with no shared
        // code beyond the parameter values.
        let config = EncoderConfig {
            num_layers: 1,
            model_dim: 4,
            num_heads: 2,
            ffn_dim: 3,
            seed: 42,
        };
        let scorer = GatedScorer::init(&config, RegressorInput::Gates).unwrap();
        let n = 4;
        let d = 4;
        let features = Array2::from_shape_fn((n, d), |(i, j)| ((i * 7 + j * 3) % 5) as f64 * 0.2);

        let layer = &scorer.layers[0];
        let affine = |x: &Array2<f64>, w: &Array2<f64>, b: &ndarray::Array1<f64>| {
            let mut out = vec![vec![0.0; w.ncols()]; x.nrows()];
            for i in 0..x.nrows() {
                for c in 0..w.ncols() {
                    let mut acc = b[c];
                    for r in 0..w.nrows() {
                        acc += x[[i, r]] * w[[r, c]];
                    }
                    out[i][c] = acc;
                }
            }
            out
        };
        let q = affine(&features, &layer.w_q, &layer.b_q);
        let k = affine(&features, &layer.w_k, &layer.b_k);
        let v = affine(&features, &layer.w_v, &layer.b_v);
        let head_dim = 2;
        let mut ctx = vec![vec![0.0; d]; n];
        for h in 0..2 {
            let off = h * head_dim;
            for i in 0..n {
                let mut logits = vec![0.0; n];
                for j in 0..n {
                    let mut dot = 0.0;
                    for c in 0..head_dim {
                        dot += q[i][off + c] * k[j][off + c];
                    }
                    logits[j] = dot / (head_dim as f64).sqrt();
                }
                let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
                let sum: f64 = exps.iter().sum();
                for j in 0..n {
                    for c in 0..head_dim {
                        ctx[i][off + c] += exps[j] / sum * v[j][off + c];
                    }
                }
            }
        }
        let ctx_arr = Array2::from_shape_fn((n, d), |(i, j)| ctx[i][j]);
        let attn_out = affine(&ctx_arr, &layer.w_o, &layer.b_o);
        let mut v_bar = vec![vec![0.0; d]; n];
        for i in 0..n {
            for j in 0..d {
                v_bar[i][j] = features[[i, j]] + attn_out[i][j];
            }
        }
        let v_bar_arr = Array2::from_shape_fn((n, d), |(i, j)| v_bar[i][j]);
        let f1 = affine(&v_bar_arr, &layer.w_ff1, &layer.b_ff1);
        let a1 = Array2::from_shape_fn((n, 3), |(i, j)| f1[i][j].max(0.0));
        let f2 = affine(&a1, &layer.w_ff2, &layer.b_ff2);
        let mut expected_gate = vec![vec![0.0; d]; n];
        let mut expected_out = vec![vec![0.0; d]; n];
        for i in 0..n {
            for j in 0..d {
                expected_gate[i][j] = 1.0 / (1.0 + (-f2[i][j]).exp());
                expected_out[i][j] = expected_gate[i][j] * v_bar[i][j];
            }
        }

        let (hidden, gates) = encoder_forward(&features, &scorer).unwrap();
        for i in 0..n {
            for j in 0..d {
                assert!((gates[[i, j]] - expected_gate[i][j]).abs() < 1e-12);
                assert!((hidden[[i, j]] - expected_out[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn regress_scores_shape_contract() {
        let config = tiny_config(5);
        let scorer = GatedScorer::init(&config, RegressorInput::Gates).unwrap();
        let input = Array2::from_shape_fn((6, 4), |(i, j)| (i + j) as f64 * 0.1);
        let scores = regress_scores(&input, &scorer).unwrap();
        assert_eq!(scores.len(), 6);
        for s in &scores {
            assert!(*s > 0.0 && *s < 1.0);
        }
        let wrong = Array2::zeros((6, 5));
        assert!(regress_scores(&wrong, &scorer).is_err());
    }

    #[test]
    fn regress_scores_matches_full_forward() {
        let config = tiny_config(9);
        let scorer = GatedScorer::init(&config, RegressorInput::Gates).unwrap();
        let features = Array2::from_shape_fn((4, 4), |(i, j)| (i as f64 - j as f64) * 0.15);
        let pass = scorer.forward(&features).unwrap();
        let via_head = regress_scores(pass.final_gates(), &scorer).unwrap();
        for (a, b) in via_head.iter().zip(pass.predictions()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_learning_rate_keeps_params_and_history_flat() {
        let (train_set, val_set) = make_benchmark(6, 8, 4, 1, true);
        let init = ScorerParams::init_gated(&tiny_config(2), RegressorInput::Gates).unwrap();
        let before = match &init {
            ScorerParams::Gated(p) => p.flatten(),
            _ => unreachable!(),
        };
        let config = TrainConfig::new(LossKind::NeuralNdcg, 3, 0.0, 5);
        let outcome = train(&train_set, &val_set, init, &config).unwrap();
        let after = match &outcome.params {
            ScorerParams::Gated(p) => p.flatten(),
            _ => unreachable!(),
        };
        assert_eq!(before, after);
        let first = outcome.history[0];
        for rec in &outcome.history {
            assert_eq!(rec.train_loss, first.train_loss);
            assert_eq!(rec.val_ndcg_at_15, first.val_ndcg_at_15);
        }
    }

    #[test]
    fn linear_mse_converges_on_linear_targets() {
        // Convex least squares: a linear scorer on linearly generated
        // targets must drive the training loss below 1e-3.
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let dim = 4;
        let w_star: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..0.2)).collect();
        let b_star = 0.1;
        let mut dataset = Vec::new();
        for _ in 0..10 {
            let features = Array2::from_shape_fn((6, dim), |_| rng.random_range(0.0..1.0));
            let targets: Vec<f64> = features
                .rows()
                .into_iter()
                .map(|row| {
                    row.iter()
                        .zip(&w_star)
                        .map(|(x, w)| x * w)
                        .sum::<f64>()
                        + b_star
                })
                .collect();
            dataset.push(SyntheticSample {
                features,
                target_saliency: targets,
            });
        }
        let init = ScorerParams::init_linear(dim, 3);
        let config = TrainConfig::new(LossKind::Mse, 500, 0.3, 9);
        let outcome = train(&dataset, &[], init, &config).unwrap();
        let final_loss = outcome.history.last().unwrap().train_loss;
        assert!(final_loss < 1e-3, "final loss {final_loss}");
    }

    #[test]
    fn train_is_deterministic_per_seed() {
        let (train_set, val_set) = make_benchmark(6, 8, 4, 11, true);
        let config = TrainConfig::new(LossKind::NeuralNdcg, 4, 0.2, 21);
        let run = || {
            let init = ScorerParams::init_gated(&tiny_config(4), RegressorInput::Gates).unwrap();
            train(&train_set, &val_set, init, &config).unwrap().history
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn train_rejects_empty_or_zero_epochs() {
        let init = ScorerParams::init_linear(4, 0);
        let config = TrainConfig::new(LossKind::Mse, 1, 0.1, 0);
        assert!(train(&[], &[], init.clone(), &config).is_err());
        let (train_set, _) = make_benchmark(2, 4, 4, 0, false);
        let zero_epochs = TrainConfig::new(LossKind::Mse, 0, 0.1, 0);
        assert!(train(&train_set, &[], init, &zero_epochs).is_err());
    }

    #[test]
    fn divergence_is_reported_with_epoch() {
        let (train_set, _) = make_benchmark(4, 6, 4, 2, false);
        let init = ScorerParams::init_linear(4, 1);
        let config = TrainConfig::new(LossKind::Mse, 50, 1e6, 1);
        match train(&train_set, &[], init, &config) {
            Err(Error::TrainingDiverged { .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn checkpoint_roundtrip() {
        let init = ScorerParams::init_gated(&tiny_config(13), RegressorInput::HiddenStates)
            .unwrap();
        let json = Checkpoint::new(init).to_json().unwrap();
        let restored = Checkpoint::from_json(&json).unwrap();
        assert_eq!(restored.version, CHECKPOINT_VERSION);
        match restored.params {
            ScorerParams::Gated(p) => {
                assert_eq!(p.regressor_input, RegressorInput::HiddenStates);
                assert_eq!(p.config.model_dim, 4);
            }
            _ => panic!("wrong kind"),
        }
        assert!(Checkpoint::from_json("{\"version\":99,\"params\":null}").is_err());
    }
}
