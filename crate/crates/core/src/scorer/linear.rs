//! Affine per-clip scorer: `score_i = w . x_i + b`.
//!
//! No output squashing, so MSE training on it is plain convex least
//! squares.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearScorer {
    pub weights: Array1<f64>,
    pub bias: f64,
    pub seed: u64,
}

impl LinearScorer {
    pub fn init(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = (1.0 / dim as f64).sqrt();
        Self {
            weights: Array1::from_shape_fn(dim, |_| rng.random_range(-a..a)),
            bias: 0.0,
            seed,
        }
    }

    pub fn predict(&self, features: &Array2<f64>) -> Result<Vec<f64>> {
        if features.ncols() != self.weights.len() {
            return Err(invalid(format!(
                "feature dim {} does not match weight dim {}",
                features.ncols(),
                self.weights.len()
            )));
        }
        Ok(features
            .rows()
            .into_iter()
            .map(|row| row.dot(&self.weights) + self.bias)
            .collect())
    }

    /// Gradient-descent step from `d(loss)/d(prediction)` per clip.
    pub fn apply_gradient(&mut self, features: &Array2<f64>, d_pred: &[f64], learning_rate: f64) {
        for (i, &d) in d_pred.iter().enumerate() {
            self.weights.scaled_add(-learning_rate * d, &features.row(i));
            self.bias -= learning_rate * d;
        }
    }
}
