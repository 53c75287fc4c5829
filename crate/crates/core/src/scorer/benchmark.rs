//! Synthetic benchmark for the loss comparison.
//!
//! Each video gets a latent per-clip saliency with a salient minority
//! of clips, features that encode the latent ordering (plus noise and
//! distractor dimensions), and regression targets derived from the
//! latent through a per-video strictly monotone distortion (random
//! positive scale and offset squashed through a sigmoid). The
//! distortion leaves every within-video ranking intact while making
//! absolute target values inconsistent across videos, so value
//! regression chases unlearnable offsets while rank learning is
//! unaffected. The control condition disables the distortion.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::SyntheticSample;

const HIGHLIGHT_FRACTION: f64 = 0.2;
const TRAIN_FRACTION: f64 = 0.8;

/// Distorted-target benchmark at the default feature width.
pub fn make_distorted_benchmark(
    num_videos: usize,
    clips_per_video: usize,
    seed: u64,
) -> (Vec<SyntheticSample>, Vec<SyntheticSample>) {
    make_benchmark(num_videos, clips_per_video, 16, seed, true)
}

/// Benchmark generator; `distorted = false` is the control condition
/// where targets equal the latent saliency.
///
/// Degenerate videos (fewer than two clips) are excluded by
/// construction, so `clips_per_video = 1` yields empty sets.
pub fn make_benchmark(
    num_videos: usize,
    clips_per_video: usize,
    model_dim: usize,
    seed: u64,
    distorted: bool,
) -> (Vec<SyntheticSample>, Vec<SyntheticSample>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(num_videos);
    if clips_per_video < 2 {
        return (Vec::new(), Vec::new());
    }
    for _ in 0..num_videos {
        samples.push(generate_video(&mut rng, clips_per_video, model_dim, distorted));
    }
    let train_len = ((num_videos as f64 * TRAIN_FRACTION).round() as usize)
        .clamp(1, num_videos.saturating_sub(1).max(1));
    let validation = samples.split_off(train_len.min(samples.len()));
    (samples, validation)
}

fn generate_video(
    rng: &mut ChaCha8Rng,
    n: usize,
    model_dim: usize,
    distorted: bool,
) -> SyntheticSample {
    // Latent saliency: mostly baseline, a salient minority on top.
    let num_high = ((n as f64 * HIGHLIGHT_FRACTION).round() as usize).max(1);
    let mut latent: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..0.55)).collect();
    let mut positions: Vec<usize> = (0..n).collect();
    positions.shuffle(rng);
    for &p in positions.iter().take(num_high) {
        latent[p] = rng.random_range(0.75..1.0);
    }

    // Features carry the ranking signal in a few dimensions; the rest
    // is distraction.
    let mut features = Array2::zeros((n, model_dim));
    for i in 0..n {
        let z = latent[i];
        features[[i, 0]] = z + rng.random_range(-0.05..0.05);
        if model_dim > 1 {
            features[[i, 1]] = z * z + rng.random_range(-0.05..0.05);
        }
        if model_dim > 2 {
            features[[i, 2]] = (3.0 * z).sin() + rng.random_range(-0.05..0.05);
        }
        for j in 3..model_dim {
            features[[i, j]] = rng.random_range(-0.5..0.5);
        }
    }

    // Distortion parameters are drawn unconditionally so the control
    // condition sees the exact same latents and features per seed.
    let scale = rng.random_range(1.0..6.0);
    let offset = rng.random_range(-1.5..1.5);
    let target_saliency = if distorted {
        latent
            .iter()
            .map(|&z| 1.0 / (1.0 + (-(scale * (z - 0.5) + offset)).exp()))
            .collect()
    } else {
        latent
    };

    SyntheticSample {
        features,
        target_saliency,
    }
}
