//! Shared generators for integration and acceptance tests.

use bisum_core::timeline::ClipTimeline;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random run-length timeline: adjacent runs carry different integer
/// scores in 0..=4.
pub fn random_timeline(rng: &mut ChaCha8Rng, min_clips: usize, max_clips: usize) -> ClipTimeline {
    let target = rng.random_range(min_clips..=max_clips);
    let mut scores: Vec<f64> = Vec::with_capacity(target);
    let mut last: i64 = -1;
    while scores.len() < target {
        let mut level = rng.random_range(0..=4i64);
        while level == last {
            level = rng.random_range(0..=4i64);
        }
        let run = rng.random_range(1..=6usize).min(target - scores.len());
        scores.extend(std::iter::repeat(level as f64).take(run));
        last = level;
    }
    ClipTimeline::from_scores(scores, 2.0).unwrap()
}

/// Timeline guaranteed to contain one long top-scored segment, the
/// regime where whole-segment knapsack selection is forced to reject
/// salient content while scaling keeps part of it.
pub fn long_highlight_timeline(rng: &mut ChaCha8Rng) -> ClipTimeline {
    let total = rng.random_range(30..=60usize);
    let highlight_len = rng.random_range(8..=14usize);
    let highlight_at = rng.random_range(1..total - highlight_len - 1);
    let mut scores: Vec<f64> = Vec::with_capacity(total);
    let mut last: i64 = -1;
    while scores.len() < total {
        if scores.len() == highlight_at {
            scores.extend(std::iter::repeat(4.0).take(highlight_len));
            last = 4;
            continue;
        }
        let limit = if scores.len() < highlight_at {
            highlight_at - scores.len()
        } else {
            total - scores.len()
        };
        let mut level = rng.random_range(0..=3i64);
        while level == last {
            level = rng.random_range(0..=3i64);
        }
        let run = rng.random_range(1..=5usize).min(limit);
        scores.extend(std::iter::repeat(level as f64).take(run));
        last = level;
    }
    ClipTimeline::from_scores(scores, 2.0).unwrap()
}
