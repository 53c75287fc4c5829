//! Ranking-quality metrics for summary evaluation.
//!
//! The NDCG family weights items by ground-truth saliency, so errors
//! on the most salient segments cost more than errors on negligible
//! ones. Kendall's tau and Spearman's rho treat all positions equally
//! and are included for comparison, along with the interval F-score
//! over frame selections.

use crate::error::{invalid, Result};
use crate::timeline::FrameSelection;

/// Top fraction of positions evaluated by the `@15%` variants.
pub const TOP_FRACTION: f64 = 0.15;

/// `k = max(1, ceil(fraction * n))`; the ceiling keeps k nonempty for
/// short videos.
pub fn k_at_fraction(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64) - 1e-9).ceil().max(1.0) as usize
}

fn gain(score: f64) -> f64 {
    score.exp2() - 1.0
}

fn discount(rank_1_indexed: usize) -> f64 {
    ((rank_1_indexed + 1) as f64).log2()
}

/// Indices sorted by score descending; ties broken by ascending
/// original index so rankings are deterministic.
pub fn ranking_by_scores(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// `DCG@k = sum_{j=1..k} (2^{g_j} - 1) / log2(j + 1)` over gains
/// already arranged in predicted-rank order.
pub fn dcg_at_k(gains_in_predicted_order: &[f64], k: usize) -> Result<f64> {
    let n = gains_in_predicted_order.len();
    if k == 0 || k > n {
        return Err(invalid(format!("k = {k} out of range for length {n}")));
    }
    if gains_in_predicted_order.iter().any(|g| !g.is_finite()) {
        return Err(invalid("gains must be finite"));
    }
    Ok(gains_in_predicted_order[..k]
        .iter()
        .enumerate()
        .map(|(j, &g)| gain(g) / discount(j + 1))
        .sum())
}

/// NDCG@k of a predicted score sequence against ground truth.
///
/// Items are ranked by predicted score; gains come from the
/// ground-truth scores in that order, normalized by the DCG of the
/// ideal (ground-truth descending) order. When the ideal DCG is zero
/// there is no ranking to get wrong and the result is 1.
pub fn ndcg_at_k(pred_scores: &[f64], gt_scores: &[f64], k: usize) -> Result<f64> {
    if pred_scores.len() != gt_scores.len() {
        return Err(invalid(format!(
            "length mismatch: {} predictions vs {} ground-truth scores",
            pred_scores.len(),
            gt_scores.len()
        )));
    }
    if pred_scores.is_empty() {
        return Err(invalid("score sequences are empty"));
    }
    let order = ranking_by_scores(pred_scores);
    let gains_in_order: Vec<f64> = order.iter().map(|&i| gt_scores[i]).collect();
    let dcg = dcg_at_k(&gains_in_order, k)?;

    let mut ideal: Vec<f64> = gt_scores.to_vec();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let max_dcg = dcg_at_k(&ideal, k)?;
    if max_dcg <= 0.0 {
        return Ok(1.0);
    }
    Ok(dcg / max_dcg)
}

/// NDCG at the top 15% and over the full list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NdcgPair {
    pub at_15: f64,
    pub at_all: f64,
}

/// Visual-modality NDCG: predicted saliency against ground truth.
pub fn ndcg_vm(pred_saliency: &[f64], gt_saliency: &[f64]) -> Result<NdcgPair> {
    let n = gt_saliency.len();
    if n == 0 {
        return Err(invalid("score sequences are empty"));
    }
    Ok(NdcgPair {
        at_15: ndcg_at_k(pred_saliency, gt_saliency, k_at_fraction(n, TOP_FRACTION))?,
        at_all: ndcg_at_k(pred_saliency, gt_saliency, n)?,
    })
}

/// Textual-modality NDCG: a per-clip text-to-frame similarity sequence
/// plays the role of the predicted scores. Inputs must already be at
/// clip granularity; no resampling is performed.
pub fn ndcg_tm(similarity_sequence: &[f64], gt_saliency: &[f64]) -> Result<NdcgPair> {
    if similarity_sequence.iter().any(|s| !s.is_finite()) {
        return Err(invalid("similarity sequence must be finite"));
    }
    ndcg_vm(similarity_sequence, gt_saliency)
}

/// Bimodal score: componentwise mean of the two modality scores.
pub fn ndcg_ms(vm: &NdcgPair, tm: &NdcgPair) -> NdcgPair {
    NdcgPair {
        at_15: (vm.at_15 + tm.at_15) / 2.0,
        at_all: (vm.at_all + tm.at_all) / 2.0,
    }
}

/// Kendall's tau-b with tie correction.
///
/// Returns NaN when one side is entirely tied (the coefficient is
/// undefined there).
pub fn kendall_tau(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    let n = a.len();
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    let mut ties_a = 0i64;
    let mut ties_b = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let da = a[i] - a[j];
            let db = b[i] - b[j];
            if da == 0.0 {
                ties_a += 1;
            }
            if db == 0.0 {
                ties_b += 1;
            }
            let s = da * db;
            if s > 0.0 {
                concordant += 1;
            } else if s < 0.0 {
                discordant += 1;
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    let denom = (((n0 - ties_a) as f64) * ((n0 - ties_b) as f64)).sqrt();
    if denom == 0.0 {
        return Ok(f64::NAN);
    }
    Ok((concordant - discordant) as f64 / denom)
}

/// Spearman's rho: Pearson correlation of average ranks (ties receive
/// their mean rank). NaN when either rank sequence has zero variance.
pub fn spearman_rho(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    Ok(pearson(&ra, &rb))
}

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(invalid(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(invalid("rank correlation needs at least 2 elements"));
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(invalid("values must be finite"));
    }
    Ok(())
}

/// 1-based ranks; tied values all receive the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut pos = 0;
    while pos < order.len() {
        let mut end = pos + 1;
        while end < order.len() && values[order[end]] == values[order[pos]] {
            end += 1;
        }
        // positions pos..end (0-based) share the mean rank
        let mean_rank = (pos + end + 1) as f64 / 2.0;
        for &idx in &order[pos..end] {
            ranks[idx] = mean_rank;
        }
        pos = end;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (x, y) in a.iter().zip(b) {
        let dx = x - mean_a;
        let dy = y - mean_b;
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return f64::NAN;
    }
    cov / (var_a * var_b).sqrt()
}

/// F-score between two frame selections of equal length: harmonic mean
/// of precision and recall of the selected-frame sets; 0 when either
/// selection is empty.
pub fn interval_fscore(pred: &FrameSelection, gt: &FrameSelection) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(invalid(format!(
            "frame count mismatch: {} vs {}",
            pred.len(),
            gt.len()
        )));
    }
    let overlap = pred
        .bits()
        .iter()
        .zip(gt.bits())
        .filter(|(p, g)| **p && **g)
        .count() as f64;
    let pred_count = pred.count_ones() as f64;
    let gt_count = gt.count_ones() as f64;
    if pred_count == 0.0 || gt_count == 0.0 {
        return Ok(0.0);
    }
    let precision = overlap / pred_count;
    let recall = overlap / gt_count;
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}
