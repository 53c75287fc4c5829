//! Corpus statistics and the saliency-preservation check.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{invalid, Result};
use crate::metrics::spearman_rho;
use crate::timeline::{rasterize, DEFAULT_FPS};

use super::{Split, SummaryTriplet};

/// Aggregates for one split (or the whole corpus).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitStats {
    pub video_count: usize,
    pub avg_video_len_s: f64,
    pub total_len_h: f64,
    pub avg_vm_len_s: f64,
    pub avg_vm_proportion_pct: f64,
    pub avg_tm_len_words: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub bin_start: f64,
    pub bin_end: f64,
    pub count: usize,
}

/// Full dataset statistics report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    pub train: SplitStats,
    pub validation: SplitStats,
    pub test: SplitStats,
    pub overall: SplitStats,
    /// Summary length as percent of video duration, 1-point bins over [5, 15].
    pub vm_proportion_histogram: Vec<HistogramBin>,
    /// Midpoint position of each summary interval as percent of video
    /// duration, 5-point bins over [0, 100].
    pub segment_position_histogram: Vec<HistogramBin>,
}

fn split_stats<'a>(triplets: impl Iterator<Item = &'a SummaryTriplet>) -> SplitStats {
    let mut count = 0usize;
    let mut video_len = 0.0;
    let mut vm_len = 0.0;
    let mut proportion = 0.0;
    let mut words = 0.0;
    for t in triplets {
        count += 1;
        let duration = t.timeline.video_duration_s();
        let summary = t.vm_summary.total_duration();
        video_len += duration;
        vm_len += summary;
        proportion += 100.0 * summary / duration;
        words += t.tm_summary.split_whitespace().count() as f64;
    }
    if count == 0 {
        return SplitStats {
            video_count: 0,
            avg_video_len_s: 0.0,
            total_len_h: 0.0,
            avg_vm_len_s: 0.0,
            avg_vm_proportion_pct: 0.0,
            avg_tm_len_words: 0.0,
        };
    }
    let n = count as f64;
    SplitStats {
        video_count: count,
        avg_video_len_s: video_len / n,
        total_len_h: video_len / 3600.0,
        avg_vm_len_s: vm_len / n,
        avg_vm_proportion_pct: proportion / n,
        avg_tm_len_words: words / n,
    }
}

/// Exact aggregates plus fixed-bin histograms.
pub fn compute_stats(triplets: &[SummaryTriplet]) -> Result<DatasetStats> {
    if triplets.is_empty() {
        return Err(invalid("dataset is empty"));
    }
    let of_split = |s: Split| split_stats(triplets.iter().filter(move |t| t.split == s));

    let mut proportion_bins = vec![0usize; 10];
    let mut position_bins = vec![0usize; 20];
    for t in triplets {
        let duration = t.timeline.video_duration_s();
        let pct = 100.0 * t.vm_summary.total_duration() / duration;
        let idx = (((pct - 5.0).floor()) as isize).clamp(0, 9) as usize;
        proportion_bins[idx] += 1;
        for &(start, end) in &t.vm_summary.intervals {
            let mid_pct = 100.0 * (start + end) / 2.0 / duration;
            let idx = ((mid_pct / 5.0).floor() as isize).clamp(0, 19) as usize;
            position_bins[idx] += 1;
        }
    }

    Ok(DatasetStats {
        train: of_split(Split::Train),
        validation: of_split(Split::Validation),
        test: of_split(Split::Test),
        overall: split_stats(triplets.iter()),
        vm_proportion_histogram: proportion_bins
            .iter()
            .enumerate()
            .map(|(i, &count)| HistogramBin {
                bin_start: 5.0 + i as f64,
                bin_end: 6.0 + i as f64,
                count,
            })
            .collect(),
        segment_position_histogram: position_bins
            .iter()
            .enumerate()
            .map(|(i, &count)| HistogramBin {
                bin_start: 5.0 * i as f64,
                bin_end: 5.0 * (i + 1) as f64,
                count,
            })
            .collect(),
    })
}

/// Flat CSV: one row per split plus the overall row.
pub fn stats_csv(stats: &DatasetStats) -> String {
    let mut out = String::from(
        "split,video_count,avg_video_len_s,total_len_h,avg_vm_len_s,avg_vm_proportion_pct,avg_tm_len_words\n",
    );
    for (name, s) in [
        ("train", &stats.train),
        ("validation", &stats.validation),
        ("test", &stats.test),
        ("overall", &stats.overall),
    ] {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            name,
            s.video_count,
            s.avg_video_len_s,
            s.total_len_h,
            s.avg_vm_len_s,
            s.avg_vm_proportion_pct,
            s.avg_tm_len_words
        ));
    }
    out
}

/// Histogram rows as CSV (`bin_start,bin_end,count`).
pub fn histogram_csv(bins: &[HistogramBin]) -> String {
    let mut out = String::from("bin_start,bin_end,count\n");
    for b in bins {
        out.push_str(&format!("{},{},{}\n", b.bin_start, b.bin_end, b.count));
    }
    out
}

/// Spearman correlation between per-frame saliency and summary
/// membership, per video and averaged.
#[derive(Debug, Clone, Serialize)]
pub struct PreservationReport {
    pub per_video: Vec<(String, f64)>,
    pub mean_rho: f64,
    pub t_statistic: f64,
    pub p_value: f64,
    /// Two-sided p < 0.05 under the one-sample t-approximation.
    pub significant: bool,
    /// Videos with an undefined coefficient (constant saliency or
    /// degenerate selection), excluded from the mean.
    pub excluded: usize,
}

/// Per-frame saliency: each frame carries its containing clip's score.
pub fn saliency_per_frame(triplet: &SummaryTriplet, fps: f64) -> Vec<f64> {
    let duration = triplet.timeline.video_duration_s();
    let n_frames = (duration * fps).round() as usize;
    (0..n_frames)
        .map(|i| {
            let center = (i as f64 + 0.5) / fps;
            triplet.timeline.scores()[triplet.timeline.clip_at(center)]
        })
        .collect()
}

/// Validates that extracted summaries track saliency: rho between the
/// frame-level score sequence and the 0/1 selection sequence.
pub fn validate_saliency_preservation(triplets: &[SummaryTriplet]) -> Result<PreservationReport> {
    if triplets.is_empty() {
        return Err(invalid("dataset is empty"));
    }
    let mut per_video = Vec::new();
    let mut kept = Vec::new();
    let mut excluded = 0usize;
    for t in triplets {
        let saliency = saliency_per_frame(t, DEFAULT_FPS);
        let selection = rasterize(
            &t.vm_summary.intervals,
            DEFAULT_FPS,
            t.timeline.video_duration_s(),
        )?;
        let rho = spearman_rho(&saliency, &selection.as_f64())?;
        per_video.push((t.video_id.clone(), rho));
        if rho.is_finite() {
            kept.push(rho);
        } else {
            excluded += 1;
        }
    }
    let m = kept.len();
    let mean_rho = if m > 0 {
        kept.iter().sum::<f64>() / m as f64
    } else {
        f64::NAN
    };
    let (t_statistic, p_value) = if m >= 2 {
        let var = kept.iter().map(|r| (r - mean_rho).powi(2)).sum::<f64>() / (m as f64 - 1.0);
        if var > 0.0 {
            let t = mean_rho / (var / m as f64).sqrt();
            let dist = StudentsT::new(0.0, 1.0, (m - 1) as f64)
                .map_err(|e| invalid(format!("t-distribution: {e}")))?;
            let p = 2.0 * (1.0 - dist.cdf(t.abs()));
            (t, p)
        } else {
            (f64::INFINITY, 0.0)
        }
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(PreservationReport {
        per_video,
        mean_rho,
        t_statistic,
        p_value,
        significant: p_value < 0.05,
        excluded,
    })
}
