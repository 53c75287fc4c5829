//! Visual-summary extraction.
//!
//! The extractor consumes merged equal-score segments in descending
//! score order. A score level that fits the remaining budget is taken
//! whole; the first level that does not fit is scaled proportionally
//! (each segment keeps the part closest to a higher-scored neighbor,
//! or its center when it has none) and everything below is rejected.
//! A 0/1-knapsack selector over whole segments is provided as the
//! baseline used by traditional summarization datasets; it favors
//! short segments because long ones cost too much of the budget.

use crate::error::{invalid, Result};
use crate::timeline::{merge_clips, ClipTimeline, Segment, VmSummary};

/// Summary segments shorter than this are dropped during cleaning.
pub const DEFAULT_MIN_SEGMENT_S: f64 = 2.0;
/// Videos whose cleaned summary covers less than this fraction are rejected.
pub const DEFAULT_MIN_COVERAGE: f64 = 0.05;

const EPS: f64 = 1e-9;

/// Extracts a summary under `budget_ratio` of the video duration.
pub fn extract_vm_summary(timeline: &ClipTimeline, budget_ratio: f64) -> Result<VmSummary> {
    if !(budget_ratio > 0.0 && budget_ratio <= 1.0) {
        return Err(invalid("budget ratio must be in (0, 1]"));
    }
    let segments = merge_clips(timeline);
    let budget = budget_ratio * timeline.video_duration_s();

    let mut levels: Vec<f64> = segments.iter().map(|s| s.score).collect();
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();

    let mut selected: Vec<(f64, f64)> = Vec::new();
    let mut used = 0.0f64;
    for &level in &levels {
        let remaining = budget - used;
        if remaining <= EPS {
            break;
        }
        let members: Vec<usize> = segments
            .iter()
            .enumerate()
            .filter(|(_, s)| s.score == level)
            .map(|(i, _)| i)
            .collect();
        let level_duration: f64 = members.iter().map(|&i| segments[i].duration()).sum();
        if level_duration <= remaining + EPS {
            for &i in &members {
                selected.push((segments[i].start_s, segments[i].end_s));
            }
            used += level_duration;
        } else {
            for &i in &members {
                let seg = &segments[i];
                let allotted = remaining * seg.duration() / level_duration;
                if allotted <= EPS {
                    continue;
                }
                let left = (i > 0).then(|| segments[i - 1].score);
                let right = (i + 1 < segments.len()).then(|| segments[i + 1].score);
                selected.extend(scale_segment(seg, left, right, allotted)?);
            }
            break;
        }
    }
    selected.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(VmSummary {
        intervals: selected,
        budget_ratio,
    })
}

/// Shrinks a segment to `allotted_length` seconds.
///
/// A missing neighbor (video edge) counts as lower-scored. The three
/// cases: both neighbors higher keeps two halves flush against both
/// boundaries; exactly one higher keeps one part flush against that
/// side; otherwise the central part is preserved.
pub fn scale_segment(
    seg: &Segment,
    left_neighbor_score: Option<f64>,
    right_neighbor_score: Option<f64>,
    allotted_length: f64,
) -> Result<Vec<(f64, f64)>> {
    if !(allotted_length > 0.0) || !allotted_length.is_finite() {
        return Err(invalid("allotted length must be positive"));
    }
    let duration = seg.duration();
    if allotted_length > duration + EPS {
        return Err(invalid(format!(
            "allotted length {} exceeds segment duration {}",
            allotted_length, duration
        )));
    }
    let allotted = allotted_length.min(duration);
    let left_higher = left_neighbor_score.is_some_and(|s| s > seg.score);
    let right_higher = right_neighbor_score.is_some_and(|s| s > seg.score);
    let parts = match (left_higher, right_higher) {
        (true, true) => vec![
            (seg.start_s, seg.start_s + allotted / 2.0),
            (seg.end_s - allotted / 2.0, seg.end_s),
        ],
        (true, false) => vec![(seg.start_s, seg.start_s + allotted)],
        (false, true) => vec![(seg.end_s - allotted, seg.end_s)],
        (false, false) => {
            let mid = (seg.start_s + seg.end_s) / 2.0;
            vec![(mid - allotted / 2.0, mid + allotted / 2.0)]
        }
    };
    Ok(parts)
}

/// 0/1 knapsack over whole segments: maximize total `score * duration`
/// subject to total duration <= `budget_s`.
///
/// Durations are discretized at clip resolution (rounded up, so the
/// continuous budget is never exceeded); ties prefer earlier segments.
pub fn knapsack_summary(
    segments: &[Segment],
    budget_s: f64,
    clip_duration_s: f64,
) -> Result<VmSummary> {
    if budget_s < 0.0 || !budget_s.is_finite() {
        return Err(invalid("budget must be non-negative and finite"));
    }
    if !(clip_duration_s > 0.0) || !clip_duration_s.is_finite() {
        return Err(invalid("clip duration must be positive and finite"));
    }
    let mut by_start: Vec<&Segment> = segments.iter().collect();
    by_start.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
    for w in by_start.windows(2) {
        if w[1].start_s < w[0].end_s - EPS {
            return Err(invalid("segments must be disjoint"));
        }
    }

    let video_duration = segments.iter().map(|s| s.end_s).fold(0.0f64, f64::max);
    let capacity = ((budget_s / clip_duration_s) + EPS).floor() as usize;
    let n = by_start.len();
    let weights: Vec<usize> = by_start
        .iter()
        .map(|s| ((s.duration() / clip_duration_s) - EPS).ceil().max(1.0) as usize)
        .collect();
    let values: Vec<f64> = by_start.iter().map(|s| s.score * s.duration()).collect();

    let mut dp = vec![vec![0.0f64; capacity + 1]; n + 1];
    for i in 1..=n {
        for w in 0..=capacity {
            let mut best = dp[i - 1][w];
            if weights[i - 1] <= w {
                let with = dp[i - 1][w - weights[i - 1]] + values[i - 1];
                if with > best {
                    best = with;
                }
            }
            dp[i][w] = best;
        }
    }

    // Backtrack excluding an item whenever the same value is reachable
    // without it, which prefers earlier segments on value ties.
    let mut chosen = Vec::new();
    let mut w = capacity;
    for i in (1..=n).rev() {
        if dp[i][w] > dp[i - 1][w] {
            chosen.push(i - 1);
            w -= weights[i - 1];
        }
    }
    chosen.reverse();

    let intervals: Vec<(f64, f64)> = chosen
        .iter()
        .map(|&i| (by_start[i].start_s, by_start[i].end_s))
        .collect();
    let budget_ratio = if video_duration > 0.0 {
        budget_s / video_duration
    } else {
        0.0
    };
    Ok(VmSummary {
        intervals,
        budget_ratio,
    })
}

/// Result of applying the cleaning rules to a summary.
#[derive(Debug, Clone, PartialEq)]
pub enum CleanOutcome {
    Kept(VmSummary),
    /// Surviving coverage fell below the minimum fraction; the whole
    /// video is flagged for removal.
    Rejected { surviving_duration_s: f64 },
}

/// Drops summary intervals shorter than `min_segment_s`, then rejects
/// the video when the surviving total covers less than `min_coverage`
/// of its duration.
pub fn clean_summary(
    summary: &VmSummary,
    timeline: &ClipTimeline,
    min_segment_s: f64,
    min_coverage: f64,
) -> CleanOutcome {
    let kept: Vec<(f64, f64)> = summary
        .intervals
        .iter()
        .copied()
        .filter(|(s, e)| e - s >= min_segment_s - EPS)
        .collect();
    let total: f64 = kept.iter().map(|(s, e)| e - s).sum();
    if total < min_coverage * timeline.video_duration_s() - EPS {
        CleanOutcome::Rejected {
            surviving_duration_s: total,
        }
    } else {
        CleanOutcome::Kept(VmSummary {
            intervals: kept,
            budget_ratio: summary.budget_ratio,
        })
    }
}
