//! Clip grids, segments, frame selections, and score normalization.
//!
//! A video is modelled as a sequence of fixed-duration clips (2 s by
//! default), each carrying one saliency score. Summaries are lists of
//! time intervals in seconds; when a per-frame view is needed the
//! intervals are rasterized onto a frame grid.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Clip duration used throughout unless overridden.
pub const DEFAULT_CLIP_DURATION_S: f64 = 2.0;
/// Frame rate used when rasterizing summaries.
pub const DEFAULT_FPS: f64 = 8.0;
/// Maximum summary length as a fraction of video duration.
pub const DEFAULT_BUDGET_RATIO: f64 = 0.15;

const EPS: f64 = 1e-9;

/// Per-clip saliency scores over a video at a fixed clip duration.
///
/// The number of clips is `ceil(video_duration_s / clip_duration_s)`;
/// the last clip may be shorter than `clip_duration_s` when the video
/// duration is not a clip multiple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipTimeline {
    clip_duration_s: f64,
    video_duration_s: f64,
    scores: Vec<f64>,
}

impl ClipTimeline {
    pub fn new(clip_duration_s: f64, video_duration_s: f64, scores: Vec<f64>) -> Result<Self> {
        if !(clip_duration_s > 0.0) || !clip_duration_s.is_finite() {
            return Err(invalid("clip duration must be positive and finite"));
        }
        if !(video_duration_s > 0.0) || !video_duration_s.is_finite() {
            return Err(invalid("video duration must be positive and finite"));
        }
        if scores.is_empty() {
            return Err(invalid("score sequence is empty"));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(invalid("scores must be finite"));
        }
        let expected = clip_count(video_duration_s, clip_duration_s);
        if scores.len() != expected {
            return Err(invalid(format!(
                "expected {} scores for a {}s video at {}s clips, got {}",
                expected,
                video_duration_s,
                clip_duration_s,
                scores.len()
            )));
        }
        Ok(Self {
            clip_duration_s,
            video_duration_s,
            scores,
        })
    }

    /// Timeline whose duration is exactly `scores.len() * clip_duration_s`.
    pub fn from_scores(scores: Vec<f64>, clip_duration_s: f64) -> Result<Self> {
        let duration = scores.len() as f64 * clip_duration_s;
        Self::new(clip_duration_s, duration, scores)
    }

    pub fn clip_duration_s(&self) -> f64 {
        self.clip_duration_s
    }

    pub fn video_duration_s(&self) -> f64 {
        self.video_duration_s
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn num_clips(&self) -> usize {
        self.scores.len()
    }

    /// Time span `[start, end)` covered by clip `i`; the last clip is
    /// clamped to the video duration.
    pub fn clip_span(&self, i: usize) -> (f64, f64) {
        let start = i as f64 * self.clip_duration_s;
        let end = ((i + 1) as f64 * self.clip_duration_s).min(self.video_duration_s);
        (start, end)
    }

    /// Index of the clip containing time `t` (clamped to valid range).
    pub fn clip_at(&self, t: f64) -> usize {
        let idx = (t / self.clip_duration_s).floor() as isize;
        idx.clamp(0, self.num_clips() as isize - 1) as usize
    }
}

fn clip_count(video_duration_s: f64, clip_duration_s: f64) -> usize {
    ((video_duration_s / clip_duration_s) - EPS).ceil().max(1.0) as usize
}

/// A scored time interval `[start_s, end_s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start_s: f64,
    pub end_s: f64,
    pub score: f64,
}

impl Segment {
    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// Binary per-frame membership sequence for a summary.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSelection {
    fps: f64,
    bits: Vec<bool>,
}

impl FrameSelection {
    pub fn new(fps: f64, bits: Vec<bool>) -> Self {
        Self { fps, bits }
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// 0/1 view, for rank-correlation against score sequences.
    pub fn as_f64(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }
}

/// Summary intervals plus the budget they were extracted under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VmSummary {
    pub intervals: Vec<(f64, f64)>,
    pub budget_ratio: f64,
}

impl VmSummary {
    pub fn total_duration(&self) -> f64 {
        self.intervals.iter().map(|(s, e)| e - s).sum()
    }

    /// Checks the structural invariants against a video duration:
    /// sorted, pairwise disjoint, within bounds, within budget.
    pub fn validate(&self, video_duration_s: f64) -> Result<()> {
        let mut prev_end = 0.0f64;
        for &(start, end) in &self.intervals {
            if end <= start {
                return Err(invalid(format!("empty or reversed interval ({start}, {end})")));
            }
            if start < -EPS || end > video_duration_s + EPS {
                return Err(invalid(format!(
                    "interval ({start}, {end}) outside [0, {video_duration_s}]"
                )));
            }
            if start < prev_end - EPS {
                return Err(invalid(format!(
                    "intervals overlap or are unsorted near {start}"
                )));
            }
            prev_end = end;
        }
        let budget = self.budget_ratio * video_duration_s;
        if self.total_duration() > budget + EPS {
            return Err(invalid(format!(
                "summary duration {} exceeds budget {}",
                self.total_duration(),
                budget
            )));
        }
        Ok(())
    }
}

/// Merges adjacent clips with identical scores into segments.
///
/// The returned segments partition `[0, video_duration_s)`; adjacent
/// segments carry different scores; the last segment may be shorter
/// than one clip when the duration is not a clip multiple.
pub fn merge_clips(timeline: &ClipTimeline) -> Vec<Segment> {
    let scores = timeline.scores();
    let mut segments: Vec<Segment> = Vec::new();
    let mut run_start = 0usize;
    for i in 1..=scores.len() {
        if i == scores.len() || scores[i] != scores[run_start] {
            let (start_s, _) = timeline.clip_span(run_start);
            let (_, end_s) = timeline.clip_span(i - 1);
            segments.push(Segment {
                start_s,
                end_s,
                score: scores[run_start],
            });
            run_start = i;
        }
    }
    segments
}

/// Rasterizes disjoint intervals onto a frame grid.
///
/// Frame `i` is selected iff its center time `(i + 0.5) / fps` falls
/// inside some interval `[start, end)`. Membership by frame center
/// keeps frames on shared interval boundaries from being counted
/// twice.
pub fn rasterize(intervals: &[(f64, f64)], fps: f64, video_duration_s: f64) -> Result<FrameSelection> {
    if !(fps > 0.0) || !fps.is_finite() {
        return Err(invalid("fps must be positive and finite"));
    }
    if !(video_duration_s > 0.0) || !video_duration_s.is_finite() {
        return Err(invalid("video duration must be positive and finite"));
    }
    let mut sorted: Vec<(f64, f64)> = intervals.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    for window in sorted.windows(2) {
        if window[1].0 < window[0].1 - EPS {
            return Err(invalid(format!(
                "intervals ({}, {}) and ({}, {}) overlap",
                window[0].0, window[0].1, window[1].0, window[1].1
            )));
        }
    }
    for &(start, end) in &sorted {
        if end <= start {
            return Err(invalid(format!("empty or reversed interval ({start}, {end})")));
        }
        if start < -EPS || end > video_duration_s + EPS {
            return Err(invalid(format!(
                "interval ({start}, {end}) outside [0, {video_duration_s}]"
            )));
        }
    }

    let n_frames = (video_duration_s * fps).round() as usize;
    let mut bits = vec![false; n_frames];
    let mut cursor = 0usize;
    for (i, bit) in bits.iter_mut().enumerate() {
        let center = (i as f64 + 0.5) / fps;
        while cursor < sorted.len() && sorted[cursor].1 <= center {
            cursor += 1;
        }
        if cursor < sorted.len() && sorted[cursor].0 <= center && center < sorted[cursor].1 {
            *bit = true;
        }
    }
    Ok(FrameSelection::new(fps, bits))
}

/// Min-max normalization to `[0, 1]`.
///
/// A constant sequence maps to all zeros, so its gains `2^s - 1`
/// vanish and NDCG degenerates to 1 for videos with no
/// distinguishable saliency.
pub fn normalize_scores(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(invalid("score sequence is empty"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(invalid("scores must be finite"));
    }
    let min = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max > min {
        Ok(scores.iter().map(|s| (s - min) / (max - min)).collect())
    } else {
        Ok(vec![0.0; scores.len()])
    }
}
