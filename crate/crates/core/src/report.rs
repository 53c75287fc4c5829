//! Per-video and corpus metric reports.
//!
//! The textual-modality columns exist only when a text-to-frame
//! similarity sequence was supplied; the bimodal columns exist only
//! when both modalities are present. Undefined correlations (all-tied
//! inputs) stay NaN per video and are excluded from corpus means;
//! NaN serializes as `null` in JSON and as an empty CSV field.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::metrics::{
    interval_fscore, kendall_tau, ndcg_ms, ndcg_tm, ndcg_vm, spearman_rho, NdcgPair,
};
use crate::summarizer::extract_vm_summary;
use crate::timeline::{normalize_scores, rasterize, ClipTimeline};

/// Metric values for one video (or corpus means).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VideoMetrics {
    pub ndcg_vm_at_15: f64,
    pub ndcg_vm_at_all: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ndcg_tm_at_15: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ndcg_tm_at_all: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ndcg_ms_at_15: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ndcg_ms_at_all: Option<f64>,
    pub kendall_tau: f64,
    pub spearman_rho: f64,
    pub f_score: f64,
}

/// Full evaluation report; `per_video` is ordered by video id so the
/// serialized form is canonical.
#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    pub per_video: BTreeMap<String, VideoMetrics>,
    pub corpus: VideoMetrics,
}

/// One video's inputs for report assembly. Ground-truth scores are
/// normalized internally before any NDCG computation.
#[derive(Debug, Clone)]
pub struct VideoEval {
    pub video_id: String,
    pub pred_scores: Vec<f64>,
    pub gt_scores: Vec<f64>,
    pub tm_similarity: Option<Vec<f64>>,
}

/// Settings for the F-score branch: predicted and ground-truth
/// summaries are extracted at this budget and rasterized at this rate.
#[derive(Debug, Clone, Copy)]
pub struct EvalConfig {
    pub clip_duration_s: f64,
    pub budget_ratio: f64,
    pub fps: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            clip_duration_s: crate::timeline::DEFAULT_CLIP_DURATION_S,
            budget_ratio: crate::timeline::DEFAULT_BUDGET_RATIO,
            fps: crate::timeline::DEFAULT_FPS,
        }
    }
}

fn frame_selection_of(scores: &[f64], config: &EvalConfig) -> Result<crate::timeline::FrameSelection> {
    let timeline = ClipTimeline::from_scores(scores.to_vec(), config.clip_duration_s)?;
    let summary = extract_vm_summary(&timeline, config.budget_ratio)?;
    rasterize(&summary.intervals, config.fps, timeline.video_duration_s())
}

fn evaluate_video(video: &VideoEval, config: &EvalConfig) -> Result<VideoMetrics> {
    let gt_norm = normalize_scores(&video.gt_scores)?;
    let vm = ndcg_vm(&video.pred_scores, &gt_norm)?;
    let tm: Option<NdcgPair> = match &video.tm_similarity {
        Some(sim) => Some(ndcg_tm(sim, &gt_norm)?),
        None => None,
    };
    let ms = tm.as_ref().map(|tm| ndcg_ms(&vm, tm));

    let pred_f = frame_selection_of(&video.pred_scores, config)?;
    let gt_f = frame_selection_of(&video.gt_scores, config)?;

    Ok(VideoMetrics {
        ndcg_vm_at_15: vm.at_15,
        ndcg_vm_at_all: vm.at_all,
        ndcg_tm_at_15: tm.as_ref().map(|p| p.at_15),
        ndcg_tm_at_all: tm.as_ref().map(|p| p.at_all),
        ndcg_ms_at_15: ms.as_ref().map(|p| p.at_15),
        ndcg_ms_at_all: ms.as_ref().map(|p| p.at_all),
        kendall_tau: kendall_tau(&video.pred_scores, &gt_norm)?,
        spearman_rho: spearman_rho(&video.pred_scores, &gt_norm)?,
        f_score: interval_fscore(&pred_f, &gt_f)?,
    })
}

fn finite_mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        if v.is_finite() {
            sum += v;
            n += 1;
        }
    }
    if n > 0 {
        sum / n as f64
    } else {
        f64::NAN
    }
}

fn optional_mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let collected: Vec<f64> = values.flatten().collect();
    if collected.is_empty() {
        None
    } else {
        Some(finite_mean(collected.into_iter()))
    }
}

/// Evaluates each video and aggregates unweighted per-video means.
pub fn assemble_report(videos: &[VideoEval], config: &EvalConfig) -> Result<MetricReport> {
    if videos.is_empty() {
        return Err(invalid("no videos to evaluate"));
    }
    let mut per_video = BTreeMap::new();
    for video in videos {
        if per_video.contains_key(&video.video_id) {
            return Err(invalid(format!("duplicate video id {}", video.video_id)));
        }
        per_video.insert(video.video_id.clone(), evaluate_video(video, config)?);
    }
    let all = || per_video.values();
    let corpus = VideoMetrics {
        ndcg_vm_at_15: finite_mean(all().map(|m| m.ndcg_vm_at_15)),
        ndcg_vm_at_all: finite_mean(all().map(|m| m.ndcg_vm_at_all)),
        ndcg_tm_at_15: optional_mean(all().map(|m| m.ndcg_tm_at_15)),
        ndcg_tm_at_all: optional_mean(all().map(|m| m.ndcg_tm_at_all)),
        ndcg_ms_at_15: optional_mean(all().map(|m| m.ndcg_ms_at_15)),
        ndcg_ms_at_all: optional_mean(all().map(|m| m.ndcg_ms_at_all)),
        kendall_tau: finite_mean(all().map(|m| m.kendall_tau)),
        spearman_rho: finite_mean(all().map(|m| m.spearman_rho)),
        f_score: finite_mean(all().map(|m| m.f_score)),
    };
    Ok(MetricReport { per_video, corpus })
}

impl MetricReport {
    /// Canonical JSON: per-video entries sorted by id, struct key
    /// order fixed, non-finite values as null.
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| invalid(format!("serialize report: {e}")))
    }

    /// Flat CSV: one row per video plus a final `corpus` row. Absent
    /// and NaN values are empty fields.
    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record([
                "video_id",
                "ndcg_vm_at_15",
                "ndcg_vm_at_all",
                "ndcg_tm_at_15",
                "ndcg_tm_at_all",
                "ndcg_ms_at_15",
                "ndcg_ms_at_all",
                "kendall_tau",
                "spearman_rho",
                "f_score",
            ])
            .map_err(|e| invalid(format!("csv: {e}")))?;
        let fmt = |v: f64| if v.is_finite() { v.to_string() } else { String::new() };
        let fmt_opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
        let mut write_row = |id: &str, m: &VideoMetrics| {
            writer
                .write_record([
                    id.to_string(),
                    fmt(m.ndcg_vm_at_15),
                    fmt(m.ndcg_vm_at_all),
                    fmt_opt(m.ndcg_tm_at_15),
                    fmt_opt(m.ndcg_tm_at_all),
                    fmt_opt(m.ndcg_ms_at_15),
                    fmt_opt(m.ndcg_ms_at_all),
                    fmt(m.kendall_tau),
                    fmt(m.spearman_rho),
                    fmt(m.f_score),
                ])
                .map_err(|e| invalid(format!("csv: {e}")))
        };
        for (id, m) in &self.per_video {
            write_row(id, m)?;
        }
        write_row("corpus", &self.corpus)?;
        let bytes = writer
            .into_inner()
            .map_err(|e| invalid(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| invalid(format!("csv utf8: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(id: &str, pred: Vec<f64>, gt: Vec<f64>, tm: Option<Vec<f64>>) -> VideoEval {
        VideoEval {
            video_id: id.into(),
            pred_scores: pred,
            gt_scores: gt,
            tm_similarity: tm,
        }
    }

    #[test]
    fn perfect_prediction_scores_one_everywhere() {
        let gt: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let videos = vec![eval("a", gt.clone(), gt.clone(), Some(gt.clone()))];
        let report = assemble_report(&videos, &EvalConfig::default()).unwrap();
        let m = &report.per_video["a"];
        assert!((m.ndcg_vm_at_15 - 1.0).abs() < 1e-12);
        assert!((m.ndcg_ms_at_all.unwrap() - 1.0).abs() < 1e-12);
        assert!((m.kendall_tau - 1.0).abs() < 1e-12);
        assert!((m.f_score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tm_columns_absent_without_similarity() {
        let gt: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let videos = vec![eval("a", gt.clone(), gt.clone(), None)];
        let report = assemble_report(&videos, &EvalConfig::default()).unwrap();
        assert!(report.per_video["a"].ndcg_tm_at_15.is_none());
        assert!(report.corpus.ndcg_ms_at_15.is_none());
        let json = report.to_json().unwrap();
        assert!(!json.contains("ndcg_tm_at_15"));
    }

    #[test]
    fn nan_serializes_as_null_and_empty_csv_field() {
        // Constant gt: correlations are undefined.
        let videos = vec![eval("a", vec![0.1, 0.2, 0.3, 0.4], vec![1.0; 4], None)];
        let report = assemble_report(&videos, &EvalConfig::default()).unwrap();
        assert!(report.per_video["a"].kendall_tau.is_nan());
        let json = report.to_json().unwrap();
        assert!(json.contains("\"kendall_tau\": null"));
        let csv_text = report.to_csv().unwrap();
        let row = csv_text.lines().nth(1).unwrap();
        assert!(row.starts_with("a,"));
        assert!(row.contains(",,"));
    }

    #[test]
    fn corpus_is_unweighted_mean() {
        let gt: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let rev: Vec<f64> = gt.iter().rev().cloned().collect();
        let videos = vec![
            eval("a", gt.clone(), gt.clone(), None),
            eval("b", rev, gt.clone(), None),
        ];
        let report = assemble_report(&videos, &EvalConfig::default()).unwrap();
        let mean = (report.per_video["a"].ndcg_vm_at_15 + report.per_video["b"].ndcg_vm_at_15) / 2.0;
        assert!((report.corpus.ndcg_vm_at_15 - mean).abs() < 1e-12);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let gt = vec![0.1, 0.5, 0.9];
        let videos = vec![
            eval("a", gt.clone(), gt.clone(), None),
            eval("a", gt.clone(), gt, None),
        ];
        assert!(assemble_report(&videos, &EvalConfig::default()).is_err());
    }
}
