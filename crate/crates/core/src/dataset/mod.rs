//! Dataset construction from query-highlight annotations.
//!
//! Three steps: merge each record's relevant windows chronologically
//! into one contiguous source timeline (saliency = mean of annotator
//! scores per clip), extract the visual summary under the budget, and
//! apply the cleaning rules. Splits are assigned by a stable hash of
//! the source video id so records sharing a source video never land
//! in different splits and re-runs with added data keep prior
//! assignments.

mod stats;

pub use stats::{
    compute_stats, histogram_csv, stats_csv, validate_saliency_preservation, DatasetStats,
    HistogramBin, PreservationReport, SplitStats,
};

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::summarizer::{clean_summary, extract_vm_summary, CleanOutcome};
use crate::timeline::{ClipTimeline, VmSummary};

const EPS: f64 = 1e-6;

/// One ingested annotation line: a query over a source video with
/// relevant windows and per-clip annotator scores covering them.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationRecord {
    pub qid: i64,
    pub query: String,
    pub vid: String,
    pub source_duration_s: f64,
    pub relevant_windows: Vec<(f64, f64)>,
    /// Per covered clip (chronological across coalesced windows), the
    /// integer scores of each annotator, 0..=4.
    pub clip_scores: Vec<Vec<i64>>,
}

#[derive(Deserialize)]
struct RawAnnotation {
    qid: i64,
    query: String,
    vid: String,
    duration: f64,
    relevant_windows: Vec<[f64; 2]>,
    saliency_scores: Vec<Vec<i64>>,
}

impl AnnotationRecord {
    fn from_raw(raw: RawAnnotation) -> Self {
        Self {
            qid: raw.qid,
            query: raw.query,
            vid: raw.vid,
            source_duration_s: raw.duration,
            relevant_windows: raw.relevant_windows.iter().map(|w| (w[0], w[1])).collect(),
            clip_scores: raw.saliency_scores,
        }
    }

    /// Windows sorted by start with overlapping or touching windows
    /// coalesced, so the merged timeline never duplicates source time.
    pub fn coalesced_windows(&self) -> Vec<(f64, f64)> {
        let mut windows = self.relevant_windows.clone();
        windows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (start, end) in windows {
            match out.last_mut() {
                Some(last) if start <= last.1 + EPS => last.1 = last.1.max(end),
                _ => out.push((start, end)),
            }
        }
        out
    }

    pub fn validate(&self, clip_duration_s: f64) -> Result<()> {
        let ctx = format!("qid {}", self.qid);
        if !(self.source_duration_s > 0.0) {
            return Err(invalid(format!("{ctx}: duration must be positive")));
        }
        if self.relevant_windows.is_empty() {
            return Err(invalid(format!("{ctx}: relevant_windows is empty")));
        }
        let aligned = |t: f64| (t / clip_duration_s - (t / clip_duration_s).round()).abs() < EPS;
        for &(start, end) in &self.relevant_windows {
            if end <= start {
                return Err(invalid(format!(
                    "{ctx}: window ({start}, {end}) is empty or reversed"
                )));
            }
            if start < -EPS || end > self.source_duration_s + EPS {
                return Err(invalid(format!(
                    "{ctx}: window ({start}, {end}) outside video duration {}",
                    self.source_duration_s
                )));
            }
            if !aligned(start) {
                return Err(invalid(format!(
                    "{ctx}: window start {start} not aligned to the {clip_duration_s}s clip grid"
                )));
            }
            // The window reaching the end of the source video may end
            // off-grid (truncated final clip); the rest must align.
            if !aligned(end) && (end - self.source_duration_s).abs() > EPS {
                return Err(invalid(format!(
                    "{ctx}: window end {end} not aligned to the {clip_duration_s}s clip grid"
                )));
            }
        }
        let covered = self.covered_clip_count(clip_duration_s);
        if self.clip_scores.len() != covered {
            return Err(invalid(format!(
                "{ctx}: {} score groups for {} covered clips",
                self.clip_scores.len(),
                covered
            )));
        }
        for (i, group) in self.clip_scores.iter().enumerate() {
            if group.is_empty() {
                return Err(invalid(format!("{ctx}: clip {i} has no annotator scores")));
            }
            if group.iter().any(|s| !(0..=4).contains(s)) {
                return Err(invalid(format!("{ctx}: clip {i} has a score outside 0..=4")));
            }
        }
        Ok(())
    }

    fn covered_clip_count(&self, clip_duration_s: f64) -> usize {
        self.coalesced_windows()
            .iter()
            .map(|(s, e)| ((e - s) / clip_duration_s - EPS).ceil().max(1.0) as usize)
            .sum()
    }
}

/// Reads line-delimited JSON annotations; unknown keys are ignored.
/// The first malformed or invalid line aborts with its line number.
pub fn ingest(path: &Path, clip_duration_s: f64) -> Result<Vec<AnnotationRecord>> {
    let file = File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawAnnotation = serde_json::from_str(&line).map_err(|e| Error::Schema {
            path: path.display().to_string(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        let record = AnnotationRecord::from_raw(raw);
        record.validate(clip_duration_s).map_err(|e| Error::Schema {
            path: path.display().to_string(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Correspondence between one merged-time span and its source time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceWindow {
    pub merged_start_s: f64,
    pub source_start_s: f64,
    pub duration_s: f64,
}

/// Merged-time to source-time mapping for a whole record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowMap {
    pub windows: Vec<SourceWindow>,
}

impl WindowMap {
    /// Source time corresponding to a merged-timeline instant.
    pub fn merged_to_source(&self, merged_t: f64) -> Option<f64> {
        for w in &self.windows {
            if merged_t >= w.merged_start_s - EPS && merged_t < w.merged_start_s + w.duration_s {
                return Some(w.source_start_s + (merged_t - w.merged_start_s));
            }
        }
        None
    }

    /// (merged clip index, source clip index) pairs at a clip grid.
    pub fn clip_mapping(&self, clip_duration_s: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for w in &self.windows {
            let clips = ((w.duration_s / clip_duration_s) - EPS).ceil().max(1.0) as usize;
            for c in 0..clips {
                let merged = ((w.merged_start_s + c as f64 * clip_duration_s) / clip_duration_s
                    + EPS)
                    .floor() as usize;
                let source = ((w.source_start_s + c as f64 * clip_duration_s) / clip_duration_s
                    + EPS)
                    .floor() as usize;
                out.push((merged, source));
            }
        }
        out
    }
}

/// Concatenates a record's coalesced windows into one contiguous
/// timeline; per-clip saliency is the mean of annotator scores.
pub fn merge_windows(
    record: &AnnotationRecord,
    clip_duration_s: f64,
) -> Result<(ClipTimeline, WindowMap)> {
    record.validate(clip_duration_s)?;
    let windows = record.coalesced_windows();
    let mut map = Vec::with_capacity(windows.len());
    let mut cursor = 0.0;
    for &(start, end) in &windows {
        map.push(SourceWindow {
            merged_start_s: cursor,
            source_start_s: start,
            duration_s: end - start,
        });
        cursor += end - start;
    }
    let scores: Vec<f64> = record
        .clip_scores
        .iter()
        .map(|group| group.iter().sum::<i64>() as f64 / group.len() as f64)
        .collect();
    let timeline = ClipTimeline::new(clip_duration_s, cursor, scores)?;
    Ok((timeline, WindowMap { windows: map }))
}

/// Dataset split membership.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

/// Split fractions; must sum to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train: 0.72,
            validation: 0.08,
            test: 0.20,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.train < 0.0 || self.validation < 0.0 || self.test < 0.0 {
            return Err(invalid("split fractions must be non-negative"));
        }
        let sum = self.train + self.validation + self.test;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("split fractions sum to {sum}, expected 1")));
        }
        Ok(())
    }
}

/// Stable split assignment: an FNV-1a hash of (seed, source vid)
/// mapped to `[0, 1)` and cut by the split fractions.
pub fn assign_split(vid: &str, seed: u64, spec: &SplitSpec) -> Split {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in seed.to_le_bytes().iter().chain(vid.as_bytes()) {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    let fraction = (h >> 11) as f64 / (1u64 << 53) as f64;
    if fraction < spec.train {
        Split::Train
    } else if fraction < spec.train + spec.validation {
        Split::Validation
    } else {
        Split::Test
    }
}

/// Where the whole triplet came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source_vid: String,
    pub qid: i64,
    pub windows: Vec<SourceWindow>,
}

/// One output sample: merged video saliency, its textual summary, and
/// the extracted visual summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTriplet {
    pub video_id: String,
    pub tm_summary: String,
    pub timeline: ClipTimeline,
    pub vm_summary: VmSummary,
    pub split: Split,
    pub provenance: Provenance,
}

/// Machine-readable reason a video was dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionReason {
    BelowMinCoverage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub video_id: String,
    pub qid: i64,
    pub vid: String,
    pub reason: RejectionReason,
    pub detail: String,
}

/// Pipeline knobs; defaults mirror the construction rules.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub clip_duration_s: f64,
    pub budget_ratio: f64,
    pub min_segment_s: f64,
    pub min_coverage: f64,
    pub split: SplitSpec,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            clip_duration_s: crate::timeline::DEFAULT_CLIP_DURATION_S,
            budget_ratio: crate::timeline::DEFAULT_BUDGET_RATIO,
            min_segment_s: crate::summarizer::DEFAULT_MIN_SEGMENT_S,
            min_coverage: crate::summarizer::DEFAULT_MIN_COVERAGE,
            split: SplitSpec::default(),
            seed: 0,
        }
    }
}

/// Output of a pipeline run: kept triplets plus the rejection log.
#[derive(Debug)]
pub struct DatasetBuild {
    pub triplets: Vec<SummaryTriplet>,
    pub rejections: Vec<Rejection>,
}

/// Runs merge, extraction, and cleaning over each record.
/// Rejections are data, not errors.
pub fn build_dataset(records: &[AnnotationRecord], config: &PipelineConfig) -> Result<DatasetBuild> {
    config.split.validate()?;
    if !(config.budget_ratio > 0.0 && config.budget_ratio <= 1.0) {
        return Err(invalid("budget ratio must be in (0, 1]"));
    }
    let mut triplets = Vec::new();
    let mut rejections = Vec::new();
    for record in records {
        let video_id = format!("qid{}", record.qid);
        let (timeline, window_map) = merge_windows(record, config.clip_duration_s)?;
        let raw_summary = extract_vm_summary(&timeline, config.budget_ratio)?;
        match clean_summary(&raw_summary, &timeline, config.min_segment_s, config.min_coverage) {
            CleanOutcome::Kept(vm_summary) => {
                let split = assign_split(&record.vid, config.seed, &config.split);
                triplets.push(SummaryTriplet {
                    video_id,
                    tm_summary: record.query.clone(),
                    timeline,
                    vm_summary,
                    split,
                    provenance: Provenance {
                        source_vid: record.vid.clone(),
                        qid: record.qid,
                        windows: window_map.windows,
                    },
                });
            }
            CleanOutcome::Rejected { surviving_duration_s } => {
                rejections.push(Rejection {
                    video_id,
                    qid: record.qid,
                    vid: record.vid.clone(),
                    reason: RejectionReason::BelowMinCoverage,
                    detail: format!(
                        "surviving summary {surviving_duration_s}s covers less than {}% of {}s",
                        config.min_coverage * 100.0,
                        timeline.video_duration_s()
                    ),
                });
            }
        }
    }
    Ok(DatasetBuild { triplets, rejections })
}

#[derive(Serialize, Deserialize)]
struct TripletRow {
    video_id: String,
    tm_summary: String,
    clip_duration_s: f64,
    saliency: Vec<f64>,
    vm_intervals: Vec<(f64, f64)>,
    split: Split,
    provenance: Provenance,
}

/// One triplet as a JSON line with the output schema keys.
pub fn triplet_to_json_line(triplet: &SummaryTriplet) -> Result<String> {
    let row = TripletRow {
        video_id: triplet.video_id.clone(),
        tm_summary: triplet.tm_summary.clone(),
        clip_duration_s: triplet.timeline.clip_duration_s(),
        saliency: triplet.timeline.scores().to_vec(),
        vm_intervals: triplet.vm_summary.intervals.clone(),
        split: triplet.split,
        provenance: triplet.provenance.clone(),
    };
    serde_json::to_string(&row).map_err(|e| invalid(format!("serialize triplet: {e}")))
}

/// Parses a triplet line written by [`triplet_to_json_line`]. The
/// merged duration is recovered from the provenance windows.
pub fn triplet_from_json_line(line: &str) -> Result<SummaryTriplet> {
    let row: TripletRow =
        serde_json::from_str(line).map_err(|e| invalid(format!("triplet line: {e}")))?;
    let duration: f64 = row.provenance.windows.iter().map(|w| w.duration_s).sum();
    let timeline = ClipTimeline::new(row.clip_duration_s, duration, row.saliency)?;
    Ok(SummaryTriplet {
        video_id: row.video_id,
        tm_summary: row.tm_summary,
        timeline,
        vm_summary: VmSummary {
            intervals: row.vm_intervals,
            budget_ratio: crate::timeline::DEFAULT_BUDGET_RATIO,
        },
        split: row.split,
        provenance: row.provenance,
    })
}

pub fn rejection_to_json_line(rejection: &Rejection) -> Result<String> {
    serde_json::to_string(rejection).map_err(|e| invalid(format!("serialize rejection: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn record(qid: i64, vid: &str, duration: f64, windows: &[(f64, f64)]) -> AnnotationRecord {
        let clip_count: usize = {
            let tmp = AnnotationRecord {
                qid,
                query: String::new(),
                vid: vid.to_string(),
                source_duration_s: duration,
                relevant_windows: windows.to_vec(),
                clip_scores: Vec::new(),
            };
            tmp.covered_clip_count(2.0)
        };
        AnnotationRecord {
            qid,
            query: format!("query {qid}"),
            vid: vid.to_string(),
            source_duration_s: duration,
            relevant_windows: windows.to_vec(),
            clip_scores: vec![vec![2, 3, 4]; clip_count],
        }
    }

    #[test]
    fn ingest_empty_file() {
        let mut tmp = tempfile::NamedTempFile::new().unwrap();
        tmp.flush().unwrap();
        let records = ingest(tmp.path(), 2.0).unwrap();
        assert!(records.is_empty());
    }

    #[test]
    fn ingest_fixture_line_roundtrips() {
        let line = concat!(
            r#"{"qid": 7, "query": "a dog plays", "vid": "vidA", "duration": 20.0, "#,
            r#""relevant_windows": [[0.0, 4.0], [8.0, 12.0]], "#,
            r#""saliency_scores": [[1,2,3],[2,2,2],[4,4,4],[0,1,2]], "extra": true}"#
        );
        let mut tmp = tempfile::NamedTempFile::new().unwrap();
        writeln!(tmp, "{line}").unwrap();
        let records = ingest(tmp.path(), 2.0).unwrap();
        assert_eq!(records.len(), 1);
        let r = &records[0];
        assert_eq!(r.qid, 7);
        assert_eq!(r.relevant_windows.len(), 2);
        assert_eq!(r.clip_scores.len(), 4);
    }

    #[test]
    fn ingest_rejects_window_beyond_duration() {
        let line = concat!(
            r#"{"qid": 9, "query": "x", "vid": "v", "duration": 10.0, "#,
            r#""relevant_windows": [[0.0, 12.0]], "saliency_scores": [[1],[1],[1],[1],[1],[1]]}"#
        );
        let mut tmp = tempfile::NamedTempFile::new().unwrap();
        writeln!(tmp, "{line}").unwrap();
        let err = ingest(tmp.path(), 2.0).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("qid 9"), "{msg}");
        assert!(msg.contains(":1:"), "{msg}");
    }

    #[test]
    fn merge_single_window_is_identity() {
        let r = record(1, "v", 20.0, &[(0.0, 10.0)]);
        let (timeline, map) = merge_windows(&r, 2.0).unwrap();
        assert_eq!(timeline.video_duration_s(), 10.0);
        assert_eq!(map.windows.len(), 1);
        assert_eq!(map.merged_to_source(4.0), Some(4.0));
    }

    #[test]
    fn merge_concatenates_disjoint_windows() {
        let r = record(2, "v", 20.0, &[(4.0, 8.0), (12.0, 16.0)]);
        let (timeline, map) = merge_windows(&r, 2.0).unwrap();
        assert_eq!(timeline.video_duration_s(), 8.0);
        // merged instant 4s falls in the second window -> source 12s
        assert_eq!(map.merged_to_source(4.0), Some(12.0));
    }

    #[test]
    fn merge_averages_annotator_scores() {
        let mut r = record(3, "v", 10.0, &[(0.0, 2.0)]);
        r.clip_scores = vec![vec![4, 4, 4]];
        let (timeline, _) = merge_windows(&r, 2.0).unwrap();
        assert_eq!(timeline.scores(), &[4.0]);

        let mut r = record(4, "v", 10.0, &[(0.0, 2.0)]);
        r.clip_scores = vec![vec![1, 2]];
        let (timeline, _) = merge_windows(&r, 2.0).unwrap();
        assert_eq!(timeline.scores(), &[1.5]);
    }

    #[test]
    fn merge_coalesces_overlapping_windows() {
        let r = record(5, "v", 20.0, &[(0.0, 6.0), (4.0, 10.0)]);
        let (timeline, map) = merge_windows(&r, 2.0).unwrap();
        assert_eq!(timeline.video_duration_s(), 10.0);
        assert_eq!(map.windows.len(), 1);
    }

    #[test]
    fn clip_mapping_is_bijective() {
        let r = record(6, "v", 40.0, &[(4.0, 8.0), (12.0, 20.0), (24.0, 26.0)]);
        let (timeline, map) = merge_windows(&r, 2.0).unwrap();
        let mapping = map.clip_mapping(2.0);
        assert_eq!(mapping.len(), timeline.num_clips());
        let mut merged: Vec<usize> = mapping.iter().map(|(m, _)| *m).collect();
        let mut source: Vec<usize> = mapping.iter().map(|(_, s)| *s).collect();
        merged.sort_unstable();
        merged.dedup();
        source.sort_unstable();
        source.dedup();
        assert_eq!(merged.len(), mapping.len());
        assert_eq!(source.len(), mapping.len());
    }

    #[test]
    fn same_vid_gets_same_split() {
        let spec = SplitSpec::default();
        for seed in 0..20 {
            let a = assign_split("shared-video", seed, &spec);
            let b = assign_split("shared-video", seed, &spec);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn split_fractions_validated() {
        let bad = SplitSpec { train: 0.5, validation: 0.2, test: 0.2 };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn build_rejects_low_coverage_video() {
        // 44s video: one 2s top-scored segment fits the 6.6s budget;
        // the six isolated score-3 clips each get scaled below 2s and
        // are dropped by cleaning, leaving 2s = 4.5% < 5%.
        let mut scores = vec![1i64; 22];
        scores[2] = 4;
        for i in [4, 6, 8, 10, 12, 14] {
            scores[i] = 3;
        }
        let r = AnnotationRecord {
            qid: 100,
            query: "rejected".into(),
            vid: "v-rej".into(),
            source_duration_s: 44.0,
            relevant_windows: vec![(0.0, 44.0)],
            clip_scores: scores.iter().map(|&s| vec![s]).collect(),
        };
        let build = build_dataset(&[r], &PipelineConfig::default()).unwrap();
        assert!(build.triplets.is_empty());
        assert_eq!(build.rejections.len(), 1);
        assert_eq!(build.rejections[0].reason, RejectionReason::BelowMinCoverage);
    }

    #[test]
    fn build_keeps_clean_video_and_validates_budget() {
        let r = record(200, "v-keep", 40.0, &[(0.0, 40.0)]);
        let build = build_dataset(&[r], &PipelineConfig::default()).unwrap();
        assert_eq!(build.triplets.len(), 1);
        let t = &build.triplets[0];
        t.vm_summary.validate(t.timeline.video_duration_s()).unwrap();
    }

    #[test]
    fn triplet_json_roundtrip() {
        let r = record(300, "v-rt", 40.0, &[(4.0, 12.0), (20.0, 40.0)]);
        let build = build_dataset(&[r], &PipelineConfig::default()).unwrap();
        let line = triplet_to_json_line(&build.triplets[0]).unwrap();
        let parsed = triplet_from_json_line(&line).unwrap();
        assert_eq!(parsed.video_id, build.triplets[0].video_id);
        assert_eq!(parsed.timeline, build.triplets[0].timeline);
        assert_eq!(parsed.vm_summary.intervals, build.triplets[0].vm_summary.intervals);
        assert_eq!(parsed.split, build.triplets[0].split);
    }
}
