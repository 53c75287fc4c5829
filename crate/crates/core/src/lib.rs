//! Algorithmic core for bimodal video summarization: clip timelines
//! and saliency-driven summary extraction, the NDCG-family evaluation
//! metrics, a differentiable list-wise ranking objective with a toy
//! trainable scorer, and the annotation-to-triplet dataset pipeline.

pub mod dataset;
pub mod error;
pub mod metrics;
pub mod ranking;
pub mod report;
pub mod scorer;
pub mod summarizer;
pub mod timeline;

pub use error::{Error, Result};
pub use timeline::{ClipTimeline, FrameSelection, Segment, VmSummary};
