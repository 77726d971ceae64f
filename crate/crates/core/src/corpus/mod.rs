//! Embedding corpus: videos as ordered frame embeddings, queries as single
//! text embeddings paired with a video.

mod format;
mod synth;

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::Matrix;

pub use format::{encoded_len, load_corpus, read_corpus, save_corpus, write_corpus, MAGIC, VERSION};
pub use synth::{generate_synthetic, SynthSpec};

/// Planted ground truth for one frame. Only tests and evaluation harnesses look
/// at these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FrameTruth {
    /// Planted content cluster, `None` for noise frames.
    pub cluster: Option<u32>,
    pub is_noise: bool,
    pub is_query_target: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoRecord {
    pub video_id: u32,
    /// `N × d`, rows in temporal order.
    pub frames: Matrix,
    pub truth: Option<Vec<FrameTruth>>,
}

impl VideoRecord {
    pub fn frame_count(&self) -> usize {
        self.frames.rows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryRecord {
    pub query_id: u32,
    pub embedding: Vec<f64>,
    pub paired_video_id: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Generated { seed: u64 },
    File(String),
    Manual,
}

/// A set of videos and queries sharing one embedding dimension.
///
/// Values are held in `f64` but are always representable in `f32`, which is
/// what the file format stores.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub dim: usize,
    pub videos: Vec<VideoRecord>,
    pub queries: Vec<QueryRecord>,
    pub provenance: Provenance,
}

impl PartialEq for Corpus {
    /// Content equality; provenance is ignored.
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.videos == other.videos && self.queries == other.queries
    }
}

impl Corpus {
    pub fn video_index(&self) -> HashMap<u32, usize> {
        self.videos.iter().enumerate().map(|(i, v)| (v.video_id, i)).collect()
    }

    /// Column index of each query's paired video.
    pub fn ground_truth(&self) -> Result<Vec<usize>> {
        let index = self.video_index();
        self.queries
            .iter()
            .map(|q| {
                index.get(&q.paired_video_id).copied().ok_or_else(|| {
                    Error::domain(format!(
                        "query {} is paired with missing video {}",
                        q.query_id, q.paired_video_id
                    ))
                })
            })
            .collect()
    }

    pub fn has_truth(&self) -> bool {
        !self.videos.is_empty() && self.videos.iter().all(|v| v.truth.is_some())
    }

    /// Fails with a domain error carrying the first finding, if any.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = validate_corpus(self);
        match report.findings.first() {
            None => Ok(()),
            Some(f) => Err(Error::domain(format!(
                "invalid corpus ({} finding(s)); first: {f:?}",
                report.findings.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    ZeroDimension,
    EmptyVideo { video_id: u32 },
    VideoDimensionMismatch { video_id: u32, found: usize, expected: usize },
    QueryDimensionMismatch { query_id: u32, found: usize, expected: usize },
    NonFiniteFrame { video_id: u32, frame: usize, column: usize },
    NonFiniteQuery { query_id: u32, column: usize },
    TruthLengthMismatch { video_id: u32, found: usize, expected: usize },
    DanglingPair { query_id: u32, paired_video_id: u32 },
    DuplicateVideoId { video_id: u32 },
    DuplicateQueryId { query_id: u32 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Checks every corpus invariant and reports all violations found.
pub fn validate_corpus(corpus: &Corpus) -> ValidationReport {
    let mut findings = Vec::new();
    if corpus.dim == 0 {
        findings.push(Finding::ZeroDimension);
    }

    let mut video_ids = HashSet::new();
    for v in &corpus.videos {
        if !video_ids.insert(v.video_id) {
            findings.push(Finding::DuplicateVideoId { video_id: v.video_id });
        }
        if v.frames.rows() == 0 {
            findings.push(Finding::EmptyVideo { video_id: v.video_id });
        }
        if v.frames.cols() != corpus.dim {
            findings.push(Finding::VideoDimensionMismatch {
                video_id: v.video_id,
                found: v.frames.cols(),
                expected: corpus.dim,
            });
        }
        for (i, row) in v.frames.iter_rows().enumerate() {
            if let Some(column) = row.iter().position(|x| !x.is_finite()) {
                findings.push(Finding::NonFiniteFrame { video_id: v.video_id, frame: i, column });
            }
        }
        if let Some(truth) = &v.truth {
            if truth.len() != v.frames.rows() {
                findings.push(Finding::TruthLengthMismatch {
                    video_id: v.video_id,
                    found: truth.len(),
                    expected: v.frames.rows(),
                });
            }
        }
    }

    let mut query_ids = HashSet::new();
    for q in &corpus.queries {
        if !query_ids.insert(q.query_id) {
            findings.push(Finding::DuplicateQueryId { query_id: q.query_id });
        }
        if q.embedding.len() != corpus.dim {
            findings.push(Finding::QueryDimensionMismatch {
                query_id: q.query_id,
                found: q.embedding.len(),
                expected: corpus.dim,
            });
        }
        if let Some(column) = q.embedding.iter().position(|x| !x.is_finite()) {
            findings.push(Finding::NonFiniteQuery { query_id: q.query_id, column });
        }
        if !video_ids.contains(&q.paired_video_id) {
            findings.push(Finding::DanglingPair {
                query_id: q.query_id,
                paired_video_id: q.paired_video_id,
            });
        }
    }

    ValidationReport { findings }
}
