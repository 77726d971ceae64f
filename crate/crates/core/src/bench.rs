//! Interaction op counts and per-query wall-clock timing.
//!
//! Op model: scoring one (query, video) pair takes `K·d` multiply-adds for the
//! query-frame dot products over the selected frames; combining them into the
//! pooled similarity adds `d` more, reported separately as
//! `pooled_similarity_op_count`. Text-free selections are query-independent,
//! so they are computed once and cached before timing; text-guided selections
//! are timed inside the per-query loop.

use std::fmt::Write as _;
use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::clustering::{kmedoids, DEFAULT_MAX_ITER};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::kernels::{dot, norm, Matrix};
use crate::retrieval::PolicyEcho;
use crate::selectors::{select, video_seed, Policy, SelectionResult, SelectorConfig};

pub const MIN_REPETITIONS: usize = 3;

/// Per-query multiply-add counts over all videos.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounts {
    /// `V·K·d`: query-frame dot products over the selected frames.
    pub interaction: u64,
    /// `V·d`: the pooled-similarity term.
    pub pooled_similarity: u64,
}

pub fn count_interaction_ops(n: usize, k: usize, d: usize, video_count: usize) -> Result<OpCounts> {
    if n == 0 || k == 0 || d == 0 || video_count == 0 {
        return Err(Error::domain("op counts need positive N, K, d and video count"));
    }
    if k > n {
        return Err(Error::domain(format!("K = {k} exceeds N = {n}")));
    }
    let (k, d, v) = (k as u64, d as u64, video_count as u64);
    Ok(OpCounts { interaction: v * k * d, pooled_similarity: v * d })
}

/// Multiply-adds one policy spends selecting frames in one video.
///
/// `iterations` is the k-medoids round count; `key_dim` the attention width.
pub fn selection_ops(policy: Policy, n: usize, k: usize, d: usize, key_dim: usize, iterations: usize) -> u64 {
    let (n, k, d, dk, it) = (n as u64, k as u64, d as u64, key_dim as u64, iterations as u64);
    match policy {
        Policy::Uniform | Policy::Random => 0,
        Policy::RedundancyAware => it * n * k * d,
        Policy::LowQualityAware | Policy::NonInteractive => n * d,
        Policy::Interactive => 3 * n * d * dk + n * dk,
    }
}

/// Selection multiply-adds for one query over every video.
fn selection_op_count(corpus: &Corpus, config: &SelectorConfig) -> Result<u64> {
    let key_dim = config.attention.as_ref().map_or(corpus.dim, |a| a.key_dim());
    let mut total = 0u64;
    for video in &corpus.videos {
        let n = video.frame_count();
        for &policy in &config.policies {
            let k = if policy == Policy::RedundancyAware && config.is_combination() { config.z } else { config.k };
            let iterations = if policy == Policy::RedundancyAware {
                kmedoids(&video.frames, k, video_seed(config.seed, video.video_id), DEFAULT_MAX_ITER)?.iterations
            } else {
                0
            };
            total += selection_ops(policy, n, k, corpus.dim, key_dim, iterations);
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub repetitions: usize,
    /// Median over repetitions of the mean per-query time.
    pub median_ms: f64,
    pub mean_ms: f64,
    pub per_repetition_ms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub policy: PolicyEcho,
    pub n: usize,
    pub k: usize,
    pub dim: usize,
    pub video_count: usize,
    pub query_count: usize,
    pub interaction_op_count: u64,
    pub pooled_similarity_op_count: u64,
    /// Selection multiply-adds for every video once.
    pub selection_op_count: u64,
    /// True when selections were computed before timing (text-free configs).
    pub selection_cached: bool,
    pub op_model: String,
    pub timing: Timing,
}

/// A selection reduced to what the interaction stage reads.
struct Prepared {
    frames: Matrix,
    weights: Vec<f64>,
    pooled_norm: f64,
}

impl Prepared {
    fn new(video_frames: &Matrix, r: SelectionResult) -> Result<Self> {
        let frames = video_frames.select_rows(&r.indices);
        let pooled_norm = norm(&r.pooled);
        if pooled_norm == 0.0 {
            return Err(Error::domain("selection pools to a zero vector"));
        }
        Ok(Self { frames, weights: r.pool_weights, pooled_norm })
    }

    /// `cos(q, pooled)` from the `K` query-frame dot products.
    fn similarity(&self, query: &[f64], query_norm: f64) -> f64 {
        let s: f64 = self.frames.iter_rows().zip(&self.weights).map(|(f, w)| w * dot(query, f)).sum();
        s / (query_norm * self.pooled_norm)
    }
}

/// Times selection (text-guided only) plus interaction per query over all
/// videos. Runs single-threaded; the first pass is a discarded warm-up.
pub fn time_policy(corpus: &Corpus, config: &SelectorConfig, repetitions: usize) -> Result<EfficiencyReport> {
    if repetitions < MIN_REPETITIONS {
        return Err(Error::domain(format!("at least {MIN_REPETITIONS} repetitions are required, got {repetitions}")));
    }
    corpus.ensure_valid()?;
    config.validate()?;
    if corpus.queries.is_empty() {
        return Err(Error::domain("corpus has no queries to time"));
    }
    let n = corpus.videos.iter().map(|v| v.frame_count()).max().unwrap_or(0);
    let ops = count_interaction_ops(n, config.k, corpus.dim, corpus.videos.len())?;
    let selection_op_count = selection_op_count(corpus, config)?;
    let cached = !config.is_text_guided();

    let cache = if cached {
        Some(
            corpus
                .videos
                .iter()
                .map(|v| Prepared::new(&v.frames, select(v, None, config)?))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };

    let one_pass = || -> Result<f64> {
        let start = Instant::now();
        for q in &corpus.queries {
            let qn = norm(&q.embedding);
            let mut best = f64::NEG_INFINITY;
            for (vi, video) in corpus.videos.iter().enumerate() {
                let s = match &cache {
                    Some(c) => c[vi].similarity(black_box(&q.embedding), qn),
                    None => {
                        let p = Prepared::new(&video.frames, select(video, Some(&q.embedding), config)?)?;
                        p.similarity(black_box(&q.embedding), qn)
                    }
                };
                best = best.max(s);
            }
            black_box(best);
        }
        Ok(start.elapsed().as_secs_f64() * 1e3 / corpus.queries.len() as f64)
    };

    one_pass()?;
    let per_repetition_ms = (0..repetitions).map(|_| one_pass()).collect::<Result<Vec<_>>>()?;
    let mut sorted = per_repetition_ms.clone();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median_ms = if sorted.len() % 2 == 1 { sorted[mid] } else { (sorted[mid - 1] + sorted[mid]) / 2.0 };
    let mean_ms = per_repetition_ms.iter().sum::<f64>() / repetitions as f64;

    Ok(EfficiencyReport {
        policy: PolicyEcho::of(config),
        n,
        k: config.k,
        dim: corpus.dim,
        video_count: corpus.videos.len(),
        query_count: corpus.queries.len(),
        interaction_op_count: ops.interaction,
        pooled_similarity_op_count: ops.pooled_similarity,
        selection_op_count,
        selection_cached: cached,
        op_model: "interaction = videos*K*d multiply-adds per query; pooled similarity = videos*d; \
                   text-free selections cached before timing, text-guided selections timed per query"
            .into(),
        timing: Timing { repetitions, median_ms, mean_ms, per_repetition_ms },
    })
}

/// Plain-text table with one row per report.
pub fn format_efficiency_table(reports: &[EfficiencyReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<24} {:>7} {:>14} {:>14} {:>11}", "Policy", "K", "Interact ops", "Select ops", "Time (ms)");
    for r in reports {
        let _ = writeln!(
            s,
            "{:<24} {:>7} {:>14} {:>14} {:>11.4}",
            r.policy.label,
            format!("{}⇒{}", r.n, r.k),
            r.interaction_op_count,
            r.selection_op_count,
            r.timing.median_ms
        );
    }
    s
}
