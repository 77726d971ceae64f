//! Similarity matrices, two-stage shortlisting and ranking metrics.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::kernels::{cosine_similarity, mean_pool, norm, top_k_desc, Matrix};
use crate::selectors::{select, Policy, SelectorConfig};

/// Candidates kept by the first retrieval stage.
pub const SHORTLIST_SIZE: usize = 128;

/// `T × V` matrix of `cos(query_t, video_v)`.
pub fn similarity_matrix(videos: &Matrix, queries: &Matrix) -> Result<Matrix> {
    if videos.cols() != queries.cols() {
        return Err(Error::shape(format!(
            "videos have dimension {}, queries {}",
            videos.cols(),
            queries.cols()
        )));
    }
    for (what, m) in [("video", videos), ("query", queries)] {
        if let Some(i) = m.iter_rows().position(|r| norm(r) == 0.0) {
            return Err(Error::domain(format!("{what} {i} has zero norm")));
        }
    }
    let mut out = Matrix::zeros(queries.rows(), videos.rows());
    for (t, q) in queries.iter_rows().enumerate() {
        for (v, row) in videos.iter_rows().enumerate() {
            out.set(t, v, cosine_similarity(q, row)?);
        }
    }
    Ok(out)
}

/// Indices of the `c` most similar videos, most similar first, ties toward the
/// lower index.
pub fn shortlist(similarity_row: &[f64], c: usize) -> Vec<usize> {
    top_k_desc(similarity_row, c.min(similarity_row.len()))
}

/// Second-stage scorer applied to a query's shortlisted candidates.
pub trait Rescorer: Sync {
    /// One score per candidate, higher is better.
    fn rescore(&self, query: usize, candidates: &[usize]) -> Vec<f64>;
}

/// Keeps the first-stage similarities.
pub struct IdentityRescorer<'a>(pub &'a Matrix);

impl Rescorer for IdentityRescorer<'_> {
    fn rescore(&self, query: usize, candidates: &[usize]) -> Vec<f64> {
        candidates.iter().map(|&v| self.0.get(query, v)).collect()
    }
}

/// 1-based rank of `target` in `row`; equal-scored rivals with a lower index
/// rank ahead of it.
fn pessimistic_rank(row: &[f64], target: usize) -> usize {
    let s = row[target];
    1 + row
        .iter()
        .enumerate()
        .filter(|&(j, &x)| x > s || (x == s && j < target))
        .count()
}

/// Recall at 1/5/10 (percentages), median rank and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub r_at_1: f64,
    pub r_at_5: f64,
    pub r_at_10: f64,
    pub r_sum: f64,
    pub mdr: f64,
    pub query_count: usize,
}

impl Metrics {
    /// Metrics of a list of 1-based ranks.
    pub fn from_ranks(ranks: &[usize]) -> Result<Self> {
        if ranks.is_empty() {
            return Err(Error::domain("no queries to rank"));
        }
        let t = ranks.len() as f64;
        let recall = |m: usize| 100.0 * ranks.iter().filter(|&&r| r <= m).count() as f64 / t;
        let (r_at_1, r_at_5, r_at_10) = (recall(1), recall(5), recall(10));
        let mut sorted = ranks.to_vec();
        sorted.sort_unstable();
        let mid = sorted.len() / 2;
        let mdr = if sorted.len() % 2 == 1 {
            sorted[mid] as f64
        } else {
            (sorted[mid - 1] + sorted[mid]) as f64 / 2.0
        };
        Ok(Self { r_at_1, r_at_5, r_at_10, r_sum: r_at_1 + r_at_5 + r_at_10, mdr, query_count: ranks.len() })
    }
}

/// Rank of each query's paired video. With a rescorer, ranking happens inside
/// the top-[`SHORTLIST_SIZE`] shortlist and a pair outside it gets rank
/// `shortlist size + 1`.
pub fn query_ranks(similarity: &Matrix, ground_truth: &[usize], rescorer: Option<&dyn Rescorer>) -> Result<Vec<usize>> {
    if ground_truth.len() != similarity.rows() {
        return Err(Error::shape(format!(
            "{} queries but {} ground-truth entries",
            similarity.rows(),
            ground_truth.len()
        )));
    }
    let v = similarity.cols();
    if let Some((t, &g)) = ground_truth.iter().enumerate().find(|&(_, &g)| g >= v) {
        return Err(Error::domain(format!("query {t} pairs with column {g} of {v}")));
    }
    Ok(ground_truth
        .iter()
        .enumerate()
        .map(|(t, &g)| {
            let row = similarity.row(t);
            match rescorer {
                None => pessimistic_rank(row, g),
                Some(r) => {
                    let candidates = shortlist(row, SHORTLIST_SIZE);
                    match candidates.iter().position(|&c| c == g) {
                        None => candidates.len() + 1,
                        Some(pos) => {
                            let scores = r.rescore(t, &candidates);
                            let s = scores[pos];
                            1 + candidates
                                .iter()
                                .zip(&scores)
                                .filter(|&(&c, &x)| x > s || (x == s && c < g))
                                .count()
                        }
                    }
                }
            }
        })
        .collect())
}

pub fn rank_metrics(similarity: &Matrix, ground_truth: &[usize], rescorer: Option<&dyn Rescorer>) -> Result<Metrics> {
    Metrics::from_ranks(&query_ranks(similarity, ground_truth, rescorer)?)
}

/// Which selection a report describes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyEcho {
    /// `"Base"`, `"Redun-A"`, `"Redun-A+N-InT"`, ...
    pub label: String,
    pub policies: Vec<Policy>,
    pub k: usize,
    /// Cluster count of the redundancy-aware contribution of a combination.
    pub z: Option<usize>,
    pub seed: u64,
}

impl PolicyEcho {
    pub fn of(config: &SelectorConfig) -> Self {
        let z = (config.is_combination() && config.policies.contains(&Policy::RedundancyAware)).then_some(config.z);
        Self { label: config.label(), policies: config.policies.clone(), k: config.k, z, seed: config.seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingReport {
    pub policy: PolicyEcho,
    /// Frames per video (the largest, if videos differ).
    pub n: usize,
    #[serde(flatten)]
    pub metrics: Metrics,
    /// Interaction-stage multiply-adds per query over all videos.
    pub interaction_op_count: u64,
}

/// Mean-pools every frame of every video: the no-selection baseline.
pub fn evaluate_base(corpus: &Corpus) -> Result<RankingReport> {
    corpus.ensure_valid()?;
    let pooled = corpus.videos.iter().map(|v| mean_pool(&v.frames)).collect::<Result<Vec<_>>>()?;
    let queries = Matrix::from_rows(&corpus.queries.iter().map(|q| q.embedding.as_slice()).collect::<Vec<_>>())?;
    let sim = similarity_matrix(&Matrix::from_rows(&pooled)?, &queries)?;
    let n = max_frames(corpus);
    Ok(RankingReport {
        policy: PolicyEcho { label: "Base".into(), policies: Vec::new(), k: n, z: None, seed: 0 },
        n,
        metrics: rank_metrics(&sim, &corpus.ground_truth()?, None)?,
        interaction_op_count: crate::bench::count_interaction_ops(n, n, corpus.dim, corpus.videos.len())?.interaction,
    })
}

fn max_frames(corpus: &Corpus) -> usize {
    corpus.videos.iter().map(|v| v.frame_count()).max().unwrap_or(0)
}

/// Query-by-video similarity under `config`.
///
/// Text-free selections pool each video once; text-guided ones pool every
/// (query, video) pair separately.
pub fn policy_similarity(corpus: &Corpus, config: &SelectorConfig) -> Result<Matrix> {
    corpus.ensure_valid()?;
    config.validate()?;
    let t = corpus.queries.len();
    let v = corpus.videos.len();
    let mut sim = Matrix::zeros(t, v);
    if !config.is_text_guided() {
        let pooled = corpus
            .videos
            .par_iter()
            .map(|video| select(video, None, config).map(|r| r.pooled))
            .collect::<Result<Vec<_>>>()?;
        let queries = Matrix::from_rows(&corpus.queries.iter().map(|q| q.embedding.as_slice()).collect::<Vec<_>>())?;
        return similarity_matrix(&Matrix::from_rows(&pooled)?, &queries);
    }
    let rows = corpus
        .queries
        .par_iter()
        .map(|q| {
            corpus
                .videos
                .iter()
                .map(|video| {
                    let pooled = select(video, Some(&q.embedding), config)?.pooled;
                    if norm(&pooled) == 0.0 {
                        return Err(Error::domain(format!("video {} pools to a zero vector", video.video_id)));
                    }
                    cosine_similarity(&q.embedding, &pooled)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    for (i, row) in rows.iter().enumerate() {
        sim.row_mut(i).copy_from_slice(row);
    }
    Ok(sim)
}

/// Runs the selector on the corpus and ranks every query's paired video.
pub fn evaluate_policy(corpus: &Corpus, config: &SelectorConfig) -> Result<RankingReport> {
    let sim = policy_similarity(corpus, config)?;
    let n = max_frames(corpus);
    Ok(RankingReport {
        policy: PolicyEcho::of(config),
        n,
        metrics: rank_metrics(&sim, &corpus.ground_truth()?, None)?,
        interaction_op_count: crate::bench::count_interaction_ops(n, config.k, corpus.dim, corpus.videos.len())?
            .interaction,
    })
}

/// Plain-text table with one row per report.
pub fn format_table(reports: &[RankingReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<24} {:>7} {:>7} {:>7} {:>7} {:>7} {:>6}", "Policy", "K", "R@1", "R@5", "R@10", "R@sum", "MdR");
    for r in reports {
        let m = &r.metrics;
        let mut label = r.policy.label.clone();
        if let Some(z) = r.policy.z {
            let _ = write!(label, " (Z={z})");
        }
        let _ = writeln!(
            s,
            "{:<24} {:>7} {:>7.1} {:>7.1} {:>7.1} {:>7.1} {:>6.1}",
            label,
            format!("{}⇒{}", r.n, r.policy.k),
            m.r_at_1,
            m.r_at_5,
            m.r_at_10,
            m.r_sum,
            m.mdr
        );
    }
    s
}
