//! The six frame selection policies and score combination.
//!
//! Every policy maps a video (and, for the text-guided ones, a query) to a
//! [`SelectionResult`]: `K` ascending frame indices, a length-`N` score vector
//! and the pooled video embedding. Uniform, random and redundancy-aware
//! selections are mean-pooled; the score-based policies pool the survivors with
//! their softmax renormalized over the `K` selected frames.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clustering::{kmedoids, DEFAULT_MAX_ITER};
use crate::corpus::{Corpus, VideoRecord};
use crate::error::{Error, Result};
use crate::kernels::{cosine_similarity, mean_pool, norm, softmax, top_k_desc, weighted_pool, weighted_sum, Matrix};
use crate::learn::{AttentionSelector, ScorerNet};

/// Default cluster count of the redundancy-aware contribution in combinations.
pub const DEFAULT_Z: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Uniform,
    Random,
    RedundancyAware,
    LowQualityAware,
    NonInteractive,
    Interactive,
}

impl Policy {
    pub const ALL: [Policy; 6] = [
        Policy::Uniform,
        Policy::Random,
        Policy::RedundancyAware,
        Policy::LowQualityAware,
        Policy::NonInteractive,
        Policy::Interactive,
    ];

    /// Short command-line name.
    pub fn code(self) -> &'static str {
        match self {
            Policy::Uniform => "uni",
            Policy::Random => "rand",
            Policy::RedundancyAware => "redun",
            Policy::LowQualityAware => "lq",
            Policy::NonInteractive => "nint",
            Policy::Interactive => "int",
        }
    }

    /// Name used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            Policy::Uniform => "Uni",
            Policy::Random => "Rand",
            Policy::RedundancyAware => "Redun-A",
            Policy::LowQualityAware => "LQ-A",
            Policy::NonInteractive => "N-InT",
            Policy::Interactive => "InT",
        }
    }

    pub fn is_text_guided(self) -> bool {
        matches!(self, Policy::NonInteractive | Policy::Interactive)
    }

    /// Policies whose selection pools with score weights instead of the mean.
    pub fn is_weighted(self) -> bool {
        matches!(self, Policy::LowQualityAware | Policy::NonInteractive | Policy::Interactive)
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.code() == s || p.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::domain(format!("unknown policy {s:?} (expected uni, rand, redun, lq, nint or int)")))
    }
}

/// How to select frames: one policy, or the score sum of several.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectorConfig {
    /// A single policy, or two or more combined by summing their score vectors.
    pub policies: Vec<Policy>,
    pub k: usize,
    /// Cluster count of the redundancy-aware contribution in combinations.
    pub z: usize,
    pub seed: u64,
    pub scorer: Option<ScorerNet>,
    pub attention: Option<AttentionSelector>,
}

impl SelectorConfig {
    pub fn single(policy: Policy, k: usize) -> Self {
        Self { policies: vec![policy], k, z: DEFAULT_Z, seed: 0, scorer: None, attention: None }
    }

    pub fn combined(policies: Vec<Policy>, k: usize, z: usize) -> Self {
        Self { policies, k, z, seed: 0, scorer: None, attention: None }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_scorer(mut self, scorer: ScorerNet) -> Self {
        self.scorer = Some(scorer);
        self
    }

    pub fn with_attention(mut self, attention: AttentionSelector) -> Self {
        self.attention = Some(attention);
        self
    }

    pub fn is_combination(&self) -> bool {
        self.policies.len() > 1
    }

    pub fn is_text_guided(&self) -> bool {
        self.policies.iter().any(|p| p.is_text_guided())
    }

    /// `"Redun-A"` or `"Redun-A+N-InT"`.
    pub fn label(&self) -> String {
        self.policies.iter().map(|p| p.label()).collect::<Vec<_>>().join("+")
    }

    /// Checks the policy list, `K`, `Z` and model availability.
    pub fn validate(&self) -> Result<()> {
        if self.policies.is_empty() {
            return Err(Error::domain("no selection policy given"));
        }
        if self.k == 0 {
            return Err(Error::domain("K must be at least 1"));
        }
        if self.z == 0 {
            return Err(Error::domain("Z must be at least 1"));
        }
        if self.policies.contains(&Policy::LowQualityAware) && self.scorer.is_none() {
            return Err(Error::domain("the low-quality-aware policy needs a trained scorer"));
        }
        if self.policies.contains(&Policy::Interactive) && self.attention.is_none() {
            return Err(Error::domain("the interactive policy needs a trained attention selector"));
        }
        Ok(())
    }

    fn scorer(&self) -> Result<&ScorerNet> {
        self.scorer.as_ref().ok_or_else(|| Error::domain("the low-quality-aware policy needs a trained scorer"))
    }

    fn attention(&self) -> Result<&AttentionSelector> {
        self.attention
            .as_ref()
            .ok_or_else(|| Error::domain("the interactive policy needs a trained attention selector"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionResult {
    /// `K` distinct frame indices in temporal order.
    pub indices: Vec<usize>,
    /// Length-`N` nonnegative scores summing to one.
    pub scores: Vec<f64>,
    /// Weight of each selected frame in `pooled`, aligned with `indices`.
    pub pool_weights: Vec<f64>,
    pub pooled: Vec<f64>,
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::domain(format!("K must lie in [1, {n}], got {k}")));
    }
    Ok(())
}

/// `1/K` on every selected index, zero elsewhere.
fn indicator(n: usize, indices: &[usize]) -> Vec<f64> {
    let mut s = vec![0.0; n];
    let w = 1.0 / indices.len() as f64;
    for &i in indices {
        s[i] = w;
    }
    s
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

fn mean_pooled(frames: &Matrix, indices: Vec<usize>) -> Result<SelectionResult> {
    let pooled = mean_pool(&frames.select_rows(&indices))?;
    let pool_weights = vec![1.0 / indices.len() as f64; indices.len()];
    Ok(SelectionResult { scores: indicator(frames.rows(), &indices), indices, pool_weights, pooled })
}

/// Top-`K` of the softmax over `logits`, pooled with the survivors' logits.
fn top_k_weighted(frames: &Matrix, logits: &[f64], alpha: Vec<f64>, k: usize) -> Result<SelectionResult> {
    check_k(frames.rows(), k)?;
    let indices = sorted(top_k_desc(&alpha, k));
    let survivors: Vec<f64> = indices.iter().map(|&i| logits[i]).collect();
    let pooled = weighted_pool(&frames.select_rows(&indices), &survivors)?;
    let pool_weights = softmax(&survivors, 1.0)?;
    Ok(SelectionResult { indices, scores: alpha, pool_weights, pooled })
}

/// `floor(k·N/K)` for `k = 0..K`.
pub fn uniform_indices(n: usize, k: usize) -> Result<Vec<usize>> {
    check_k(n, k)?;
    Ok((0..k).map(|i| i * n / k).collect())
}

/// `K` indices drawn uniformly without replacement, sorted.
pub fn random_indices(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    check_k(n, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sorted(sample(&mut rng, n, k).into_vec()))
}

pub fn select_uniform(frames: &Matrix, k: usize) -> Result<SelectionResult> {
    mean_pooled(frames, uniform_indices(frames.rows(), k)?)
}

pub fn select_random(frames: &Matrix, k: usize, seed: u64) -> Result<SelectionResult> {
    mean_pooled(frames, random_indices(frames.rows(), k, seed)?)
}

/// Medoids of a `K`-medoids clustering of the frames.
pub fn select_redundancy_aware(frames: &Matrix, k: usize, seed: u64) -> Result<SelectionResult> {
    check_k(frames.rows(), k)?;
    let outcome = kmedoids(frames, k, seed, DEFAULT_MAX_ITER)?;
    mean_pooled(frames, outcome.medoid_indices)
}

/// Top-`K` frames by scorer quality.
pub fn select_low_quality_aware(frames: &Matrix, scorer: &ScorerNet, k: usize) -> Result<SelectionResult> {
    let logits = scorer.logits(frames)?;
    let alpha = softmax(&logits, 1.0)?;
    top_k_weighted(frames, &logits, alpha, k)
}

fn query_cosines(frames: &Matrix, query: &[f64]) -> Result<Vec<f64>> {
    if query.len() != frames.cols() {
        return Err(Error::shape(format!("query has dimension {}, frames {}", query.len(), frames.cols())));
    }
    if norm(query) == 0.0 {
        return Err(Error::domain("query embedding has zero norm"));
    }
    frames.iter_rows().map(|f| cosine_similarity(f, query)).collect()
}

/// Top-`K` frames by cosine similarity to the query.
pub fn select_non_interactive(frames: &Matrix, query: &[f64], k: usize) -> Result<SelectionResult> {
    let logits = query_cosines(frames, query)?;
    let alpha = softmax(&logits, 1.0)?;
    top_k_weighted(frames, &logits, alpha, k)
}

/// Top-`K` frames by text-to-frame attention. Also returns the attention-fused
/// representation over all frames.
pub fn select_interactive(
    frames: &Matrix,
    query: &[f64],
    attention: &AttentionSelector,
    k: usize,
) -> Result<(SelectionResult, Vec<f64>)> {
    let att = attention.forward(frames, query)?;
    let result = top_k_weighted(frames, &att.logits, att.weights, k)?;
    Ok((result, att.fused))
}

/// Per-video seed of the stochastic policies.
pub fn video_seed(seed: u64, video_id: u32) -> u64 {
    crate::derive_seed(seed, u64::from(video_id))
}

/// The score vector a policy contributes to a combination.
pub fn policy_scores(video: &VideoRecord, query: Option<&[f64]>, policy: Policy, config: &SelectorConfig) -> Result<Vec<f64>> {
    let frames = &video.frames;
    let n = frames.rows();
    let seed = video_seed(config.seed, video.video_id);
    Ok(match policy {
        Policy::Uniform => indicator(n, &uniform_indices(n, config.k)?),
        Policy::Random => indicator(n, &random_indices(n, config.k, seed)?),
        Policy::RedundancyAware => {
            check_k(n, config.z)?;
            indicator(n, &kmedoids(frames, config.z, seed, DEFAULT_MAX_ITER)?.medoid_indices)
        }
        Policy::LowQualityAware => config.scorer()?.scores(frames)?,
        Policy::NonInteractive => softmax(&query_cosines(frames, need_query(query)?)?, 1.0)?,
        Policy::Interactive => config.attention()?.forward(frames, need_query(query)?)?.weights,
    })
}

fn need_query(query: Option<&[f64]>) -> Result<&[f64]> {
    query.ok_or_else(|| Error::domain("text-guided policy requires a query"))
}

/// Top-`K` frames of the elementwise sum of `score_vectors`.
///
/// `pool_weights` and `pooled` are left empty; [`combine_pool`] fills them
/// from the frames.
pub fn combine_select(score_vectors: &[Vec<f64>], k: usize) -> Result<SelectionResult> {
    let first = score_vectors.first().ok_or_else(|| Error::shape("no score vectors to combine"))?;
    let n = first.len();
    if let Some(v) = score_vectors.iter().find(|v| v.len() != n) {
        return Err(Error::shape(format!("score vectors of lengths {n} and {}", v.len())));
    }
    check_k(n, k)?;
    let mut cumulative = vec![0.0; n];
    for v in score_vectors {
        for (c, s) in cumulative.iter_mut().zip(v) {
            *c += s;
        }
    }
    let indices = sorted(top_k_desc(&cumulative, k));
    let total: f64 = cumulative.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::domain("combined scores do not have a positive finite sum"));
    }
    let scores = cumulative.into_iter().map(|c| c / total).collect();
    Ok(SelectionResult { indices, scores, pool_weights: Vec::new(), pooled: Vec::new() })
}

/// Fills `pooled` with the selected frames weighted by their combined scores,
/// renormalized over the selection.
pub fn combine_pool(frames: &Matrix, mut result: SelectionResult) -> Result<SelectionResult> {
    let weights: Vec<f64> = result.indices.iter().map(|&i| result.scores[i]).collect();
    let total: f64 = weights.iter().sum();
    let k = weights.len() as f64;
    result.pool_weights =
        if total > 0.0 { weights.iter().map(|w| w / total).collect() } else { vec![1.0 / k; weights.len()] };
    result.pooled = weighted_sum(&frames.select_rows(&result.indices), &result.pool_weights);
    Ok(result)
}

/// Runs `config` on one video.
pub fn select(video: &VideoRecord, query: Option<&[f64]>, config: &SelectorConfig) -> Result<SelectionResult> {
    let frames = &video.frames;
    if let [policy] = config.policies[..] {
        let seed = video_seed(config.seed, video.video_id);
        return match policy {
            Policy::Uniform => select_uniform(frames, config.k),
            Policy::Random => select_random(frames, config.k, seed),
            Policy::RedundancyAware => select_redundancy_aware(frames, config.k, seed),
            Policy::LowQualityAware => select_low_quality_aware(frames, config.scorer()?, config.k),
            Policy::NonInteractive => select_non_interactive(frames, need_query(query)?, config.k),
            Policy::Interactive => Ok(select_interactive(frames, need_query(query)?, config.attention()?, config.k)?.0),
        };
    }
    let vectors = config
        .policies
        .iter()
        .map(|&p| policy_scores(video, query, p, config))
        .collect::<Result<Vec<_>>>()?;
    combine_pool(frames, combine_select(&vectors, config.k)?)
}

/// One selection in a selection document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionEntry {
    pub video_id: u32,
    pub query_id: Option<u32>,
    pub policy: String,
    pub k: usize,
    pub indices: Vec<usize>,
    pub scores: Vec<f64>,
}

/// Selections for a whole corpus: one per video for text-free configurations,
/// one per query on its paired video for text-guided ones.
pub fn select_corpus(corpus: &Corpus, config: &SelectorConfig, query_id: Option<u32>) -> Result<Vec<SelectionEntry>> {
    config.validate()?;
    let entry = |video: &VideoRecord, qid: Option<u32>, r: SelectionResult| SelectionEntry {
        video_id: video.video_id,
        query_id: qid,
        policy: config.label(),
        k: config.k,
        indices: r.indices,
        scores: r.scores,
    };
    if !config.is_text_guided() {
        return corpus.videos.iter().map(|v| Ok(entry(v, None, select(v, None, config)?))).collect();
    }
    let index = corpus.video_index();
    let queries: Vec<_> = match query_id {
        Some(id) => {
            let q = corpus
                .queries
                .iter()
                .find(|q| q.query_id == id)
                .ok_or_else(|| Error::domain(format!("no query with id {id}")))?;
            vec![q]
        }
        None => corpus.queries.iter().collect(),
    };
    queries
        .into_iter()
        .map(|q| {
            let &vi = index
                .get(&q.paired_video_id)
                .ok_or_else(|| Error::domain(format!("query {} pairs with unknown video", q.query_id)))?;
            let v = &corpus.videos[vi];
            Ok(entry(v, Some(q.query_id), select(v, Some(&q.embedding), config)?))
        })
        .collect()
}
