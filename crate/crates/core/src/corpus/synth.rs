//! Synthetic corpus generator.
//!
//! Every video gets `clusters` content centroids laid out as contiguous
//! temporal runs of near-duplicate frames, plus `noise_frames_per_video`
//! isotropic random frames at random positions. Clean centroids share a
//! corpus-wide content direction (weight `content_share`); noise frames do not.
//! Each query is a unit-normalized noisy copy of one clean frame.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, FrameTruth, Provenance, QueryRecord, VideoRecord};
use crate::error::{Error, Result};
use crate::kernels::{dot, norm, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub videos: usize,
    pub frames_per_video: usize,
    pub clusters: usize,
    pub noise_frames_per_video: usize,
    pub dim: usize,
    /// Minimum inter-centroid distance divided by the intra-cluster radius.
    pub cluster_separation: f64,
    pub query_noise_scale: f64,
    pub queries_per_video: usize,
    /// Weight of the shared content direction in every clean centroid, in `[0, 1)`.
    pub content_share: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            videos: 200,
            frames_per_video: 16,
            clusters: 4,
            noise_frames_per_video: 4,
            dim: 64,
            cluster_separation: 6.0,
            query_noise_scale: 0.1,
            queries_per_video: 1,
            content_share: 0.5,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::domain(m));
        if self.videos == 0 {
            return fail("at least one video is required".into());
        }
        if self.dim == 0 {
            return fail("dimension must be positive".into());
        }
        if self.clusters == 0 {
            return fail("at least one cluster is required".into());
        }
        if self.clusters + self.noise_frames_per_video > self.frames_per_video {
            return fail(format!(
                "{} clusters + {} noise frames exceed {} frames per video",
                self.clusters, self.noise_frames_per_video, self.frames_per_video
            ));
        }
        if !(self.cluster_separation > 0.0 && self.cluster_separation.is_finite()) {
            return fail(format!("cluster separation must be positive, got {}", self.cluster_separation));
        }
        if !(self.query_noise_scale >= 0.0 && self.query_noise_scale.is_finite()) {
            return fail(format!("query noise scale must be non-negative, got {}", self.query_noise_scale));
        }
        if !(0.0..1.0).contains(&self.content_share) {
            return fail(format!("content share must lie in [0, 1), got {}", self.content_share));
        }
        if self.videos.checked_mul(self.queries_per_video).is_none_or(|n| n > u32::MAX as usize) {
            return fail("too many queries".into());
        }
        Ok(())
    }
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn unit_gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let g = gaussian(rng, d);
        let n = norm(&g);
        if n > 1e-9 {
            return g.into_iter().map(|v| v / n).collect();
        }
    }
}

/// Removes the components along `basis` (orthonormal) and normalizes; `None`
/// when nothing is left.
fn orthogonalize(mut v: Vec<f64>, basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    for b in basis {
        let p = dot(&v, b);
        for (x, y) in v.iter_mut().zip(b) {
            *x -= p * y;
        }
    }
    let n = norm(&v);
    (n > 1e-6).then(|| v.into_iter().map(|x| x / n).collect())
}

fn min_pairwise_distance(points: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            best = best.min(d.sqrt());
        }
    }
    best
}

/// Unit centroids for one video and the minimum distance between them.
fn centroids(rng: &mut ChaCha8Rng, spec: &SynthSpec, shared: Option<&[f64]>) -> (Vec<Vec<f64>>, f64) {
    let d = spec.dim;
    let c = spec.clusters;
    let reserved = usize::from(shared.is_some());
    let out: Vec<Vec<f64>> = if c + reserved <= d {
        // Orthonormal private directions, all orthogonal to the shared axis.
        let mut basis: Vec<Vec<f64>> = shared.iter().map(|a| a.to_vec()).collect();
        while basis.len() < c + reserved {
            if let Some(v) = orthogonalize(gaussian(rng, d), &basis) {
                basis.push(v);
            }
        }
        match shared {
            Some(axis) => {
                let private_weight = (1.0 - spec.content_share * spec.content_share).sqrt();
                basis[1..]
                    .iter()
                    .map(|r| axis.iter().zip(r).map(|(a, b)| spec.content_share * a + private_weight * b).collect())
                    .collect()
            }
            None => basis,
        }
    } else {
        // Too few dimensions for an orthogonal layout: best spread of random draws.
        let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
        for _ in 0..32 {
            let set: Vec<Vec<f64>> = (0..c).map(|_| unit_gaussian(rng, d)).collect();
            let spread = if c > 1 { min_pairwise_distance(&set) } else { f64::INFINITY };
            if best.as_ref().is_none_or(|(s, _)| spread > *s) {
                best = Some((spread, set));
            }
        }
        best.unwrap().1
    };
    let spread = if c > 1 { min_pairwise_distance(&out) } else { 2f64.sqrt() };
    (out, spread)
}

/// A point drawn uniformly from the `d`-ball of the given radius.
fn ball_point(rng: &mut ChaCha8Rng, d: usize, radius: f64) -> Vec<f64> {
    let dir = unit_gaussian(rng, d);
    let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
    dir.into_iter().map(|v| v * r).collect()
}

fn to_f32_grid(v: &mut [f64]) {
    for x in v {
        *x = *x as f32 as f64;
    }
}

/// Builds a corpus from `spec`; a pure function of `spec`.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<Corpus> {
    generate(spec).map(|(corpus, _)| corpus)
}

/// The corpus plus each video's planted unit centroids.
pub(crate) fn generate(spec: &SynthSpec) -> Result<(Corpus, Vec<Vec<Vec<f64>>>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.dim;
    let n = spec.frames_per_video;
    let shared = (spec.content_share > 0.0 && spec.clusters < d).then(|| unit_gaussian(&mut rng, d));

    let mut videos = Vec::with_capacity(spec.videos);
    let mut planted = Vec::with_capacity(spec.videos);
    let mut queries = Vec::with_capacity(spec.videos * spec.queries_per_video);

    for vi in 0..spec.videos {
        let (cents, spread) = centroids(&mut rng, spec, shared.as_deref());
        let radius = spread / spec.cluster_separation;

        let mut noise_at = sample(&mut rng, n, spec.noise_frames_per_video).into_vec();
        noise_at.sort_unstable();
        let clean = n - spec.noise_frames_per_video;
        let (base, extra) = (clean / spec.clusters, clean % spec.clusters);

        let mut frames = Matrix::zeros(n, d);
        let mut truth = Vec::with_capacity(n);
        let mut clean_seen = 0usize;
        let mut clean_rows = Vec::with_capacity(clean);
        for i in 0..n {
            let scale = rng.random_range(0.8..1.25);
            let row = if noise_at.binary_search(&i).is_ok() {
                truth.push(FrameTruth { cluster: None, is_noise: true, is_query_target: false });
                unit_gaussian(&mut rng, d).into_iter().map(|v| v * scale).collect::<Vec<_>>()
            } else {
                // contiguous runs: the first `extra` clusters get one more frame
                let cluster = if clean_seen < extra * (base + 1) {
                    clean_seen / (base + 1)
                } else {
                    extra + (clean_seen - extra * (base + 1)) / base
                };
                clean_seen += 1;
                clean_rows.push(i);
                truth.push(FrameTruth { cluster: Some(cluster as u32), is_noise: false, is_query_target: false });
                let e = ball_point(&mut rng, d, radius);
                cents[cluster].iter().zip(&e).map(|(c, e)| scale * (c + e)).collect()
            };
            frames.row_mut(i).copy_from_slice(&row);
        }
        to_f32_grid(frames.as_mut_slice());

        let video_id = vi as u32;
        for _ in 0..spec.queries_per_video {
            let target = clean_rows[rng.random_range(0..clean_rows.len())];
            truth[target].is_query_target = true;
            let frame = frames.row(target);
            let fnorm = norm(frame);
            let noise = gaussian(&mut rng, d);
            let sigma = spec.query_noise_scale / (d as f64).sqrt();
            let mut q: Vec<f64> = frame.iter().zip(&noise).map(|(f, g)| f / fnorm + sigma * g).collect();
            let qn = norm(&q);
            for x in &mut q {
                *x /= qn;
            }
            to_f32_grid(&mut q);
            queries.push(QueryRecord { query_id: queries.len() as u32, embedding: q, paired_video_id: video_id });
        }

        videos.push(VideoRecord { video_id, frames, truth: Some(truth) });
        planted.push(cents);
    }

    let corpus = Corpus { dim: d, videos, queries, provenance: Provenance::Generated { seed: spec.seed } };
    Ok((corpus, planted))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::write_corpus;
    use crate::kernels::cosine_distance;

    fn bytes(c: &Corpus) -> Vec<u8> {
        let mut out = Vec::new();
        write_corpus(c, &mut out).unwrap();
        out
    }

    #[test]
    fn one_frame_clusters() {
        let c = generate_synthetic(&SynthSpec {
            videos: 1,
            frames_per_video: 4,
            clusters: 4,
            noise_frames_per_video: 0,
            cluster_separation: 10.0,
            ..SynthSpec::default()
        })
        .unwrap();
        assert_eq!(c.videos.len(), 1);
        assert_eq!(c.videos[0].frame_count(), 4);
        assert_eq!(c.queries.len(), 1);
        let labels: Vec<_> = c.videos[0].truth.as_ref().unwrap().iter().map(|t| t.cluster).collect();
        assert_eq!(labels, vec![Some(0), Some(1), Some(2), Some(3)]);
    }

    #[test]
    fn same_seed_same_bytes() {
        let spec = SynthSpec { videos: 10, seed: 7, ..SynthSpec::default() };
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&spec).unwrap();
        assert_eq!(bytes(&a), bytes(&b));
        let other = generate_synthetic(&SynthSpec { seed: 8, ..spec }).unwrap();
        assert_ne!(bytes(&a), bytes(&other));
    }

    #[test]
    fn infeasible_specs_are_rejected() {
        let too_many = SynthSpec { frames_per_video: 6, clusters: 4, noise_frames_per_video: 3, ..SynthSpec::default() };
        assert!(matches!(generate_synthetic(&too_many), Err(Error::Domain(_))));
        let no_clusters = SynthSpec { clusters: 0, ..SynthSpec::default() };
        assert!(matches!(generate_synthetic(&no_clusters), Err(Error::Domain(_))));
        let bad_sep = SynthSpec { cluster_separation: 0.0, ..SynthSpec::default() };
        assert!(matches!(generate_synthetic(&bad_sep), Err(Error::Domain(_))));
    }

    #[test]
    fn layout_has_contiguous_runs_and_planted_noise() {
        let c = generate_synthetic(&SynthSpec { videos: 20, ..SynthSpec::default() }).unwrap();
        for v in &c.videos {
            let t = v.truth.as_ref().unwrap();
            assert_eq!(t.iter().filter(|f| f.is_noise).count(), 4);
            assert_eq!(t.iter().filter(|f| f.is_query_target).count(), 1);
            let labels: Vec<u32> = t.iter().filter_map(|f| f.cluster).collect();
            assert_eq!(labels, vec![0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3]);
            assert!(t.iter().all(|f| f.is_noise == f.cluster.is_none()));
            assert!(t.iter().all(|f| !(f.is_noise && f.is_query_target)));
        }
        for q in &c.queries {
            assert!((norm(&q.embedding) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn clean_frames_are_nearest_their_own_centroid() {
        for (sep, dim, clusters) in [(4.0, 64, 4), (4.0, 8, 7), (4.0, 2, 3), (6.0, 3, 2)] {
            let spec = SynthSpec {
                videos: 40,
                dim,
                clusters,
                noise_frames_per_video: 2,
                cluster_separation: sep,
                ..SynthSpec::default()
            };
            let (c, planted) = generate(&spec).unwrap();
            for (v, cents) in c.videos.iter().zip(&planted) {
                for (i, t) in v.truth.as_ref().unwrap().iter().enumerate() {
                    let Some(own) = t.cluster else { continue };
                    let dist = |k: usize| cosine_distance(v.frames.row(i), &cents[k]).unwrap();
                    for k in (0..cents.len()).filter(|&k| k != own as usize) {
                        assert!(dist(own as usize) < dist(k), "d={dim} video {} frame {i}", v.video_id);
                    }
                }
            }
        }
    }
}
