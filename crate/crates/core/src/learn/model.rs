//! Trainable selector parameters and their forward passes.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{scaled_dot_attention, softmax, Attention, Matrix};
use crate::learn::TrainConfig;

/// Initial value of the learnable contrastive temperatures.
pub const INITIAL_TEMPERATURE: f64 = 0.07;

/// Kaiming-normal samples: zero mean, standard deviation `sqrt(2 / fan_in)`.
pub fn init_params(fan_in: usize, fan_out: usize, seed: u64) -> Vec<f64> {
    assert!(fan_in > 0 && fan_out > 0, "parameter shapes must be positive");
    let std = (2.0 / fan_in as f64).sqrt();
    let normal = Normal::new(0.0, std).expect("finite positive std");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..fan_in * fan_out).map(|_| normal.sample(&mut rng)).collect()
}

/// Fully connected layer mapping a frame embedding to one quality logit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerNet {
    pub weight: Vec<f64>,
    pub bias: f64,
    /// Log of the VTC temperature learned alongside the scorer.
    pub log_tau: f64,
}

impl ScorerNet {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self { weight: init_params(dim, 1, seed), bias: 0.0, log_tau: INITIAL_TEMPERATURE.ln() }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { weight: vec![0.0; dim], bias: 0.0, log_tau: INITIAL_TEMPERATURE.ln() }
    }

    pub fn dim(&self) -> usize {
        self.weight.len()
    }

    pub fn tau(&self) -> f64 {
        self.log_tau.exp()
    }

    fn projections(&self, frames: &Matrix) -> Result<Vec<f64>> {
        if frames.cols() != self.dim() {
            return Err(Error::shape(format!(
                "scorer expects dimension {}, frames have {}",
                self.dim(),
                frames.cols()
            )));
        }
        Ok(frames.iter_rows().map(|f| f.iter().zip(&self.weight).map(|(a, b)| a * b).sum()).collect())
    }

    /// One raw logit per frame.
    pub fn logits(&self, frames: &Matrix) -> Result<Vec<f64>> {
        Ok(self.projections(frames)?.into_iter().map(|z| z + self.bias).collect())
    }

    /// Softmax of the logits over all frames of the video. The bias shifts
    /// every logit equally, so it is left out.
    pub fn scores(&self, frames: &Matrix) -> Result<Vec<f64>> {
        softmax(&self.projections(frames)?, 1.0)
    }

    pub fn is_finite(&self) -> bool {
        self.weight.iter().all(|v| v.is_finite()) && self.bias.is_finite() && self.log_tau.is_finite()
    }
}

/// Single-head cross-attention from the text embedding to the frames.
///
/// `w_q` and `w_k` are `d × d'`; `w_v` is `d × d` so that the fused output lives
/// in the text embedding space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionSelector {
    pub w_q: Matrix,
    pub w_k: Matrix,
    pub w_v: Matrix,
    pub log_lambda: f64,
}

impl AttentionSelector {
    pub fn new(dim: usize, key_dim: usize, seed: u64) -> Self {
        let mat = |rows, cols, stream| {
            Matrix::from_vec(rows, cols, init_params(rows, cols, crate::derive_seed(seed, stream))).unwrap()
        };
        Self {
            w_q: mat(dim, key_dim, 1),
            w_k: mat(dim, key_dim, 2),
            w_v: mat(dim, dim, 3),
            log_lambda: INITIAL_TEMPERATURE.ln(),
        }
    }

    /// All three projections set to the identity.
    pub fn identity(dim: usize) -> Self {
        Self {
            w_q: Matrix::identity(dim),
            w_k: Matrix::identity(dim),
            w_v: Matrix::identity(dim),
            log_lambda: INITIAL_TEMPERATURE.ln(),
        }
    }

    pub fn dim(&self) -> usize {
        self.w_q.rows()
    }

    pub fn key_dim(&self) -> usize {
        self.w_q.cols()
    }

    pub fn lambda(&self) -> f64 {
        self.log_lambda.exp()
    }

    pub fn check_shapes(&self) -> Result<()> {
        let (d, dk) = (self.dim(), self.key_dim());
        if d == 0 || dk == 0 {
            return Err(Error::shape("attention projections must be non-empty"));
        }
        if self.w_k.rows() != d || self.w_k.cols() != dk {
            return Err(Error::shape(format!("w_k is {}x{}, expected {d}x{dk}", self.w_k.rows(), self.w_k.cols())));
        }
        if self.w_v.rows() != d || self.w_v.cols() != d {
            return Err(Error::shape(format!("w_v is {}x{}, expected {d}x{d}", self.w_v.rows(), self.w_v.cols())));
        }
        Ok(())
    }

    /// Attention of `text` over every frame; `fused` is the text-conditioned
    /// video representation.
    pub fn forward(&self, frames: &Matrix, text: &[f64]) -> Result<Attention> {
        self.check_shapes()?;
        if frames.cols() != self.dim() || text.len() != self.dim() {
            return Err(Error::shape(format!(
                "attention expects dimension {}, got frames {} and text {}",
                self.dim(),
                frames.cols(),
                text.len()
            )));
        }
        let q = self.w_q.vec_mul(text)?;
        let keys = frames.matmul(&self.w_k)?;
        let values = frames.matmul(&self.w_v)?;
        scaled_dot_attention(&q, &keys, &values)
    }

    pub fn is_finite(&self) -> bool {
        self.w_q.all_finite() && self.w_k.all_finite() && self.w_v.all_finite() && self.log_lambda.is_finite()
    }
}

/// Training provenance stored next to the parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub config: TrainConfig,
    pub loss_trace: Vec<f64>,
}

/// On-disk model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelFile {
    Scorer {
        dim: usize,
        model: ScorerNet,
        training: Option<TrainingRecord>,
    },
    Attention {
        dim: usize,
        key_dim: usize,
        model: AttentionSelector,
        training: Option<TrainingRecord>,
    },
}

impl ModelFile {
    pub fn scorer(model: ScorerNet, training: Option<TrainingRecord>) -> Self {
        ModelFile::Scorer { dim: model.dim(), model, training }
    }

    pub fn attention(model: AttentionSelector, training: Option<TrainingRecord>) -> Self {
        ModelFile::Attention { dim: model.dim(), key_dim: model.key_dim(), model, training }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile =
            serde_json::from_str(&text).map_err(|e| Error::Json { path: path.to_path_buf(), source: e })?;
        file.check()?;
        Ok(file)
    }

    fn check(&self) -> Result<()> {
        match self {
            ModelFile::Scorer { dim, model, .. } => {
                if *dim != model.dim() {
                    return Err(Error::shape(format!("scorer declares dim {dim} but has {}", model.dim())));
                }
                if !model.is_finite() {
                    return Err(Error::domain("scorer parameters are not finite"));
                }
            }
            ModelFile::Attention { dim, key_dim, model, .. } => {
                model.check_shapes()?;
                if *dim != model.dim() || *key_dim != model.key_dim() {
                    return Err(Error::shape("attention selector header does not match its parameters"));
                }
                if !model.is_finite() {
                    return Err(Error::domain("attention parameters are not finite"));
                }
            }
        }
        Ok(())
    }
}
