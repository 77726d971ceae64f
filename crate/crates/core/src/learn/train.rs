//! Minibatch gradient descent for the scorer and the attention selector.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::learn::model::{AttentionSelector, ScorerNet, INITIAL_TEMPERATURE};
use crate::learn::objective::{Objective, Pair};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Starting value of the learnable temperature (τ or λ).
    pub initial_temperature: f64,
    /// Train against the CL objective (required for the attention selector).
    pub use_cl: bool,
    /// Projection width `d'` of the attention selector; defaults to `d`.
    pub key_dim: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 4,
            learning_rate: 5e-4,
            seed: 0,
            initial_temperature: INITIAL_TEMPERATURE,
            use_cl: false,
            key_dim: None,
        }
    }
}

impl TrainConfig {
    fn validate(&self, corpus: &Corpus) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::domain(format!("batch size must be at least 2, got {}", self.batch_size)));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::domain(format!("learning rate must be non-negative, got {}", self.learning_rate)));
        }
        if !(self.initial_temperature > 0.0 && self.initial_temperature.is_finite()) {
            return Err(Error::domain("initial temperature must be positive"));
        }
        if corpus.queries.len() < self.batch_size {
            return Err(Error::domain(format!(
                "batch size {} exceeds the {} available queries",
                self.batch_size,
                corpus.queries.len()
            )));
        }
        Ok(())
    }
}

/// A trained model and its loss trace.
///
/// `loss_trace[0]` is the loss before training and `loss_trace[e]` the loss
/// after epoch `e`, each averaged over fixed consecutive batches of the corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct Trained<M> {
    pub model: M,
    pub loss_trace: Vec<f64>,
}

/// One `(frames, text)` pair per query, in query order.
pub fn training_pairs(corpus: &Corpus) -> Result<Vec<Pair<'_>>> {
    let gt = corpus.ground_truth()?;
    Ok(corpus
        .queries
        .iter()
        .zip(gt)
        .map(|(q, v)| Pair { frames: &corpus.videos[v].frames, text: &q.embedding })
        .collect())
}

/// Splits `order` into batches of `size`; a trailing batch shorter than 2 is dropped.
fn batches(order: &[usize], size: usize) -> impl Iterator<Item = &[usize]> {
    order.chunks(size).filter(|c| c.len() >= 2)
}

fn mean_loss<O: Objective>(model: &O, pairs: &[Pair<'_>], size: usize) -> Result<f64> {
    let order: Vec<usize> = (0..pairs.len()).collect();
    let mut total = 0.0;
    let mut count = 0usize;
    for chunk in batches(&order, size) {
        let batch: Vec<Pair<'_>> = chunk.iter().map(|&i| pairs[i]).collect();
        total += model.loss(&batch)?;
        count += 1;
    }
    Ok(total / count as f64)
}

fn descend<O: Objective>(mut model: O, corpus: &Corpus, config: &TrainConfig) -> Result<Trained<O>> {
    let pairs = training_pairs(corpus)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut loss_trace = Vec::with_capacity(config.epochs + 1);
    loss_trace.push(mean_loss(&model, &pairs, config.batch_size)?);

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in batches(&order, config.batch_size) {
            let batch: Vec<Pair<'_>> = chunk.iter().map(|&i| pairs[i]).collect();
            let (_, grad) = model.loss_and_gradient(&batch)?;
            if config.learning_rate > 0.0 {
                let mut params = model.parameters();
                for (p, g) in params.iter_mut().zip(&grad) {
                    *p -= config.learning_rate * g;
                }
                if params.iter().any(|p| !p.is_finite()) {
                    return Err(Error::domain("training diverged to non-finite parameters"));
                }
                model.set_parameters(&params);
            }
        }
        loss_trace.push(mean_loss(&model, &pairs, config.batch_size)?);
    }
    Ok(Trained { model, loss_trace })
}

/// Trains the quality scorer with the VTC loss, using its softmax scores over
/// all frames as pooling weights.
pub fn train_scorer(corpus: &Corpus, config: &TrainConfig) -> Result<Trained<ScorerNet>> {
    config.validate(corpus)?;
    let mut model = ScorerNet::new(corpus.dim, config.seed);
    model.log_tau = config.initial_temperature.ln();
    descend(model, corpus, config)
}

/// Trains the attention selector with the CL loss on its fused output.
pub fn train_attention_selector(corpus: &Corpus, config: &TrainConfig) -> Result<Trained<AttentionSelector>> {
    config.validate(corpus)?;
    if !config.use_cl {
        return Err(Error::domain("the attention selector is trained only with the CL objective enabled"));
    }
    let key_dim = config.key_dim.unwrap_or(corpus.dim);
    if key_dim == 0 {
        return Err(Error::domain("key dimension must be positive"));
    }
    let mut model = AttentionSelector::new(corpus.dim, key_dim, config.seed);
    model.log_lambda = config.initial_temperature.ln();
    descend(model, corpus, config)
}
