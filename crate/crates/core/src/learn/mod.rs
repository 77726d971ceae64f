//! Contrastive objectives and training for the trainable selectors.

mod gradcheck;
mod loss;
mod model;
mod objective;
mod train;

pub use gradcheck::{finite_diff_check, gradient_error};
pub use loss::{cl_loss, cl_loss_grad, vtc_loss, vtc_loss_grad, vtc_parts, LossGrad, VtcParts};
pub use model::{init_params, AttentionSelector, ModelFile, ScorerNet, TrainingRecord, INITIAL_TEMPERATURE};
pub use objective::{Objective, Pair};
pub use train::{train_attention_selector, train_scorer, training_pairs, TrainConfig, Trained};
