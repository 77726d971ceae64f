//! Central-difference validation of analytic gradients.

use crate::error::Result;
use crate::learn::objective::{Objective, Pair};

/// Max over parameters of `|analytic − numeric| / max(|numeric|, 1e-8)`, with
/// `numeric = (L(θ + eps) − L(θ − eps)) / (2 eps)`.
pub fn gradient_error<O: Objective + Clone>(
    model: &O,
    batch: &[Pair<'_>],
    eps: f64,
    analytic: &[f64],
) -> Result<f64> {
    let base = model.parameters();
    assert_eq!(analytic.len(), base.len(), "gradient length");
    let mut probe = model.clone();
    let mut params = base.clone();
    let mut worst = 0.0f64;
    for i in 0..base.len() {
        params[i] = base[i] + eps;
        probe.set_parameters(&params);
        let up = probe.loss(batch)?;
        params[i] = base[i] - eps;
        probe.set_parameters(&params);
        let down = probe.loss(batch)?;
        params[i] = base[i];

        let numeric = (up - down) / (2.0 * eps);
        let err = (analytic[i] - numeric).abs() / numeric.abs().max(1e-8);
        worst = worst.max(err);
    }
    Ok(worst)
}

/// Compares the model's analytic gradient with central differences.
pub fn finite_diff_check<O: Objective + Clone>(model: &O, batch: &[Pair<'_>], eps: f64) -> Result<f64> {
    let (_, analytic) = model.loss_and_gradient(batch)?;
    gradient_error(model, batch, eps, &analytic)
}
