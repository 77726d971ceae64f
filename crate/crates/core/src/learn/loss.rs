//! In-batch contrastive losses over cosine similarities, with gradients.
//!
//! Row `i` of the left batch is paired with row `i` of the right batch. With
//! `C_ij = cos(left_i, right_j)`:
//!
//! * the row direction (`left → right`) scores `left_i` against every `right_j`,
//! * the column direction (`right → left`) scores `right_i` against every `left_j`.
//!
//! VTC averages both directions with videos on the left; CL is the row
//! direction alone with the attention-fused representations on the left.

use crate::error::{Error, Result};
use crate::kernels::{dot, log_sum_exp, Matrix};

fn check_batch(left: &Matrix, right: &Matrix) -> Result<()> {
    if left.rows() != right.rows() {
        return Err(Error::shape(format!("batches of {} and {} rows", left.rows(), right.rows())));
    }
    if left.cols() != right.cols() {
        return Err(Error::shape(format!("dimensions {} and {}", left.cols(), right.cols())));
    }
    if left.rows() < 2 {
        return Err(Error::domain("contrastive losses need a batch of at least 2"));
    }
    Ok(())
}

fn check_temperature(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("temperature must be positive, got {t}")))
    }
}

fn row_norms(m: &Matrix) -> Result<Vec<f64>> {
    m.iter_rows()
        .enumerate()
        .map(|(i, r)| {
            let n = dot(r, r).sqrt();
            if n == 0.0 {
                Err(Error::domain(format!("row {i} has zero norm")))
            } else {
                Ok(n)
            }
        })
        .collect()
}

struct CosineBatch {
    cos: Matrix,
    left_norms: Vec<f64>,
}

fn cosine_batch(left: &Matrix, right: &Matrix) -> Result<CosineBatch> {
    let ln = row_norms(left)?;
    let rn = row_norms(right)?;
    let b = left.rows();
    let mut cos = Matrix::zeros(b, b);
    for i in 0..b {
        for j in 0..b {
            cos.set(i, j, dot(left.row(i), right.row(j)) / (ln[i] * rn[j]));
        }
    }
    Ok(CosineBatch { cos, left_norms: ln })
}

/// Mean over rows of `-log softmax(C_i· / t)_i`.
fn row_direction(cos: &Matrix, t: f64) -> f64 {
    let b = cos.rows();
    (0..b)
        .map(|i| {
            let logits: Vec<f64> = cos.row(i).iter().map(|c| c / t).collect();
            log_sum_exp(&logits) - logits[i]
        })
        .sum::<f64>()
        / b as f64
}

/// Mean over columns of `-log softmax(C_·i / t)_i`.
fn column_direction(cos: &Matrix, t: f64) -> f64 {
    let b = cos.rows();
    (0..b)
        .map(|i| {
            let logits: Vec<f64> = (0..b).map(|j| cos.get(j, i) / t).collect();
            log_sum_exp(&logits) - logits[i]
        })
        .sum::<f64>()
        / b as f64
}

/// Adds `weight · ∂(row direction)/∂C` into `grad`.
fn row_direction_grad(cos: &Matrix, t: f64, weight: f64, grad: &mut Matrix) {
    let b = cos.rows();
    let scale = weight / (b as f64 * t);
    for i in 0..b {
        let logits: Vec<f64> = cos.row(i).iter().map(|c| c / t).collect();
        let lse = log_sum_exp(&logits);
        for j in 0..b {
            let p = (logits[j] - lse).exp();
            let delta = if i == j { 1.0 } else { 0.0 };
            grad.set(i, j, grad.get(i, j) + scale * (p - delta));
        }
    }
}

fn column_direction_grad(cos: &Matrix, t: f64, weight: f64, grad: &mut Matrix) {
    let b = cos.rows();
    let scale = weight / (b as f64 * t);
    for i in 0..b {
        let logits: Vec<f64> = (0..b).map(|j| cos.get(j, i) / t).collect();
        let lse = log_sum_exp(&logits);
        for j in 0..b {
            let p = (logits[j] - lse).exp();
            let delta = if i == j { 1.0 } else { 0.0 };
            grad.set(j, i, grad.get(j, i) + scale * (p - delta));
        }
    }
}

/// Gradient of the loss with respect to the left rows and the log temperature,
/// given `∂L/∂C`.
fn backprop_cosine(left: &Matrix, right: &Matrix, batch: &CosineBatch, grad_cos: &Matrix) -> (Matrix, f64) {
    let b = left.rows();
    let d = left.cols();
    let mut d_left = Matrix::zeros(b, d);
    let mut d_log_t = 0.0;
    for i in 0..b {
        let li = left.row(i);
        let ni = batch.left_norms[i];
        let out = d_left.row_mut(i);
        for j in 0..b {
            let g = grad_cos.get(i, j);
            let c = batch.cos.get(i, j);
            d_log_t -= g * c;
            if g == 0.0 {
                continue;
            }
            let rj = right.row(j);
            let nj = dot(rj, rj).sqrt();
            // ∂cos(l, r)/∂l = r / (|l||r|) - cos · l / |l|²
            for k in 0..d {
                out[k] += g * (rj[k] / (ni * nj) - c * li[k] / (ni * ni));
            }
        }
    }
    (d_left, d_log_t)
}

/// Text-to-video and video-to-text halves of the symmetric loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VtcParts {
    pub t2v: f64,
    pub v2t: f64,
}

impl VtcParts {
    pub fn total(&self) -> f64 {
        0.5 * (self.t2v + self.v2t)
    }
}

pub fn vtc_parts(video: &Matrix, text: &Matrix, tau: f64) -> Result<VtcParts> {
    check_batch(video, text)?;
    check_temperature(tau)?;
    let batch = cosine_batch(video, text)?;
    Ok(VtcParts { t2v: column_direction(&batch.cos, tau), v2t: row_direction(&batch.cos, tau) })
}

/// Symmetric in-batch video-text contrastive loss.
pub fn vtc_loss(video: &Matrix, text: &Matrix, tau: f64) -> Result<f64> {
    Ok(vtc_parts(video, text, tau)?.total())
}

/// One-directional contrastive loss pulling each fused representation toward
/// its own text and away from the other texts in the batch.
pub fn cl_loss(fused: &Matrix, text: &Matrix, lambda: f64) -> Result<f64> {
    check_batch(fused, text)?;
    check_temperature(lambda)?;
    let batch = cosine_batch(fused, text)?;
    Ok(row_direction(&batch.cos, lambda))
}

/// Loss value plus gradients with respect to the left batch and the log temperature.
#[derive(Debug, Clone)]
pub struct LossGrad {
    pub loss: f64,
    pub d_left: Matrix,
    pub d_log_temperature: f64,
}

pub fn vtc_loss_grad(video: &Matrix, text: &Matrix, log_tau: f64) -> Result<LossGrad> {
    let tau = log_tau.exp();
    check_batch(video, text)?;
    check_temperature(tau)?;
    let batch = cosine_batch(video, text)?;
    let loss = 0.5 * (column_direction(&batch.cos, tau) + row_direction(&batch.cos, tau));
    let mut g = Matrix::zeros(video.rows(), video.rows());
    row_direction_grad(&batch.cos, tau, 0.5, &mut g);
    column_direction_grad(&batch.cos, tau, 0.5, &mut g);
    let (d_left, d_log_temperature) = backprop_cosine(video, text, &batch, &g);
    Ok(LossGrad { loss, d_left, d_log_temperature })
}

pub fn cl_loss_grad(fused: &Matrix, text: &Matrix, log_lambda: f64) -> Result<LossGrad> {
    let lambda = log_lambda.exp();
    check_batch(fused, text)?;
    check_temperature(lambda)?;
    let batch = cosine_batch(fused, text)?;
    let loss = row_direction(&batch.cos, lambda);
    let mut g = Matrix::zeros(fused.rows(), fused.rows());
    row_direction_grad(&batch.cos, lambda, 1.0, &mut g);
    let (d_left, d_log_temperature) = backprop_cosine(fused, text, &batch, &g);
    Ok(LossGrad { loss, d_left, d_log_temperature })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{E, LN_2};

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn equal_similarities_give_log_batch() {
        let same = m(&[&[1.0, 2.0], &[1.0, 2.0]]);
        for tau in [0.07, 1.0, 3.0] {
            assert!((vtc_loss(&same, &same, tau).unwrap() - LN_2).abs() < 1e-12);
        }
        let four = m(&[&[0.5, -1.0, 2.0][..]; 4]);
        assert!((cl_loss(&four, &four, 0.3).unwrap() - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn orthonormal_pairs_closed_form() {
        let e = m(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let expect = (E + 1.0).ln() - 1.0;
        let parts = vtc_parts(&e, &e, 1.0).unwrap();
        assert!((parts.t2v - expect).abs() < 1e-12);
        assert!((parts.v2t - expect).abs() < 1e-12);
        assert!((vtc_loss(&e, &e, 1.0).unwrap() - expect).abs() < 1e-12);
        assert!((cl_loss(&e, &e, 1.0).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn raising_a_diagonal_similarity_lowers_the_loss() {
        let text = m(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let mut prev = f64::INFINITY;
        for w in [0.0, 0.5, 1.0, 2.0, 4.0] {
            let video = m(&[&[w, 1.0, 1.0], &[0.3, 1.0, 0.2], &[0.1, 0.4, 1.0]]);
            let l = vtc_loss(&video, &text, 0.5).unwrap();
            assert!(l < prev);
            prev = l;
        }
    }

    #[test]
    fn cl_is_the_column_direction_with_roles_swapped() {
        let fused = m(&[&[0.3, -1.0, 2.0], &[1.0, 0.2, 0.0], &[-0.5, 0.5, 0.5]]);
        let text = m(&[&[0.1, -0.8, 1.5], &[0.9, 0.0, 0.3], &[0.0, 1.0, 0.2]]);
        let cl = cl_loss(&fused, &text, 0.2).unwrap();
        assert!((cl - vtc_parts(&text, &fused, 0.2).unwrap().t2v).abs() < 1e-12);
        assert!((cl - vtc_parts(&fused, &text, 0.2).unwrap().v2t).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let ok = m(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let zero = m(&[&[1.0, 0.0], &[0.0, 0.0]]);
        assert!(matches!(vtc_loss(&zero, &ok, 1.0), Err(Error::Domain(_))));
        assert!(matches!(cl_loss(&ok, &zero, 1.0), Err(Error::Domain(_))));
        assert!(matches!(vtc_loss(&m(&[&[1.0, 0.0]]), &m(&[&[1.0, 0.0]]), 1.0), Err(Error::Domain(_))));
        assert!(matches!(vtc_loss(&ok, &m(&[&[1.0], &[2.0]]), 1.0), Err(Error::Shape(_))));
        assert!(matches!(vtc_loss(&ok, &ok, 0.0), Err(Error::Domain(_))));
    }

    fn numeric_grad(f: impl Fn(&Matrix, f64) -> f64, left: &Matrix, log_t: f64) -> (Matrix, f64) {
        let eps = 1e-6;
        let mut g = Matrix::zeros(left.rows(), left.cols());
        for i in 0..left.rows() {
            for k in 0..left.cols() {
                let mut p = left.clone();
                p.set(i, k, left.get(i, k) + eps);
                let mut q = left.clone();
                q.set(i, k, left.get(i, k) - eps);
                g.set(i, k, (f(&p, log_t) - f(&q, log_t)) / (2.0 * eps));
            }
        }
        let gt = (f(left, log_t + eps) - f(left, log_t - eps)) / (2.0 * eps);
        (g, gt)
    }

    fn batch(len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-2.0f64..2.0, len)
    }

    proptest! {
        #[test]
        fn vtc_is_nonnegative_and_symmetric(a in batch(12), b in batch(12), tau in 0.05f64..2.0) {
            let v = Matrix::from_vec(3, 4, a).unwrap();
            let t = Matrix::from_vec(3, 4, b).unwrap();
            prop_assume!(v.iter_rows().chain(t.iter_rows()).all(|r| dot(r, r) > 1e-3));
            let l = vtc_loss(&v, &t, tau).unwrap();
            prop_assert!(l >= 0.0);
            prop_assert!((l - vtc_loss(&t, &v, tau).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn analytic_gradients_match_differences(a in batch(12), b in batch(12), log_t in -1.5f64..0.5) {
            let v = Matrix::from_vec(3, 4, a).unwrap();
            let t = Matrix::from_vec(3, 4, b).unwrap();
            prop_assume!(v.iter_rows().chain(t.iter_rows()).all(|r| dot(r, r) > 0.05));

            let g = vtc_loss_grad(&v, &t, log_t).unwrap();
            let (ng, ngt) = numeric_grad(|l, lt| vtc_loss(l, &t, lt.exp()).unwrap(), &v, log_t);
            for (x, y) in g.d_left.as_slice().iter().zip(ng.as_slice()) {
                prop_assert!((x - y).abs() < 1e-5 * (1.0 + y.abs()));
            }
            prop_assert!((g.d_log_temperature - ngt).abs() < 1e-5 * (1.0 + ngt.abs()));

            let g = cl_loss_grad(&v, &t, log_t).unwrap();
            let (ng, ngt) = numeric_grad(|l, lt| cl_loss(l, &t, lt.exp()).unwrap(), &v, log_t);
            for (x, y) in g.d_left.as_slice().iter().zip(ng.as_slice()) {
                prop_assert!((x - y).abs() < 1e-5 * (1.0 + y.abs()));
            }
            prop_assert!((g.d_log_temperature - ngt).abs() < 1e-5 * (1.0 + ngt.abs()));
        }
    }
}
