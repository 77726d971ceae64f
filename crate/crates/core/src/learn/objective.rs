//! Training objectives of the two trainable selectors with analytic gradients.
//!
//! The scorer pools every frame with its softmax weights and is trained with
//! the symmetric VTC loss against the paired texts. The attention selector
//! fuses the frames under text attention and is trained with the CL loss.

use crate::error::{Error, Result};
use crate::kernels::{dot, Matrix};
use crate::learn::loss::{cl_loss_grad, vtc_loss_grad};
use crate::learn::model::{AttentionSelector, ScorerNet};

/// One training example: a video's frames and its paired text embedding.
#[derive(Debug, Clone, Copy)]
pub struct Pair<'a> {
    pub frames: &'a Matrix,
    pub text: &'a [f64],
}

/// A model with flat parameters and a differentiable batch loss.
pub trait Objective {
    fn parameters(&self) -> Vec<f64>;
    fn set_parameters(&mut self, params: &[f64]);
    fn loss(&self, batch: &[Pair<'_>]) -> Result<f64>;
    fn loss_and_gradient(&self, batch: &[Pair<'_>]) -> Result<(f64, Vec<f64>)>;
}

fn text_matrix(batch: &[Pair<'_>]) -> Result<Matrix> {
    Matrix::from_rows(&batch.iter().map(|p| p.text).collect::<Vec<_>>())
}

impl ScorerNet {
    /// Softmax weights over all frames and the pooled video embedding.
    fn soft_pool(&self, frames: &Matrix) -> Result<(Vec<f64>, Vec<f64>)> {
        let alpha = self.scores(frames)?;
        let pooled = crate::kernels::weighted_sum(frames, &alpha);
        Ok((alpha, pooled))
    }
}

impl Objective for ScorerNet {
    /// `[weight..., bias, log_tau]`
    fn parameters(&self) -> Vec<f64> {
        let mut p = self.weight.clone();
        p.push(self.bias);
        p.push(self.log_tau);
        p
    }

    fn set_parameters(&mut self, params: &[f64]) {
        let d = self.weight.len();
        assert_eq!(params.len(), d + 2, "scorer parameter count");
        self.weight.copy_from_slice(&params[..d]);
        self.bias = params[d];
        self.log_tau = params[d + 1];
    }

    fn loss(&self, batch: &[Pair<'_>]) -> Result<f64> {
        Ok(self.loss_and_gradient(batch)?.0)
    }

    fn loss_and_gradient(&self, batch: &[Pair<'_>]) -> Result<(f64, Vec<f64>)> {
        let d = self.dim();
        let mut alphas = Vec::with_capacity(batch.len());
        let mut pooled = Vec::with_capacity(batch.len());
        for p in batch {
            let (a, v) = self.soft_pool(p.frames)?;
            alphas.push(a);
            pooled.push(v);
        }
        let video = Matrix::from_rows(&pooled)?;
        let text = text_matrix(batch)?;
        let lg = vtc_loss_grad(&video, &text, self.log_tau)?;

        let mut grad = vec![0.0; d + 2];
        for (i, p) in batch.iter().enumerate() {
            let g = lg.d_left.row(i);
            let g_pooled = dot(g, &pooled[i]);
            for (n, f) in p.frames.iter_rows().enumerate() {
                // ∂L/∂z_n = α_n (g·f_n − g·v)
                let dz = alphas[i][n] * (dot(g, f) - g_pooled);
                for (w, x) in grad[..d].iter_mut().zip(f) {
                    *w += dz * x;
                }
                grad[d] += dz;
            }
        }
        grad[d + 1] = lg.d_log_temperature;
        Ok((lg.loss, grad))
    }
}

impl Objective for AttentionSelector {
    /// `[w_q (row-major)..., w_k..., w_v..., log_lambda]`
    fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.w_q.as_slice().len() * 2 + self.w_v.as_slice().len() + 1);
        p.extend_from_slice(self.w_q.as_slice());
        p.extend_from_slice(self.w_k.as_slice());
        p.extend_from_slice(self.w_v.as_slice());
        p.push(self.log_lambda);
        p
    }

    fn set_parameters(&mut self, params: &[f64]) {
        let nq = self.w_q.as_slice().len();
        let nk = self.w_k.as_slice().len();
        let nv = self.w_v.as_slice().len();
        assert_eq!(params.len(), nq + nk + nv + 1, "attention parameter count");
        self.w_q.as_mut_slice().copy_from_slice(&params[..nq]);
        self.w_k.as_mut_slice().copy_from_slice(&params[nq..nq + nk]);
        self.w_v.as_mut_slice().copy_from_slice(&params[nq + nk..nq + nk + nv]);
        self.log_lambda = params[nq + nk + nv];
    }

    fn loss(&self, batch: &[Pair<'_>]) -> Result<f64> {
        Ok(self.loss_and_gradient(batch)?.0)
    }

    fn loss_and_gradient(&self, batch: &[Pair<'_>]) -> Result<(f64, Vec<f64>)> {
        self.check_shapes()?;
        let d = self.dim();
        let dk = self.key_dim();
        let scale = (dk as f64).sqrt();

        struct Forward {
            q: Vec<f64>,
            keys: Matrix,
            values: Matrix,
            weights: Vec<f64>,
            fused: Vec<f64>,
        }
        let mut fwd = Vec::with_capacity(batch.len());
        for p in batch {
            if p.frames.cols() != d || p.text.len() != d {
                return Err(Error::shape(format!("attention expects dimension {d}")));
            }
            let q = self.w_q.vec_mul(p.text)?;
            let keys = p.frames.matmul(&self.w_k)?;
            let values = p.frames.matmul(&self.w_v)?;
            let att = crate::kernels::scaled_dot_attention(&q, &keys, &values)?;
            fwd.push(Forward { q, keys, values, weights: att.weights, fused: att.fused });
        }

        let fused = Matrix::from_rows(&fwd.iter().map(|f| f.fused.as_slice()).collect::<Vec<_>>())?;
        let text = text_matrix(batch)?;
        let lg = cl_loss_grad(&fused, &text, self.log_lambda)?;

        let mut d_wq = Matrix::zeros(d, dk);
        let mut d_wk = Matrix::zeros(d, dk);
        let mut d_wv = Matrix::zeros(d, d);
        for (i, (p, f)) in batch.iter().zip(&fwd).enumerate() {
            let g = lg.d_left.row(i);
            let g_fused = dot(g, &f.fused);
            let mut d_q = vec![0.0; dk];
            for (n, frame) in p.frames.iter_rows().enumerate() {
                let a = f.weights[n];
                // values: ∂L/∂V_n = α_n g
                for (r, &x) in frame.iter().enumerate() {
                    if x == 0.0 {
                        continue;
                    }
                    for (dv, &gc) in d_wv.row_mut(r).iter_mut().zip(g) {
                        *dv += x * a * gc;
                    }
                }
                // logits: ∂L/∂z_n = α_n (g·V_n − g·fused)
                let dz = a * (dot(g, f.values.row(n)) - g_fused) / scale;
                for (dq, &k) in d_q.iter_mut().zip(f.keys.row(n)) {
                    *dq += dz * k;
                }
                for (r, &x) in frame.iter().enumerate() {
                    if x == 0.0 {
                        continue;
                    }
                    for (dkv, &qv) in d_wk.row_mut(r).iter_mut().zip(&f.q) {
                        *dkv += x * dz * qv;
                    }
                }
            }
            for (r, &t) in p.text.iter().enumerate() {
                for (dqv, &dq) in d_wq.row_mut(r).iter_mut().zip(&d_q) {
                    *dqv += t * dq;
                }
            }
        }

        let mut grad = Vec::with_capacity(2 * d * dk + d * d + 1);
        grad.extend_from_slice(d_wq.as_slice());
        grad.extend_from_slice(d_wk.as_slice());
        grad.extend_from_slice(d_wv.as_slice());
        grad.push(lg.d_log_temperature);
        Ok((lg.loss, grad))
    }
}
