//! Numerical kernels shared by every selection policy.
//!
//! All arithmetic is done in `f64`. Embeddings are plain slices; a frame set is
//! a row-major [`Matrix`] with one embedding per row.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::shape(format!("row {i} has length {}, expected {cols}", r.len())));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Copies the listed rows, in the given order, into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: indices.len(), cols: self.cols, data }
    }

    /// `self · w` where `self` is `n × d` and `w` is `d × p`.
    pub fn matmul(&self, w: &Matrix) -> Result<Matrix> {
        if self.cols != w.rows {
            return Err(Error::shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, w.rows, w.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, w.cols);
        for i in 0..self.rows {
            let a = self.row(i);
            let o = &mut out.data[i * w.cols..(i + 1) * w.cols];
            for (r, &av) in a.iter().enumerate() {
                if av == 0.0 {
                    continue;
                }
                for (ov, &wv) in o.iter_mut().zip(w.row(r)) {
                    *ov += av * wv;
                }
            }
        }
        Ok(out)
    }

    /// `vᵀ · self` for a vector of length `rows`; returns a vector of length `cols`.
    pub fn vec_mul(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::shape(format!(
                "vector of length {} against {}x{} matrix",
                v.len(),
                self.rows,
                self.cols
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (r, &x) in v.iter().enumerate() {
            for (o, &w) in out.iter_mut().zip(self.row(r)) {
                *o += x * w;
            }
        }
        Ok(out)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Returns `a / ‖a‖`.
pub fn normalized(a: &[f64]) -> Result<Vec<f64>> {
    let n = norm(a);
    if n == 0.0 || !n.is_finite() {
        return Err(Error::domain("cannot normalize a zero or non-finite vector"));
    }
    Ok(a.iter().map(|v| v / n).collect())
}

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape(format!("dimension mismatch: {} vs {}", a.len(), b.len())));
    }
    let na2 = dot(a, a);
    let nb2 = dot(b, b);
    if na2 == 0.0 || nb2 == 0.0 {
        return Err(Error::domain("cosine similarity of a zero-norm vector"));
    }
    // sqrt(s * s) == s exactly, so identical inputs give exactly 1
    Ok((dot(a, b) / (na2 * nb2).sqrt()).clamp(-1.0, 1.0))
}

/// Cosine distance `1 - cos(a, b)`, in `[0, 2]`.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    Ok(1.0 - cosine_similarity(a, b)?)
}

/// `exp(x_i / t) / Σ exp(x_j / t)`, computed with max subtraction.
pub fn softmax(logits: &[f64], temperature: f64) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::shape("softmax of an empty vector"));
    }
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::domain(format!("softmax temperature must be positive, got {temperature}")));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&x| ((x - max) / temperature).exp()).collect();
    let total: f64 = out.iter().sum();
    for v in &mut out {
        *v /= total;
    }
    Ok(out)
}

/// `log Σ exp(x_i)` with max subtraction.
pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Mean of the selected frame embeddings.
pub fn mean_pool(selected: &Matrix) -> Result<Vec<f64>> {
    if selected.rows() == 0 {
        return Err(Error::shape("mean pooling over zero frames"));
    }
    let mut out = vec![0.0; selected.cols()];
    for row in selected.iter_rows() {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
    let k = selected.rows() as f64;
    for o in &mut out {
        *o /= k;
    }
    Ok(out)
}

/// Weighted average of the selected frames with `softmax(raw_scores)` weights,
/// the softmax taken over the selected frames only.
pub fn weighted_pool(selected: &Matrix, raw_scores: &[f64]) -> Result<Vec<f64>> {
    if selected.rows() != raw_scores.len() {
        return Err(Error::shape(format!(
            "{} frames but {} scores",
            selected.rows(),
            raw_scores.len()
        )));
    }
    if raw_scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::domain("non-finite frame score"));
    }
    let weights = softmax(raw_scores, 1.0)?;
    Ok(weighted_sum(selected, &weights))
}

/// `Σ w_i · row_i` without any normalization of `w`.
pub(crate) fn weighted_sum(rows: &Matrix, weights: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; rows.cols()];
    for (row, &w) in rows.iter_rows().zip(weights) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += w * v;
        }
    }
    out
}

/// Output of [`scaled_dot_attention`].
#[derive(Debug, Clone, PartialEq)]
pub struct Attention {
    /// `q·k_n / √d'` before the softmax.
    pub logits: Vec<f64>,
    /// Softmax of `logits`, one weight per key row.
    pub weights: Vec<f64>,
    /// `weights · values`.
    pub fused: Vec<f64>,
}

/// Single-query scaled dot-product attention.
///
/// `keys` is `N × d'`; `values` is `N × e` (any value width).
pub fn scaled_dot_attention(query: &[f64], keys: &Matrix, values: &Matrix) -> Result<Attention> {
    if query.is_empty() {
        return Err(Error::shape("attention query has zero dimension"));
    }
    if keys.rows() == 0 {
        return Err(Error::shape("attention over zero keys"));
    }
    if keys.cols() != query.len() {
        return Err(Error::shape(format!(
            "query dim {} does not match key dim {}",
            query.len(),
            keys.cols()
        )));
    }
    if values.rows() != keys.rows() {
        return Err(Error::shape(format!(
            "{} keys but {} values",
            keys.rows(),
            values.rows()
        )));
    }
    let scale = (query.len() as f64).sqrt();
    let logits: Vec<f64> = keys.iter_rows().map(|k| dot(query, k) / scale).collect();
    let weights = softmax(&logits, 1.0)?;
    let fused = weighted_sum(values, &weights);
    Ok(Attention { logits, weights, fused })
}

/// Indices of the `k` largest scores, ties toward the lower index, in
/// descending-score order.
pub fn top_k_desc(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    order
}
