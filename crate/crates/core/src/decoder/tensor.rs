use serde::{Deserialize, Serialize};

/// Dense row-major `f64` tensor of rank 1 or 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![value; shape.iter().product()],
        }
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        self.shape.get(1).copied().unwrap_or(1)
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[r * c..(r + 1) * c]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `out += x · self`, where `x` has `rows()` entries and `out` has `cols()`.
    pub fn accumulate_vec_mat(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.rows());
        debug_assert_eq!(out.len(), self.cols());
        for (xr, row) in x.iter().zip(self.data.chunks_exact(self.cols())) {
            if *xr == 0.0 {
                continue;
            }
            for (o, w) in out.iter_mut().zip(row) {
                *o += xr * w;
            }
        }
    }

    /// `x · self` for a row vector `x`.
    pub fn vec_mat(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols()];
        self.accumulate_vec_mat(x, &mut out);
        out
    }

    /// `out += self · dy`, the input gradient of `y = x · self`.
    pub fn accumulate_mat_vec(&self, dy: &[f64], out: &mut [f64]) {
        debug_assert_eq!(dy.len(), self.cols());
        debug_assert_eq!(out.len(), self.rows());
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols())) {
            *o += row.iter().zip(dy).map(|(w, d)| w * d).sum::<f64>();
        }
    }

    /// `self += x ⊗ dy`, the weight gradient of `y = x · W`.
    pub fn accumulate_outer(&mut self, x: &[f64], dy: &[f64]) {
        debug_assert_eq!(x.len(), self.rows());
        debug_assert_eq!(dy.len(), self.cols());
        let cols = self.cols();
        for (xr, row) in x.iter().zip(self.data.chunks_exact_mut(cols)) {
            if *xr == 0.0 {
                continue;
            }
            for (w, d) in row.iter_mut().zip(dy) {
                *w += xr * d;
            }
        }
    }
}

pub(crate) fn add_assign(acc: &mut [f64], x: &[f64]) {
    for (a, b) in acc.iter_mut().zip(x) {
        *a += b;
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable log-softmax.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    logits.iter().map(|v| v - lse).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vec_mat_and_transpose_agree() {
        let w = Tensor {
            shape: vec![2, 3],
            data: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        };
        assert_eq!(w.vec_mat(&[1.0, -1.0]), vec![-3.0, -3.0, -3.0]);
        let mut dx = vec![0.0; 2];
        w.accumulate_mat_vec(&[1.0, 0.0, 1.0], &mut dx);
        assert_eq!(dx, vec![4.0, 10.0]);
        let mut g = Tensor::zeros(&[2, 3]);
        g.accumulate_outer(&[2.0, 1.0], &[1.0, 0.0, -1.0]);
        assert_eq!(g.data, vec![2.0, 0.0, -2.0, 1.0, 0.0, -1.0]);
    }

    #[test]
    fn softmax_basics() {
        let p = softmax(&[0.0, 3f64.ln()]);
        assert!((p[0] - 0.25).abs() < 1e-15 && (p[1] - 0.75).abs() < 1e-15);
        let lp = log_softmax(&[1000.0, 1000.0]);
        assert!((lp[0] + 2f64.ln()).abs() < 1e-12);
        assert!((sigmoid(-800.0)).abs() < 1e-300 && sigmoid(800.0) == 1.0);
    }
}
