//! Gaussian RBF kernel and cached Gram matrices.

use std::borrow::Cow;

/// Dense caching is used up to this many training points.
pub const DENSE_GRAM_LIMIT: usize = 2000;

/// `exp(-gamma * |x - z|^2)`.
#[inline]
pub fn rbf_kernel(x: [f64; 2], z: [f64; 2], gamma: f64) -> f64 {
    let d0 = x[0] - z[0];
    let d1 = x[1] - z[1];
    (-gamma * (d0 * d0 + d1 * d1)).exp()
}

/// Full `n x n` Gram matrix in row-major order. Exactly symmetric.
pub fn gram_matrix(points: &[[f64; 2]], gamma: f64) -> Vec<f64> {
    let n = points.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let v = rbf_kernel(points[i], points[j], gamma);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

/// Kernel rows for a fixed training set.
#[derive(Debug, Clone)]
pub(crate) enum KernelMatrix {
    Dense { n: usize, values: Vec<f64> },
    OnDemand { points: Vec<[f64; 2]>, gamma: f64 },
}

impl KernelMatrix {
    pub(crate) fn new(points: &[[f64; 2]], gamma: f64) -> Self {
        if points.len() <= DENSE_GRAM_LIMIT {
            KernelMatrix::Dense { n: points.len(), values: gram_matrix(points, gamma) }
        } else {
            KernelMatrix::OnDemand { points: points.to_vec(), gamma }
        }
    }

    pub(crate) fn row(&self, i: usize) -> Cow<'_, [f64]> {
        match self {
            KernelMatrix::Dense { n, values } => Cow::Borrowed(&values[i * n..(i + 1) * n]),
            KernelMatrix::OnDemand { points, gamma } => {
                Cow::Owned(points.iter().map(|&p| rbf_kernel(points[i], p, *gamma)).collect())
            }
        }
    }

    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            KernelMatrix::Dense { n, values } => values[i * n + j],
            KernelMatrix::OnDemand { points, gamma } => rbf_kernel(points[i], points[j], *gamma),
        }
    }
}
