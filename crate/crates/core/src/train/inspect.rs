//! Introspection of a trained guidance model: the learned fusion scalars and
//! the first principal component of the final guidance feature maps.

use crate::error::{Error, Result};
use crate::network::Model;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct InspectReport {
    pub betas: Vec<f64>,
    /// First-principal-component projection of the final guidance features,
    /// min-max normalized to [0, 1], row-major H x W.
    pub heatmap: Vec<f64>,
    pub width: usize,
    pub height: usize,
    pub power_iterations: usize,
}

/// Dominant eigenvector of a symmetric matrix by power iteration.
/// Deterministic start (uniform vector), convergence when successive
/// sign-aligned iterates differ by less than `tol`, at most `max_iter`
/// sweeps. The returned vector has its largest-magnitude entry positive.
pub fn power_iteration_pc1(cov: &[f64], n: usize, tol: f64, max_iter: usize) -> (Vec<f64>, f64, usize) {
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut iters = 0;
    let mut eigval = 0.0;
    for it in 0..max_iter {
        iters = it + 1;
        let mut next = vec![0.0; n];
        for r in 0..n {
            let mut acc = 0.0;
            for c in 0..n {
                acc += cov[r * n + c] * v[c];
            }
            next[r] = acc;
        }
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break; // zero matrix: any vector is fine
        }
        for x in &mut next {
            *x /= norm;
        }
        // align sign with the previous iterate before measuring the step
        let dot: f64 = next.iter().zip(&v).map(|(a, b)| a * b).sum();
        if dot < 0.0 {
            for x in &mut next {
                *x = -*x;
            }
        }
        let delta: f64 = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        eigval = norm;
        v = next;
        if delta < tol {
            break;
        }
    }
    // deterministic sign: largest-magnitude component positive
    let (mut max_idx, mut max_abs) = (0, 0.0);
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > max_abs {
            max_abs = x.abs();
            max_idx = i;
        }
    }
    if v[max_idx] < 0.0 {
        for x in &mut v {
            *x = -*x;
        }
    }
    (v, eigval, iters)
}

/// Channel covariance (pixels as observations) of a [1, C, H, W] stack.
fn channel_covariance<T: Scalar>(feat: &Tensor<T>) -> (Vec<f64>, Vec<f64>) {
    let [_, c, h, w] = feat.shape();
    let npix = h * w;
    let mut means = vec![0.0f64; c];
    for ch in 0..c {
        for i in 0..npix {
            means[ch] += feat.data()[ch * npix + i].to_f64();
        }
        means[ch] /= npix as f64;
    }
    let mut cov = vec![0.0f64; c * c];
    for a in 0..c {
        for b in a..c {
            let mut acc = 0.0;
            for i in 0..npix {
                acc += (feat.data()[a * npix + i].to_f64() - means[a])
                    * (feat.data()[b * npix + i].to_f64() - means[b]);
            }
            acc /= npix as f64;
            cov[a * c + b] = acc;
            cov[b * c + a] = acc;
        }
    }
    (cov, means)
}

pub const PCA_TOL: f64 = 1e-8;
pub const PCA_MAX_ITER: usize = 1000;

/// Run one sample through a guidance model and reduce the 64 final guidance
/// feature maps to one principal-component heat map.
pub fn inspect_checkpoint<T: Scalar>(
    model: &Model<T>,
    e_norm: &Tensor<T>,
    mask: &Tensor<T>,
) -> Result<InspectReport> {
    let betas = model.extract_betas()?;
    let (_, egb) = model.forward(e_norm, Some(mask))?;
    let feat = egb.ok_or_else(|| {
        Error::InvalidConfig("checkpoint has no guidance branch to inspect".into())
    })?;
    let [_, c, h, w] = feat.shape();
    let (cov, means) = channel_covariance(&feat);
    let (pc1, _, iters) = power_iteration_pc1(&cov, c, PCA_TOL, PCA_MAX_ITER);

    let npix = h * w;
    let mut map = vec![0.0f64; npix];
    for ch in 0..c {
        let weight = pc1[ch];
        for i in 0..npix {
            map[i] += weight * (feat.data()[ch * npix + i].to_f64() - means[ch]);
        }
    }
    let (lo, hi) = map.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h2), &v| {
        (l.min(v), h2.max(v))
    });
    let span = (hi - lo).max(1e-300);
    for v in &mut map {
        *v = (*v - lo) / span;
    }
    Ok(InspectReport { betas, heatmap: map, width: w, height: h, power_iterations: iters })
}
