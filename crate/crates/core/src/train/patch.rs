//! Phase-aligned patch sampling: crop origins are restricted to rows that
//! are 0 mod 4 and columns 0 mod 2, so every crop carries the same absolute
//! pattern phase as the full frame.

use super::dataprep::LoadedSample;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// One aligned crop of the network input, mask and ground truth, all sharing
/// the same origin.
#[derive(Debug, Clone)]
pub struct PatchSet<T: Scalar> {
    pub e_norm: Tensor<T>,
    pub mask: Tensor<T>,
    pub gt_norm: Tensor<T>,
    pub origin: (usize, usize),
}

/// The legal crop origins for an image of the given extents.
pub fn aligned_origins(height: usize, width: usize, patch: usize) -> (Vec<usize>, Vec<usize>) {
    let rows = (0..=height.saturating_sub(patch)).step_by(4).collect();
    let cols = (0..=width.saturating_sub(patch)).step_by(2).collect();
    (rows, cols)
}

pub fn crop_spatial<T: Scalar>(
    t: &Tensor<T>,
    row0: usize,
    col0: usize,
    height: usize,
    width: usize,
) -> Tensor<T> {
    let [n, c, h, w] = t.shape();
    debug_assert!(row0 + height <= h && col0 + width <= w);
    let mut out = Tensor::zeros([n, c, height, width]);
    for b in 0..n {
        for ch in 0..c {
            for r in 0..height {
                let src = ((b * c + ch) * h + row0 + r) * w + col0;
                let dst = ((b * c + ch) * height + r) * width;
                out.data_mut()[dst..dst + width].copy_from_slice(&t.data()[src..src + width]);
            }
        }
    }
    out
}

/// Draw one aligned crop; the rng advances by exactly two draws (row index,
/// column index).
pub fn sample_patch<T: Scalar>(
    sample: &LoadedSample<T>,
    patch: usize,
    rng: &mut ChaCha8Rng,
) -> Result<PatchSet<T>> {
    if patch % 4 != 0 {
        return Err(Error::NotDivisible { what: "patch size", by: 4, got: patch });
    }
    let [_, _, h, w] = sample.e_norm.shape();
    if patch > h || patch > w {
        return Err(Error::InvalidArgument(format!(
            "patch {patch} exceeds image extents {h}x{w}"
        )));
    }
    let (rows, cols) = aligned_origins(h, w, patch);
    let row0 = rows[rng.random_range(0..rows.len())];
    let col0 = cols[rng.random_range(0..cols.len())];
    Ok(PatchSet {
        e_norm: crop_spatial(&sample.e_norm, row0, col0, patch, patch),
        mask: crop_spatial(&sample.mask, row0, col0, patch, patch),
        gt_norm: crop_spatial(&sample.gt_norm, row0, col0, patch, patch),
        origin: (row0, col0),
    })
}

/// Stack single-sample crop tensors along the batch axis.
pub fn stack_batch<T: Scalar>(items: &[&Tensor<T>]) -> Tensor<T> {
    let [_, c, h, w] = items[0].shape();
    let mut out = Tensor::zeros([items.len(), c, h, w]);
    let stride = c * h * w;
    for (i, item) in items.iter().enumerate() {
        out.data_mut()[i * stride..(i + 1) * stride].copy_from_slice(item.data());
    }
    out
}
