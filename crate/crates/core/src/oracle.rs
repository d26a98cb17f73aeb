//! Slow, literal reference implementations used to cross-check the optimized
//! kernels. Everything here is written as plain nested loops, mirrors the
//! defining equations directly and shares no code with the paths it checks.
//! All oracles are f64, the reference dtype.

use crate::error::Result;
use crate::tensor::Tensor;

/// Direct six-loop convolution with zero padding.
pub fn conv2d_naive(
    input: &Tensor<f64>,
    weight: &Tensor<f64>,
    bias: Option<&[f64]>,
    stride: (usize, usize),
    padding: (usize, usize),
) -> Result<Tensor<f64>> {
    let [n, c_in, h, w] = input.shape();
    let [c_out, _, kh, kw] = weight.shape();
    let out_shape = crate::conv::conv2d_out_shape(input.shape(), weight.shape(), stride, padding)?;
    let [_, _, oh, ow] = out_shape;
    let mut out = Tensor::zeros(out_shape);
    for b in 0..n {
        for co in 0..c_out {
            for row in 0..oh {
                for col in 0..ow {
                    let mut acc = 0.0;
                    for ci in 0..c_in {
                        for r in 0..kh {
                            for s in 0..kw {
                                let ih = (row * stride.0 + r) as isize - padding.0 as isize;
                                let iw = (col * stride.1 + s) as isize - padding.1 as isize;
                                if ih >= 0 && ih < h as isize && iw >= 0 && iw < w as isize {
                                    acc += weight.at(co, ci, r, s)
                                        * input.at(b, ci, ih as usize, iw as usize);
                                }
                            }
                        }
                    }
                    if let Some(bs) = bias {
                        acc += bs[co];
                    }
                    *out.at_mut(b, co, row, col) = acc;
                }
            }
        }
    }
    Ok(out)
}

/// Pixel shuffle by its index law, one element at a time.
pub fn pixel_shuffle_naive(input: &Tensor<f64>, factor: usize) -> Tensor<f64> {
    let [n, c, h, w] = input.shape();
    let oc = c / (factor * factor);
    let mut out = Tensor::zeros([n, oc, h * factor, w * factor]);
    for b in 0..n {
        for co in 0..oc {
            for row in 0..h * factor {
                for col in 0..w * factor {
                    let (a, d) = (row % factor, col % factor);
                    let ci = co * factor * factor + a * factor + d;
                    *out.at_mut(b, co, row, col) = input.at(b, ci, row / factor, col / factor);
                }
            }
        }
    }
    out
}

/// Spatially varying convolution evaluated as the eight per-cell equations:
/// the image is tiled into 4x2 cells anchored at (k, v) with k stepping by 4
/// and v by 2; the cell offsets (0,0),(0,1),(1,0),(1,1),(2,0),(2,1),(3,0),
/// (3,1) select kernel banks 1..8 in order. Zero padding of (K-1)/2.
pub fn svc_forward_naive(
    input: &Tensor<f64>,
    banks: &[Tensor<f64>],
    biases: &[Vec<f64>],
) -> Tensor<f64> {
    let [n, c_in, h, w] = input.shape();
    let [c_out, _, k, _] = banks[0].shape();
    let half = (k as isize - 1) / 2;
    let mut out = Tensor::zeros([n, c_out, h, w]);
    let offsets = [(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1), (3, 0), (3, 1)];
    for b in 0..n {
        for cell_k in (0..h).step_by(4) {
            for cell_v in (0..w).step_by(2) {
                for (bank_idx, (dk, dv)) in offsets.iter().enumerate() {
                    let (row, col) = (cell_k + dk, cell_v + dv);
                    let bank = &banks[bank_idx % banks.len()];
                    for co in 0..c_out {
                        let mut acc = 0.0;
                        for ci in 0..c_in {
                            for i in -half..=half {
                                for j in -half..=half {
                                    let ih = row as isize + i;
                                    let iw = col as isize + j;
                                    if ih >= 0 && ih < h as isize && iw >= 0 && iw < w as isize {
                                        acc += bank.at(
                                            co,
                                            ci,
                                            (i + half) as usize,
                                            (j + half) as usize,
                                        ) * input.at(b, ci, ih as usize, iw as usize);
                                    }
                                }
                            }
                        }
                        acc += biases[bank_idx % biases.len()][co];
                        *out.at_mut(b, co, row, col) = acc;
                    }
                }
            }
        }
    }
    out
}

/// Scalar Debevec-style merge of one dual-exposure observation of a pixel.
///
/// Triangle weight w(z) = min(z, zmax - z) on the raw code value. When both
/// weights vanish, falls back to the observation farther from its failure
/// rail (short: under-exposure at 0, long: over-exposure at zmax), tie going
/// to the short exposure. Zero codes are floored at half a quantization step
/// before the logarithm.
pub fn merge_scalar(
    z_short: u16,
    z_long: u16,
    tau_short: f64,
    tau_long: f64,
    crf_inverse: &dyn Fn(f64) -> f64,
    bits: u32,
) -> f64 {
    let zmax = ((1u32 << bits) - 1) as f64;
    let weight = |z: f64| z.min(zmax - z);
    let ln_rad = |z: f64, tau: f64| {
        let zn = z.max(0.5) / zmax;
        crf_inverse(zn).ln() - tau.ln()
    };
    let (zs, zl) = (z_short as f64, z_long as f64);
    let (ws, wl) = (weight(zs), weight(zl));
    if ws + wl > 0.0 {
        let mut num = 0.0;
        if ws > 0.0 {
            num += ws * ln_rad(zs, tau_short);
        }
        if wl > 0.0 {
            num += wl * ln_rad(zl, tau_long);
        }
        (num / (ws + wl)).exp()
    } else {
        let dist_short = zs; // distance above the under-exposure rail
        let dist_long = zmax - zl; // distance below the over-exposure rail
        if dist_short >= dist_long {
            ln_rad(zs, tau_short).exp()
        } else {
            ln_rad(zl, tau_long).exp()
        }
    }
}

/// Mean absolute difference over all elements, one scalar at a time.
pub fn l1_loss_naive(pred: &Tensor<f64>, gt: &Tensor<f64>) -> f64 {
    let mut sum = 0.0;
    for (p, g) in pred.data().iter().zip(gt.data()) {
        sum += (p - g).abs();
    }
    sum / pred.numel() as f64
}

/// Mean over pixels of (1 - cosine similarity of the RGB triples), with the
/// same epsilon-regularized denominator as the production loss.
pub fn color_loss_naive(pred: &Tensor<f64>, gt: &Tensor<f64>, eps: f64) -> f64 {
    let [n, c, h, w] = pred.shape();
    assert_eq!(c, 3);
    let mut sum = 0.0;
    for b in 0..n {
        for row in 0..h {
            for col in 0..w {
                let mut dot = 0.0;
                let mut na = 0.0;
                let mut nb = 0.0;
                for ch in 0..c {
                    let a = pred.at(b, ch, row, col);
                    let g = gt.at(b, ch, row, col);
                    dot += a * g;
                    na += a * a;
                    nb += g * g;
                }
                sum += 1.0 - dot / (na.sqrt() * nb.sqrt() + eps);
            }
        }
    }
    sum / (n * h * w) as f64
}
