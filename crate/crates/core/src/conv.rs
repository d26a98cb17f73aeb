//! Convolution, pixel-shuffle and Bayer-packing kernels (forward + backward).
//!
//! Accumulation order is fixed per output element: input channel outer, then
//! kernel rows, then kernel columns, bias last. Every code path (plain loop,
//! vectorized stride-1 path, parallel partitioning) reproduces that exact
//! order, so results are bit-identical regardless of thread count.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape4, Tensor};
use rayon::prelude::*;

/// Below this many multiply-accumulates the kernels stay single-threaded;
/// thresholding only skips thread spawn overhead, never changes results.
const PAR_MIN_MACS: usize = 1 << 16;

pub fn conv2d_out_shape(
    input: Shape4,
    weight: Shape4,
    stride: (usize, usize),
    padding: (usize, usize),
) -> Result<Shape4> {
    let [n, c_in, h, w] = input;
    let [c_out, wc_in, kh, kw] = weight;
    if stride.0 < 1 || stride.1 < 1 {
        return Err(Error::InvalidArgument(format!(
            "conv2d stride components must be >= 1, got {stride:?}"
        )));
    }
    if c_in != wc_in {
        return Err(Error::ShapeMismatch {
            op: "conv2d",
            detail: format!("input has {c_in} channels, weight expects {wc_in}"),
        });
    }
    if kh == 0 || kw == 0 {
        return Err(Error::ShapeMismatch {
            op: "conv2d",
            detail: "kernel extent is zero".into(),
        });
    }
    let oh = (h + 2 * padding.0).checked_sub(kh).map(|v| v / stride.0 + 1);
    let ow = (w + 2 * padding.1).checked_sub(kw).map(|v| v / stride.1 + 1);
    match (oh, ow) {
        (Some(oh), Some(ow)) if oh > 0 && ow > 0 => Ok([n, c_out, oh, ow]),
        _ => Err(Error::EmptyOutput {
            op: "conv2d",
            detail: format!("input {h}x{w}, kernel {kh}x{kw}, stride {stride:?}, pad {padding:?}"),
        }),
    }
}

/// 2D cross-correlation with zero padding: `out[b,co,oh,ow] =
/// sum_{ci,kh,kw} w[co,ci,kh,kw] * x[b,ci,oh*sh+kh-ph,ow*sw+kw-pw] + bias[co]`.
pub fn conv2d<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    bias: Option<&[T]>,
    stride: (usize, usize),
    padding: (usize, usize),
) -> Result<Tensor<T>> {
    let out_shape = conv2d_out_shape(input.shape(), weight.shape(), stride, padding)?;
    let [n, c_in, h, w] = input.shape();
    let [c_out, _, kh, kw] = weight.shape();
    let [_, _, oh, ow] = out_shape;
    if let Some(b) = bias {
        if b.len() != c_out {
            return Err(Error::ShapeMismatch {
                op: "conv2d",
                detail: format!("bias length {} != {c_out} output channels", b.len()),
            });
        }
    }

    let mut out = Tensor::zeros(out_shape);
    let x = input.data();
    let wts = weight.data();
    let plane = oh * ow;
    let macs = n * c_out * plane * c_in * kh * kw;

    let body = |idx: usize, out_plane: &mut [T]| {
        let b = idx / c_out;
        let co = idx % c_out;
        let x_b = &x[b * c_in * h * w..(b + 1) * c_in * h * w];
        if stride == (1, 1) {
            // Shift-and-accumulate: one vectorizable pass per kernel tap.
            for ci in 0..c_in {
                let x_c = &x_b[ci * h * w..(ci + 1) * h * w];
                for r in 0..kh {
                    for s in 0..kw {
                        let wv = wts[((co * c_in + ci) * kh + r) * kw + s];
                        let dr = r as isize - padding.0 as isize;
                        let dc = s as isize - padding.1 as isize;
                        let oh_lo = (-dr).max(0) as usize;
                        let oh_hi = ((h as isize - dr).min(oh as isize)).max(0) as usize;
                        let ow_lo = (-dc).max(0) as usize;
                        let ow_hi = ((w as isize - dc).min(ow as isize)).max(0) as usize;
                        for row in oh_lo..oh_hi {
                            let ih = (row as isize + dr) as usize;
                            let src = &x_c[ih * w + (ow_lo as isize + dc) as usize
                                ..ih * w + (ow_hi as isize + dc) as usize];
                            let dst = &mut out_plane[row * ow + ow_lo..row * ow + ow_hi];
                            for (d, &s_) in dst.iter_mut().zip(src) {
                                *d += wv * s_;
                            }
                        }
                    }
                }
            }
        } else {
            for row in 0..oh {
                for col in 0..ow {
                    let mut acc = T::zero();
                    for ci in 0..c_in {
                        for r in 0..kh {
                            let ih = (row * stride.0 + r) as isize - padding.0 as isize;
                            if ih < 0 || ih >= h as isize {
                                continue;
                            }
                            for s in 0..kw {
                                let iw = (col * stride.1 + s) as isize - padding.1 as isize;
                                if iw < 0 || iw >= w as isize {
                                    continue;
                                }
                                acc += wts[((co * c_in + ci) * kh + r) * kw + s]
                                    * x_b[(ci * h + ih as usize) * w + iw as usize];
                            }
                        }
                    }
                    out_plane[row * ow + col] = acc;
                }
            }
        }
        if let Some(bs) = bias {
            let bv = bs[co];
            for v in out_plane.iter_mut() {
                *v += bv;
            }
        }
    };

    if macs >= PAR_MIN_MACS {
        out.data_mut()
            .par_chunks_mut(plane)
            .enumerate()
            .for_each(|(idx, p)| body(idx, p));
    } else {
        for (idx, p) in out.data_mut().chunks_mut(plane).enumerate() {
            body(idx, p);
        }
    }
    Ok(out)
}

/// Gradients of [`conv2d`] w.r.t. input, weight and bias.
pub fn conv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    dout: &Tensor<T>,
    stride: (usize, usize),
    padding: (usize, usize),
) -> Result<(Tensor<T>, Tensor<T>, Vec<T>)> {
    let [n, c_in, h, w] = input.shape();
    let [c_out, _, kh, kw] = weight.shape();
    let [_, _, oh, ow] = dout.shape();

    let x = input.data();
    let wts = weight.data();
    let dy = dout.data();

    // d/d input
    let mut dx = Tensor::zeros(input.shape());
    let in_plane = h * w;
    let macs = n * c_out * oh * ow * c_in * kh * kw;
    let dx_body = |idx: usize, dx_plane: &mut [T]| {
        let b = idx / c_in;
        let ci = idx % c_in;
        if stride == (1, 1) {
            for co in 0..c_out {
                let dy_c = &dy[(b * c_out + co) * oh * ow..(b * c_out + co + 1) * oh * ow];
                for r in 0..kh {
                    for s in 0..kw {
                        let wv = wts[((co * c_in + ci) * kh + r) * kw + s];
                        let dr = r as isize - padding.0 as isize;
                        let dc = s as isize - padding.1 as isize;
                        // ih = ohr + dr, so valid ih covers [dr, oh+dr) clipped to [0, h)
                        let ih_lo = dr.max(0) as usize;
                        let ih_hi = ((oh as isize + dr).min(h as isize)).max(0) as usize;
                        let iw_lo = dc.max(0) as usize;
                        let iw_hi = ((ow as isize + dc).min(w as isize)).max(0) as usize;
                        for ih in ih_lo..ih_hi {
                            let ohr = (ih as isize - dr) as usize;
                            let src = &dy_c[ohr * ow + (iw_lo as isize - dc) as usize
                                ..ohr * ow + (iw_hi as isize - dc) as usize];
                            let dst = &mut dx_plane[ih * w + iw_lo..ih * w + iw_hi];
                            for (d, &s_) in dst.iter_mut().zip(src) {
                                *d += wv * s_;
                            }
                        }
                    }
                }
            }
        } else {
            for co in 0..c_out {
                let dy_c = &dy[(b * c_out + co) * oh * ow..(b * c_out + co + 1) * oh * ow];
                for row in 0..oh {
                    for col in 0..ow {
                        let g = dy_c[row * ow + col];
                        for r in 0..kh {
                            let ih = (row * stride.0 + r) as isize - padding.0 as isize;
                            if ih < 0 || ih >= h as isize {
                                continue;
                            }
                            for s in 0..kw {
                                let iw = (col * stride.1 + s) as isize - padding.1 as isize;
                                if iw < 0 || iw >= w as isize {
                                    continue;
                                }
                                dx_plane[(ih as usize) * w + iw as usize] +=
                                    wts[((co * c_in + ci) * kh + r) * kw + s] * g;
                            }
                        }
                    }
                }
            }
        }
    };
    if macs >= PAR_MIN_MACS {
        dx.data_mut()
            .par_chunks_mut(in_plane)
            .enumerate()
            .for_each(|(idx, p)| dx_body(idx, p));
    } else {
        for (idx, p) in dx.data_mut().chunks_mut(in_plane).enumerate() {
            dx_body(idx, p);
        }
    }

    // d/d weight and d/d bias, partitioned by output channel
    let mut dw = Tensor::zeros(weight.shape());
    let mut db = vec![T::zero(); c_out];
    let wslice = c_in * kh * kw;
    let dw_body = |co: usize, dw_c: &mut [T], db_c: &mut T| {
        for b in 0..n {
            let dy_c = &dy[(b * c_out + co) * oh * ow..(b * c_out + co + 1) * oh * ow];
            let x_b = &x[b * c_in * h * w..(b + 1) * c_in * h * w];
            for ci in 0..c_in {
                let x_c = &x_b[ci * h * w..(ci + 1) * h * w];
                for r in 0..kh {
                    for s in 0..kw {
                        let mut acc = T::zero();
                        if stride == (1, 1) {
                            let dr = r as isize - padding.0 as isize;
                            let dc = s as isize - padding.1 as isize;
                            let oh_lo = (-dr).max(0) as usize;
                            let oh_hi = ((h as isize - dr).min(oh as isize)).max(0) as usize;
                            let ow_lo = (-dc).max(0) as usize;
                            let ow_hi = ((w as isize - dc).min(ow as isize)).max(0) as usize;
                            for row in oh_lo..oh_hi {
                                let ih = (row as isize + dr) as usize;
                                let src = &x_c[ih * w + (ow_lo as isize + dc) as usize
                                    ..ih * w + (ow_hi as isize + dc) as usize];
                                let g = &dy_c[row * ow + ow_lo..row * ow + ow_hi];
                                for (&gv, &xv) in g.iter().zip(src) {
                                    acc += gv * xv;
                                }
                            }
                        } else {
                            for row in 0..oh {
                                let ih = (row * stride.0 + r) as isize - padding.0 as isize;
                                if ih < 0 || ih >= h as isize {
                                    continue;
                                }
                                for col in 0..ow {
                                    let iw = (col * stride.1 + s) as isize - padding.1 as isize;
                                    if iw < 0 || iw >= w as isize {
                                        continue;
                                    }
                                    acc += dy_c[row * ow + col]
                                        * x_c[(ih as usize) * w + iw as usize];
                                }
                            }
                        }
                        dw_c[(ci * kh + r) * kw + s] += acc;
                    }
                }
            }
            let mut bacc = T::zero();
            for &g in dy_c {
                bacc += g;
            }
            *db_c += bacc;
        }
    };
    if macs >= PAR_MIN_MACS {
        dw.data_mut()
            .par_chunks_mut(wslice)
            .zip(db.par_iter_mut())
            .enumerate()
            .for_each(|(co, (dw_c, db_c))| dw_body(co, dw_c, db_c));
    } else {
        for (co, (dw_c, db_c)) in dw
            .data_mut()
            .chunks_mut(wslice)
            .zip(db.iter_mut())
            .enumerate()
        {
            dw_body(co, dw_c, db_c);
        }
    }

    Ok((dx, dw, db))
}

/// Sub-pixel rearrangement: (B, C, H, W) -> (B, C/f^2, H*f, W*f) with
/// `out[b, c, h*f+a, w*f+d] = in[b, c*f^2 + a*f + d, h, w]`.
pub fn pixel_shuffle<T: Scalar>(input: &Tensor<T>, factor: usize) -> Result<Tensor<T>> {
    let [n, c, h, w] = input.shape();
    if factor == 0 {
        return Err(Error::InvalidArgument("pixel_shuffle factor must be >= 1".into()));
    }
    let f2 = factor * factor;
    if c % f2 != 0 {
        return Err(Error::NotDivisible {
            what: "pixel_shuffle channel count",
            by: f2,
            got: c,
        });
    }
    let oc = c / f2;
    let mut out = Tensor::zeros([n, oc, h * factor, w * factor]);
    let (ohw, ow) = (h * factor * w * factor, w * factor);
    for b in 0..n {
        for co in 0..oc {
            for a in 0..factor {
                for d in 0..factor {
                    let ci = co * f2 + a * factor + d;
                    for row in 0..h {
                        for col in 0..w {
                            out.data_mut()[(b * oc + co) * ohw
                                + (row * factor + a) * ow
                                + col * factor
                                + d] = input.data()[((b * c + ci) * h + row) * w + col];
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Inverse of [`pixel_shuffle`]; also its gradient permutation.
pub fn pixel_unshuffle<T: Scalar>(input: &Tensor<T>, factor: usize) -> Result<Tensor<T>> {
    let [n, c, h, w] = input.shape();
    if factor == 0 {
        return Err(Error::InvalidArgument("pixel_unshuffle factor must be >= 1".into()));
    }
    if h % factor != 0 || w % factor != 0 {
        return Err(Error::NotDivisible {
            what: "pixel_unshuffle spatial extent",
            by: factor,
            got: if h % factor != 0 { h } else { w },
        });
    }
    let (oh, ow) = (h / factor, w / factor);
    let oc = c * factor * factor;
    let mut out = Tensor::zeros([n, oc, oh, ow]);
    for b in 0..n {
        for ci in 0..c {
            for a in 0..factor {
                for d in 0..factor {
                    let co = ci * factor * factor + a * factor + d;
                    for row in 0..oh {
                        for col in 0..ow {
                            out.data_mut()[((b * oc + co) * oh + row) * ow + col] = input.data()
                                [((b * c + ci) * h + row * factor + a) * w + col * factor + d];
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Rearrange a Bayer mosaic into quarter-resolution phase planes:
/// (B, C, H, W) -> (B, 4C, H/2, W/2) with plane order for each input channel
/// being the (row, col) offsets (0,0), (0,1), (1,0), (1,1).
pub fn pack_rggb<T: Scalar>(input: &Tensor<T>) -> Result<Tensor<T>> {
    let [_, _, h, w] = input.shape();
    if h % 2 != 0 {
        return Err(Error::NotDivisible { what: "pack_rggb height", by: 2, got: h });
    }
    if w % 2 != 0 {
        return Err(Error::NotDivisible { what: "pack_rggb width", by: 2, got: w });
    }
    pixel_unshuffle(input, 2)
}

/// Inverse of [`pack_rggb`]; also its gradient permutation.
pub fn unpack_rggb<T: Scalar>(input: &Tensor<T>) -> Result<Tensor<T>> {
    let [_, c, _, _] = input.shape();
    if c % 4 != 0 {
        return Err(Error::NotDivisible { what: "unpack_rggb channels", by: 4, got: c });
    }
    pixel_shuffle(input, 2)
}
