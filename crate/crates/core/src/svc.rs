//! Spatially varying convolution over dual-exposure Bayer lattices.
//!
//! A dual-time Bayer image has eight distinct local patterns: four Bayer
//! color phases times two exposure rows. The SVC keeps one kernel bank per
//! pattern and selects the bank from the output position, so every bank only
//! ever sees one data pattern. The degraded SVC-D variant ties the banks of
//! matching color phases across the two exposure classes, leaving four banks.
//!
//! Also home to the first-layer variants used as baselines (plain, strided +
//! sub-pixel upsampling, packed RGGB), all of which map an aligned H x W
//! mosaic to H x W x `channels` features.

use crate::conv::{conv2d, pack_rggb, pixel_shuffle};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// 1-based kernel-bank index for 0-based output position (k, v):
/// `2 * (k mod 4) + (v mod 2) + 1`, in 1..=8. Period 4 rows and 2 columns.
#[inline]
pub fn pattern_index(k: usize, v: usize) -> usize {
    2 * (k % 4) + (v % 2) + 1
}

/// The eight kernel banks of an SVC plus one bias vector per bank.
#[derive(Debug, Clone, PartialEq)]
pub struct SvcWeights<T: Scalar> {
    banks: Vec<Tensor<T>>,
    biases: Vec<Vec<T>>,
    tied: bool,
}

impl<T: Scalar> SvcWeights<T> {
    pub fn new(banks: Vec<Tensor<T>>, biases: Vec<Vec<T>>) -> Result<Self> {
        if banks.len() != 8 || biases.len() != 8 {
            return Err(Error::InvalidArgument(format!(
                "SVC needs exactly 8 banks and 8 bias vectors, got {} and {}",
                banks.len(),
                biases.len()
            )));
        }
        validate_banks(&banks, &biases)?;
        Ok(SvcWeights { banks, biases, tied: false })
    }

    pub fn banks(&self) -> &[Tensor<T>] {
        &self.banks
    }

    pub fn biases(&self) -> &[Vec<T>] {
        &self.biases
    }

    pub fn is_tied(&self) -> bool {
        self.tied
    }

    pub fn kernel_size(&self) -> usize {
        self.banks[0].shape()[2]
    }

    /// SVC-D tie: overwrite banks 5..8 (and their biases) with banks 1..4.
    /// Idempotent; the returned weights select banks by color phase only.
    pub fn tie_svc_d(&self) -> SvcWeights<T> {
        let mut banks = self.banks.clone();
        let mut biases = self.biases.clone();
        for p in 0..4 {
            banks[p + 4] = banks[p].clone();
            biases[p + 4] = biases[p].clone();
        }
        SvcWeights { banks, biases, tied: true }
    }
}

fn validate_banks<T: Scalar>(banks: &[Tensor<T>], biases: &[Vec<T>]) -> Result<()> {
    let shape = banks[0].shape();
    let [c_out, _, kh, kw] = shape;
    if kh != kw || kh % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "SVC kernels must be square with odd extent, got {kh}x{kw}"
        )));
    }
    for (i, b) in banks.iter().enumerate() {
        if b.shape() != shape {
            return Err(Error::ShapeMismatch {
                op: "svc",
                detail: format!("bank {} has shape {:?}, bank 0 has {:?}", i + 1, b.shape(), shape),
            });
        }
    }
    for (i, b) in biases.iter().enumerate() {
        if b.len() != c_out {
            return Err(Error::ShapeMismatch {
                op: "svc",
                detail: format!("bias {} has length {}, expected {c_out}", i + 1, b.len()),
            });
        }
    }
    Ok(())
}

fn check_svc_input<T: Scalar>(input: &Tensor<T>, banks: &[&Tensor<T>]) -> Result<()> {
    let [_, c_in, h, w] = input.shape();
    if banks[0].shape()[1] != c_in {
        return Err(Error::ShapeMismatch {
            op: "svc",
            detail: format!("input has {c_in} channels, banks expect {}", banks[0].shape()[1]),
        });
    }
    if h % 4 != 0 {
        return Err(Error::NotDivisible { what: "svc input height", by: 4, got: h });
    }
    if w % 2 != 0 {
        return Err(Error::NotDivisible { what: "svc input width", by: 2, got: w });
    }
    Ok(())
}

/// Forward SVC on a [`SvcWeights`] set (untaped convenience; the training
/// path records the same kernel on the tape).
pub fn svc_forward<T: Scalar>(input: &Tensor<T>, weights: &SvcWeights<T>) -> Result<Tensor<T>> {
    let banks: Vec<&Tensor<T>> = weights.banks.iter().collect();
    let biases: Vec<&[T]> = weights.biases.iter().map(|b| b.as_slice()).collect();
    svc_forward_kernel(input, &banks, &biases)
}

/// Core SVC forward. `banks.len()` selects the variant: 8 banks index by
/// (row mod 4, col mod 2) per the full SVC; 4 banks index by
/// (row mod 2, col mod 2), the tied SVC-D parameterization.
pub(crate) fn svc_forward_kernel<T: Scalar>(
    input: &Tensor<T>,
    banks: &[&Tensor<T>],
    biases: &[&[T]],
) -> Result<Tensor<T>> {
    if banks.len() != 8 && banks.len() != 4 {
        return Err(Error::InvalidArgument(format!(
            "SVC kernel expects 4 or 8 banks, got {}",
            banks.len()
        )));
    }
    let shape = banks[0].shape();
    for b in banks {
        if b.shape() != shape {
            return Err(Error::ShapeMismatch {
                op: "svc",
                detail: "banks are not shape-congruent".into(),
            });
        }
    }
    let bias_vecs: Vec<Vec<T>> = biases.iter().map(|b| b.to_vec()).collect();
    validate_banks(
        &banks.iter().map(|&b| b.clone()).collect::<Vec<_>>(),
        &bias_vecs,
    )?;
    check_svc_input(input, banks)?;

    let [n, c_in, h, w] = input.shape();
    let [c_out, _, k, _] = shape;
    let half = (k - 1) / 2;
    let row_mod = if banks.len() == 8 { 4 } else { 2 };
    let x = input.data();
    let mut out = Tensor::zeros([n, c_out, h, w]);
    let plane = h * w;

    let body = |idx: usize, out_plane: &mut [T]| {
        let b = idx / c_out;
        let co = idx % c_out;
        let x_b = &x[b * c_in * h * w..(b + 1) * c_in * h * w];
        for row in 0..h {
            for col in 0..w {
                let p = (row % row_mod) * 2 + (col % 2);
                let bank = banks[p].data();
                let mut acc = T::zero();
                for ci in 0..c_in {
                    let x_c = &x_b[ci * h * w..(ci + 1) * h * w];
                    for r in 0..k {
                        let ih = (row + r) as isize - half as isize;
                        if ih < 0 || ih >= h as isize {
                            continue;
                        }
                        let base = ((co * c_in + ci) * k + r) * k;
                        for s in 0..k {
                            let iw = (col + s) as isize - half as isize;
                            if iw < 0 || iw >= w as isize {
                                continue;
                            }
                            acc += bank[base + s] * x_c[(ih as usize) * w + iw as usize];
                        }
                    }
                }
                out_plane[row * w + col] = acc + biases[p][co];
            }
        }
    };

    if n * c_out * plane * c_in * k * k >= 1 << 16 {
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

/// Gradients of the SVC kernel: each bank (and its bias) accumulates only
/// over the output positions its pattern owns.
pub(crate) fn svc_backward_kernel<T: Scalar>(
    input: &Tensor<T>,
    banks: &[&Tensor<T>],
    dout: &Tensor<T>,
) -> Result<(Tensor<T>, Vec<Tensor<T>>, Vec<Vec<T>>)> {
    let [n, c_in, h, w] = input.shape();
    let [c_out, _, k, _] = banks[0].shape();
    let half = (k - 1) / 2;
    let row_mod = if banks.len() == 8 { 4 } else { 2 };
    let x = input.data();
    let dy = dout.data();

    let mut dx = Tensor::zeros(input.shape());
    let dx_body = |b: usize, dx_b: &mut [T]| {
        for co in 0..c_out {
            let dy_c = &dy[(b * c_out + co) * h * w..(b * c_out + co + 1) * h * w];
            for row in 0..h {
                for col in 0..w {
                    let p = (row % row_mod) * 2 + (col % 2);
                    let bank = banks[p].data();
                    let g = dy_c[row * w + col];
                    for ci in 0..c_in {
                        for r in 0..k {
                            let ih = (row + r) as isize - half as isize;
                            if ih < 0 || ih >= h as isize {
                                continue;
                            }
                            let base = ((co * c_in + ci) * k + r) * k;
                            for s in 0..k {
                                let iw = (col + s) as isize - half as isize;
                                if iw < 0 || iw >= w as isize {
                                    continue;
                                }
                                dx_b[(ci * h + ih as usize) * w + iw as usize] +=
                                    bank[base + s] * g;
                            }
                        }
                    }
                }
            }
        }
    };
    let bplane = c_in * h * w;
    if n > 1 && n * c_out * h * w * c_in * k * k >= 1 << 16 {
        dx.data_mut()
            .par_chunks_mut(bplane)
            .enumerate()
            .for_each(|(b, p)| dx_body(b, p));
    } else {
        for (b, p) in dx.data_mut().chunks_mut(bplane).enumerate() {
            dx_body(b, p);
        }
    }

    let grads: Vec<(Tensor<T>, Vec<T>)> = (0..banks.len())
        .into_par_iter()
        .map(|p| {
            let mut dbank = Tensor::zeros(banks[0].shape());
            let mut dbias = vec![T::zero(); c_out];
            let (r0, c0) = (p / 2, p % 2);
            for b in 0..n {
                let x_b = &x[b * c_in * h * w..(b + 1) * c_in * h * w];
                for co in 0..c_out {
                    let dy_c = &dy[(b * c_out + co) * h * w..(b * c_out + co + 1) * h * w];
                    for row in (r0..h).step_by(row_mod) {
                        for col in (c0..w).step_by(2) {
                            let g = dy_c[row * w + col];
                            dbias[co] += g;
                            for ci in 0..c_in {
                                for r in 0..k {
                                    let ih = (row + r) as isize - half as isize;
                                    if ih < 0 || ih >= h as isize {
                                        continue;
                                    }
                                    for s in 0..k {
                                        let iw = (col + s) as isize - half as isize;
                                        if iw < 0 || iw >= w as isize {
                                            continue;
                                        }
                                        *dbank.at_mut(co, ci, r, s) +=
                                            g * x_b[(ci * h + ih as usize) * w + iw as usize];
                                    }
                                }
                            }
                        }
                    }
                }
            }
            (dbank, dbias)
        })
        .collect();

    let (dbanks, dbiases) = grads.into_iter().unzip();
    Ok((dx, dbanks, dbiases))
}

// ── First-layer variants ────────────────────────────────────────────

/// The first-layer alternatives for mosaicked input. All kinds map an
/// aligned H x W mosaic to H x W x `channels` features.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FirstLayerKind {
    /// Plain 3x3 stride-1 convolution.
    OptBase,
    /// 2x2 stride-2 convolution to 4x channels, then sub-pixel x2.
    Opt22,
    /// 4x4 stride-2 pad-1 convolution to 4x channels, then sub-pixel x2.
    Opt42,
    /// 4x4 stride-4 convolution to 16x channels, then sub-pixel x4.
    Opt44,
    /// Pack to quarter-resolution RGGB planes, 3x3 convolution to 4x
    /// channels, then sub-pixel x2.
    OptRggb,
    /// Four-bank 5x5 SVC tied across exposure classes.
    SvcD,
    /// Eight-bank SVC with the given odd kernel extent.
    Svc(usize),
}

impl FirstLayerKind {
    /// Parameter count (weights + biases) for `c_in` input channels and
    /// `channels` output features.
    pub fn param_count(self, c_in: usize, channels: usize) -> usize {
        match self {
            FirstLayerKind::OptBase => channels * c_in * 9 + channels,
            FirstLayerKind::Opt22 => 4 * channels * c_in * 4 + 4 * channels,
            FirstLayerKind::Opt42 => 4 * channels * c_in * 16 + 4 * channels,
            FirstLayerKind::Opt44 => 16 * channels * c_in * 16 + 16 * channels,
            FirstLayerKind::OptRggb => 4 * channels * 4 * c_in * 9 + 4 * channels,
            FirstLayerKind::SvcD => 4 * (channels * c_in * 25 + channels),
            FirstLayerKind::Svc(k) => 8 * (channels * c_in * k * k + channels),
        }
    }

    /// Multiply-accumulates plus bias adds needed per input pixel.
    pub fn flops_per_pixel(self, c_in: usize, channels: usize) -> u64 {
        let (c_in, ch) = (c_in as u64, channels as u64);
        match self {
            FirstLayerKind::OptBase => ch * (c_in * 9 + 1),
            // strided variants produce (HW / s^2) outputs of s^2 * ch channels
            FirstLayerKind::Opt22 => 4 * ch * (c_in * 4 + 1) / 4,
            FirstLayerKind::Opt42 => 4 * ch * (c_in * 16 + 1) / 4,
            FirstLayerKind::Opt44 => 16 * ch * (c_in * 16 + 1) / 16,
            FirstLayerKind::OptRggb => 4 * ch * (4 * c_in * 9 + 1) / 4,
            FirstLayerKind::SvcD => ch * (c_in * 25 + 1),
            FirstLayerKind::Svc(k) => ch * (c_in * (k * k) as u64 + 1),
        }
    }

    pub fn validate(self) -> Result<()> {
        if let FirstLayerKind::Svc(k) = self {
            if k % 2 == 0 || k == 0 {
                return Err(Error::InvalidArgument(format!(
                    "svc kernel extent must be odd, got {k}"
                )));
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for FirstLayerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FirstLayerKind::OptBase => write!(f, "opt_base"),
            FirstLayerKind::Opt22 => write!(f, "opt_2_2"),
            FirstLayerKind::Opt42 => write!(f, "opt_4_2"),
            FirstLayerKind::Opt44 => write!(f, "opt_4_4"),
            FirstLayerKind::OptRggb => write!(f, "opt_rggb"),
            FirstLayerKind::SvcD => write!(f, "svc_d"),
            FirstLayerKind::Svc(k) => write!(f, "svc{k}"),
        }
    }
}

impl std::str::FromStr for FirstLayerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "opt_base" => Ok(FirstLayerKind::OptBase),
            "opt_2_2" => Ok(FirstLayerKind::Opt22),
            "opt_4_2" => Ok(FirstLayerKind::Opt42),
            "opt_4_4" => Ok(FirstLayerKind::Opt44),
            "opt_rggb" => Ok(FirstLayerKind::OptRggb),
            "svc_d" => Ok(FirstLayerKind::SvcD),
            other => {
                if let Some(k) = other.strip_prefix("svc").and_then(|k| k.parse::<usize>().ok()) {
                    let kind = FirstLayerKind::Svc(k);
                    kind.validate()?;
                    Ok(kind)
                } else {
                    Err(Error::InvalidConfig(format!("unknown first-layer kind '{other}'")))
                }
            }
        }
    }
}

/// Geometry of the convolution behind a plain (non-SVC) first-layer kind.
/// Returns (kernel, stride, padding, channel multiplier, shuffle factor, packs input).
pub(crate) fn plain_head_geometry(kind: FirstLayerKind) -> Option<(usize, (usize, usize), (usize, usize), usize, usize, bool)> {
    match kind {
        FirstLayerKind::OptBase => Some((3, (1, 1), (1, 1), 1, 1, false)),
        FirstLayerKind::Opt22 => Some((2, (2, 2), (0, 0), 4, 2, false)),
        FirstLayerKind::Opt42 => Some((4, (2, 2), (1, 1), 4, 2, false)),
        FirstLayerKind::Opt44 => Some((4, (4, 4), (0, 0), 16, 4, false)),
        FirstLayerKind::OptRggb => Some((3, (1, 1), (1, 1), 4, 2, true)),
        FirstLayerKind::SvcD | FirstLayerKind::Svc(_) => None,
    }
}

/// A built first layer: either a plain convolution (possibly packed and/or
/// followed by a sub-pixel shuffle) or an SVC bank set.
#[derive(Debug, Clone)]
pub enum FirstLayer<T: Scalar> {
    Plain {
        kind: FirstLayerKind,
        weight: Tensor<T>,
        bias: Tensor<T>,
        stride: (usize, usize),
        padding: (usize, usize),
        shuffle: usize,
        pack: bool,
    },
    Svc {
        kind: FirstLayerKind,
        banks: Vec<Tensor<T>>,
        /// Bias vectors stored as [1, C, 1, 1] tensors so they can be taped.
        biases: Vec<Tensor<T>>,
    },
}

impl<T: Scalar> FirstLayer<T> {
    /// Initialize with uniform weights in +-sqrt(1 / (C_in * K * K)) and zero
    /// biases, drawing from `rng` in a fixed order.
    pub fn init(kind: FirstLayerKind, c_in: usize, channels: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        kind.validate()?;
        match plain_head_geometry(kind) {
            Some((k, stride, padding, mult, shuffle, pack)) => {
                let conv_cin = if pack { 4 * c_in } else { c_in };
                let c_out = mult * channels;
                let bound = (1.0 / (conv_cin * k * k) as f64).sqrt();
                Ok(FirstLayer::Plain {
                    kind,
                    weight: Tensor::rand_uniform([c_out, conv_cin, k, k], bound, rng),
                    bias: Tensor::zeros([1, c_out, 1, 1]),
                    stride,
                    padding,
                    shuffle,
                    pack,
                })
            }
            None => {
                let (n_banks, k) = match kind {
                    FirstLayerKind::SvcD => (4, 5),
                    FirstLayerKind::Svc(k) => (8, k),
                    _ => unreachable!(),
                };
                let bound = (1.0 / (c_in * k * k) as f64).sqrt();
                let banks = (0..n_banks)
                    .map(|_| Tensor::rand_uniform([channels, c_in, k, k], bound, rng))
                    .collect();
                let biases = (0..n_banks).map(|_| Tensor::zeros([1, channels, 1, 1])).collect();
                Ok(FirstLayer::Svc { kind, banks, biases })
            }
        }
    }

    pub fn kind(&self) -> FirstLayerKind {
        match self {
            FirstLayer::Plain { kind, .. } | FirstLayer::Svc { kind, .. } => *kind,
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            FirstLayer::Plain { weight, bias, .. } => weight.numel() + bias.numel(),
            FirstLayer::Svc { banks, biases, .. } => {
                banks.iter().map(Tensor::numel).sum::<usize>()
                    + biases.iter().map(Tensor::numel).sum::<usize>()
            }
        }
    }

    /// Untaped forward, used by inference and by tests.
    pub fn apply(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let [_, _, h, w] = input.shape();
        if h % 4 != 0 {
            return Err(Error::NotDivisible { what: "first-layer input height", by: 4, got: h });
        }
        if w % 2 != 0 {
            return Err(Error::NotDivisible { what: "first-layer input width", by: 2, got: w });
        }
        match self {
            FirstLayer::Plain { weight, bias, stride, padding, shuffle, pack, .. } => {
                let packed;
                let x = if *pack {
                    packed = pack_rggb(input)?;
                    &packed
                } else {
                    input
                };
                let y = conv2d(x, weight, Some(bias.data()), *stride, *padding)?;
                if *shuffle > 1 {
                    pixel_shuffle(&y, *shuffle)
                } else {
                    Ok(y)
                }
            }
            FirstLayer::Svc { banks, biases, .. } => {
                let bank_refs: Vec<&Tensor<T>> = banks.iter().collect();
                let bias_refs: Vec<&[T]> = biases.iter().map(|b| b.data()).collect();
                svc_forward_kernel(input, &bank_refs, &bias_refs)
            }
        }
    }

    /// Named parameter tensors in a fixed order.
    pub fn named_params(&self) -> Vec<(String, &Tensor<T>)> {
        match self {
            FirstLayer::Plain { weight, bias, .. } => {
                vec![("weight".into(), weight), ("bias".into(), bias)]
            }
            FirstLayer::Svc { banks, biases, .. } => banks
                .iter()
                .enumerate()
                .map(|(i, b)| (format!("bank{}.weight", i + 1), b))
                .chain(
                    biases
                        .iter()
                        .enumerate()
                        .map(|(i, b)| (format!("bank{}.bias", i + 1), b)),
                )
                .collect(),
        }
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, &mut Tensor<T>)> {
        match self {
            FirstLayer::Plain { weight, bias, .. } => {
                vec![("weight".into(), weight), ("bias".into(), bias)]
            }
            FirstLayer::Svc { banks, biases, .. } => banks
                .iter_mut()
                .enumerate()
                .map(|(i, b)| (format!("bank{}.weight", i + 1), b))
                .chain(
                    biases
                        .iter_mut()
                        .enumerate()
                        .map(|(i, b)| (format!("bank{}.bias", i + 1), b)),
                )
                .collect(),
        }
    }
}
