//! Irradiance-domain images and the Bayer radiance conversion
//! ln(e) = ln(f^-1(z / (2^N - 1))) - ln(dt).

use super::Crf;
use crate::dataio::BayerFrame;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadianceDomain {
    Linear,
    Log,
}

impl RadianceDomain {
    pub fn name(self) -> &'static str {
        match self {
            RadianceDomain::Linear => "linear",
            RadianceDomain::Log => "log",
        }
    }
}

/// Floating-point irradiance image, 1-channel (Bayer) or 3-channel (full),
/// with channel-interleaved row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct RadianceImage {
    data: Vec<f64>,
    width: usize,
    height: usize,
    channels: usize,
    domain: RadianceDomain,
    /// Maximum representable linear irradiance, 1 / tau_short. Recorded so
    /// linear irradiance is exactly recoverable from the normalized domain.
    scale: f64,
    tau_short: f64,
    tau_long: f64,
}

impl RadianceImage {
    pub fn new(
        data: Vec<f64>,
        width: usize,
        height: usize,
        channels: usize,
        domain: RadianceDomain,
        tau_short: f64,
        tau_long: f64,
    ) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidArgument(format!(
                "radiance images have 1 or 3 channels, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::ShapeMismatch {
                op: "RadianceImage::new",
                detail: format!(
                    "{}x{}x{} needs {} values, got {}",
                    height,
                    width,
                    channels,
                    width * height * channels,
                    data.len()
                ),
            });
        }
        if !(tau_short > 0.0 && tau_long >= tau_short) {
            return Err(Error::InvalidArgument(format!(
                "exposure reference needs 0 < tau_short <= tau_long, got {tau_short}, {tau_long}"
            )));
        }
        match domain {
            RadianceDomain::Linear => {
                if data.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::Numeric(
                        "linear radiance must be finite and non-negative".into(),
                    ));
                }
            }
            RadianceDomain::Log => {
                if data.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Numeric("log radiance must be finite".into()));
                }
            }
        }
        Ok(RadianceImage {
            data,
            width,
            height,
            channels,
            domain,
            scale: 1.0 / tau_short,
            tau_short,
            tau_long,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn channels(&self) -> usize {
        self.channels
    }
    pub fn domain(&self) -> RadianceDomain {
        self.domain
    }
    pub fn scale(&self) -> f64 {
        self.scale
    }
    pub fn tau_short(&self) -> f64 {
        self.tau_short
    }
    pub fn tau_long(&self) -> f64 {
        self.tau_long
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.data[(row * self.width + col) * self.channels + ch]
    }

    /// Convert to the linear domain (no-op when already linear).
    pub fn to_linear(&self) -> RadianceImage {
        match self.domain {
            RadianceDomain::Linear => self.clone(),
            RadianceDomain::Log => RadianceImage {
                data: self.data.iter().map(|v| v.exp()).collect(),
                domain: RadianceDomain::Linear,
                ..self.clone()
            },
        }
    }
}

/// Convert a raw capture into the log-domain Bayer radiance image. Zero code
/// values are floored at half a quantization step before the logarithm.
pub fn to_radiance(frame: &BayerFrame, crf: &Crf) -> Result<RadianceImage> {
    crf.validate()?;
    let (h, w) = (frame.height(), frame.width());
    let zmax = frame.max_value();
    let mut data = Vec::with_capacity(h * w);
    for row in 0..h {
        let dt = frame.exposure().row_time(row);
        let ln_dt = dt.ln();
        for col in 0..w {
            let color = frame.phase().color_at(row, col);
            let zn = (frame.at(row, col) as f64).max(0.5) / zmax;
            data.push(crf.inverse(color.channel(), zn).ln() - ln_dt);
        }
    }
    RadianceImage::new(
        data,
        w,
        h,
        1,
        RadianceDomain::Log,
        frame.exposure().tau_short(),
        frame.exposure().tau_long(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormKind {
    /// Linear irradiance divided by e_max; the inverse multiplies back.
    #[default]
    Linear,
    /// Affine map of [ln e_min, ln e_max] onto [0, 1].
    Log,
}

/// Normalization constants for the network domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormParams {
    pub kind: NormKind,
    /// Maximum representable irradiance, 1 / tau_short.
    pub e_max: f64,
    /// Lower anchor for the log mapping (unused by the linear kind).
    pub e_min: f64,
}

impl NormParams {
    pub fn linear_for(tau_short: f64) -> NormParams {
        NormParams { kind: NormKind::Linear, e_max: 1.0 / tau_short, e_min: 0.0 }
    }

    /// Log normalization anchored at the half-LSB floor of the long exposure.
    pub fn log_for(tau_short: f64, tau_long: f64, bits: u32) -> NormParams {
        let zmax = ((1u32 << bits) - 1) as f64;
        NormParams {
            kind: NormKind::Log,
            e_max: 1.0 / tau_short,
            e_min: 0.5 / zmax / tau_long,
        }
    }
}

/// Map a radiance image into the network input domain as a [1, C, H, W]
/// tensor (planar channel layout).
pub fn normalize_for_network<T: Scalar>(
    image: &RadianceImage,
    params: &NormParams,
) -> Result<Tensor<T>> {
    let (h, w, c) = (image.height(), image.width(), image.channels());
    let mut out = Tensor::zeros([1, c, h, w]);
    let linear = |v: f64| match image.domain() {
        RadianceDomain::Linear => v,
        RadianceDomain::Log => v.exp(),
    };
    for ch in 0..c {
        for row in 0..h {
            for col in 0..w {
                let e = linear(image.at(row, col, ch));
                let n = match params.kind {
                    NormKind::Linear => e / params.e_max,
                    NormKind::Log => {
                        let v = e.max(params.e_min);
                        (v.ln() - params.e_min.ln()) / (params.e_max.ln() - params.e_min.ln())
                    }
                };
                *out.at_mut(0, ch, row, col) = T::from_f64(n);
            }
        }
    }
    Ok(out)
}

/// Inverse of [`normalize_for_network`]: recover a linear-domain radiance
/// image from a [1, C, H, W] network tensor.
pub fn denormalize<T: Scalar>(
    tensor: &Tensor<T>,
    params: &NormParams,
    tau_short: f64,
    tau_long: f64,
) -> Result<RadianceImage> {
    let [n, c, h, w] = tensor.shape();
    if n != 1 {
        return Err(Error::InvalidArgument(format!(
            "denormalize expects batch 1, got {n}"
        )));
    }
    let mut data = vec![0.0; c * h * w];
    for ch in 0..c {
        for row in 0..h {
            for col in 0..w {
                let v = tensor.at(0, ch, row, col).to_f64();
                let e = match params.kind {
                    NormKind::Linear => (v * params.e_max).max(0.0),
                    NormKind::Log => {
                        (v * (params.e_max.ln() - params.e_min.ln()) + params.e_min.ln()).exp()
                    }
                };
                data[(row * w + col) * c + ch] = e;
            }
        }
    }
    RadianceImage::new(data, w, h, c, RadianceDomain::Linear, tau_short, tau_long)
}
