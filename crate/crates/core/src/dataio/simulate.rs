//! Capture simulation: dual-time mosaicking of exposure pairs and the full
//! forward model from a radiance scene.

use super::{CfaPhase, ExposureMap, IntImage, SceneRadiance};
use super::frame::BayerFrame;
use crate::error::{Error, Result};
use crate::radiometry::{Crf, RadianceDomain, RadianceImage};

/// Two registered full-color captures of the same scene at the short and
/// long exposure times.
#[derive(Debug, Clone)]
pub struct ExposurePair {
    pub short: IntImage,
    pub long: IntImage,
    pub tau_short: f64,
    pub tau_long: f64,
}

impl ExposurePair {
    pub fn new(short: IntImage, long: IntImage, tau_short: f64, tau_long: f64) -> Result<Self> {
        if short.width() != long.width()
            || short.height() != long.height()
            || short.channels() != long.channels()
            || short.bits() != long.bits()
        {
            return Err(Error::ShapeMismatch {
                op: "ExposurePair::new",
                detail: format!(
                    "short {}x{}x{}@{} vs long {}x{}x{}@{}",
                    short.height(),
                    short.width(),
                    short.channels(),
                    short.bits(),
                    long.height(),
                    long.width(),
                    long.channels(),
                    long.bits()
                ),
            });
        }
        if short.channels() != 3 {
            return Err(Error::InvalidArgument("exposure pairs must be RGB".into()));
        }
        if !(tau_short > 0.0 && tau_long > tau_short) {
            return Err(Error::InvalidArgument(format!(
                "pair needs 0 < tau_short < tau_long, got {tau_short}, {tau_long}"
            )));
        }
        Ok(ExposurePair { short, long, tau_short, tau_long })
    }

    pub fn ratio(&self) -> f64 {
        self.tau_long / self.tau_short
    }
}

/// Mosaic a dual-time capture out of an exposure pair: short rows sample the
/// short image, long rows the long one, each pixel keeping only its CFA
/// channel. No interpolation happens here.
pub fn simulate_dual_time(pair: &ExposurePair, phase: CfaPhase) -> Result<BayerFrame> {
    let (w, h) = (pair.short.width(), pair.short.height());
    let exposure = ExposureMap::new(h, pair.tau_short, pair.tau_long)?;
    let mut values = Vec::with_capacity(w * h);
    for row in 0..h {
        let src = if exposure.is_short_row(row) { &pair.short } else { &pair.long };
        for col in 0..w {
            let ch = phase.color_at(row, col).channel();
            values.push(src.at(row, col, ch));
        }
    }
    BayerFrame::new(values, w, h, pair.short.bits(), phase, exposure)
}

/// Full forward model: z = round((2^N - 1) * crf(clamp(e * dt, 0, 1))),
/// mosaicked per the CFA. The returned ground truth is the scene itself.
pub fn simulate_from_scene(
    scene: &SceneRadiance,
    crf: &Crf,
    tau_short: f64,
    tau_long: f64,
    bits: u32,
    phase: CfaPhase,
) -> Result<(BayerFrame, RadianceImage)> {
    crf.validate()?;
    if scene.data().iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Numeric("scene radiance must be strictly positive".into()));
    }
    let (w, h) = (scene.width(), scene.height());
    let exposure = ExposureMap::new(h, tau_short, tau_long)?;
    let zmax = BayerFrame::max_value_for(bits) as f64;
    let mut values = Vec::with_capacity(w * h);
    for row in 0..h {
        let dt = exposure.row_time(row);
        for col in 0..w {
            let color = phase.color_at(row, col);
            let x = (scene.at(row, col, color.channel()) * dt).clamp(0.0, 1.0);
            values.push((crf.forward(color.channel(), x) * zmax).round() as u16);
        }
    }
    let frame = BayerFrame::new(values, w, h, bits, phase, exposure)?;
    let gt = RadianceImage::new(
        scene.data().to_vec(),
        w,
        h,
        3,
        RadianceDomain::Linear,
        tau_short,
        tau_long,
    )?;
    Ok((frame, gt))
}
