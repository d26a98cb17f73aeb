//! Exposure-guidance mask over the raw code values.
//!
//! The binary mask zeroes over-exposed long-row pixels and under-exposed
//! short-row pixels; everything else is 1. The two soft variants (Debevec
//! triangle, Robertson Gaussian) weight by distance from mid-scale and apply
//! regardless of the row's exposure class. The mask reads raw digital codes,
//! so it is invariant to the CRF.

use crate::dataio::BayerFrame;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaskWeighting {
    #[default]
    Binary,
    DebevecTriangle,
    RobertsonGaussian,
}

impl std::fmt::Display for MaskWeighting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            MaskWeighting::Binary => "binary",
            MaskWeighting::DebevecTriangle => "triangle",
            MaskWeighting::RobertsonGaussian => "gaussian",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for MaskWeighting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(MaskWeighting::Binary),
            "triangle" => Ok(MaskWeighting::DebevecTriangle),
            "gaussian" => Ok(MaskWeighting::RobertsonGaussian),
            other => Err(Error::InvalidConfig(format!("unknown mask weighting '{other}'"))),
        }
    }
}

/// Default mask threshold: 3.92% of full scale.
pub const ALPHA_DEFAULT: f64 = 0.0392;

#[derive(Debug, Clone, PartialEq)]
pub struct ExposureMask {
    data: Vec<f64>,
    width: usize,
    height: usize,
    alpha: f64,
    weighting: MaskWeighting,
}

impl ExposureMask {
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn weighting(&self) -> MaskWeighting {
        self.weighting
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// As a [1, 1, H, W] tensor for the network input.
    pub fn to_tensor<T: Scalar>(&self) -> Tensor<T> {
        Tensor::from_vec(
            [1, 1, self.height, self.width],
            self.data.iter().map(|&v| T::from_f64(v)).collect(),
        )
        .expect("mask dims are consistent")
    }
}

/// Build the exposure-guidance mask of a frame for threshold fraction
/// `alpha` in (0, 0.5).
pub fn exposure_mask(
    frame: &BayerFrame,
    alpha: f64,
    weighting: MaskWeighting,
) -> Result<ExposureMask> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::AlphaOutOfRange { alpha });
    }
    let (h, w) = (frame.height(), frame.width());
    let zmax = frame.max_value();
    let mid = zmax / 2.0;
    let lo = alpha * zmax;
    let hi = (1.0 - alpha) * zmax;
    let mut data = Vec::with_capacity(h * w);
    for row in 0..h {
        let short = frame.exposure().is_short_row(row);
        for col in 0..w {
            let z = frame.at(row, col) as f64;
            let m = match weighting {
                MaskWeighting::Binary => {
                    let ill = (!short && z >= hi) || (short && z <= lo);
                    if ill {
                        0.0
                    } else {
                        1.0
                    }
                }
                MaskWeighting::DebevecTriangle => z.min(zmax - z) / mid,
                MaskWeighting::RobertsonGaussian => (-4.0 * (z - mid) * (z - mid) / (mid * mid)).exp(),
            };
            data.push(m);
        }
    }
    Ok(ExposureMask { data, width: w, height: h, alpha, weighting })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{CfaPhase, ExposureMap};

    fn frame_rows(short_val: u16, long_val: u16) -> BayerFrame {
        let mut values = vec![0u16; 8];
        for row in 0..4usize {
            for col in 0..2 {
                values[row * 2 + col] = if row < 2 { short_val } else { long_val };
            }
        }
        BayerFrame::new(values, 2, 4, 8, CfaPhase::Rggb, ExposureMap::new(4, 0.01, 0.16).unwrap())
            .unwrap()
    }

    #[test]
    fn binary_boundaries_at_default_alpha() {
        // alpha * 255 = 9.996: short z=9 masked, z=10 kept;
        // (1 - alpha) * 255 = 245.004: long z=246 masked, z=245 kept.
        let m = exposure_mask(&frame_rows(9, 246), ALPHA_DEFAULT, MaskWeighting::Binary).unwrap();
        assert_eq!(m.at(0, 0), 0.0);
        assert_eq!(m.at(2, 0), 0.0);
        let m = exposure_mask(&frame_rows(10, 245), ALPHA_DEFAULT, MaskWeighting::Binary).unwrap();
        assert_eq!(m.at(0, 0), 1.0);
        assert_eq!(m.at(2, 0), 1.0);
    }

    #[test]
    fn binary_only_masks_the_matching_exposure_class() {
        // a dark value on a long row and a bright value on a short row are kept
        let m = exposure_mask(&frame_rows(246, 9), ALPHA_DEFAULT, MaskWeighting::Binary).unwrap();
        for row in 0..4 {
            for col in 0..2 {
                assert_eq!(m.at(row, col), 1.0, "({row},{col})");
            }
        }
    }

    #[test]
    fn tiny_alpha_keeps_everything_off_the_rails() {
        let m = exposure_mask(&frame_rows(1, 254), 1e-9, MaskWeighting::Binary).unwrap();
        assert!(m.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn triangle_endpoints() {
        let m = exposure_mask(&frame_rows(0, 255), 0.1, MaskWeighting::DebevecTriangle).unwrap();
        assert_eq!(m.at(0, 0), 0.0);
        assert_eq!(m.at(2, 0), 0.0);
        // mid-scale on an odd full scale: use 127.5 is not a code; check via formula
        let mid = exposure_mask(&frame_rows(128, 127), 0.1, MaskWeighting::DebevecTriangle).unwrap();
        assert!((mid.at(0, 0) - (255.0 - 128.0) / 127.5).abs() < 1e-15);
        assert!((mid.at(2, 0) - 127.0 / 127.5).abs() < 1e-15);
    }

    #[test]
    fn gaussian_is_one_at_mid_and_small_at_rails() {
        let m = exposure_mask(&frame_rows(0, 255), 0.1, MaskWeighting::RobertsonGaussian).unwrap();
        assert!((m.at(0, 0) - (-4.0f64).exp()).abs() < 1e-15);
        assert!((m.at(2, 0) - (-4.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn alpha_bounds_are_enforced() {
        let f = frame_rows(10, 10);
        assert!(exposure_mask(&f, 0.0, MaskWeighting::Binary).is_err());
        assert!(exposure_mask(&f, 0.5, MaskWeighting::Binary).is_err());
    }
}
