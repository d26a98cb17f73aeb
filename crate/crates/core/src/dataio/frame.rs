//! The raw capture: an N-bit mosaicked grid with its exposure map and phase.

use super::{CfaPhase, ExposureMap};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BayerFrame {
    values: Vec<u16>,
    width: usize,
    height: usize,
    bits: u32,
    phase: CfaPhase,
    exposure: ExposureMap,
}

impl BayerFrame {
    /// `values` is row-major H x W. Height must be divisible by 4 and width
    /// by 2 (one full dual-time Bayer period); all values must fit in `bits`.
    pub fn new(
        values: Vec<u16>,
        width: usize,
        height: usize,
        bits: u32,
        phase: CfaPhase,
        exposure: ExposureMap,
    ) -> Result<Self> {
        if !(8..=16).contains(&bits) {
            return Err(Error::InvalidArgument(format!(
                "bit depth must be in 8..=16, got {bits}"
            )));
        }
        if height % 4 != 0 {
            return Err(Error::NotDivisible { what: "frame height", by: 4, got: height });
        }
        if width % 2 != 0 {
            return Err(Error::NotDivisible { what: "frame width", by: 2, got: width });
        }
        if values.len() != width * height {
            return Err(Error::ShapeMismatch {
                op: "BayerFrame::new",
                detail: format!("{}x{} frame needs {} values, got {}", height, width, width * height, values.len()),
            });
        }
        if exposure.height() != height {
            return Err(Error::ShapeMismatch {
                op: "BayerFrame::new",
                detail: format!(
                    "exposure map covers {} rows, frame has {height}",
                    exposure.height()
                ),
            });
        }
        let max = Self::max_value_for(bits);
        if let Some(&v) = values.iter().find(|&&v| v > max) {
            return Err(Error::InvalidArgument(format!(
                "value {v} exceeds {bits}-bit maximum {max}"
            )));
        }
        Ok(BayerFrame { values, width, height, bits, phase, exposure })
    }

    pub fn max_value_for(bits: u32) -> u16 {
        (((1u32 << bits) - 1) & 0xFFFF) as u16
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// 2^N - 1 as f64, the full-scale code value.
    pub fn max_value(&self) -> f64 {
        Self::max_value_for(self.bits) as f64
    }

    pub fn phase(&self) -> CfaPhase {
        self.phase
    }

    pub fn exposure(&self) -> &ExposureMap {
        &self.exposure
    }

    pub fn values(&self) -> &[u16] {
        &self.values
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> u16 {
        self.values[row * self.width + col]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(h: usize) -> ExposureMap {
        ExposureMap::new(h, 0.01, 0.16).unwrap()
    }

    #[test]
    fn rejects_out_of_range_values() {
        let r = BayerFrame::new(vec![300; 8], 2, 4, 8, CfaPhase::Rggb, map(4));
        assert!(r.is_err());
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(BayerFrame::new(vec![0; 12], 2, 6, 8, CfaPhase::Rggb, map(4)).is_err());
        assert!(BayerFrame::new(vec![0; 12], 3, 4, 8, CfaPhase::Rggb, map(4)).is_err());
    }

    #[test]
    fn accepts_full_scale() {
        let f = BayerFrame::new(vec![255; 8], 2, 4, 8, CfaPhase::Rggb, map(4)).unwrap();
        assert_eq!(f.max_value(), 255.0);
        assert_eq!(f.at(3, 1), 255);
    }
}
