//! Row-wise dual-time exposure assignment.
//!
//! With 1-based row index i, rows with i mod 4 in {1, 2} get the short time
//! and rows with i mod 4 in {3, 0} the long time. In the 0-based indexing
//! used everywhere else in this crate that reads: rows {0, 1} of every
//! 4-row period are short, rows {2, 3} are long.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ExposureMap {
    height: usize,
    tau_short: f64,
    tau_long: f64,
}

impl ExposureMap {
    /// `height` must be divisible by 4 (one full pattern period) and
    /// 0 < tau_short <= tau_long. Equal times give the degenerate
    /// single-exposure map.
    pub fn new(height: usize, tau_short: f64, tau_long: f64) -> Result<Self> {
        if height % 4 != 0 {
            return Err(Error::NotDivisible { what: "exposure map height", by: 4, got: height });
        }
        if !(tau_short > 0.0) || !(tau_long > 0.0) || tau_short > tau_long {
            return Err(Error::InvalidArgument(format!(
                "exposure times need 0 < tau_short <= tau_long, got {tau_short} and {tau_long}"
            )));
        }
        Ok(ExposureMap { height, tau_short, tau_long })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn tau_short(&self) -> f64 {
        self.tau_short
    }

    pub fn tau_long(&self) -> f64 {
        self.tau_long
    }

    pub fn ratio(&self) -> f64 {
        self.tau_long / self.tau_short
    }

    /// Is 0-based row `row` a short-exposure row?
    #[inline]
    pub fn is_short_row(&self, row: usize) -> bool {
        row % 4 < 2
    }

    /// Exposure time of 0-based row `row`.
    #[inline]
    pub fn row_time(&self, row: usize) -> f64 {
        if self.is_short_row(row) {
            self.tau_short
        } else {
            self.tau_long
        }
    }

    /// Exposure time by the 1-based row convention of the defining layout.
    #[inline]
    pub fn row_time_1based(&self, row: usize) -> f64 {
        debug_assert!(row >= 1);
        self.row_time(row - 1)
    }
}
