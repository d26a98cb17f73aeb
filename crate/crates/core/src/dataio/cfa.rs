//! Bayer color filter array phases.

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfaColor {
    R,
    G,
    B,
}

impl CfaColor {
    /// Channel index into an RGB triple.
    pub fn channel(self) -> usize {
        match self {
            CfaColor::R => 0,
            CfaColor::G => 1,
            CfaColor::B => 2,
        }
    }
}

/// The four 2x2 phases of the Bayer pattern, named by their top-left tile
/// read row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CfaPhase {
    #[default]
    Rggb,
    Grbg,
    Gbrg,
    Bggr,
}

impl CfaPhase {
    fn tile(self) -> [[CfaColor; 2]; 2] {
        use CfaColor::*;
        match self {
            CfaPhase::Rggb => [[R, G], [G, B]],
            CfaPhase::Grbg => [[G, R], [B, G]],
            CfaPhase::Gbrg => [[G, B], [R, G]],
            CfaPhase::Bggr => [[B, G], [G, R]],
        }
    }

    /// Color at 0-based (row, col).
    #[inline]
    pub fn color_at(self, row: usize, col: usize) -> CfaColor {
        self.tile()[row % 2][col % 2]
    }
}

impl std::fmt::Display for CfaPhase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CfaPhase::Rggb => "rggb",
            CfaPhase::Grbg => "grbg",
            CfaPhase::Gbrg => "gbrg",
            CfaPhase::Bggr => "bggr",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for CfaPhase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "rggb" => Ok(CfaPhase::Rggb),
            "grbg" => Ok(CfaPhase::Grbg),
            "gbrg" => Ok(CfaPhase::Gbrg),
            "bggr" => Ok(CfaPhase::Bggr),
            other => Err(Error::InvalidConfig(format!("unknown CFA phase '{other}'"))),
        }
    }
}

/// Color of the sensor element at 1-based (i, j) for the given phase.
pub fn cfa_color(i: usize, j: usize, phase: CfaPhase) -> CfaColor {
    debug_assert!(i >= 1 && j >= 1, "cfa_color takes 1-based indices");
    phase.color_at(i - 1, j - 1)
}
