//! Seeded synthetic radiance scenes: smooth gradients, colored geometric
//! primitives and small bright highlights, exponentially mapped to span a
//! requested dynamic range.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Strictly positive H x W x 3 irradiance grid in relative units with
/// maximum 1.0.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneRadiance {
    data: Vec<f64>,
    width: usize,
    height: usize,
}

impl SceneRadiance {
    /// Wrap raw channel-interleaved H x W x 3 data; values must be strictly
    /// positive and finite.
    pub fn from_data(data: Vec<f64>, width: usize, height: usize) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::InvalidArgument(format!(
                "{}x{}x3 scene needs {} values, got {}",
                height,
                width,
                width * height * 3,
                data.len()
            )));
        }
        if data.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::Numeric("scene radiance must be strictly positive".into()));
        }
        Ok(SceneRadiance { data, width, height })
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.data[(row * self.width + col) * 3 + ch]
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.data {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }
}

/// Generate a deterministic scene whose max/min irradiance ratio is at least
/// 2^stops. Requires stops >= 1.
pub fn gen_synthetic_scene(seed: u64, height: usize, width: usize, stops: f64) -> Result<SceneRadiance> {
    if !(stops >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "dynamic range must be at least 1 stop, got {stops}"
        )));
    }
    if width == 0 || height == 0 {
        return Err(Error::InvalidArgument("scene extents must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Smooth base field per channel: tilted plane plus two low-frequency waves.
    let mut field = vec![0.0f64; width * height * 3];
    for ch in 0..3 {
        let tilt_x = rng.random::<f64>() - 0.5;
        let tilt_y = rng.random::<f64>() - 0.5;
        let (fx, fy) = (1.0 + rng.random::<f64>() * 2.0, 1.0 + rng.random::<f64>() * 2.0);
        let (px, py) = (rng.random::<f64>() * 6.28, rng.random::<f64>() * 6.28);
        let amp = 0.15 + rng.random::<f64>() * 0.2;
        for row in 0..height {
            let y = row as f64 / height as f64;
            for col in 0..width {
                let x = col as f64 / width as f64;
                let wave = amp * ((fx * x * 6.28 + px).sin() + (fy * y * 6.28 + py).cos());
                field[(row * width + col) * 3 + ch] = 0.45 + tilt_x * x + tilt_y * y + wave;
            }
        }
    }

    // Colored rectangles and disks at mid brightness levels.
    let n_prims = rng.random_range(4..9);
    for _ in 0..n_prims {
        let color = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
        let level = 0.2 + rng.random::<f64>() * 0.6;
        let cy = rng.random_range(0..height);
        let cx = rng.random_range(0..width);
        if rng.random::<f64>() < 0.5 {
            let hh = rng.random_range(1..=(height / 4).max(1));
            let hw = rng.random_range(1..=(width / 4).max(1));
            for row in cy.saturating_sub(hh)..(cy + hh).min(height) {
                for col in cx.saturating_sub(hw)..(cx + hw).min(width) {
                    for ch in 0..3 {
                        field[(row * width + col) * 3 + ch] = level * (0.3 + color[ch]);
                    }
                }
            }
        } else {
            let r = rng.random_range(2..=(width.min(height) / 4).max(2)) as f64;
            for row in 0..height {
                for col in 0..width {
                    let d2 = (row as f64 - cy as f64).powi(2) + (col as f64 - cx as f64).powi(2);
                    if d2 <= r * r {
                        for ch in 0..3 {
                            field[(row * width + col) * 3 + ch] = level * (0.3 + color[ch]);
                        }
                    }
                }
            }
        }
    }

    // Small bright highlights pinned at the top of the field range.
    let n_high = rng.random_range(2..6);
    for _ in 0..n_high {
        let cy = rng.random_range(0..height);
        let cx = rng.random_range(0..width);
        let r = rng.random_range(1..=4) as f64;
        for row in cy.saturating_sub(r as usize + 1)..(cy + r as usize + 1).min(height) {
            for col in cx.saturating_sub(r as usize + 1)..(cx + r as usize + 1).min(width) {
                let d2 = (row as f64 - cy as f64).powi(2) + (col as f64 - cx as f64).powi(2);
                if d2 <= r * r {
                    for ch in 0..3 {
                        field[(row * width + col) * 3 + ch] = 2.0 + rng.random::<f64>() * 0.5;
                    }
                }
            }
        }
    }

    // Min-max normalize the field to [0, 1] and map exponentially so the
    // measured ratio exceeds 2^stops with a small margin.
    let (lo, hi) = field.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
        (l.min(v), h.max(v))
    });
    let span = (hi - lo).max(1e-12);
    let ratio = 2f64.powf(stops) * 1.1;
    let e_min = 1.0 / ratio;
    for v in &mut field {
        let t = (*v - lo) / span;
        *v = e_min * ratio.powf(t);
    }
    Ok(SceneRadiance { data: field, width, height })
}
