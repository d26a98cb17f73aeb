//! Structural similarity over a single plane with the standard 11x11
//! Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03, averaged over all
//! positions where the window fits.

use crate::error::{Error, Result};

const WINDOW: usize = 11;
const SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

fn gaussian_window() -> [f64; WINDOW * WINDOW] {
    let mut w = [0.0; WINDOW * WINDOW];
    let c = (WINDOW / 2) as f64;
    let mut sum = 0.0;
    for y in 0..WINDOW {
        for x in 0..WINDOW {
            let d2 = (y as f64 - c).powi(2) + (x as f64 - c).powi(2);
            let v = (-d2 / (2.0 * SIGMA * SIGMA)).exp();
            w[y * WINDOW + x] = v;
            sum += v;
        }
    }
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// Mean SSIM of two planes of extent `width` x `height` with dynamic range
/// `l`. Planes must be at least the window size in both extents.
pub fn ssim_plane(a: &[f64], b: &[f64], width: usize, height: usize, l: f64) -> Result<f64> {
    if a.len() != width * height || b.len() != width * height {
        return Err(Error::ShapeMismatch {
            op: "ssim",
            detail: format!("plane length vs {width}x{height}"),
        });
    }
    if width < WINDOW || height < WINDOW {
        return Err(Error::InvalidArgument(format!(
            "ssim needs at least {WINDOW}x{WINDOW} pixels, got {height}x{width}"
        )));
    }
    let win = gaussian_window();
    let c1 = (K1 * l) * (K1 * l);
    let c2 = (K2 * l) * (K2 * l);
    let mut total = 0.0;
    let mut count = 0usize;
    for y0 in 0..=height - WINDOW {
        for x0 in 0..=width - WINDOW {
            let mut mu_a = 0.0;
            let mut mu_b = 0.0;
            let mut aa = 0.0;
            let mut bb = 0.0;
            let mut ab = 0.0;
            for wy in 0..WINDOW {
                let row = (y0 + wy) * width + x0;
                for wx in 0..WINDOW {
                    let wv = win[wy * WINDOW + wx];
                    let va = a[row + wx];
                    let vb = b[row + wx];
                    mu_a += wv * va;
                    mu_b += wv * vb;
                    aa += wv * va * va;
                    bb += wv * vb * vb;
                    ab += wv * va * vb;
                }
            }
            let var_a = aa - mu_a * mu_a;
            let var_b = bb - mu_b * mu_b;
            let cov = ab - mu_a * mu_b;
            total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2))
                / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
            count += 1;
        }
    }
    Ok(total / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn ssim_of_a_plane_with_itself_is_exactly_one() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let plane: Vec<f64> = (0..16 * 16).map(|_| rng.random::<f64>()).collect();
        assert_eq!(ssim_plane(&plane, &plane, 16, 16, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn ssim_stays_in_range_and_degrades_with_noise() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(22);
        let a: Vec<f64> = (0..20 * 20).map(|_| rng.random::<f64>()).collect();
        let slight: Vec<f64> = a.iter().map(|v| v + rng.random::<f64>() * 0.01).collect();
        let heavy: Vec<f64> = a.iter().map(|v| v + rng.random::<f64>() * 0.5).collect();
        let s1 = ssim_plane(&a, &slight, 20, 20, 1.0).unwrap();
        let s2 = ssim_plane(&a, &heavy, 20, 20, 1.0).unwrap();
        assert!((-1.0..=1.0).contains(&s1));
        assert!((-1.0..=1.0).contains(&s2));
        assert!(s1 > s2);
    }

    #[test]
    fn too_small_planes_are_rejected() {
        let p = vec![0.0; 8 * 8];
        assert!(ssim_plane(&p, &p, 8, 8, 1.0).is_err());
    }
}
