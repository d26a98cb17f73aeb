//! Display export: gray-world white balance, the global L / (1 + L)
//! operator on luminance, then 1/2.2 gamma and 8-bit quantization.

use super::{RadianceDomain, RadianceImage};
use crate::dataio::IntImage;
use crate::error::{Error, Result};

const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

/// Tone-map a 3-channel linear radiance image to an 8-bit RGB image.
/// An all-zero image maps to black.
pub fn tonemap_display(hdr: &RadianceImage) -> Result<IntImage> {
    if hdr.channels() != 3 {
        return Err(Error::InvalidArgument(format!(
            "tonemap needs a 3-channel image, got {}",
            hdr.channels()
        )));
    }
    if hdr.domain() != RadianceDomain::Linear {
        return Err(Error::DomainMismatch { expected: "linear", got: hdr.domain().name() });
    }
    let (w, h) = (hdr.width(), hdr.height());
    let npix = (w * h) as f64;

    // gray-world white balance: equalize channel means to the global mean
    let mut means = [0.0f64; 3];
    for row in 0..h {
        for col in 0..w {
            for (ch, m) in means.iter_mut().enumerate() {
                *m += hdr.at(row, col, ch);
            }
        }
    }
    for m in &mut means {
        *m /= npix;
    }
    let global = (means[0] + means[1] + means[2]) / 3.0;
    let gains = means.map(|m| if m > 0.0 { global / m } else { 1.0 });

    let mut out = vec![0u16; w * h * 3];
    for row in 0..h {
        for col in 0..w {
            let rgb = [
                hdr.at(row, col, 0) * gains[0],
                hdr.at(row, col, 1) * gains[1],
                hdr.at(row, col, 2) * gains[2],
            ];
            let lum = LUMA[0] * rgb[0] + LUMA[1] * rgb[1] + LUMA[2] * rgb[2];
            let ratio = if lum > 0.0 { (lum / (1.0 + lum)) / lum } else { 0.0 };
            for ch in 0..3 {
                let v = (rgb[ch] * ratio).clamp(0.0, 1.0).powf(1.0 / 2.2);
                out[(row * w + col) * 3 + ch] = (v * 255.0).round() as u16;
            }
        }
    }
    IntImage::new(out, w, h, 3, 8)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image(data: Vec<f64>, w: usize, h: usize) -> RadianceImage {
        RadianceImage::new(data, w, h, 3, RadianceDomain::Linear, 0.01, 0.16).unwrap()
    }

    #[test]
    fn neutral_gray_white_balance_is_identity() {
        // constant gray: channel means are already equal, so the gains are 1
        // and luminance 1 maps to display 0.5 before gamma
        let img = image(vec![1.0; 2 * 2 * 3], 2, 2);
        let png = tonemap_display(&img).unwrap();
        let expected = (0.5f64.powf(1.0 / 2.2) * 255.0).round() as u16;
        assert!(png.data().iter().all(|&v| v == expected));
    }

    #[test]
    fn all_zero_maps_to_black() {
        let img = image(vec![0.0; 4 * 4 * 3], 4, 4);
        let png = tonemap_display(&img).unwrap();
        assert!(png.data().iter().all(|&v| v == 0));
    }

    #[test]
    fn higher_luminance_never_darkens_at_equal_chromaticity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let base = [
                rng.random::<f64>() * 2.0 + 0.01,
                rng.random::<f64>() * 2.0 + 0.01,
                rng.random::<f64>() * 2.0 + 0.01,
            ];
            let t = 1.0 + rng.random::<f64>() * 4.0;
            let mut data = Vec::new();
            data.extend_from_slice(&base);
            data.extend(base.iter().map(|v| v * t));
            // 1x2 image breaks the height rules nowhere: radiance images have
            // no row-period invariants
            let img = image(data, 2, 1);
            let png = tonemap_display(&img).unwrap();
            let lum = |x: usize| {
                LUMA[0] * png.data()[x * 3] as f64
                    + LUMA[1] * png.data()[x * 3 + 1] as f64
                    + LUMA[2] * png.data()[x * 3 + 2] as f64
            };
            assert!(lum(1) >= lum(0) - 1e-9, "brighter pixel got darker");
        }
    }
}
