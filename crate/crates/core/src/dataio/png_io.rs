//! Integer image container and PNG read/write.
//!
//! 8-bit images store one byte per sample, everything above 8 bits goes to a
//! 16-bit PNG with the raw code values unscaled (the true bit depth travels
//! in the metadata sidecar).

use crate::error::{Error, Result};
use image::{DynamicImage, ImageBuffer, Luma, Rgb};
use std::path::Path;

/// Grayscale or RGB integer image, channel-interleaved row-major, with a
/// nominal bit depth in 8..=16.
#[derive(Debug, Clone, PartialEq)]
pub struct IntImage {
    data: Vec<u16>,
    width: usize,
    height: usize,
    channels: usize,
    bits: u32,
}

impl IntImage {
    pub fn new(data: Vec<u16>, width: usize, height: usize, channels: usize, bits: u32) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidArgument(format!(
                "images have 1 or 3 channels, got {channels}"
            )));
        }
        if !(8..=16).contains(&bits) {
            return Err(Error::InvalidArgument(format!("bit depth {bits} outside 8..=16")));
        }
        if data.len() != width * height * channels {
            return Err(Error::ShapeMismatch {
                op: "IntImage::new",
                detail: format!(
                    "{}x{}x{} needs {} samples, got {}",
                    height,
                    width,
                    channels,
                    width * height * channels,
                    data.len()
                ),
            });
        }
        let max = ((1u32 << bits) - 1) as u16;
        if data.iter().any(|&v| v > max) {
            return Err(Error::InvalidArgument(format!("sample exceeds {bits}-bit range")));
        }
        Ok(IntImage { data, width, height, channels, bits })
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
    pub fn bits(&self) -> u32 {
        self.bits
    }
    pub fn data(&self) -> &[u16] {
        &self.data
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize, ch: usize) -> u16 {
        self.data[(row * self.width + col) * self.channels + ch]
    }
}

pub fn write_png(path: &Path, image: &IntImage) -> Result<()> {
    let (w, h) = (image.width as u32, image.height as u32);
    let dynimg = match (image.channels, image.bits <= 8) {
        (1, true) => DynamicImage::ImageLuma8(
            ImageBuffer::<Luma<u8>, _>::from_raw(w, h, image.data.iter().map(|&v| v as u8).collect())
                .expect("sized buffer"),
        ),
        (1, false) => DynamicImage::ImageLuma16(
            ImageBuffer::<Luma<u16>, _>::from_raw(w, h, image.data.clone()).expect("sized buffer"),
        ),
        (3, true) => DynamicImage::ImageRgb8(
            ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, image.data.iter().map(|&v| v as u8).collect())
                .expect("sized buffer"),
        ),
        (3, false) => DynamicImage::ImageRgb16(
            ImageBuffer::<Rgb<u16>, _>::from_raw(w, h, image.data.clone()).expect("sized buffer"),
        ),
        _ => unreachable!("validated in IntImage::new"),
    };
    dynimg.save(path).map_err(|e| Error::FileFormat {
        format: "PNG",
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}

/// Read a PNG. `bits` is the nominal depth recorded in metadata; the stored
/// PNG depth must be able to carry it (8-bit PNG for bits = 8, 16-bit
/// otherwise).
pub fn read_png(path: &Path, bits: u32) -> Result<IntImage> {
    let img = image::open(path).map_err(|e| Error::FileFormat {
        format: "PNG",
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let (data, channels): (Vec<u16>, usize) = match img {
        DynamicImage::ImageLuma8(b) => (b.into_raw().into_iter().map(u16::from).collect(), 1),
        DynamicImage::ImageLuma16(b) => (b.into_raw(), 1),
        DynamicImage::ImageRgb8(b) => (b.into_raw().into_iter().map(u16::from).collect(), 3),
        DynamicImage::ImageRgb16(b) => (b.into_raw(), 3),
        other => {
            return Err(Error::FileFormat {
                format: "PNG",
                path: path.to_path_buf(),
                detail: format!("unsupported color type {:?}", other.color()),
            })
        }
    };
    IntImage::new(data, w, h, channels, bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn sixteen_bit_roundtrip_is_lossless() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let data: Vec<u16> = (0..4 * 6).map(|_| rng.random_range(0..1u16 << 12)).collect();
        let img = IntImage::new(data, 6, 4, 1, 12).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.png");
        write_png(&path, &img).unwrap();
        let back = read_png(&path, 12).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn eight_bit_rgb_roundtrip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let data: Vec<u16> = (0..2 * 2 * 3).map(|_| rng.random_range(0..256u16)).collect();
        let img = IntImage::new(data, 2, 2, 3, 8).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rgb.png");
        write_png(&path, &img).unwrap();
        assert_eq!(read_png(&path, 8).unwrap(), img);
    }
}
